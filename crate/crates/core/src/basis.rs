//! Fixed-excitation-number basis of an N-site spin-1/2 chain.
//!
//! A basis state is an N-bit occupation pattern: bit `i` set means site `i`
//! carries an excitation (spin up). Site 0 is the leftmost site of the chain.
//! States are kept in ascending integer order, which for a fixed popcount is
//! the colexicographic order, so ranking reduces to the combinatorial number
//! system.

use crate::error::{Error, Result};

/// Occupation pattern, one bit per site.
pub type Pattern = u64;

/// Largest sector dimension [`SectorBasis::new`] will enumerate.
pub const DEFAULT_BASIS_LIMIT: usize = 1 << 26;

const MAX_SITES: usize = 64;

/// `binomial(n, k)` in 128-bit arithmetic; exact for every `n <= 64`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    n_sites: usize,
    n_exc: usize,
    states: Vec<Pattern>,
    // binom[n][k] for n <= n_sites, k <= n_exc + 1
    binom: Vec<Vec<usize>>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_exc: usize) -> Result<Self> {
        Self::with_limit(n_sites, n_exc, DEFAULT_BASIS_LIMIT)
    }

    pub fn with_limit(n_sites: usize, n_exc: usize, limit: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::param(
                "n_sites",
                format!("must lie in 1..={MAX_SITES}, got {n_sites}"),
            ));
        }
        if n_exc > n_sites {
            return Err(Error::param(
                "n_exc",
                format!("must not exceed n_sites = {n_sites}, got {n_exc}"),
            ));
        }
        let dim = binomial(n_sites, n_exc);
        if dim > limit as u128 {
            return Err(Error::Capacity { dim, cap: limit });
        }

        let mut states = Vec::with_capacity(dim as usize);
        let full: u128 = if n_sites == 64 {
            u64::MAX as u128
        } else {
            (1u128 << n_sites) - 1
        };
        let mut v: u128 = if n_exc == 0 { 0 } else { (1u128 << n_exc) - 1 };
        loop {
            states.push(v as Pattern);
            if v == 0 {
                break;
            }
            // Gosper's hack: next larger integer with the same popcount.
            let c = v & v.wrapping_neg();
            let r = v + c;
            let next = (((r ^ v) >> 2) / c) | r;
            if next > full {
                break;
            }
            v = next;
        }
        debug_assert_eq!(states.len() as u128, dim);

        let binom = (0..=n_sites)
            .map(|n| (0..=n_exc + 1).map(|k| binomial(n, k) as usize).collect())
            .collect();

        Ok(Self {
            n_sites,
            n_exc,
            states,
            binom,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_exc(&self) -> usize {
        self.n_exc
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Pattern] {
        &self.states
    }

    pub fn unrank(&self, index: usize) -> Pattern {
        self.states[index]
    }

    /// Ordinal of `pattern` in the ascending enumeration.
    pub fn rank(&self, pattern: Pattern) -> Result<usize> {
        if self.n_sites < 64 && pattern >> self.n_sites != 0 {
            return Err(Error::param(
                "pattern",
                format!("{pattern:#b} has bits beyond {} sites", self.n_sites),
            ));
        }
        if pattern.count_ones() as usize != self.n_exc {
            return Err(Error::param(
                "pattern",
                format!(
                    "{pattern:#b} has {} excitations, sector holds {}",
                    pattern.count_ones(),
                    self.n_exc
                ),
            ));
        }
        Ok(self.rank_unchecked(pattern))
    }

    pub(crate) fn rank_unchecked(&self, pattern: Pattern) -> usize {
        let mut bits = pattern;
        let mut k = 1;
        let mut idx = 0;
        while bits != 0 {
            let pos = bits.trailing_zeros() as usize;
            idx += self.binom[pos][k];
            k += 1;
            bits &= bits - 1;
        }
        idx
    }

    pub fn is_occupied(&self, index: usize, site: usize) -> bool {
        self.states[index] >> site & 1 == 1
    }

    /// Split the chain into sites `[0, cut)` and `[cut, N)`.
    pub fn bipartition(&self, cut: usize) -> Result<Bipartition> {
        if cut == 0 || cut >= self.n_sites {
            return Err(Error::param(
                "cut",
                format!("must lie in 1..{}, got {cut}", self.n_sites),
            ));
        }
        let right_sites = self.n_sites - cut;
        let q = self.n_exc;
        let k_lo = q.saturating_sub(right_sites);
        let k_hi = q.min(cut);

        let mut blocks = Vec::with_capacity(k_hi + 1 - k_lo);
        for k in k_lo..=k_hi {
            let left = SectorBasis::new(cut, k)?;
            let right = SectorBasis::new(right_sites, q - k)?;
            let mut index = Vec::with_capacity(left.dim() * right.dim());
            for &l in left.states() {
                for &r in right.states() {
                    index.push(self.rank_unchecked(l | r << cut));
                }
            }
            blocks.push(BipartitionBlock {
                left_exc: k,
                left_patterns: left.states,
                right_patterns: right.states,
                index,
            });
        }
        Ok(Bipartition { cut, blocks })
    }
}

/// Fixed left-excitation-number block of a bipartition. Row `a` is a left
/// sub-pattern, column `b` a right sub-pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitionBlock {
    pub left_exc: usize,
    pub left_patterns: Vec<Pattern>,
    pub right_patterns: Vec<Pattern>,
    /// Global basis ordinal of (a, b), row-major.
    pub index: Vec<usize>,
}

impl BipartitionBlock {
    pub fn n_left(&self) -> usize {
        self.left_patterns.len()
    }

    pub fn n_right(&self) -> usize {
        self.right_patterns.len()
    }

    pub fn global(&self, a: usize, b: usize) -> usize {
        self.index[a * self.n_right() + b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bipartition {
    pub cut: usize,
    pub blocks: Vec<BipartitionBlock>,
}

impl Bipartition {
    pub fn covered_states(&self) -> usize {
        self.blocks.iter().map(|b| b.index.len()).sum()
    }
}

/// Render a pattern MSB-first over `n_sites` characters (site 0 rightmost).
pub fn pattern_string(pattern: Pattern, n_sites: usize) -> String {
    (0..n_sites)
        .rev()
        .map(|i| if pattern >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}
