//! Localization figures of merit computed from ensemble data.
//!
//! All population-based quantities act on the diagonal of the
//! trajectory-averaged density matrix in the sector basis. Entropies are in
//! nats.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::basis::{Bipartition, SectorBasis};
use crate::engine::{EnsembleOutput, GroupSeries};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Schmidt weights below this are treated as exact zeros.
pub const EIGEN_FLOOR: f64 = 1e-14;

const NORM_TOL: f64 = 1e-8;

/// Inverse participation ratio `Σ p_i²` over site populations; single excitation only.
pub fn ipr(populations: &[f64], basis: &SectorBasis) -> Result<f64> {
    if basis.n_exc() != 1 {
        return Err(Error::Contract(format!(
            "IPR is defined for one excitation, sector has {}; use IER",
            basis.n_exc()
        )));
    }
    Ok(ier(populations))
}

/// Inverse ergodicity ratio `Σ_j p_j²` over sector basis populations.
pub fn ier(populations: &[f64]) -> f64 {
    populations.iter().map(|p| p * p).sum()
}

/// Excitation density per site, `n_i = (1 + <σz_i>) / 2`.
pub fn site_density(populations: &[f64], basis: &SectorBasis) -> Vec<f64> {
    let mut n = vec![0.0; basis.n_sites()];
    for (&p, &s) in populations.iter().zip(basis.states()) {
        let mut bits = s;
        while bits != 0 {
            n[bits.trailing_zeros() as usize] += p;
            bits &= bits - 1;
        }
    }
    n
}

/// `n_c - q/N`.
pub fn imbalance(density: &[f64], center: usize, n_exc: usize) -> f64 {
    density[center] - n_exc as f64 / density.len() as f64
}

/// Von Neumann entropy `-Σ λ ln λ` of a spectrum, flooring tiny weights.
pub fn von_neumann(eigenvalues: impl IntoIterator<Item = f64>) -> f64 {
    eigenvalues
        .into_iter()
        .filter(|&l| l > EIGEN_FLOOR)
        .map(|l| -l * l.ln())
        .sum()
}

fn hermitian_eigenvalues(m: DMatrix<C64>) -> Vec<f64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        _ => m.symmetric_eigenvalues().iter().copied().collect(),
    }
}

/// Squared Schmidt coefficients of a pure sector state across `bip`.
///
/// `re` and `im` are the real and imaginary amplitude parts in the sector
/// basis. Each block's spectrum comes from the smaller of its two Gram
/// matrices, which share the same non-zero eigenvalues.
pub fn schmidt_weights(re: &[f64], im: &[f64], bip: &Bipartition) -> Vec<f64> {
    let mut out = Vec::new();
    for blk in &bip.blocks {
        let (nl, nr) = (blk.n_left(), blk.n_right());
        let amp = |a: usize, b: usize| {
            let g = blk.global(a, b);
            C64::new(re[g], im[g])
        };
        if nl == 1 || nr == 1 {
            out.push(blk.index.iter().map(|&g| re[g] * re[g] + im[g] * im[g]).sum());
            continue;
        }
        let gram = if nl <= nr {
            DMatrix::from_fn(nl, nl, |a, c| (0..nr).map(|b| amp(a, b) * amp(c, b).conj()).sum())
        } else {
            DMatrix::from_fn(nr, nr, |b, d| (0..nl).map(|a| amp(a, b).conj() * amp(a, d)).sum())
        };
        out.extend(hermitian_eigenvalues(gram));
    }
    out
}

/// Entanglement entropy of a normalized pure state across `bip`.
pub fn entanglement_entropy(psi: &[C64], bip: &Bipartition) -> Result<f64> {
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Contract(format!("state norm² is {norm}, expected 1")));
    }
    let re: Vec<f64> = psi.iter().map(|a| a.re).collect();
    let im: Vec<f64> = psi.iter().map(|a| a.im).collect();
    Ok(von_neumann(schmidt_weights(&re, &im, bip)))
}

/// Length of the flattened block-diagonal `ρ_A` produced by [`reduced_blocks_add`].
pub fn reduced_len(bip: &Bipartition) -> usize {
    bip.blocks.iter().map(|b| b.n_left() * b.n_left()).sum()
}

/// Accumulate `weight · Tr_B |ψ><ψ|` into flattened left blocks.
pub fn reduced_blocks_add(re: &[f64], im: &[f64], bip: &Bipartition, weight: f64, acc: &mut [C64]) {
    let mut off = 0;
    for blk in &bip.blocks {
        let (nl, nr) = (blk.n_left(), blk.n_right());
        for a in 0..nl {
            for c in 0..nl {
                let mut s = C64::new(0.0, 0.0);
                for b in 0..nr {
                    let (g1, g2) = (blk.global(a, b), blk.global(c, b));
                    s += C64::new(re[g1], im[g1]) * C64::new(re[g2], -im[g2]);
                }
                acc[off + a * nl + c] += s * weight;
            }
        }
        off += nl * nl;
    }
}

/// Entropy of a block-diagonal `ρ_A` laid out as by [`reduced_blocks_add`].
pub fn reduced_entropy(blocks: &[C64], bip: &Bipartition) -> f64 {
    let mut eigs = Vec::new();
    let mut off = 0;
    for blk in &bip.blocks {
        let nl = blk.n_left();
        let m = DMatrix::from_fn(nl, nl, |a, c| blocks[off + a * nl + c]);
        eigs.extend(hermitian_eigenvalues(m));
        off += nl * nl;
    }
    von_neumann(eigs)
}

/// Entanglement entropy of a sector density matrix (unit trace).
pub fn entanglement_entropy_mixed(rho: &DMatrix<C64>, bip: &Bipartition) -> Result<f64> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
        return Err(Error::Contract(format!("density matrix trace is {tr}, expected 1")));
    }
    let mut eigs = Vec::new();
    for blk in &bip.blocks {
        let (nl, nr) = (blk.n_left(), blk.n_right());
        let m = DMatrix::from_fn(nl, nl, |a, c| {
            (0..nr).map(|b| rho[(blk.global(a, b), blk.global(c, b))]).sum()
        });
        eigs.extend(hermitian_eigenvalues(m));
    }
    Ok(von_neumann(eigs))
}

/// Standard error of the mean over trajectory groups, per sample.
fn group_stderr(series: &[&[f64]]) -> Option<Vec<f64>> {
    if series.len() < 2 {
        return None;
    }
    let g = series.len() as f64;
    Some(
        (0..series[0].len())
            .map(|k| {
                let mean = series.iter().map(|s| s[k]).sum::<f64>() / g;
                let var = series.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (g - 1.0);
                (var / g).sqrt()
            })
            .collect(),
    )
}

fn collect_groups<'a>(groups: &'a [GroupSeries], pick: impl Fn(&'a GroupSeries) -> Option<&'a [f64]>) -> Option<Vec<&'a [f64]>> {
    groups.iter().map(pick).collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SeriesErrors {
    pub ipr: Option<Vec<f64>>,
    pub ier: Option<Vec<f64>>,
    pub imb: Option<Vec<f64>>,
    pub svn: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub n_sites: usize,
    pub n_exc: usize,
    pub dim: usize,
    /// Averaged populations, one row per sample.
    pub populations: Vec<Vec<f64>>,
    pub site_density: Vec<Vec<f64>>,
    pub ipr: Option<Vec<f64>>,
    pub ier: Vec<f64>,
    pub imb: Option<Vec<f64>>,
    pub svn: Option<Vec<f64>>,
    /// Standard errors from the spread between trajectory groups.
    pub stderr: SeriesErrors,
    pub metadata: Vec<(String, String)>,
}

impl ObservableSeries {
    /// Reduce ensemble output; `center` enables the imbalance column.
    pub fn from_ensemble(out: &EnsembleOutput, basis: &SectorBasis, center: Option<usize>) -> Result<Self> {
        if let Some(c) = center {
            if c >= basis.n_sites() {
                return Err(Error::param("center", format!("site {c} outside the chain")));
            }
        }
        let populations: Vec<Vec<f64>> = (0..out.times.len()).map(|k| out.population_row(k).to_vec()).collect();
        let site_density: Vec<Vec<f64>> = populations.iter().map(|p| site_density(p, basis)).collect();
        let ier_series: Vec<f64> = populations.iter().map(|p| ier(p)).collect();
        let ipr_series = (basis.n_exc() == 1).then(|| ier_series.clone());
        let imb = center.map(|c| {
            site_density
                .iter()
                .map(|n| imbalance(n, c, basis.n_exc()))
                .collect::<Vec<_>>()
        });

        let group_imb: Option<Vec<Vec<f64>>> = center.map(|c| {
            out.groups
                .iter()
                .map(|g| {
                    g.density
                        .chunks(basis.n_sites())
                        .map(|n| imbalance(n, c, basis.n_exc()))
                        .collect()
                })
                .collect()
        });
        let stderr = SeriesErrors {
            ipr: ipr_series
                .as_ref()
                .and_then(|_| collect_groups(&out.groups, |g| g.ipr.as_deref()))
                .and_then(|s| group_stderr(&s)),
            ier: collect_groups(&out.groups, |g| Some(g.ier.as_slice())).and_then(|s| group_stderr(&s)),
            imb: group_imb.and_then(|gs| group_stderr(&gs.iter().map(Vec::as_slice).collect::<Vec<_>>())),
            svn: collect_groups(&out.groups, |g| g.svn.as_deref()).and_then(|s| group_stderr(&s)),
        };

        Ok(Self {
            times: out.times.clone(),
            n_sites: basis.n_sites(),
            n_exc: basis.n_exc(),
            dim: basis.dim(),
            populations,
            site_density,
            ipr: ipr_series,
            ier: ier_series,
            imb,
            svn: out.svn.clone(),
            stderr,
            metadata: Vec::new(),
        })
    }

    /// IPR when defined, IER otherwise.
    pub fn localization(&self) -> &[f64] {
        self.ipr.as_deref().unwrap_or(&self.ier)
    }

    pub fn localization_stderr(&self) -> Option<&[f64]> {
        if self.ipr.is_some() {
            self.stderr.ipr.as_deref()
        } else {
            self.stderr.ier.as_deref()
        }
    }

    /// Index of the grid sample closest to `t`.
    pub fn sample_at(&self, t: f64) -> usize {
        let dt = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 1.0 };
        ((t / dt).round().max(0.0) as usize).min(self.times.len() - 1)
    }
}
