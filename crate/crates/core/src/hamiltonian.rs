//! Disordered XXZ Hamiltonian restricted to a magnetization sector.
//!
//! Pauli-operator convention with open boundaries:
//!
//! ```text
//! H = J Σ_{i<N-1} [σx_i σx_{i+1} + σy_i σy_{i+1} + Δ σz_i σz_{i+1}] + Σ_i h_i σz_i
//! ```
//!
//! so a hop between neighbouring sites has amplitude `2J` and the diagonal is
//! `JΔ Σ z_i z_{i+1} + Σ h_i z_i` with `z = +1` on occupied sites.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::rng::{disorder_stream, unit_f64};

/// Dense matrices above this dimension are refused unless the cap is raised.
pub const DEFAULT_DIM_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// Exchange rate J; every energy is quoted in units of it.
    pub coupling: f64,
    pub delta: f64,
    /// Half-width of the uniform on-site field distribution.
    pub h: f64,
    pub disorder_seed: u64,
    pub fields: Vec<f64>,
}

impl ChainSpec {
    /// Chain with on-site fields drawn from `disorder_seed`.
    pub fn new(n_sites: usize, coupling: f64, delta: f64, h: f64, disorder_seed: u64) -> Result<Self> {
        let fields = draw_disorder(n_sites, h, disorder_seed)?;
        Ok(Self {
            n_sites,
            coupling,
            delta,
            h,
            disorder_seed,
            fields,
        })
    }

    /// Chain with explicitly supplied fields; `h` is taken as their largest magnitude.
    pub fn with_fields(coupling: f64, delta: f64, fields: Vec<f64>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::param("fields", "at least one site is required"));
        }
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::param("fields", "fields must be finite"));
        }
        let h = fields.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        Ok(Self {
            n_sites: fields.len(),
            coupling,
            delta,
            h,
            disorder_seed: 0,
            fields,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.fields.len() != self.n_sites {
            return Err(Error::param(
                "fields",
                format!("{} values for {} sites", self.fields.len(), self.n_sites),
            ));
        }
        if !self.coupling.is_finite() || !self.delta.is_finite() {
            return Err(Error::param("coupling", "J and delta must be finite"));
        }
        if self.fields.iter().any(|f| f.abs() > self.h) {
            return Err(Error::param("fields", format!("some |h_i| exceed h = {}", self.h)));
        }
        Ok(())
    }
}

/// `n_sites` i.i.d. fields uniform on `[-h, h]`, a pure function of the seed.
pub fn draw_disorder(n_sites: usize, h: f64, disorder_seed: u64) -> Result<Vec<f64>> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::param("h", format!("must be finite and non-negative, got {h}")));
    }
    let mut rng = disorder_stream(disorder_seed);
    Ok((0..n_sites).map(|_| h * (2.0 * unit_f64(&mut rng) - 1.0)).collect())
}

/// Eigen-decomposition `H = V diag(λ) Vᵀ`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    basis: Arc<SectorBasis>,
    matrix: DMatrix<f64>,
    spectrum: Option<Spectrum>,
}

impl SectorHamiltonian {
    pub fn build(basis: Arc<SectorBasis>, spec: &ChainSpec) -> Result<Self> {
        Self::build_with_cap(basis, spec, DEFAULT_DIM_CAP)
    }

    pub fn build_with_cap(basis: Arc<SectorBasis>, spec: &ChainSpec, cap: usize) -> Result<Self> {
        if basis.n_sites() != spec.n_sites {
            return Err(Error::param(
                "n_sites",
                format!("basis has {} sites, chain has {}", basis.n_sites(), spec.n_sites),
            ));
        }
        spec.validate()?;
        let dim = basis.dim();
        if dim > cap {
            return Err(Error::Capacity { dim: dim as u128, cap });
        }

        let n = spec.n_sites;
        let hop = 2.0 * spec.coupling;
        let ising = spec.coupling * spec.delta;
        let mut matrix = DMatrix::<f64>::zeros(dim, dim);
        for (j, &s) in basis.states().iter().enumerate() {
            let z = |i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
            let mut diag = 0.0;
            for i in 0..n {
                diag += spec.fields[i] * z(i);
            }
            for i in 0..n.saturating_sub(1) {
                diag += ising * z(i) * z(i + 1);
                // hop only when exactly one of the two neighbours is occupied
                if (s >> i ^ s >> (i + 1)) & 1 == 1 {
                    let moved = s ^ (0b11 << i);
                    matrix[(basis.rank_unchecked(moved), j)] = hop;
                }
            }
            matrix[(j, j)] = diag;
        }

        Ok(Self {
            basis,
            matrix,
            spectrum: None,
        })
    }

    /// Wrap an arbitrary real symmetric matrix (used by tests and tools).
    pub fn from_matrix(basis: Arc<SectorBasis>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::param(
                "matrix",
                format!("{}x{} for a basis of dimension {}", matrix.nrows(), matrix.ncols(), basis.dim()),
            ));
        }
        if matrix != matrix.transpose() {
            return Err(Error::param("matrix", "not symmetric"));
        }
        Ok(Self {
            basis,
            matrix,
            spectrum: None,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn diagonalize(&mut self) -> Result<&Spectrum> {
        if self.spectrum.is_none() {
            let (rows, cols) = self.matrix.shape();
            let eig = self
                .matrix
                .clone()
                .try_symmetric_eigen(f64::EPSILON, 1_000_000)
                .ok_or(Error::Diagonalization { rows, cols })?;

            let mut order: Vec<usize> = (0..rows).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let values = DVector::from_iterator(rows, order.iter().map(|&k| eig.eigenvalues[k]));
            let vectors = DMatrix::from_fn(rows, rows, |r, c| eig.eigenvectors[(r, order[c])]);
            self.spectrum = Some(Spectrum { values, vectors });
        }
        Ok(self.spectrum.as_ref().unwrap())
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        self.spectrum.as_ref()
    }

    /// Builder-style variant of [`Self::diagonalize`].
    pub fn diagonalized(mut self) -> Result<Self> {
        self.diagonalize()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, q: usize) -> Arc<SectorBasis> {
        Arc::new(SectorBasis::new(n, q).unwrap())
    }

    /// Dense 2^N construction from Kronecker products of Pauli matrices.
    fn full_hamiltonian(spec: &ChainSpec) -> DMatrix<f64> {
        let n = spec.n_sites;
        let d = 1usize << n;
        let mut h = DMatrix::<f64>::zeros(d, d);
        // σx σx + σy σy as real matrices: σy⊗σy = -(iσy)⊗(iσy) with iσy real
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let isy = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        // basis |0> = empty (z = -1), |1> = occupied (z = +1)
        let sz = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let id = DMatrix::<f64>::identity(2, 2);
        // bit i of the 2^N index is site i, so site i is the i-th factor from the right
        let op = |ops: &[(usize, &DMatrix<f64>)]| {
            let mut acc = DMatrix::<f64>::identity(1, 1);
            for site in (0..n).rev() {
                let m = ops.iter().find(|(s, _)| *s == site).map(|(_, m)| *m).unwrap_or(&id);
                acc = acc.kronecker(m);
            }
            acc
        };
        for i in 0..n - 1 {
            h += op(&[(i, &sx), (i + 1, &sx)]) * spec.coupling;
            h -= op(&[(i, &isy), (i + 1, &isy)]) * spec.coupling;
            h += op(&[(i, &sz), (i + 1, &sz)]) * (spec.coupling * spec.delta);
        }
        for i in 0..n {
            h += op(&[(i, &sz)]) * spec.fields[i];
        }
        h
    }

    #[test]
    fn two_site_hopping() {
        let spec = ChainSpec::with_fields(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        let h = SectorHamiltonian::build(basis(2, 1), &spec).unwrap();
        assert_eq!(h.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
    }

    #[test]
    fn two_site_ising() {
        let spec = ChainSpec::with_fields(1.0, 2.5, vec![0.0, 0.0]).unwrap();
        let h = SectorHamiltonian::build(basis(2, 1), &spec).unwrap();
        assert_eq!(h.matrix(), &DMatrix::from_row_slice(2, 2, &[-2.5, 2.0, 2.0, -2.5]));
    }

    #[test]
    fn three_site_fields_match_kronecker_oracle() {
        let spec = ChainSpec::with_fields(1.0, 0.0, vec![1.0, 0.0, -1.0]).unwrap();
        let b = basis(3, 1);
        let h = SectorHamiltonian::build(b.clone(), &spec).unwrap();
        let full = full_hamiltonian(&spec);
        for (a, &sa) in b.states().iter().enumerate() {
            for (c, &sc) in b.states().iter().enumerate() {
                assert_eq!(h.matrix()[(a, c)], full[(sa as usize, sc as usize)]);
            }
        }
        // excitation on site 0: +h0 - h1 - h2 = 1 - 0 + 1
        assert_eq!(h.matrix()[(0, 0)], 2.0);
        // excitation on site 2: -1 - 0 - 1
        assert_eq!(h.matrix()[(2, 2)], -2.0);
    }

    #[test]
    fn brute_force_equivalence_all_sectors() {
        for n in 1..=6 {
            for seed in 0..3u64 {
                let delta = 0.7 * seed as f64 - 0.5;
                let spec = ChainSpec::new(n, 1.0, delta, 1.5 + seed as f64, seed).unwrap();
                let full = full_hamiltonian(&spec);
                // no coupling across sectors
                for a in 0..1usize << n {
                    for c in 0..1usize << n {
                        if a.count_ones() != c.count_ones() {
                            assert_eq!(full[(a, c)], 0.0);
                        }
                    }
                }
                for q in 0..=n {
                    let b = basis(n, q);
                    let h = SectorHamiltonian::build(b.clone(), &spec).unwrap();
                    for (a, &sa) in b.states().iter().enumerate() {
                        for (c, &sc) in b.states().iter().enumerate() {
                            let want = full[(sa as usize, sc as usize)];
                            assert!((h.matrix()[(a, c)] - want).abs() <= 1e-12 * (1.0 + want.abs()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hopping_elements_are_exactly_two_j() {
        let spec = ChainSpec::new(10, 1.0, 2.5, 10.0, 3).unwrap();
        let h = SectorHamiltonian::build(basis(10, 3), &spec).unwrap();
        let m = h.matrix();
        assert_eq!(m, &m.transpose());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if r != c {
                    assert!(m[(r, c)] == 0.0 || m[(r, c)] == 2.0);
                }
            }
        }
    }

    #[test]
    fn disorder_draws() {
        assert!(draw_disorder(7, 0.0, 9).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(draw_disorder(41, 10.0, 5).unwrap(), draw_disorder(41, 10.0, 5).unwrap());
        assert_ne!(draw_disorder(41, 10.0, 5).unwrap(), draw_disorder(41, 10.0, 6).unwrap());
        assert!(draw_disorder(41, 10.0, 5).unwrap().iter().all(|x| x.abs() <= 10.0));
        assert!(matches!(draw_disorder(3, -1.0, 0), Err(Error::Parameter { name: "h", .. })));

        let n = 100_000;
        let xs = draw_disorder(n, 1.0, 11).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (3.0 * n as f64).sqrt());
        assert!((var - 1.0 / 3.0).abs() < 0.05 / 3.0);
    }

    #[test]
    fn mismatched_sites_rejected() {
        let spec = ChainSpec::new(5, 1.0, 0.0, 1.0, 0).unwrap();
        assert!(matches!(
            SectorHamiltonian::build(basis(4, 1), &spec),
            Err(Error::Parameter { name: "n_sites", .. })
        ));
    }

    #[test]
    fn capacity_cap() {
        let spec = ChainSpec::new(12, 1.0, 0.0, 1.0, 0).unwrap();
        assert!(matches!(
            SectorHamiltonian::build_with_cap(basis(12, 6), &spec, 100),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn two_level_spectrum() {
        let spec = ChainSpec::with_fields(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        let mut h = SectorHamiltonian::build(basis(2, 1), &spec).unwrap();
        let s = h.diagonalize().unwrap();
        assert!((s.values[0] + 2.0).abs() < 1e-14);
        assert!((s.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn residuals_and_trace() {
        for &(n, q) in &[(8usize, 4usize), (20, 2), (41, 1)] {
            let spec = ChainSpec::new(n, 1.0, 2.5, 10.0, 42).unwrap();
            let mut h = SectorHamiltonian::build(basis(n, q), &spec).unwrap();
            let m = h.matrix().clone();
            let s = h.diagonalize().unwrap();
            let norm = m.norm();
            for k in 1..s.values.len() {
                assert!(s.values[k - 1] <= s.values[k]);
            }
            for k in 0..s.values.len() {
                let v = s.vectors.column(k);
                let r = &m * v - v * s.values[k];
                assert!(r.norm() <= 1e-10 * norm, "residual {}", r.norm());
            }
            let recon = &s.vectors * DMatrix::from_diagonal(&s.values) * s.vectors.transpose();
            assert!((recon - &m).norm() <= 1e-10 * norm);
            let tr = m.trace();
            assert!((tr - s.values.sum()).abs() <= 1e-9 * tr.abs().max(1.0));
        }
    }
}
