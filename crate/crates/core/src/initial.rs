//! Product initial states used by the experiments.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::{Pattern, SectorBasis};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// One excitation at 0-based site `ceil(N/2) - 1`.
    SingleCenter,
    /// Two excitations with two empty sites between them, centered.
    TwoSeparated,
    /// Two neighbouring excitations, centered.
    TwoAdjacent,
    /// The first `q` sites occupied.
    DomainWall,
    /// Explicit 0-based occupied sites.
    Sites(Vec<usize>),
}

impl InitialState {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "single_center" => Self::SingleCenter,
            "two_separated" => Self::TwoSeparated,
            "two_adjacent" => Self::TwoAdjacent,
            "domain_wall" => Self::DomainWall,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SingleCenter => "single_center",
            Self::TwoSeparated => "two_separated",
            Self::TwoAdjacent => "two_adjacent",
            Self::DomainWall => "domain_wall",
            Self::Sites(_) => "explicit_sites",
        }
    }

    /// 0-based occupied sites on a chain of `n_sites` with `n_exc` excitations.
    pub fn sites(&self, n_sites: usize, n_exc: usize) -> Result<Vec<usize>> {
        let need = |q: usize, min_sites: usize| -> Result<()> {
            if n_exc != q {
                return Err(Error::param(
                    "init.preset",
                    format!("{} places {q} excitation(s), sector has {n_exc}", self.name()),
                ));
            }
            if n_sites < min_sites {
                return Err(Error::param(
                    "init.preset",
                    format!("{} needs at least {min_sites} sites, chain has {n_sites}", self.name()),
                ));
            }
            Ok(())
        };
        let sites = match self {
            Self::SingleCenter => {
                need(1, 1)?;
                vec![n_sites.div_ceil(2) - 1]
            }
            Self::TwoSeparated => {
                need(2, 4)?;
                let c = (n_sites - 2) / 2 - 1;
                vec![c, c + 3]
            }
            Self::TwoAdjacent => {
                need(2, 2)?;
                vec![n_sites / 2 - 1, n_sites / 2]
            }
            Self::DomainWall => (0..n_exc).collect(),
            Self::Sites(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != n_exc {
                    return Err(Error::param(
                        "init.sites",
                        format!("{} distinct sites for a sector with {n_exc} excitations", s.len()),
                    ));
                }
                if let Some(&bad) = s.iter().find(|&&i| i >= n_sites) {
                    return Err(Error::param("init.sites", format!("site {bad} outside the chain")));
                }
                s
            }
        };
        Ok(sites)
    }

    pub fn pattern(&self, basis: &SectorBasis) -> Result<Pattern> {
        Ok(self
            .sites(basis.n_sites(), basis.n_exc())?
            .into_iter()
            .fold(0, |p, i| p | 1 << i))
    }

    /// Unit-norm basis-state amplitudes.
    pub fn amplitudes(&self, basis: &SectorBasis) -> Result<Vec<Complex<f64>>> {
        let idx = basis.rank(self.pattern(basis)?)?;
        let mut amps = vec![Complex::new(0.0, 0.0); basis.dim()];
        amps[idx] = Complex::new(1.0, 0.0);
        Ok(amps)
    }
}
