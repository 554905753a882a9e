//! Trajectory-ensemble simulation of disordered XXZ spin chains subject to
//! stochastic collisional dephasing.
//!
//! The pipeline is: enumerate a fixed-magnetization [`basis::SectorBasis`],
//! assemble and diagonalize the [`hamiltonian::SectorHamiltonian`], drive
//! pure-state trajectories with Weibull-renewal collision events from
//! [`noise`], average them in [`engine`], then reduce the ensemble to
//! localization figures of merit ([`observables`]) and plateau metrics
//! ([`plateau`]).

pub mod basis;
pub mod engine;
pub mod error;
pub mod hamiltonian;
pub mod initial;
pub mod noise;
pub mod observables;
pub mod plateau;
mod rng;

pub use basis::{Bipartition, SectorBasis};
pub use engine::{EnsembleOutput, EnsembleSpec, EntropyMode, Simulation, TrajectoryState};
pub use error::{Error, Result};
pub use hamiltonian::{ChainSpec, SectorHamiltonian};
pub use initial::InitialState;
pub use noise::{CollisionSchedule, NoiseSpec};
pub use observables::ObservableSeries;
pub use plateau::{PlateauConfig, PlateauReport, Tau};
