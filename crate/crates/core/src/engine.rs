//! Pure-state trajectories under collisional dephasing, and their ensemble
//! average.
//!
//! Between collisions a trajectory evolves exactly with the precomputed
//! spectral decomposition of the sector Hamiltonian; the state is stored in
//! the eigenbasis so that free evolution is a diagonal phase. A collision
//! with an ancilla through `exp(-i π/2 σx_a ⊗ σz_i)` equals `-i σx_a ⊗ σz_i`,
//! so once the ancilla is traced out every trajectory sees a plain `σz_i`
//! kick whatever the ancilla state. `dt` only sets the output grid.
//!
//! Trajectories are split into a fixed number of contiguous groups. Each
//! group is summed in trajectory order and groups are summed in group order,
//! so the result does not depend on the number of worker threads. The spread
//! between groups provides standard errors.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Bipartition, SectorBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::{ChainSpec, SectorHamiltonian};
use crate::initial::InitialState;
use crate::noise::{Collision, CollisionSchedule, EventSource, NoiseSpec};
use crate::observables::{self, reduced_blocks_add, reduced_entropy, reduced_len, schmidt_weights, von_neumann};

type C64 = Complex<f64>;

/// Default number of trajectory groups used for error bars.
pub const DEFAULT_ERROR_GROUPS: usize = 10;

const SAMPLE_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMode {
    /// Entropy of each pure trajectory state, then averaged.
    #[default]
    PerTrajectory,
    /// Entropy of the trajectory-averaged reduced density matrix.
    AveragedState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    pub dt: f64,
    pub t_final: f64,
    pub entropy_mode: EntropyMode,
    /// Left block is sites `[0, cut)`; `None` disables entropies.
    pub cut: Option<usize>,
    /// Accumulate the full averaged density matrix (small sectors only).
    pub record_density: bool,
    /// Keep every collision event of every trajectory.
    pub record_events: bool,
    pub error_groups: usize,
}

impl EnsembleSpec {
    pub fn new(n_traj: usize, dt: f64, t_final: f64) -> Result<Self> {
        let spec = Self {
            n_traj,
            dt,
            t_final,
            entropy_mode: EntropyMode::default(),
            cut: None,
            record_density: false,
            record_events: false,
            error_groups: DEFAULT_ERROR_GROUPS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::param("n_traj", "at least one trajectory is required"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(Error::param(
                "t_final",
                format!("must be finite and >= dt = {}, got {}", self.dt, self.t_final),
            ));
        }
        Ok(())
    }

    pub fn with_cut(mut self, cut: usize) -> Self {
        self.cut = Some(cut);
        self
    }

    pub fn with_entropy_mode(mut self, mode: EntropyMode) -> Self {
        self.entropy_mode = mode;
        self
    }

    /// `floor(t_final / dt) + 1` samples, including `t = 0`.
    pub fn n_samples(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|k| k as f64 * self.dt).collect()
    }
}

/// A trajectory state in the eigenbasis of the Hamiltonian: column 0 holds
/// the real parts, column 1 the imaginary parts.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    coeffs: DMatrix<f64>,
    pub time: f64,
}

impl TrajectoryState {
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }
}

/// `σz_i` in the sector basis is `sign · (1 - 2 P)` where `P` projects onto
/// the listed states; the shorter of the occupied/empty lists is kept.
#[derive(Debug, Clone)]
struct Kick {
    rows: Vec<usize>,
    // +1: σz = 1 - 2 P_empty, -1: σz = -(1 - 2 P_occupied)
    sign: f64,
}

/// Everything shared read-only by the trajectories of one parameter point.
#[derive(Debug, Clone)]
pub struct Simulation {
    hamiltonian: Arc<SectorHamiltonian>,
    noise: NoiseSpec,
    initial: Vec<C64>,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
    vectors_t: DMatrix<f64>,
    kicks: Vec<Kick>,
}

impl Simulation {
    pub fn new(mut hamiltonian: SectorHamiltonian, noise: NoiseSpec, initial: Vec<C64>) -> Result<Self> {
        hamiltonian.diagonalize()?;
        Self::from_shared(Arc::new(hamiltonian), noise, initial)
    }

    /// Build and diagonalize the chain in the sector holding `n_exc` excitations.
    pub fn from_chain(chain: &ChainSpec, n_exc: usize, noise: NoiseSpec, init: &InitialState) -> Result<Self> {
        let basis = Arc::new(SectorBasis::new(chain.n_sites, n_exc)?);
        let initial = init.amplitudes(&basis)?;
        Self::new(SectorHamiltonian::build(basis, chain)?, noise, initial)
    }

    /// Same Hamiltonian, different noise.
    pub fn with_noise(&self, noise: NoiseSpec) -> Result<Self> {
        Self::from_shared(self.hamiltonian.clone(), noise, self.initial.clone())
    }

    /// The Hamiltonian must already be diagonalized.
    pub fn from_shared(hamiltonian: Arc<SectorHamiltonian>, noise: NoiseSpec, initial: Vec<C64>) -> Result<Self> {
        let spectrum = hamiltonian
            .spectrum()
            .ok_or_else(|| Error::Contract("Hamiltonian must be diagonalized first".into()))?;
        let basis = hamiltonian.basis();
        let dim = basis.dim();
        if initial.len() != dim {
            return Err(Error::param(
                "initial",
                format!("{} amplitudes for a sector of dimension {dim}", initial.len()),
            ));
        }
        let norm: f64 = initial.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::param("initial", format!("state norm² is {norm}, expected 1")));
        }
        if let Some(sites) = &noise.active_sites {
            if let Some(&s) = sites.iter().find(|&&s| s >= basis.n_sites()) {
                return Err(Error::param("active_sites", format!("site {s} outside the chain")));
            }
        }

        let kicks = (0..basis.n_sites())
            .map(|site| {
                let (occ, empty): (Vec<usize>, Vec<usize>) = (0..dim).partition(|&j| basis.is_occupied(j, site));
                if occ.len() <= empty.len() {
                    Kick { rows: occ, sign: -1.0 }
                } else {
                    Kick { rows: empty, sign: 1.0 }
                }
            })
            .collect();

        Ok(Self {
            energies: spectrum.values.iter().copied().collect(),
            vectors: spectrum.vectors.clone(),
            vectors_t: spectrum.vectors.transpose(),
            hamiltonian,
            noise,
            initial,
            kicks,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        self.hamiltonian.basis()
    }

    pub fn hamiltonian(&self) -> &Arc<SectorHamiltonian> {
        &self.hamiltonian
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn initial_state(&self) -> TrajectoryState {
        self.state_from_amplitudes(&self.initial, 0.0)
    }

    pub fn state_from_amplitudes(&self, amps: &[C64], time: f64) -> TrajectoryState {
        let dim = amps.len();
        let site = DMatrix::from_fn(dim, 2, |r, c| if c == 0 { amps[r].re } else { amps[r].im });
        TrajectoryState {
            coeffs: &self.vectors_t * site,
            time,
        }
    }

    /// Site-basis amplitudes of `state`.
    pub fn amplitudes(&self, state: &TrajectoryState) -> Vec<C64> {
        let site = &self.vectors * &state.coeffs;
        (0..site.nrows()).map(|r| C64::new(site[(r, 0)], site[(r, 1)])).collect()
    }

    /// Exact coherent evolution to `t_target`.
    pub fn propagate(&self, state: &mut TrajectoryState, t_target: f64) {
        let dt = t_target - state.time;
        debug_assert!(dt >= 0.0);
        if dt != 0.0 {
            for (k, &e) in self.energies.iter().enumerate() {
                let (s, c) = (-e * dt).sin_cos();
                let (re, im) = (state.coeffs[(k, 0)], state.coeffs[(k, 1)]);
                state.coeffs[(k, 0)] = re * c - im * s;
                state.coeffs[(k, 1)] = re * s + im * c;
            }
        }
        state.time = t_target;
    }

    /// Apply the `σz` kick of a collision at `site`.
    pub fn apply_collision(&self, state: &mut TrajectoryState, site: usize) -> Result<()> {
        let kick = self.kicks.get(site).ok_or_else(|| {
            Error::param("site", format!("site {site} outside a chain of {}", self.kicks.len()))
        })?;
        self.kick(state, kick);
        Ok(())
    }

    fn kick(&self, state: &mut TrajectoryState, kick: &Kick) {
        // c ← sign · (c - 2 Vᵀ P V c), touching only the rows of V in P
        let proj: Vec<(f64, f64)> = kick
            .rows
            .iter()
            .map(|&j| {
                let row = self.vectors_t.column(j);
                (row.dot(&state.coeffs.column(0)), row.dot(&state.coeffs.column(1)))
            })
            .collect();
        for (&j, &(pr, pi)) in kick.rows.iter().zip(&proj) {
            let row = self.vectors_t.column(j);
            state.coeffs.column_mut(0).axpy(-2.0 * pr, &row, 1.0);
            state.coeffs.column_mut(1).axpy(-2.0 * pi, &row, 1.0);
        }
        if kick.sign < 0.0 {
            state.coeffs.neg_mut();
        }
    }

    /// One trajectory driven by `events`, deposited into `acc`.
    fn run_into<E: EventSource>(&self, spec: &EnsembleSpec, bip: Option<&Bipartition>, mut events: E, acc: &mut Accumulator) {
        let dim = self.basis().dim();
        let mut state = self.initial_state();
        let mut log = Vec::new();
        // eigenbasis coefficients of a block of samples, converted in one product
        let mut block = DMatrix::<f64>::zeros(dim, 2 * SAMPLE_BLOCK);
        let mut site = DMatrix::<f64>::zeros(dim, 2 * SAMPLE_BLOCK);
        let mut first = 0;

        for k in 0..acc.n_samples {
            let t = k as f64 * spec.dt;
            while let Some(ev) = events.peek() {
                if ev.time > t {
                    break;
                }
                events.pop();
                self.propagate(&mut state, ev.time);
                self.kick(&mut state, &self.kicks[ev.site]);
                if spec.record_events {
                    log.push(ev);
                }
            }
            self.propagate(&mut state, t);

            let slot = k - first;
            block.columns_mut(2 * slot, 2).copy_from(&state.coeffs);
            if slot + 1 == SAMPLE_BLOCK || k + 1 == acc.n_samples {
                let cols = 2 * (slot + 1);
                site.columns_mut(0, cols).gemm(1.0, &self.vectors, &block.columns(0, cols), 0.0);
                for j in 0..=slot {
                    let re = site.column(2 * j);
                    let im = site.column(2 * j + 1);
                    acc.deposit(first + j, re.as_slice(), im.as_slice(), spec.entropy_mode, bip);
                }
                first = k + 1;
            }
        }
        acc.n_traj += 1;
        if spec.record_events {
            acc.events.push(log);
        }
    }

    fn bipartition(&self, spec: &EnsembleSpec) -> Result<Option<Bipartition>> {
        spec.cut.map(|c| self.basis().bipartition(c)).transpose()
    }

    /// Single trajectory with its Weibull collision schedule.
    pub fn run_trajectory(&self, spec: &EnsembleSpec, trajectory: u64) -> Result<EnsembleOutput> {
        let schedule = CollisionSchedule::new(self.basis().n_sites(), &self.noise, trajectory);
        self.run_with_events(spec, schedule)
    }

    /// Single trajectory driven by an arbitrary event source.
    pub fn run_with_events<E: EventSource>(&self, spec: &EnsembleSpec, events: E) -> Result<EnsembleOutput> {
        spec.validate()?;
        let bip = self.bipartition(spec)?;
        let mut acc = Accumulator::new(spec, self.basis().dim(), bip.as_ref());
        self.run_into(spec, bip.as_ref(), events, &mut acc);
        let group = acc.group_series(self.basis(), bip.as_ref(), spec.entropy_mode);
        Ok(acc.finish(spec, vec![group], bip.as_ref()))
    }

    /// Average `spec.n_traj` trajectories on `threads` workers (`None`: rayon default).
    pub fn run_ensemble(&self, spec: &EnsembleSpec, threads: Option<usize>) -> Result<EnsembleOutput> {
        spec.validate()?;
        let bip = self.bipartition(spec)?;
        let m = spec.n_traj;
        let n_groups = spec.error_groups.clamp(1, m);
        let bounds: Vec<(usize, usize)> = (0..n_groups)
            .map(|g| (g * m / n_groups, (g + 1) * m / n_groups))
            .collect();

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?;
        let wave = pool.current_num_threads().max(1);

        let n_sites = self.basis().n_sites();
        let dim = self.basis().dim();
        let mut total = Accumulator::new(spec, dim, bip.as_ref());
        let mut groups = Vec::with_capacity(n_groups);
        for chunk in bounds.chunks(wave) {
            let done: Vec<(Accumulator, GroupSeries)> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|&(lo, hi)| {
                        let mut acc = Accumulator::new(spec, dim, bip.as_ref());
                        for traj in lo..hi {
                            let schedule = CollisionSchedule::new(n_sites, &self.noise, traj as u64);
                            self.run_into(spec, bip.as_ref(), schedule, &mut acc);
                        }
                        let series = acc.group_series(self.basis(), bip.as_ref(), spec.entropy_mode);
                        (acc, series)
                    })
                    .collect()
            });
            for (acc, series) in done {
                total.merge(acc);
                groups.push(series);
            }
        }
        Ok(total.finish(spec, groups, bip.as_ref()))
    }
}

/// Running sums over trajectories.
#[derive(Debug, Clone)]
struct Accumulator {
    n_samples: usize,
    dim: usize,
    n_traj: usize,
    populations: Vec<f64>,
    entropy: Option<Vec<f64>>,
    reduced_len: usize,
    reduced: Option<Vec<C64>>,
    density: Option<Vec<C64>>,
    events: Vec<Vec<Collision>>,
    max_norm_error: f64,
}

impl Accumulator {
    fn new(spec: &EnsembleSpec, dim: usize, bip: Option<&Bipartition>) -> Self {
        let n = spec.n_samples();
        let reduced_len = bip.map_or(0, reduced_len);
        Self {
            n_samples: n,
            dim,
            n_traj: 0,
            populations: vec![0.0; n * dim],
            entropy: (bip.is_some() && spec.entropy_mode == EntropyMode::PerTrajectory).then(|| vec![0.0; n]),
            reduced_len,
            reduced: (bip.is_some() && spec.entropy_mode == EntropyMode::AveragedState)
                .then(|| vec![C64::new(0.0, 0.0); n * reduced_len]),
            density: spec.record_density.then(|| vec![C64::new(0.0, 0.0); n * dim * dim]),
            events: Vec::new(),
            max_norm_error: 0.0,
        }
    }

    /// Add one pure state, given by its site-basis amplitudes, at sample `k`.
    fn deposit(&mut self, k: usize, re: &[f64], im: &[f64], mode: EntropyMode, bip: Option<&Bipartition>) {
        let dim = self.dim;
        let mut norm = 0.0;
        for (j, p) in self.populations[k * dim..(k + 1) * dim].iter_mut().enumerate() {
            let x = re[j] * re[j] + im[j] * im[j];
            *p += x;
            norm += x;
        }
        self.max_norm_error = self.max_norm_error.max((norm.sqrt() - 1.0).abs());

        if let Some(bip) = bip {
            match mode {
                EntropyMode::PerTrajectory => {
                    self.entropy.as_mut().unwrap()[k] += von_neumann(schmidt_weights(re, im, bip));
                }
                EntropyMode::AveragedState => {
                    let len = self.reduced_len;
                    let slot = &mut self.reduced.as_mut().unwrap()[k * len..(k + 1) * len];
                    reduced_blocks_add(re, im, bip, 1.0, slot);
                }
            }
        }
        if let Some(rho) = self.density.as_mut() {
            let base = k * dim * dim;
            for a in 0..dim {
                for b in 0..dim {
                    rho[base + a * dim + b] += C64::new(re[a], im[a]) * C64::new(re[b], -im[b]);
                }
            }
        }
    }

    fn merge(&mut self, other: Accumulator) {
        fn add<T: Copy + std::ops::AddAssign>(a: &mut [T], b: &[T]) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.n_traj += other.n_traj;
        add(&mut self.populations, &other.populations);
        if let (Some(a), Some(b)) = (self.entropy.as_mut(), other.entropy.as_ref()) {
            add(a, b);
        }
        if let (Some(a), Some(b)) = (self.reduced.as_mut(), other.reduced.as_ref()) {
            add(a, b);
        }
        if let (Some(a), Some(b)) = (self.density.as_mut(), other.density.as_ref()) {
            add(a, b);
        }
        self.events.extend(other.events);
        self.max_norm_error = self.max_norm_error.max(other.max_norm_error);
    }

    fn averaged_entropy(&self, bip: &Bipartition, k: usize) -> f64 {
        let len = self.reduced_len;
        let w = 1.0 / self.n_traj as f64;
        let blocks: Vec<C64> = self.reduced.as_ref().unwrap()[k * len..(k + 1) * len]
            .iter()
            .map(|z| z * w)
            .collect();
        reduced_entropy(&blocks, bip)
    }

    fn svn(&self, bip: Option<&Bipartition>, mode: EntropyMode) -> Option<Vec<f64>> {
        let bip = bip?;
        let w = 1.0 / self.n_traj as f64;
        Some(match mode {
            EntropyMode::PerTrajectory => self.entropy.as_ref().unwrap().iter().map(|s| s * w).collect(),
            EntropyMode::AveragedState => (0..self.n_samples).map(|k| self.averaged_entropy(bip, k)).collect(),
        })
    }

    fn group_series(&self, basis: &SectorBasis, bip: Option<&Bipartition>, mode: EntropyMode) -> GroupSeries {
        let w = 1.0 / self.n_traj as f64;
        let mut ier = Vec::with_capacity(self.n_samples);
        let mut density = Vec::with_capacity(self.n_samples * basis.n_sites());
        for row in self.populations.chunks(self.dim) {
            let p: Vec<f64> = row.iter().map(|x| x * w).collect();
            ier.push(observables::ier(&p));
            density.extend(observables::site_density(&p, basis));
        }
        GroupSeries {
            ipr: (basis.n_exc() == 1).then(|| ier.clone()),
            ier,
            density,
            svn: self.svn(bip, mode),
        }
    }

    fn finish(self, spec: &EnsembleSpec, groups: Vec<GroupSeries>, bip: Option<&Bipartition>) -> EnsembleOutput {
        let w = 1.0 / self.n_traj as f64;
        let svn = self.svn(bip, spec.entropy_mode);
        EnsembleOutput {
            times: spec.times(),
            dim: self.dim,
            n_traj: self.n_traj,
            populations: self.populations.iter().map(|x| x * w).collect(),
            svn,
            density: self.density.map(|d| d.into_iter().map(|z| z * w).collect()),
            events: spec.record_events.then_some(self.events),
            groups,
            max_norm_error: self.max_norm_error,
        }
    }
}

/// Per-group observables used for error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSeries {
    pub ier: Vec<f64>,
    pub ipr: Option<Vec<f64>>,
    /// Site densities, `n_sites` values per sample.
    pub density: Vec<f64>,
    pub svn: Option<Vec<f64>>,
}

/// Trajectory-averaged data on the output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub times: Vec<f64>,
    pub dim: usize,
    pub n_traj: usize,
    /// Diagonal of the averaged density matrix, `dim` values per sample.
    pub populations: Vec<f64>,
    /// Entanglement entropy in nats, per the ensemble's entropy mode.
    pub svn: Option<Vec<f64>>,
    /// Averaged density matrices, row-major `dim × dim` per sample.
    pub density: Option<Vec<C64>>,
    /// Collision events per trajectory, in trajectory order.
    pub events: Option<Vec<Vec<Collision>>>,
    pub groups: Vec<GroupSeries>,
    /// Largest `| ||ψ|| - 1 |` seen at any sample of any trajectory.
    pub max_norm_error: f64,
}

impl EnsembleOutput {
    pub fn population_row(&self, k: usize) -> &[f64] {
        &self.populations[k * self.dim..(k + 1) * self.dim]
    }

    pub fn density_matrix(&self, k: usize) -> Option<DMatrix<C64>> {
        let d = self.dim;
        self.density
            .as_ref()
            .map(|rho| DMatrix::from_row_slice(d, d, &rho[k * d * d..(k + 1) * d * d]))
    }
}

/// Exact `V e^{-iΛt} Vᵀ ψ` on site-basis amplitudes.
pub fn propagate_amplitudes(hamiltonian: &SectorHamiltonian, psi: &[C64], t: f64) -> Result<Vec<C64>> {
    let spec = hamiltonian
        .spectrum()
        .ok_or_else(|| Error::Contract("Hamiltonian must be diagonalized first".into()))?;
    let v = &spec.vectors;
    let dim = psi.len();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        let c: C64 = (0..dim).map(|j| psi[j] * v[(j, k)]).sum();
        let c = c * C64::from_polar(1.0, -spec.values[k] * t);
        for j in 0..dim {
            out[j] += c * v[(j, k)];
        }
    }
    Ok(out)
}

/// `σz_site` on site-basis amplitudes: `+1` where occupied, `-1` where empty.
pub fn apply_collision_amplitudes(basis: &SectorBasis, psi: &mut [C64], site: usize) -> Result<()> {
    if site >= basis.n_sites() {
        return Err(Error::param("site", format!("site {site} outside a chain of {}", basis.n_sites())));
    }
    for (j, a) in psi.iter_mut().enumerate() {
        if !basis.is_occupied(j, site) {
            *a = -*a;
        }
    }
    Ok(())
}
