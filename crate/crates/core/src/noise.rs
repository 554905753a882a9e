//! Weibull renewal collision noise.
//!
//! Each site carries its own renewal process with i.i.d. Weibull(ν, μ)
//! waiting times. The scale is fixed by the collision rate through
//! `r_c μ Γ(1 + 1/ν) = 1`. The schedule keeps the absolute time of the next
//! collision of every site; the earliest entry is the next event.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::{site_stream, unit_f64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Weibull shape ν.
    pub nu: f64,
    /// Collision rate r_c, the inverse mean waiting time.
    pub rc: f64,
    /// Weibull scale μ; infinite for a closed system.
    pub mu: f64,
    pub seed: u64,
    /// Sites that collide; `None` means all of them.
    pub active_sites: Option<Vec<usize>>,
}

impl NoiseSpec {
    pub fn new(nu: f64, rc: f64, seed: u64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::param("nu", format!("must be finite and >= 0, got {nu}")));
        }
        if !rc.is_finite() || rc < 0.0 {
            return Err(Error::param("rc", format!("must be finite and >= 0, got {rc}")));
        }
        let mu = if rc > 0.0 && nu > 0.0 {
            1.0 / (rc * gamma(1.0 + 1.0 / nu))
        } else {
            f64::INFINITY
        };
        if rc > 0.0 && nu > 0.0 && !(mu.is_finite() && mu > 0.0) {
            return Err(Error::param("nu", format!("scale is not representable for nu = {nu}")));
        }
        Ok(Self {
            nu,
            rc,
            mu,
            seed,
            active_sites: None,
        })
    }

    /// The noiseless chain: no collisions ever.
    pub fn closed() -> Self {
        Self::new(0.0, 0.0, 0).unwrap()
    }

    pub fn with_active_sites(mut self, sites: Vec<usize>) -> Self {
        self.active_sites = Some(sites);
        self
    }

    /// `ν = 0` is a label for the noiseless case, like `r_c = 0`.
    pub fn is_closed(&self) -> bool {
        self.rc == 0.0 || self.nu == 0.0
    }

    fn is_active(&self, site: usize) -> bool {
        match &self.active_sites {
            None => true,
            Some(s) => s.contains(&site),
        }
    }
}

/// Inverse-transform Weibull sample: `μ (-ln(1-u))^{1/ν}` for `u ∈ [0, 1)`.
pub fn waiting_time_from_uniform(u: f64, nu: f64, mu: f64) -> f64 {
    mu * (-(1.0 - u).ln()).powf(1.0 / nu)
}

pub fn sample_waiting_time(stream: &mut ChaCha8Rng, spec: &NoiseSpec) -> f64 {
    waiting_time_from_uniform(unit_f64(stream), spec.nu, spec.mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub site: usize,
    pub time: f64,
}

/// Time-ordered supply of collision events for one trajectory.
pub trait EventSource {
    fn peek(&self) -> Option<Collision>;
    /// Consume the event returned by `peek`.
    fn pop(&mut self) -> Option<Collision>;
}

#[derive(Debug, Clone)]
pub struct CollisionSchedule {
    next_time: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
    nu: f64,
    mu: f64,
}

impl CollisionSchedule {
    pub fn new(n_sites: usize, spec: &NoiseSpec, trajectory: u64) -> Self {
        let mut streams: Vec<_> = (0..n_sites)
            .map(|i| site_stream(spec.seed, trajectory, i))
            .collect();
        let next_time = streams
            .iter_mut()
            .enumerate()
            .map(|(i, s)| {
                if spec.is_closed() || !spec.is_active(i) {
                    f64::INFINITY
                } else {
                    sample_waiting_time(s, spec)
                }
            })
            .collect();
        Self {
            next_time,
            streams,
            nu: spec.nu,
            mu: spec.mu,
        }
    }

    pub fn next_times(&self) -> &[f64] {
        &self.next_time
    }
}

impl EventSource for CollisionSchedule {
    fn peek(&self) -> Option<Collision> {
        let mut best: Option<Collision> = None;
        for (site, &time) in self.next_time.iter().enumerate() {
            // strict comparison keeps the lowest site on ties
            if time.is_finite() && best.is_none_or(|b| time < b.time) {
                best = Some(Collision { site, time });
            }
        }
        best
    }

    fn pop(&mut self) -> Option<Collision> {
        let ev = self.peek()?;
        let wait = waiting_time_from_uniform(unit_f64(&mut self.streams[ev.site]), self.nu, self.mu);
        self.next_time[ev.site] += wait;
        Some(ev)
    }
}

/// Replays a fixed, time-sorted list of events.
#[derive(Debug, Clone)]
pub struct RecordedEvents {
    events: Vec<Collision>,
    pos: usize,
}

impl RecordedEvents {
    pub fn new(mut events: Vec<Collision>) -> Self {
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
        Self { events, pos: 0 }
    }
}

impl EventSource for RecordedEvents {
    fn peek(&self) -> Option<Collision> {
        self.events.get(self.pos).copied()
    }

    fn pop(&mut self) -> Option<Collision> {
        let ev = self.peek()?;
        self.pos += 1;
        Some(ev)
    }
}

/// Collision counts per (site, time bin) over `[0, horizon)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionHistogram {
    pub bin_width: f64,
    /// `counts[site][bin]`
    pub counts: Vec<Vec<u64>>,
}

impl CollisionHistogram {
    pub fn new(n_sites: usize, bin_width: f64, horizon: f64) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::param("bin_width", format!("must be positive, got {bin_width}")));
        }
        if !(horizon >= 0.0) {
            return Err(Error::param("horizon", format!("must be >= 0, got {horizon}")));
        }
        let n_bins = ((horizon / bin_width) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            bin_width,
            counts: vec![vec![0; n_bins]; n_sites],
        })
    }

    pub fn add(&mut self, events: &[Collision]) {
        for ev in events {
            let bin = (ev.time / self.bin_width).floor();
            if bin < 0.0 {
                continue;
            }
            if let Some(c) = self
                .counts
                .get_mut(ev.site)
                .and_then(|row| row.get_mut(bin as usize))
            {
                *c += 1;
            }
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn collision_histogram(
    events: &[Collision],
    n_sites: usize,
    bin_width: f64,
    horizon: f64,
) -> Result<CollisionHistogram> {
    let mut h = CollisionHistogram::new(n_sites, bin_width, horizon)?;
    h.add(events);
    Ok(h)
}
