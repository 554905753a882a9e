//! Plateaus in localization time series, and the figures derived from them.
//!
//! A plateau is a maximal stretch where the moving-average-smoothed series
//! is flat to within a slope threshold proportional to the series range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    /// Moving-average width in samples.
    pub window: usize,
    /// Largest |slope| per unit time, as a fraction of the series range.
    pub slope: f64,
    /// Shortest accepted plateau, in time units.
    pub d_min: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            window: 25,
            slope: 0.002,
            d_min: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub t_start: f64,
    pub t_end: f64,
    pub height: f64,
}

impl Plateau {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

fn check_grid(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::param(
            "series",
            format!("{} times but {} values", times.len(), values.len()),
        ));
    }
    if times.len() < 2 {
        return Err(Error::param("series", "need at least two samples"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::param("series", "times must increase"));
    }
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt.max(1.0));
    if !uniform {
        return Err(Error::param("series", "times must be uniformly spaced"));
    }
    Ok(())
}

/// Centered moving average of width `w`, truncated at the ends.
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    let n = values.len();
    let half = w / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + w - half).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub fn detect_plateaus(times: &[f64], values: &[f64], config: &PlateauConfig) -> Result<Vec<Plateau>> {
    check_grid(times, values)?;
    let n = values.len();
    if config.window == 0 || n < config.window {
        return Err(Error::param(
            "window",
            format!("series of {n} samples is shorter than the window {}", config.window),
        ));
    }
    if !(config.slope >= 0.0) || !(config.d_min >= 0.0) {
        return Err(Error::param("plateau", "slope and d_min must be non-negative"));
    }

    let dt = times[1] - times[0];
    // offset so that constant stretches smooth to exact constants
    let shifted: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
    let smooth = moving_average(&shifted, config.window);
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let threshold = config.slope * (hi - lo);

    let flat: Vec<bool> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            let slope = (smooth[b] - smooth[a]) / ((b - a) as f64 * dt);
            slope.abs() <= threshold
        })
        .collect();

    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        if !flat[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && flat[k] {
            k += 1;
        }
        let run = &values[start..k];
        let p = Plateau {
            t_start: times[start],
            t_end: times[k - 1],
            height: run.iter().sum::<f64>() / run.len() as f64,
        };
        if p.duration() >= config.d_min - 1e-9 * dt {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn collapse_transform(times: &[f64], rc: f64) -> Result<Vec<f64>> {
    if !(rc > 0.0) || !rc.is_finite() {
        return Err(Error::param("rc", format!("collapse needs a positive rate, got {rc}")));
    }
    Ok(times.iter().map(|t| t * rc).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "time", rename_all = "kebab-case")]
pub enum Tau {
    At(f64),
    /// Criterion never met; carries the last simulated time.
    BeyondHorizon(f64),
}

impl Tau {
    pub fn time(&self) -> Option<f64> {
        match *self {
            Tau::At(t) => Some(t),
            Tau::BeyondHorizon(_) => None,
        }
    }

    pub fn is_beyond_horizon(&self) -> bool {
        matches!(self, Tau::BeyondHorizon(_))
    }
}

/// First grid time with `value < threshold` after which no plateau higher
/// than `2 * threshold` starts.
pub fn delocalization_time(times: &[f64], values: &[f64], threshold: f64, plateaus: &[Plateau]) -> Tau {
    let horizon = times.last().copied().unwrap_or(0.0);
    let last_high_start = plateaus
        .iter()
        .filter(|p| p.height > 2.0 * threshold)
        .map(|p| p.t_start)
        .fold(f64::NEG_INFINITY, f64::max);
    times
        .iter()
        .zip(values)
        .find(|&(&t, &v)| v < threshold && t >= last_high_start)
        .map_or(Tau::BeyondHorizon(horizon), |(&t, _)| Tau::At(t))
}

/// Threshold used for a sector of dimension `dim`.
pub fn delocalization_threshold(dim: usize) -> f64 {
    10.0 / dim as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointParams {
    pub h: f64,
    pub rc: f64,
    pub nu: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPlateau {
    pub duration: f64,
    pub height: f64,
    pub area: f64,
    pub disorder_power: f64,
    pub disorder_power_scaled: f64,
}

pub fn first_plateau_metrics(plateaus: &[Plateau], params: &PointParams) -> FirstPlateau {
    let (duration, height) = plateaus.first().map_or((0.0, 0.0), |p| (p.duration(), p.height));
    FirstPlateau {
        duration,
        height,
        area: height * duration * params.rc,
        disorder_power: params.h * params.rc,
        disorder_power_scaled: params.h * params.rc * params.nu,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub params: PointParams,
    pub plateaus: Vec<Plateau>,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Z_J")]
    pub z_j: f64,
    pub area: f64,
    #[serde(rename = "P_h")]
    pub p_h: f64,
    #[serde(rename = "P_h_scaled")]
    pub p_h_scaled: f64,
    pub tau: Tau,
}

impl PlateauReport {
    /// Analyse a localization series (IPR or IER) of a sector of dimension `dim`.
    pub fn analyze(
        times: &[f64],
        values: &[f64],
        dim: usize,
        params: PointParams,
        config: &PlateauConfig,
    ) -> Result<Self> {
        let plateaus = detect_plateaus(times, values, config)?;
        let m = first_plateau_metrics(&plateaus, &params);
        let tau = delocalization_time(times, values, delocalization_threshold(dim), &plateaus);
        Ok(Self {
            params,
            d: m.duration,
            z_j: m.height,
            area: m.area,
            p_h: m.disorder_power,
            p_h_scaled: m.disorder_power_scaled,
            tau,
            plateaus,
        })
    }
}
