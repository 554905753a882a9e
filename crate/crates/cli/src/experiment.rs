//! Single runs, parameter sweeps and offline analysis.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use xxz_core::basis::binomial;
use xxz_core::noise::{CollisionHistogram, EventSource};
use xxz_core::plateau::PointParams;
use xxz_core::{CollisionSchedule, ObservableSeries, PlateauConfig, PlateauReport, Simulation};

use crate::config::{check_key_value, split_lines, parse_list, ExperimentConfig, Observable, RawConfig};
use crate::output::{self, *};
use crate::CliError;

/// Create `dir`, refusing a non-empty one unless `force` is set.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(CliError::Validation(format!("{} exists and is not a directory", dir.display())));
        }
        let occupied = std::fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .next()
            .is_some();
        if occupied && !force {
            return Err(CliError::Validation(format!(
                "output directory {} is not empty (use --force to write into it)",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Headline numbers of one finished run.
#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub report: PlateauReport,
    /// Last sample of the analysed localization series.
    pub loc_final: f64,
}

fn params_of(cfg: &ExperimentConfig) -> PointParams {
    PointParams {
        h: cfg.chain.h,
        rc: cfg.noise.rc,
        nu: cfg.noise.nu,
        delta: cfg.chain.delta,
    }
}

fn collision_histogram(cfg: &ExperimentConfig, bin: f64) -> Result<CollisionHistogram, CliError> {
    let n = cfg.chain.n_sites;
    let horizon = cfg.ensemble.t_final;
    let mut hist = CollisionHistogram::new(n, bin, horizon)?;
    let mut events = Vec::new();
    for traj in 0..cfg.ensemble.n_traj {
        let mut schedule = CollisionSchedule::new(n, &cfg.noise, traj as u64);
        events.clear();
        while schedule.peek().is_some_and(|ev| ev.time < horizon) {
            events.extend(schedule.pop());
        }
        hist.add(&events);
    }
    Ok(hist)
}

/// Simulate `cfg` and write every output file into the existing directory `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> Result<PointResult, CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();

    let sim = Simulation::from_chain(&cfg.chain, cfg.n_exc, cfg.noise.clone(), &cfg.init)?;
    let ensemble = sim.run_ensemble(&cfg.ensemble, threads)?;
    let series = ObservableSeries::from_ensemble(&ensemble, sim.basis(), cfg.imbalance_center)?;
    let values = match (cfg.observable, series.ipr.as_deref()) {
        (Observable::Ipr, Some(ipr)) => ipr,
        _ => series.ier.as_slice(),
    };
    let dim = sim.basis().dim();
    let report = PlateauReport::analyze(&series.times, values, dim, params_of(cfg), &cfg.plateau)?;
    let loc_final = *values.last().expect("at least one sample");

    let mut outputs = vec![SERIES_FILE, STDERR_FILE, REPORT_JSON, REPORT_CSV, RESOLVED_FILE];
    write_series(&out.join(SERIES_FILE), &series)?;
    write_stderr(&out.join(STDERR_FILE), &series)?;
    write_json(&out.join(REPORT_JSON), &report)?;
    write_report_csv(&out.join(REPORT_CSV), &report)?;
    write_text(&out.join(RESOLVED_FILE), &cfg.render())?;
    if cfg.write_eigenvalues {
        let spectrum = sim.hamiltonian().spectrum().expect("diagonalized by the simulation");
        write_eigenvalues(&out.join(EIGENVALUES_FILE), spectrum.values.as_slice())?;
        outputs.push(EIGENVALUES_FILE);
    }
    if let Some(bin) = cfg.histogram_bin {
        write_histogram(&out.join(HISTOGRAM_FILE), &collision_histogram(cfg, bin)?)?;
        outputs.push(HISTOGRAM_FILE);
    }
    outputs.push(MANIFEST_FILE);

    let config: BTreeMap<&str, &str> = cfg.resolved.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let sites: Vec<usize> = cfg.init.sites(cfg.chain.n_sites, cfg.n_exc)?.iter().map(|i| i + 1).collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "derived": {
            "dim": dim,
            "n_samples": cfg.ensemble.n_samples(),
            "initial_sites": sites,
            "fields": cfg.chain.fields,
            "weibull_scale": cfg.noise.mu.is_finite().then_some(cfg.noise.mu),
            "observable": match cfg.observable { Observable::Ipr => "ipr", Observable::Ier => "ier" },
            "imbalance_center": cfg.imbalance_center.map(|c| c + 1),
        },
        "results": {
            "loc_final": loc_final,
            "max_norm_error": ensemble.max_norm_error,
        },
        "outputs": outputs,
        "started_unix": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_time_s": clock.elapsed().as_secs_f64(),
    });
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(PointResult { report, loc_final })
}

/// Validate, prepare `out` and run one experiment.
pub fn run(cfg: &ExperimentConfig, out: &Path, force: bool, threads: Option<usize>) -> Result<PointResult, CliError> {
    prepare_out_dir(out, force)?;
    run_experiment(cfg, out, threads)
}

/// Sweep axes: `section.key = [v1, v2, ...]`, one per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut grid = Grid::default();
        for (line, key, value) in split_lines(text)? {
            let at = |e: CliError| CliError::Validation(format!("grid line {line}: {e}"));
            let values = parse_list(&value);
            if values.is_empty() {
                return Err(CliError::Validation(format!("grid line {line}: `{key}` has no values")));
            }
            for v in &values {
                check_key_value(&key, v).map_err(at)?;
            }
            if grid.axes.iter().any(|(k, _)| *k == key) {
                return Err(CliError::Validation(format!("grid line {line}: duplicate key `{key}`")));
            }
            grid.axes.push((key, values));
        }
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read grid {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        self.axes
            .iter()
            .map(|(k, vs)| format!("{k} = [{}]\n", vs.join(", ")))
            .collect()
    }

    /// Cartesian product; the last axis varies fastest.
    pub fn points(&self) -> Vec<Vec<(String, String)>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, (key, values)| {
            acc.iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((key.clone(), v.clone()));
                        p
                    })
                })
                .collect()
        })
    }
}

pub fn point_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("point_{index:03}"))
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    point: usize,
    dir: String,
    assignments: BTreeMap<&'a str, &'a str>,
    #[serde(flatten)]
    result: &'a PointResult,
}

/// Run every grid point into `out/point_NNN` and write the sweep summary.
///
/// All points are validated before any simulation starts.
pub fn run_sweep(base: &RawConfig, grid: &Grid, out: &Path, threads: Option<usize>) -> Result<Vec<PointResult>, CliError> {
    let points = grid.points();
    let configs = points
        .iter()
        .enumerate()
        .map(|(i, assignment)| {
            let mut raw = base.clone();
            for (k, v) in assignment {
                raw.set(k, v)?;
            }
            ExperimentConfig::from_raw(&raw).map_err(|e| CliError::Validation(format!("sweep point {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut results = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate() {
        let dir = point_dir(out, i);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        results.push(run_experiment(cfg, &dir, threads)?);
    }

    let summary_csv = out.join(SUMMARY_CSV);
    let mut w = csv::Writer::from_path(&summary_csv).map_err(|e| CliError::io(&summary_csv, e))?;
    let mut header = vec!["point".to_string()];
    header.extend(grid.axes.iter().map(|(k, _)| k.clone()));
    header.extend(REPORT_COLUMNS.iter().map(|c| c.to_string()));
    header.push("loc_final".into());
    w.write_record(&header).map_err(|e| CliError::io(&summary_csv, e))?;
    for (i, (assignment, r)) in points.iter().zip(&results).enumerate() {
        let mut fields = vec![i.to_string()];
        fields.extend(assignment.iter().map(|(_, v)| v.clone()));
        fields.extend(report_fields(&r.report));
        fields.push(fmt_f64(r.loc_final));
        w.write_record(&fields).map_err(|e| CliError::io(&summary_csv, e))?;
    }
    w.flush().map_err(|e| CliError::io(&summary_csv, e))?;

    let entries: Vec<SweepEntry> = points
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(i, (assignment, result))| SweepEntry {
            point: i,
            dir: format!("point_{i:03}"),
            assignments: assignment.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
            result,
        })
        .collect();
    let axes: BTreeMap<&str, &Vec<String>> = grid.axes.iter().map(|(k, v)| (k.as_str(), v)).collect();
    output::write_json(&out.join(SUMMARY_JSON), &json!({ "axes": axes, "points": entries }))?;
    Ok(results)
}

/// Plateau settings given on the `analyze` command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisOverrides {
    pub window: Option<usize>,
    pub slope: Option<f64>,
    pub d_min: Option<f64>,
}

/// Re-run the plateau analysis on a series file.
///
/// Parameters, the sector dimension and default plateau settings come from a
/// `manifest.json` next to the series when there is one. Otherwise the
/// dimension is inferred from the site columns and the first row.
pub fn analyze_series(path: &Path, overrides: AnalysisOverrides) -> Result<PlateauReport, CliError> {
    let table = read_series(path)?;
    let manifest_path = path.with_file_name(MANIFEST_FILE);
    let manifest: Option<serde_json::Value> = match std::fs::read_to_string(&manifest_path) {
        Ok(text) => Some(
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", manifest_path.display())))?,
        ),
        Err(_) => None,
    };
    let setting = |key: &str| -> Option<String> {
        manifest
            .as_ref()
            .and_then(|m| m["config"][key].as_str())
            .map(str::to_string)
    };
    let number = |key: &str| -> Result<Option<f64>, CliError> {
        setting(key)
            .map(|v| v.parse().map_err(|_| CliError::Validation(format!("manifest `{key}`: bad number `{v}`"))))
            .transpose()
    };

    let params = PointParams {
        h: number("chain.h")?.unwrap_or(0.0),
        rc: number("noise.rc")?.unwrap_or(0.0),
        nu: number("noise.nu")?.unwrap_or(0.0),
        delta: number("chain.delta")?.unwrap_or(0.0),
    };
    let defaults = PlateauConfig::default();
    let config = PlateauConfig {
        window: match overrides.window {
            Some(w) => w,
            None => number("analysis.window")?.map_or(defaults.window, |w| w as usize),
        },
        slope: overrides.slope.or(number("analysis.slope")?).unwrap_or(defaults.slope),
        d_min: overrides.d_min.or(number("analysis.d_min")?).unwrap_or(defaults.d_min),
    };

    let manifest_dim = manifest
        .as_ref()
        .and_then(|m| m["derived"]["dim"].as_u64())
        .map(|d| d as usize);
    let n = table.n_sites();
    let dim = match manifest_dim {
        Some(d) => d,
        None if table.ipr.is_some() => n,
        None => {
            let q = table.first_density.iter().sum::<f64>().round() as usize;
            if n == 0 || q > n {
                return Err(CliError::Validation(format!(
                    "{}: cannot infer the sector dimension from the site columns",
                    path.display()
                )));
            }
            usize::try_from(binomial(n, q)).map_err(|_| CliError::Validation("sector dimension overflows".into()))?
        }
    };
    let values = table.ipr.as_deref().unwrap_or(&table.ier);
    Ok(PlateauReport::analyze(&table.times, values, dim, params, &config)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_vary_last_axis_fastest() {
        let g = Grid::parse("chain.h = [0.5, 10]\nnoise.rc = [0.1, 1, 5]\n").unwrap();
        let p = g.points();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![("chain.h".into(), "0.5".into()), ("noise.rc".into(), "0.1".into())]);
        assert_eq!(p[1][1].1, "1");
        assert_eq!(p[3][0].1, "10");
        assert_eq!(Grid::parse(&g.render()).unwrap(), g);
    }

    #[test]
    fn empty_grid_is_a_single_point() {
        assert_eq!(Grid::default().points(), vec![Vec::<(String, String)>::new()]);
    }

    #[test]
    fn grid_errors_name_the_key() {
        let e = Grid::parse("noise.rate = [1]\n").unwrap_err();
        assert!(e.to_string().contains("noise.rate"));
        let e = Grid::parse("noise.rc = [1, x]\n").unwrap_err();
        assert!(e.to_string().contains("noise.rc"));
        assert!(Grid::parse("noise.rc = []\n").is_err());
        assert!(Grid::parse("noise.rc = [1]\nnoise.rc = [2]\n").is_err());
    }

    #[test]
    fn occupied_directory_needs_force() {
        let dir = tempfile::tempdir().unwrap();
        prepare_out_dir(dir.path(), false).unwrap();
        std::fs::write(dir.path().join("x"), "1").unwrap();
        let e = prepare_out_dir(dir.path(), false).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        prepare_out_dir(dir.path(), true).unwrap();
        prepare_out_dir(&dir.path().join("new/nested"), false).unwrap();
    }
}
