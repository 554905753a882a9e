//! Named experiment presets, one per figure panel.
//!
//! Each preset is a base configuration plus a sweep grid. The full scale
//! runs 500 (one excitation) or 250 trajectories over the complete grid; the
//! desk scale keeps the physics but runs 100 trajectories over a thinner grid.

use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, RawConfig};
use crate::experiment::{prepare_out_dir, run_sweep, Grid, PointResult};
use crate::output::{write_json, write_text};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub scale: Scale,
    /// Flat configuration text shared by every grid point.
    pub config: String,
    #[serde(skip)]
    pub grid: Grid,
    /// Rough single-machine wall time of the whole preset.
    pub runtime: &'static str,
}

pub const NAMES: [&str; 15] = [
    "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig4", "fig5", "fig6", "fig7", "figA1a",
    "figA1b", "figA2a", "figA2b",
];

struct Base {
    lines: Vec<(&'static str, String)>,
}

impl Base {
    fn single(trajectories: usize) -> Self {
        Base {
            lines: vec![
                ("chain.n_sites", "41".into()),
                ("chain.n_exc", "1".into()),
                ("chain.J", "1".into()),
                ("chain.delta", "0".into()),
                ("chain.h", "10".into()),
                ("chain.disorder_seed", "1".into()),
                ("noise.nu", "100".into()),
                ("noise.rc", "0.1".into()),
                ("noise.seed", "1".into()),
                ("ensemble.trajectories", trajectories.to_string()),
                ("ensemble.dt", "0.02".into()),
                ("ensemble.t_final", "30".into()),
                ("init.preset", "single_center".into()),
            ],
        }
    }

    fn pair(trajectories: usize, placement: &str) -> Self {
        let mut b = Self::single(trajectories);
        b.set("chain.n_sites", "20");
        b.set("chain.n_exc", "2");
        b.set("chain.delta", "2.5");
        b.set("init.preset", placement);
        b
    }

    fn set(&mut self, key: &'static str, value: &str) -> &mut Self {
        match self.lines.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value.to_string(),
            None => self.lines.push((key, value.to_string())),
        }
        self
    }

    fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn axis(key: &str, values: &[&str]) -> (String, Vec<String>) {
    (key.to_string(), values.iter().map(|v| v.to_string()).collect())
}

fn pick<'a>(scale: Scale, desk: &'a [&'a str], paper: &'a [&'a str]) -> &'a [&'a str] {
    match scale {
        Scale::Desk => desk,
        Scale::Paper => paper,
    }
}

/// Build preset `name` at `scale`; `None` for an unknown name.
pub fn preset(name: &str, scale: Scale) -> Option<Preset> {
    let desk = scale == Scale::Desk;
    let single_m = if desk { 100 } else { 500 };
    let pair_m = if desk { 100 } else { 250 };
    let name = *NAMES.iter().find(|n| **n == name)?;

    let fig2b_rates: &[&str] = pick(scale, &["0", "0.1", "1", "5", "100"], &["0", "0.1", "0.5", "1", "5", "50", "100"]);
    let fig2c_fields: &[&str] = pick(scale, &["0.5", "5", "10"], &["0.1", "0.5", "1", "5", "10"]);
    let pair_fields: &[&str] = pick(scale, &["0.5", "10"], &["0.5", "1", "5", "10"]);
    let fig3b_rates: Vec<String> = (0..=16).map(|k| format!("{:.2}", 0.20 + 0.05 * k as f64)).collect();
    let fig3b_rates: Vec<&str> = fig3b_rates.iter().map(String::as_str).collect();

    let (description, base, axes, runtime): (&str, Base, Vec<(String, Vec<String>)>, &str) = match name {
        "fig1b" | "fig1c" => {
            let mut b = Base::single(single_m);
            b.set("noise.rc", if name == "fig1b" { "1" } else { "0.1" });
            b.set("output.histogram", "true");
            b.set("output.histogram_bin", "0.1");
            let d = if name == "fig1b" {
                "Collision histogram, N = 41, nu = 100, r_c = 1"
            } else {
                "Collision histogram, N = 41, nu = 100, r_c = 0.1"
            };
            (d, b, vec![], "seconds")
        }
        "fig2a" => (
            "Single-excitation IPR at tJ = 30 over a (nu, r_c) grid, h = 10",
            Base::single(single_m),
            vec![
                axis("noise.nu", pick(scale, &["0.5", "5", "100"], &["0.5", "1", "2", "5", "10", "50", "100"])),
                axis("noise.rc", pick(scale, &["0.1", "1", "10"], &["0.1", "0.5", "1", "5", "10", "50", "100"])),
            ],
            if desk { "about a minute" } else { "about an hour" },
        ),
        "fig2b" | "figA1a" => (
            if name == "fig2b" {
                "Single-excitation IPR against time for several r_c, h = 10, nu = 100"
            } else {
                "Single-excitation imbalance against time for several r_c, h = 10, nu = 100"
            },
            Base::single(single_m),
            vec![axis("noise.rc", fig2b_rates)],
            if desk { "under a minute" } else { "a few minutes" },
        ),
        "fig2c" | "figA1b" => (
            if name == "fig2c" {
                "Single-excitation IPR against time for several h at r_c = 0.1"
            } else {
                "Single-excitation imbalance against time for several h at r_c = 0.1"
            },
            Base::single(single_m),
            vec![axis("chain.h", fig2c_fields)],
            "under a minute",
        ),
        "fig3a" => (
            "Two separated excitations: IER against time for several r_c, with magnetization map",
            Base::pair(pair_m, "two_separated"),
            vec![axis("noise.rc", pick(scale, &["0", "0.1", "1", "10"], &["0", "0.1", "0.5", "1", "5", "10"]))],
            if desk { "under a minute" } else { "a few minutes" },
        ),
        "fig3b" => (
            "Two separated excitations: IER against tJ r_c for r_c from 0.20 to 1.00",
            Base::pair(pair_m, "two_separated"),
            vec![axis("noise.rc", pick(scale, &["0.20", "0.50", "1.00"], &fig3b_rates))],
            if desk { "under a minute" } else { "a few minutes" },
        ),
        "fig4" => (
            "Plateau duration, height and area over an (h, r_c, nu) grid, two separated excitations",
            Base::pair(pair_m, "two_separated"),
            vec![
                axis("chain.h", pair_fields),
                axis("noise.rc", pick(scale, &["0.1", "0.5", "1"], &["0.1", "0.2", "0.5", "0.7", "0.9", "1"])),
                axis("noise.nu", pick(scale, &["100"], &["50", "100"])),
            ],
            if desk { "a few minutes" } else { "under an hour" },
        ),
        "fig5" => (
            "Delocalization time over an (h, r_c, nu) grid, two separated excitations",
            Base::pair(pair_m, "two_separated"),
            vec![
                axis("chain.h", pair_fields),
                axis("noise.rc", pick(scale, &["0.1", "1", "10"], &["0.1", "0.5", "1", "2", "5", "10"])),
                axis("noise.nu", pick(scale, &["100"], &["50", "100"])),
            ],
            if desk { "a few minutes" } else { "about an hour" },
        ),
        "fig6" => {
            let mut b = Base::pair(pair_m, "domain_wall");
            b.set("chain.n_sites", "8").set("chain.n_exc", "4").set("ensemble.t_final", "1000");
            (
                "Domain wall of four excitations on eight sites up to tJ = 1000",
                b,
                vec![axis("noise.rc", pick(scale, &["0.1", "1"], &["0.05", "0.1", "0.5", "1"]))],
                if desk { "under a minute" } else { "a few minutes" },
            )
        }
        "fig7" => {
            let mut b = Base::pair(pair_m, "two_adjacent");
            b.set("analysis.cut", "10");
            (
                "Entanglement entropy of two adjacent excitations for several nu at r_c = 0.1",
                b,
                vec![axis("noise.nu", pick(scale, &["0", "1", "100"], &["0", "0.5", "1", "100"]))],
                if desk { "under a minute" } else { "a few minutes" },
            )
        }
        "figA2a" | "figA2b" => (
            if name == "figA2a" {
                "Two separated excitations: IER for several h at r_c = 0.1"
            } else {
                "Two adjacent excitations: IER for several h at r_c = 0.1"
            },
            Base::pair(pair_m, if name == "figA2a" { "two_separated" } else { "two_adjacent" }),
            vec![axis("chain.h", pair_fields)],
            "under a minute",
        ),
        _ => unreachable!("name checked against NAMES"),
    };
    Some(Preset {
        name,
        description,
        scale,
        config: base.render(),
        grid: Grid { axes },
        runtime,
    })
}

/// Write the preset's inputs into `out` and, unless `emit_only`, run it as a sweep.
pub fn run_preset(
    preset: &Preset,
    out: &Path,
    force: bool,
    threads: Option<usize>,
    emit_only: bool,
) -> Result<Vec<PointResult>, CliError> {
    let raw = RawConfig::parse(&preset.config)?;
    ExperimentConfig::from_raw(&raw)?;
    prepare_out_dir(out, force)?;
    write_json(&out.join("preset.json"), preset)?;
    write_text(&out.join("config.txt"), &preset.config)?;
    write_text(&out.join("grid.txt"), &preset.grid.render())?;
    if emit_only {
        return Ok(Vec::new());
    }
    run_sweep(&raw, &preset.grid, out, threads)
}
