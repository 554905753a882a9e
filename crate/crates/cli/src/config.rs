//! Flat `section.key = value` experiment configuration.
//!
//! Every key is declared in [`KEYS`]; unknown keys, duplicates and malformed
//! values are rejected with the key path in the message. Environment
//! variables named `XXZ_<SECTION>_<KEY>` (upper case) override file values.

use std::collections::BTreeMap;
use std::path::Path;

use xxz_core::{ChainSpec, EnsembleSpec, EntropyMode, InitialState, NoiseSpec, PlateauConfig};

use crate::CliError;

pub const ENV_PREFIX: &str = "XXZ_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Seed,
    Bool,
    Choice(&'static [&'static str]),
    Sites,
}

struct KeySpec {
    path: &'static str,
    kind: Kind,
    default: Option<&'static str>,
    required: bool,
}

const fn key(path: &'static str, kind: Kind, default: Option<&'static str>) -> KeySpec {
    KeySpec { path, kind, default, required: false }
}

const fn required(path: &'static str, kind: Kind) -> KeySpec {
    KeySpec { path, kind, default: None, required: true }
}

const PRESETS: &[&str] = &["single_center", "two_separated", "two_adjacent", "domain_wall", "explicit_sites"];

const KEYS: &[KeySpec] = &[
    required("chain.n_sites", Kind::Int),
    key("chain.n_exc", Kind::Int, Some("1")),
    key("chain.J", Kind::Float, Some("1")),
    key("chain.delta", Kind::Float, Some("0")),
    key("chain.h", Kind::Float, Some("0")),
    key("chain.disorder_seed", Kind::Seed, Some("1")),
    required("noise.nu", Kind::Float),
    required("noise.rc", Kind::Float),
    key("noise.seed", Kind::Seed, Some("1")),
    key("ensemble.trajectories", Kind::Int, Some("100")),
    key("ensemble.dt", Kind::Float, Some("0.02")),
    key("ensemble.t_final", Kind::Float, Some("30")),
    key("ensemble.entropy_mode", Kind::Choice(&["per-trajectory", "averaged-state"]), Some("per-trajectory")),
    key("ensemble.error_groups", Kind::Int, Some("10")),
    key("init.preset", Kind::Choice(PRESETS), Some("single_center")),
    key("init.sites", Kind::Sites, None),
    key("analysis.observable", Kind::Choice(&["auto", "ipr", "ier"]), Some("auto")),
    key("analysis.window", Kind::Int, Some("25")),
    key("analysis.slope", Kind::Float, Some("0.002")),
    key("analysis.d_min", Kind::Float, Some("1")),
    key("analysis.cut", Kind::Int, None),
    key("analysis.imbalance_center", Kind::Int, None),
    key("output.eigenvalues", Kind::Bool, Some("false")),
    key("output.histogram", Kind::Bool, Some("false")),
    key("output.histogram_bin", Kind::Float, Some("0.1")),
];

fn spec_of(path: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.path == path)
}

fn invalid(path: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("`{path}`: {reason}"))
}

/// Raw, syntactically checked key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn strip_quotes(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Split `key = value` lines, skipping blanks and `#` comments.
pub(crate) fn split_lines(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
        out.push((i + 1, k.trim().to_string(), strip_quotes(v).to_string()));
    }
    Ok(out)
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (line, k, v) in split_lines(text)? {
            if spec_of(&k).is_none() {
                return Err(CliError::Validation(format!("line {line}: unknown key `{k}`")));
            }
            if raw.values.insert(k.clone(), v).is_some() {
                return Err(CliError::Validation(format!("line {line}: duplicate key `{k}`")));
            }
        }
        Ok(raw)
    }

    /// Read a flat config file, or the `config` object of a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let obj = v
                .get("config")
                .and_then(|c| c.as_object())
                .ok_or_else(|| CliError::Validation(format!("{}: no `config` object", path.display())))?;
            let mut raw = RawConfig::default();
            for (k, v) in obj {
                let v = v
                    .as_str()
                    .ok_or_else(|| invalid(k, "manifest values must be strings"))?;
                raw.set(k, v)?;
            }
            Ok(raw)
        } else {
            Self::parse(&text)
        }
    }

    pub fn set(&mut self, path: &str, value: &str) -> Result<(), CliError> {
        if spec_of(path).is_none() {
            return Err(CliError::Validation(format!("unknown key `{path}`")));
        }
        self.values.insert(path.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.values.get(path).map(String::as_str)
    }

    /// Apply `XXZ_SECTION_KEY` overrides from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), CliError> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let target = KEYS
                .iter()
                .find(|k| k.path.replace('.', "_").eq_ignore_ascii_case(rest))
                .ok_or_else(|| CliError::Validation(format!("environment variable {name} matches no config key")))?;
            self.values.insert(target.path.to_string(), value);
        }
        Ok(())
    }
}

fn parse_float(path: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| invalid(path, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(invalid(path, "must be finite"));
    }
    Ok(x)
}

fn parse_int(path: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| invalid(path, format!("expected a non-negative integer, got `{v}`")))
}

fn parse_seed(path: &str, v: &str) -> Result<u64, CliError> {
    v.parse().map_err(|_| invalid(path, format!("expected a 64-bit unsigned integer, got `{v}`")))
}

fn parse_bool(path: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(path, format!("expected true or false, got `{v}`"))),
    }
}

/// Parse a `[a, b, ...]` list; bare single values are accepted too.
pub(crate) fn parse_list(v: &str) -> Vec<String> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|s| strip_quotes(s).to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn check_value(spec: &KeySpec, v: &str) -> Result<(), CliError> {
    let p = spec.path;
    match spec.kind {
        Kind::Float => parse_float(p, v).map(drop),
        Kind::Int => parse_int(p, v).map(drop),
        Kind::Seed => parse_seed(p, v).map(drop),
        Kind::Bool => parse_bool(p, v).map(drop),
        Kind::Choice(options) => {
            if options.contains(&v) {
                Ok(())
            } else {
                Err(invalid(p, format!("expected one of {}, got `{v}`", options.join(", "))))
            }
        }
        Kind::Sites => {
            let items = parse_list(v);
            if items.is_empty() {
                return Err(invalid(p, "expected a list of 1-based sites"));
            }
            items.iter().try_for_each(|s| parse_int(p, s).map(drop))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Ipr,
    Ier,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Every key with its effective value, in declaration order.
    pub resolved: Vec<(&'static str, String)>,
    pub chain: ChainSpec,
    pub n_exc: usize,
    pub noise: NoiseSpec,
    pub ensemble: EnsembleSpec,
    pub init: InitialState,
    pub observable: Observable,
    pub plateau: PlateauConfig,
    /// 0-based imbalance centre.
    pub imbalance_center: Option<usize>,
    pub write_eigenvalues: bool,
    pub histogram_bin: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mut resolved = Vec::new();
        for spec in KEYS {
            let value = match (raw.get(spec.path), spec.default) {
                (Some(v), _) => v.to_string(),
                (None, Some(d)) => d.to_string(),
                (None, None) if spec.required => {
                    return Err(invalid(spec.path, "missing mandatory key"));
                }
                (None, None) => continue,
            };
            check_value(spec, &value)?;
            resolved.push((spec.path, value));
        }
        let get = |p: &str| resolved.iter().find(|(k, _)| *k == p).map(|(_, v)| v.as_str());
        let float = |p: &str| parse_float(p, get(p).unwrap());
        let int = |p: &str| parse_int(p, get(p).unwrap());
        let seed = |p: &str| parse_seed(p, get(p).unwrap());
        let boolean = |p: &str| parse_bool(p, get(p).unwrap());

        let n_sites = int("chain.n_sites")?;
        if !(1..=64).contains(&n_sites) {
            return Err(invalid("chain.n_sites", format!("must lie in 1..=64, got {n_sites}")));
        }
        let n_exc = int("chain.n_exc")?;
        if n_exc > n_sites {
            return Err(invalid("chain.n_exc", format!("must not exceed chain.n_sites = {n_sites}")));
        }
        let h = float("chain.h")?;
        if h < 0.0 {
            return Err(invalid("chain.h", "disorder half-width must be >= 0"));
        }
        let chain = ChainSpec::new(n_sites, float("chain.J")?, float("chain.delta")?, h, seed("chain.disorder_seed")?)
            .map_err(|e| invalid("chain", e))?;

        let nu = float("noise.nu")?;
        if nu < 0.0 {
            return Err(invalid("noise.nu", format!("must be >= 0, got {nu}")));
        }
        let rc = float("noise.rc")?;
        if rc < 0.0 {
            return Err(invalid("noise.rc", format!("must be >= 0, got {rc}")));
        }
        let noise = NoiseSpec::new(nu, rc, seed("noise.seed")?).map_err(|e| invalid("noise.nu", e))?;

        let m = int("ensemble.trajectories")?;
        if m == 0 {
            return Err(invalid("ensemble.trajectories", "at least one trajectory is required"));
        }
        let dt = float("ensemble.dt")?;
        if dt <= 0.0 {
            return Err(invalid("ensemble.dt", "must be positive"));
        }
        let t_final = float("ensemble.t_final")?;
        if t_final < dt {
            return Err(invalid("ensemble.t_final", format!("must be >= ensemble.dt = {dt}")));
        }
        let groups = int("ensemble.error_groups")?;
        if groups == 0 {
            return Err(invalid("ensemble.error_groups", "must be at least 1"));
        }
        let cut = match get("analysis.cut") {
            Some(v) => {
                let c = parse_int("analysis.cut", v)?;
                if c == 0 || c >= n_sites {
                    return Err(invalid("analysis.cut", format!("must lie in 1..{n_sites}, got {c}")));
                }
                Some(c)
            }
            None => None,
        };
        let mut ensemble = EnsembleSpec::new(m, dt, t_final).map_err(|e| invalid("ensemble", e))?;
        ensemble.cut = cut;
        ensemble.error_groups = groups;
        ensemble.entropy_mode = match get("ensemble.entropy_mode").unwrap() {
            "averaged-state" => EntropyMode::AveragedState,
            _ => EntropyMode::PerTrajectory,
        };

        let preset = get("init.preset").unwrap();
        let init = if preset == "explicit_sites" {
            let sites = get("init.sites").ok_or_else(|| invalid("init.sites", "required by init.preset = explicit_sites"))?;
            let sites = parse_list(sites)
                .iter()
                .map(|s| {
                    let i = parse_int("init.sites", s)?;
                    if i == 0 || i > n_sites {
                        return Err(invalid("init.sites", format!("1-based site {i} outside 1..={n_sites}")));
                    }
                    Ok(i - 1)
                })
                .collect::<Result<Vec<_>, _>>()?;
            InitialState::Sites(sites)
        } else {
            if get("init.sites").is_some() {
                return Err(invalid("init.sites", format!("only used with init.preset = explicit_sites, not {preset}")));
            }
            InitialState::parse(preset).unwrap()
        };
        init.sites(n_sites, n_exc).map_err(|e| invalid("init.preset", e))?;

        let observable = match get("analysis.observable").unwrap() {
            "ipr" if n_exc != 1 => return Err(invalid("analysis.observable", "ipr needs chain.n_exc = 1")),
            "ipr" => Observable::Ipr,
            "ier" => Observable::Ier,
            _ if n_exc == 1 => Observable::Ipr,
            _ => Observable::Ier,
        };
        let plateau = PlateauConfig {
            window: int("analysis.window")?,
            slope: float("analysis.slope")?,
            d_min: float("analysis.d_min")?,
        };
        if plateau.window == 0 {
            return Err(invalid("analysis.window", "must be at least 1"));
        }
        if plateau.window > ensemble.n_samples() {
            return Err(invalid(
                "analysis.window",
                format!("{} samples exceed the {} output samples", plateau.window, ensemble.n_samples()),
            ));
        }
        if plateau.slope < 0.0 {
            return Err(invalid("analysis.slope", "must be >= 0"));
        }
        if plateau.d_min < 0.0 {
            return Err(invalid("analysis.d_min", "must be >= 0"));
        }
        let imbalance_center = match get("analysis.imbalance_center") {
            Some(v) => {
                let c = parse_int("analysis.imbalance_center", v)?;
                if c == 0 || c > n_sites {
                    return Err(invalid("analysis.imbalance_center", format!("1-based site {c} outside 1..={n_sites}")));
                }
                Some(c - 1)
            }
            None if n_exc == 1 => Some(InitialState::SingleCenter.sites(n_sites, 1).unwrap()[0]),
            None => None,
        };
        let bin = float("output.histogram_bin")?;
        if bin <= 0.0 {
            return Err(invalid("output.histogram_bin", "must be positive"));
        }

        Ok(Self {
            chain,
            n_exc,
            noise,
            ensemble,
            init,
            observable,
            plateau,
            imbalance_center,
            write_eigenvalues: boolean("output.eigenvalues")?,
            histogram_bin: boolean("output.histogram")?.then_some(bin),
            resolved,
        })
    }

    pub fn value(&self, path: &str) -> Option<&str> {
        self.resolved.iter().find(|(k, _)| *k == path).map(|(_, v)| v.as_str())
    }

    /// The resolved configuration in the input file format.
    pub fn render(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Every declared key path.
pub fn key_paths() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|k| k.path)
}

/// Check that `path` is a known key and `value` has its type.
pub fn check_key_value(path: &str, value: &str) -> Result<(), CliError> {
    let spec = spec_of(path).ok_or_else(|| CliError::Validation(format!("unknown key `{path}`")))?;
    check_value(spec, value)
}
