//! Flat `key = value` experiment files.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma
//! separated. Time grids accept an explicit list, `log(a, b, n)` or
//! `lin(a, b, n)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use tempered_actrw_core::sampling::{JumpModel, TemperingStrategy, WaitingTimeModel, DEFAULT_T0};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sample,
    Renewal,
    Survival,
    Msd,
    Propagator,
    Response,
    Fpe,
}

impl Experiment {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sample" => Experiment::Sample,
            "renewal" => Experiment::Renewal,
            "survival" => Experiment::Survival,
            "msd" => Experiment::Msd,
            "propagator" => Experiment::Propagator,
            "response" => Experiment::Response,
            "fpe" => Experiment::Fpe,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sample => "sample",
            Experiment::Renewal => "renewal",
            Experiment::Survival => "survival",
            Experiment::Msd => "msd",
            Experiment::Propagator => "propagator",
            Experiment::Response => "response",
            Experiment::Fpe => "fpe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub title: String,
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub strategy: TemperingStrategy,
    pub t0: f64,
    pub t_as: Vec<f64>,
    pub ts: Vec<f64>,
    pub jump: JumpModel,
    pub n_traj: usize,
    pub seed: u64,
    /// renewal: moment order; survival: p0 or jump_probability
    pub quantity: String,
    pub moment: u32,
    pub draws: usize,
    pub us: Vec<f64>,
    pub bins: usize,
    pub half_width: Option<f64>,
    pub h: f64,
    pub nt: Option<usize>,
    pub x_widths: f64,
    pub memory_laplacian: bool,
    pub check_sigma: Option<f64>,
    pub check_l1: Option<f64>,
    pub plot_x: Axis,
    pub plot_y: Axis,
    pub output_dir: Option<String>,
    /// every key as written, for the summary
    pub raw: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "experiment",
    "title",
    "alpha",
    "lambda",
    "strategy",
    "t0",
    "t_a",
    "t",
    "jump",
    "m2",
    "c",
    "h",
    "n_traj",
    "seed",
    "quantity",
    "moment",
    "draws",
    "u",
    "bins",
    "half_width",
    "nt",
    "x_widths",
    "memory_laplacian",
    "check_sigma",
    "check_l1",
    "plot_x",
    "plot_y",
    "output_dir",
];

fn bad(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, RunError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value, got `{line}`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(bad(format!("line {}: unknown key `{k}`", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(bad(format!("line {}: key `{k}` given twice", no + 1)));
        }
    }
    Ok(out)
}

fn number(key: &str, s: &str) -> Result<f64, RunError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(format!("{key}: `{s}` is not a number")))
}

fn count(key: &str, s: &str) -> Result<usize, RunError> {
    let v = number(key, s)?;
    if v < 0.0 || v.fract() != 0.0 || v > 1e12 {
        return Err(bad(format!("{key}: `{s}` is not a count")));
    }
    Ok(v as usize)
}

fn list(key: &str, s: &str) -> Result<Vec<f64>, RunError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    for (name, log) in [("log", true), ("lin", false)] {
        if let Some(inner) = s.strip_prefix(name).map(str::trim).and_then(|r| r.strip_prefix('(')) {
            let inner = inner
                .strip_suffix(')')
                .ok_or_else(|| bad(format!("{key}: unclosed `{name}(`")))?;
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 3 {
                return Err(bad(format!("{key}: {name}(start, stop, count) needs three arguments")));
            }
            let (a, b, n) = (number(key, parts[0])?, number(key, parts[1])?, count(key, parts[2])?);
            if n < 2 || !(b > a) || (log && !(a > 0.0)) {
                return Err(bad(format!("{key}: {name}({a}, {b}, {n}) is not an increasing grid")));
            }
            return Ok((0..n)
                .map(|i| {
                    let f = i as f64 / (n - 1) as f64;
                    if i == n - 1 {
                        b
                    } else if log {
                        a * (b / a).powf(f)
                    } else {
                        a + (b - a) * f
                    }
                })
                .collect());
        }
    }
    s.split(',').map(|p| number(key, p)).collect()
}

fn axis(key: &str, s: &str) -> Result<Axis, RunError> {
    match s {
        "log" => Ok(Axis::Log),
        "linear" | "lin" => Ok(Axis::Linear),
        _ => Err(bad(format!("{key}: expected log or linear, got `{s}`"))),
    }
}

fn flag(key: &str, s: &str) -> Result<bool, RunError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(format!("{key}: expected true or false, got `{s}`"))),
    }
}

fn increasing(key: &str, v: &[f64]) -> Result<(), RunError> {
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad(format!("{key} must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RunError> {
        let raw = parse_pairs(text)?;
        let get = |k: &str| raw.get(k).map(String::as_str);
        let experiment = get("experiment").ok_or_else(|| bad("missing key `experiment`"))?;
        let experiment =
            Experiment::parse(experiment).ok_or_else(|| bad(format!("unknown experiment `{experiment}`")))?;

        let alpha = number("alpha", get("alpha").unwrap_or("0.6"))?;
        let lambdas = list("lambda", get("lambda").ok_or_else(|| bad("missing key `lambda`"))?)?;
        if lambdas.is_empty() {
            return Err(bad("lambda list is empty"));
        }
        let strategy = match get("strategy").unwrap_or("tilt") {
            "tilt" | "exp_tilt_rejection" => TemperingStrategy::ExpTiltRejection,
            "envelope" | "powerlaw_envelope" => TemperingStrategy::PowerlawEnvelope,
            s => return Err(bad(format!("strategy: expected tilt or envelope, got `{s}`"))),
        };
        let t0 = get("t0").map(|s| number("t0", s)).transpose()?.unwrap_or(DEFAULT_T0);

        let needs_window = !matches!(experiment, Experiment::Sample);
        let t_as = get("t_a").map(|s| list("t_a", s)).transpose()?.unwrap_or_default();
        let ts = get("t").map(|s| list("t", s)).transpose()?.unwrap_or_default();
        if needs_window {
            if t_as.is_empty() {
                return Err(bad("t_a list is empty"));
            }
            if ts.is_empty() {
                return Err(bad("t grid is empty"));
            }
            increasing("t", &ts)?;
        }

        let jump = match get("jump").unwrap_or(if experiment == Experiment::Response { "lattice" } else { "gaussian" }) {
            "gaussian" => JumpModel::gaussian(number("m2", get("m2").unwrap_or("1"))?),
            "lattice" => JumpModel::lattice(number("c", get("c").unwrap_or("1"))?, 0.0),
            s => return Err(bad(format!("jump: expected gaussian or lattice, got `{s}`"))),
        }
        .map_err(|e| bad(e.to_string()))?;
        let h = number("h", get("h").unwrap_or("0"))?;

        let default_quantity = match experiment {
            Experiment::Survival => "p0",
            Experiment::Renewal => "mean_count",
            _ => "",
        };
        let quantity = get("quantity").unwrap_or(default_quantity).to_string();
        let moment = match (experiment, quantity.as_str()) {
            (Experiment::Survival, "p0" | "jump_probability") => 0,
            (Experiment::Renewal, "mean_count") => 1,
            (Experiment::Renewal, "second_moment") => 2,
            (Experiment::Survival | Experiment::Renewal, q) => {
                return Err(bad(format!("quantity `{q}` is not available for {}", experiment.name())))
            }
            (_, "") => 0,
            (_, q) => return Err(bad(format!("quantity `{q}` is not available for {}", experiment.name()))),
        };

        let n_traj = count("n_traj", get("n_traj").unwrap_or("0"))?;
        if n_traj == 0 && experiment != Experiment::Fpe {
            return Err(bad("n_traj must be positive"));
        }
        let seed = get("seed")
            .unwrap_or("1")
            .parse::<u64>()
            .map_err(|_| bad("seed must be a non-negative integer"))?;

        let us = get("u").map(|s| list("u", s)).transpose()?.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
        if us.iter().any(|&u| !(u > 0.0)) {
            return Err(bad("u values must be positive"));
        }

        let (default_x, default_y) = match experiment {
            Experiment::Sample => (Axis::Linear, Axis::Log),
            Experiment::Propagator | Experiment::Fpe => (Axis::Linear, Axis::Log),
            Experiment::Response => (Axis::Linear, Axis::Linear),
            _ => (Axis::Log, Axis::Log),
        };

        let cfg = ExperimentConfig {
            experiment,
            title: get("title").unwrap_or(experiment.name()).to_string(),
            alpha,
            lambdas,
            strategy,
            t0,
            t_as,
            ts,
            jump,
            n_traj,
            seed,
            quantity,
            moment,
            draws: count("draws", get("draws").unwrap_or("100"))?,
            us,
            bins: count("bins", get("bins").unwrap_or("201"))?,
            half_width: get("half_width").map(|s| number("half_width", s)).transpose()?,
            h,
            nt: get("nt").map(|s| count("nt", s)).transpose()?,
            x_widths: number("x_widths", get("x_widths").unwrap_or("8"))?,
            memory_laplacian: flag("memory_laplacian", get("memory_laplacian").unwrap_or("true"))?,
            check_sigma: get("check_sigma").map(|s| number("check_sigma", s)).transpose()?,
            check_l1: get("check_l1").map(|s| number("check_l1", s)).transpose()?,
            plot_x: get("plot_x").map(|s| axis("plot_x", s)).transpose()?.unwrap_or(default_x),
            plot_y: get("plot_y").map(|s| axis("plot_y", s)).transpose()?.unwrap_or(default_y),
            output_dir: get("output_dir").map(str::to_string),
            raw: raw.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), RunError> {
        for &l in &self.lambdas {
            self.model(l)?;
        }
        if self.t_as.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(bad("t_a values must be finite and non-negative"));
        }
        if self.ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(bad("t values must be finite and positive"));
        }
        match self.experiment {
            Experiment::Msd | Experiment::Propagator | Experiment::Fpe if !self.jump.is_symmetric() => {
                return Err(bad("this experiment needs symmetric jumps"));
            }
            Experiment::Response => {
                if !matches!(self.jump, JumpModel::Lattice { .. }) {
                    return Err(bad("the response experiment uses lattice jumps"));
                }
                if !(0.0..1.0).contains(&self.h) {
                    return Err(bad(format!("bias h = {} must lie in [0, 1)", self.h)));
                }
            }
            Experiment::Fpe if self.ts.len() != 1 && self.nt.is_some() => {
                return Err(bad("fpe with an explicit nt takes a single t"));
            }
            _ => {}
        }
        if self.bins == 0 {
            return Err(bad("bins must be positive"));
        }
        if !(self.x_widths > 0.0) {
            return Err(bad("x_widths must be positive"));
        }
        Ok(())
    }

    pub fn model(&self, lambda: f64) -> Result<WaitingTimeModel, RunError> {
        let m = match self.strategy {
            TemperingStrategy::ExpTiltRejection => WaitingTimeModel::new(self.alpha, lambda),
            TemperingStrategy::PowerlawEnvelope => WaitingTimeModel::with_envelope(self.alpha, lambda, self.t0),
        };
        m.map_err(|e| bad(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(list("t", "1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let g = list("t", "log(1, 1000, 4)").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && g[3] == 1000.0);
        assert_eq!(list("t", "lin(1, 5, 5)").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(list("t", "log(0, 5, 5)").is_err());
        assert!(list("t", "lin(1, 5)").is_err());
    }

    #[test]
    fn rejects_bad_files() {
        let base = "experiment = survival\nlambda = 1e-4\nt_a = 10\nn_traj = 10\n";
        assert!(ExperimentConfig::parse(&format!("{base}t = 1, 2")).is_ok());
        assert!(ExperimentConfig::parse(&format!("{base}t =")).is_err());
        assert!(ExperimentConfig::parse(&format!("{base}t = 2, 1")).is_err());
        assert!(ExperimentConfig::parse(&format!("{base}t = 1\nfoo = 2")).is_err());
        assert!(ExperimentConfig::parse(&format!("{base}t = 1\nalpha = 1.5")).is_err());
        assert!(ExperimentConfig::parse("experiment = walk\nlambda = 1").is_err());
    }
}
