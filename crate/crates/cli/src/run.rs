//! Experiment pipelines: Monte Carlo, theory columns and built-in checks.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use tempered_actrw_core::actrw::{
    msd_theory, propagator_mc, propagator_theory, response_experiment, fluctuation_response_theory, PropagatorBins,
    PropagatorRegime, ResponseExperiment, WalkEnsemble,
};
use tempered_actrw_core::ensemble::{derive_seed, mean_and_se, stream_rng};
use tempered_actrw_core::fpe::{max_stable_steps, solve_tempered_fpe_with, FpeGrid, FpeOptions};
use tempered_actrw_core::renewal::{
    renewal_moment_theory, survival_probability_theory, Aging, AgingWindow, CountEnsemble, Regime, TheoryMode,
};
use tempered_actrw_core::sampling::{JumpModel, WaitingTimeModel};
use tempered_actrw_core::Error;

use crate::config::{Experiment, ExperimentConfig};
use crate::RunError;

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: &'static str,
    pub quantity: String,
    pub alpha: f64,
    pub lambda: f64,
    pub t_a: Option<f64>,
    pub t: Option<f64>,
    pub x: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub theory_exact: Option<f64>,
    pub theory_asymptotic: Option<f64>,
    pub regime: String,
    #[serde(skip)]
    pub checked: bool,
    #[serde(skip)]
    pub n_traj: usize,
}

pub const COLUMNS: [&str; 12] = [
    "experiment",
    "quantity",
    "alpha",
    "lambda",
    "t_a",
    "t",
    "x",
    "mc_estimate",
    "std_error",
    "theory_exact",
    "theory_asymptotic",
    "regime",
];

impl Row {
    fn new(cfg: &ExperimentConfig, quantity: &str, lambda: f64) -> Self {
        Row {
            experiment: cfg.experiment.name(),
            quantity: quantity.to_string(),
            alpha: cfg.alpha,
            lambda,
            t_a: None,
            t: None,
            x: None,
            mc_estimate: None,
            std_error: None,
            theory_exact: None,
            theory_asymptotic: None,
            regime: String::new(),
            checked: false,
            n_traj: cfg.n_traj,
        }
    }

    fn window(mut self, model: &WaitingTimeModel, w: &AgingWindow) -> Self {
        self.t_a = Some(w.t_a);
        self.t = Some(w.t);
        self.regime = Regime::classify(model, w).label();
        self
    }

    fn mc(mut self, estimate: f64, se: f64) -> Self {
        self.mc_estimate = Some(estimate);
        self.std_error = Some(se);
        self
    }

    pub fn record(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.experiment.to_string(),
            self.quantity.clone(),
            self.alpha.to_string(),
            self.lambda.to_string(),
            f(self.t_a),
            f(self.t),
            f(self.x),
            f(self.mc_estimate),
            f(self.std_error),
            f(self.theory_exact),
            f(self.theory_asymptotic),
            self.regime.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Extra files written next to `results.csv`.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub extras: Value,
    pub artifacts: Vec<Artifact>,
    /// quantity drawn in `plot.svg`
    pub plot_quantity: String,
}

fn numerics(e: Error) -> RunError {
    if e.is_numerical() {
        RunError::Numerics(e.to_string())
    } else {
        RunError::Config(e.to_string())
    }
}

// asymptotic columns are blank outside their regime
fn optional(r: Result<f64, Error>) -> Result<Option<f64>, RunError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::RegimeAmbiguous(_)) => Ok(None),
        Err(e) => Err(numerics(e)),
    }
}

fn window(t_a: f64, t: f64) -> Result<AgingWindow, RunError> {
    AgingWindow::new(t_a, t).map_err(|e| RunError::Config(e.to_string()))
}

/// Base seed of the `cell`-th parameter cell of a run.
pub fn cell_seed(seed: u64, cell: usize) -> u64 {
    derive_seed(seed, cell as u64 + 1)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mut out = match cfg.experiment {
        Experiment::Sample => sample(cfg)?,
        Experiment::Renewal | Experiment::Survival => counts(cfg)?,
        Experiment::Msd => msd(cfg)?,
        Experiment::Propagator => propagator(cfg)?,
        Experiment::Response => response(cfg)?,
        Experiment::Fpe => fpe(cfg)?,
    };
    if let Some(k) = cfg.check_sigma {
        out.checks.push(sigma_check(&out.rows, k));
    }
    Ok(out)
}

fn sigma_check(rows: &[Row], k: f64) -> Check {
    let mut worst = 0.0f64;
    let mut failed = vec![];
    let mut n = 0;
    for r in rows.iter().filter(|r| r.checked) {
        let (Some(mc), Some(se), Some(th)) = (r.mc_estimate, r.std_error, r.theory_exact) else {
            continue;
        };
        n += 1;
        // an ensemble that agrees unanimously still has resolution 1/n
        let se = se.max(1.0 / r.n_traj.max(1) as f64);
        let z = (mc - th).abs() / se;
        worst = worst.max(z);
        if !(z <= k) {
            failed.push(format!(
                "{} at lambda={} t_a={:?} t={:?} x={:?}: {mc} vs {th} ({z:.2} se)",
                r.quantity, r.lambda, r.t_a, r.t, r.x
            ));
        }
    }
    Check {
        name: format!("mc_within_{k}_se_of_exact"),
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{n} cells, largest deviation {worst:.2} se")
        } else {
            format!("{} of {n} cells fail: {}", failed.len(), failed.join("; "))
        },
    }
}

fn l1_check(name: &str, l1: f64, bound: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: l1 < bound,
        detail: format!("L1 = {l1:.5} (bound {bound})"),
    }
}

fn sample(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    for (cell, &lambda) in cfg.lambdas.iter().enumerate() {
        let m = cfg.model(lambda)?;
        let mut rng = stream_rng(cell_seed(cfg.seed, cell), 0);
        let xs: Vec<f64> = (0..cfg.n_traj).map(|_| m.sample(&mut rng)).collect::<Result<_, _>>().map_err(numerics)?;
        for (k, &x) in xs.iter().take(cfg.draws).enumerate() {
            let mut r = Row::new(cfg, "draw", lambda);
            r.x = Some((k + 1) as f64);
            r.mc_estimate = Some(x);
            rows.push(r);
        }
        for &u in &cfg.us {
            let v: Vec<f64> = xs.iter().map(|x| (-u * x).exp()).collect();
            let (mean, se) = mean_and_se(&v);
            let mut r = Row::new(cfg, "laplace_transform", lambda).mc(mean, se);
            r.x = Some(u);
            r.theory_exact = Some((m.lambda_alpha() - (u + lambda).powf(cfg.alpha)).exp());
            r.checked = true;
            rows.push(r);
        }
        let (mean, se) = mean_and_se(&xs);
        let mut r = Row::new(cfg, "mean_waiting_time", lambda).mc(mean, se);
        r.theory_exact = (lambda > 0.0).then(|| m.mean());
        rows.push(r);
    }
    Ok(Outcome {
        rows,
        checks: vec![],
        extras: json!({}),
        artifacts: vec![],
        plot_quantity: "draw".into(),
    })
}

fn counts(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut cell = 0;
    for &lambda in &cfg.lambdas {
        let m = cfg.model(lambda)?;
        for &t_a in &cfg.t_as {
            let ens = CountEnsemble::simulate(&m, t_a, &cfg.ts, cfg.n_traj, cell_seed(cfg.seed, cell)).map_err(numerics)?;
            cell += 1;
            let theory: Vec<(f64, Option<f64>)> = cfg
                .ts
                .par_iter()
                .map(|&t| {
                    let w = window(t_a, t)?;
                    if cfg.experiment == Experiment::Survival {
                        let exact = survival_probability_theory(&m, &w, TheoryMode::Exact).map_err(numerics)?;
                        Ok((exact, optional(survival_probability_theory(&m, &w, TheoryMode::Asymptotic))?))
                    } else {
                        let p = cfg.moment as f64;
                        let exact = renewal_moment_theory(&m, &w, p, TheoryMode::Exact).map_err(numerics)?;
                        Ok((exact, optional(renewal_moment_theory(&m, &w, p, TheoryMode::Asymptotic))?))
                    }
                })
                .collect::<Result<_, RunError>>()?;
            for (k, &t) in cfg.ts.iter().enumerate() {
                let w = window(t_a, t)?;
                let (mut exact, mut asym) = theory[k];
                let est = if cfg.experiment == Experiment::Survival {
                    ens.survival(k)
                } else {
                    ens.moment(k, cfg.moment as f64)
                };
                let mut mc = est.estimate;
                if cfg.quantity == "jump_probability" {
                    mc = 1.0 - mc;
                    exact = 1.0 - exact;
                    asym = asym.map(|v| 1.0 - v);
                }
                let mut r = Row::new(cfg, &cfg.quantity, lambda).window(&m, &w).mc(mc, est.std_error);
                r.theory_exact = Some(exact);
                r.theory_asymptotic = asym;
                r.checked = true;
                rows.push(r);
            }
        }
    }
    Ok(Outcome {
        rows,
        checks: vec![],
        extras: json!({}),
        artifacts: vec![],
        plot_quantity: cfg.quantity.clone(),
    })
}

fn msd(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut cell = 0;
    for &lambda in &cfg.lambdas {
        let m = cfg.model(lambda)?;
        for &t_a in &cfg.t_as {
            let ens = WalkEnsemble::simulate(&m, &cfg.jump, t_a, &cfg.ts, cfg.n_traj, cell_seed(cfg.seed, cell))
                .map_err(numerics)?;
            cell += 1;
            let theory: Vec<(f64, Option<f64>)> = cfg
                .ts
                .par_iter()
                .map(|&t| {
                    let w = window(t_a, t)?;
                    let exact = msd_theory(&m, &cfg.jump, &w, TheoryMode::Exact).map_err(numerics)?;
                    Ok((exact, optional(msd_theory(&m, &cfg.jump, &w, TheoryMode::Asymptotic))?))
                })
                .collect::<Result<_, RunError>>()?;
            for (k, &t) in cfg.ts.iter().enumerate() {
                let est = ens.msd(k);
                let mut r = Row::new(cfg, "msd", lambda)
                    .window(&m, &window(t_a, t)?)
                    .mc(est.estimate, est.std_error);
                r.theory_exact = Some(theory[k].0);
                r.theory_asymptotic = theory[k].1;
                r.checked = true;
                rows.push(r);
            }
        }
    }
    Ok(Outcome {
        rows,
        checks: vec![],
        extras: json!({}),
        artifacts: vec![],
        plot_quantity: "msd".into(),
    })
}

fn regime_form(m: &WaitingTimeModel, w: &AgingWindow) -> Option<PropagatorRegime> {
    match Regime::classify(m, w).aging {
        Aging::Weak => Some(PropagatorRegime::WeakAging),
        Aging::Strong => Some(PropagatorRegime::StrongAging),
        Aging::Intermediate => None,
    }
}

fn propagator(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mut rows = vec![];
    let mut checks = vec![];
    let mut cell = 0;
    for &lambda in &cfg.lambdas {
        let m = cfg.model(lambda)?;
        for &t_a in &cfg.t_as {
            for &t in &cfg.ts {
                let w = window(t_a, t)?;
                let bins = match cfg.half_width {
                    Some(hw) => PropagatorBins::new(cfg.bins, hw),
                    None => PropagatorBins::around_msd(&m, &cfg.jump, &w)
                        .and_then(|b| PropagatorBins::new(cfg.bins, b.half_width)),
                }
                .map_err(numerics)?;
                let hist = propagator_mc(&m, &cfg.jump, &w, cfg.n_traj, bins, cell_seed(cfg.seed, cell)).map_err(numerics)?;
                cell += 1;
                let centers = hist.centers();
                let form = regime_form(&m, &w);
                let theory: Vec<Option<f64>> = centers
                    .par_iter()
                    .map(|&x| match form {
                        Some(f) => propagator_theory(&m, &cfg.jump, x, &w, f).map(Some).map_err(numerics),
                        None => Ok(None),
                    })
                    .collect::<Result<_, RunError>>()?;
                let dens = hist.densities();
                let n = cfg.n_traj as f64;
                let mut l1 = 0.0;
                for (i, &x) in centers.iter().enumerate() {
                    let width = hist.bin_edges[i + 1] - hist.bin_edges[i];
                    let p = hist.masses[i];
                    let mut r = Row::new(cfg, "density", lambda)
                        .window(&m, &w)
                        .mc(dens[i], (p * (1.0 - p) / n).sqrt() / width);
                    r.x = Some(x);
                    r.theory_asymptotic = theory[i];
                    if let Some(th) = theory[i] {
                        l1 += (p - th * width).abs();
                    }
                    rows.push(r);
                }
                let a = hist.atom_at_zero;
                let mut r = Row::new(cfg, "atom", lambda).window(&m, &w).mc(a, (a * (1.0 - a) / n).sqrt());
                r.x = Some(0.0);
                r.theory_exact = Some(survival_probability_theory(&m, &w, TheoryMode::Exact).map_err(numerics)?);
                r.theory_asymptotic = optional(survival_probability_theory(&m, &w, TheoryMode::Asymptotic))?;
                r.checked = true;
                rows.push(r);
                if let (Some(bound), Some(_)) = (cfg.check_l1, form) {
                    checks.push(l1_check(&format!("propagator_l1 lambda={lambda} t_a={t_a} t={t}"), l1, bound));
                }
            }
        }
    }
    Ok(Outcome {
        rows,
        checks,
        extras: json!({}),
        artifacts: vec![],
        plot_quantity: "density".into(),
    })
}

fn response(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let JumpModel::Lattice { c, .. } = cfg.jump else {
        return Err(RunError::Config("the response experiment uses lattice jumps".into()));
    };
    let mut rows = vec![];
    let mut records = vec![];
    let mut cell = 0;
    for &lambda in &cfg.lambdas {
        let m = cfg.model(lambda)?;
        for &t_a in &cfg.t_as {
            for &t_b in &cfg.ts {
                let w = window(t_a, t_b)?;
                let exp = ResponseExperiment::new(m, c, cfg.h, t_a, t_b).map_err(numerics)?;
                let rec = response_experiment(&exp, cfg.n_traj, cell_seed(cfg.seed, cell)).map_err(numerics)?;
                cell += 1;
                let base = Row::new(cfg, "", lambda).window(&m, &w);
                let row = |q: &str| Row {
                    quantity: q.to_string(),
                    ..base.clone()
                };

                rows.push(row("mean_x_b").mc(rec.mean_x_b, rec.mean_x_b_se));

                let mut r = row("mean_r2_unbiased").mc(rec.mean_r2_aging, rec.mean_r2_aging_se);
                r.theory_exact = Some(c * c * renewal_moment_theory(&m, &w, 1.0, TheoryMode::Exact).map_err(numerics)?);
                r.theory_asymptotic = optional(renewal_moment_theory(&m, &w, 1.0, TheoryMode::Asymptotic))?.map(|v| c * c * v);
                r.checked = true;
                rows.push(r);

                let limit = optional(fluctuation_response_theory(&m, t_a, t_b))?;
                let mut r = row("counting_ratio").mc(rec.counting_ratio, rec.counting_ratio_se);
                r.theory_asymptotic = limit;
                rows.push(r);
                let mut r = row("f_r").mc(rec.f_r_mc, rec.counting_ratio_se);
                r.theory_asymptotic = limit.map(|v| v - 1.0);
                rows.push(r);

                if let Some(ratio) = rec.einstein_ratio {
                    // independent ensembles, so relative errors add in quadrature
                    let rel = ((rec.mean_x_b_se / rec.mean_x_b).powi(2)
                        + (rec.mean_r2_aging_se / rec.mean_r2_aging).powi(2))
                    .sqrt();
                    let mut r = row("einstein_ratio").mc(ratio, ratio.abs() * rel);
                    r.theory_exact = Some(1.0);
                    r.checked = true;
                    rows.push(r);
                }
                records.push(json!({ "lambda": lambda, "t_a": t_a, "t_b": t_b, "record": rec }));
            }
        }
    }
    Ok(Outcome {
        rows,
        checks: vec![],
        extras: json!({ "response": records }),
        artifacts: vec![],
        plot_quantity: "counting_ratio".into(),
    })
}

fn fpe(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let m2 = cfg.jump.second_moment();
    let opts = FpeOptions {
        keep_memory_laplacian: cfg.memory_laplacian,
        ..FpeOptions::default()
    };
    let horizon = *cfg.ts.last().expect("validated non-empty");
    let mut rows = vec![];
    let mut checks = vec![];
    let mut extras = vec![];
    let mut artifacts = vec![];
    let mut cell = 0;
    for &lambda in &cfg.lambdas {
        let m = cfg.model(lambda)?;
        for &t_a in &cfg.t_as {
            let w = window(t_a, horizon)?;
            let msd = msd_theory(&m, &cfg.jump, &w, TheoryMode::Exact).map_err(numerics)?;
            let grid = if cfg.memory_laplacian {
                let nt = cfg.nt.unwrap_or_else(|| max_stable_steps(&m, horizon));
                FpeGrid::lattice(m, w, m2, msd, cfg.x_widths, nt)
            } else {
                let dx = 0.5 * (2.0 * m2).sqrt();
                let half = (cfg.x_widths * msd.sqrt() / dx).ceil() as usize;
                let nt = cfg.nt.unwrap_or((4.0 * horizon).ceil() as usize);
                FpeGrid::new(m, w, m2, half as f64 * dx, 2 * half + 1, nt)
            }
            .map_err(numerics)?;
            let sol = solve_tempered_fpe_with(&grid, &opts).map_err(numerics)?;
            let seed = cell_seed(cfg.seed, cell);
            cell += 1;

            // requested times snapped to solver steps
            let mut steps: Vec<usize> = cfg
                .ts
                .iter()
                .map(|&t| ((t / grid.dt).round() as usize).clamp(1, grid.nt))
                .collect();
            steps.dedup();
            let step_t = |k: usize| if k == grid.nt { horizon } else { k as f64 * grid.dt };
            let ts: Vec<f64> = steps.iter().map(|&k| step_t(k)).collect();

            let walkers = if cfg.n_traj > 0 {
                Some(WalkEnsemble::simulate(&m, &cfg.jump, t_a, &ts, cfg.n_traj, seed).map_err(numerics)?)
            } else {
                None
            };
            let exact_p0: Vec<f64> = ts
                .par_iter()
                .map(|&t| survival_probability_theory(&m, &window(t_a, t)?, TheoryMode::Exact).map_err(numerics))
                .collect::<Result<_, RunError>>()?;

            let mut worst_bridge = 0.0f64;
            for (j, &k) in steps.iter().enumerate() {
                let wk = window(t_a, ts[j])?;
                let mut r = Row::new(cfg, "p0", lambda).window(&m, &wk);
                if let Some(ens) = &walkers {
                    let e = ens.motionless(j);
                    r = r.mc(e.estimate, e.std_error);
                }
                r.theory_exact = Some(exact_p0[j]);
                r.theory_asymptotic = Some(sol.p0_series[k]);
                r.checked = true;
                if k >= 10 {
                    worst_bridge = worst_bridge.max((sol.p0_series[k] / exact_p0[j] - 1.0).abs());
                }
                rows.push(r);
            }
            checks.push(Check {
                name: format!("fpe_mass_bridge lambda={lambda} t_a={t_a}"),
                passed: worst_bridge < 0.02,
                detail: format!("largest relative gap between p0_series and exact P0: {worst_bridge:.3e}"),
            });

            let dx = grid.dx();
            let mut cells = vec![0.0; grid.nx];
            if let Some(ens) = &walkers {
                let last = ts.len() - 1;
                for rec in ens.records.iter().map(|r| r[last]).filter(|r| r.moved) {
                    let i = ((rec.x_final - grid.x_min) / dx + 0.5).floor().clamp(0.0, (grid.nx - 1) as f64) as usize;
                    cells[i] += 1.0 / cfg.n_traj as f64;
                }
            }
            let mut l1 = 0.0;
            for (i, (&x, &p)) in grid.xs().iter().zip(sol.terminal()).enumerate() {
                let mut r = Row::new(cfg, "density", lambda).window(&m, &w);
                r.x = Some(x);
                if walkers.is_some() {
                    let q = cells[i];
                    r = r.mc(q / dx, (q * (1.0 - q) / cfg.n_traj as f64).sqrt() / dx);
                    l1 += (q - p * dx).abs();
                }
                r.theory_asymptotic = Some(p);
                rows.push(r);
            }
            if let (Some(bound), true) = (cfg.check_l1, walkers.is_some()) {
                checks.push(l1_check(&format!("fpe_l1 lambda={lambda} t_a={t_a} t={horizon}"), l1, bound));
            }

            let suffix = if cfg.lambdas.len() * cfg.t_as.len() > 1 {
                format!("_{}", cell - 1)
            } else {
                String::new()
            };
            let mut csv = Vec::new();
            sol.write_csv(&mut csv, (grid.nt / 50).max(1)).map_err(numerics)?;
            artifacts.push(Artifact {
                name: format!("fpe_density{suffix}.csv"),
                contents: csv,
            });
            artifacts.push(Artifact {
                name: format!("fpe_summary{suffix}.json"),
                contents: sol.summary_json().map_err(numerics)?.into_bytes(),
            });
            extras.push(json!({
                "lambda": lambda,
                "t_a": t_a,
                "dx": dx,
                "dt": grid.dt,
                "nx": grid.nx,
                "nt": grid.nt,
                "memory_laplacian": cfg.memory_laplacian,
                "l1_vs_walkers": walkers.as_ref().map(|_| l1),
            }));
        }
    }
    Ok(Outcome {
        rows,
        checks,
        extras: json!({ "fpe": extras }),
        artifacts,
        plot_quantity: "density".into(),
    })
}
