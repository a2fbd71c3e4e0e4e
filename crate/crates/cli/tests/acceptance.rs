//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use tempered_actrw_core::actrw::{
    response_experiment, simulate_walk, ResponseExperiment, WalkEnsemble,
};
use tempered_actrw_core::ensemble::{mean_and_se, run_trajectories};
use tempered_actrw_core::fpe::{gl_tempered_weights, grunwald_weights, solve_tempered_fpe, FpeGrid};
use tempered_actrw_core::mlf::{g_aux, gamma};
use tempered_actrw_core::actrw::msd_theory;
use tempered_actrw_core::renewal::{
    mean_renewals_theory, survival_probability_theory, AgingWindow, CountEnsemble, Regime, TheoryMode,
};
use tempered_actrw_core::sampling::{sample_tempered_waiting, JumpModel, WaitingTimeModel};

type Outcome = Result<(bool, String), String>;

fn model(lambda: f64) -> WaitingTimeModel {
    WaitingTimeModel::new(0.6, lambda).unwrap()
}

fn window(t_a: f64, t: f64) -> AgingWindow {
    AgingWindow::new(t_a, t).unwrap()
}

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b / a).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Least-squares line y = a + b x; returns (a, b, R²).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b, sxy * sxy / (sxx * syy))
}

fn log_slope(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (a, b, _) = linear_fit(&lx, &ly);
    (a.exp(), b)
}

fn sampler_fidelity() -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    for (i, &lambda) in [0.0, 1e-4, 1e-2, 0.1, 10.0].iter().enumerate() {
        let m = model(lambda);
        let xs = run_trajectories(1_000_000, 7000 + i as u64, |rng| sample_tempered_waiting(&m, &mut rng.clock))
            .map_err(|e| e.to_string())?;
        for &u in &[0.5, 1.0, 2.0] {
            let vals: Vec<f64> = xs.iter().map(|x| (-u * x).exp()).collect();
            let (mean, se) = mean_and_se(&vals);
            let want = (lambda.powf(0.6) - (u + lambda).powf(0.6)).exp();
            let z = (mean - want).abs() / se;
            worst = worst.max(z);
            ok &= z < 4.0;
        }
    }
    Ok((ok, format!("15 cells, worst |z| = {worst:.2} (limit 4)")))
}

fn mean_waiting_time() -> Outcome {
    let m = model(0.1);
    let want = 0.6 * 0.1f64.powf(-0.4);
    let xs = run_trajectories(1_000_000, 7100, |rng| sample_tempered_waiting(&m, &mut rng.clock)).map_err(|e| e.to_string())?;
    let (mean, se) = mean_and_se(&xs);
    let rel = mean / want - 1.0;
    Ok((
        rel.abs() < 0.01 && (want - 1.5071).abs() < 1e-4,
        format!("sample mean {mean:.4} ± {se:.4} vs {want:.4} ({:+.2}%)", 100.0 * rel),
    ))
}

fn survival_fit_coefficient() -> Outcome {
    let m = model(1e-4);
    let ts = log_grid(10.0, 1000.0, 9);
    let ens = CountEnsemble::simulate(&m, 1e5, &ts, 5000, 7200).map_err(|e| e.to_string())?;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, t) in ts.iter().enumerate() {
        let x = t.powf(0.4);
        num += (1.0 - ens.survival(k).estimate) * x;
        den += x * x;
    }
    let c = num / den;
    let law = 1.0 / (m.mean() * gamma(1.4));
    Ok((
        (c - 0.047).abs() <= 0.005,
        format!("C = {c:.4} at t_a = 1e5 (target 0.047 ± 0.005; 1/(<tau>Gamma(1.4)) = {law:.4})"),
    ))
}

fn survival_decay_slope() -> Outcome {
    let t_a = 500.0;
    let ts = log_grid(5e3, 5e4, 6);
    let rel: Vec<f64> = ts.iter().map(|t| t / t_a).collect();
    let want = (0.6 * std::f64::consts::PI).sin() / (0.6 * std::f64::consts::PI);
    let mut ok = true;
    let mut parts = vec![];
    for (i, &lambda) in [0.0, 1e-8, 1e-6].iter().enumerate() {
        let ens = CountEnsemble::simulate(&model(lambda), t_a, &ts, 100_000, 7300 + i as u64).map_err(|e| e.to_string())?;
        let p0: Vec<f64> = (0..ts.len()).map(|k| ens.survival(k).estimate).collect();
        let (amp, slope) = log_slope(&rel, &p0);
        ok &= (slope + 0.6).abs() <= 0.05 && (amp / want - 1.0).abs() <= 0.1;
        parts.push(format!("lambda={lambda:e}: slope {slope:.3}, amplitude {amp:.3} ({:+.1}%)", 100.0 * (amp / want - 1.0)));
    }
    Ok((ok, format!("{} (targets -0.6 ± 0.05 and {want:.3} ± 10%)", parts.join("; "))))
}

fn strong_aging_mean_count() -> Outcome {
    let ts = [1.0, 2.0, 3.0, 4.0, 5.0];
    let mut ok = true;
    let mut worst_z = 0.0f64;
    let mut worst_r2 = 1.0f64;
    for (i, &lambda) in [1e-2, 1e-3, 1e-4, 1e-5].iter().enumerate() {
        let m = model(lambda);
        let g = g_aux(&m, 1000.0).map_err(|e| e.to_string())?;
        let ens = CountEnsemble::simulate(&m, 1000.0, &ts, 5000, 7400 + i as u64).map_err(|e| e.to_string())?;
        let means: Vec<f64> = (0..ts.len())
            .map(|k| {
                let r = ens.moment(k, 1.0);
                let z = (r.estimate - ts[k] * g).abs() / r.std_error;
                worst_z = worst_z.max(z);
                ok &= z < 4.0;
                r.estimate
            })
            .collect();
        let (_, _, r2) = linear_fit(&ts, &means);
        worst_r2 = worst_r2.min(r2);
        ok &= r2 > 0.99;
    }
    Ok((ok, format!("worst |z| vs t*g(t_a) = {worst_z:.2} (limit 4), lowest R^2 = {worst_r2:.4} (limit 0.99)")))
}

fn msd_crossover() -> Outcome {
    let m = model(1e-3);
    let j = JumpModel::gaussian(1.0).unwrap();
    // early: t_a ≪ t ≪ 1/λ; late: t ≫ 1/λ
    let early = log_grid(10.0, 100.0, 5);
    let late = log_grid(1e4, 1e5, 5);
    let ts: Vec<f64> = early.iter().chain(&late).copied().collect();
    let ens = WalkEnsemble::simulate(&m, &j, 1.0, &ts, 5000, 7500).map_err(|e| e.to_string())?;
    let msd: Vec<f64> = (0..ts.len()).map(|k| ens.msd(k).estimate).collect();
    let (_, s_early) = log_slope(&early, &msd[..5]);
    let (_, s_late) = log_slope(&late, &msd[5..]);
    let exact = |grid: &[f64]| -> Result<f64, String> {
        let v: Result<Vec<f64>, _> = grid
            .iter()
            .map(|&t| msd_theory(&m, &j, &window(1.0, t), TheoryMode::Exact))
            .collect();
        Ok(log_slope(grid, &v.map_err(|e| e.to_string())?).1)
    };
    Ok((
        (s_early - 0.6).abs() <= 0.05 && (s_late - 1.0).abs() <= 0.05,
        format!(
            "early slope {s_early:.3} (0.6 ± 0.05; exact theory {:.3}), late slope {s_late:.3} (1.0 ± 0.05; exact theory {:.3})",
            exact(&early)?,
            exact(&late)?
        ),
    ))
}

fn exact_asymptotic_bridge() -> Outcome {
    let p0_cells = [
        (1e-6, 1e5, 100.0),
        (1e-8, 1e7, 1e3),
        (1e-4, 1e6, 100.0),
        (0.0, 1e3, 1e5),
        (1e-10, 1e3, 1e6),
        (1e-12, 1e3, 1e7),
    ];
    let count_cells = [
        (1e-6, 1e5, 100.0),
        (1e-2, 1e5, 1.0),
        (1e-2, 1e4, 1e3),
        (1.0, 100.0, 200.0),
        (1e-8, 10.0, 1e5),
        (1e-3, 10.0, 1e4),
    ];
    let mut worst = (0.0f64, String::new());
    let mut ok = true;
    let mut check = |what: &str, f: fn(&WaitingTimeModel, &AgingWindow, TheoryMode) -> tempered_actrw_core::Result<f64>, cells: &[(f64, f64, f64)]| -> Result<(), String> {
        for &(lambda, t_a, t) in cells {
            let (m, w) = (model(lambda), window(t_a, t));
            let e = f(&m, &w, TheoryMode::Exact).map_err(|e| e.to_string())?;
            let a = f(&m, &w, TheoryMode::Asymptotic).map_err(|e| e.to_string())?;
            let rel = (a / e - 1.0).abs();
            ok &= rel < 0.02;
            if rel >= worst.0 {
                worst = (rel, format!("{what} at ({lambda:e}, {t_a:e}, {t:e}) {}", Regime::classify(&m, &w).label()));
            }
        }
        Ok(())
    };
    check("P0", survival_probability_theory, &p0_cells)?;
    check("<n_a>", mean_renewals_theory, &count_cells)?;
    Ok((ok, format!("12 cells, worst {:.2}% for {}", 100.0 * worst.0, worst.1)))
}

fn einstein_relation() -> Outcome {
    let cfg = ResponseExperiment::new(model(1e-2), 1.0, 0.1, 1000.0, 5.0).map_err(|e| e.to_string())?;
    let r = response_experiment(&cfg, 100_000, 7600).map_err(|e| e.to_string())?;
    let ratio = r.einstein_ratio.ok_or("no ratio for a biased walk")?;
    Ok(((ratio - 1.0).abs() <= 0.05, format!("einstein_ratio = {ratio:.4} (1 ± 0.05)")))
}

fn untempered_counting_ratio() -> Outcome {
    let want = 0.6 * gamma(0.6).powi(2) / gamma(1.2);
    let cfg = ResponseExperiment::new(model(1e-8), 1.0, 0.0, 1000.0, 5.0).map_err(|e| e.to_string())?;
    let r = response_experiment(&cfg, 100_000, 7700).map_err(|e| e.to_string())?;
    Ok((
        (r.counting_ratio - 1.449).abs() <= 0.05 && (want - 1.449).abs() < 1e-3,
        format!("counting ratio {:.4} ± {:.4} (1.449 ± 0.05; Beta integral {want:.4})", r.counting_ratio, r.counting_ratio_se),
    ))
}

fn fpe_cross_validation() -> Outcome {
    let (m, w) = (model(1e-3), window(3.0, 500.0));
    let jump = JumpModel::gaussian(1.0).unwrap();
    let msd = msd_theory(&m, &jump, &w, TheoryMode::Exact).map_err(|e| e.to_string())?;
    let grid = FpeGrid::lattice(m, w, 1.0, msd, 8.0, 500).map_err(|e| e.to_string())?;
    let sol = solve_tempered_fpe(&grid).map_err(|e| e.to_string())?;

    let n = 100_000;
    let recs = run_trajectories(n, 7800, |rng| simulate_walk(&grid.model, &jump, &grid.window, rng)).map_err(|e| e.to_string())?;
    let dx = grid.dx();
    let mut mass = vec![0.0; grid.nx];
    for r in recs.iter().filter(|r| r.moved) {
        let i = ((r.x_final - grid.x_min) / dx + 0.5).floor().clamp(0.0, (grid.nx - 1) as f64) as usize;
        mass[i] += 1.0 / n as f64;
    }
    let l1: f64 = mass.iter().zip(sol.terminal()).map(|(m, p)| (m - p * dx).abs()).sum();

    let mut drift = 0.0f64;
    for k in (10..=grid.nt).step_by(10) {
        let p0 = survival_probability_theory(&grid.model, &window(3.0, k as f64 * grid.dt), TheoryMode::Exact)
            .map_err(|e| e.to_string())?;
        drift = drift.max((sol.p0_series[k] - p0).abs() / p0);
    }

    let tempered = gl_tempered_weights(0.6, 0.0, grid.dt, 500).map_err(|e| e.to_string())?;
    let identical = tempered
        .iter()
        .zip(grunwald_weights(0.6, 500))
        .all(|(a, b)| a.to_bits() == b.to_bits());
    Ok((
        l1 < 0.05 && drift < 0.02 && identical,
        format!(
            "L1 = {l1:.4} (< 0.05), worst mass-bridge gap {:.2}% (< 2%), lambda=0 weights bitwise identical: {identical}",
            100.0 * drift
        ),
    ))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn determinism() -> Outcome {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(repo_root().join("configs"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    configs.sort();
    let scratch = std::env::temp_dir().join(format!("tempered-actrw-acceptance-{}", std::process::id()));
    let mut mismatched = vec![];
    for conf in &configs {
        let stem = conf.file_stem().unwrap().to_string_lossy().to_string();
        let mut first: Option<Vec<u8>> = None;
        for threads in [1, 2, 8] {
            let out = scratch.join(format!("{stem}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_tempered-actrw"))
                .arg("run")
                .arg(conf)
                .args(["--threads", &threads.to_string(), "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                mismatched.push(format!("{stem} exited {:?} at {threads} threads", status.status.code()));
                break;
            }
            let csv = std::fs::read(out.join("results.csv")).map_err(|e| e.to_string())?;
            match &first {
                None => first = Some(csv),
                Some(f) if *f != csv => mismatched.push(format!("{stem} differs at {threads} threads")),
                _ => {}
            }
        }
    }
    let _ = std::fs::remove_dir_all(&scratch);
    let detail = if mismatched.is_empty() {
        format!("{} configs byte-identical at 1, 2 and 8 threads", configs.len())
    } else {
        mismatched.join("; ")
    };
    Ok((mismatched.is_empty() && !configs.is_empty(), detail))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("sampler fidelity", sampler_fidelity),
        ("mean waiting time", mean_waiting_time),
        ("survival fit coefficient", survival_fit_coefficient),
        ("survival decay slope", survival_decay_slope),
        ("strong-aging mean count", strong_aging_mean_count),
        ("MSD crossover", msd_crossover),
        ("exact vs asymptotic bridge", exact_asymptotic_bridge),
        ("Einstein relation", einstein_relation),
        ("untempered counting ratio", untempered_counting_ratio),
        ("FPE cross-validation", fpe_cross_validation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} ({name}): {} - {detail} [{:.1}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
