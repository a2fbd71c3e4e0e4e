use tempered_actrw_core::actrw::*;
use tempered_actrw_core::ensemble::{mean_and_se, run_trajectories, TrajectoryRng};
use tempered_actrw_core::laplace::{inverse_laplace, tempered_increment};
use tempered_actrw_core::mlf::{g_aux, gamma};
use tempered_actrw_core::quad::{integrate_pieces, Tolerance};
use tempered_actrw_core::renewal::{survival_probability_mc, AgingWindow, CountEnsemble, TheoryMode};
use tempered_actrw_core::sampling::{JumpModel, WaitingTimeModel};

fn model(lambda: f64) -> WaitingTimeModel {
    WaitingTimeModel::new(0.6, lambda).unwrap()
}

fn window(t_a: f64, t: f64) -> AgingWindow {
    AgingWindow::new(t_a, t).unwrap()
}

fn gauss() -> JumpModel {
    JumpModel::gaussian(1.0).unwrap()
}

fn records(m: &WaitingTimeModel, j: &JumpModel, w: &AgingWindow, n: usize, seed: u64) -> Vec<WalkRecord> {
    run_trajectories(n, seed, |rng| simulate_walk(m, j, w, rng)).unwrap()
}

fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

#[test]
fn empty_window_does_not_move() {
    let m = model(0.1);
    let w = window(5.0, 1e-12);
    for i in 0..200 {
        let r = simulate_walk(&m, &gauss(), &w, &mut TrajectoryRng::new(1, i)).unwrap();
        assert_eq!((r.x_final, r.moved, r.n_a), (0.0, false, 0));
    }
}

#[test]
fn symmetric_walk_has_zero_mean() {
    let m = model(0.01);
    let rs = records(&m, &gauss(), &window(10.0, 100.0), 10_000, 2);
    let xs: Vec<f64> = rs.iter().map(|r| r.x_final).collect();
    let (mean, se) = mean_and_se(&xs);
    assert!(mean.abs() < 3.0 * se, "{mean} ± {se}");
    let movers: Vec<f64> = rs.iter().filter(|r| r.moved).map(|r| r.x_final).collect();
    let n = movers.len() as f64;
    let mu = movers.iter().sum::<f64>() / n;
    let sd = (movers.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
    let skew = movers.iter().map(|x| ((x - mu) / sd).powi(3)).sum::<f64>() / n;
    assert!(skew.abs() < 3.0 * (6.0 / n).sqrt(), "{skew}");
}

#[test]
fn msd_crosses_over_from_subdiffusion_to_normal_diffusion() {
    let m = model(1e-3);
    let j = gauss();
    let ts = [20.0, 100.0, 1e4, 3e4];
    let ens = WalkEnsemble::simulate(&m, &j, 1.0, &ts, 5000, 3).unwrap();
    for (k, &t) in ts.iter().enumerate() {
        let mc = ens.msd(k);
        let th = msd_theory(&m, &j, &window(1.0, t), TheoryMode::Exact).unwrap();
        assert!((mc.estimate - th).abs() < 4.0 * mc.std_error, "t={t}: {} vs {th}", mc.estimate);
    }
    // early: untempered power law plus the small-λ correction; late: t/⟨τ⟩
    let t: f64 = 20.0;
    let early = msd_theory(&m, &j, &window(1.0, t), TheoryMode::Asymptotic).unwrap();
    let la = 1e-3f64.powf(0.6);
    let series = t.powf(0.6) / gamma(1.6) + la * t.powf(1.2) / gamma(2.2) - 0.6e-3 * t.powf(1.6) / gamma(2.6)
        + la * la * t.powf(1.8) / gamma(2.8);
    assert!((early / series - 1.0).abs() < 2e-3, "{early} vs {series}");
    let late = msd_theory(&m, &j, &window(1.0, 3e4), TheoryMode::Exact).unwrap();
    assert!((late / (3e4 / m.mean()) - 1.0).abs() < 0.01);
}

#[test]
fn msd_theory_limits() {
    let j = gauss();
    let m = model(1e-2);
    let w = window(1000.0, 5.0);
    let asym = msd_theory(&m, &j, &w, TheoryMode::Asymptotic).unwrap();
    let g = g_aux(&m, 1000.0).unwrap();
    assert!((asym - 5.0 * g).abs() < 1e-12);
    let plateau = 0.01f64.powf(0.4) / 0.6;
    assert!((plateau - 0.264_15).abs() < 1e-5);
    assert!(g > plateau && g < 1.1 * plateau, "{g}");
    let exact = msd_theory(&m, &j, &w, TheoryMode::Exact).unwrap();
    assert!((exact / asym - 1.0).abs() < 0.02);

    let j2 = JumpModel::gaussian(2.0).unwrap();
    let v = msd_theory(&model(0.0), &j2, &window(3.0, 1e3), TheoryMode::Asymptotic).unwrap();
    assert!((v / (2.0 * 1e3f64.powf(0.6) / gamma(1.6)) - 1.0).abs() < 1e-12);

    let m = model(0.1);
    let exact = msd_theory(&m, &j2, &window(10.0, 1e4), TheoryMode::Exact).unwrap();
    assert!((exact / (2.0 * 1e4 / m.mean()) - 1.0).abs() < 0.01);

    let biased = JumpModel::lattice(1.0, 0.2).unwrap();
    assert!(msd_theory(&m, &biased, &w, TheoryMode::Exact).is_err());
}

#[test]
fn msd_equals_second_moment_times_mean_count() {
    let m = model(0.01);
    let j = JumpModel::gaussian(1.5).unwrap();
    let ts = [5.0, 50.0, 500.0];
    let walks = WalkEnsemble::simulate(&m, &j, 100.0, &ts, 5000, 4).unwrap();
    let counts = CountEnsemble::simulate(&m, 100.0, &ts, 5000, 4).unwrap();
    for k in 0..ts.len() {
        let msd = walks.msd(k);
        let n = counts.moment(k, 1.0);
        assert_eq!(n.estimate, walks.mean_renewals(k).estimate);
        assert!((msd.estimate - 1.5 * n.estimate).abs() < 4.0 * msd.std_error);
    }
}

#[test]
fn propagator_atom_is_survival() {
    let m = model(1e-3);
    let j = gauss();
    let w = window(100.0, 20.0);
    let bins = PropagatorBins::around_msd(&m, &j, &w).unwrap();
    assert_eq!(bins.count, 201);
    let h = propagator_mc(&m, &j, &w, 5000, bins, 5).unwrap();
    assert!((h.atom_at_zero + h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let p0 = survival_probability_mc(&m, &w, 5000, 6).unwrap();
    let se = (p0.std_error.powi(2) * 2.0).sqrt();
    assert!((h.atom_at_zero - p0.estimate).abs() < 4.0 * se);
}

#[test]
fn population_splitting_inflates_msd_noise() {
    let j = gauss();
    let rel = |lambda: f64| {
        let m = model(lambda);
        let ens = WalkEnsemble::simulate(&m, &j, 1000.0, &[5.0], 10_000, 7).unwrap();
        let msd = ens.msd(0);
        (msd.std_error / msd.estimate, 1.0 - ens.motionless(0).estimate)
    };
    let (noisy, movers) = rel(1e-4);
    let (calm, _) = rel(1e-1);
    assert!(movers < 0.3, "{movers}");
    assert!(noisy > calm, "{noisy} vs {calm}");
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

#[test]
fn strong_aging_msd_is_linear_in_t() {
    let j = gauss();
    let ts = [1.0, 2.0, 3.0, 4.0, 5.0];
    for (i, &lambda) in [1e-1, 1e-2, 1e-3, 1e-4].iter().enumerate() {
        let ens = WalkEnsemble::simulate(&model(lambda), &j, 1000.0, &ts, 10_000, 10 + i as u64).unwrap();
        let msd: Vec<f64> = (0..ts.len()).map(|k| ens.msd(k).estimate).collect();
        let r2 = r_squared(&ts, &msd);
        assert!(r2 > 0.99, "lambda={lambda}: R^2 = {r2}");
    }
}

fn theory_moments(m: &WaitingTimeModel, w: &AgingWindow, regime: PropagatorRegime, reach: f64) -> [f64; 3] {
    let j = gauss();
    let f = |x: f64| propagator_theory(m, &j, x, w, regime).unwrap();
    let tol = Tolerance::new(1e-12, 1e-8);
    let pts = [0.0, 0.1, 1.0, reach / 10.0, reach];
    let mut out = [0.0; 3];
    for (i, p) in [0, 2, 4].iter().enumerate() {
        out[i] = 2.0 * integrate_pieces(|x| x.powi(*p) * f(x), &pts, tol).unwrap().value;
    }
    out
}

#[test]
fn propagator_theory_is_even() {
    let m = model(1e-3);
    let j = gauss();
    let w = window(3.0, 500.0);
    for &x in &[0.3, 2.0, 11.0] {
        for regime in [PropagatorRegime::WeakAging, PropagatorRegime::StrongAging] {
            let a = propagator_theory(&m, &j, x, &w, regime).unwrap();
            let b = propagator_theory(&m, &j, -x, &w, regime).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn propagator_second_moment_matches_msd() {
    let m = model(1e-3);
    let w = window(3.0, 500.0);
    let [_, m2, _] = theory_moments(&m, &w, PropagatorRegime::WeakAging, 400.0);
    let msd = msd_theory(&m, &gauss(), &w, TheoryMode::Exact).unwrap();
    assert!((m2 / msd - 1.0).abs() < 0.02, "{m2} vs {msd}");
}

#[test]
fn propagator_becomes_gaussian_under_strong_tempering() {
    let m = model(1.0);
    let w = window(3.0, 500.0);
    let [m0, m2, m4] = theory_moments(&m, &w, PropagatorRegime::WeakAging, 400.0);
    let kurt = m4 / m0 / (m2 / m0).powi(2) - 3.0;
    assert!(kurt.abs() < 0.2, "{kurt}");
}

#[test]
fn sampled_propagator_shapes() {
    // sharp peak and heavy tails for weak tempering, normal for strong
    let w = window(3.0, 500.0);
    let shape = |lambda: f64| {
        let rs = records(&model(lambda), &gauss(), &w, 10_000, 12);
        let xs: Vec<f64> = rs.iter().filter(|r| r.moved).map(|r| r.x_final).collect();
        excess_kurtosis(&xs)
    };
    let k_weak = shape(1e-4);
    let k_strong = shape(1.0);
    assert!(k_weak > 1.0, "{k_weak}");
    assert!(k_strong.abs() < 0.2, "{k_strong}");
}

#[test]
fn short_strong_aging_propagator_has_right_mass() {
    let m = model(1e-3);
    let w = window(500.0, 3.0);
    let [m0, _, _] = theory_moments(&m, &w, PropagatorRegime::StrongAging, 60.0);
    // ∫F₁ dx = 2, so the mass is the inverse of x_u g(tₐ)/u²
    let g = g_aux(&m, 500.0).unwrap();
    let want = inverse_laplace(|u| Ok(tempered_increment(&m, u) * g / (u * u)), 3.0).unwrap();
    assert!((m0 / want - 1.0).abs() < 1e-5, "{m0} vs {want}");
}

#[test]
fn unbiased_response_has_no_drift() {
    let cfg = ResponseExperiment::new(model(1e-2), 1.0, 0.0, 100.0, 10.0).unwrap();
    let r = response_experiment(&cfg, 20_000, 13).unwrap();
    assert!(r.mean_x_b.abs() < 3.0 * r.mean_x_b_se);
    assert_eq!(r.einstein_ratio, None);
    assert!(!r.noisy);
    assert!(ResponseExperiment::new(model(1e-2), 1.0, 1.0, 100.0, 10.0).is_err());
}

#[test]
fn einstein_relation_holds() {
    let cfg = ResponseExperiment::new(model(1e-2), 1.0, 0.1, 1000.0, 5.0).unwrap();
    let r = response_experiment(&cfg, 100_000, 14).unwrap();
    let ratio = r.einstein_ratio.unwrap();
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    assert!(!r.noisy);
}

#[test]
fn counting_ratio_in_the_untempered_limit() {
    let want = 0.6 * gamma(0.6).powi(2) / gamma(1.2);
    let m = model(1e-8);
    let cfg = ResponseExperiment::new(m, 1.0, 0.0, 1000.0, 5.0).unwrap();
    let r = response_experiment(&cfg, 100_000, 15).unwrap();
    assert!((r.counting_ratio - want).abs() < 0.05, "{} vs {want}", r.counting_ratio);
    assert!((r.f_r_mc - (r.counting_ratio - 1.0)).abs() < 1e-15);
    let th = fluctuation_response_theory(&m, 1000.0, 5.0).unwrap();
    assert!((th - want).abs() < 0.01);
}

#[test]
fn counting_ratio_matches_theory_with_tempering() {
    let m = model(1e-4);
    let cfg = ResponseExperiment::new(m, 1.0, 0.0, 1000.0, 5.0).unwrap();
    let r = response_experiment(&cfg, 100_000, 16).unwrap();
    let th = fluctuation_response_theory(&m, 1000.0, 5.0).unwrap();
    assert!((r.counting_ratio - th).abs() < 4.0 * r.counting_ratio_se, "{} vs {th}", r.counting_ratio);
}

#[test]
fn fluctuation_response_plateau() {
    let th = fluctuation_response_theory(&model(0.1), 1000.0, 5.0).unwrap();
    assert!((th - 1.0).abs() < 0.01, "{th}");
    assert!(fluctuation_response_theory(&model(0.1), 10.0, 5.0).is_err());
}
