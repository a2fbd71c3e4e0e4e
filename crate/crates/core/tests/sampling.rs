use tempered_actrw_core::ensemble::stream_rng;
use tempered_actrw_core::ensemble::mean_and_se;
use tempered_actrw_core::sampling::{
    sample_jump, sample_one_sided_stable, sample_tempered_waiting, stable_cdf, JumpModel, TemperingStrategy,
    WaitingTimeModel,
};

fn draws(model: &WaitingTimeModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| sample_tempered_waiting(model, &mut rng).unwrap()).collect()
}

fn transform_oracle(alpha: f64, lambda: f64, u: f64) -> f64 {
    (lambda.powf(alpha) - (u + lambda).powf(alpha)).exp()
}

#[test]
fn empirical_transform_matches_exact() {
    for (i, &lambda) in [0.0, 1e-4, 1e-2, 0.1, 10.0].iter().enumerate() {
        let m = WaitingTimeModel::new(0.6, lambda).unwrap();
        let xs = draws(&m, 1_000_000, 100 + i as u64);
        for &u in &[0.5, 1.0, 2.0] {
            let vals: Vec<f64> = xs.iter().map(|x| (-u * x).exp()).collect();
            let (mean, se) = mean_and_se(&vals);
            let want = transform_oracle(0.6, lambda, u);
            assert!((mean - want).abs() < 4.0 * se, "lambda={lambda} u={u}: {mean} vs {want} (se {se})");
        }
    }
}

#[test]
fn pure_stable_transform_values() {
    let mut rng = stream_rng(5, 0);
    let xs: Vec<f64> = (0..1_000_000).map(|_| sample_one_sided_stable(0.6, &mut rng)).collect();
    for &(u, want) in &[(1.0, 0.367_879_441_171_442_3), (2.0, 0.219_617_4)] {
        let vals: Vec<f64> = xs.iter().map(|x| (-u * x).exp()).collect();
        let (mean, se) = mean_and_se(&vals);
        assert!((mean - want).abs() < 3.0 * se + 1e-7, "u={u}: {mean} vs {want}");
    }
}

#[test]
fn acceptance_rate_of_tilting() {
    let m = WaitingTimeModel::new(0.6, 0.1).unwrap();
    let mut rng = stream_rng(11, 0);
    let mut proposals = 0u64;
    let n = 777_875;
    for _ in 0..n {
        proposals += m.sample_counted(&mut rng).unwrap().1;
    }
    let rate = n as f64 / proposals as f64;
    let want = (-(0.1f64.powf(0.6))).exp();
    assert!((want - 0.777_875_6).abs() < 1e-6);
    let se = (want * (1.0 - want) / proposals as f64).sqrt();
    assert!((rate - want).abs() < 3.0 * se, "{rate} vs {want}");
}

#[test]
fn sample_mean_is_mean_waiting_time() {
    let m = WaitingTimeModel::new(0.6, 0.1).unwrap();
    let xs = draws(&m, 1_000_000, 12);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((m.mean() - 1.507_131_858_905_748).abs() < 1e-12);
    assert!((mean / m.mean() - 1.0).abs() < 0.01, "{mean}");
}

fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn tempering_strategies_agree_in_distribution() {
    let n = 100_000;
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    for &lambda in &[0.0, 0.1] {
        let tilt = WaitingTimeModel::new(0.6, lambda).unwrap();
        let env = tilt.with_strategy(TemperingStrategy::PowerlawEnvelope).unwrap();
        assert_eq!(env.strategy(), TemperingStrategy::PowerlawEnvelope);
        let mut a = draws(&tilt, n, 21);
        let mut b = draws(&env, n, 22);
        let d = ks_statistic(&mut a, &mut b);
        assert!(d < critical, "lambda={lambda}: D={d} critical={critical}");
    }
}

fn tail_slope(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let pts: Vec<(f64, f64)> = (0..=6)
        .map(|k| {
            let x = 10f64 * 10f64.powf(k as f64 * 0.5);
            let s = xs.iter().filter(|&&v| v > x).count() as f64 / n;
            (x.ln(), s.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[test]
fn untempered_tail_exponent() {
    let tilt = WaitingTimeModel::new(0.6, 0.0).unwrap();
    let env = WaitingTimeModel::with_envelope(0.6, 0.0, 1e-3).unwrap();
    for (m, n) in [(tilt, 400_000), (env, 100_000)] {
        let xs = draws(&m, n, 31);
        let slope = tail_slope(&xs);
        assert!((slope + 0.6).abs() < 0.03, "{:?}: slope {slope}", m.strategy());
    }
}

// Mann-Whitney z statistic for "b tends to be smaller than a".
fn rank_z(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    (u - n1 * n2 / 2.0) / (n1 * n2 * (n1 + n2 + 1.0) / 12.0).sqrt()
}

#[test]
fn maxima_shrink_as_tempering_grows() {
    let lambdas = [1e-5, 1e-3, 1e-1, 10.0];
    let maxima: Vec<Vec<f64>> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let m = WaitingTimeModel::new(0.6, lambda).unwrap();
            let mut rng = stream_rng(41, i as u64);
            (0..200)
                .map(|_| (0..100).map(|_| m.sample(&mut rng).unwrap()).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    for w in maxima.windows(2) {
        assert!(rank_z(&w[0], &w[1]) > 1.645);
    }
}

#[test]
fn nearly_deterministic_stable_median() {
    let alpha = 0.99;
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if stable_cdf(alpha, mid).unwrap() < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let median = 0.5 * (lo + hi);
    assert!((median - 1.0).abs() < 0.05, "{median}");
    let n = 100_000;
    let mut rng = stream_rng(51, 0);
    let below = (0..n).filter(|_| sample_one_sided_stable(alpha, &mut rng) <= median).count();
    let frac = below as f64 / n as f64;
    assert!((frac - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{frac}");
}

#[test]
fn jump_moments() {
    let n = 1_000_000;
    let mut rng = stream_rng(61, 0);
    let sym = JumpModel::lattice(1.0, 0.0).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| sample_jump(&sym, &mut rng)).collect();
    let (m, se) = mean_and_se(&xs);
    assert!(m.abs() < 3.0 * se);

    let biased = JumpModel::lattice(1.0, 0.1).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| sample_jump(&biased, &mut rng)).collect();
    let (m, se) = mean_and_se(&xs);
    assert!((m - 0.1).abs() < 3.0 * se, "{m}");

    let gauss = JumpModel::gaussian(1.0).unwrap();
    let sq: Vec<f64> = (0..n).map(|_| sample_jump(&gauss, &mut rng).powi(2)).collect();
    let m2 = sq.iter().sum::<f64>() / n as f64;
    assert!((m2 - 1.0).abs() < 0.01);
    assert!(JumpModel::lattice(1.0, 1.0).is_err());
    assert!(JumpModel::gaussian(0.0).is_err());
}

#[test]
fn same_seed_same_stream() {
    let m = WaitingTimeModel::new(0.6, 0.1).unwrap();
    assert_eq!(draws(&m, 1000, 7), draws(&m, 1000, 7));
    assert_ne!(draws(&m, 10, 7), draws(&m, 10, 8));
}

#[test]
fn invalid_models_rejected() {
    assert!(WaitingTimeModel::new(1.0, 0.1).is_err());
    assert!(WaitingTimeModel::new(0.6, -1.0).is_err());
    assert!(WaitingTimeModel::with_envelope(0.6, 0.1, 0.0).is_err());
}
