//! Aging renewal process: simulation of nₐ(tₐ, t), ensemble estimates and
//! the matching theory, exact (numerical double inversion) or asymptotic.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{run_trajectories, EnsembleResult};
use crate::error::{domain, Error, Result};
use crate::laplace::{
    double_inverse_laplace, forward_waiting_lt, inverse_laplace, renewal_function_lt, renewal_moment_lt,
    survival_lt, LaplacePoint, PhiForm,
};
use crate::mlf::{g_aux, gamma, sin_pi};
use crate::quad::{integrate, integrate_graded, integrate_pieces, Endpoint, Tolerance};
use crate::sampling::WaitingTimeModel;

/// Observation window (tₐ, tₐ + t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgingWindow {
    pub t_a: f64,
    pub t: f64,
}

impl AgingWindow {
    pub fn new(t_a: f64, t: f64) -> Result<Self> {
        if !(t_a >= 0.0 && t_a.is_finite()) {
            return domain(format!("aging time t_a = {t_a} must be finite and non-negative"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("observation time t = {t} must be finite and positive"));
        }
        Ok(AgingWindow { t_a, t })
    }

    pub fn end(&self) -> f64 {
        self.t_a + self.t
    }
}

/// Upper bound on the number of waiting times drawn for one trajectory.
pub const DEFAULT_RENEWAL_CAP: u64 = 1_000_000_000;

/// Renewal epochs up to `horizon`, passed one by one to `visit`.
///
/// Epochs at or before tₐ are drawn but not reported. The cap counts every
/// draw from time 0.
pub(crate) fn for_each_epoch<R, V>(model: &WaitingTimeModel, t_a: f64, horizon: f64, cap: u64, rng: &mut R, mut visit: V) -> Result<()>
where
    R: Rng + ?Sized,
    V: FnMut(f64),
{
    let mut clock = 0.0;
    let mut draws = 0u64;
    loop {
        clock += model.sample(rng)?;
        if clock > horizon {
            return Ok(());
        }
        draws += 1;
        if draws > cap {
            return Err(Error::IterationCap { cap });
        }
        if clock > t_a {
            visit(clock);
        }
    }
}

/// Number of renewals strictly after tₐ and no later than tₐ + t.
pub fn simulate_renewal_count<R: Rng + ?Sized>(model: &WaitingTimeModel, window: &AgingWindow, rng: &mut R) -> Result<u64> {
    simulate_renewal_count_capped(model, window, DEFAULT_RENEWAL_CAP, rng)
}

pub fn simulate_renewal_count_capped<R: Rng + ?Sized>(
    model: &WaitingTimeModel,
    window: &AgingWindow,
    cap: u64,
    rng: &mut R,
) -> Result<u64> {
    let mut n = 0;
    for_each_epoch(model, window.t_a, window.end(), cap, rng, |_| n += 1)?;
    Ok(n)
}

/// nₐ(tₐ, t_k) for every t_k of an increasing grid, from one trajectory.
pub fn renewal_counts_on_grid<R: Rng + ?Sized>(
    model: &WaitingTimeModel,
    t_a: f64,
    ts: &[f64],
    cap: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    check_grid(t_a, ts)?;
    let mut fresh = vec![0u64; ts.len()];
    let mut k = 0;
    let horizon = t_a + ts[ts.len() - 1];
    for_each_epoch(model, t_a, horizon, cap, rng, |epoch| {
        while t_a + ts[k] < epoch {
            k += 1;
        }
        fresh[k] += 1;
    })?;
    let mut acc = 0;
    Ok(fresh
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect())
}

pub(crate) fn check_grid(t_a: f64, ts: &[f64]) -> Result<()> {
    AgingWindow::new(t_a, *ts.first().ok_or_else(|| Error::Domain("empty time grid".into()))?)?;
    if ts.windows(2).any(|w| !(w[1] > w[0])) || !ts[ts.len() - 1].is_finite() {
        return domain("time grid must be finite and strictly increasing");
    }
    Ok(())
}

/// ⟨nₐᵖ(tₐ, t)⟩ by Monte Carlo, with the histogram of nₐ.
pub fn ensemble_moment(
    model: &WaitingTimeModel,
    window: &AgingWindow,
    p: f64,
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("moment order p = {p} must be positive"));
    }
    let counts = run_trajectories(n_traj, seed, |rng| simulate_renewal_count(model, window, &mut rng.clock))?;
    Ok(moment_of_counts(&counts, p, seed))
}

fn moment_of_counts(counts: &[u64], p: f64, seed: u64) -> EnsembleResult {
    let values: Vec<f64> = counts.iter().map(|&n| (n as f64).powf(p)).collect();
    EnsembleResult::from_samples(&values, seed).with_histogram(counts)
}

fn survival_of_counts(counts: &[u64], seed: u64) -> EnsembleResult {
    let n = counts.len();
    let zeros = counts.iter().filter(|&&c| c == 0).count();
    let p = zeros as f64 / n as f64;
    let zero_one: Vec<u64> = counts.iter().map(|&c| (c == 0) as u64).collect();
    EnsembleResult {
        n_traj: n,
        seed,
        estimate: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        raw_histogram: None,
    }
    .with_histogram(&zero_one)
}

/// Fraction of trajectories without a renewal in the window; binomial
/// standard error. The histogram maps 1 to the survivors and 0 to the rest.
pub fn survival_probability_mc(model: &WaitingTimeModel, window: &AgingWindow, n_traj: usize, seed: u64) -> Result<EnsembleResult> {
    let counts = run_trajectories(n_traj, seed, |rng| simulate_renewal_count(model, window, &mut rng.clock))?;
    Ok(survival_of_counts(&counts, seed))
}

/// Renewal counts of an ensemble on a common grid of observation times.
#[derive(Debug, Clone)]
pub struct CountEnsemble {
    pub t_a: f64,
    pub ts: Vec<f64>,
    pub seed: u64,
    /// counts[i][k] = nₐ(tₐ, ts[k]) of trajectory i
    pub counts: Vec<Vec<u64>>,
}

impl CountEnsemble {
    pub fn simulate(model: &WaitingTimeModel, t_a: f64, ts: &[f64], n_traj: usize, seed: u64) -> Result<Self> {
        check_grid(t_a, ts)?;
        let counts = run_trajectories(n_traj, seed, |rng| {
            renewal_counts_on_grid(model, t_a, ts, DEFAULT_RENEWAL_CAP, &mut rng.clock)
        })?;
        Ok(CountEnsemble {
            t_a,
            ts: ts.to_vec(),
            seed,
            counts,
        })
    }

    fn column(&self, k: usize) -> Vec<u64> {
        self.counts.iter().map(|row| row[k]).collect()
    }

    pub fn moment(&self, k: usize, p: f64) -> EnsembleResult {
        moment_of_counts(&self.column(k), p, self.seed)
    }

    pub fn survival(&self, k: usize) -> EnsembleResult {
        survival_of_counts(&self.column(k), self.seed)
    }
}

/// Evaluation mode of the theory functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryMode {
    Exact,
    Asymptotic,
}

/// A ratio read as "≪ 1" below this value and as "≫ 1" above its inverse.
pub const SMALL_RATIO: f64 = 0.1;
pub const LARGE_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aging {
    /// t ≪ tₐ
    Strong,
    /// tₐ ≪ t
    Weak,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Small,
    Large,
    Intermediate,
}

impl Scale {
    fn of(x: f64) -> Scale {
        if x < SMALL_RATIO {
            Scale::Small
        } else if x > LARGE_RATIO {
            Scale::Large
        } else {
            Scale::Intermediate
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Scale::Small => "<<1",
            Scale::Large => ">>1",
            Scale::Intermediate => "~1",
        }
    }
}

/// Position of a window on the {aging} × {λtₐ} × {λt} grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Regime {
    pub aging: Aging,
    pub lambda_t_a: Scale,
    pub lambda_t: Scale,
}

impl Regime {
    pub fn classify(model: &WaitingTimeModel, window: &AgingWindow) -> Regime {
        let r = window.t / window.t_a;
        let aging = if r < SMALL_RATIO {
            Aging::Strong
        } else if r > LARGE_RATIO {
            Aging::Weak
        } else {
            Aging::Intermediate
        };
        Regime {
            aging,
            lambda_t_a: Scale::of(model.lambda() * window.t_a),
            lambda_t: Scale::of(model.lambda() * window.t),
        }
    }

    /// Short label such as `strong_aging;lambda_ta>>1;lambda_t<<1`.
    pub fn label(&self) -> String {
        let aging = match self.aging {
            Aging::Strong => "strong_aging",
            Aging::Weak => "weak_aging",
            Aging::Intermediate => "intermediate_aging",
        };
        format!(
            "{aging};lambda_ta{};lambda_t{}",
            self.lambda_t_a.symbol(),
            self.lambda_t.symbol()
        )
    }
}

fn ambiguous(what: &str, model: &WaitingTimeModel, window: &AgingWindow) -> Error {
    Error::RegimeAmbiguous(format!(
        "no asymptotic form of {what} applies at alpha={}, lambda={}, t_a={}, t={} ({}); use exact mode",
        model.alpha(),
        model.lambda(),
        window.t_a,
        window.t,
        Regime::classify(model, window).label()
    ))
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-9,
        max_intervals: 4000,
    }
}

/// G(t) = ∫₀ᵗ g(z) dz, the weak-aging mean number of renewals.
pub fn integrated_g(model: &WaitingTimeModel, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("integrated_g needs t >= 0, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let a = model.alpha();
    if model.lambda() == 0.0 {
        return Ok(t.powf(a) / gamma(1.0 + a));
    }
    let g = |z: f64| g_aux(model, z).unwrap_or(f64::NAN);
    // graded near the z^{α-1} singularity, then geometric pieces
    let head = t.min(1.0 / model.lambda()).min(1.0);
    let mut total = integrate_graded(g, 0.0, head, a, Endpoint::Left, quad_tol())?.value;
    if t > head {
        let mut pts = vec![head];
        while pts[pts.len() - 1] * 10.0 < t {
            let next = pts[pts.len() - 1] * 10.0;
            pts.push(next);
        }
        pts.push(t);
        total += integrate_pieces(g, &pts, quad_tol())?.value;
    }
    check_finite(total, "integrated_g")
}

fn check_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonConvergence(format!("{what} evaluated to {v}")))
    }
}

/// Renewal function H(t) = ⟨n(t)⟩ of the process started at 0.
pub fn renewal_function(model: &WaitingTimeModel, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    inverse_laplace(|u: Complex64| renewal_function_lt(model, u, PhiForm::Exact), t)
}

/// P₀(tₐ, t).
///
/// Exact mode inverts P₀(s,u) numerically. The asymptotic forms are
/// 1 - g(tₐ)(t^{1-α}/Γ(2-α) - λ^α t) for t ≪ tₐ, λt ≪ 1, and
/// G(tₐ) t^{-α}/Γ(1-α) for tₐ ≪ t, λt ≪ 1; the latter reduces to
/// sin(πα)/(πα)·(t/tₐ)^{-α} when λ = 0.
pub fn survival_probability_theory(model: &WaitingTimeModel, window: &AgingWindow, mode: TheoryMode) -> Result<f64> {
    match mode {
        TheoryMode::Exact => double_inverse_laplace(
            |s, u| survival_lt(model, LaplacePoint::new(s, u), PhiForm::Exact),
            window.t_a,
            window.t,
        ),
        TheoryMode::Asymptotic => {
            let regime = Regime::classify(model, window);
            let a = model.alpha();
            let t = window.t;
            let v = match (regime.aging, regime.lambda_t) {
                (Aging::Strong, Scale::Small) => {
                    let g = g_aux(model, window.t_a)?;
                    1.0 - g * (t.powf(1.0 - a) / gamma(2.0 - a) - model.lambda_alpha() * t)
                }
                (Aging::Weak, Scale::Small) => integrated_g(model, window.t_a)? * t.powf(-a) / gamma(1.0 - a),
                _ => return Err(ambiguous("P0", model, window)),
            };
            Ok(v.clamp(0.0, 1.0))
        }
    }
}

/// ⟨nₐ(tₐ, t)⟩.
///
/// Asymptotic forms: t·g(tₐ) for t ≪ tₐ, G(t) for tₐ ≪ t, and t/⟨τ⟩ when
/// λtₐ ≫ 1 with neither of the former.
pub fn mean_renewals_theory(model: &WaitingTimeModel, window: &AgingWindow, mode: TheoryMode) -> Result<f64> {
    renewal_moment_theory(model, window, 1.0, mode)
}

/// ⟨nₐᵖ(tₐ, t)⟩.
///
/// Exact mode is available for p = 1 and 2. Asymptotically, for p ≠ 1:
/// Γ(p+1)/Γ(2+αp-α)·g(tₐ)·t^{αp-α+1} (t ≪ tₐ, λt ≪ 1),
/// Γ(p+1)t^{αp}/Γ(1+αp) (tₐ ≪ t, λt ≪ 1) and (t/⟨τ⟩)^p (λtₐ, λt ≫ 1 or
/// tₐ ≪ t with λt ≫ 1).
pub fn renewal_moment_theory(model: &WaitingTimeModel, window: &AgingWindow, p: f64, mode: TheoryMode) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("moment order p = {p} must be positive"));
    }
    match mode {
        TheoryMode::Exact => {
            let order = if p == 1.0 {
                1
            } else if p == 2.0 {
                2
            } else {
                return domain(format!("exact moments are available for p = 1, 2; got {p}"));
            };
            double_inverse_laplace(
                |s, u| renewal_moment_lt(model, LaplacePoint::new(s, u), order, PhiForm::Exact),
                window.t_a,
                window.t,
            )
        }
        TheoryMode::Asymptotic => {
            let regime = Regime::classify(model, window);
            let (a, t) = (model.alpha(), window.t);
            if p == 1.0 {
                return match regime.aging {
                    Aging::Strong => Ok(t * g_aux(model, window.t_a)?),
                    Aging::Weak => integrated_g(model, t),
                    Aging::Intermediate if regime.lambda_t_a == Scale::Large => Ok(t / model.mean()),
                    Aging::Intermediate => Err(ambiguous("<n_a>", model, window)),
                };
            }
            let stationary = regime.lambda_t == Scale::Large
                && (regime.lambda_t_a == Scale::Large || regime.aging == Aging::Weak);
            if stationary {
                return Ok((t / model.mean()).powf(p));
            }
            match (regime.aging, regime.lambda_t) {
                (Aging::Strong, Scale::Small) => Ok(gamma(p + 1.0) / gamma(2.0 + a * p - a)
                    * g_aux(model, window.t_a)?
                    * t.powf(a * p - a + 1.0)),
                (Aging::Weak, Scale::Small) => Ok(gamma(p + 1.0) * t.powf(a * p) / gamma(1.0 + a * p)),
                _ => Err(ambiguous("<n_a^p>", model, window)),
            }
        }
    }
}

/// Forward waiting time density ω(tₐ, t) with the weight of a δ(t) atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardWaiting {
    pub density: f64,
    pub atom: f64,
}

/// ω(tₐ, t) = e^{-λt}/(-Γ(-α)) ∫₀^{tₐ} g(τ) e^{-λ(tₐ-τ)} (tₐ-τ+t)^{-α-1} dτ.
///
/// This is the inverse of the small-u transform of ω; at tₐ = 0 it is a
/// unit atom at t = 0. See [`forward_waiting_pdf_exact`] for the law of
/// the simulated process.
pub fn forward_waiting_pdf(model: &WaitingTimeModel, t_a: f64, t: f64) -> Result<ForwardWaiting> {
    AgingWindow::new(t_a, t)?;
    if t_a == 0.0 {
        return Ok(ForwardWaiting { density: 0.0, atom: 1.0 });
    }
    let a = model.alpha();
    let lam = model.lambda();
    let kernel = |tau: f64| -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let back = t_a - tau;
        g_aux(model, tau).unwrap_or(f64::NAN) * (-lam * back).exp() * (back + t).powf(-a - 1.0)
    };
    let mid = 0.5 * t_a;
    let mut total = integrate_graded(kernel, 0.0, mid, a, Endpoint::Left, quad_tol())?.value;
    // the factor (tₐ-τ+t)^{-α-1} varies on the scale t near τ = tₐ
    let mut pts = vec![mid];
    let mut off = t;
    while off * 10.0 < mid {
        off *= 10.0;
    }
    while off >= t {
        if t_a - off > pts[pts.len() - 1] {
            pts.push(t_a - off);
        }
        off /= 10.0;
    }
    pts.push(t_a);
    total += integrate_pieces(kernel, &pts, quad_tol())?.value;
    let density = (-lam * t).exp() * a / gamma(1.0 - a) * total;
    Ok(ForwardWaiting {
        density: check_finite(density, "forward waiting density")?,
        atom: 0.0,
    })
}

/// ω(tₐ, t) of the renewal process with the exact waiting-time transform,
/// by numerical double inversion; equals φ(t) at tₐ = 0.
pub fn forward_waiting_pdf_exact(model: &WaitingTimeModel, t_a: f64, t: f64) -> Result<ForwardWaiting> {
    AgingWindow::new(t_a, t)?;
    let density = double_inverse_laplace(
        |s, u| forward_waiting_lt(model, LaplacePoint::new(s, u), PhiForm::Exact),
        t_a,
        t,
    )?;
    Ok(ForwardWaiting { density, atom: 0.0 })
}

/// Closed-form approximations of ω(tₐ, t):
/// sin(πα)e^{-λ(t+tₐ)}(tₐ/t)^α/(π(t+tₐ)) for λtₐ ≪ 1 and
/// λe^{-λt}sin(πα)/(απt^α) ∫₀^{tₐ} e^{-λτ}τ^α/(τ+t) dτ for λtₐ ≫ 1.
pub fn forward_waiting_asymptotic(model: &WaitingTimeModel, t_a: f64, t: f64) -> Result<f64> {
    let window = AgingWindow::new(t_a, t)?;
    let a = model.alpha();
    let lam = model.lambda();
    match Scale::of(lam * t_a) {
        Scale::Small => Ok(sin_pi(a) * (-lam * (t + t_a)).exp() / (PI * (t + t_a)) * (t_a / t).powf(a)),
        Scale::Large => {
            let f = |tau: f64| (-lam * tau).exp() * tau.powf(a) / (tau + t);
            let cut = (40.0 / lam).min(t_a);
            let mut pts = vec![0.0, cut.min(t)];
            if cut > t {
                pts.push(cut);
            }
            let r = integrate_pieces(f, &pts, quad_tol())?.value;
            Ok(lam * (-lam * t).exp() * sin_pi(a) / (a * PI * t.powf(a)) * r)
        }
        Scale::Intermediate => Err(ambiguous("omega", model, &window)),
    }
}

/// 1 - ∫₀ᵗ ω(tₐ, τ) dτ with the convolution form of ω.
pub fn survival_from_forward_waiting(model: &WaitingTimeModel, t_a: f64, t: f64) -> Result<f64> {
    AgingWindow::new(t_a, t)?;
    if t_a == 0.0 {
        return Ok(0.0);
    }
    let a = model.alpha();
    let w = |tau: f64| forward_waiting_pdf(model, t_a, tau).map(|f| f.density).unwrap_or(f64::NAN);
    // ω ~ τ^{-α} as τ → 0
    let head = t.min(t_a);
    let mut total = integrate_graded(w, 0.0, head, 1.0 - a, Endpoint::Left, Tolerance::new(1e-10, 1e-8))?.value;
    if t > head {
        total += integrate(w, head, t, Tolerance::new(1e-10, 1e-8))?.value;
    }
    Ok(1.0 - check_finite(total, "survival from forward waiting time")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::stream_rng;

    #[test]
    fn window_validation() {
        assert!(AgingWindow::new(-1.0, 1.0).is_err());
        assert!(AgingWindow::new(1.0, 0.0).is_err());
        assert!(AgingWindow::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn grid_counts_match_single_windows() {
        let m = WaitingTimeModel::new(0.6, 0.1).unwrap();
        let ts = [0.5, 2.0, 10.0, 40.0];
        for i in 0..50 {
            let grid = renewal_counts_on_grid(&m, 5.0, &ts, DEFAULT_RENEWAL_CAP, &mut stream_rng(9, i)).unwrap();
            for (k, &t) in ts.iter().enumerate() {
                let w = AgingWindow::new(5.0, t).unwrap();
                let single = simulate_renewal_count(&m, &w, &mut stream_rng(9, i)).unwrap();
                assert_eq!(grid[k], single);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = WaitingTimeModel::new(0.6, 10.0).unwrap();
        let w = AgingWindow::new(0.0, 1e3).unwrap();
        let err = simulate_renewal_count_capped(&m, &w, 10, &mut stream_rng(1, 0)).unwrap_err();
        assert!(matches!(err, Error::IterationCap { cap: 10 }));
    }

    #[test]
    fn regime_labels() {
        let m = WaitingTimeModel::new(0.6, 0.05).unwrap();
        let r = Regime::classify(&m, &AgingWindow::new(1000.0, 1.0).unwrap());
        assert_eq!(r.aging, Aging::Strong);
        assert_eq!(r.label(), "strong_aging;lambda_ta>>1;lambda_t<<1");
        let r = Regime::classify(&m, &AgingWindow::new(0.0, 5.0).unwrap());
        assert_eq!(r.aging, Aging::Weak);
    }
}
