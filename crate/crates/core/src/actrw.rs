//! Aging continuous-time random walk: trajectories, mean squared
//! displacement, propagator and the biased-lattice response experiment.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{derive_seed, mean_and_se, run_trajectories, EnsembleResult, TrajectoryRng};
use crate::error::{domain, Error, Result};
use crate::laplace::{invert_real_scaled, tempered_increment, CROSSING};
use crate::mlf::g_aux;
use crate::quad::{integrate_graded, integrate_pieces, Endpoint, Tolerance};
use crate::renewal::{
    check_grid, for_each_epoch, integrated_g, mean_renewals_theory, AgingWindow, TheoryMode, DEFAULT_RENEWAL_CAP,
    SMALL_RATIO,
};
use crate::sampling::{JumpModel, WaitingTimeModel};

/// Displacement of one walker over the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkRecord {
    /// x(tₐ + t) - x(tₐ)
    pub x_final: f64,
    pub n_a: u64,
    pub moved: bool,
}

/// Runs the renewal clock from 0 and sums the jumps of epochs in (tₐ, tₐ+t].
pub fn simulate_walk(
    model: &WaitingTimeModel,
    jump: &JumpModel,
    window: &AgingWindow,
    rng: &mut TrajectoryRng,
) -> Result<WalkRecord> {
    let mut rec = walk_on_grid(model, jump, window.t_a, &[window.t], DEFAULT_RENEWAL_CAP, rng)?;
    Ok(rec.pop().expect("one grid point"))
}

/// Walk records at tₐ + t_k for an increasing grid, from one trajectory.
pub fn walk_on_grid(
    model: &WaitingTimeModel,
    jump: &JumpModel,
    t_a: f64,
    ts: &[f64],
    cap: u64,
    rng: &mut TrajectoryRng,
) -> Result<Vec<WalkRecord>> {
    check_grid(t_a, ts)?;
    let mut out = Vec::with_capacity(ts.len());
    let (mut x, mut n) = (0.0, 0u64);
    let horizon = t_a + ts[ts.len() - 1];
    let TrajectoryRng { clock, jumps } = rng;
    let record = |x: f64, n: u64| WalkRecord {
        x_final: x,
        n_a: n,
        moved: n > 0,
    };
    for_each_epoch(model, t_a, horizon, cap, clock, |epoch| {
        while t_a + ts[out.len()] < epoch {
            out.push(record(x, n));
        }
        x += jump.sample(jumps);
        n += 1;
    })?;
    while out.len() < ts.len() {
        out.push(record(x, n));
    }
    Ok(out)
}

/// Walk records of an ensemble on a common grid of observation times.
#[derive(Debug, Clone)]
pub struct WalkEnsemble {
    pub t_a: f64,
    pub ts: Vec<f64>,
    pub seed: u64,
    /// records[i][k]: trajectory i at ts[k]
    pub records: Vec<Vec<WalkRecord>>,
}

impl WalkEnsemble {
    pub fn simulate(
        model: &WaitingTimeModel,
        jump: &JumpModel,
        t_a: f64,
        ts: &[f64],
        n_traj: usize,
        seed: u64,
    ) -> Result<Self> {
        check_grid(t_a, ts)?;
        let records = run_trajectories(n_traj, seed, |rng| walk_on_grid(model, jump, t_a, ts, DEFAULT_RENEWAL_CAP, rng))?;
        Ok(WalkEnsemble {
            t_a,
            ts: ts.to_vec(),
            seed,
            records,
        })
    }

    fn column<F: Fn(&WalkRecord) -> f64>(&self, k: usize, f: F) -> EnsembleResult {
        let values: Vec<f64> = self.records.iter().map(|r| f(&r[k])).collect();
        EnsembleResult::from_samples(&values, self.seed)
    }

    /// ⟨x²⟩ at ts[k].
    pub fn msd(&self, k: usize) -> EnsembleResult {
        self.column(k, |r| r.x_final * r.x_final)
    }

    pub fn mean_displacement(&self, k: usize) -> EnsembleResult {
        self.column(k, |r| r.x_final)
    }

    pub fn mean_renewals(&self, k: usize) -> EnsembleResult {
        self.column(k, |r| r.n_a as f64)
    }

    /// Fraction of walkers that have not moved by ts[k].
    pub fn motionless(&self, k: usize) -> EnsembleResult {
        let n = self.records.len() as f64;
        let p = self.records.iter().filter(|r| !r[k].moved).count() as f64 / n;
        EnsembleResult {
            n_traj: self.records.len(),
            seed: self.seed,
            estimate: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            raw_histogram: None,
        }
    }
}

/// ⟨x²(tₐ, t)⟩ by Monte Carlo.
pub fn msd_mc(
    model: &WaitingTimeModel,
    jump: &JumpModel,
    window: &AgingWindow,
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    let ens = WalkEnsemble::simulate(model, jump, window.t_a, &[window.t], n_traj, seed)?;
    Ok(ens.msd(0))
}

/// ⟨x²(tₐ, t)⟩ = M₂⟨nₐ(tₐ, t)⟩ for symmetric jumps.
///
/// Asymptotic mode gives M₂·G(t) for tₐ ≪ t and M₂·t·g(tₐ) for t ≪ tₐ,
/// and M₂·t/⟨τ⟩ once λtₐ ≫ 1.
pub fn msd_theory(model: &WaitingTimeModel, jump: &JumpModel, window: &AgingWindow, mode: TheoryMode) -> Result<f64> {
    if !jump.is_symmetric() {
        return domain("mean squared displacement theory needs symmetric jumps");
    }
    Ok(jump.second_moment() * mean_renewals_theory(model, window, mode)?)
}

/// Uniform binning of the movers' displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorBins {
    pub count: usize,
    pub half_width: f64,
}

pub const DEFAULT_PROPAGATOR_BINS: usize = 201;

impl PropagatorBins {
    pub fn new(count: usize, half_width: f64) -> Result<Self> {
        if count == 0 {
            return domain("propagator histogram needs at least one bin");
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return domain(format!("histogram half width {half_width} must be positive"));
        }
        Ok(PropagatorBins { count, half_width })
    }

    /// 201 bins over ±6 standard deviations of the exact theory.
    pub fn around_msd(model: &WaitingTimeModel, jump: &JumpModel, window: &AgingWindow) -> Result<Self> {
        let msd = msd_theory(model, jump, window, TheoryMode::Exact)?;
        PropagatorBins::new(DEFAULT_PROPAGATOR_BINS, 6.0 * msd.sqrt())
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = 2.0 * self.half_width / self.count as f64;
        (0..=self.count).map(|i| -self.half_width + i as f64 * w).collect()
    }

    fn index(&self, x: f64) -> usize {
        let w = 2.0 * self.half_width / self.count as f64;
        let i = ((x + self.half_width) / w).floor();
        i.clamp(0.0, (self.count - 1) as f64) as usize
    }
}

/// Distribution of x(tₐ+t) - x(tₐ): a histogram of the movers and the
/// weight of the walkers that never jumped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagatorHistogram {
    pub bin_edges: Vec<f64>,
    /// Fraction of all walkers per bin; movers beyond the range are counted
    /// in the outermost bins.
    pub masses: Vec<f64>,
    pub atom_at_zero: f64,
    pub window: AgingWindow,
    pub n_traj: usize,
}

impl PropagatorHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Mass divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .zip(&self.masses)
            .map(|(w, m)| m / (w[1] - w[0]))
            .collect()
    }

    /// Moment of order `k` about zero of the movers' histogram.
    pub fn mover_moment(&self, k: i32) -> f64 {
        let total: f64 = self.masses.iter().sum();
        self.centers()
            .iter()
            .zip(&self.masses)
            .map(|(x, m)| x.powi(k) * m)
            .sum::<f64>()
            / total
    }
}

pub fn propagator_mc(
    model: &WaitingTimeModel,
    jump: &JumpModel,
    window: &AgingWindow,
    n_traj: usize,
    bins: PropagatorBins,
    seed: u64,
) -> Result<PropagatorHistogram> {
    if n_traj == 0 {
        return domain("propagator histogram needs at least one trajectory");
    }
    let records = run_trajectories(n_traj, seed, |rng| simulate_walk(model, jump, window, rng))?;
    Ok(histogram_of(&records, bins, *window))
}

pub fn histogram_of(records: &[WalkRecord], bins: PropagatorBins, window: AgingWindow) -> PropagatorHistogram {
    let n = records.len() as f64;
    let mut counts = vec![0u64; bins.count];
    let mut still = 0u64;
    for r in records {
        if r.moved {
            counts[bins.index(r.x_final)] += 1;
        } else {
            still += 1;
        }
    }
    PropagatorHistogram {
        bin_edges: bins.edges(),
        masses: counts.iter().map(|&c| c as f64 / n).collect(),
        atom_at_zero: still as f64 / n,
        window,
        n_traj: records.len(),
    }
}

/// Which closed form of the propagator to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorRegime {
    WeakAging,
    StrongAging,
}

// crossing at most this fraction of the way to the pole of F₁
const POLE_MARGIN: f64 = 0.6;
const PROPAGATOR_NODES: usize = 64;
const PROPAGATOR_CHECK: usize = 16;
// contour scale times t; sets the truncation error e^{-1.31 c t}
const MIN_SCALED_WIDTH: f64 = 10.0;

/// Moving part of P(x, tₐ, t) from the small-u closed forms, with
/// F₁(u,x) = κ e^{-κ|x|}, κ² = x_u/((M₂/2)(1 - x_u)), x_u = (u+λ)^α - λ^α:
///
/// weak aging   P(x,tₐ,u) = (1 - x_u G(tₐ)) F₁(u,x) / (2u),
/// strong aging P(x,tₐ,u) = x_u g(tₐ) F₁(u,x) / (2u²).
///
/// F₁ has a pole where x_u = 1, at u* = (1+λ^α)^{1/α} - λ, and the
/// inversion contour must pass left of it. For short windows the contour
/// is shrunk accordingly; evaluation is refused once it gets too small to
/// be accurate.
pub fn propagator_theory(
    model: &WaitingTimeModel,
    jump: &JumpModel,
    x: f64,
    window: &AgingWindow,
    regime: PropagatorRegime,
) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("position x = {x} must be finite"));
    }
    if !jump.is_symmetric() {
        return domain("propagator theory needs symmetric jumps");
    }
    let (t_a, t) = (window.t_a, window.t);
    let half_m2 = 0.5 * jump.second_moment();
    let ax = x.abs();
    let f1 = move |u: Complex64| {
        let xu = tempered_increment(model, u);
        let kappa = (xu / (half_m2 * (1.0 - xu))).sqrt();
        (xu, kappa * (-kappa * ax).exp())
    };
    let transform: Box<dyn Fn(Complex64) -> Result<Complex64> + Sync> = match regime {
        PropagatorRegime::WeakAging => {
            let big_g = integrated_g(model, t_a)?;
            Box::new(move |u| {
                let (xu, f) = f1(u);
                Ok((1.0 - xu * big_g) * f / (2.0 * u))
            })
        }
        PropagatorRegime::StrongAging => {
            if t_a == 0.0 {
                return domain("strong-aging propagator needs t_a > 0");
            }
            let g = g_aux(model, t_a)?;
            Box::new(move |u| {
                let (xu, f) = f1(u);
                Ok(xu * g * f / (2.0 * u * u))
            })
        }
    };
    let lam_a = model.lambda_alpha();
    let pole = (1.0 + lam_a).powf(1.0 / model.alpha()) - model.lambda();
    let nodes = PROPAGATOR_NODES + PROPAGATOR_CHECK;
    let scale = (nodes as f64 / t).min(POLE_MARGIN * pole / CROSSING);
    if scale * t < MIN_SCALED_WIDTH {
        return Err(Error::Unsupported(format!(
            "propagator closed form at t={t}: the pole of F1 at u={pole:.4} is too close to the origin"
        )));
    }
    let coarse_v = invert_real_scaled(&transform, t, PROPAGATOR_NODES, scale)?;
    let fine_v = invert_real_scaled(&transform, t, nodes, scale)?;
    if (coarse_v - fine_v).abs() > 1e-6 * fine_v.abs() + 1e-12 {
        return Err(Error::NonConvergence(format!(
            "propagator at x={x}, t={t}: {coarse_v} vs {fine_v} with more nodes"
        )));
    }
    Ok(fine_v)
}

/// Biased lattice walk: unbiased steps ±c during (0, tₐ], bias h during
/// (tₐ, tₐ + t_b].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseExperiment {
    pub model: WaitingTimeModel,
    pub c: f64,
    pub h: f64,
    pub t_a: f64,
    pub t_b: f64,
}

impl ResponseExperiment {
    pub fn new(model: WaitingTimeModel, c: f64, h: f64, t_a: f64, t_b: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("lattice spacing c = {c} must be positive"));
        }
        if !(0.0..1.0).contains(&h) {
            return domain(format!("bias h = {h} must lie in [0, 1)"));
        }
        AgingWindow::new(t_a, t_b)?;
        Ok(ResponseExperiment { model, c, h, t_a, t_b })
    }
}

/// Relative standard error of ⟨x_b⟩ above which a response run is flagged.
pub const NOISY_RESPONSE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseRecord {
    pub n_traj: usize,
    pub seed: u64,
    pub mean_x_b: f64,
    pub mean_x_b_se: f64,
    /// ⟨x_b²⟩ of an independent unbiased ensemble
    pub mean_r2_aging: f64,
    pub mean_r2_aging_se: f64,
    /// ⟨nₐn_b⟩/(⟨nₐ⟩⟨n_b⟩)
    pub counting_ratio: f64,
    pub counting_ratio_se: f64,
    /// counting_ratio - 1
    pub f_r_mc: f64,
    /// ⟨x_b⟩c/(h⟨r²⟩₀); None when h = 0
    pub einstein_ratio: Option<f64>,
    pub noisy: bool,
}

#[derive(Debug, Clone, Copy)]
struct Intervals {
    n_a: u64,
    n_b: u64,
    x_b: f64,
}

fn lattice_step<R: Rng + ?Sized>(c: f64, h: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if u < 0.5 * (1.0 + h) {
        c
    } else {
        -c
    }
}

fn response_trajectory(cfg: &ResponseExperiment, h: f64, rng: &mut TrajectoryRng) -> Result<Intervals> {
    let mut out = Intervals { n_a: 0, n_b: 0, x_b: 0.0 };
    let TrajectoryRng { clock, jumps } = rng;
    for_each_epoch(&cfg.model, 0.0, cfg.t_a + cfg.t_b, DEFAULT_RENEWAL_CAP, clock, |epoch| {
        if epoch <= cfg.t_a {
            lattice_step(cfg.c, 0.0, jumps);
            out.n_a += 1;
        } else {
            out.x_b += lattice_step(cfg.c, h, jumps);
            out.n_b += 1;
        }
    })?;
    Ok(out)
}

// ratio E[ab]/(E[a]E[b]) with a delta-method standard error
fn counting_ratio(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let (m_ab, _) = mean_and_se(&ab);
    let (m_a, _) = mean_and_se(a);
    let (m_b, _) = mean_and_se(b);
    let r = m_ab / (m_a * m_b);
    let grad = [1.0 / (m_a * m_b), -r / m_a, -r / m_b];
    let cols = [&ab[..], a, b];
    let means = [m_ab, m_a, m_b];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let cov = cols[i]
                .iter()
                .zip(cols[j])
                .map(|(x, y)| (x - means[i]) * (y - means[j]))
                .sum::<f64>()
                / (n - 1.0);
            var += grad[i] * grad[j] * cov;
        }
    }
    (r, (var / n).sqrt())
}

/// Runs the biased ensemble and an unbiased companion ensemble seeded
/// from [`derive_seed`].
pub fn response_experiment(cfg: &ResponseExperiment, n_traj: usize, seed: u64) -> Result<ResponseRecord> {
    if n_traj < 2 {
        return domain("response experiment needs at least two trajectories");
    }
    let biased = run_trajectories(n_traj, seed, |rng| response_trajectory(cfg, cfg.h, rng))?;
    let free = run_trajectories(n_traj, derive_seed(seed, 0), |rng| response_trajectory(cfg, 0.0, rng))?;

    let x_b: Vec<f64> = biased.iter().map(|r| r.x_b).collect();
    let (mean_x_b, mean_x_b_se) = mean_and_se(&x_b);
    let r2: Vec<f64> = free.iter().map(|r| r.x_b * r.x_b).collect();
    let (mean_r2, mean_r2_se) = mean_and_se(&r2);
    let n_a: Vec<f64> = biased.iter().map(|r| r.n_a as f64).collect();
    let n_b: Vec<f64> = biased.iter().map(|r| r.n_b as f64).collect();
    let (ratio, ratio_se) = counting_ratio(&n_a, &n_b);

    let einstein_ratio = (cfg.h > 0.0).then(|| mean_x_b * cfg.c / (cfg.h * mean_r2));
    let noisy = cfg.h > 0.0 && !(mean_x_b_se <= NOISY_RESPONSE * mean_x_b.abs());
    if noisy {
        log::warn!(
            "response signal is noisy: <x_b> = {mean_x_b} with standard error {mean_x_b_se} ({n_traj} trajectories)"
        );
    }
    Ok(ResponseRecord {
        n_traj,
        seed,
        mean_x_b,
        mean_x_b_se,
        mean_r2_aging: mean_r2,
        mean_r2_aging_se: mean_r2_se,
        counting_ratio: ratio,
        counting_ratio_se: ratio_se,
        f_r_mc: ratio - 1.0,
        einstein_ratio,
        noisy,
    })
}

fn conv_tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-10,
        max_intervals: 4000,
    }
}

/// (g*g)(t) = ∫₀ᵗ g(τ)g(t-τ)dτ.
pub fn g_self_convolution(model: &WaitingTimeModel, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("convolution needs t > 0, got {t}"));
    }
    let g = |z: f64| g_aux(model, z).unwrap_or(f64::NAN);
    let f = |tau: f64| g(tau) * g(t - tau);
    // symmetric about t/2; the τ^{α-1} singularity sits at 0
    let half = 0.5 * t;
    let head = half.min(1.0);
    let mut total = integrate_graded(f, 0.0, head, model.alpha(), Endpoint::Left, conv_tol())?.value;
    if half > head {
        let mut pts = vec![head];
        while pts[pts.len() - 1] * 10.0 < half {
            let next = pts[pts.len() - 1] * 10.0;
            pts.push(next);
        }
        pts.push(half);
        total += integrate_pieces(f, &pts, conv_tol())?.value;
    }
    let v = 2.0 * total;
    if !v.is_finite() {
        return Err(Error::NonConvergence(format!("(g*g)({t}) evaluated to {v}")));
    }
    Ok(v)
}

/// (g*g)(tₐ)/(G(tₐ)g(tₐ)), the limit of ⟨nₐn_b⟩/(⟨nₐ⟩⟨n_b⟩) for t_b ≪ tₐ.
///
/// The value does not depend on t_b; t_b only enters the validity check.
/// At λ = 0 it equals αΓ(α)²/Γ(2α).
pub fn fluctuation_response_theory(model: &WaitingTimeModel, t_a: f64, t_b: f64) -> Result<f64> {
    let w = AgingWindow::new(t_a, t_b)?;
    if !(w.t < SMALL_RATIO * w.t_a) {
        return Err(Error::RegimeAmbiguous(format!(
            "fluctuation-response limit needs t_b << t_a, got t_a={t_a}, t_b={t_b}"
        )));
    }
    let num = g_self_convolution(model, t_a)?;
    Ok(num / (integrated_g(model, t_a)? * g_aux(model, t_a)?))
}
