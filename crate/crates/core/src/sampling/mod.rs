//! Waiting-time and jump-length generators.

mod stable;

pub use stable::{sample_one_sided_stable, stable_cdf, stable_density, stable_laplace};

use rand::Rng;
use rand_distr::{Distribution, Normal, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// How the exponential tempering e^{-λt} is imposed on stable draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperingStrategy {
    /// Accept a stable draw X with probability e^{-λX}.
    ExpTiltRejection,
    /// Pareto proposal on [t₀, ∞) accepted against the exact density.
    PowerlawEnvelope,
}

/// Waiting-time law φ(t) = L_α(t) e^{λ^α - λt}, 0 < α < 1, λ ≥ 0.
///
/// Its Laplace transform is exp(λ^α - (u+λ)^α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaitingTimeModel {
    alpha: f64,
    lambda: f64,
    strategy: TemperingStrategy,
    t0: f64,
    #[serde(skip)]
    envelope_bound: f64,
}

pub const DEFAULT_T0: f64 = 1e-3;

impl WaitingTimeModel {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha = {alpha} must lie in (0, 1)"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("lambda = {lambda} must be a finite non-negative rate"));
        }
        Ok(WaitingTimeModel {
            alpha,
            lambda,
            strategy: TemperingStrategy::ExpTiltRejection,
            t0: DEFAULT_T0,
            envelope_bound: f64::NAN,
        })
    }

    /// Same law, sampled with the power-law envelope starting at `t0`.
    ///
    /// The acceptance bound M = sup H is found here once, so construction
    /// costs a few thousand density evaluations.
    pub fn with_envelope(alpha: f64, lambda: f64, t0: f64) -> Result<Self> {
        let mut m = Self::new(alpha, lambda)?;
        if !(t0 > 0.0 && t0.is_finite()) {
            return domain(format!("envelope cutoff t0 = {t0} must be positive"));
        }
        m.strategy = TemperingStrategy::PowerlawEnvelope;
        m.t0 = t0;
        m.envelope_bound = m.maximize_envelope_ratio()? * (1.0 + 1e-7);
        Ok(m)
    }

    pub fn with_strategy(self, strategy: TemperingStrategy) -> Result<Self> {
        match strategy {
            TemperingStrategy::ExpTiltRejection => Ok(WaitingTimeModel {
                strategy,
                envelope_bound: f64::NAN,
                ..self
            }),
            TemperingStrategy::PowerlawEnvelope => Self::with_envelope(self.alpha, self.lambda, self.t0),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn strategy(&self) -> TemperingStrategy {
        self.strategy
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// The envelope constant M (NaN unless the envelope strategy is active).
    pub fn envelope_bound(&self) -> f64 {
        self.envelope_bound
    }

    /// λ^α, the exponent shift of the transform.
    pub fn lambda_alpha(&self) -> f64 {
        self.lambda.powf(self.alpha)
    }

    /// Mean waiting time αλ^{α-1}; infinite for λ = 0.
    pub fn mean(&self) -> f64 {
        if self.lambda == 0.0 {
            f64::INFINITY
        } else {
            self.alpha * self.lambda.powf(self.alpha - 1.0)
        }
    }

    /// φ(t).
    pub fn density(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        Ok(stable_density(self.alpha, t)? * (self.lambda_alpha() - self.lambda * t).exp())
    }

    /// H(x) = φ(x) / f₁(x) with f₁(x) = α t₀^α x^{-α-1}.
    fn envelope_ratio(&self, x: f64) -> Result<f64> {
        let f1 = self.alpha * self.t0.powf(self.alpha) * x.powf(-self.alpha - 1.0);
        Ok(self.density(x)? / f1)
    }

    fn maximize_envelope_ratio(&self) -> Result<f64> {
        let lo = self.t0.ln();
        let hi = if self.lambda > 0.0 {
            (50.0 / self.lambda).max(self.t0 * 1e3).ln()
        } else {
            (self.t0 * 1e12).max(1e8).ln()
        };
        let n = 400;
        let mut best = (lo, f64::NEG_INFINITY);
        for i in 0..=n {
            let y = lo + (hi - lo) * i as f64 / n as f64;
            let h = self.envelope_ratio(y.exp())?;
            if h > best.1 {
                best = (y, h);
            }
        }
        // golden-section refinement on log x around the best grid point
        let step = (hi - lo) / n as f64;
        let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut hc = self.envelope_ratio(c.exp())?;
        let mut hd = self.envelope_ratio(d.exp())?;
        for _ in 0..80 {
            if hc > hd {
                b = d;
                d = c;
                hd = hc;
                c = b - g * (b - a);
                hc = self.envelope_ratio(c.exp())?;
            } else {
                a = c;
                c = d;
                hc = hd;
                d = a + g * (b - a);
                hd = self.envelope_ratio(d.exp())?;
            }
        }
        let mut m = best.1.max(hc).max(hd);
        if self.lambda == 0.0 {
            // H tends to a finite limit as x → ∞
            let limit = stable::tail_constant(self.alpha) / (self.alpha * self.t0.powf(self.alpha));
            m = m.max(limit);
        }
        Ok(m)
    }

    /// One waiting time together with the number of proposals it consumed.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, u64)> {
        match self.strategy {
            TemperingStrategy::ExpTiltRejection => Ok(self.sample_exp_tilt(rng)),
            TemperingStrategy::PowerlawEnvelope => self.sample_envelope(rng),
        }
    }

    /// Exponential tilting of stable draws.
    ///
    /// When λ^α > 1 the variate is built as m^{-1/α} times a sum of m
    /// independent tilts with rate λ m^{-1/α}, m = ⌈λ^α⌉. The law is
    /// unchanged (the exponent λ^α - (u+λ)^α is additive) while the acceptance
    /// rate per proposal stays above e^{-1}.
    fn sample_exp_tilt<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        if self.lambda == 0.0 {
            return (sample_one_sided_stable(self.alpha, rng), 1);
        }
        let la = self.lambda_alpha();
        let m = if la > 1.0 { la.ceil() } else { 1.0 };
        let scale = m.powf(-1.0 / self.alpha);
        let mu = self.lambda * scale;
        let mut total = 0.0;
        let mut proposals = 0;
        for _ in 0..m as u64 {
            loop {
                proposals += 1;
                let x = sample_one_sided_stable(self.alpha, rng);
                let u: f64 = Open01.sample(rng);
                if u < (-mu * x).exp() {
                    total += x;
                    break;
                }
            }
        }
        (total * scale, proposals)
    }

    fn sample_envelope<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, u64)> {
        let mut proposals = 0;
        loop {
            proposals += 1;
            let v: f64 = Open01.sample(rng);
            let x = self.t0 * v.powf(-1.0 / self.alpha);
            let u: f64 = Open01.sample(rng);
            // squeeze: most proposals land where L_α is negligible
            if let Some(b) = stable::density_upper_bound(self.alpha, x) {
                let f1 = self.alpha * self.t0.powf(self.alpha) * x.powf(-self.alpha - 1.0);
                if u * self.envelope_bound > b * (self.lambda_alpha() - self.lambda * x).exp() / f1 {
                    continue;
                }
            }
            let h = self.envelope_ratio(x)?;
            if h > self.envelope_bound * (1.0 + 1e-9) {
                return Err(Error::Config(format!(
                    "envelope bound M = {} violated: H({x}) = {h}",
                    self.envelope_bound
                )));
            }
            if u * self.envelope_bound <= h {
                return Ok((x, proposals));
            }
        }
    }

    /// One waiting time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sample_counted(rng)?.0)
    }
}

/// Draw one waiting time from `model`.
pub fn sample_tempered_waiting<R: Rng + ?Sized>(model: &WaitingTimeModel, rng: &mut R) -> Result<f64> {
    model.sample(rng)
}

/// Jump-length law of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpModel {
    /// Zero-mean normal with variance `m2`.
    Gaussian { m2: f64 },
    /// ±c with probabilities (1 ± h)/2.
    Lattice { c: f64, h: f64 },
}

impl JumpModel {
    pub fn gaussian(m2: f64) -> Result<Self> {
        if !(m2 > 0.0 && m2.is_finite()) {
            return domain(format!("jump second moment m2 = {m2} must be positive"));
        }
        Ok(JumpModel::Gaussian { m2 })
    }

    pub fn lattice(c: f64, h: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("lattice spacing c = {c} must be positive"));
        }
        if !(h.abs() < 1.0) {
            return domain(format!("lattice bias h = {h} must satisfy |h| < 1"));
        }
        Ok(JumpModel::Lattice { c, h })
    }

    /// Second moment M₂ of a single jump.
    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpModel::Gaussian { m2 } => m2,
            JumpModel::Lattice { c, .. } => c * c,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            JumpModel::Gaussian { .. } => true,
            JumpModel::Lattice { h, .. } => h == 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpModel::Gaussian { m2 } => {
                let n = Normal::new(0.0, m2.sqrt()).expect("validated variance");
                n.sample(rng)
            }
            JumpModel::Lattice { c, h } => {
                let u: f64 = rng.random();
                if u < 0.5 * (1.0 + h) {
                    c
                } else {
                    -c
                }
            }
        }
    }
}

pub fn sample_jump<R: Rng + ?Sized>(jump: &JumpModel, rng: &mut R) -> f64 {
    jump.sample(rng)
}
