//! Laplace-domain formulas of the tempered renewal process and their
//! numerical inversion.
//!
//! Transforms are written so that the difference quotients appearing in the
//! forward waiting time stay accurate when s and u are close: every
//! difference of powers goes through `expm1`/`log1p`.

mod talbot;

pub use talbot::{
    double_inverse_laplace, gaver_stehfest, invert_complex_with, invert_real_scaled, invert_real_with,
    inverse_laplace, real_axis_crossing, DoubleInversion, CROSSING, CHECK_NODE_INCREMENT, DEFAULT_NODES, DEFAULT_OUTER_NODES,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::mlf::gamma;
use crate::sampling::WaitingTimeModel;

/// Which transform of the waiting-time density is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhiForm {
    /// φ(u) = exp(λ^α - (u+λ)^α).
    #[default]
    Exact,
    /// The small-u expansion φ(u) ≈ 1 + λ^α - (u+λ)^α.
    SmallU,
}

/// Point (s, u) of the double transform; s is conjugate to tₐ, u to t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint {
    pub s: Complex64,
    pub u: Complex64,
}

impl LaplacePoint {
    pub fn new(s: Complex64, u: Complex64) -> Self {
        LaplacePoint { s, u }
    }

    pub fn real(s: f64, u: f64) -> Self {
        LaplacePoint {
            s: Complex64::new(s, 0.0),
            u: Complex64::new(u, 0.0),
        }
    }
}

pub(crate) fn expm1(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return z.exp() - 1.0;
    }
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em = z.re.exp_m1();
    Complex64::new(em * c - 2.0 * half * half, z.re.exp() * s)
}

pub(crate) fn log1p(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return (z + 1.0).ln();
    }
    let re = 0.5 * (2.0 * z.re + z.re * z.re + z.im * z.im).ln_1p();
    Complex64::new(re, z.im.atan2(1.0 + z.re))
}

fn check_branch(model: &WaitingTimeModel, u: Complex64) -> Result<()> {
    if !u.re.is_finite() || !u.im.is_finite() {
        return domain(format!("transform variable {u} is not finite"));
    }
    if u.im == 0.0 && u.re < -model.lambda() {
        return domain(format!(
            "u = {} lies on the branch cut u <= -lambda = {}",
            u.re,
            -model.lambda()
        ));
    }
    Ok(())
}

/// (u+λ)^α - λ^α on the principal branch.
pub fn tempered_increment(model: &WaitingTimeModel, u: Complex64) -> Complex64 {
    let a = model.alpha();
    let lam = model.lambda();
    if lam == 0.0 {
        if u == Complex64::new(0.0, 0.0) {
            return u;
        }
        return (a * u.ln()).exp();
    }
    lam.powf(a) * expm1(a * log1p(u / lam))
}

/// [x(s) - x(u)] / (s - u) with x(v) = (v+λ)^α - λ^α, together with x(s) - x(u).
fn increment_quotient(model: &WaitingTimeModel, s: Complex64, u: Complex64) -> (Complex64, Complex64) {
    let a = model.alpha();
    let base = u + model.lambda();
    let ds = s - u;
    if ds.norm() < 1e-8 * (s.norm() + u.norm()) {
        // derivative with its first correction
        let q = a * base.powf(a - 1.0) * (1.0 + 0.5 * (a - 1.0) * ds / base);
        return (q, q * ds);
    }
    let ratio = ds / base;
    if ratio.norm() > 0.5 {
        // far apart the direct difference is accurate, and s, u may lie on
        // opposite sides of the cut where the factored power changes branch
        let delta = tempered_increment(model, s) - tempered_increment(model, u);
        return (delta / ds, delta);
    }
    let delta = base.powf(a) * expm1(a * log1p(ratio));
    (delta / ds, delta)
}

/// φ(u), exact or in its small-u form.
pub fn waiting_time_lt(model: &WaitingTimeModel, u: Complex64, form: PhiForm) -> Result<Complex64> {
    check_branch(model, u)?;
    let x = tempered_increment(model, u);
    Ok(match form {
        PhiForm::Exact => (-x).exp(),
        PhiForm::SmallU => 1.0 - x,
    })
}

/// 1 - φ(u) without cancellation.
fn one_minus_phi(x: Complex64, form: PhiForm) -> Complex64 {
    match form {
        PhiForm::Exact => -expm1(-x),
        PhiForm::SmallU => x,
    }
}

/// Forward waiting time ω(s,u) = [φ(s) - φ(u)] / [(1 - φ(s))(u - s)].
///
/// Close to the diagonal s = u the difference quotient is replaced by the
/// derivative of φ, so the removable singularity is harmless.
pub fn forward_waiting_lt(model: &WaitingTimeModel, pt: LaplacePoint, form: PhiForm) -> Result<Complex64> {
    check_branch(model, pt.s)?;
    check_branch(model, pt.u)?;
    let xs = tempered_increment(model, pt.s);
    let (q, delta) = increment_quotient(model, pt.s, pt.u);
    let d = match form {
        PhiForm::Exact if delta.norm() > 0.5 => {
            let xu = tempered_increment(model, pt.u);
            ((-xu).exp() - (-xs).exp()) / (pt.s - pt.u)
        }
        PhiForm::Exact => {
            let ratio = if delta.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                expm1(delta) / delta
            };
            (-xs).exp() * ratio * q
        }
        PhiForm::SmallU => q,
    };
    Ok(d / one_minus_phi(xs, form))
}

/// P₀(s,u) = 1/(su) - ω(s,u)/u.
pub fn survival_lt(model: &WaitingTimeModel, pt: LaplacePoint, form: PhiForm) -> Result<Complex64> {
    let w = forward_waiting_lt(model, pt, form)?;
    Ok((1.0 / pt.s - w) / pt.u)
}

/// Σ_n n^p P_n(s,u) for p = 1, 2: ω/(u(1-φ)) and ω(1+φ)/(u(1-φ)²).
pub fn renewal_moment_lt(model: &WaitingTimeModel, pt: LaplacePoint, p: u32, form: PhiForm) -> Result<Complex64> {
    let w = forward_waiting_lt(model, pt, form)?;
    let xu = tempered_increment(model, pt.u);
    let omp = one_minus_phi(xu, form);
    match p {
        1 => Ok(w / (pt.u * omp)),
        2 => {
            let phi = 1.0 - omp;
            Ok(w * (1.0 + phi) / (pt.u * omp * omp))
        }
        _ => domain(format!("renewal moment transform available for p = 1, 2; got {p}")),
    }
}

/// Transform of the renewal function of the non-aged process,
/// φ(u) / (u(1 - φ(u))).
pub fn renewal_function_lt(model: &WaitingTimeModel, u: Complex64, form: PhiForm) -> Result<Complex64> {
    check_branch(model, u)?;
    let x = tempered_increment(model, u);
    let omp = one_minus_phi(x, form);
    Ok((1.0 - omp) / (u * omp))
}

/// -Γ(n-α)/Γ(-α) λ^{α-n}.
///
/// For n = 1 this is the mean waiting time αλ^{α-1}. For n ≥ 2 it is the
/// n-th cumulant of φ, i.e. (-1)^n times the n-th derivative of the exponent
/// λ^α - (u+λ)^α at u = 0; use [`raw_moment_tau`] for E[τⁿ].
pub fn moment_tau(model: &WaitingTimeModel, n: u32) -> Result<f64> {
    if model.lambda() == 0.0 {
        return domain("waiting-time moments diverge for lambda = 0");
    }
    if n == 0 {
        return domain("moment order must be positive");
    }
    let a = model.alpha();
    Ok(-gamma(n as f64 - a) / gamma(-a) * model.lambda().powf(a - n as f64))
}

/// E[τⁿ] assembled from the cumulants by m_n = Σ_k C(n-1,k-1) κ_k m_{n-k}.
pub fn raw_moment_tau(model: &WaitingTimeModel, n: u32) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let kappa: Vec<f64> = (1..=n).map(|k| moment_tau(model, k)).collect::<Result<_>>()?;
    let mut m = vec![1.0f64; n as usize + 1];
    for order in 1..=n as usize {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 1..=order {
            acc += binom * kappa[k - 1] * m[order - k];
            binom *= (order - k) as f64 / k as f64;
        }
        m[order] = acc;
    }
    Ok(m[n as usize])
}
