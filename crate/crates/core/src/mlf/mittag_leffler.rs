use std::f64::consts::PI;

use super::gamma::{gamma_sign, ln_gamma, rgamma, sin_pi};
use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_graded, Endpoint, Tolerance};

/// Parameters (α, β) of the two-parameter Mittag-Leffler function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlfParams {
    alpha: f64,
    beta: f64,
}

impl MlfParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return domain(format!("Mittag-Leffler alpha = {alpha} outside (0, 2)"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("Mittag-Leffler beta = {beta} must be positive"));
        }
        Ok(MlfParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

const SERIES_TERMS: usize = 200;
const ASYMPTOTIC_TERMS: usize = 4;
// accept the truncated expansion only below this relative remainder
const ASYMPTOTIC_ACCEPT: f64 = 1e-13;
// largest z^{1/α} for which the alternating series keeps ~11 digits
const NEGATIVE_SERIES_EXPONENT: f64 = 8.0;

/// Largest |z| for which 200 series terms reach a 1e-16 tail.
pub(crate) fn positive_series_radius(alpha: f64, beta: f64) -> f64 {
    let n = SERIES_TERMS as f64;
    ((ln_gamma(n * alpha + beta) - 36.84) / n).exp()
}

pub(crate) fn negative_series_radius(alpha: f64, beta: f64) -> f64 {
    positive_series_radius(alpha, beta).min(NEGATIVE_SERIES_EXPONENT.powf(alpha))
}

/// E_{α,β}(z) for real z.
///
/// Power series inside a radius where 200 terms suffice, the large-argument
/// expansion beyond it when its first neglected term is below 1e-13, and an
/// integral representation otherwise.
pub fn mittag_leffler(params: MlfParams, z: f64) -> Result<f64> {
    let (a, b) = (params.alpha, params.beta);
    if !z.is_finite() {
        return domain("Mittag-Leffler argument must be finite");
    }
    if z == 0.0 {
        return Ok(rgamma(b));
    }
    if a == 1.0 && b == 1.0 {
        let v = z.exp();
        if v.is_infinite() {
            return Err(Error::Overflow(format!("exp({z})")));
        }
        return Ok(v);
    }
    if z > 0.0 {
        if z <= positive_series_radius(a, b) {
            return Ok(series(a, b, z));
        }
        let (coef, rest) = positive_split(a, b, z)?;
        let lead = z.powf(1.0 / a) + coef.abs().ln();
        if lead > 709.0 {
            return Err(Error::Overflow(format!(
                "E_{{{a},{b}}}({z}) exceeds the double range"
            )));
        }
        return Ok(coef * z.powf(1.0 / a).exp() + rest);
    }
    if -z <= negative_series_radius(a, b) {
        return Ok(series(a, b, z));
    }
    if a == 1.0 && b.fract() == 0.0 {
        return Ok(integer_beta_exp(b as u32, z));
    }
    if let Some(v) = algebraic_expansion(a, b, z) {
        return Ok(v);
    }
    if a >= 1.0 {
        return Err(Error::Unsupported(format!(
            "E_{{{a},{b}}}({z}): negative argument beyond the series range needs alpha < 1"
        )));
    }
    remainder_integral(a, b, z)
}

/// E_{α,β}(z)·exp(-z^{1/α}) for z > 0, finite even where E itself overflows.
pub fn mittag_leffler_scaled(params: MlfParams, z: f64) -> Result<f64> {
    let (a, b) = (params.alpha, params.beta);
    if !(z > 0.0) {
        return domain("scaled Mittag-Leffler needs z > 0");
    }
    let e = z.powf(1.0 / a);
    if z <= positive_series_radius(a, b) {
        return Ok(series(a, b, z) * (-e).exp());
    }
    let (coef, rest) = positive_split(a, b, z)?;
    Ok(coef + rest * (-e).exp())
}

pub(crate) fn series(a: f64, b: f64, z: f64) -> f64 {
    let lz = z.abs().ln();
    let neg = z < 0.0;
    let mut sum = rgamma(b);
    let mut comp = 0.0;
    for k in 1..=4 * SERIES_TERMS {
        let arg = a * k as f64 + b;
        let mag = (k as f64 * lz - ln_gamma(arg)).exp();
        let mut term = mag * gamma_sign(arg);
        if neg && k % 2 == 1 {
            term = -term;
        }
        // Kahan summation keeps the alternating case tidy
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if mag < 1e-17 * sum.abs() && k > 2 {
            break;
        }
    }
    sum
}

/// Split E = coef·e^{z^{1/α}} + rest for large positive z.
fn positive_split(a: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    let coef = z.powf((1.0 - b) / a) / a;
    let mut rest = 0.0;
    for k in 1..=ASYMPTOTIC_TERMS {
        rest -= z.powi(-(k as i32)) * rgamma(b - a * k as f64);
    }
    let remainder = neglected_term(a, b, z);
    let scale = coef * z.powf(1.0 / a).min(700.0).exp();
    if remainder <= ASYMPTOTIC_ACCEPT * scale.max(rest.abs()) || a >= 1.0 {
        return Ok((coef, rest));
    }
    Ok((coef, remainder_integral(a, b, z)?))
}

fn neglected_term(a: f64, b: f64, z: f64) -> f64 {
    let k = ASYMPTOTIC_TERMS as i32 + 1;
    let mut r = (z.abs().powi(-k) * rgamma(b - a * k as f64)).abs();
    if r == 0.0 {
        r = (z.abs().powi(-k - 1) * rgamma(b - a * (k + 1) as f64)).abs();
    }
    r
}

fn algebraic_expansion(a: f64, b: f64, z: f64) -> Option<f64> {
    let mut sum = 0.0;
    for k in 1..=ASYMPTOTIC_TERMS {
        sum -= z.powi(-(k as i32)) * rgamma(b - a * k as f64);
    }
    if neglected_term(a, b, z) < ASYMPTOTIC_ACCEPT * sum.abs() {
        Some(sum)
    } else {
        None
    }
}

/// Closed form of E_{1,n}(z) = z^{1-n} (e^z - Σ_{k<n-1} z^k/k!).
fn integer_beta_exp(n: u32, z: f64) -> f64 {
    if n == 1 {
        return z.exp();
    }
    // recurrence E_{1,n+1}(z) = (E_{1,n}(z) - 1/(n-1)!) / z, fine for |z| large
    let mut e = z.exp();
    let mut fact = 1.0;
    for m in 1..n {
        e = (e - 1.0 / fact) / z;
        fact *= m as f64;
    }
    e
}

/// ∫₀^∞ K(r) dr, the non-exponential part of E_{α,β}(z) for 0 < α < 1.
///
/// The integral form needs β < 1 + α; larger β is lowered with
/// E_{α,β}(z) = (E_{α,β-α}(z) - 1/Γ(β-α)) / z.
fn remainder_integral(a: f64, b: f64, z: f64) -> Result<f64> {
    if b >= 1.0 + a {
        let lower = remainder_integral(a, b - a, z)?;
        return Ok((lower - rgamma(b - a)) / z);
    }
    let s1 = sin_pi(1.0 - b);
    let s2 = sin_pi(1.0 - b + a);
    let c = (PI * a).cos();
    let integrand = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let r = rho.powf(a);
        let num = r * s1 - z * s2;
        let den = r * r - 2.0 * r * z * c + z * z;
        rho.powf(a - b) * (-rho).exp() * num / den / PI
    };
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-13,
        max_intervals: 4000,
    };
    let head = integrate_graded(integrand, 0.0, 1.0, 1.0 + a - b, Endpoint::Left, tol)?;
    let rz = z.abs().powf(1.0 / a);
    let mut pts = vec![1.0];
    if rz > 1.0 && rz < 70.0 {
        pts.push(rz);
    }
    pts.push(80.0);
    let mut total = head.value;
    for w in pts.windows(2) {
        total += integrate(integrand, w[0], w[1], tol)?.value;
    }
    Ok(total)
}
