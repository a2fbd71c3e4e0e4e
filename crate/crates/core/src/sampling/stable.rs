//! One-sided α-stable law with Laplace transform e^{-u^α}.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};

use crate::error::{domain, Result};
use crate::mlf::gamma;
use crate::quad::{integrate, Tolerance};

/// Kanter's representation: one uniform angle and one unit exponential.
pub fn sample_one_sided_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v: f64 = Open01.sample(rng);
    let u = PI * v;
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Zolotarev's kernel A(u); the stable variate is (A(U)/W)^{(1-α)/α}.
fn zolotarev_a(alpha: f64, u: f64) -> f64 {
    let s = (alpha * u).sin();
    (s / u.sin()).powf(1.0 / (1.0 - alpha)) * ((1.0 - alpha) * u).sin() / s
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("stable index alpha = {alpha} outside (0, 1)"));
    }
    Ok(())
}

/// P(X ≤ x) for the one-sided stable law.
pub fn stable_cdf(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let xi = x.powf(-alpha / (1.0 - alpha));
    let r = integrate(
        |u| (-zolotarev_a(alpha, u) * xi).exp(),
        0.0,
        PI,
        Tolerance::new(1e-14, 1e-11),
    )?;
    Ok(r.value / PI)
}

/// Density L_α(x) of the one-sided stable law.
pub fn stable_density(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 4.0 && alpha <= 0.9 {
        if let Some(v) = tail_series(alpha, x) {
            return Ok(v);
        }
    }
    let xi = x.powf(-alpha / (1.0 - alpha));
    let integrand = |u: f64| {
        let a = zolotarev_a(alpha, u);
        let e = a * xi;
        if e > 745.0 {
            0.0
        } else {
            a * (-e).exp()
        }
    };
    // the integrand lives where A(u)ξ = O(1); give the adaptive rule that point
    let mut pts = vec![0.0];
    if let Some(u1) = locate_peak(alpha, xi) {
        if u1 > 1e-6 && u1 < PI - 1e-9 {
            pts.push(u1);
        }
    }
    pts.push(PI);
    let tol = Tolerance::new(1e-300, 1e-11);
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(integrand, w[0], w[1], tol)?.value;
    }
    Ok(alpha / (1.0 - alpha) * x.powf(-1.0 / (1.0 - alpha)) * total / PI)
}

/// Cheap upper bound of L_α(x), or None where it would not be useful.
///
/// A(u) increases from A(0⁺) = (1-α)α^{α/(1-α)}, and a·e^{-aξ} decreases for
/// a > 1/ξ, so for A(0⁺)ξ ≥ 1 the integrand never exceeds its value at u = 0.
pub(crate) fn density_upper_bound(alpha: f64, x: f64) -> Option<f64> {
    let a0 = (1.0 - alpha) * alpha.powf(alpha / (1.0 - alpha));
    let xi = x.powf(-alpha / (1.0 - alpha));
    if a0 * xi < 1.0 {
        return None;
    }
    Some(alpha / (1.0 - alpha) * x.powf(-1.0 / (1.0 - alpha)) * a0 * (-a0 * xi).exp())
}

/// Point where A(u)·ξ = 1 (A increases monotonically from A(0⁺) to ∞).
fn locate_peak(alpha: f64, xi: f64) -> Option<f64> {
    let target = 1.0 / xi;
    let (mut lo, mut hi) = (1e-12, PI - 1e-12);
    if zolotarev_a(alpha, lo) >= target {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zolotarev_a(alpha, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Convergent large-x expansion
/// L_α(x) = (1/π) Σ_{k≥1} (-1)^{k+1} Γ(αk+1)/k! sin(παk) x^{-αk-1}.
fn tail_series(alpha: f64, x: f64) -> Option<f64> {
    let lx = x.ln();
    let mut sum = 0.0;
    let mut max_term: f64 = 0.0;
    let mut ln_fact = 0.0;
    for k in 1..400 {
        let kf = k as f64;
        ln_fact += kf.ln();
        let mag = (crate::mlf::ln_gamma(alpha * kf + 1.0) - ln_fact - (alpha * kf + 1.0) * lx).exp();
        let term = if k % 2 == 1 { mag } else { -mag } * (PI * alpha * kf).sin();
        sum += term;
        max_term = max_term.max(mag);
        if mag < 1e-17 * sum.abs() {
            // accept only when cancellation cost less than ~4 digits
            if max_term > 1e4 * sum.abs() {
                return None;
            }
            return Some(sum / PI);
        }
    }
    None
}

/// Mean of e^{-uX} for the stable law, e^{-u^α}; kept next to the sampler for tests.
pub fn stable_laplace(alpha: f64, u: f64) -> f64 {
    (-u.powf(alpha)).exp()
}

/// lim x^{1+α} L_α(x) as x → ∞.
pub(crate) fn tail_constant(alpha: f64) -> f64 {
    alpha / gamma(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_to_infinity, Endpoint};

    #[test]
    fn density_branches_agree() {
        for &alpha in &[0.3, 0.6, 0.8] {
            for &x in &[4.0, 6.0, 20.0] {
                let s = tail_series(alpha, x).unwrap();
                let xi = f64::powf(x, -alpha / (1.0 - alpha));
                let direct: f64 = integrate(
                    |u| zolotarev_a(alpha, u) * (-zolotarev_a(alpha, u) * xi).exp(),
                    0.0,
                    PI,
                    Tolerance::new(1e-300, 1e-12),
                )
                .unwrap()
                .value;
                let z = alpha / (1.0 - alpha) * x.powf(-1.0 / (1.0 - alpha)) * direct / PI;
                assert!(((s - z) / z).abs() < 1e-8, "alpha={alpha} x={x} {s} {z}");
            }
        }
    }

    #[test]
    fn density_has_the_right_transform() {
        // ∫ e^{-x} L_α(x) dx = e^{-1}
        let alpha = 0.6;
        let f = |x: f64| (-x).exp() * stable_density(alpha, x).unwrap();
        let head = crate::quad::integrate_graded(f, 0.0, 1.0, 1.0, Endpoint::Left, Tolerance::new(1e-13, 1e-10))
            .unwrap()
            .value;
        let tail = integrate_to_infinity(f, 1.0, 1.0, Tolerance::new(1e-13, 1e-10)).unwrap().value;
        assert!((head + tail - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn upper_bound_holds() {
        for &alpha in &[0.3, 0.6, 0.9] {
            for k in 0..40 {
                let x = 1e-3 * 1.3f64.powi(k);
                if let Some(b) = density_upper_bound(alpha, x) {
                    assert!(stable_density(alpha, x).unwrap() <= b, "alpha={alpha} x={x}");
                }
            }
        }
    }

    #[test]
    fn cdf_is_monotone_and_bounded() {
        let mut prev = 0.0;
        for k in 0..30 {
            let x = 0.01 * 1.5f64.powi(k);
            let c = stable_cdf(0.6, x).unwrap();
            assert!(c >= prev && c <= 1.0);
            prev = c;
        }
    }
}
