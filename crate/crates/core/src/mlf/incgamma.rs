use super::gamma::gamma;
use crate::error::{domain, Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Upper incomplete gamma Γ(a, x) = ∫ₓ^∞ e^{-t} t^{a-1} dt.
///
/// Any real `a` is accepted for `x > 0`. Negative `a` is reached from
/// positive order through Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a, except for
/// large `x` where the continued fraction converges for every order.
/// At `x = 0` only `a > 0` is allowed and the result is the complete Γ(a).
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !a.is_finite() || !x.is_finite() {
        return domain("upper_incomplete_gamma needs finite arguments");
    }
    if x < 0.0 {
        return domain(format!("upper_incomplete_gamma: x = {x} < 0"));
    }
    if x == 0.0 {
        if a > 0.0 {
            return Ok(gamma(a));
        }
        return domain(format!("Γ({a}, 0) diverges for a <= 0"));
    }
    if a > 0.0 {
        if x < a + 1.0 {
            let lower = lower_series(a, x)?;
            return Ok(gamma(a) - lower);
        }
        return continued_fraction(a, x);
    }
    if x >= 1.0 {
        return continued_fraction(a, x);
    }
    // step down in order from an anchor in [0, 1)
    let steps = (-a).ceil();
    let top = a + steps;
    let mut value = if top == 0.0 {
        exp_integral_e1(x)?
    } else {
        upper_incomplete_gamma(top, x)?
    };
    let ex = (-x).exp();
    for k in 1..=(steps as i64) {
        let b = top - k as f64;
        value = (value - x.powf(b) * ex) / b;
    }
    Ok(value)
}

/// γ(a, x) by its power series, for a > 0 and moderate x.
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            return Ok(sum * (-x + a * x.ln()).exp());
        }
    }
    Err(Error::NonConvergence(format!(
        "incomplete gamma series at a={a}, x={x}"
    )))
}

/// Modified Lentz evaluation of the continued fraction for Γ(a, x).
fn continued_fraction(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok((-x + a * x.ln()).exp() * h);
        }
    }
    Err(Error::NonConvergence(format!(
        "incomplete gamma continued fraction at a={a}, x={x}"
    )))
}

/// E₁(x) = Γ(0, x).
fn exp_integral_e1(x: f64) -> Result<f64> {
    if x >= 1.0 {
        return continued_fraction(0.0, x);
    }
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < EPS * sum.abs().max(1e-300) {
            return Ok(-EULER_GAMMA - x.ln() - sum);
        }
    }
    Err(Error::NonConvergence(format!("E1 series at x={x}")))
}
