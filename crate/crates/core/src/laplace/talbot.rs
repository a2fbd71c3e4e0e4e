//! Numerical Bromwich inversion on Weideman's optimized cotangent contour
//! z(θ) = (N/t)(σ + μ θ cot(βθ) + iνθ), θ ∈ (-π, π), midpoint rule.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};

const SIGMA: f64 = -0.6122;
const MU: f64 = 0.5017;
const BETA: f64 = 0.6407;
const NU: f64 = 0.2645;

pub const DEFAULT_NODES: usize = 32;
pub const DEFAULT_OUTER_NODES: usize = 48;
const CONVERGENCE_REL: f64 = 1e-6;
const CONVERGENCE_ABS: f64 = 1e-10;

/// Contour point and its θ-derivative for scale `c = N/t`.
fn contour(theta: f64, c: f64) -> (Complex64, Complex64) {
    let a = BETA * theta;
    let (s, co) = a.sin_cos();
    let cot = co / s;
    let z = Complex64::new(c * (SIGMA + MU * theta * cot), c * NU * theta);
    let dz = Complex64::new(c * MU * (cot - a / (s * s)), c * NU);
    (z, dz)
}

/// Point where the contour for `n` nodes at time `t` crosses the positive
/// real axis. Singularities right of it are not enclosed.
pub fn real_axis_crossing(n: usize, t: f64) -> f64 {
    n as f64 / t * CROSSING
}

/// Real-axis crossing of the contour of unit scale.
pub const CROSSING: f64 = SIGMA + MU / BETA;

fn upper_nodes(n: usize) -> impl Iterator<Item = f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n / 2).map(move |k| (k as f64 + 0.5) * h)
}

fn all_nodes(n: usize) -> impl Iterator<Item = f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(move |k| -std::f64::consts::PI + (k as f64 + 0.5) * h)
}

/// Inverse transform of a function whose original is real, using the
/// conjugate symmetry F(z̄) = conj F(z) to halve the node count.
pub fn invert_real_with<F>(f: &F, t: f64, n: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64> + ?Sized,
{
    invert_real_scaled(f, t, n, n as f64 / t)
}

/// As [`invert_real_with`] on the contour of scale `c` instead of N/t.
///
/// A smaller scale keeps the contour away from singularities on the
/// positive axis. The contour ends at Re z ≈ -1.31c, so the truncation
/// error is of order e^{-1.31ct} whatever the number of nodes.
pub fn invert_real_scaled<F>(f: &F, t: f64, n: usize, c: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64> + ?Sized,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for theta in upper_nodes(n) {
        let (z, dz) = contour(theta, c);
        acc += (z * t).exp() * f(z)? * dz;
    }
    let v = 2.0 / n as f64 * acc.im;
    if !v.is_finite() {
        return Err(Error::NonConvergence(format!("inversion at t={t} produced {v}")));
    }
    Ok(v)
}

/// Inverse transform without symmetry assumptions; complex result.
pub fn invert_complex_with<F>(f: &F, t: f64, n: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + ?Sized,
{
    let c = n as f64 / t;
    let mut acc = Complex64::new(0.0, 0.0);
    for theta in all_nodes(n) {
        let (z, dz) = contour(theta, c);
        acc += (z * t).exp() * f(z)? * dz;
    }
    Ok(acc / Complex64::new(0.0, n as f64))
}

// The refined rule only serves as a check: larger contours amplify
// roundoff, so the base value is the one returned.
fn check_converged(coarse: f64, fine: f64, what: &str, t: f64) -> Result<f64> {
    if (coarse - fine).abs() > CONVERGENCE_REL * coarse.abs() + CONVERGENCE_ABS {
        return Err(Error::NonConvergence(format!(
            "{what} at t={t}: {coarse} vs {fine} with more nodes"
        )));
    }
    Ok(coarse)
}

/// f(t) from its Laplace transform F(u), t > 0.
///
/// Evaluated with 32 and 64 nodes; a relative change above 1e-6 is reported
/// as non-convergence, otherwise the 32-node value is returned.
pub fn inverse_laplace<F>(f: F, t: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("inverse Laplace transform needs t > 0, got {t}"));
    }
    let coarse = invert_real_with(&f, t, DEFAULT_NODES)?;
    let fine = invert_real_with(&f, t, 2 * DEFAULT_NODES)?;
    check_converged(coarse, fine, "inverse Laplace transform", t)
}

/// Settings for nested inversion of F(s, u) → f(tₐ, t).
#[derive(Debug, Clone, Copy)]
pub struct DoubleInversion {
    pub inner_nodes: usize,
    pub outer_nodes: usize,
    /// Repeat with [`CHECK_NODE_INCREMENT`] more nodes in each variable and
    /// compare.
    pub check: bool,
}

impl Default for DoubleInversion {
    fn default() -> Self {
        DoubleInversion {
            inner_nodes: DEFAULT_NODES,
            outer_nodes: DEFAULT_OUTER_NODES,
            check: true,
        }
    }
}

/// Node increment of the convergence check of nested inversions. Doubling
/// both counts (as for single inversions) is not usable here: the nested
/// sum loses about 1e-5 to roundoff at (64, 96) nodes.
pub const CHECK_NODE_INCREMENT: usize = 8;

// s used for the tₐ = 0 limit f(0, t) = lim_{s→∞} s F(s, ·)
const INITIAL_VALUE_SCALE: f64 = 1e10;

impl DoubleInversion {
    pub fn unchecked() -> Self {
        DoubleInversion {
            check: false,
            ..Default::default()
        }
    }

    fn once<F>(&self, f2: &F, t_a: f64, t: f64, inner: usize, outer: usize) -> Result<f64>
    where
        F: Fn(Complex64, Complex64) -> Result<Complex64> + Sync,
    {
        if t_a == 0.0 {
            let s = Complex64::new(INITIAL_VALUE_SCALE * (1.0 + inner as f64 / t), 0.0);
            let g = |u: Complex64| Ok(s * f2(s, u)?);
            return invert_real_with(&g, t, inner);
        }
        let cs = outer as f64 / t_a;
        let cu = inner as f64 / t;
        let terms: Vec<Result<Complex64>> = upper_nodes(outer)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|theta| {
                let (s, ds) = contour(theta, cs);
                for phi in all_nodes(inner) {
                    let (u, _) = contour(phi, cu);
                    if (u - s).norm() < 1e-12 * s.norm() {
                        return Err(Error::ContourCollision(format!(
                            "inner node {u} coincides with outer node {s}"
                        )));
                    }
                }
                let g = |u: Complex64| f2(s, u);
                let inner_value = invert_complex_with(&g, t, inner)?;
                Ok((s * t_a).exp() * inner_value * ds)
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for term in terms {
            acc += term?;
        }
        let v = 2.0 / outer as f64 * acc.im;
        if !v.is_finite() {
            return Err(Error::NonConvergence(format!(
                "double inversion at (t_a={t_a}, t={t}) produced {v}"
            )));
        }
        Ok(v)
    }

    pub fn invert<F>(&self, f2: F, t_a: f64, t: f64) -> Result<f64>
    where
        F: Fn(Complex64, Complex64) -> Result<Complex64> + Sync,
    {
        if !(t > 0.0 && t.is_finite()) || !(t_a >= 0.0 && t_a.is_finite()) {
            return domain(format!("double inversion needs t_a >= 0 and t > 0, got ({t_a}, {t})"));
        }
        let v = self.once(&f2, t_a, t, self.inner_nodes, self.outer_nodes)?;
        if !self.check {
            return Ok(v);
        }
        let fine = self.once(
            &f2,
            t_a,
            t,
            self.inner_nodes + CHECK_NODE_INCREMENT,
            self.outer_nodes + CHECK_NODE_INCREMENT,
        )?;
        check_converged(v, fine, "double inverse Laplace transform", t)
    }
}

/// f(tₐ, t) from F(s, u): inner inversion in u, outer in s.
pub fn double_inverse_laplace<F>(f2: F, t_a: f64, t: f64) -> Result<f64>
where
    F: Fn(Complex64, Complex64) -> Result<Complex64> + Sync,
{
    DoubleInversion::default().invert(f2, t_a, t)
}

/// Gaver–Stehfest inversion from real samples of F; `n` even, ~14 in
/// double precision. Only meant as an independent cross-check.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(f: F, t: f64, n: usize) -> f64 {
    assert!(n % 2 == 0 && n >= 2);
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0, |acc, j| acc * j as f64);
    let ln2 = std::f64::consts::LN_2;
    let mut sum = 0.0;
    for k in 1..=n {
        let mut v = 0.0;
        for j in (k + 1) / 2..=k.min(half) {
            v += (j as f64).powi(half as i32) * fact(2 * j)
                / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
        }
        if (half + k) % 2 == 1 {
            v = -v;
        }
        sum += v * f(k as f64 * ln2 / t);
    }
    sum * ln2 / t
}
