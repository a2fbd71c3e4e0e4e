//! Finite-difference solver for the tempered aging Fokker-Planck equation
//! of the moving part of the propagator.
//!
//! With D_λ y = e^{-λt} D^α (e^{λt} y), a = M₂/2 and the moved weight
//! W(t) = 1 - P₀(tₐ, t), the moving part P(x, t) obeys
//!
//! (D_λ - λ^α)(P - W δ(x)) - a(1+λ^α) ∂²P/∂x² + a D_λ ∂²P/∂x² = 0.
//!
//! In Laplace space this is P = W(u) x_u / (x_u + a k²(1 - x_u)), the small-k
//! form of the renewal propagator. The equation is only well posed for
//! a k² < 1, so a grid keeping the last term needs Δx² ≥ 2M₂; at equality the
//! discrete operator is the lattice walk with steps {-Δx, 0, Δx}. The same
//! closed form is only a long-time approximation: for x_u > 1 the
//! denominator changes sign.
//!
//! The scheme replaces D_λ by Grünwald sums and λ^α by their value on
//! constants, Λ = dt^{-α}(1 - e^{-λdt})^α, so that (D_λ - Λ) annihilates
//! constants exactly. With Δx² ≥ 2M₂ and dt^{-α} ≤ 1 + Λ every step is then
//! positive, which also keeps it away from x_u > 1.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::renewal::{survival_probability_theory, AgingWindow, TheoryMode};
use crate::sampling::WaitingTimeModel;

/// Space-time discretization of P(x, tₐ, t) on [-x_max, x_max] × [0, t].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub dt: f64,
    pub nt: usize,
    pub window: AgingWindow,
    pub model: WaitingTimeModel,
    /// Second moment M₂ of the jump length.
    pub m2: f64,
}

impl FpeGrid {
    pub fn new(model: WaitingTimeModel, window: AgingWindow, m2: f64, x_max: f64, nx: usize, nt: usize) -> Result<Self> {
        if nx < 3 || nx % 2 == 0 {
            return domain(format!("nx = {nx} must be odd and at least 3"));
        }
        if nt == 0 {
            return domain("nt must be positive");
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return domain(format!("x_max = {x_max} must be positive"));
        }
        if !(m2 > 0.0 && m2.is_finite()) {
            return domain(format!("jump second moment {m2} must be positive"));
        }
        if !(window.t > 0.0) {
            return domain("the solver needs a window of positive length");
        }
        Ok(FpeGrid {
            x_min: -x_max,
            x_max,
            nx,
            dt: window.t / nt as f64,
            nt,
            window,
            model,
            m2,
        })
    }

    /// Grid with the coarsest spacing the full equation allows, Δx = √(2M₂),
    /// and x_max at least `widths` root mean squared displacements.
    pub fn lattice(model: WaitingTimeModel, window: AgingWindow, m2: f64, msd: f64, widths: f64, nt: usize) -> Result<Self> {
        let dx = (2.0 * m2).sqrt();
        let half = (widths * msd.sqrt() / dx).ceil().max(1.0) as usize;
        FpeGrid::new(model, window, m2, half as f64 * dx, 2 * half + 1, nt)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        let c = (self.nx / 2) as i64;
        (0..self.nx).map(|i| (i as i64 - c) as f64 * dx).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..=self.nt).map(|k| k as f64 * self.dt).collect()
    }

    fn check(&self, opts: &FpeOptions) -> Result<()> {
        if self.nx < 3 || self.nx % 2 == 0 || (self.x_min + self.x_max).abs() > 1e-12 * self.x_max {
            return domain("grid must be symmetric with an odd number of nodes");
        }
        if ((self.dt * self.nt as f64) / self.window.t - 1.0).abs() > 1e-12 {
            return domain(format!("dt·nt = {} differs from t = {}", self.dt * self.nt as f64, self.window.t));
        }
        let dx = self.dx();
        if opts.keep_memory_laplacian && dx * dx < 2.0 * self.m2 * (1.0 - 1e-12) {
            return Err(Error::Instability(format!(
                "Δx = {dx} is below √(2M₂) = {}; the equation with the memory Laplacian is ill posed on this grid",
                (2.0 * self.m2).sqrt()
            )));
        }
        if opts.keep_memory_laplacian && self.dt < min_stable_dt(&self.model) * (1.0 - 1e-9) {
            return Err(Error::Instability(format!(
                "dt = {} is below {}; the memory Laplacian makes shorter steps lose positivity",
                self.dt,
                min_stable_dt(&self.model)
            )));
        }
        Ok(())
    }
}

/// Discrete counterpart of λ^α: dt^{-α} Σ_j w_j.
pub fn discrete_shift(model: &WaitingTimeModel, dt: f64) -> f64 {
    dt.powf(-model.alpha()) * (-(-model.lambda() * dt).exp_m1()).powf(model.alpha())
}

/// Shortest step for which the full equation keeps a positive solution,
/// the root of dt^{-α} = 1 + Λ(dt). It is 1 at λ = 0 and close to
/// (1+λ^α)^{-1/α} otherwise.
pub fn min_stable_dt(model: &WaitingTimeModel) -> f64 {
    let excess = |dt: f64| dt.powf(-model.alpha()) - 1.0 - discrete_shift(model, dt);
    let (mut lo, mut hi) = (1e-3, 1.0);
    if excess(lo) <= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Largest step count over a window of length t that respects [`min_stable_dt`].
pub fn max_stable_steps(model: &WaitingTimeModel, t: f64) -> usize {
    ((t / min_stable_dt(model)) * (1.0 + 1e-12)).floor().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpeOptions {
    /// Keep the a·D_λ ∂²P term. Dropping it gives the long-time equation,
    /// which is stable on any grid.
    pub keep_memory_laplacian: bool,
    /// Lowest density tolerated before the run is declared unstable.
    pub negativity_floor: f64,
    /// Largest tolerated |mass - W| (boundary loss included).
    pub max_mass_drift: f64,
}

impl Default for FpeOptions {
    fn default() -> Self {
        FpeOptions {
            keep_memory_laplacian: true,
            negativity_floor: -1e-8,
            max_mass_drift: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpeSolution {
    pub grid: FpeGrid,
    /// density[k][i] at t_k and x_i.
    pub density: Vec<Vec<f64>>,
    /// 1 - Δx·Σ density at each step.
    pub p0_series: Vec<f64>,
    /// The moved weight W(t_k) fed to the source.
    pub source: Vec<f64>,
}

/// Classical Grünwald weights (-1)^j binom(α, j), j = 0..=n.
pub fn grunwald_weights(alpha: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * (1.0 - (alpha + 1.0) / j as f64));
    }
    w
}

/// Grünwald weights of the tempered derivative, w_j e^{-λ j dt}.
pub fn gl_tempered_weights(alpha: f64, lambda: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} must lie in (0, 1)"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("lambda = {lambda} must be nonnegative"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("dt = {dt} must be positive"));
    }
    let mut w = grunwald_weights(alpha, n);
    for (j, v) in w.iter_mut().enumerate() {
        *v *= (-lambda * j as f64 * dt).exp();
    }
    Ok(w)
}

/// W(t_k) = 1 - P₀(tₐ, t_k) from the exact survival probability.
pub fn moved_weight(grid: &FpeGrid) -> Result<Vec<f64>> {
    let t_a = grid.window.t_a;
    grid.ts()
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(0.0);
            }
            let w = AgingWindow::new(t_a, t)?;
            Ok(1.0 - survival_probability_theory(&grid.model, &w, TheoryMode::Exact)?)
        })
        .collect()
}

pub fn solve_tempered_fpe(grid: &FpeGrid) -> Result<FpeSolution> {
    solve_tempered_fpe_with(grid, &FpeOptions::default())
}

pub fn solve_tempered_fpe_with(grid: &FpeGrid, opts: &FpeOptions) -> Result<FpeSolution> {
    grid.check(opts)?;
    let source = moved_weight(grid)?;
    solve_with_source(grid, opts, &source)
}

/// Marches the equation with a prescribed moved weight W(t_k), k = 0..=nt.
///
/// The Laplacian is implicit and the memory sums explicit, so each step is
/// one tridiagonal solve.
pub fn solve_with_source(grid: &FpeGrid, opts: &FpeOptions, source: &[f64]) -> Result<FpeSolution> {
    grid.check(opts)?;
    if source.len() != grid.nt + 1 {
        return domain(format!("source has {} values for {} steps", source.len(), grid.nt + 1));
    }
    if source[0] != 0.0 {
        return domain("the moved weight must vanish at t = 0");
    }
    let (nx, nt, dx) = (grid.nx, grid.nt, grid.dx());
    let lam_a = discrete_shift(&grid.model, grid.dt);
    let w = gl_tempered_weights(grid.model.alpha(), grid.model.lambda(), grid.dt, nt)?;
    let h = grid.dt.powf(-grid.model.alpha());
    let a = 0.5 * grid.m2 / (dx * dx);
    let keep = if opts.keep_memory_laplacian { 1.0 } else { 0.0 };

    // (h - Λ) I + a (keep·h - 1 - Λ) L with L = tridiag(1, -2, 1)
    let c1 = a * (keep * h - 1.0 - lam_a);
    let diag = h - lam_a - 2.0 * c1;
    let off = c1;
    let center = nx / 2;

    // history[i][k] = P_k(x_i) + keep·a·(L P_k)(x_i)
    let mut history: Vec<Vec<f64>> = vec![Vec::with_capacity(nt + 1); nx];
    let mut density = Vec::with_capacity(nt + 1);
    let mut p0_series = Vec::with_capacity(nt + 1);
    let zero = vec![0.0; nx];
    for col in history.iter_mut() {
        col.push(0.0);
    }
    density.push(zero);
    p0_series.push(1.0);

    let mut rhs = vec![0.0; nx];
    for k in 1..=nt {
        rhs.par_iter_mut().enumerate().for_each(|(i, r)| {
            let col = &history[i];
            let mut s = 0.0;
            for j in 1..=k {
                s += w[j] * col[k - j];
            }
            *r = -h * s;
        });
        let mut ws = 0.0;
        for j in 1..=k {
            ws += w[j] * source[k - j];
        }
        rhs[center] += ((h - lam_a) * source[k] + h * ws) / dx;

        let p = thomas(diag, off, &rhs).ok_or_else(|| {
            Error::Instability(format!("zero pivot in the implicit step at t = {}", k as f64 * grid.dt))
        })?;

        let mut mass = 0.0;
        let mut lowest = f64::INFINITY;
        for (i, &v) in p.iter().enumerate() {
            mass += v;
            lowest = lowest.min(v);
            let lap = p.get(i.wrapping_sub(1)).copied().unwrap_or(0.0) - 2.0 * v + p.get(i + 1).copied().unwrap_or(0.0);
            history[i].push(v + keep * a * lap);
        }
        mass *= dx;
        let t = k as f64 * grid.dt;
        if !mass.is_finite() || lowest < opts.negativity_floor {
            return Err(Error::Instability(format!(
                "density reached {lowest:e} at t = {t} (floor {:e})",
                opts.negativity_floor
            )));
        }
        if (mass - source[k]).abs() > opts.max_mass_drift {
            return Err(Error::Instability(format!(
                "mass {mass} drifted from the moved weight {} at t = {t}",
                source[k]
            )));
        }
        density.push(p);
        p0_series.push(1.0 - mass);
    }
    Ok(FpeSolution {
        grid: *grid,
        density,
        p0_series,
        source: source.to_vec(),
    })
}

// Constant-coefficient tridiagonal solve with zero Dirichlet values outside.
fn thomas(diag: f64, off: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag;
    if beta.abs() < f64::MIN_POSITIVE {
        return None;
    }
    c[0] = off / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag - off * c[i - 1];
        if beta.abs() < 1e-300 {
            return None;
        }
        c[i] = off / beta;
        d[i] = (rhs[i] - off * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

/// Per-step moments of the moving part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpeStepSummary {
    pub t: f64,
    pub p0: f64,
    pub moved_weight: f64,
    pub mass: f64,
    pub second_moment: f64,
    pub fourth_moment: f64,
}

impl FpeSolution {
    pub fn mass(&self, k: usize) -> f64 {
        self.grid.dx() * self.density[k].iter().sum::<f64>()
    }

    /// ∫ x^p P(x, t_k) dx over the moving part (not normalized).
    pub fn moment(&self, k: usize, p: i32) -> f64 {
        let dx = self.grid.dx();
        self.grid.xs().iter().zip(&self.density[k]).map(|(x, v)| x.powi(p) * v).sum::<f64>() * dx
    }

    pub fn terminal(&self) -> &[f64] {
        &self.density[self.grid.nt]
    }

    pub fn summary(&self) -> Vec<FpeStepSummary> {
        (0..=self.grid.nt)
            .map(|k| FpeStepSummary {
                t: k as f64 * self.grid.dt,
                p0: self.p0_series[k],
                moved_weight: self.source[k],
                mass: self.mass(k),
                second_moment: self.moment(k, 2),
                fourth_moment: self.moment(k, 4),
            })
            .collect()
    }

    /// Long-format CSV with header t,x,density; every `stride`-th step and
    /// always the last one.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let io = |e: csv::Error| Error::Config(format!("writing solution: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "density"]).map_err(io)?;
        let xs = self.grid.xs();
        let stride = stride.max(1);
        for k in (0..=self.grid.nt).filter(|k| k % stride == 0 || *k == self.grid.nt) {
            let t = (k as f64 * self.grid.dt).to_string();
            for (x, v) in xs.iter().zip(&self.density[k]) {
                w.write_record([t.as_str(), &x.to_string(), &v.to_string()]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Config(format!("writing solution: {e}")))
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            grid: &'a FpeGrid,
            dx: f64,
            steps: Vec<FpeStepSummary>,
        }
        serde_json::to_string_pretty(&Doc {
            grid: &self.grid,
            dx: self.grid.dx(),
            steps: self.summary(),
        })
        .map_err(|e| Error::Config(format!("serializing summary: {e}")))
    }
}
