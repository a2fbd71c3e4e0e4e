//! Python module `tempered_actrw`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use tempered_actrw_core::actrw::{self, PropagatorRegime};
use tempered_actrw_core::ensemble::{mean_and_se, run_trajectories};
use tempered_actrw_core::fpe::{self, FpeGrid};
use tempered_actrw_core::mlf::{self, MlfParams};
use tempered_actrw_core::renewal::{self, AgingWindow, CountEnsemble, Regime, TheoryMode};
use tempered_actrw_core::sampling::{self, JumpModel, TemperingStrategy};
use tempered_actrw_core::Error;

fn py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn mode(name: &str) -> PyResult<TheoryMode> {
    match name {
        "exact" => Ok(TheoryMode::Exact),
        "asymptotic" => Ok(TheoryMode::Asymptotic),
        other => Err(PyValueError::new_err(format!("mode must be 'exact' or 'asymptotic', got {other:?}"))),
    }
}

fn window(t_a: f64, t: f64) -> PyResult<AgingWindow> {
    AgingWindow::new(t_a, t).map_err(py_err)
}

/// Tempered power-law waiting-time law with Laplace transform exp(λ^α - (u+λ)^α).
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct WaitingTimeModel {
    inner: sampling::WaitingTimeModel,
}

#[pymethods]
impl WaitingTimeModel {
    #[new]
    #[pyo3(signature = (alpha, lam, strategy = "exp_tilt_rejection", t0 = None))]
    fn new(alpha: f64, lam: f64, strategy: &str, t0: Option<f64>) -> PyResult<Self> {
        let inner = match strategy {
            "exp_tilt_rejection" => sampling::WaitingTimeModel::new(alpha, lam),
            "powerlaw_envelope" => sampling::WaitingTimeModel::with_envelope(alpha, lam, t0.unwrap_or(sampling::DEFAULT_T0)),
            other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
        }
        .map_err(py_err)?;
        Ok(WaitingTimeModel { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn strategy(&self) -> &'static str {
        match self.inner.strategy() {
            TemperingStrategy::ExpTiltRejection => "exp_tilt_rejection",
            TemperingStrategy::PowerlawEnvelope => "powerlaw_envelope",
        }
    }

    /// ⟨τ⟩ = αλ^{α-1}; infinite at λ = 0.
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn density(&self, t: f64) -> PyResult<f64> {
        self.inner.density(t).map_err(py_err)
    }

    fn laplace(&self, u: f64) -> f64 {
        let (a, l) = (self.inner.alpha(), self.inner.lambda());
        (l.powf(a) - (u + l).powf(a)).exp()
    }

    /// `n` waiting times; draw i depends only on (seed, i).
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        let m = self.inner;
        py.detach(|| run_trajectories(n, seed, |rng| sampling::sample_tempered_waiting(&m, &mut rng.clock)))
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("WaitingTimeModel(alpha={}, lam={}, strategy='{}')", self.alpha(), self.lam(), self.strategy())
    }
}

#[pyfunction]
#[pyo3(signature = (z, alpha, beta = 1.0))]
fn mittag_leffler(z: f64, alpha: f64, beta: f64) -> PyResult<f64> {
    mlf::mittag_leffler(MlfParams::new(alpha, beta).map_err(py_err)?, z).map_err(py_err)
}

/// g(z), the strong-aging renewal rate at age z.
#[pyfunction]
fn g_aux(model: &WaitingTimeModel, z: f64) -> PyResult<f64> {
    mlf::g_aux(&model.inner, z).map_err(py_err)
}

#[pyfunction]
fn regime(model: &WaitingTimeModel, t_a: f64, t: f64) -> PyResult<String> {
    Ok(Regime::classify(&model.inner, &window(t_a, t)?).label())
}

/// P₀(tₐ, t), the probability of no renewal in (tₐ, tₐ+t].
#[pyfunction]
#[pyo3(signature = (model, t_a, t, mode = "exact"))]
fn survival_probability(py: Python<'_>, model: &WaitingTimeModel, t_a: f64, t: f64, mode: &str) -> PyResult<f64> {
    let (w, md) = (window(t_a, t)?, self::mode(mode)?);
    py.detach(|| renewal::survival_probability_theory(&model.inner, &w, md))
        .map_err(py_err)
}

/// ⟨nₐᵖ(tₐ, t)⟩; exact mode supports p = 1 and 2.
#[pyfunction]
#[pyo3(signature = (model, t_a, t, p = 1.0, mode = "exact"))]
fn renewal_moment(py: Python<'_>, model: &WaitingTimeModel, t_a: f64, t: f64, p: f64, mode: &str) -> PyResult<f64> {
    let (w, md) = (window(t_a, t)?, self::mode(mode)?);
    py.detach(|| renewal::renewal_moment_theory(&model.inner, &w, p, md))
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (model, t_a, t, m2 = 1.0, mode = "exact"))]
fn msd(py: Python<'_>, model: &WaitingTimeModel, t_a: f64, t: f64, m2: f64, mode: &str) -> PyResult<f64> {
    let (w, md) = (window(t_a, t)?, self::mode(mode)?);
    let jump = JumpModel::gaussian(m2).map_err(py_err)?;
    py.detach(|| actrw::msd_theory(&model.inner, &jump, &w, md))
        .map_err(py_err)
}

/// Moving part of the propagator at each position in `xs`.
#[pyfunction]
#[pyo3(signature = (model, t_a, t, xs, m2 = 1.0, regime = "weak_aging"))]
fn propagator(
    py: Python<'_>,
    model: &WaitingTimeModel,
    t_a: f64,
    t: f64,
    xs: Vec<f64>,
    m2: f64,
    regime: &str,
) -> PyResult<Vec<f64>> {
    let w = window(t_a, t)?;
    let jump = JumpModel::gaussian(m2).map_err(py_err)?;
    let regime = match regime {
        "weak_aging" => PropagatorRegime::WeakAging,
        "strong_aging" => PropagatorRegime::StrongAging,
        other => return Err(PyValueError::new_err(format!("unknown regime {other:?}"))),
    };
    py.detach(|| {
        xs.iter()
            .map(|&x| actrw::propagator_theory(&model.inner, &jump, x, &w, regime))
            .collect::<Result<Vec<f64>, Error>>()
    })
    .map_err(py_err)
}

/// Monte Carlo renewal counts on a grid of window lengths.
///
/// Returns a dict with `t`, `survival`, `survival_se`, `mean_count` and `mean_count_se`.
#[pyfunction]
fn simulate_counts<'py>(
    py: Python<'py>,
    model: &WaitingTimeModel,
    t_a: f64,
    ts: Vec<f64>,
    n_traj: usize,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let ens = py
        .detach(|| CountEnsemble::simulate(&model.inner, t_a, &ts, n_traj, seed))
        .map_err(py_err)?;
    let surv: Vec<_> = (0..ts.len()).map(|k| ens.survival(k)).collect();
    let mean: Vec<_> = (0..ts.len()).map(|k| ens.moment(k, 1.0)).collect();
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", ts)?;
    d.set_item("survival", surv.iter().map(|r| r.estimate).collect::<Vec<_>>())?;
    d.set_item("survival_se", surv.iter().map(|r| r.std_error).collect::<Vec<_>>())?;
    d.set_item("mean_count", mean.iter().map(|r| r.estimate).collect::<Vec<_>>())?;
    d.set_item("mean_count_se", mean.iter().map(|r| r.std_error).collect::<Vec<_>>())?;
    Ok(d)
}

/// Final displacements x(tₐ+t) - x(tₐ) of `n_traj` Gaussian-jump walkers.
#[pyfunction]
#[pyo3(signature = (model, t_a, t, n_traj, seed, m2 = 1.0))]
fn simulate_displacements(
    py: Python<'_>,
    model: &WaitingTimeModel,
    t_a: f64,
    t: f64,
    n_traj: usize,
    seed: u64,
    m2: f64,
) -> PyResult<Vec<f64>> {
    let w = window(t_a, t)?;
    let jump = JumpModel::gaussian(m2).map_err(py_err)?;
    let recs = py
        .detach(|| run_trajectories(n_traj, seed, |rng| actrw::simulate_walk(&model.inner, &jump, &w, rng)))
        .map_err(py_err)?;
    Ok(recs.into_iter().map(|r| r.x_final).collect())
}

/// Mean and standard error of a sample.
#[pyfunction]
fn mean_se(values: Vec<f64>) -> (f64, f64) {
    mean_and_se(&values)
}

/// Biased-walk response experiment; returns a dict of the recorded ratios.
#[pyfunction]
#[pyo3(signature = (model, t_a, t_b, n_traj, seed, h = 0.1, c = 1.0))]
fn response_experiment<'py>(
    py: Python<'py>,
    model: &WaitingTimeModel,
    t_a: f64,
    t_b: f64,
    n_traj: usize,
    seed: u64,
    h: f64,
    c: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let cfg = actrw::ResponseExperiment::new(model.inner, c, h, t_a, t_b).map_err(py_err)?;
    let r = py.detach(|| actrw::response_experiment(&cfg, n_traj, seed)).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("mean_x_b", r.mean_x_b)?;
    d.set_item("mean_x_b_se", r.mean_x_b_se)?;
    d.set_item("mean_r2_aging", r.mean_r2_aging)?;
    d.set_item("counting_ratio", r.counting_ratio)?;
    d.set_item("counting_ratio_se", r.counting_ratio_se)?;
    d.set_item("f_r", r.f_r_mc)?;
    d.set_item("einstein_ratio", r.einstein_ratio)?;
    d.set_item("noisy", r.noisy)?;
    Ok(d)
}

#[pyfunction]
fn fluctuation_response(model: &WaitingTimeModel, t_a: f64, t_b: f64) -> PyResult<f64> {
    actrw::fluctuation_response_theory(&model.inner, t_a, t_b).map_err(py_err)
}

/// Tempered Grünwald-Letnikov weights w_0..w_n.
#[pyfunction]
fn gl_weights(alpha: f64, lam: f64, dt: f64, n: usize) -> PyResult<Vec<f64>> {
    fpe::gl_tempered_weights(alpha, lam, dt, n).map_err(py_err)
}

/// Solves the aging fractional Fokker-Planck equation on the jump lattice.
///
/// Returns a dict with `x`, `density` (final time), `t` and `p0`.
#[pyfunction]
#[pyo3(signature = (model, t_a, t, nt = None, m2 = 1.0, widths = 8.0))]
fn solve_fpe<'py>(
    py: Python<'py>,
    model: &WaitingTimeModel,
    t_a: f64,
    t: f64,
    nt: Option<usize>,
    m2: f64,
    widths: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let w = window(t_a, t)?;
    let jump = JumpModel::gaussian(m2).map_err(py_err)?;
    let msd = actrw::msd_theory(&model.inner, &jump, &w, TheoryMode::Exact).map_err(py_err)?;
    let nt = nt.unwrap_or_else(|| fpe::max_stable_steps(&model.inner, t));
    let grid = FpeGrid::lattice(model.inner, w, m2, msd, widths, nt).map_err(py_err)?;
    let sol = py.detach(|| fpe::solve_tempered_fpe(&grid)).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("x", grid.xs())?;
    d.set_item("density", sol.terminal().to_vec())?;
    d.set_item("t", grid.ts())?;
    d.set_item("p0", sol.p0_series.clone())?;
    Ok(d)
}

#[pymodule]
fn tempered_actrw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<WaitingTimeModel>()?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(g_aux, m)?)?;
    m.add_function(wrap_pyfunction!(regime, m)?)?;
    m.add_function(wrap_pyfunction!(survival_probability, m)?)?;
    m.add_function(wrap_pyfunction!(renewal_moment, m)?)?;
    m.add_function(wrap_pyfunction!(msd, m)?)?;
    m.add_function(wrap_pyfunction!(propagator, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_displacements, m)?)?;
    m.add_function(wrap_pyfunction!(mean_se, m)?)?;
    m.add_function(wrap_pyfunction!(response_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_response, m)?)?;
    m.add_function(wrap_pyfunction!(gl_weights, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fpe, m)?)?;
    Ok(())
}
