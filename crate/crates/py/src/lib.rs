//! Python bindings: flows from the config vocabulary, RY evaluation and
//! classification, the cigar grid solver and the config-driven runner.

use std::fmt::Write as _;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rylab_core::cli::{execute, parse_config, Document, RunConfig};
use rylab_core::diff::DiffSpec;
use rylab_core::error::Error;
use rylab_core::flows::{closed_form_ry, make_flow, Flow as CoreFlow, FlowKind};
use rylab_core::pde::{run_flow, Boundary, Chart, ConformalGridState, DirichletData, Scheme, SolverConfig};
use rylab_core::ry::{self, RyParams};
use rylab_core::tensor::SymTensor2;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(t: &SymTensor2) -> Vec<Vec<f64>> {
    let n = t.dim();
    (0..n).map(|i| (0..n).map(|j| t.get(i, j)).collect()).collect()
}

fn diff_spec(step: f64, order: u8, richardson: bool) -> PyResult<DiffSpec> {
    DiffSpec::new(step, order, richardson).map_err(err)
}

/// A closed-form flow, described with the keys of a config `[flow]` section.
///
/// `Flow("cigar", potential="steady", alpha=0.5, beta=0.5)`
#[pyclass(frozen)]
struct Flow {
    kind: FlowKind,
    flow: CoreFlow,
    params: RyParams,
    dim: usize,
}

#[pymethods]
impl Flow {
    #[new]
    #[pyo3(signature = (kind, alpha=1.0, beta=0.0, **options))]
    fn new(kind: &str, alpha: f64, beta: f64, options: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut text = format!("command = ry-eval\n[params]\nalpha = {alpha:e}\nbeta = {beta:e}\n[flow]\nkind = {kind}\n");
        if let Some(opts) = options {
            for (k, v) in opts.iter() {
                let _ = writeln!(text, "{} = {}", k.str()?, v.str()?);
            }
        }
        let doc = Document::parse(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let config = RunConfig::from_document(&doc).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let spec = config.flow.expect("ry-eval configs carry a flow");
        let kind = spec.to_kind(&config.params);
        let flow = make_flow(kind.clone()).map_err(err)?;
        Ok(Self { kind, flow, params: config.params, dim: spec.dim() })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.dim
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.params.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.params.beta
    }

    /// Generic-engine RY tensor at `(t, point)` as a nested list.
    #[pyo3(signature = (t, point, step=1e-3, order=2, richardson=true))]
    fn ry(&self, t: f64, point: Vec<f64>, step: f64, order: u8, richardson: bool) -> PyResult<Vec<Vec<f64>>> {
        let spec = diff_spec(step, order, richardson)?;
        Ok(matrix(&ry::ry_eval(&self.flow, t, &point, &self.params, &spec).map_err(err)?))
    }

    /// RY tensor from the closed-form catalog.
    fn closed_form_ry(&self, t: f64, point: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix(&closed_form_ry(&self.kind, t, &point, &self.params).map_err(err)?))
    }

    #[pyo3(signature = (t, point, step=1e-3, order=2, richardson=true))]
    fn volume_rate(&self, t: f64, point: Vec<f64>, step: f64, order: u8, richardson: bool) -> PyResult<f64> {
        let spec = diff_spec(step, order, richardson)?;
        ry::volume_variation_rate(&self.flow, t, &point, &self.params, &spec).map_err(err)
    }

    #[pyo3(signature = (t, point, step=1e-3, order=2, richardson=true))]
    fn steady_residual(&self, t: f64, point: Vec<f64>, step: f64, order: u8, richardson: bool) -> PyResult<f64> {
        let spec = diff_spec(step, order, richardson)?;
        ry::steady_residual(&self.flow, t, &point, &self.params, &spec).map_err(err)
    }

    /// Volume trend over `(t, point)` samples: `(trend, uniform, min_rate, max_rate)`.
    #[pyo3(signature = (samples, tol=1e-8))]
    fn classify(&self, samples: Vec<(f64, Vec<f64>)>, tol: f64) -> PyResult<(String, bool, f64, f64)> {
        let c = ry::classify_character(&self.flow, &self.params, &samples, &DiffSpec::default(), tol).map_err(err)?;
        Ok((format!("{:?}", c.trend), c.uniform, c.min_rate, c.max_rate))
    }

    fn __repr__(&self) -> String {
        format!("Flow({:?}, alpha={}, beta={})", self.kind, self.params.alpha, self.params.beta)
    }
}

fn cigar_h(t: f64, x: f64, y: f64) -> f64 {
    -((4.0 * t).exp() + x * x + y * y).ln()
}

/// Runs the conformal-factor flow from the cigar on a Cartesian box with
/// exact boundary data. `dt` is the largest step at most `dt_factor·d²` that
/// lands on `t_end`. Returns `(t_final, h, max_error_vs_exact)`.
#[pyfunction]
#[pyo3(signature = (n, t_end, lower=(-2.0, -2.0), upper=(2.0, 2.0), dt_factor=0.02, scheme="rk4"))]
fn solve_cigar(
    n: usize,
    t_end: f64,
    lower: (f64, f64),
    upper: (f64, f64),
    dt_factor: f64,
    scheme: &str,
) -> PyResult<(f64, Vec<Vec<f64>>, f64)> {
    let scheme = match scheme {
        "rk4" => Scheme::Rk4,
        "explicit-euler" => Scheme::ExplicitEuler,
        "semi-implicit" => Scheme::SemiImplicit,
        other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
    };
    let bc = Boundary::Dirichlet(DirichletData::Exact(std::sync::Arc::new(cigar_h)));
    let state = ConformalGridState::from_fn(Chart::Cartesian, [n, n], [lower.0, lower.1], [upper.0, upper.1], 0.0, bc, |x, y| {
        cigar_h(0.0, x, y)
    })
    .map_err(err)?;
    let d = state.spacing[0].min(state.spacing[1]);
    let steps = (t_end / (dt_factor * d * d)).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let config = SolverConfig { params: RyParams::ricci(), dt, steps, scheme, cfl_guard: true };
    let traj = run_flow(&state, &config, &[], steps).map_err(err)?;
    if let Some(a) = &traj.abort {
        return Err(PyRuntimeError::new_err(format!("{} (last valid t = {})", a.reason, a.last_valid_t)));
    }
    let last = traj.last();
    let mut worst = 0.0f64;
    for ((i, j), v) in last.h.indexed_iter() {
        let (x, y) = last.coords(i, j);
        worst = worst.max((v - cigar_h(last.t, x, y)).abs());
    }
    let h = last.h.outer_iter().map(|row| row.to_vec()).collect();
    Ok((last.t, h, worst))
}

/// Executes a config file's text. Returns `(exit_code, report_json)`.
#[pyfunction]
fn run_config(text: &str) -> PyResult<(u8, String)> {
    let config = parse_config(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = execute(&config);
    Ok((out.status.code(), out.report.to_json()))
}

#[pymodule]
fn rylab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Flow>()?;
    m.add_function(wrap_pyfunction!(solve_cigar, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
