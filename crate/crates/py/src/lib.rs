//! Python bindings. Vertex functions cross the boundary as lists of floats
//! in canonical vertex order.

use std::sync::Arc;

use gasketflow::verify::{run_suite, Suite, SuiteOptions, DEFAULT_SEED};
use gasketflow::{GasketError, VertexFunction};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: GasketError) -> PyErr {
    match e {
        GasketError::Convergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn function(graph: &gasketflow::GasketGraph, values: Vec<f64>) -> PyResult<VertexFunction> {
    VertexFunction::new(graph, values).map_err(value_error)
}

/// Level-m approximation `V_m` of the N-point gasket.
#[pyclass(frozen, name = "Graph", module = "gasketflow")]
struct Graph(Arc<gasketflow::GasketGraph>);

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize, m: u32) -> PyResult<Self> {
        Ok(Self(Arc::new(
            gasketflow::build_level(n, m).map_err(value_error)?,
        )))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn level(&self) -> u32 {
        self.0.level()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn boundary(&self) -> Vec<usize> {
        self.0.boundary().to_vec()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    /// Integer barycentric weights of every vertex, scaled by `2^m`.
    fn addresses(&self) -> Vec<Vec<u64>> {
        self.0
            .vertices()
            .iter()
            .map(|v| v.weights().to_vec())
            .collect()
    }

    /// Euclidean coordinates in the regular unit simplex.
    fn coordinates(&self) -> Vec<Vec<f64>> {
        self.0.coordinates()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        if v >= self.0.vertex_count() {
            return Err(PyValueError::new_err(format!("vertex {v} out of range")));
        }
        Ok(self.0.neighbors(v).to_vec())
    }

    /// Values on the coarser graph `coarse` at the vertices it shares with this one.
    fn restrict(&self, values: Vec<f64>, coarse: &Graph) -> PyResult<Vec<f64>> {
        let u = function(&self.0, values)?;
        Ok(gasketflow::restrict(&u, &self.0, &coarse.0)
            .map_err(value_error)?
            .into_values())
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, m={}, vertices={})",
            self.0.n(),
            self.0.level(),
            self.0.vertex_count()
        )
    }
}

/// Renormalized energy `W_m` on a graph.
#[pyclass(frozen, name = "EnergyForm", module = "gasketflow")]
struct EnergyForm(gasketflow::EnergyForm);

#[pymethods]
impl EnergyForm {
    #[new]
    fn new(graph: &Graph) -> Self {
        Self(gasketflow::EnergyForm::new(graph.0.clone()))
    }

    #[getter]
    fn graph(&self) -> Graph {
        Graph(self.0.shared_graph())
    }

    #[getter]
    fn renormalization(&self) -> f64 {
        self.0.renormalization()
    }

    fn energy(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0
            .energy(&function(self.0.graph(), u)?)
            .map_err(value_error)
    }

    fn inner(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        let g = self.0.graph();
        self.0
            .inner(&function(g, u)?, &function(g, v)?)
            .map_err(value_error)
    }

    fn gradient(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0
            .gradient(&function(self.0.graph(), u)?)
            .map_err(value_error)
    }

    /// `r_m * sum_{y ~ p_i} (u(p_i) - u(y))`.
    fn normal_derivative(&self, u: Vec<f64>, i: usize) -> PyResult<f64> {
        gasketflow::normal_derivative(&self.0, &function(self.0.graph(), u)?, i)
            .map_err(value_error)
    }
}

/// Vertex masses of a self-similar measure; uniform weights when `weights` is omitted.
#[pyclass(frozen, name = "Measure", module = "gasketflow")]
struct Measure(gasketflow::VertexMeasure, Arc<gasketflow::GasketGraph>);

#[pymethods]
impl Measure {
    #[new]
    #[pyo3(signature = (graph, weights=None))]
    fn new(graph: &Graph, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let weights = match weights {
            Some(w) => gasketflow::MeasureWeights::new(w).map_err(value_error)?,
            None => gasketflow::MeasureWeights::uniform(graph.0.n()),
        };
        let measure = gasketflow::vertex_measure(&graph.0, &weights).map_err(value_error)?;
        Ok(Self(measure, graph.0.clone()))
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.0.masses().to_vec()
    }

    fn mean(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.mean(&function(&self.1, u)?).map_err(value_error)
    }

    fn l2_inner(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        self.0
            .l2_inner(&function(&self.1, u)?, &function(&self.1, v)?)
            .map_err(value_error)
    }
}

/// One boundary functional per corner, in the JSON form used by config files.
#[pyclass(frozen, name = "RobinSpec", module = "gasketflow")]
struct RobinSpec(gasketflow::RobinSpec);

#[pymethods]
impl RobinSpec {
    /// e.g. `RobinSpec('[{"kind": "quadratic", "beta": 1.0}, "neumann", "dirichlet"]')`
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        let spec: gasketflow::RobinSpec =
            serde_json::from_str(json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        gasketflow::RobinSpec::new(spec.functionals().to_vec())
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn neumann(n: usize) -> Self {
        Self(gasketflow::RobinSpec::neumann(n))
    }

    #[staticmethod]
    fn dirichlet(n: usize) -> Self {
        Self(gasketflow::RobinSpec::dirichlet(n))
    }

    #[staticmethod]
    fn quadratic(n: usize, beta: f64) -> PyResult<Self> {
        let b = gasketflow::BoundaryFunctional::quadratic(beta).map_err(value_error)?;
        Ok(Self(gasketflow::RobinSpec::uniform(n, b)))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn is_convex(&self) -> bool {
        self.0.is_convex()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("spec serializes")
    }

    /// `W_B(u)`; `inf` outside the effective domain.
    fn eval_wb(&self, form: &EnergyForm, u: Vec<f64>) -> PyResult<f64> {
        gasketflow::eval_wb(&form.0, &self.0, &function(form.0.graph(), u)?).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("RobinSpec({})", self.to_json())
    }
}

#[pyfunction]
fn harmonic_function(graph: &Graph, boundary: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(gasketflow::harmonic_function(&graph.0, &boundary)
        .map_err(value_error)?
        .into_values())
}

#[pyfunction]
fn harmonic_extend(coarse: &Graph, fine: &Graph, u: Vec<f64>) -> PyResult<Vec<f64>> {
    let u = function(&coarse.0, u)?;
    Ok(gasketflow::harmonic_extend(&coarse.0, &fine.0, &u)
        .map_err(value_error)?
        .into_values())
}

/// `[W_0(u|V_0), ..., W_m(u)]`.
#[pyfunction]
fn energy_profile(graph: &Graph, u: Vec<f64>) -> PyResult<Vec<f64>> {
    gasketflow::energy_profile(&graph.0, &function(&graph.0, u)?).map_err(value_error)
}

/// One implicit step of size `tau`.
#[pyfunction]
#[pyo3(signature = (form, measure, spec, u, tau, tol=1e-10))]
fn step(
    form: &EnergyForm,
    measure: &Measure,
    spec: &RobinSpec,
    u: Vec<f64>,
    tau: f64,
    tol: f64,
) -> PyResult<Vec<f64>> {
    let u = function(form.0.graph(), u)?;
    Ok(
        gasketflow::backward_euler_step(&form.0, &measure.0, &spec.0, &u, tau, tol)
            .map_err(value_error)?
            .into_values(),
    )
}

/// Returns a dict with `times`, `states` and per-step `iterations`/`residuals`.
#[pyfunction]
#[pyo3(signature = (form, measure, spec, u0, tau, t_end, tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    form: &EnergyForm,
    measure: &Measure,
    spec: &RobinSpec,
    u0: Vec<f64>,
    tau: f64,
    t_end: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = gasketflow::FlowConfig::new(tau, t_end, tol).map_err(value_error)?;
    let u0 = function(form.0.graph(), u0)?;
    let traj = py
        .detach(|| gasketflow::evolve(&form.0, &measure.0, &spec.0, &u0, &config))
        .map_err(|e| value_error(e.source))?;
    let out = PyDict::new(py);
    out.set_item("times", traj.times)?;
    out.set_item(
        "states",
        traj.states
            .into_iter()
            .map(VertexFunction::into_values)
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "iterations",
        traj.diagnostics
            .iter()
            .map(|d| d.iterations)
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "residuals",
        traj.diagnostics
            .iter()
            .map(|d| d.residual)
            .collect::<Vec<_>>(),
    )?;
    Ok(out)
}

/// Minimizer of `W_B(u) - <f, u>_mu`, as `(u, iterations, residual)`.
#[pyfunction]
#[pyo3(signature = (form, measure, spec, f, tol=1e-12, max_iters=100_000))]
fn poisson(
    py: Python<'_>,
    form: &EnergyForm,
    measure: &Measure,
    spec: &RobinSpec,
    f: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> PyResult<(Vec<f64>, usize, f64)> {
    let f = function(form.0.graph(), f)?;
    let sol = py
        .detach(|| gasketflow::poisson_solve(&form.0, &measure.0, &spec.0, &f, tol, max_iters))
        .map_err(value_error)?;
    Ok((sol.u.into_values(), sol.iterations, sol.residual))
}

/// Runs a verification suite (`scalar`, `energy`, `wb`, `locality`, `flow`)
/// and returns one dict per property.
#[pyfunction]
#[pyo3(signature = (suite, seed=DEFAULT_SEED, samples=None, tol=None))]
fn verify<'py>(
    py: Python<'py>,
    suite: &str,
    seed: u64,
    samples: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let suite: Suite = suite.parse().map_err(value_error)?;
    let opts = SuiteOptions { samples, tol };
    let reports = py
        .detach(|| run_suite(suite, seed, &opts))
        .map_err(value_error)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("property", r.property)?;
            d.set_item("samples", r.samples)?;
            d.set_item("violations", r.violations)?;
            d.set_item("max_slack", r.max_slack)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect()
}

/// Robin heat flows on Sierpinski gasket graphs.
#[pymodule(name = "gasketflow")]
mod gasketflow_module {
    #[pymodule_export]
    use super::{
        energy_profile, evolve, harmonic_extend, harmonic_function, poisson, step, verify,
        EnergyForm, Graph, Measure, RobinSpec,
    };

    #[pymodule_init]
    fn init(m: &pyo3::Bound<'_, pyo3::types::PyModule>) -> pyo3::PyResult<()> {
        use pyo3::types::PyModuleMethods;
        m.add("__version__", gasketflow::VERSION)
    }
}
