//! Backward-Euler subgradient flow of `W_B` in `L^2_mu`, the Robin Poisson
//! problem and the renormalized normal derivative.
//!
//! Both problems minimize `1/2 v^T H v - b^T v + sum_i B_i(v(p_i))` with `H`
//! quadratic and the nonsmooth part on the `N` corners only. The interior is
//! eliminated exactly (see `schur`) and the remaining `N`-dimensional
//! problem is solved by cyclic coordinate prox (see `boundary`).

mod boundary;
mod poisson;
mod schur;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyForm;
use crate::error::{domain, GasketError, Result};
use crate::gasket::{GasketGraph, VertexFunction};
use crate::measure::VertexMeasure;
use crate::robin::RobinSpec;

use boundary::BoundaryProblem;
use schur::Elimination;

pub use poisson::{
    boundary_optimality_residuals, poisson_solve, weak_form_residual, weak_form_residual_vector,
    PoissonSolution,
};

pub const DEFAULT_MAX_INNER_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub tau: f64,
    pub t_end: f64,
    /// KKT residual tolerance of each implicit step.
    pub tol: f64,
    #[serde(default = "default_max_inner_iters")]
    pub max_inner_iters: usize,
}

fn default_max_inner_iters() -> usize {
    DEFAULT_MAX_INNER_ITERS
}

impl FlowConfig {
    pub fn new(tau: f64, t_end: f64, tol: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            t_end,
            tol,
            max_inner_iters: DEFAULT_MAX_INNER_ITERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return domain(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.tau) {
            return domain(format!(
                "t_end = {} must be finite and at least tau = {}",
                self.t_end, self.tau
            ));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return domain(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_inner_iters == 0 {
            return domain("max_inner_iters must be at least 1");
        }
        Ok(())
    }

    /// Number of implicit steps; the last recorded time is `steps * tau`.
    pub fn step_count(&self) -> usize {
        (self.t_end / self.tau - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Coordinate sweeps of the boundary solver.
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VertexFunction>,
    /// `diagnostics[k]` belongs to the step producing `states[k + 1]`.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    fn start(u0: &VertexFunction) -> Self {
        Self {
            times: vec![0.0],
            states: vec![u0.clone()],
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &VertexFunction {
        self.states
            .last()
            .expect("a trajectory holds at least the initial state")
    }
}

/// A failed step together with everything computed before it.
#[derive(Debug, Clone, thiserror::Error)]
#[error("step {} failed: {source}", .partial.diagnostics.len() + 1)]
pub struct EvolveError {
    pub partial: Trajectory,
    pub source: GasketError,
}

/// Reusable data of the implicit step `argmin_v W_B(v) + |v - u|^2_mu / (2 tau)`.
pub struct BackwardEuler<'a> {
    form: &'a EnergyForm,
    measure: &'a VertexMeasure,
    spec: &'a RobinSpec,
    tau: f64,
    elimination: Elimination,
}

impl<'a> BackwardEuler<'a> {
    pub fn new(
        form: &'a EnergyForm,
        measure: &'a VertexMeasure,
        spec: &'a RobinSpec,
        tau: f64,
    ) -> Result<Self> {
        let graph = form.graph();
        if measure.tag() != graph.tag() {
            return domain("measure and energy form live on different graphs");
        }
        spec.check(graph)?;
        spec.require_convex()?;
        if !(tau.is_finite() && tau > 0.0) {
            return domain(format!("tau must be positive, got {tau}"));
        }
        let diagonal: Vec<f64> = measure.masses().iter().map(|m| m / tau).collect();
        let elimination = Elimination::new(graph, form.renormalization(), &diagonal)?;
        Ok(Self {
            form,
            measure,
            spec,
            tau,
            elimination,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Iterates [`Self::step`] for `config.step_count()` steps; `config.tau`
    /// must equal the step this stepper was built for.
    pub fn run(
        &self,
        u0: &VertexFunction,
        config: &FlowConfig,
    ) -> std::result::Result<Trajectory, EvolveError> {
        let mut traj = Trajectory::start(u0);
        let checked = config.validate().and_then(|_| {
            if config.tau != self.tau {
                return domain(format!(
                    "stepper built for tau = {}, config has {}",
                    self.tau, config.tau
                ));
            }
            u0.check(self.form.graph())
        });
        if let Err(source) = checked {
            return Err(EvolveError {
                partial: traj,
                source,
            });
        }
        for k in 1..=config.step_count() {
            match self.step(traj.last(), config.tol, config.max_inner_iters) {
                Ok((next, diag)) => {
                    traj.times.push(k as f64 * config.tau);
                    traj.states.push(next);
                    traj.diagnostics.push(diag);
                }
                Err(source) => {
                    return Err(EvolveError {
                        partial: traj,
                        source,
                    })
                }
            }
        }
        Ok(traj)
    }

    pub fn step(
        &self,
        u: &VertexFunction,
        tol: f64,
        max_iters: usize,
    ) -> Result<(VertexFunction, StepDiagnostics)> {
        let graph = self.form.graph();
        u.check(graph)?;
        let rhs: Vec<f64> = self
            .measure
            .masses()
            .iter()
            .zip(u.values())
            .map(|(m, x)| m / self.tau * x)
            .collect();
        let reduced = self.elimination.reduce(&rhs);
        let start: Vec<f64> = graph.boundary().iter().map(|&v| u.values()[v]).collect();
        let problem = BoundaryProblem {
            schur: self.elimination.schur(),
            rhs: &reduced.boundary,
            functionals: self.spec.functionals(),
            pinned: None,
        };
        let solved = problem.solve(&start, tol, max_iters)?;
        let values = self
            .elimination
            .back_substitute(&reduced, &solved.x, graph.vertex_count());
        let interior = interior_residual(self.form, &values, &rhs, |v| {
            self.measure.masses()[v] / self.tau
        });
        let next = VertexFunction::new(graph, values)?;
        Ok((
            next,
            StepDiagnostics {
                iterations: solved.sweeps,
                residual: solved.residual.hypot(interior),
            },
        ))
    }
}

/// Euclidean norm over non-boundary vertices of `(2 r L v + D v - b)`.
fn interior_residual(
    form: &EnergyForm,
    v: &[f64],
    rhs: &[f64],
    diagonal: impl Fn(usize) -> f64,
) -> f64 {
    let graph = form.graph();
    let grad = form.gradient_of(v);
    grad.iter()
        .enumerate()
        .filter(|(x, _)| !graph.is_boundary(*x))
        .map(|(x, g)| {
            let r = g + diagonal(x) * v[x] - rhs[x];
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// One implicit Euler step from `u` with step `tau`.
pub fn backward_euler_step(
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    u: &VertexFunction,
    tau: f64,
    tol: f64,
) -> Result<VertexFunction> {
    BackwardEuler::new(form, measure, spec, tau)?
        .step(u, tol, DEFAULT_MAX_INNER_ITERS)
        .map(|(v, _)| v)
}

/// Iterates the implicit step from `u0` until `t_end`.
pub fn evolve(
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    u0: &VertexFunction,
    config: &FlowConfig,
) -> std::result::Result<Trajectory, EvolveError> {
    let stepper =
        BackwardEuler::new(form, measure, spec, config.tau).map_err(|source| EvolveError {
            partial: Trajectory::start(u0),
            source,
        })?;
    stepper.run(u0, config)
}

/// `((N+2)/N)^m sum_{y ~ p_i} (u(p_i) - u(y))`.
pub fn normal_derivative(form: &EnergyForm, u: &VertexFunction, i: usize) -> Result<f64> {
    let graph = form.graph();
    u.check(graph)?;
    if i >= graph.n() {
        return domain(format!(
            "boundary index {i} out of range for N = {}",
            graph.n()
        ));
    }
    Ok(boundary_difference_sum(graph, u.values(), i) * form.renormalization())
}

fn boundary_difference_sum(graph: &GasketGraph, x: &[f64], i: usize) -> f64 {
    let p = graph.boundary()[i];
    graph.neighbors(p).iter().map(|&y| x[p] - x[y]).sum()
}
