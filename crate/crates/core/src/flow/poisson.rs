//! Robin Poisson problem: minimize `W_B(u) - <f, u>_mu`.

use super::boundary::BoundaryProblem;
use super::schur::Elimination;
use crate::energy::EnergyForm;
use crate::error::{domain, Result};
use crate::gasket::VertexFunction;
use crate::measure::VertexMeasure;
use crate::robin::RobinSpec;

/// Relative tolerance of the Neumann compatibility condition `<f, 1>_mu = 0`.
const COMPATIBILITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub u: VertexFunction,
    pub iterations: usize,
    /// KKT residual of the condensed boundary problem.
    pub residual: f64,
}

pub fn poisson_solve(
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    f: &VertexFunction,
    tol: f64,
    max_iters: usize,
) -> Result<PoissonSolution> {
    let graph = form.graph();
    f.check(graph)?;
    spec.check(graph)?;
    spec.require_convex()?;
    if measure.tag() != graph.tag() {
        return domain("measure and energy form live on different graphs");
    }
    let rhs: Vec<f64> = measure
        .masses()
        .iter()
        .zip(f.values())
        .map(|(m, x)| m * x)
        .collect();
    let mean = measure.mean(f)?;

    // Along u + t, the energy is flat and the objective changes like
    // t * (sum_i rec_i(sign t) - mean); coercive iff both slopes are positive.
    let rec_up: f64 = spec
        .functionals()
        .iter()
        .map(|b| b.recession_slope(true))
        .sum();
    let rec_down: f64 = spec
        .functionals()
        .iter()
        .map(|b| b.recession_slope(false))
        .sum();
    let flat = rec_up == 0.0 && rec_down == 0.0;
    if flat {
        let scale = measure.mean(&f.abs())?.max(f64::MIN_POSITIVE);
        if mean.abs() > COMPATIBILITY_TOLERANCE * scale {
            return domain(format!("Neumann problem needs <f, 1> = 0, got {mean}"));
        }
    } else if !(rec_up > mean && rec_down > -mean) {
        return domain(format!(
            "boundary terms do not control constants: recession slopes ({rec_up}, {rec_down}) against mean {mean}"
        ));
    }

    let elimination = Elimination::new(
        graph,
        form.renormalization(),
        &vec![0.0; graph.vertex_count()],
    )?;
    let reduced = elimination.reduce(&rhs);
    let problem = BoundaryProblem {
        schur: elimination.schur(),
        rhs: &reduced.boundary,
        functionals: spec.functionals(),
        pinned: flat.then_some(0),
    };
    let solved = problem.solve(&vec![0.0; graph.n()], tol, max_iters)?;
    let mut values = elimination.back_substitute(&reduced, &solved.x, graph.vertex_count());
    if flat {
        let shift = measure.weighted_dot(&values, &vec![1.0; values.len()]);
        values.iter_mut().for_each(|x| *x -= shift);
    }
    Ok(PoissonSolution {
        u: VertexFunction::new(graph, values)?,
        iterations: solved.sweeps,
        residual: solved.residual,
    })
}

/// Per-vertex residual of the weak form `<u, v>_m + sum_i g_i v(p_i) = <f, v>_mu`
/// tested against every vertex indicator `v`. At a corner the best selection
/// `g_i` of `dB_i(u(p_i))` is used (infinite outside the domain).
pub fn weak_form_residual_vector(
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    u: &VertexFunction,
    f: &VertexFunction,
) -> Result<Vec<f64>> {
    let graph = form.graph();
    u.check(graph)?;
    f.check(graph)?;
    spec.check(graph)?;
    let mut res: Vec<f64> = form
        .gradient_of(u.values())
        .iter()
        .zip(measure.masses().iter().zip(f.values()))
        .map(|(g, (m, fx))| g - m * fx)
        .collect();
    for (b, &p) in spec.functionals().iter().zip(graph.boundary()) {
        res[p] = match b.subdifferential(u.values()[p]) {
            Some(sub) => sub.distance(-res[p]),
            None => f64::INFINITY,
        };
    }
    Ok(res)
}

/// Largest absolute entry of [`weak_form_residual_vector`].
pub fn weak_form_residual(
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    u: &VertexFunction,
    f: &VertexFunction,
) -> Result<f64> {
    Ok(weak_form_residual_vector(form, measure, spec, u, f)?
        .iter()
        .fold(0.0, |acc: f64, r| acc.max(r.abs())))
}

/// The corner entries of [`weak_form_residual_vector`]: the distance from
/// `mu(p_i) f(p_i) - <u, 1_{p_i}>_m` to `dB_i(u(p_i))`.
pub fn boundary_optimality_residuals(
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    u: &VertexFunction,
    f: &VertexFunction,
) -> Result<Vec<f64>> {
    let res = weak_form_residual_vector(form, measure, spec, u, f)?;
    Ok(form.graph().boundary().iter().map(|&p| res[p]).collect())
}
