//! Trajectory-level checks: positivity, order preservation, contraction in
//! `L^inf` and `L^2_mu`, energy decay, domination and the Dirichlet/Neumann
//! sandwich.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functional::{builtin_convex_specs, NamedSpec};
use super::{random_values, sample_rng, Report, Tally};
use crate::energy::EnergyForm;
use crate::error::{domain, Result};
use crate::flow::{BackwardEuler, FlowConfig};
use crate::gasket::{build_level, VertexFunction};
use crate::measure::{vertex_measure, MeasureWeights, VertexMeasure};
use crate::robin::{bimonotone_grid, eval_wb, spec_domination_condition, RobinSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSuiteConfig {
    pub seed: u64,
    /// Random initial pairs per spec.
    pub pairs: usize,
    pub n: usize,
    pub m: u32,
    pub flow: FlowConfig,
    /// Allowed excess; the checks count anything above it as a violation.
    pub tolerance: f64,
    pub value_range: f64,
}

impl FlowSuiteConfig {
    pub fn new(seed: u64, pairs: usize, n: usize, m: u32, flow: FlowConfig) -> Self {
        Self {
            seed,
            pairs,
            n,
            m,
            flow,
            tolerance: 10.0 * flow.tol,
            value_range: 1.0,
        }
    }
}

const PROPERTIES: [&str; 10] = [
    "positivity",
    "order",
    "linf_contraction",
    "l2_contraction",
    "energy_decay",
    "domination",
    "sandwich_dirichlet",
    "sandwich_neumann",
    "dirichlet_boundary",
    "solver",
];

fn slot(property: &str) -> usize {
    PROPERTIES
        .iter()
        .position(|p| *p == property)
        .expect("known property")
}

#[derive(Clone, Copy, Default)]
struct Outcome([Tally; PROPERTIES.len()]);

impl Outcome {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a = a.merge(b);
        }
        self
    }
}

struct Flows<'a> {
    spec: BackwardEuler<'a>,
    dirichlet: BackwardEuler<'a>,
    neumann: BackwardEuler<'a>,
}

fn max_over<'a>(
    xs: &'a [VertexFunction],
    ys: &'a [VertexFunction],
    f: impl Fn(&VertexFunction, &VertexFunction) -> f64,
) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| f(x, y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_k max_x (a_k(x) - b_k(x))`.
fn pointwise_excess(a: &[VertexFunction], b: &[VertexFunction]) -> f64 {
    max_over(a, b, |x, y| {
        x.values()
            .iter()
            .zip(y.values())
            .map(|(p, q)| p - q)
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

fn abs_all(xs: &[VertexFunction]) -> Vec<VertexFunction> {
    xs.iter().map(VertexFunction::abs).collect()
}

/// Largest increase between consecutive entries; `inf - inf` counts as 0.
fn largest_increase(xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| {
            if w[0] == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                w[1] - w[0]
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn run_pair(
    rng: &mut ChaCha8Rng,
    flows: &Flows<'_>,
    form: &EnergyForm,
    measure: &VertexMeasure,
    spec: &RobinSpec,
    cfg: &FlowSuiteConfig,
    dominated: bool,
) -> Outcome {
    let graph = form.graph();
    let nv = graph.vertex_count();
    let r = cfg.value_range;
    let tol = cfg.tolerance;
    let mut out = Outcome::default();
    let draw = |rng: &mut ChaCha8Rng| {
        VertexFunction::new(graph, random_values(rng, nv, r)).expect("finite")
    };

    let a0 = draw(rng);
    let b0 = draw(rng);
    let u0 = draw(rng);
    let bump: Vec<f64> = (0..nv).map(|_| rng.random_range(0.0..=r / 2.0)).collect();
    let v0 = u0
        .abs()
        .zip_with(
            &VertexFunction::new(graph, bump).expect("finite"),
            |x, y| x + y,
        )
        .unwrap();

    let runs = [
        flows.spec.run(&a0, &cfg.flow),
        flows.spec.run(&b0, &cfg.flow),
        flows.spec.run(&u0, &cfg.flow),
        flows.spec.run(&v0, &cfg.flow),
        flows.dirichlet.run(&u0, &cfg.flow),
        flows.neumann.run(&v0, &cfg.flow),
    ];
    let mut states = Vec::with_capacity(runs.len());
    for run in runs {
        match run {
            Ok(t) => states.push(t.states),
            Err(_) => {
                out.0[slot("solver")].fail();
                return out;
            }
        }
    }
    out.0[slot("solver")].record(Some(0.0), tol);
    let [sa, sb, su, sv, s_dir, s_neu] =
        <[Vec<VertexFunction>; 6]>::try_from(states).unwrap_or_else(|_| unreachable!("six runs"));

    let sup_dist: Vec<f64> = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| x.sub(y).unwrap().sup_norm())
        .collect();
    let l2_dist: Vec<f64> = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| measure.l2_distance(x, y).unwrap())
        .collect();
    out.0[slot("linf_contraction")].record(Some(largest_increase(&sup_dist)), tol);
    out.0[slot("l2_contraction")].record(Some(largest_increase(&l2_dist)), tol);

    let energies: Vec<f64> = sa.iter().map(|x| eval_wb(form, spec, x).unwrap()).collect();
    out.0[slot("energy_decay")].record(Some(largest_increase(&energies)), tol);

    // v0 >= 0 and u0 <= |u0| <= v0
    let lowest = sv
        .iter()
        .map(VertexFunction::min_value)
        .fold(f64::INFINITY, f64::min);
    out.0[slot("positivity")].record(Some(-lowest), tol);
    out.0[slot("order")].record(Some(pointwise_excess(&su, &sv)), tol);
    if dominated {
        out.0[slot("domination")].record(Some(pointwise_excess(&abs_all(&su), &sv)), tol);
    }
    out.0[slot("sandwich_dirichlet")].record(Some(pointwise_excess(&abs_all(&s_dir), &sv)), tol);
    out.0[slot("sandwich_neumann")].record(Some(pointwise_excess(&abs_all(&su), &s_neu)), tol);

    let boundary_max = s_dir
        .iter()
        .skip(1)
        .flat_map(|x| graph.boundary().iter().map(move |&b| x.values()[b].abs()))
        .fold(0.0, f64::max);
    out.0[slot("dirichlet_boundary")].record(Some(boundary_max), 0.0);
    out
}

/// Runs every trajectory property for each spec over `cfg.pairs` seeded
/// initial pairs. Reports are named `<spec>/<property>`.
pub fn check_flow_properties(cfg: &FlowSuiteConfig, specs: &[NamedSpec]) -> Result<Vec<Report>> {
    cfg.flow.validate()?;
    if cfg.pairs == 0 {
        return domain("pairs must be at least 1");
    }
    let graph = Arc::new(build_level(cfg.n, cfg.m)?);
    let measure = vertex_measure(&graph, &MeasureWeights::uniform(cfg.n))?;
    let form = EnergyForm::new(graph);
    let dirichlet = RobinSpec::dirichlet(cfg.n);
    let neumann = RobinSpec::neumann(cfg.n);
    let grid = bimonotone_grid(4.0 * cfg.value_range.max(1.0), 400);

    let mut reports = Vec::new();
    for named in specs {
        let flows = Flows {
            spec: BackwardEuler::new(&form, &measure, &named.spec, cfg.flow.tau)?,
            dirichlet: BackwardEuler::new(&form, &measure, &dirichlet, cfg.flow.tau)?,
            neumann: BackwardEuler::new(&form, &measure, &neumann, cfg.flow.tau)?,
        };
        // |S_B u0| <= S_B v0 needs s -> B(s) - B(|s|) bi-monotone
        let dominated = spec_domination_condition(&named.spec, &named.spec, &grid);
        let key = format!("flow/{}", named.name);
        let outcome = (0..cfg.pairs as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = sample_rng(cfg.seed, &key, k);
                run_pair(
                    &mut rng,
                    &flows,
                    &form,
                    &measure,
                    &named.spec,
                    cfg,
                    dominated,
                )
            })
            .reduce(Outcome::default, Outcome::merge);
        for (property, tally) in PROPERTIES.iter().zip(outcome.0) {
            if *property == "domination" && !dominated {
                continue;
            }
            reports.push(tally.into_report(&format!("{}/{property}", named.name), cfg.seed));
        }
    }
    Ok(reports)
}

/// [`check_flow_properties`] over [`builtin_convex_specs`].
pub fn check_builtin_flow_properties(cfg: &FlowSuiteConfig) -> Result<Vec<Report>> {
    check_flow_properties(cfg, &builtin_convex_specs(cfg.n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_flow_suite_passes() {
        let flow = FlowConfig::new(0.1, 0.5, 1e-11).unwrap();
        let cfg = FlowSuiteConfig::new(3, 3, 3, 2, flow);
        let reports = check_builtin_flow_properties(&cfg).unwrap();
        for r in &reports {
            assert!(r.passed(), "{r:?}");
        }
        assert!(reports
            .iter()
            .any(|r| r.property == "mixed/sandwich_neumann" && r.samples == 3));
    }

    #[test]
    fn increase_ignores_infinite_start() {
        assert_eq!(largest_increase(&[f64::INFINITY, 2.0, 1.0]), -1.0);
        assert_eq!(largest_increase(&[1.0, 1.5]), 0.5);
    }
}
