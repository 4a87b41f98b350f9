//! Direct evaluation of the `W_B` inequalities on sampled functions, and
//! additivity over disjoint supports.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::inequalities::{contraction_truncation, domination_truncation};
use super::{random_values, relative_excess, run_samples, Report, SampleConfig, RELATIVE_SLACK};
use crate::energy::EnergyForm;
use crate::error::{domain, Result};
use crate::gasket::{GasketGraph, VertexFunction};
use crate::robin::{eval_wb, BoundaryFunctional, RobinSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpec {
    pub name: String,
    pub spec: RobinSpec,
}

impl NamedSpec {
    pub fn new(name: &str, spec: RobinSpec) -> Self {
        Self {
            name: name.to_string(),
            spec,
        }
    }
}

/// One uniform spec per built-in convex kind, plus a mixed one
/// `(Quadratic(1), Zero, Dirichlet, ...)` padded with `AbsoluteValue(1)`.
pub fn builtin_convex_specs(n: usize) -> Vec<NamedSpec> {
    let uniform = |b: BoundaryFunctional| RobinSpec::uniform(n, b);
    let mut mixed = vec![
        BoundaryFunctional::Quadratic { beta: 1.0 },
        BoundaryFunctional::Zero,
        BoundaryFunctional::DirichletIndicator,
    ];
    mixed.resize(n.max(3), BoundaryFunctional::AbsoluteValue { beta: 1.0 });
    mixed.truncate(n);
    vec![
        NamedSpec::new("neumann", RobinSpec::neumann(n)),
        NamedSpec::new("dirichlet", RobinSpec::dirichlet(n)),
        NamedSpec::new(
            "quadratic",
            uniform(BoundaryFunctional::Quadratic { beta: 1.0 }),
        ),
        NamedSpec::new(
            "absolute_value",
            uniform(BoundaryFunctional::AbsoluteValue { beta: 1.0 }),
        ),
        NamedSpec::new(
            "power",
            uniform(BoundaryFunctional::Power { beta: 1.0, p: 3.0 }),
        ),
        NamedSpec::new(
            "box",
            uniform(BoundaryFunctional::BoxIndicator {
                lower: -0.5,
                upper: 1.0,
            }),
        ),
        NamedSpec::new(
            "piecewise_linear",
            uniform(
                BoundaryFunctional::piecewise_linear(vec![(-1.0, 2.0), (0.5, 0.25), (2.0, 2.0)])
                    .expect("valid knots"),
            ),
        ),
        NamedSpec::new("mixed", RobinSpec::new(mixed).expect("valid spec")),
    ]
}

/// Random function whose corner values are zeroed with probability 1/2, so
/// that indicator-type terms are finite in a good share of the samples.
fn sample_function(rng: &mut ChaCha8Rng, graph: &GasketGraph, range: f64) -> VertexFunction {
    let mut values = random_values(rng, graph.vertex_count(), range);
    if rng.random_bool(0.5) {
        for &b in graph.boundary() {
            values[b] = 0.0;
        }
    }
    VertexFunction::new(graph, values).expect("finite samples")
}

/// The functional inequalities for `W_B`:
/// order `W_B(u ^ v) + W_B(u v v) <= W_B(u) + W_B(v)`, positivity
/// `W_B(u+) <= W_B(u)`, the truncation inequality (convex `b` only), and
/// domination of `W_{b_hat}` by `W_b` for `v >= 0`.
pub fn check_wb_criteria(
    form: &EnergyForm,
    b: &RobinSpec,
    b_hat: &RobinSpec,
    cfg: &SampleConfig,
) -> Result<Vec<Report>> {
    cfg.validate()?;
    let graph = form.graph();
    b.check(graph)?;
    b_hat.check(graph)?;
    let r = cfg.value_range;
    let wb = |spec: &RobinSpec, u: &VertexFunction| eval_wb(form, spec, u).expect("same graph");
    let count = cfg.sample_count;

    let order = run_samples(cfg.seed, "wb_order", count, |rng, t| {
        let (u, v) = (
            sample_function(rng, graph, r),
            sample_function(rng, graph, r),
        );
        let lhs = wb(b, &u.meet(&v).unwrap()) + wb(b, &u.join(&v).unwrap());
        t.record(relative_excess(lhs, wb(b, &u) + wb(b, &v)), RELATIVE_SLACK);
    });
    let positive = run_samples(cfg.seed, "wb_positive", count, |rng, t| {
        let u = sample_function(rng, graph, r);
        t.record(
            relative_excess(wb(b, &u.positive_part()), wb(b, &u)),
            RELATIVE_SLACK,
        );
    });
    let domination = run_samples(cfg.seed, "wb_domination", count, |rng, t| {
        let u = sample_function(rng, graph, r);
        let v = sample_function(rng, graph, r).abs();
        let (c, d) = domination_truncation(&u, &v).unwrap();
        let lhs = wb(b_hat, &c) + wb(b, &d);
        t.record(
            relative_excess(lhs, wb(b_hat, &u) + wb(b, &v)),
            RELATIVE_SLACK,
        );
    });
    let mut reports = vec![
        order.into_report("wb_order", cfg.seed),
        positive.into_report("wb_positive", cfg.seed),
        domination.into_report("wb_domination", cfg.seed),
    ];
    if b.is_convex() {
        let contraction = run_samples(cfg.seed, "wb_contraction", count, |rng, t| {
            let (u, v) = (
                sample_function(rng, graph, r),
                sample_function(rng, graph, r),
            );
            let alpha = rng.random_range(0.0..r).max(f64::MIN_POSITIVE);
            let (x, y) = contraction_truncation(&u, &v, alpha).unwrap();
            t.record(
                relative_excess(wb(b, &x) + wb(b, &y), wb(b, &u) + wb(b, &v)),
                RELATIVE_SLACK,
            );
        });
        reports.push(contraction.into_report("wb_contraction", cfg.seed));
    }
    Ok(reports)
}

/// A random pair supported on disjoint unions of k-cells, `1 <= k <= m`:
/// each k-cell is assigned to `u`, to `v` or to neither, and a function is
/// supported on the vertices all of whose m-cells belong to its k-cells.
/// No edge joins the two supports.
pub(crate) fn disjoint_pair(
    rng: &mut ChaCha8Rng,
    graph: &GasketGraph,
    range: f64,
) -> Result<(VertexFunction, VertexFunction)> {
    let (n, m) = (graph.n(), graph.level());
    if m == 0 {
        return domain("disjoint supports need at least level 1");
    }
    let k = rng.random_range(1..=m);
    let block = n.pow(m - k);
    let owner: Vec<u8> = (0..n.pow(k)).map(|_| rng.random_range(0..3u8)).collect();
    // owner of each vertex: 0/1 if all its m-cells agree, 2 otherwise
    let mut vertex_owner: Vec<Option<u8>> = vec![None; graph.vertex_count()];
    for (c, cell) in graph.cells().enumerate() {
        let o = owner[c / block];
        for &x in cell {
            vertex_owner[x] = match vertex_owner[x] {
                None => Some(o),
                Some(p) if p == o => Some(o),
                Some(_) => Some(2),
            };
        }
    }
    let values = random_values(rng, graph.vertex_count(), range);
    let part = |which: u8| {
        let vals = values
            .iter()
            .zip(&vertex_owner)
            .map(|(&x, &o)| if o == Some(which) { x } else { 0.0 })
            .collect();
        VertexFunction::new(graph, vals)
    };
    Ok((part(0)?, part(1)?))
}

/// Additivity `W_B(u + v) = W_B(u) + W_B(v)` on disjointly supported pairs.
pub fn check_locality(form: &EnergyForm, spec: &RobinSpec, cfg: &SampleConfig) -> Result<Report> {
    cfg.validate()?;
    let graph = form.graph();
    spec.check(graph)?;
    if graph.level() == 0 {
        return domain("locality needs level at least 1");
    }
    let wb = |u: &VertexFunction| eval_wb(form, spec, u).expect("same graph");
    let tally = run_samples(cfg.seed, "locality", cfg.sample_count, |rng, t| {
        let (u, v) = disjoint_pair(rng, graph, cfg.value_range).expect("level checked");
        let whole = wb(&u.add(&v).unwrap());
        let parts = wb(&u) + wb(&v);
        let excess = if whole == f64::INFINITY || parts == f64::INFINITY {
            // both sides must be infinite together
            Some(if whole == parts { 0.0 } else { f64::INFINITY })
        } else {
            relative_excess(whole, parts)
                .zip(relative_excess(parts, whole))
                .map(|(a, b)| a.max(b))
        };
        t.record(excess, RELATIVE_SLACK);
    });
    Ok(tally.into_report("locality", cfg.seed))
}
