//! Pointwise truncation inequalities and their edgewise consequences for `W_m`.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::functional::disjoint_pair;
use super::{
    random_values, relative_excess, run_samples, Report, SampleConfig, Tally, RELATIVE_SLACK,
};
use crate::energy::EnergyForm;
use crate::error::Result;
use crate::gasket::{build_level, GasketGraph, VertexFunction};

/// Sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(A, B)`: `a` clamped to `[(a+b-alpha)/2, (a+b+alpha)/2]` from below
/// first, `b` clamped from above first.
pub fn lemma_clamp(a: f64, b: f64, alpha: f64) -> (f64, f64) {
    let lo = (a + b - alpha) / 2.0;
    let hi = (a + b + alpha) / 2.0;
    (a.max(lo).min(hi), b.min(hi).max(lo))
}

/// `(C, D) = (min(|a|, b) sgn(a), max(|a|, b))`.
pub fn lemma_domination(a: f64, b: f64) -> (f64, f64) {
    (a.abs().min(b) * sgn(a), a.abs().max(b))
}

/// `((u v f) ^ g, (v ^ g) v f)` with `f = (u+v-alpha)/2`, `g = (u+v+alpha)/2`.
pub fn contraction_truncation(
    u: &VertexFunction,
    v: &VertexFunction,
    alpha: f64,
) -> Result<(VertexFunction, VertexFunction)> {
    Ok((
        u.zip_with(v, |a, b| lemma_clamp(a, b, alpha).0)?,
        u.zip_with(v, |a, b| lemma_clamp(a, b, alpha).1)?,
    ))
}

/// `((|u| ^ v) sgn u, |u| v v)`.
pub fn domination_truncation(
    u: &VertexFunction,
    v: &VertexFunction,
) -> Result<(VertexFunction, VertexFunction)> {
    Ok((
        u.zip_with(v, |a, b| lemma_domination(a, b).0)?,
        u.zip_with(v, |a, b| lemma_domination(a, b).1)?,
    ))
}

fn sq(x: f64) -> f64 {
    x * x
}

/// Scalar forms of the contraction and domination inequalities on random
/// tuples `(a_1, a_2, b_1, b_2, alpha)`.
pub fn check_scalar_inequalities(cfg: &SampleConfig) -> Result<Vec<Report>> {
    cfg.validate()?;
    let r = cfg.value_range;
    let contraction = run_samples(
        cfg.seed,
        "scalar_contraction",
        cfg.sample_count,
        |rng, tally| {
            let x = random_values(rng, 4, r);
            let alpha = rng.random_range(0.0..r).max(f64::MIN_POSITIVE);
            let (a1, b1) = lemma_clamp(x[0], x[2], alpha);
            let (a2, b2) = lemma_clamp(x[1], x[3], alpha);
            let lhs = sq(a1 - a2) + sq(b1 - b2);
            let rhs = sq(x[0] - x[1]) + sq(x[2] - x[3]);
            tally.record(relative_excess(lhs, rhs), RELATIVE_SLACK);
        },
    );
    let domination = run_samples(
        cfg.seed,
        "scalar_domination",
        cfg.sample_count,
        |rng, tally| {
            let x = random_values(rng, 4, r);
            let (b1, b2) = (x[2].abs(), x[3].abs());
            let (c1, d1) = lemma_domination(x[0], b1);
            let (c2, d2) = lemma_domination(x[1], b2);
            let lhs = sq(c1 - c2) + sq(d1 - d2);
            let rhs = sq(x[0] - x[1]) + sq(b1 - b2);
            tally.record(relative_excess(lhs, rhs), RELATIVE_SLACK);
        },
    );
    Ok(vec![
        contraction.into_report("scalar_contraction", cfg.seed),
        domination.into_report("scalar_domination", cfg.seed),
    ])
}

/// `|rel(lhs - rhs)|`, for equalities.
fn two_sided_excess(lhs: f64, rhs: f64) -> Option<f64> {
    relative_excess(lhs, rhs)
        .zip(relative_excess(rhs, lhs))
        .map(|(a, b)| a.max(b))
}

/// `(u, u - w)` where no edge joins `{w > 0}` and `{w < 0}`.
fn sign_coherent_pair(
    rng: &mut ChaCha8Rng,
    graph: &GasketGraph,
    range: f64,
) -> (VertexFunction, VertexFunction) {
    let u = VertexFunction::new(graph, random_values(rng, graph.vertex_count(), range))
        .expect("finite samples");
    let (p, q) = disjoint_pair(rng, graph, range).expect("level at least 1");
    let w = p.abs().sub(&q.abs()).unwrap();
    let v = u.sub(&w).unwrap();
    (u, v)
}

/// The lattice equality `W_m(u v v) + W_m(u ^ v) = W_m(u) + W_m(v)` on
/// unrestricted random pairs. At a fixed level the two sides differ by
/// `2 r_m sum (u-v)(x) (u-v)(y)` over edges where `u - v` changes sign, so
/// this fails for generic pairs; it is kept to measure that gap.
pub fn check_lattice_identity(cfg: &SampleConfig) -> Result<Report> {
    cfg.validate()?;
    let mut tally = Tally::default();
    for &n in &cfg.ns {
        for &m in &cfg.levels {
            let form = EnergyForm::new(Arc::new(build_level(n, m)?));
            let g = form.graph();
            let nv = g.vertex_count();
            let e = |w: &VertexFunction| form.energy(w).expect("same graph");
            tally = tally.merge(run_samples(
                cfg.seed,
                &format!("energy/{n}/{m}/identity"),
                cfg.sample_count,
                |rng, t| {
                    let u =
                        VertexFunction::new(g, random_values(rng, nv, cfg.value_range)).unwrap();
                    let v =
                        VertexFunction::new(g, random_values(rng, nv, cfg.value_range)).unwrap();
                    let lhs = e(&u.join(&v).unwrap()) + e(&u.meet(&v).unwrap());
                    t.record(two_sided_excess(lhs, e(&u) + e(&v)), RELATIVE_SLACK);
                },
            ));
        }
    }
    Ok(tally.into_report("lattice_identity", cfg.seed))
}

/// Level-m lattice inequalities for `W_m` on every `(N, m)` of the config:
/// submodularity on random pairs, equality on sign-coherent pairs, and the
/// contraction and domination inequalities.
pub fn check_energy_inequalities(cfg: &SampleConfig) -> Result<Vec<Report>> {
    cfg.validate()?;
    let r = cfg.value_range;
    let mut lattice = Tally::default();
    let mut coherent = Tally::default();
    let mut contraction = Tally::default();
    let mut domination = Tally::default();
    for &n in &cfg.ns {
        for &m in &cfg.levels {
            let form = EnergyForm::new(Arc::new(build_level(n, m)?));
            let g = form.graph();
            let nv = g.vertex_count();
            let key = format!("energy/{n}/{m}");
            let pair = |rng: &mut rand_chacha::ChaCha8Rng| {
                let u = VertexFunction::new(g, random_values(rng, nv, r)).expect("finite samples");
                let v = VertexFunction::new(g, random_values(rng, nv, r)).expect("finite samples");
                (u, v)
            };
            let e = |w: &VertexFunction| form.energy(w).expect("same graph");

            lattice = lattice.merge(run_samples(
                cfg.seed,
                &format!("{key}/lattice"),
                cfg.sample_count,
                |rng, t| {
                    let (u, v) = pair(rng);
                    let lhs = e(&u.join(&v).unwrap()) + e(&u.meet(&v).unwrap());
                    t.record(relative_excess(lhs, e(&u) + e(&v)), RELATIVE_SLACK);
                },
            ));
            coherent = coherent.merge(run_samples(
                cfg.seed,
                &format!("{key}/coherent"),
                cfg.sample_count,
                |rng, t| {
                    let (u, v) = sign_coherent_pair(rng, g, r);
                    let lhs = e(&u.join(&v).unwrap()) + e(&u.meet(&v).unwrap());
                    t.record(two_sided_excess(lhs, e(&u) + e(&v)), RELATIVE_SLACK);
                },
            ));
            contraction = contraction.merge(run_samples(
                cfg.seed,
                &format!("{key}/contraction"),
                cfg.sample_count,
                |rng, t| {
                    let (u, v) = pair(rng);
                    let alpha = rng.random_range(0.0..r).max(f64::MIN_POSITIVE);
                    let (a, b) = contraction_truncation(&u, &v, alpha).unwrap();
                    t.record(
                        relative_excess(e(&a) + e(&b), e(&u) + e(&v)),
                        RELATIVE_SLACK,
                    );
                },
            ));
            domination = domination.merge(run_samples(
                cfg.seed,
                &format!("{key}/domination"),
                cfg.sample_count,
                |rng, t| {
                    let (u, v) = pair(rng);
                    let v = v.abs();
                    let (c, d) = domination_truncation(&u, &v).unwrap();
                    t.record(
                        relative_excess(e(&c) + e(&d), e(&u) + e(&v)),
                        RELATIVE_SLACK,
                    );
                },
            ));
        }
    }
    Ok(vec![
        lattice.into_report("lattice_submodularity", cfg.seed),
        coherent.into_report("lattice_identity_sign_coherent", cfg.seed),
        contraction.into_report("energy_contraction", cfg.seed),
        domination.into_report("energy_domination", cfg.seed),
    ])
}
