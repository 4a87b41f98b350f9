//! Boundary functionals `B_i : R -> [0, inf]` and the perturbed energy
//! `W_B(u) = W_m(u) + sum_i B_i(u(p_i))`.
//!
//! Values live in the extended half-line; `f64::INFINITY` stands for `+inf`
//! and propagates through sums. Differences of extended values follow the
//! convention `inf - inf = inf` (see [`extended_difference`]).

use serde::{Deserialize, Serialize};

use crate::energy::EnergyForm;
use crate::error::{domain, GasketError, Result};
use crate::gasket::{GasketGraph, VertexFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionalRepr", into = "FunctionalRepr")]
pub enum BoundaryFunctional {
    /// `B = 0`: Neumann condition.
    Zero,
    /// `B(0) = 0`, `B(s) = inf` otherwise: Dirichlet condition.
    DirichletIndicator,
    /// `beta s^2 / 2`.
    Quadratic { beta: f64 },
    /// `beta |s|`.
    AbsoluteValue { beta: f64 },
    /// `beta |s|^p / p`, `p >= 1`.
    Power { beta: f64, p: f64 },
    /// Indicator of `[lower, upper]` with `lower <= 0 <= upper`; bounds may be infinite.
    BoxIndicator { lower: f64, upper: f64 },
    /// Continuous piecewise-linear interpolant of sorted `(s, B(s))` knots
    /// that include `(0, 0)`; the outermost segments extend to infinity.
    /// Convex only when the slopes are nondecreasing.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

/// Closed interval `[lo, hi]` in the extended reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn distance(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return domain(format!("{name} must be positive and finite, got {x}"));
    }
    Ok(())
}

impl BoundaryFunctional {
    pub fn quadratic(beta: f64) -> Result<Self> {
        positive("beta", beta)?;
        Ok(Self::Quadratic { beta })
    }

    pub fn absolute_value(beta: f64) -> Result<Self> {
        positive("beta", beta)?;
        Ok(Self::AbsoluteValue { beta })
    }

    pub fn power(beta: f64, p: f64) -> Result<Self> {
        positive("beta", beta)?;
        if !(p.is_finite() && p >= 1.0) {
            return domain(format!("power exponent must be >= 1, got {p}"));
        }
        Ok(Self::Power { beta, p })
    }

    pub fn box_indicator(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > 0.0 || upper < 0.0 {
            return domain(format!("box [{lower}, {upper}] must contain 0"));
        }
        Ok(Self::BoxIndicator { lower, upper })
    }

    /// Builds a piecewise-linear functional from knots `(s, B(s))`; the knot
    /// `(0, 0)` is added if absent. Rejects knots that break normalization or
    /// bi-monotonicity.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let mut knots = knots;
        if knots
            .iter()
            .any(|&(s, b)| !s.is_finite() || !b.is_finite() || b < 0.0)
        {
            return domain("piecewise-linear knots must be finite with nonnegative values");
        }
        match knots.iter().find(|k| k.0 == 0.0) {
            Some(&(_, b)) if b != 0.0 => {
                return domain("piecewise-linear functional must vanish at 0")
            }
            Some(_) => {}
            None => knots.push((0.0, 0.0)),
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return domain("piecewise-linear knots must have distinct abscissae");
        }
        for w in knots.windows(2) {
            let ((s0, b0), (s1, b1)) = (w[0], w[1]);
            if (s1 <= 0.0 && b1 > b0) || (s0 >= 0.0 && b1 < b0) {
                return domain(
                    "piecewise-linear functional must decrease on R- and increase on R+",
                );
            }
        }
        Ok(Self::PiecewiseLinear { knots })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero | Self::DirichletIndicator => Ok(()),
            Self::Quadratic { beta } | Self::AbsoluteValue { beta } => positive("beta", *beta),
            Self::Power { beta, p } => Self::power(*beta, *p).map(|_| ()),
            Self::BoxIndicator { lower, upper } => Self::box_indicator(*lower, *upper).map(|_| ()),
            Self::PiecewiseLinear { knots } => Self::piecewise_linear(knots.clone()).map(|_| ()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::DirichletIndicator => "dirichlet",
            Self::Quadratic { .. } => "quadratic",
            Self::AbsoluteValue { .. } => "absolute_value",
            Self::Power { .. } => "power",
            Self::BoxIndicator { .. } => "box",
            Self::PiecewiseLinear { .. } => "piecewise_linear",
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::DirichletIndicator => {
                if s == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Quadratic { beta } => 0.5 * beta * s * s,
            Self::AbsoluteValue { beta } => beta * s.abs(),
            Self::Power { beta, p } => beta * s.abs().powf(p) / p,
            Self::BoxIndicator { lower, upper } => {
                if lower <= s && s <= upper {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::PiecewiseLinear { ref knots } => piecewise_eval(knots, s),
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Self::PiecewiseLinear { knots } => {
                let slopes = piecewise_slopes(knots);
                slopes.windows(2).all(|w| w[0] <= w[1])
            }
            _ => true,
        }
    }

    /// Unique minimizer of `B(t) + (t - s)^2 / (2 lambda)`.
    pub fn prox(&self, lambda: f64, s: f64) -> Result<f64> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return domain(format!(
                "prox step must be positive and finite, got {lambda}"
            ));
        }
        if !s.is_finite() {
            return domain("prox argument must be finite");
        }
        if !self.is_convex() {
            return Err(GasketError::Unsupported(format!(
                "prox of nonconvex {} functional",
                self.name()
            )));
        }
        Ok(match *self {
            Self::Zero => s,
            Self::DirichletIndicator => 0.0,
            Self::Quadratic { beta } => s / (1.0 + lambda * beta),
            Self::AbsoluteValue { beta } => soft_threshold(s, lambda * beta),
            Self::Power { beta, p } => power_prox(beta * lambda, p, s),
            Self::BoxIndicator { lower, upper } => s.clamp(lower, upper),
            Self::PiecewiseLinear { ref knots } => piecewise_prox(knots, lambda, s),
        })
    }

    /// Convex subdifferential at `s`; `None` outside the effective domain.
    /// Meaningful for convex kinds only.
    pub fn subdifferential(&self, s: f64) -> Option<Interval> {
        let everything = Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        };
        match *self {
            Self::Zero => Some(Interval::point(0.0)),
            Self::DirichletIndicator => (s == 0.0).then_some(everything),
            Self::Quadratic { beta } => Some(Interval::point(beta * s)),
            Self::AbsoluteValue { beta } => Some(abs_subdifferential(beta, s)),
            Self::Power { beta, p } => {
                if p == 1.0 {
                    Some(abs_subdifferential(beta, s))
                } else {
                    Some(Interval::point(beta * s.abs().powf(p - 1.0) * s.signum()))
                }
            }
            Self::BoxIndicator { lower, upper } => {
                if s < lower || s > upper {
                    None
                } else {
                    Some(Interval {
                        lo: if s == lower { f64::NEG_INFINITY } else { 0.0 },
                        hi: if s == upper { f64::INFINITY } else { 0.0 },
                    })
                }
            }
            Self::PiecewiseLinear { ref knots } => {
                let slopes = piecewise_slopes(knots);
                let k = knots.partition_point(|kn| kn.0 < s);
                if k < knots.len() && knots[k].0 == s {
                    Some(Interval {
                        lo: slopes[k],
                        hi: slopes[k + 1],
                    })
                } else {
                    Some(Interval::point(slopes[k]))
                }
            }
        }
    }

    /// Asymptotic slope `lim B(t d) / t` as `t -> inf`, for `d = +1` or `-1`.
    pub fn recession_slope(&self, positive_direction: bool) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::DirichletIndicator | Self::Quadratic { .. } => f64::INFINITY,
            Self::AbsoluteValue { beta } => beta,
            Self::Power { beta, p } => {
                if p == 1.0 {
                    beta
                } else {
                    f64::INFINITY
                }
            }
            Self::BoxIndicator { lower, upper } => {
                let bound = if positive_direction { upper } else { lower };
                if bound.is_finite() {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Self::PiecewiseLinear { ref knots } => {
                let slopes = piecewise_slopes(knots);
                if positive_direction {
                    slopes[slopes.len() - 1]
                } else {
                    -slopes[0]
                }
            }
        }
    }
}

pub fn soft_threshold(s: f64, threshold: f64) -> f64 {
    if s > threshold {
        s - threshold
    } else if s < -threshold {
        s + threshold
    } else {
        0.0
    }
}

fn abs_subdifferential(beta: f64, s: f64) -> Interval {
    if s > 0.0 {
        Interval::point(beta)
    } else if s < 0.0 {
        Interval::point(-beta)
    } else {
        Interval {
            lo: -beta,
            hi: beta,
        }
    }
}

/// Solves `t + c t^(p-1) = |s|` on `[0, |s|]` and restores the sign.
fn power_prox(c: f64, p: f64, s: f64) -> f64 {
    if p == 1.0 {
        return soft_threshold(s, c);
    }
    if p == 2.0 {
        return s / (1.0 + c);
    }
    let target = s.abs();
    if target == 0.0 {
        return 0.0;
    }
    let residual = |t: f64| t + c * t.powf(p - 1.0) - target;
    let (mut lo, mut hi) = (0.0, target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = if residual(hi).abs() < residual(lo).abs() {
        hi
    } else {
        lo
    };
    t.copysign(s)
}

/// Slopes of every segment, including the two unbounded ones. A side
/// without knots beyond 0 is flat.
fn piecewise_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    let inner: Vec<f64> = knots
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let first = inner
        .first()
        .copied()
        .filter(|_| knots[0].0 < 0.0)
        .unwrap_or(0.0);
    let last = inner
        .last()
        .copied()
        .filter(|_| knots[knots.len() - 1].0 > 0.0)
        .unwrap_or(0.0);
    let mut slopes = Vec::with_capacity(inner.len() + 2);
    slopes.push(first);
    slopes.extend(inner);
    slopes.push(last);
    slopes
}

fn piecewise_eval(knots: &[(f64, f64)], s: f64) -> f64 {
    let slopes = piecewise_slopes(knots);
    let k = knots.partition_point(|kn| kn.0 <= s);
    if k == 0 {
        knots[0].1 + slopes[0] * (s - knots[0].0)
    } else {
        let (s0, b0) = knots[k - 1];
        b0 + slopes[k] * (s - s0)
    }
}

fn piecewise_prox(knots: &[(f64, f64)], lambda: f64, s: f64) -> f64 {
    let slopes = piecewise_slopes(knots);
    // the minimizer sits at a knot t_j when (s - t_j) / lambda lies in the subdifferential there
    for (j, &(t, _)) in knots.iter().enumerate() {
        let g = (s - t) / lambda;
        if slopes[j] <= g && g <= slopes[j + 1] {
            return t;
        }
    }
    // otherwise it is interior to segment k, where B' = slopes[k]
    for (k, &slope) in slopes.iter().enumerate() {
        let t = s - lambda * slope;
        let left = if k == 0 {
            f64::NEG_INFINITY
        } else {
            knots[k - 1].0
        };
        let right = if k == knots.len() {
            f64::INFINITY
        } else {
            knots[k].0
        };
        if left < t && t < right {
            return t;
        }
    }
    unreachable!("a convex piecewise-linear prox always has a minimizer")
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FunctionalRepr {
    Name(String),
    Tagged(TaggedFunctional),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TaggedFunctional {
    #[serde(alias = "neumann")]
    Zero,
    #[serde(alias = "dirichlet_indicator")]
    Dirichlet,
    Quadratic {
        beta: f64,
    },
    #[serde(alias = "abs", alias = "absolute")]
    AbsoluteValue {
        beta: f64,
    },
    Power {
        beta: f64,
        p: f64,
    },
    #[serde(alias = "box_indicator")]
    Box {
        lower: f64,
        upper: f64,
    },
    #[serde(alias = "piecewise")]
    PiecewiseLinear {
        breakpoints: Vec<[f64; 2]>,
    },
}

impl TryFrom<FunctionalRepr> for BoundaryFunctional {
    type Error = GasketError;

    fn try_from(repr: FunctionalRepr) -> Result<Self> {
        match repr {
            FunctionalRepr::Name(name) => match name.as_str() {
                "neumann" | "zero" => Ok(Self::Zero),
                "dirichlet" => Ok(Self::DirichletIndicator),
                other => domain(format!("unknown boundary functional \"{other}\"")),
            },
            FunctionalRepr::Tagged(t) => match t {
                TaggedFunctional::Zero => Ok(Self::Zero),
                TaggedFunctional::Dirichlet => Ok(Self::DirichletIndicator),
                TaggedFunctional::Quadratic { beta } => Self::quadratic(beta),
                TaggedFunctional::AbsoluteValue { beta } => Self::absolute_value(beta),
                TaggedFunctional::Power { beta, p } => Self::power(beta, p),
                TaggedFunctional::Box { lower, upper } => Self::box_indicator(lower, upper),
                TaggedFunctional::PiecewiseLinear { breakpoints } => {
                    Self::piecewise_linear(breakpoints.into_iter().map(|[s, b]| (s, b)).collect())
                }
            },
        }
    }
}

impl From<BoundaryFunctional> for FunctionalRepr {
    fn from(b: BoundaryFunctional) -> Self {
        FunctionalRepr::Tagged(match b {
            BoundaryFunctional::Zero => TaggedFunctional::Zero,
            BoundaryFunctional::DirichletIndicator => TaggedFunctional::Dirichlet,
            BoundaryFunctional::Quadratic { beta } => TaggedFunctional::Quadratic { beta },
            BoundaryFunctional::AbsoluteValue { beta } => TaggedFunctional::AbsoluteValue { beta },
            BoundaryFunctional::Power { beta, p } => TaggedFunctional::Power { beta, p },
            BoundaryFunctional::BoxIndicator { lower, upper } => {
                TaggedFunctional::Box { lower, upper }
            }
            BoundaryFunctional::PiecewiseLinear { knots } => TaggedFunctional::PiecewiseLinear {
                breakpoints: knots.into_iter().map(|(s, b)| [s, b]).collect(),
            },
        })
    }
}

/// One boundary functional per corner `p_1, ..., p_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobinSpec {
    functionals: Vec<BoundaryFunctional>,
}

impl RobinSpec {
    pub fn new(functionals: Vec<BoundaryFunctional>) -> Result<Self> {
        if functionals.len() < 2 {
            return domain("a Robin spec needs one functional per corner (N >= 2)");
        }
        for b in &functionals {
            b.validate()?;
        }
        Ok(Self { functionals })
    }

    pub fn uniform(n: usize, b: BoundaryFunctional) -> Self {
        Self {
            functionals: vec![b; n],
        }
    }

    /// All `B_i = 0`.
    pub fn neumann(n: usize) -> Self {
        Self::uniform(n, BoundaryFunctional::Zero)
    }

    /// All `B_i` the indicator of `{0}`.
    pub fn dirichlet(n: usize) -> Self {
        Self::uniform(n, BoundaryFunctional::DirichletIndicator)
    }

    pub fn n(&self) -> usize {
        self.functionals.len()
    }

    pub fn functionals(&self) -> &[BoundaryFunctional] {
        &self.functionals
    }

    pub fn get(&self, i: usize) -> &BoundaryFunctional {
        &self.functionals[i]
    }

    pub fn is_convex(&self) -> bool {
        self.functionals.iter().all(BoundaryFunctional::is_convex)
    }

    pub fn is_neumann(&self) -> bool {
        self.functionals
            .iter()
            .all(|b| *b == BoundaryFunctional::Zero)
    }

    pub fn check(&self, graph: &GasketGraph) -> Result<()> {
        if self.n() != graph.n() {
            return domain(format!(
                "spec has {} functionals, graph has N = {}",
                self.n(),
                graph.n()
            ));
        }
        Ok(())
    }

    pub fn require_convex(&self) -> Result<()> {
        match self.functionals.iter().find(|b| !b.is_convex()) {
            Some(b) => Err(GasketError::Unsupported(format!(
                "the flow needs convex boundary functionals, {} is not",
                b.name()
            ))),
            None => Ok(()),
        }
    }

    /// `sum_i B_i(u(p_i))`.
    pub fn boundary_penalty(&self, graph: &GasketGraph, u: &VertexFunction) -> Result<f64> {
        self.check(graph)?;
        u.check(graph)?;
        Ok(self.penalty_of(graph, u.values()))
    }

    pub(crate) fn penalty_of(&self, graph: &GasketGraph, x: &[f64]) -> f64 {
        self.functionals
            .iter()
            .zip(graph.boundary())
            .map(|(b, &v)| b.eval(x[v]))
            .sum()
    }
}

/// `W_B(u) = W_m(u) + sum_i B_i(u(p_i))`, possibly infinite.
pub fn eval_wb(form: &EnergyForm, spec: &RobinSpec, u: &VertexFunction) -> Result<f64> {
    let penalty = spec.boundary_penalty(form.graph(), u)?;
    if penalty == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(form.energy(u)? + penalty)
}

/// `a - b` in `[0, inf]` arithmetic with `inf - inf = inf`.
pub fn extended_difference(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY {
        f64::INFINITY
    } else if b == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        a - b
    }
}

/// Relative slack allowed by the sampled bi-monotonicity checks.
const MONOTONE_SLACK: f64 = 1e-12;

/// Sampled check that `f` decreases on `R-` and increases on `R+`. `grid`
/// must be sorted; 0 is treated as belonging to both halves.
pub fn is_bimonotone_on(f: impl Fn(f64) -> f64, grid: &[f64]) -> bool {
    let values: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    if values.iter().any(|v| v.is_nan()) {
        return false;
    }
    let le = |a: f64, b: f64| {
        a <= b
            || (a.is_finite()
                && b.is_finite()
                && a - b <= MONOTONE_SLACK * (1.0 + a.abs().max(b.abs())))
    };
    grid.windows(2).zip(values.windows(2)).all(|(s, v)| {
        if s[1] <= 0.0 {
            le(v[1], v[0])
        } else if s[0] >= 0.0 {
            le(v[0], v[1])
        } else {
            true
        }
    }) && {
        // straddling pairs: compare each side against the value at 0 when it is on the grid
        match grid.iter().position(|&s| s == 0.0) {
            Some(z) => values.iter().all(|&v| le(values[z], v)),
            None => true,
        }
    }
}

/// Symmetric sampling grid on `[-radius, radius]` containing 0, with extra
/// resolution near the origin.
pub fn bimonotone_grid(radius: f64, points: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=points)
        .map(|k| -radius + 2.0 * radius * k as f64 / points as f64)
        .collect();
    for k in 1..=40 {
        let t = radius * (-(k as f64) / 2.0).exp2();
        grid.push(t);
        grid.push(-t);
    }
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

pub fn functional_is_bimonotone(b: &BoundaryFunctional, grid: &[f64]) -> bool {
    b.eval(0.0) == 0.0 && is_bimonotone_on(|s| b.eval(s), grid)
}

/// Sampled check that `s -> b_hat(s) - b(|s|)` is bi-monotone, the
/// hypothesis under which the `b_hat` flow is dominated by the `b` flow.
pub fn domination_condition(
    b_hat: &BoundaryFunctional,
    b: &BoundaryFunctional,
    grid: &[f64],
) -> bool {
    is_bimonotone_on(
        |s| extended_difference(b_hat.eval(s), b.eval(s.abs())),
        grid,
    )
}

/// Additionally requires `s -> b_hat(s) - b(-|s|)` bi-monotone (total domination).
pub fn total_domination_condition(
    b_hat: &BoundaryFunctional,
    b: &BoundaryFunctional,
    grid: &[f64],
) -> bool {
    domination_condition(b_hat, b, grid)
        && is_bimonotone_on(
            |s| extended_difference(b_hat.eval(s), b.eval(-s.abs())),
            grid,
        )
}

pub fn spec_domination_condition(b_hat: &RobinSpec, b: &RobinSpec, grid: &[f64]) -> bool {
    b_hat.n() == b.n()
        && b_hat
            .functionals()
            .iter()
            .zip(b.functionals())
            .all(|(h, g)| domination_condition(h, g, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::build_level;
    use std::sync::Arc;

    fn builtin() -> Vec<BoundaryFunctional> {
        vec![
            BoundaryFunctional::Zero,
            BoundaryFunctional::DirichletIndicator,
            BoundaryFunctional::quadratic(2.0).unwrap(),
            BoundaryFunctional::absolute_value(0.7).unwrap(),
            BoundaryFunctional::power(1.5, 1.5).unwrap(),
            BoundaryFunctional::power(0.5, 3.0).unwrap(),
            BoundaryFunctional::box_indicator(-0.5, 2.0).unwrap(),
            BoundaryFunctional::piecewise_linear(vec![(-1.0, 2.0), (0.5, 0.25), (2.0, 2.0)])
                .unwrap(),
        ]
    }

    /// Golden-section minimization of `B(t) + (t - s)^2 / (2 lambda)` on a bracket.
    fn prox_by_search(b: &BoundaryFunctional, lambda: f64, s: f64) -> f64 {
        let obj = |t: f64| b.eval(t) + (t - s).powi(2) / (2.0 * lambda);
        let (mut lo, mut hi) = (-20.0f64, 20.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let a = hi - phi * (hi - lo);
            let c = lo + phi * (hi - lo);
            if obj(a) <= obj(c) {
                hi = c;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(BoundaryFunctional::Zero.eval(-3.0), 0.0);
        assert_eq!(BoundaryFunctional::DirichletIndicator.eval(0.0), 0.0);
        assert_eq!(
            BoundaryFunctional::DirichletIndicator.eval(1.0),
            f64::INFINITY
        );
        assert_eq!(BoundaryFunctional::quadratic(2.0).unwrap().eval(3.0), 9.0);
        let bx = BoundaryFunctional::box_indicator(-1.0, 2.0).unwrap();
        assert_eq!(bx.eval(2.0), 0.0);
        assert_eq!(bx.eval(2.5), f64::INFINITY);
        let pl = BoundaryFunctional::piecewise_linear(vec![(-1.0, 2.0), (1.0, 1.0)]).unwrap();
        assert_eq!(pl.eval(-2.0), 4.0);
        assert_eq!(pl.eval(0.5), 0.5);
        assert_eq!(pl.eval(3.0), 3.0);
    }

    #[test]
    fn prox_examples() {
        assert_eq!(BoundaryFunctional::Zero.prox(0.3, 1.7).unwrap(), 1.7);
        assert_eq!(
            BoundaryFunctional::DirichletIndicator
                .prox(2.0, 5.0)
                .unwrap(),
            0.0
        );
        assert_eq!(
            BoundaryFunctional::quadratic(1.0)
                .unwrap()
                .prox(1.0, 4.0)
                .unwrap(),
            2.0
        );
        assert_eq!(
            BoundaryFunctional::absolute_value(1.0)
                .unwrap()
                .prox(0.5, 2.0)
                .unwrap(),
            1.5
        );
        assert_eq!(
            BoundaryFunctional::box_indicator(-1.0, 1.0)
                .unwrap()
                .prox(3.0, -4.0)
                .unwrap(),
            -1.0
        );
    }

    #[test]
    fn prox_matches_direct_minimization() {
        for b in builtin() {
            if matches!(
                b,
                BoundaryFunctional::DirichletIndicator | BoundaryFunctional::BoxIndicator { .. }
            ) {
                continue;
            }
            for &lambda in &[0.1, 1.0, 3.0] {
                for k in -20..=20 {
                    let s = k as f64 * 0.37;
                    let got = b.prox(lambda, s).unwrap();
                    let want = prox_by_search(&b, lambda, s);
                    // a comparison-based search only locates a minimum to about sqrt(eps)
                    assert!(
                        (got - want).abs() < 1e-6,
                        "{b:?} lambda={lambda} s={s}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn prox_is_nonexpansive() {
        for b in builtin() {
            for k in -30..30 {
                let (s, t) = (k as f64 * 0.21, k as f64 * 0.21 + 0.13);
                let (ps, pt) = (b.prox(0.8, s).unwrap(), b.prox(0.8, t).unwrap());
                assert!((ps - pt).abs() <= (s - t).abs() + 1e-15);
            }
        }
    }

    #[test]
    fn prox_satisfies_inclusion() {
        // (s - t) / lambda must lie in the subdifferential at t = prox(s)
        for b in builtin() {
            for k in -15..=15 {
                let s = k as f64 * 0.29;
                let t = b.prox(0.6, s).unwrap();
                let sub = b.subdifferential(t).expect("prox lands in the domain");
                assert!(sub.distance((s - t) / 0.6) < 1e-9, "{b:?} s={s}");
            }
        }
    }

    #[test]
    fn nonconvex_prox_is_unsupported() {
        let b = BoundaryFunctional::piecewise_linear(vec![(1.0, 2.0), (2.0, 2.5)]).unwrap();
        assert!(!b.is_convex());
        assert!(matches!(b.prox(1.0, 1.0), Err(GasketError::Unsupported(_))));
        assert!(RobinSpec::uniform(3, b).require_convex().is_err());
    }

    #[test]
    fn builtins_are_normalised_and_bimonotone() {
        let grid = bimonotone_grid(5.0, 400);
        for b in builtin() {
            assert!(functional_is_bimonotone(&b, &grid), "{b:?}");
        }
        assert!(BoundaryFunctional::piecewise_linear(vec![(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(BoundaryFunctional::piecewise_linear(vec![(0.0, 1.0)]).is_err());
        assert!(BoundaryFunctional::box_indicator(0.5, 1.0).is_err());
        assert!(BoundaryFunctional::power(1.0, 0.5).is_err());
        assert!(BoundaryFunctional::quadratic(0.0).is_err());
    }

    #[test]
    fn domination_conditions() {
        let grid = bimonotone_grid(5.0, 200);
        let q1 = BoundaryFunctional::quadratic(1.0).unwrap();
        let q2 = BoundaryFunctional::quadratic(2.0).unwrap();
        let zero = BoundaryFunctional::Zero;
        let dir = BoundaryFunctional::DirichletIndicator;
        assert!(domination_condition(&q2, &q1, &grid));
        assert!(!domination_condition(&q1, &q2, &grid));
        assert!(domination_condition(&q1, &zero, &grid));
        assert!(domination_condition(&dir, &q1, &grid));
        assert!(domination_condition(&dir, &dir, &grid));
        assert!(!domination_condition(&zero, &dir, &grid));
        assert!(total_domination_condition(&q2, &q1, &grid));
    }

    #[test]
    fn spec_json() {
        let spec: RobinSpec =
            serde_json::from_str(r#"[{"kind":"quadratic","beta":2.0}, "dirichlet", "neumann"]"#)
                .unwrap();
        assert_eq!(
            spec.functionals(),
            &[
                BoundaryFunctional::Quadratic { beta: 2.0 },
                BoundaryFunctional::DirichletIndicator,
                BoundaryFunctional::Zero
            ]
        );
        let back: RobinSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<RobinSpec>(r#"["robin"]"#).is_err());
        assert!(serde_json::from_str::<RobinSpec>(r#"[{"kind":"quadratic","beta":-1}]"#).is_err());
        let pl: BoundaryFunctional =
            serde_json::from_str(r#"{"kind":"piecewise_linear","breakpoints":[[-1,1],[1,2]]}"#)
                .unwrap();
        assert_eq!(pl.eval(1.0), 2.0);
    }

    #[test]
    fn perturbed_energy_examples() {
        let g = Arc::new(build_level(3, 2).unwrap());
        let form = EnergyForm::new(Arc::clone(&g));
        let u = VertexFunction::from_fn(&g, |i, _| (i as f64 * 0.4).sin());
        let w = form.energy(&u).unwrap();
        assert_eq!(eval_wb(&form, &RobinSpec::neumann(3), &u).unwrap(), w);

        let mut u0 = u.clone();
        for &b in g.boundary() {
            u0.values_mut()[b] = 0.0;
        }
        let w0 = form.energy(&u0).unwrap();
        assert_eq!(eval_wb(&form, &RobinSpec::dirichlet(3), &u0).unwrap(), w0);
        let one = VertexFunction::constant(&g, 1.0);
        assert_eq!(
            eval_wb(&form, &RobinSpec::dirichlet(3), &one).unwrap(),
            f64::INFINITY
        );

        let q = RobinSpec::uniform(3, BoundaryFunctional::quadratic(1.0).unwrap());
        let wq = eval_wb(&form, &q, &u).unwrap();
        assert!(w <= wq && wq <= eval_wb(&form, &RobinSpec::dirichlet(3), &u).unwrap());
        assert!(eval_wb(&form, &RobinSpec::neumann(4), &u).is_err());
    }

    #[test]
    fn extended_arithmetic() {
        assert_eq!(
            extended_difference(f64::INFINITY, f64::INFINITY),
            f64::INFINITY
        );
        assert_eq!(extended_difference(1.0, f64::INFINITY), f64::NEG_INFINITY);
        assert_eq!(extended_difference(3.0, 1.0), 2.0);
    }
}
