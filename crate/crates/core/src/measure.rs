//! Self-similar vertex measures and the discrete `L^2_mu` pairing.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gasket::{GasketGraph, GraphTag, VertexFunction};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Tolerance on `sum mu_i = 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Self-similar weights `(mu_1, ..., mu_N)`: cell `F_w(V)` has mass `prod_k mu_{w_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MeasureWeights(Vec<f64>);

impl MeasureWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return domain("measure weights need at least two entries");
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return domain("measure weights must be positive and finite");
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return domain(format!("measure weights sum to {total}, expected 1"));
        }
        Ok(Self(weights))
    }

    /// `mu_i = 1/N`, the normalized Hausdorff measure.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for MeasureWeights {
    type Error = crate::error::GasketError;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<MeasureWeights> for Vec<f64> {
    fn from(value: MeasureWeights) -> Self {
        value.0
    }
}

/// Positive vertex masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMeasure {
    tag: GraphTag,
    masses: Vec<f64>,
}

/// Each m-cell's mass is split equally among its `N` corners; a vertex
/// collects the shares of its incident cells.
pub fn vertex_measure(graph: &GasketGraph, weights: &MeasureWeights) -> Result<VertexMeasure> {
    let n = graph.n();
    if weights.n() != n {
        return domain(format!("{} measure weights for N = {n}", weights.n()));
    }
    let mu = weights.as_slice();
    // cell masses in word order, built level by level
    let mut cell_mass = vec![1.0];
    for _ in 0..graph.level() {
        cell_mass = cell_mass
            .iter()
            .flat_map(|&parent| mu.iter().map(move |&w| parent * w))
            .collect();
    }
    let mut acc = vec![CompensatedSum::new(); graph.vertex_count()];
    for (cell, &mass) in graph.cells().zip(&cell_mass) {
        let share = mass / n as f64;
        for &v in cell {
            acc[v].add(share);
        }
    }
    let masses: Vec<f64> = acc.iter().map(CompensatedSum::value).collect();
    let total = compensated_sum(masses.iter().copied());
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return domain(format!("vertex masses sum to {total}"));
    }
    Ok(VertexMeasure {
        tag: graph.tag(),
        masses,
    })
}

impl VertexMeasure {
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tag(&self) -> GraphTag {
        self.tag
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    fn check(&self, u: &VertexFunction) -> Result<()> {
        if u.tag() != self.tag {
            return domain("function and measure live on different graphs");
        }
        Ok(())
    }

    pub fn l2_inner(&self, u: &VertexFunction, v: &VertexFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.weighted_dot(u.values(), v.values()))
    }

    pub fn l2_norm(&self, u: &VertexFunction) -> Result<f64> {
        Ok(self.l2_inner(u, u)?.sqrt())
    }

    pub fn l2_distance(&self, u: &VertexFunction, v: &VertexFunction) -> Result<f64> {
        self.l2_norm(&u.sub(v)?)
    }

    /// `<u, 1>_mu`.
    pub fn mean(&self, u: &VertexFunction) -> Result<f64> {
        self.check(u)?;
        Ok(compensated_sum(
            self.masses.iter().zip(u.values()).map(|(m, x)| m * x),
        ))
    }

    pub(crate) fn weighted_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        compensated_sum(
            self.masses
                .iter()
                .zip(x.iter().zip(y))
                .map(|(m, (a, b))| m * a * b),
        )
    }
}
