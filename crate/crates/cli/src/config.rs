//! Run configuration files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gasketflow::{
    harmonic_function, vertex_measure, EnergyForm, FlowConfig, GasketGraph, MeasureWeights,
    RobinSpec, VertexFunction, VertexMeasure,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Initial data or right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// Harmonic function with the given corner values.
    Harmonic { boundary: Vec<f64> },
    /// Explicit values in canonical vertex order.
    Values { data: Vec<f64> },
    /// Independent uniform values in `[-1, 1]` from ChaCha8 seeded with `seed`.
    Random { seed: u64 },
}

impl FunctionSpec {
    pub fn realize(&self, graph: &GasketGraph) -> Result<VertexFunction> {
        Ok(match self {
            FunctionSpec::Harmonic { boundary } => harmonic_function(graph, boundary)?,
            FunctionSpec::Values { data } => VertexFunction::new(graph, data.clone())?,
            FunctionSpec::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..graph.vertex_count())
                    .map(|_| rng.random_range(-1.0..=1.0))
                    .collect();
                VertexFunction::new(graph, values)?
            }
        })
    }

    pub fn with_seed(&self, seed: Option<u64>) -> Self {
        match (self, seed) {
            (FunctionSpec::Random { .. }, Some(seed)) => FunctionSpec::Random { seed },
            _ => self.clone(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            FunctionSpec::Random { seed } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    /// Self-similar measure weights; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<MeasureWeights>,
    pub spec: RobinSpec,
    pub tau: f64,
    pub t_end: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_inner_iters: Option<usize>,
    pub u0: FunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<MeasureWeights>,
    pub spec: RobinSpec,
    #[serde(default = "default_poisson_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    pub f: FunctionSpec,
}

fn default_poisson_tol() -> f64 {
    1e-12
}

/// Graph, energy and measure shared by the commands.
pub struct Setting {
    pub form: EnergyForm,
    pub measure: VertexMeasure,
}

impl Setting {
    pub fn new(
        n: usize,
        m: u32,
        weights: Option<&MeasureWeights>,
        spec: &RobinSpec,
    ) -> Result<Self> {
        if n < 2 {
            bail!("N must be at least 2, got {n}");
        }
        let graph = Arc::new(gasketflow::build_level(n, m)?);
        spec.check(&graph)?;
        let weights = weights
            .cloned()
            .unwrap_or_else(|| MeasureWeights::uniform(n));
        let measure = vertex_measure(&graph, &weights)?;
        Ok(Self {
            form: EnergyForm::new(graph),
            measure,
        })
    }

    pub fn graph(&self) -> &GasketGraph {
        self.form.graph()
    }
}

impl EvolveConfig {
    pub fn flow(&self) -> Result<FlowConfig> {
        let mut cfg = FlowConfig::new(self.tau, self.t_end, self.tol)?;
        if let Some(k) = self.max_inner_iters {
            cfg.max_inner_iters = k;
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

/// Reads a config, or the `config` member of a run manifest.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
    if let Some(inner) = value
        .get("config")
        .filter(|_| value.get("command").is_some())
    {
        return serde_json::from_value(inner.clone())
            .with_context(|| format!("{}: invalid config in manifest", path.display()));
    }
    serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
}
