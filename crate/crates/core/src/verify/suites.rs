//! The named suites run by `gasketflow verify`, with their default sizes.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functional::{builtin_convex_specs, check_locality, check_wb_criteria, NamedSpec};
use super::inequalities::{check_energy_inequalities, check_scalar_inequalities};
use super::trajectories::{check_flow_properties, FlowSuiteConfig};
use super::{Report, SampleConfig};
use crate::energy::EnergyForm;
use crate::error::{GasketError, Result};
use crate::flow::FlowConfig;
use crate::gasket::build_level;
use crate::robin::{BoundaryFunctional, RobinSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Scalar,
    Energy,
    Wb,
    Locality,
    Flow,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Scalar,
        Suite::Energy,
        Suite::Wb,
        Suite::Locality,
        Suite::Flow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Scalar => "scalar",
            Suite::Energy => "energy",
            Suite::Wb => "wb",
            Suite::Locality => "locality",
            Suite::Flow => "flow",
        }
    }
}

impl FromStr for Suite {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| GasketError::Domain(format!("unknown suite {s:?}")))
    }
}

/// Overrides for a suite run; `None` keeps the default.
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub samples: Option<usize>,
    /// Solver tolerance of the flow suite.
    pub tol: Option<f64>,
}

fn prefixed(mut reports: Vec<Report>, prefix: &str) -> Vec<Report> {
    for r in &mut reports {
        r.property = format!("{prefix}/{}", r.property);
    }
    reports
}

/// Bi-monotone, normalised, not convex: admitted by the inequality checks only.
fn nonconvex_spec(n: usize) -> NamedSpec {
    let b =
        BoundaryFunctional::piecewise_linear(vec![(-1.0, 2.0), (0.0, 0.0), (1.0, 1.0), (3.0, 1.5)])
            .expect("valid knots");
    NamedSpec::new("nonconvex", RobinSpec::uniform(n, b))
}

pub fn run_suite(suite: Suite, seed: u64, opts: &SuiteOptions) -> Result<Vec<Report>> {
    match suite {
        Suite::Scalar => {
            check_scalar_inequalities(&SampleConfig::new(seed, opts.samples.unwrap_or(100_000)))
        }
        Suite::Energy => {
            let cfg = SampleConfig::new(seed, opts.samples.unwrap_or(1_000));
            check_energy_inequalities(&cfg)
        }
        Suite::Wb => {
            let form = EnergyForm::new(Arc::new(build_level(3, 2)?));
            let cfg = SampleConfig::new(seed, opts.samples.unwrap_or(1_000));
            let dirichlet = RobinSpec::dirichlet(3);
            let mut out = Vec::new();
            for named in builtin_convex_specs(3)
                .into_iter()
                .chain([nonconvex_spec(3)])
            {
                let reports = check_wb_criteria(&form, &named.spec, &dirichlet, &cfg)?;
                out.extend(prefixed(reports, &named.name));
            }
            Ok(out)
        }
        Suite::Locality => {
            let form = EnergyForm::new(Arc::new(build_level(3, 3)?));
            let cfg = SampleConfig::new(seed, opts.samples.unwrap_or(100));
            let mut out = Vec::new();
            for named in builtin_convex_specs(3)
                .into_iter()
                .chain([nonconvex_spec(3)])
            {
                out.extend(prefixed(
                    vec![check_locality(&form, &named.spec, &cfg)?],
                    &named.name,
                ));
            }
            Ok(out)
        }
        Suite::Flow => {
            let flow = FlowConfig::new(0.05, 1.0, opts.tol.unwrap_or(1e-9))?;
            let cfg = FlowSuiteConfig::new(seed, opts.samples.unwrap_or(20), 3, 3, flow);
            check_flow_properties(&cfg, &builtin_convex_specs(3))
        }
    }
}
