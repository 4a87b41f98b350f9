//! Sampled checks of the order, contraction and domination inequalities
//! behind the qualitative properties of the flow.
//!
//! Every check draws sample `k` from its own ChaCha8 stream keyed by
//! `(seed, property, k)`, so reports do not depend on thread scheduling.

mod functional;
mod inequalities;
mod suites;
mod trajectories;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use functional::{builtin_convex_specs, check_locality, check_wb_criteria, NamedSpec};
pub use inequalities::{
    check_energy_inequalities, check_lattice_identity, check_scalar_inequalities,
    contraction_truncation, domination_truncation, lemma_clamp, lemma_domination, sgn,
};
pub use suites::{run_suite, Suite, SuiteOptions};
pub use trajectories::{check_builtin_flow_properties, check_flow_properties, FlowSuiteConfig};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Relative slack of the scalar and energy suites.
pub const RELATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub sample_count: usize,
    /// Sampled values lie in `[-value_range, value_range]`.
    pub value_range: f64,
    pub levels: Vec<u32>,
    pub ns: Vec<usize>,
}

impl SampleConfig {
    pub fn new(seed: u64, sample_count: usize) -> Self {
        Self {
            seed,
            sample_count,
            value_range: 2.0,
            levels: vec![1, 2, 3],
            ns: vec![3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return domain("sample_count must be at least 1");
        }
        if !(self.value_range.is_finite() && self.value_range > 0.0) {
            return domain("value_range must be positive");
        }
        if self.ns.iter().any(|&n| n < 2) {
            return domain("every N must be at least 2");
        }
        Ok(())
    }
}

/// Outcome of one sampled property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub property: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `lhs - rhs` (relative or absolute depending on the
    /// suite); `None` when every comparison was decided by an infinite side.
    pub max_slack: Option<f64>,
    pub seed: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn all_passed(reports: &[Report]) -> bool {
    reports.iter().all(Report::passed)
}

/// Associative accumulator merged across samples.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Tally {
    samples: usize,
    violations: usize,
    max_slack: Option<f64>,
}

impl Tally {
    pub fn merge(self, other: Self) -> Self {
        Self {
            samples: self.samples + other.samples,
            violations: self.violations + other.violations,
            max_slack: match (self.max_slack, other.max_slack) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// Records one comparison `lhs <= rhs` with the given excess measure.
    pub fn record(&mut self, slack: Option<f64>, tolerance: f64) {
        self.samples += 1;
        if let Some(s) = slack {
            // NaN counts as a violation
            if s.is_nan() || s > tolerance {
                self.violations += 1;
            }
            self.max_slack = Some(self.max_slack.map_or(s, |m| m.max(s)));
        }
    }

    /// Counts a failed case (e.g. a solver error) as one violated sample.
    pub fn fail(&mut self) {
        self.samples += 1;
        self.violations += 1;
    }

    pub fn into_report(self, property: &str, seed: u64) -> Report {
        Report {
            property: property.to_string(),
            samples: self.samples,
            violations: self.violations,
            max_slack: self.max_slack,
            seed,
        }
    }
}

/// Excess of `lhs` over `rhs` in `[0, inf]`, relative to their size.
/// `None` when `rhs` is infinite (the comparison holds trivially).
pub(crate) fn relative_excess(lhs: f64, rhs: f64) -> Option<f64> {
    if rhs == f64::INFINITY {
        return None;
    }
    if lhs == f64::INFINITY {
        return Some(f64::INFINITY);
    }
    Some((lhs - rhs) / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE))
}

fn property_salt(property: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    property.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub(crate) fn sample_rng(seed: u64, property: &str, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ property_salt(property));
    rng.set_stream(sample);
    rng
}

/// Uniform values in `[-range, range]`; about a fifth are rounded to
/// integers so that ties and zeros occur.
pub(crate) fn random_values(rng: &mut ChaCha8Rng, len: usize, range: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let x = rng.random_range(-range..=range);
            if rng.random_bool(0.2) {
                x.round()
            } else {
                x
            }
        })
        .collect()
}

/// Runs `sample(k, rng, tally)` for every `k < count` in parallel.
pub(crate) fn run_samples<F>(seed: u64, property: &str, count: usize, sample: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng, &mut Tally) + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, property, k);
            let mut tally = Tally::default();
            sample(&mut rng, &mut tally);
            tally
        })
        .reduce(Tally::default, Tally::merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_merge_is_order_independent() {
        let mut a = Tally::default();
        a.record(Some(-1.0), 0.0);
        let mut b = Tally::default();
        b.record(Some(2.0), 0.0);
        b.record(None, 0.0);
        let (x, y) = (a.merge(b), b.merge(a));
        assert_eq!((x.samples, x.violations, x.max_slack), (3, 1, Some(2.0)));
        assert_eq!((y.samples, y.violations, y.max_slack), (3, 1, Some(2.0)));
    }

    #[test]
    fn excess_handles_infinity() {
        assert_eq!(relative_excess(f64::INFINITY, f64::INFINITY), None);
        assert_eq!(relative_excess(1.0, f64::INFINITY), None);
        assert_eq!(relative_excess(f64::INFINITY, 1.0), Some(f64::INFINITY));
        assert_eq!(relative_excess(0.0, 0.0), Some(0.0));
        assert!(relative_excess(1.0, 2.0).unwrap() < 0.0);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = sample_rng(1, "p", 3).random();
        let b: f64 = sample_rng(1, "p", 3).random();
        let c: f64 = sample_rng(1, "p", 4).random();
        let d: f64 = sample_rng(1, "q", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
