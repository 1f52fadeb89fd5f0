//! Batch property verification, regression of the known counterexamples and
//! randomized counterexample search.

mod generators;
mod reproduce;
mod search;
mod suites;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::StateTupleFile;
use crate::states::derive_seed;

pub use generators::{random_classical, random_stochastic, random_tuple, TupleShape};
pub use reproduce::{
    known_instances, matusita_zero_distributions, measured_gap_states, reproduce_counterexamples, supermult_vectors,
    Reproduction, SUPERMULT_SQUARED, SUPERMULT_TENSOR_SQUARE,
};
pub use search::{search_counterexamples, Candidate, SearchConfig, SearchTarget};
use suites::SUITES;

/// Input of a trial, enough to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialInput {
    pub trial: usize,
    pub seed: u64,
    pub descriptor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<StateTupleFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property_id: String,
    pub trials: usize,
    pub failures: usize,
    /// A trial fails when its margin is below `−slack`.
    pub slack: f64,
    pub worst_margin: f64,
    pub worst_input: Option<TrialInput>,
    /// Full inputs of the first failing trials.
    pub failing_inputs: Vec<TrialInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub elapsed: f64,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Keep at most this many failing inputs per property.
const MAX_FAILING_INPUTS: usize = 10;

pub(crate) struct Check {
    pub id: &'static str,
    pub margin: f64,
}

impl Check {
    pub fn new(id: &'static str, margin: f64) -> Self {
        Check { id, margin }
    }

    /// `tol − |a − b|`
    pub fn close(id: &'static str, a: f64, b: f64, tol: f64) -> Self {
        Check { id, margin: tol - (a - b).abs() }
    }
}

pub(crate) struct Trial {
    pub descriptor: String,
    pub tuple: Option<StateTupleFile>,
    pub checks: Vec<Check>,
}

pub(crate) struct Suite {
    pub id: &'static str,
    /// `(property id, slack)` for every check the suite emits.
    pub properties: &'static [(&'static str, f64)],
    pub run: fn(u64) -> Result<Trial>,
}

struct Accumulator {
    report: PropertyReport,
}

impl Accumulator {
    fn new(id: &str, slack: f64) -> Self {
        Accumulator {
            report: PropertyReport {
                property_id: id.to_string(),
                trials: 0,
                failures: 0,
                slack,
                worst_margin: f64::INFINITY,
                worst_input: None,
                failing_inputs: Vec::new(),
                note: None,
                elapsed: 0.0,
            },
        }
    }

    fn record(&mut self, margin: f64, input: impl Fn() -> TrialInput) {
        let r = &mut self.report;
        r.trials += 1;
        let failed = margin.is_nan() || margin < -r.slack;
        if failed {
            r.failures += 1;
            if r.failing_inputs.len() < MAX_FAILING_INPUTS {
                r.failing_inputs.push(input());
            }
        }
        if margin.is_nan() || margin < r.worst_margin {
            r.worst_margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            let mut inp = input();
            inp.tuple = None;
            r.worst_input = Some(inp);
        }
    }
}

fn run_suite(suite: &Suite, trials: usize, seed: u64) -> Vec<PropertyReport> {
    let start = Instant::now();
    let suite_seed = derive_seed(seed, fnv(suite.id));
    let outcomes: Vec<(u64, Result<Trial>)> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(suite_seed, k as u64);
            (s, (suite.run)(s))
        })
        .collect();
    let mut accs: Vec<Accumulator> = suite.properties.iter().map(|(id, slack)| Accumulator::new(id, *slack)).collect();
    for (k, (s, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok(trial) => {
                for check in &trial.checks {
                    let acc = accs
                        .iter_mut()
                        .find(|a| a.report.property_id == check.id)
                        .expect("suite emits only its declared properties");
                    acc.record(check.margin, || TrialInput {
                        trial: k,
                        seed: *s,
                        descriptor: trial.descriptor.clone(),
                        tuple: trial.tuple.clone(),
                    });
                }
            }
            Err(e) => {
                for acc in &mut accs {
                    acc.record(f64::NEG_INFINITY, || TrialInput {
                        trial: k,
                        seed: *s,
                        descriptor: format!("error: {e}"),
                        tuple: None,
                    });
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    accs.into_iter()
        .map(|mut a| {
            a.report.elapsed = elapsed;
            a.report
        })
        .collect()
}

/// Stable 64-bit hash of a suite name, so that suites draw independent streams.
fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

pub fn suite_ids() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.id).collect()
}

/// Runs suite `suite_id` (or every suite for `"all"`). Reports are
/// deterministic given `(suite_id, trials, seed)` apart from `elapsed`.
pub fn run_property_suite(suite_id: &str, trials: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if suite_id == "all" {
        return Ok(SUITES.iter().flat_map(|s| run_suite(s, trials, seed)).collect());
    }
    let suite = SUITES
        .iter()
        .find(|s| s.id == suite_id)
        .ok_or_else(|| Error::Unknown { kind: "suite", name: suite_id.to_string() })?;
    Ok(run_suite(suite, trials, seed))
}

/// SHA-256 over the reports with timing fields removed.
pub fn report_digest(reports: &[PropertyReport]) -> String {
    let mut h = Sha256::new();
    for r in reports {
        let mut r = r.clone();
        r.elapsed = 0.0;
        h.update(serde_json::to_vec(&r).expect("serializable"));
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_property_suite("nope", 1, 0), Err(Error::Unknown { .. })));
        assert!(run_property_suite("duality", 0, 0).is_err());
    }

    #[test]
    fn suites_are_reproducible() {
        let a = run_property_suite("kwise-ordering-classical", 20, 7).unwrap();
        let b = run_property_suite("kwise-ordering-classical", 20, 7).unwrap();
        assert_eq!(report_digest(&a), report_digest(&b));
        let c = run_property_suite("kwise-ordering-classical", 20, 8).unwrap();
        assert_ne!(report_digest(&a), report_digest(&c));
    }

    #[test]
    fn every_suite_runs_clean_on_a_few_trials() {
        for id in suite_ids() {
            for r in run_property_suite(id, 3, 1).unwrap() {
                assert!(r.passed(), "{r:?}");
                assert!(r.trials > 0, "{}", r.property_id);
            }
        }
    }
}
