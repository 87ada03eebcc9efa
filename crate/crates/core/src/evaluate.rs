//! End-to-end uniformity evaluation: enumerate the full solution set,
//! draw a pool of samples with a chosen sampler, tally, and test the
//! tally against the uniform law. The report is the machine-readable
//! form of one benchmark row.

use serde::Serialize;
use thiserror::Error;

use crate::baselines::{
    gibbs_sample, hybrid_sample, sa_sample, BaselineError, BoltzmannParams, HybridParams,
};
use crate::cnf::{Assignment, Formula};
use crate::counter::{exact_count_enumerate, EnumerationOutcome};
use crate::oracle::{CdclFactory, CdclOracle, OracleError};
use crate::sampler::{draw_samples, SamplerConfig, SamplerError};
use crate::stats::{chi_squared, tally, StatsError};

#[derive(Debug, Error, PartialEq)]
pub enum EvaluateError {
    #[error("solution enumeration exceeded the cap of {cap}")]
    EnumerationExceeded { cap: usize },
    #[error("the formula has {found} solutions; the uniformity test needs at least 2")]
    TooFewSolutions { found: usize },
    #[error("invalid evaluation request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which sampler the harness drives; each carries its own knobs and
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerChoice {
    SearchTree { cfg: SamplerConfig },
    Sa { params: BoltzmannParams, seed: u64 },
    Gibbs { params: BoltzmannParams, seed: u64 },
    Hybrid { params: HybridParams, seed: u64 },
}

impl SamplerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerChoice::SearchTree { .. } => "sts",
            SamplerChoice::Sa { .. } => "sa",
            SamplerChoice::Gibbs { .. } => "gibbs",
            SamplerChoice::Hybrid { .. } => "hybrid",
        }
    }
}

/// One benchmark row. Serialization order is fixed by the field order
/// here; reruns with the same inputs give byte-identical JSON (times
/// belong in the run manifest, not in results).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub sampler: String,
    /// Provenance line of the instance, when the DIMACS carried one.
    pub instance: String,
    #[serde(rename = "P")]
    pub total: u64,
    #[serde(rename = "Z")]
    pub solution_count: u64,
    pub chi2: f64,
    pub dof: u64,
    pub p_value: f64,
    pub reject_at_05: bool,
    /// Per-solution sample counts, aligned to the sorted solution set.
    pub frequencies: Vec<u64>,
    /// SAT-oracle queries (search-tree sampler only).
    pub oracle_calls: u64,
    /// Chain steps (baseline samplers only).
    pub steps: u64,
    /// True when a chain sampler ran out of budget short of the target.
    pub truncated: bool,
}

fn instance_label(formula: &Formula) -> String {
    formula
        .comments()
        .iter()
        .find(|c| c.starts_with("t "))
        .cloned()
        .unwrap_or_default()
}

/// Enumerates S_F (refusing once `enum_cap` is passed), draws `target`
/// samples with the chosen sampler, and reports the χ² verdict. The
/// sample pool is truncated to exactly `target` when the sampler
/// over-delivers; chain samplers may under-deliver, which is flagged.
pub fn run_evaluation(
    formula: &Formula,
    choice: &SamplerChoice,
    target: u64,
    enum_cap: usize,
    jobs: usize,
) -> Result<EvaluationReport, EvaluateError> {
    if target == 0 {
        return Err(EvaluateError::InvalidRequest(
            "sample target must be at least 1".into(),
        ));
    }
    let mut enum_oracle = CdclOracle::new(formula, 0, None);
    let solutions = match exact_count_enumerate(formula, &mut enum_oracle, enum_cap)? {
        EnumerationOutcome::Complete { solutions } => solutions,
        EnumerationOutcome::Exceeded { .. } => {
            return Err(EvaluateError::EnumerationExceeded { cap: enum_cap })
        }
    };
    if solutions.len() < 2 {
        return Err(EvaluateError::TooFewSolutions {
            found: solutions.len(),
        });
    }

    let mut oracle_calls = 0u64;
    let mut steps = 0u64;
    let mut truncated = false;
    let mut samples: Vec<Assignment> = match choice {
        SamplerChoice::SearchTree { cfg } => {
            let factory = CdclFactory::new(formula.clone(), None);
            let outcome = draw_samples(formula, cfg, target, &factory, jobs)?;
            oracle_calls = outcome.total_calls;
            outcome.samples
        }
        SamplerChoice::Sa { params, seed } => {
            let (samples, diag) = sa_sample(formula, params, target, *seed)?;
            steps = diag.steps_used;
            truncated = diag.truncated;
            samples
        }
        SamplerChoice::Gibbs { params, seed } => {
            let (samples, diag) = gibbs_sample(formula, params, target, *seed)?;
            steps = diag.steps_used;
            truncated = diag.truncated;
            samples
        }
        SamplerChoice::Hybrid { params, seed } => {
            let (samples, diag) = hybrid_sample(formula, params, target, *seed)?;
            steps = diag.steps_used;
            truncated = diag.truncated;
            samples
        }
    };
    samples.truncate(target as usize);

    let table = tally(&samples, &solutions)?;
    let report = chi_squared(&table)?;
    Ok(EvaluationReport {
        sampler: choice.name().to_string(),
        instance: instance_label(formula),
        total: table.total(),
        solution_count: table.len() as u64,
        chi2: report.statistic,
        dof: report.dof,
        p_value: report.p_value,
        reject_at_05: report.reject_at_05,
        frequencies: table.counts().to_vec(),
        oracle_calls,
        steps,
        truncated,
    })
}
