//! Black-box satisfiability oracles.
//!
//! A [`SatOracle`] is bound to one formula at construction and answers
//! queries made of assumption literals plus clauses scoped to the single
//! query. Every query is metered. The primary implementation is the
//! built-in conflict-driven solver ([`CdclOracle`]); [`BruteForceOracle`]
//! is an independent exhaustive checker used to validate it, and
//! [`ExternalOracle`] adapts any DIMACS-speaking solver process to the
//! same interface.

mod brute;
mod cdcl;
mod external;

pub use brute::{enumerate_all, BruteForceFactory, BruteForceOracle, DEFAULT_BRUTE_CAP};
pub use cdcl::{CdclFactory, CdclOracle};
pub use external::{ExternalOracle, ExternalSolverConfig};

use serde::Serialize;
use thiserror::Error;

use crate::cnf::{Assignment, Clause, Formula, Lit};

/// One satisfiability question: the bound formula, conjoined with unit
/// `assumptions` and with `extra_clauses` that hold for this query only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleQuery {
    pub assumptions: Vec<Lit>,
    pub extra_clauses: Vec<Clause>,
}

impl OracleQuery {
    pub fn new(assumptions: Vec<Lit>, extra_clauses: Vec<Clause>) -> OracleQuery {
        OracleQuery {
            assumptions,
            extra_clauses,
        }
    }

    pub fn assuming(assumptions: Vec<Lit>) -> OracleQuery {
        OracleQuery {
            assumptions,
            extra_clauses: Vec::new(),
        }
    }
}

/// Outcome of a query. A `Sat` model is total over the formula's
/// variables and satisfies the formula, the assumptions and the extra
/// clauses of the query that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    Sat(Assignment),
    Unsat,
}

impl OracleResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleResult::Sat(_))
    }
}

/// Query metering. `total_calls` counts every [`SatOracle::solve`] entry;
/// `sat_answers + unsat_answers` equals `total_calls` as long as no query
/// aborted with an error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OracleStats {
    pub total_calls: u64,
    pub sat_answers: u64,
    pub unsat_answers: u64,
    pub propagations: u64,
}

impl OracleStats {
    /// Activity between an `earlier` snapshot of the same oracle and this
    /// one.
    pub fn since(self, earlier: OracleStats) -> OracleStats {
        OracleStats {
            total_calls: self.total_calls - earlier.total_calls,
            sat_answers: self.sat_answers - earlier.sat_answers,
            unsat_answers: self.unsat_answers - earlier.unsat_answers,
            propagations: self.propagations - earlier.propagations,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("conflict budget of {budget} exhausted during a query")]
    BudgetExhausted { budget: u64 },
    #[error("formula has {num_vars} variables, above the exhaustive-scan cap of {cap}")]
    TooLarge { num_vars: u32, cap: u32 },
    #[error("query literal {lit} out of range for {num_vars} variables")]
    OutOfRange { lit: i32, num_vars: u32 },
    #[error("external solver failure: {0}")]
    External(String),
}

/// A complete decision procedure for one formula.
///
/// Implementations must be sound (a `Sat` answer carries a model checked
/// against the query, and against the full formula in debug builds) and
/// complete (`Unsat` only when no total assignment consistent with the
/// query exists). Resource exhaustion is an error, never a wrong answer.
/// Instances are single-owner; use an [`OracleFactory`] to give each
/// worker its own.
pub trait SatOracle {
    fn solve(&mut self, query: &OracleQuery) -> Result<OracleResult, OracleError>;

    fn stats(&self) -> OracleStats;

    /// Permanently conjoins `clause` to the bound formula (model
    /// enumeration blocking). Subsequent queries see it.
    fn add_permanent_clause(&mut self, clause: &Clause) -> Result<(), OracleError>;
}

/// Creates independent oracle instances over a fixed formula, one per
/// worker or per run; `seed` only influences which witness a `Sat` answer
/// reports, never the SAT/UNSAT outcome.
pub trait OracleFactory: Send + Sync {
    fn create(&self, seed: u64) -> Box<dyn SatOracle + Send>;
}

pub(crate) fn check_literals_in_range(
    query: &OracleQuery,
    num_vars: u32,
) -> Result<(), OracleError> {
    let out_of_range = |lit: &Lit| -> Result<(), OracleError> {
        Err(OracleError::OutOfRange {
            lit: lit.to_dimacs(),
            num_vars,
        })
    };
    for lit in &query.assumptions {
        if lit.var() > num_vars {
            return out_of_range(lit);
        }
    }
    for clause in &query.extra_clauses {
        for lit in clause.literals() {
            if lit.var() > num_vars {
                return out_of_range(lit);
            }
        }
    }
    Ok(())
}

/// Panics unless `model` satisfies the whole query; called on every SAT
/// answer by the built-in oracles. The full formula re-scan is a debug
/// post-check — per-query costs must stay proportional to the query, not
/// the formula, when answers arrive by the millions.
pub(crate) fn assert_model(formula: &Formula, query: &OracleQuery, model: &Assignment) {
    assert_eq!(model.len(), formula.num_vars() as usize, "model not total");
    let sat = |clause: &Clause| {
        clause
            .literals()
            .iter()
            .any(|l| l.satisfied_by(model.value(l.var())))
    };
    if cfg!(debug_assertions) {
        for clause in formula.clauses() {
            assert!(sat(clause), "model violates formula clause ({clause})");
        }
    }
    for lit in &query.assumptions {
        assert!(
            lit.satisfied_by(model.value(lit.var())),
            "model violates assumption {lit}"
        );
    }
    for clause in &query.extra_clauses {
        assert!(sat(clause), "model violates extra clause ({clause})");
    }
}
