//! Adapter that turns any DIMACS-speaking solver process into a
//! [`SatOracle`]. Disabled by default everywhere; nothing in the library
//! or CLI constructs one unless explicitly configured.
//!
//! Per query, the formula plus assumptions (as unit clauses) plus extra
//! clauses are written to a temporary CNF file, the configured command is
//! run on it, and the output is parsed: a line `s SATISFIABLE` /
//! `s UNSATISFIABLE` (or a bare `SAT` / `UNSAT` token) decides the
//! outcome, and `v`-lines (or the literals following `SAT`) carry the
//! model. Invalid or incomplete solver output is an error, never a
//! silently trusted answer: returned models are re-verified here.

use std::io::Write as _;
use std::process::Command;

use crate::cnf::{Assignment, Clause, Formula};

use super::{
    check_literals_in_range, OracleError, OracleQuery, OracleResult, OracleStats, SatOracle,
};

/// How to invoke the external solver. `{cnf}` in the template is replaced
/// by the path of the query file; the command runs under `sh -c`.
#[derive(Debug, Clone)]
pub struct ExternalSolverConfig {
    pub command_template: String,
}

pub struct ExternalOracle {
    formula: Formula,
    permanent: Vec<Clause>,
    config: ExternalSolverConfig,
    stats: OracleStats,
}

impl ExternalOracle {
    pub fn new(formula: &Formula, config: ExternalSolverConfig) -> ExternalOracle {
        ExternalOracle {
            formula: formula.clone(),
            permanent: Vec::new(),
            config,
            stats: OracleStats::default(),
        }
    }

    fn query_dimacs(&self, query: &OracleQuery) -> String {
        let n = self.formula.num_vars();
        let num_clauses = self.formula.num_clauses()
            + self.permanent.len()
            + query.assumptions.len()
            + query.extra_clauses.len();
        let mut text = format!("p cnf {n} {num_clauses}\n");
        let mut push = |clause: &Clause| {
            for lit in clause.literals() {
                text.push_str(&format!("{lit} "));
            }
            text.push_str("0\n");
        };
        for clause in self.formula.clauses() {
            push(clause);
        }
        for clause in &self.permanent {
            push(clause);
        }
        for clause in &query.extra_clauses {
            push(clause);
        }
        for lit in &query.assumptions {
            text.push_str(&format!("{lit} 0\n"));
        }
        text
    }

    fn parse_output(&self, output: &str) -> Result<Option<Vec<i32>>, OracleError> {
        let mut satisfiable: Option<bool> = None;
        let mut literals: Vec<i32> = Vec::new();
        let mut in_model = false;
        for line in output.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("s ") {
                satisfiable = match rest.trim() {
                    "SATISFIABLE" => Some(true),
                    "UNSATISFIABLE" => Some(false),
                    other => {
                        return Err(OracleError::External(format!(
                            "unrecognized status line {other:?}"
                        )))
                    }
                };
            } else if let Some(rest) = line.strip_prefix("v ") {
                in_model = true;
                parse_literal_tokens(rest, &mut literals)?;
            } else if line == "SAT" {
                satisfiable = Some(true);
                in_model = true;
            } else if line == "UNSAT" || line == "UNSATISFIABLE" {
                satisfiable = Some(false);
            } else if in_model && satisfiable == Some(true) && !line.starts_with('c') {
                parse_literal_tokens(line, &mut literals)?;
            }
        }
        match satisfiable {
            Some(true) => Ok(Some(literals)),
            Some(false) => Ok(None),
            None => Err(OracleError::External(
                "solver output carried no SAT/UNSAT verdict".into(),
            )),
        }
    }

    fn model_from_literals(
        &self,
        literals: &[i32],
        query: &OracleQuery,
    ) -> Result<Assignment, OracleError> {
        // Variables the solver leaves unmentioned default to false; the
        // verification below decides whether that is acceptable.
        let mut model = Assignment::all_false(self.formula.num_vars());
        for &value in literals {
            if value == 0 {
                continue;
            }
            let var = value.unsigned_abs();
            if var > self.formula.num_vars() {
                return Err(OracleError::External(format!(
                    "model literal {value} out of range"
                )));
            }
            model.set(var, value > 0);
        }
        let sat = |clause: &Clause| {
            clause
                .literals()
                .iter()
                .any(|l| l.satisfied_by(model.value(l.var())))
        };
        let all_ok = self.formula.clauses().iter().all(&sat)
            && self.permanent.iter().all(&sat)
            && query.extra_clauses.iter().all(&sat)
            && query
                .assumptions
                .iter()
                .all(|l| l.satisfied_by(model.value(l.var())));
        if !all_ok {
            return Err(OracleError::External(
                "solver reported a model that does not satisfy the query".into(),
            ));
        }
        Ok(model)
    }
}

fn parse_literal_tokens(text: &str, out: &mut Vec<i32>) -> Result<(), OracleError> {
    for token in text.split_whitespace() {
        let value: i32 = token.parse().map_err(|_| {
            OracleError::External(format!("bad model token {token:?}"))
        })?;
        out.push(value);
    }
    Ok(())
}

impl SatOracle for ExternalOracle {
    fn solve(&mut self, query: &OracleQuery) -> Result<OracleResult, OracleError> {
        self.stats.total_calls += 1;
        check_literals_in_range(query, self.formula.num_vars())?;

        let mut file = tempfile::Builder::new()
            .prefix("oracle-query-")
            .suffix(".cnf")
            .tempfile()
            .map_err(|e| OracleError::External(format!("temp file: {e}")))?;
        file.write_all(self.query_dimacs(query).as_bytes())
            .map_err(|e| OracleError::External(format!("write query: {e}")))?;
        let path = file.path().to_string_lossy().into_owned();
        let command = self.config.command_template.replace("{cnf}", &path);

        let output = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .output()
            .map_err(|e| OracleError::External(format!("spawn {command:?}: {e}")))?;
        let stdout = String::from_utf8_lossy(&output.stdout);

        match self.parse_output(&stdout)? {
            Some(literals) => {
                let model = self.model_from_literals(&literals, query)?;
                self.stats.sat_answers += 1;
                Ok(OracleResult::Sat(model))
            }
            None => {
                self.stats.unsat_answers += 1;
                Ok(OracleResult::Unsat)
            }
        }
    }

    fn stats(&self) -> OracleStats {
        self.stats
    }

    fn add_permanent_clause(&mut self, clause: &Clause) -> Result<(), OracleError> {
        for lit in clause.literals() {
            if lit.var() > self.formula.num_vars() {
                return Err(OracleError::OutOfRange {
                    lit: lit.to_dimacs(),
                    num_vars: self.formula.num_vars(),
                });
            }
        }
        self.permanent.push(clause.clone());
        Ok(())
    }
}
