//! Exhaustive-scan oracle: the independent referee for the CDCL solver.
//!
//! Enumerates all 2^n assignments as bit masks, so it is only admissible
//! below a variable cap (default 25), but its correctness is evident by
//! inspection — which is the point.

use crate::cnf::{Assignment, Clause, Formula};

use super::{
    assert_model, check_literals_in_range, OracleError, OracleFactory, OracleQuery,
    OracleResult, OracleStats, SatOracle,
};

pub const DEFAULT_BRUTE_CAP: u32 = 25;

/// Bit masks of one clause: `pos` has bit v-1 set when variable v occurs
/// positively, `neg` when it occurs negated.
#[derive(Debug, Clone, Copy)]
struct ClauseMask {
    pos: u64,
    neg: u64,
}

impl ClauseMask {
    fn of(clause: &Clause) -> ClauseMask {
        let mut mask = ClauseMask { pos: 0, neg: 0 };
        for lit in clause.literals() {
            let bit = 1u64 << (lit.var() - 1);
            if lit.is_positive() {
                mask.pos |= bit;
            } else {
                mask.neg |= bit;
            }
        }
        mask
    }

    #[inline]
    fn satisfied_by(&self, bits: u64) -> bool {
        (bits & self.pos) != 0 || (!bits & self.neg) != 0
    }
}

#[derive(Debug)]
pub struct BruteForceOracle {
    formula: Formula,
    num_vars: u32,
    masks: Vec<ClauseMask>,
    stats: OracleStats,
}

impl BruteForceOracle {
    pub fn new(formula: &Formula, cap: u32) -> Result<BruteForceOracle, OracleError> {
        let cap = cap.min(63);
        if formula.num_vars() > cap {
            return Err(OracleError::TooLarge {
                num_vars: formula.num_vars(),
                cap,
            });
        }
        Ok(BruteForceOracle {
            formula: formula.clone(),
            num_vars: formula.num_vars(),
            masks: formula.clauses().iter().map(ClauseMask::of).collect(),
            stats: OracleStats::default(),
        })
    }

    fn assignment_from_bits(&self, bits: u64) -> Assignment {
        Assignment::new((0..self.num_vars).map(|v| bits >> v & 1 == 1).collect())
    }
}

impl SatOracle for BruteForceOracle {
    fn solve(&mut self, query: &OracleQuery) -> Result<OracleResult, OracleError> {
        self.stats.total_calls += 1;
        check_literals_in_range(query, self.num_vars)?;

        let mut required_mask = 0u64;
        let mut required_bits = 0u64;
        let mut consistent = true;
        for lit in &query.assumptions {
            let bit = 1u64 << (lit.var() - 1);
            let value = if lit.is_positive() { bit } else { 0 };
            if required_mask & bit != 0 && required_bits & bit != value {
                consistent = false;
            }
            required_mask |= bit;
            required_bits |= value;
        }
        let extra_masks: Vec<ClauseMask> =
            query.extra_clauses.iter().map(ClauseMask::of).collect();

        if consistent {
            for bits in 0..1u64 << self.num_vars {
                if bits & required_mask != required_bits {
                    continue;
                }
                self.stats.propagations += 1;
                let ok = self.masks.iter().all(|m| m.satisfied_by(bits))
                    && extra_masks.iter().all(|m| m.satisfied_by(bits));
                if ok {
                    let model = self.assignment_from_bits(bits);
                    assert_model(&self.formula, query, &model);
                    self.stats.sat_answers += 1;
                    return Ok(OracleResult::Sat(model));
                }
            }
        }
        self.stats.unsat_answers += 1;
        Ok(OracleResult::Unsat)
    }

    fn stats(&self) -> OracleStats {
        self.stats
    }

    fn add_permanent_clause(&mut self, clause: &Clause) -> Result<(), OracleError> {
        for lit in clause.literals() {
            if lit.var() > self.num_vars {
                return Err(OracleError::OutOfRange {
                    lit: lit.to_dimacs(),
                    num_vars: self.num_vars,
                });
            }
        }
        self.masks.push(ClauseMask::of(clause));
        // Keep the formula copy in sync so SAT post-checks cover it.
        let mut clauses = self.formula.clauses().to_vec();
        clauses.push(clause.clone());
        let comments = self.formula.comments().to_vec();
        self.formula = Formula::new(self.num_vars, clauses)
            .expect("validated literals")
            .with_comments(comments);
        Ok(())
    }
}

/// Factory over a fixed formula; validates the cap once up front.
pub struct BruteForceFactory {
    formula: Formula,
    cap: u32,
}

impl BruteForceFactory {
    pub fn new(formula: Formula, cap: u32) -> Result<BruteForceFactory, OracleError> {
        if formula.num_vars() > cap.min(63) {
            return Err(OracleError::TooLarge {
                num_vars: formula.num_vars(),
                cap: cap.min(63),
            });
        }
        Ok(BruteForceFactory { formula, cap })
    }
}

impl OracleFactory for BruteForceFactory {
    fn create(&self, _seed: u64) -> Box<dyn SatOracle + Send> {
        Box::new(BruteForceOracle::new(&self.formula, self.cap).expect("cap checked"))
    }
}

/// All solutions of `formula` in ascending bit-mask order plus their
/// count; test utility behind the same exhaustive scan.
pub fn enumerate_all(formula: &Formula, cap: u32) -> Result<Vec<Assignment>, OracleError> {
    let cap = cap.min(63);
    if formula.num_vars() > cap {
        return Err(OracleError::TooLarge {
            num_vars: formula.num_vars(),
            cap,
        });
    }
    let masks: Vec<ClauseMask> = formula.clauses().iter().map(ClauseMask::of).collect();
    let n = formula.num_vars();
    let mut out = Vec::new();
    for bits in 0..1u64 << n {
        if masks.iter().all(|m| m.satisfied_by(bits)) {
            out.push(Assignment::new(
                (0..n).map(|v| bits >> v & 1 == 1).collect(),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Lit;
    use crate::cnf::parse_dimacs;

    #[test]
    fn rejects_oversized_formulas() {
        let f = parse_dimacs("p cnf 30 1\n1 2 3 0\n").unwrap();
        assert_eq!(
            BruteForceOracle::new(&f, 25).unwrap_err(),
            OracleError::TooLarge {
                num_vars: 30,
                cap: 25
            }
        );
        assert!(BruteForceOracle::new(&f, 31).is_ok());
    }

    #[test]
    fn finds_lowest_mask_model_first() {
        let f = parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap();
        let mut oracle = BruteForceOracle::new(&f, 25).unwrap();
        match oracle.solve(&OracleQuery::default()).unwrap() {
            OracleResult::Sat(m) => {
                // 000 fails, 100 is the first satisfying mask.
                assert!(m.value(1) && !m.value(2) && !m.value(3));
            }
            OracleResult::Unsat => panic!("satisfiable"),
        }
    }

    #[test]
    fn unsat_formula_detected() {
        let f = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n").unwrap();
        let mut oracle = BruteForceOracle::new(&f, 25).unwrap();
        assert_eq!(
            oracle.solve(&OracleQuery::default()).unwrap(),
            OracleResult::Unsat
        );
    }

    #[test]
    fn enumerate_all_lists_solutions_in_mask_order() {
        let f = parse_dimacs("p cnf 2 1\n1 2 0\n").unwrap();
        let sols = enumerate_all(&f, 25).unwrap();
        let bits: Vec<(bool, bool)> =
            sols.iter().map(|a| (a.value(1), a.value(2))).collect();
        assert_eq!(bits, [(true, false), (false, true), (true, true)]);
    }

    #[test]
    fn tautological_clause_is_always_satisfied() {
        let f = Formula::new(
            2,
            vec![
                Clause::new([
                    Lit::from_dimacs(1).unwrap(),
                    Lit::from_dimacs(-1).unwrap(),
                ])
                .unwrap(),
                Clause::new([Lit::from_dimacs(2).unwrap()]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(enumerate_all(&f, 25).unwrap().len(), 2);
    }
}
