//! Energy of an assignment (number of violated clauses) and an
//! incremental tracker for single-variable flips.

use super::{Assignment, CnfError, Formula, Var};

/// Number of clauses violated by `assignment`.
pub fn energy(formula: &Formula, assignment: &Assignment) -> Result<u64, CnfError> {
    if assignment.len() != formula.num_vars() as usize {
        return Err(CnfError::LengthMismatch {
            got: assignment.len(),
            expected: formula.num_vars() as usize,
        });
    }
    let mut violated = 0u64;
    for clause in formula.clauses() {
        let sat = clause
            .literals()
            .iter()
            .any(|l| l.satisfied_by(assignment.value(l.var())));
        if !sat {
            violated += 1;
        }
    }
    Ok(violated)
}

/// True when `assignment` satisfies every clause.
pub fn is_solution(formula: &Formula, assignment: &Assignment) -> Result<bool, CnfError> {
    Ok(energy(formula, assignment)? == 0)
}

#[derive(Debug, Clone, Copy)]
struct Occurrence {
    clause: u32,
    positive: bool,
}

/// Maintains the energy of an evolving assignment under variable flips in
/// O(occurrences) per flip instead of O(formula).
///
/// Internals: `sat_count[c]` is the number of satisfied literal slots of
/// clause `c`. A variable occurring in both polarities in one clause
/// always contributes exactly one satisfied slot, so the pair is folded
/// into a constant and excluded from the occurrence lists; flips then
/// never touch it.
#[derive(Debug, Clone)]
pub struct EnergyTracker {
    assignment: Assignment,
    sat_count: Vec<u32>,
    occurrences: Vec<Vec<Occurrence>>,
    energy: u64,
    // Unsatisfied clauses, with per-clause index for O(1) removal.
    unsat_list: Vec<u32>,
    unsat_pos: Vec<u32>,
}

const NOT_IN_LIST: u32 = u32::MAX;

impl EnergyTracker {
    pub fn new(formula: &Formula, assignment: Assignment) -> Result<EnergyTracker, CnfError> {
        if assignment.len() != formula.num_vars() as usize {
            return Err(CnfError::LengthMismatch {
                got: assignment.len(),
                expected: formula.num_vars() as usize,
            });
        }
        let mut occurrences: Vec<Vec<Occurrence>> =
            vec![Vec::new(); formula.num_vars() as usize];
        for (c, clause) in formula.clauses().iter().enumerate() {
            for lit in clause.literals() {
                if clause.literals().contains(&!*lit) {
                    continue; // folded tautological pair
                }
                occurrences[(lit.var() - 1) as usize].push(Occurrence {
                    clause: c as u32,
                    positive: lit.is_positive(),
                });
            }
        }
        let mut tracker = EnergyTracker {
            assignment,
            sat_count: vec![0; formula.num_clauses()],
            occurrences,
            energy: 0,
            unsat_list: Vec::new(),
            unsat_pos: vec![NOT_IN_LIST; formula.num_clauses()],
        };
        tracker.recount(formula);
        Ok(tracker)
    }

    /// Re-seats the tracker on a new assignment (restart).
    pub fn reset(&mut self, formula: &Formula, assignment: Assignment) -> Result<(), CnfError> {
        if assignment.len() != formula.num_vars() as usize {
            return Err(CnfError::LengthMismatch {
                got: assignment.len(),
                expected: formula.num_vars() as usize,
            });
        }
        self.assignment = assignment;
        self.recount(formula);
        Ok(())
    }

    fn recount(&mut self, formula: &Formula) {
        self.energy = 0;
        self.unsat_list.clear();
        self.unsat_pos.fill(NOT_IN_LIST);
        for (c, clause) in formula.clauses().iter().enumerate() {
            let mut count = 0u32;
            for lit in clause.literals() {
                if clause.literals().contains(&!*lit) {
                    // Each folded pair has exactly one true slot; count the
                    // positive member once.
                    if lit.is_positive() {
                        count += 1;
                    }
                } else if lit.satisfied_by(self.assignment.value(lit.var())) {
                    count += 1;
                }
            }
            self.sat_count[c] = count;
            if count == 0 {
                self.energy += 1;
                self.unsat_pos[c] = self.unsat_list.len() as u32;
                self.unsat_list.push(c as u32);
            }
        }
    }

    pub fn energy(&self) -> u64 {
        self.energy
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn num_unsat(&self) -> usize {
        self.unsat_list.len()
    }

    /// The `i`-th currently unsatisfied clause (arbitrary but stable order
    /// between flips).
    pub fn unsat_clause(&self, i: usize) -> u32 {
        self.unsat_list[i]
    }

    /// Energy change that flipping `var` would cause; the assignment is
    /// left untouched.
    pub fn delta_energy(&self, var: Var) -> i64 {
        let value = self.assignment.value(var);
        let mut delta = 0i64;
        for occ in &self.occurrences[(var - 1) as usize] {
            let currently_sat = occ.positive == value;
            let count = self.sat_count[occ.clause as usize];
            if currently_sat {
                if count == 1 {
                    delta += 1;
                }
            } else if count == 0 {
                delta -= 1;
            }
        }
        delta
    }

    /// Flips `var`, updating the energy and unsatisfied-clause index.
    pub fn flip(&mut self, var: Var) {
        let old = self.assignment.value(var);
        self.assignment.set(var, !old);
        for i in 0..self.occurrences[(var - 1) as usize].len() {
            let occ = self.occurrences[(var - 1) as usize][i];
            let was_sat = occ.positive == old;
            let c = occ.clause as usize;
            if was_sat {
                self.sat_count[c] -= 1;
                if self.sat_count[c] == 0 {
                    self.energy += 1;
                    self.unsat_pos[c] = self.unsat_list.len() as u32;
                    self.unsat_list.push(c as u32);
                }
            } else {
                if self.sat_count[c] == 0 {
                    self.energy -= 1;
                    let pos = self.unsat_pos[c] as usize;
                    let last = *self.unsat_list.last().unwrap();
                    self.unsat_list[pos] = last;
                    self.unsat_pos[last as usize] = pos as u32;
                    self.unsat_list.pop();
                    self.unsat_pos[c] = NOT_IN_LIST;
                }
                self.sat_count[c] += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{parse_dimacs, Clause, Lit};

    fn lit(v: i32) -> Lit {
        Lit::from_dimacs(v).unwrap()
    }

    fn assignment_from_bits(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b != 0).collect())
    }

    #[test]
    fn energy_counts_violated_clauses() {
        // (x1 v x2) ^ (~x1 v x3) ^ (~x2 v ~x3)
        let f = parse_dimacs("p cnf 3 3\n1 2 0\n-1 3 0\n-2 -3 0\n").unwrap();
        assert_eq!(energy(&f, &assignment_from_bits(&[0, 0, 0])).unwrap(), 1);
        assert_eq!(energy(&f, &assignment_from_bits(&[1, 0, 1])).unwrap(), 0);
        assert_eq!(energy(&f, &assignment_from_bits(&[1, 1, 1])).unwrap(), 1);
        assert!(is_solution(&f, &assignment_from_bits(&[0, 1, 0])).unwrap());
    }

    #[test]
    fn energy_rejects_wrong_length() {
        let f = parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap();
        assert!(energy(&f, &assignment_from_bits(&[0, 0])).is_err());
    }

    #[test]
    fn tautological_clause_never_violated() {
        let c1 = Clause::new([lit(1), lit(-1), lit(2)]).unwrap();
        let c2 = Clause::new([lit(-2)]).unwrap();
        let f = Formula::new(2, vec![c1, c2]).unwrap();
        for bits in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
            let a = assignment_from_bits(&bits);
            let e = energy(&f, &a).unwrap();
            assert_eq!(e, u64::from(bits[1] == 1));
            let tracker = EnergyTracker::new(&f, a).unwrap();
            assert_eq!(tracker.energy(), e);
        }
        // Flipping var 1 must be energy-neutral despite two occurrences.
        let mut t = EnergyTracker::new(&f, assignment_from_bits(&[0, 0])).unwrap();
        assert_eq!(t.delta_energy(1), 0);
        t.flip(1);
        assert_eq!(t.energy(), 0);
    }

    #[test]
    fn tracker_matches_full_recomputation() {
        // Deterministic LCG walk over a fixed formula; compares the
        // incremental energy and deltas against fresh recomputation.
        let f = parse_dimacs(concat!(
            "p cnf 6 8\n",
            "1 2 -3 0\n",
            "-1 4 0\n",
            "3 -4 5 0\n",
            "-5 -6 0\n",
            "2 6 0\n",
            "-2 -3 -4 0\n",
            "1 -6 0\n",
            "4 5 6 0\n",
        ))
        .unwrap();
        let mut tracker =
            EnergyTracker::new(&f, Assignment::all_false(6)).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..10_000 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let var = ((state >> 33) % 6 + 1) as Var;
            let predicted = tracker.energy() as i64 + tracker.delta_energy(var);
            tracker.flip(var);
            let actual = energy(&f, tracker.assignment()).unwrap();
            assert_eq!(predicted, actual as i64);
            assert_eq!(tracker.energy(), actual);
            assert_eq!(tracker.num_unsat() as u64, actual);
        }
    }

    #[test]
    fn unsat_index_tracks_membership() {
        let f = parse_dimacs("p cnf 2 2\n1 0\n2 0\n").unwrap();
        let mut t = EnergyTracker::new(&f, Assignment::all_false(2)).unwrap();
        assert_eq!(t.num_unsat(), 2);
        t.flip(1);
        assert_eq!(t.num_unsat(), 1);
        assert_eq!(t.unsat_clause(0), 1);
        t.flip(2);
        assert_eq!(t.num_unsat(), 0);
        t.flip(1);
        assert_eq!(t.num_unsat(), 1);
        assert_eq!(t.unsat_clause(0), 0);
    }
}
