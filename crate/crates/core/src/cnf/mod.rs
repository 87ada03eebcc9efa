//! CNF data model: literals, clauses, formulas, assignments and variable
//! orderings, plus the energy function used by the local-search baselines.
//!
//! Variables are 1-based as in the DIMACS format. Positions of a variable
//! ordering are also 1-based.

mod dimacs;
mod energy;

pub use dimacs::{parse_dimacs, serialize_dimacs, ParseError};
pub use energy::{energy, is_solution, EnergyTracker};

use std::fmt;

use thiserror::Error;

/// 1-based variable index, as in DIMACS.
pub type Var = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("literal must not be zero")]
    ZeroLiteral,
    #[error("clause must not be empty")]
    EmptyClause,
    #[error("literal {lit} references a variable out of range 1..={num_vars}")]
    LiteralOutOfRange { lit: i32, num_vars: Var },
    #[error("formula must have at least one variable")]
    NoVariables,
    #[error("assignment has {got} values but the formula has {expected} variables")]
    LengthMismatch { got: usize, expected: usize },
    #[error("ordering is not a permutation of 1..={0}")]
    NotAPermutation(Var),
}

/// A signed variable: positive means the variable itself, negative its
/// negation. Stored in DIMACS convention (non-zero `i32`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        debug_assert!(var > 0 && var <= i32::MAX as u32);
        Lit(if positive { var as i32 } else { -(var as i32) })
    }

    /// Builds a literal from its DIMACS integer form.
    pub fn from_dimacs(value: i32) -> Result<Lit, CnfError> {
        if value == 0 {
            return Err(CnfError::ZeroLiteral);
        }
        Ok(Lit(value))
    }

    #[inline]
    pub fn var(self) -> Var {
        self.0.unsigned_abs()
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    #[inline]
    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    /// True when the literal evaluates to true under `value` of its variable.
    #[inline]
    pub fn satisfied_by(self, value: bool) -> bool {
        self.is_positive() == value
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A disjunction of literals. Duplicate literals are removed on
/// construction (first occurrence wins); a clause containing both
/// polarities of a variable is a tautology and is kept, flagged.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Lit>,
}

impl Clause {
    pub fn new(literals: impl IntoIterator<Item = Lit>) -> Result<Clause, CnfError> {
        let mut seen: Vec<Lit> = Vec::new();
        for lit in literals {
            if !seen.contains(&lit) {
                seen.push(lit);
            }
        }
        if seen.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        Ok(Clause { literals: seen })
    }

    pub fn literals(&self) -> &[Lit] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    /// True when the clause contains a variable in both polarities.
    pub fn is_tautology(&self) -> bool {
        self.literals
            .iter()
            .any(|&l| self.literals.contains(&!l))
    }

    pub fn max_var(&self) -> Var {
        self.literals.iter().map(|l| l.var()).max().unwrap_or(0)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// A CNF formula over `num_vars` ordered Boolean variables.
///
/// Tautological clauses are retained so the clause count and the energy
/// ceiling match the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    num_vars: Var,
    clauses: Vec<Clause>,
    comments: Vec<String>,
}

impl Formula {
    pub fn new(num_vars: Var, clauses: Vec<Clause>) -> Result<Formula, CnfError> {
        if num_vars == 0 {
            return Err(CnfError::NoVariables);
        }
        for clause in &clauses {
            for lit in clause.literals() {
                if lit.var() > num_vars {
                    return Err(CnfError::LiteralOutOfRange {
                        lit: lit.to_dimacs(),
                        num_vars,
                    });
                }
            }
        }
        Ok(Formula {
            num_vars,
            clauses,
            comments: Vec::new(),
        })
    }

    pub fn with_comments(mut self, comments: Vec<String>) -> Formula {
        self.comments = comments;
        self
    }

    pub fn push_comment(&mut self, comment: impl Into<String>) {
        self.comments.push(comment.into());
    }

    pub fn num_vars(&self) -> Var {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }
}

/// A total truth assignment; `values[v-1]` is the value of variable `v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    pub fn all_false(num_vars: Var) -> Assignment {
        Assignment {
            values: vec![false; num_vars as usize],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, var: Var) -> bool {
        self.values[(var - 1) as usize]
    }

    pub fn set(&mut self, var: Var, value: bool) {
        self.values[(var - 1) as usize] = value;
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Canonical text form: one `0`/`1` per ordering position.
    pub fn bitstring(&self, ordering: &VariableOrdering) -> String {
        (1..=self.values.len() as Var)
            .map(|pos| {
                if self.value(ordering.var_at(pos)) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

/// A bijection from positions `1..=n` to variable indices. The default is
/// the identity (lexicographic by DIMACS index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableOrdering {
    var_at: Vec<Var>,
    pos_of: Vec<u32>,
}

impl VariableOrdering {
    pub fn identity(num_vars: Var) -> VariableOrdering {
        VariableOrdering {
            var_at: (1..=num_vars).collect(),
            pos_of: (1..=num_vars).collect(),
        }
    }

    pub fn from_permutation(var_at: Vec<Var>) -> Result<VariableOrdering, CnfError> {
        let n = var_at.len() as Var;
        let mut pos_of = vec![0u32; var_at.len()];
        for (i, &v) in var_at.iter().enumerate() {
            if v == 0 || v > n || pos_of[(v - 1) as usize] != 0 {
                return Err(CnfError::NotAPermutation(n));
            }
            pos_of[(v - 1) as usize] = i as u32 + 1;
        }
        Ok(VariableOrdering { var_at, pos_of })
    }

    pub fn len(&self) -> usize {
        self.var_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.var_at.is_empty()
    }

    /// Variable at 1-based position `pos`.
    #[inline]
    pub fn var_at(&self, pos: Var) -> Var {
        self.var_at[(pos - 1) as usize]
    }

    /// 1-based position of variable `var`.
    #[inline]
    pub fn position_of(&self, var: Var) -> u32 {
        self.pos_of[(var - 1) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i32) -> Lit {
        Lit::from_dimacs(v).unwrap()
    }

    #[test]
    fn literal_roundtrip_and_negation() {
        let l = lit(-3);
        assert_eq!(l.var(), 3);
        assert!(!l.is_positive());
        assert_eq!((!l).to_dimacs(), 3);
        assert!(l.satisfied_by(false));
        assert!(!l.satisfied_by(true));
    }

    #[test]
    fn zero_literal_rejected() {
        assert_eq!(Lit::from_dimacs(0), Err(CnfError::ZeroLiteral));
    }

    #[test]
    fn clause_normalizes_duplicates() {
        let c = Clause::new([lit(1), lit(2), lit(1)]).unwrap();
        assert_eq!(c.literals(), &[lit(1), lit(2)]);
        assert!(!c.is_tautology());
    }

    #[test]
    fn tautology_is_flagged_and_kept() {
        let c = Clause::new([lit(1), lit(-1)]).unwrap();
        assert!(c.is_tautology());
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn empty_clause_rejected() {
        assert_eq!(Clause::new([]).unwrap_err(), CnfError::EmptyClause);
    }

    #[test]
    fn formula_validates_ranges() {
        let c = Clause::new([lit(3)]).unwrap();
        let err = Formula::new(2, vec![c]).unwrap_err();
        assert_eq!(
            err,
            CnfError::LiteralOutOfRange {
                lit: 3,
                num_vars: 2
            }
        );
    }

    #[test]
    fn ordering_identity_and_permutation() {
        let id = VariableOrdering::identity(3);
        assert_eq!(id.var_at(2), 2);
        assert_eq!(id.position_of(3), 3);

        let p = VariableOrdering::from_permutation(vec![2, 3, 1]).unwrap();
        assert_eq!(p.var_at(1), 2);
        assert_eq!(p.position_of(1), 3);

        assert!(VariableOrdering::from_permutation(vec![1, 1, 2]).is_err());
        assert!(VariableOrdering::from_permutation(vec![1, 2, 4]).is_err());
    }

    #[test]
    fn assignment_bitstring_follows_ordering() {
        let mut a = Assignment::all_false(3);
        a.set(2, true);
        assert_eq!(a.bitstring(&VariableOrdering::identity(3)), "010");
        let p = VariableOrdering::from_permutation(vec![2, 3, 1]).unwrap();
        assert_eq!(a.bitstring(&p), "100");
    }
}
