//! Benchmark instance generators with known solution structure, plus
//! barrier embedding and balanced-variable selection.
//!
//! Variable layout is always (x1, y1..yb, z...), so the default
//! lexicographic ordering puts the barrier variable at the root of the
//! search tree. Each generator stamps a `t <family> <params>` provenance
//! comment into the DIMACS output.

use thiserror::Error;

use crate::cnf::{Clause, Formula, Lit, Var};
use crate::counter::{exact_count_enumerate, EnumerationOutcome};
use crate::oracle::{CdclOracle, OracleError};
use crate::rng::{rng_from_seed, sample_without_replacement};
use rand::Rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("variable {var} out of range for a formula with {num_vars} variables")]
    VarOutOfRange { var: Var, num_vars: Var },
    #[error("solution enumeration exceeded the cap of {cap}")]
    EnumerationExceeded { cap: usize },
    #[error("formula is unsatisfiable")]
    Unsatisfiable,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn clause(lits: impl IntoIterator<Item = Lit>) -> Clause {
    Clause::new(lits).expect("generator clauses are non-empty")
}

/// Flat landscape instance: (x1 ∨ y_j) for all j, plus (¬x1 ∨ z1) and
/// (¬x1 ∨ ¬z1). Exactly two solutions, both with x1 = 0 and all y = 1;
/// the x1 = 1 region is a huge energy-1 plateau with no exit.
pub fn gen_plateau(b: u32) -> Formula {
    assert!(b >= 1);
    let x1 = Lit::new(1, true);
    let z1 = Lit::new(b + 2, true);
    let mut clauses = Vec::with_capacity(b as usize + 2);
    for j in 1..=b {
        clauses.push(clause([x1, Lit::new(1 + j, true)]));
    }
    clauses.push(clause([!x1, z1]));
    clauses.push(clause([!x1, !z1]));
    let mut f = Formula::new(b + 2, clauses).expect("valid construction");
    f.push_comment(format!("t plateau b={b}"));
    f
}

/// Equivalence barrier instance: x1 ⇔ y_j for all j, written as the 2b
/// implication clauses (¬x1 ∨ y_j) and (x1 ∨ ¬y_j). Two solutions
/// (all-zeros, all-ones) separated by an energy barrier of height ⌈b/2⌉
/// under single flips.
pub fn gen_xor_barrier(b: u32) -> Formula {
    assert!(b >= 1);
    let x1 = Lit::new(1, true);
    let mut clauses = Vec::with_capacity(2 * b as usize);
    for j in 1..=b {
        clauses.push(clause([!x1, Lit::new(1 + j, true)]));
    }
    for j in 1..=b {
        clauses.push(clause([x1, !Lit::new(1 + j, true)]));
    }
    let mut f = Formula::new(b + 1, clauses).expect("valid construction");
    f.push_comment(format!("t xorbarrier b={b}"));
    f
}

/// Barrier with asymmetric solution mass: the barrier of
/// [`gen_xor_barrier`] plus (x1 ∨ z_i) for ℓ fresh variables. The x1 = 1
/// side carries a cluster of 2^ℓ solutions; the x1 = 0 side exactly one
/// (all y = 0, all z = 1).
pub fn gen_asym_xor_barrier(b: u32, l: u32) -> Formula {
    assert!(b >= 1 && l >= 1);
    let base = gen_xor_barrier(b);
    let x1 = Lit::new(1, true);
    let mut clauses = base.clauses().to_vec();
    for i in 1..=l {
        clauses.push(clause([x1, Lit::new(b + 1 + i, true)]));
    }
    let mut f = Formula::new(b + 1 + l, clauses).expect("valid construction");
    f.push_comment(format!("t asymxorbarrier b={b} l={l}"));
    f
}

/// Conjoins an equivalence barrier between `z` and `b` fresh variables.
/// Every solution of `f` extends uniquely (the fresh variables copy `z`),
/// so the solution count is preserved while single-flip samplers must now
/// cross a barrier to change `z`.
pub fn embed_barrier(f: &Formula, z: Var, b: u32) -> Result<Formula, InstanceError> {
    assert!(b >= 1);
    if z == 0 || z > f.num_vars() {
        return Err(InstanceError::VarOutOfRange {
            var: z,
            num_vars: f.num_vars(),
        });
    }
    let zl = Lit::new(z, true);
    let mut clauses = f.clauses().to_vec();
    for j in 1..=b {
        clauses.push(clause([!zl, Lit::new(f.num_vars() + j, true)]));
    }
    for j in 1..=b {
        clauses.push(clause([zl, !Lit::new(f.num_vars() + j, true)]));
    }
    let mut comments = f.comments().to_vec();
    comments.push(format!("t embed z={z} b={b}"));
    Ok(Formula::new(f.num_vars() + b, clauses)
        .expect("valid construction")
        .with_comments(comments))
}

/// Fixed-clause-length random 3-SAT: each clause draws 3 distinct
/// variables uniformly and negates each with probability 1/2. Duplicate
/// clauses may occur, as in the classical model.
pub fn gen_rand3sat(n: u32, m: u32, seed: u64) -> Formula {
    assert!(n >= 3);
    let mut rng = rng_from_seed(seed);
    let mut clauses = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let vars = sample_without_replacement(&mut rng, n as usize, 3);
        let lits: Vec<Lit> = vars
            .into_iter()
            .map(|v| Lit::new(v as Var + 1, rng.gen()))
            .collect();
        clauses.push(clause(lits));
    }
    let mut f = Formula::new(n, clauses).expect("valid construction");
    f.push_comment(format!("t rand3sat n={n} m={m} seed={seed}"));
    f
}

/// The variable whose solution marginal (fraction of solutions setting it
/// true) is closest to 1/2, ties broken by the lowest index. Requires
/// enumerating all solutions, so it refuses beyond `max_models`.
pub fn select_balanced_variable(
    f: &Formula,
    max_models: usize,
) -> Result<Var, InstanceError> {
    let mut oracle = CdclOracle::new(f, 0, None);
    let solutions = match exact_count_enumerate(f, &mut oracle, max_models)? {
        EnumerationOutcome::Complete { solutions } => solutions,
        EnumerationOutcome::Exceeded { .. } => {
            return Err(InstanceError::EnumerationExceeded { cap: max_models })
        }
    };
    if solutions.is_empty() {
        return Err(InstanceError::Unsatisfiable);
    }
    let total = solutions.len() as f64;
    let mut best_var = 1;
    let mut best_gap = f64::INFINITY;
    for v in 1..=f.num_vars() {
        let ones = solutions.iter().filter(|s| s.value(v)).count() as f64;
        let gap = (ones / total - 0.5).abs();
        if gap < best_gap {
            best_gap = gap;
            best_var = v;
        }
    }
    Ok(best_var)
}
