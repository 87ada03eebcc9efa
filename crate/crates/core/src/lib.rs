//! Near-uniform sampling of SAT solutions with a complete solver as the
//! only oracle, plus model counting, Monte Carlo baselines, benchmark
//! instance generators and the statistics used to compare samplers.
//!
//! The pieces compose bottom-up:
//!
//! * [`cnf`] — formulas, DIMACS I/O, assignment energy;
//! * [`oracle`] — the black-box satisfiability interface and the built-in
//!   conflict-driven solver behind it;
//! * [`instances`] — generators for structured and random benchmark
//!   families with known solution counts;
//! * [`sampler`] — the level-wise search-tree sampler;
//! * [`counter`] — solution-count estimation and exact enumeration;
//! * [`baselines`] — simulated annealing, Gibbs and a WalkSAT hybrid;
//! * [`stats`] — frequency tallies, chi-squared goodness of fit, and the
//!   pairwise ratio diagnostic;
//! * [`evaluate`] — an end-to-end harness tying sampling to the tests.

pub mod baselines;
pub mod cnf;
pub mod counter;
pub mod evaluate;
pub mod instances;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod stats;
