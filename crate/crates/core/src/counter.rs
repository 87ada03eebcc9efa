//! Model counting: an estimator built from per-level descendant
//! statistics, plus exact counters used as validation oracles.
//!
//! The estimator exploits the telescoping identity
//! |S_n| = Π |S_{i+1}|/|S_i|: each ratio is approximated by the average
//! descendant count observed at that level, so a single sampling pass
//! doubles as a count estimate. When k saturates every level the averages
//! are the exact ratios and the product collapses to Z.

use serde::Serialize;

use crate::cnf::{Assignment, Clause, Formula, Lit};
use crate::oracle::{
    enumerate_all, OracleError, OracleFactory, OracleQuery, OracleResult, SatOracle,
    DEFAULT_BRUTE_CAP,
};
use crate::rng::run_seed;
use crate::sampler::{search_tree_sampler, SamplerConfig, SamplerError};

/// Result of solve-and-block enumeration. `Exceeded` carries the partial
/// list found before the cap tripped (one more model than the cap, the
/// witness that the count is larger).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnumerationOutcome {
    Complete { solutions: Vec<Assignment> },
    Exceeded { solutions: Vec<Assignment> },
}

impl EnumerationOutcome {
    pub fn solutions(&self) -> &[Assignment] {
        match self {
            EnumerationOutcome::Complete { solutions }
            | EnumerationOutcome::Exceeded { solutions } => solutions,
        }
    }

    /// The exact count, if enumeration ran to completion.
    pub fn count(&self) -> Option<u64> {
        match self {
            EnumerationOutcome::Complete { solutions } => Some(solutions.len() as u64),
            EnumerationOutcome::Exceeded { .. } => None,
        }
    }

    pub fn is_exceeded(&self) -> bool {
        matches!(self, EnumerationOutcome::Exceeded { .. })
    }
}

/// Enumerates models by repeatedly solving and blocking each full model
/// with a permanent clause, stopping once `max_models + 1` have been
/// found. The blocking clauses stay in the oracle, so pass a dedicated
/// instance. Solutions come back in the order the oracle produced them.
pub fn exact_count_enumerate(
    formula: &Formula,
    oracle: &mut dyn SatOracle,
    max_models: usize,
) -> Result<EnumerationOutcome, OracleError> {
    assert!(max_models >= 1, "enumeration cap must be at least 1");
    let query = OracleQuery::default();
    let mut solutions: Vec<Assignment> = Vec::new();
    loop {
        match oracle.solve(&query)? {
            OracleResult::Sat(model) => {
                let block = Clause::new(
                    (1..=formula.num_vars()).map(|v| Lit::new(v, !model.value(v))),
                )
                .expect("formulas have at least one variable");
                oracle.add_permanent_clause(&block)?;
                solutions.push(model);
                if solutions.len() > max_models {
                    return Ok(EnumerationOutcome::Exceeded { solutions });
                }
            }
            OracleResult::Unsat => return Ok(EnumerationOutcome::Complete { solutions }),
        }
    }
}

/// Exact count by exhaustive scan; only for formulas small enough to
/// enumerate all assignments (up to [`DEFAULT_BRUTE_CAP`] variables).
pub fn exact_count_bruteforce(formula: &Formula) -> Result<u64, OracleError> {
    Ok(enumerate_all(formula, DEFAULT_BRUTE_CAP)?.len() as u64)
}

/// A model-count estimate assembled from level multipliers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZEstimate {
    pub satisfiable: bool,
    /// Σ log2(multiplier); absent for unsatisfiable formulas (the count
    /// is 0 and has no finite logarithm).
    pub log2_estimate: Option<f64>,
    /// Linear-scale estimate; +∞ when the product leaves floating range.
    pub estimate: f64,
    /// One per level step, each within [1, 2^{ℓ'}]: the mean |D| pooled
    /// across runs.
    pub multipliers: Vec<f64>,
    /// Per-run log2 estimates (product of that run's own level means),
    /// kept as a dispersion diagnostic.
    pub per_run_log2: Vec<f64>,
    pub runs_averaged: u64,
    pub oracle_calls: u64,
}

impl ZEstimate {
    fn unsatisfiable(runs: u64, calls: u64) -> ZEstimate {
        ZEstimate {
            satisfiable: false,
            log2_estimate: None,
            estimate: 0.0,
            multipliers: Vec::new(),
            per_run_log2: Vec::new(),
            runs_averaged: runs,
            oracle_calls: calls,
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Running product of fractions, kept exact in integers as long as it
/// fits; the estimate then comes out exact whenever the multiplier chain
/// telescopes (the saturated-k regime). Falls back to the log-space value
/// once 128-bit headroom runs out.
struct RationalProduct {
    num: u128,
    den: u128,
    exact: bool,
}

impl RationalProduct {
    fn one() -> RationalProduct {
        RationalProduct {
            num: 1,
            den: 1,
            exact: true,
        }
    }

    fn multiply(&mut self, num: u64, den: u64) {
        if !self.exact {
            return;
        }
        let g1 = gcd(self.num, den as u128);
        let g2 = gcd(num as u128, self.den);
        let (n1, d2) = (self.num / g1, den as u128 / g1);
        let (n2, d1) = (num as u128 / g2, self.den / g2);
        match (n1.checked_mul(n2), d1.checked_mul(d2)) {
            (Some(n), Some(d)) => {
                let g = gcd(n, d);
                self.num = n / g;
                self.den = d / g;
            }
            _ => self.exact = false,
        }
    }

    fn value(&self, log2_fallback: f64) -> f64 {
        if self.exact {
            self.num as f64 / self.den as f64
        } else {
            log2_fallback.exp2()
        }
    }
}

/// Estimates the model count from `runs` independent sampling runs: per
/// level step, all observed descendant counts are pooled across runs and
/// averaged, and the estimate is the product of those averages. Fresh
/// oracles come from `factory` (one per run), run seeds derive from
/// `cfg.seed`, and the result is independent of `jobs`.
pub fn estimate_count(
    formula: &Formula,
    cfg: &SamplerConfig,
    runs: u64,
    factory: &dyn OracleFactory,
    jobs: usize,
) -> Result<ZEstimate, SamplerError> {
    if runs == 0 {
        return Err(SamplerError::InvalidConfig(
            "estimation needs at least one run".into(),
        ));
    }
    cfg.validate(formula)?;

    let run_one = |run_index: u64| -> Result<(Vec<Vec<u32>>, bool, u64), SamplerError> {
        let seed = run_seed(cfg.seed, run_index);
        let mut oracle = factory.create(seed);
        let run_cfg = SamplerConfig {
            seed,
            record_level_stats: true,
            ..cfg.clone()
        };
        let record = search_tree_sampler(formula, &run_cfg, oracle.as_mut())?;
        let satisfiable = record.satisfiable();
        let calls = record.oracle_stats.total_calls;
        Ok((record.per_level_descendant_counts, satisfiable, calls))
    };

    let results: Vec<Result<(Vec<Vec<u32>>, bool, u64), SamplerError>> = if jobs <= 1 {
        (0..runs).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| SamplerError::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            (0..runs).into_par_iter().map(run_one).collect()
        })
    };

    let levels = cfg.num_levels(formula) as usize;
    let mut pooled_sum = vec![0u64; levels];
    let mut pooled_cnt = vec![0u64; levels];
    let mut per_run_log2 = Vec::with_capacity(runs as usize);
    let mut total_calls = 0u64;
    for result in results {
        let (counts, satisfiable, calls) = result?;
        total_calls += calls;
        if !satisfiable {
            return Ok(ZEstimate::unsatisfiable(runs, total_calls));
        }
        debug_assert_eq!(counts.len(), levels);
        let mut run_log2 = 0.0f64;
        for (level, observed) in counts.iter().enumerate() {
            let sum: u64 = observed.iter().map(|&c| u64::from(c)).sum();
            pooled_sum[level] += sum;
            pooled_cnt[level] += observed.len() as u64;
            run_log2 += (sum as f64 / observed.len() as f64).log2();
        }
        per_run_log2.push(run_log2);
    }

    let mut multipliers = Vec::with_capacity(levels);
    let mut log2_estimate = 0.0f64;
    let mut product = RationalProduct::one();
    for level in 0..levels {
        let multiplier = pooled_sum[level] as f64 / pooled_cnt[level] as f64;
        log2_estimate += multiplier.log2();
        product.multiply(pooled_sum[level], pooled_cnt[level]);
        multipliers.push(multiplier);
    }
    Ok(ZEstimate {
        satisfiable: true,
        log2_estimate: Some(log2_estimate),
        estimate: product.value(log2_estimate),
        multipliers,
        per_run_log2,
        runs_averaged: runs,
        oracle_calls: total_calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::parse_dimacs;
    use crate::instances;
    use crate::oracle::{BruteForceOracle, CdclFactory, CdclOracle};

    fn factory(f: &Formula) -> CdclFactory {
        CdclFactory::new(f.clone(), None)
    }

    #[test]
    fn two_var_clause_counts_exactly_three() {
        let f = parse_dimacs("p cnf 2 1\n1 2 0\n").unwrap();
        let cfg = SamplerConfig::new(2, 5);
        let z = estimate_count(&f, &cfg, 1, &factory(&f), 1).unwrap();
        assert!(z.satisfiable);
        assert_eq!(z.multipliers, vec![2.0, 1.5]);
        assert_eq!(z.estimate, 3.0);
        assert!((z.log2_estimate.unwrap() - 3.0f64.log2()).abs() < 1e-12);
        assert_eq!(z.per_run_log2.len(), 1);
        assert_eq!(z.runs_averaged, 1);
        assert!(z.oracle_calls > 0);
    }

    #[test]
    fn saturating_k_reproduces_exact_counts() {
        for seed in 0..25u64 {
            let f = instances::gen_rand3sat(7, 18, seed);
            let z_exact = exact_count_bruteforce(&f).unwrap();
            let cfg = SamplerConfig::new(1 << 7, seed);
            let z = estimate_count(&f, &cfg, 2, &factory(&f), 1).unwrap();
            if z_exact == 0 {
                assert!(!z.satisfiable);
                assert_eq!(z.estimate, 0.0);
                assert_eq!(z.log2_estimate, None);
                assert!(z.multipliers.is_empty());
            } else {
                assert_eq!(z.estimate, z_exact as f64, "seed {seed}");
            }
        }
    }

    #[test]
    fn unsat_estimate_is_zero() {
        let f = parse_dimacs("p cnf 2 4\n1 0\n-1 0\n2 0\n-2 0\n").unwrap();
        let cfg = SamplerConfig::new(4, 1);
        let z = estimate_count(&f, &cfg, 3, &factory(&f), 1).unwrap();
        assert!(!z.satisfiable);
        assert_eq!(z.estimate, 0.0);
        assert_eq!(z.runs_averaged, 3);
    }

    #[test]
    fn multipliers_stay_within_fanout_bounds() {
        for seed in 30..45u64 {
            let f = instances::gen_rand3sat(10, 28, seed);
            for level_bits in [1u32, 2, 3] {
                let cfg = SamplerConfig {
                    k: 3,
                    level_bits,
                    seed,
                    ordering: None,
                    record_level_stats: false,
                };
                let z = estimate_count(&f, &cfg, 2, &factory(&f), 1).unwrap();
                if !z.satisfiable {
                    continue;
                }
                let n = f.num_vars();
                for (idx, &m) in z.multipliers.iter().enumerate() {
                    let done = idx as u32 * level_bits;
                    let width = level_bits.min(n - done);
                    assert!(
                        (1.0..=(1u64 << width) as f64).contains(&m),
                        "multiplier {m} out of range at step {idx}"
                    );
                }
                assert!(z.estimate >= 1.0);
            }
        }
    }

    #[test]
    fn estimates_are_jobs_independent_and_tighten_with_k() {
        let f = instances::gen_rand3sat(12, 30, 77);
        let z_exact = exact_count_bruteforce(&f).unwrap();
        assert!(z_exact >= 1, "test instance must be satisfiable");
        let exact_log2 = (z_exact as f64).log2();
        let mut errors = Vec::new();
        let mut last_estimate = 0.0;
        for k in [2u64, 10, 1 << 12] {
            let cfg = SamplerConfig::new(k, 1234);
            let sequential = estimate_count(&f, &cfg, 6, &factory(&f), 1).unwrap();
            let parallel = estimate_count(&f, &cfg, 6, &factory(&f), 4).unwrap();
            assert_eq!(sequential, parallel);
            errors.push((sequential.log2_estimate.unwrap() - exact_log2).abs());
            last_estimate = sequential.estimate;
        }
        // k = 4096 saturates every level set, so the integer product
        // telescopes to the true count.
        assert_eq!(last_estimate, z_exact as f64, "saturated estimate must be exact");
        assert!(errors[2] < 1e-9, "saturated log2 drifts only by rounding");
        assert!(errors[1] <= errors[0] + 1.0, "larger k should not blow up error");
    }

    #[test]
    fn enumeration_agrees_with_bruteforce() {
        let mut checked = 0;
        for seed in 0..200u64 {
            let n = 8 + (seed % 9) as u32; // 8..=16
            let m = 2 * n + (seed % 13) as u32;
            let f = instances::gen_rand3sat(n, m, seed ^ 0x51ce);
            let mut brute = enumerate_all(&f, DEFAULT_BRUTE_CAP).unwrap();
            brute.sort();
            let mut oracle = CdclOracle::new(&f, seed, None);
            let outcome = exact_count_enumerate(&f, &mut oracle, 100_000).unwrap();
            assert_eq!(outcome.count(), Some(brute.len() as u64), "seed {seed}");
            let mut sorted = outcome.solutions().to_vec();
            sorted.sort();
            assert_eq!(sorted, brute, "seed {seed}");
            checked += 1;
        }
        assert_eq!(checked, 200);
    }

    #[test]
    fn enumeration_cap_reports_exceeded_with_witnesses() {
        let f = parse_dimacs("p cnf 4 1\n1 2 3 4 0\n").unwrap(); // Z = 15
        let mut oracle = BruteForceOracle::new(&f, DEFAULT_BRUTE_CAP).unwrap();
        let outcome = exact_count_enumerate(&f, &mut oracle, 10).unwrap();
        assert!(outcome.is_exceeded());
        assert_eq!(outcome.count(), None);
        assert_eq!(outcome.solutions().len(), 11);
        let mut fresh = BruteForceOracle::new(&f, DEFAULT_BRUTE_CAP).unwrap();
        let full = exact_count_enumerate(&f, &mut fresh, 15).unwrap();
        assert_eq!(full.count(), Some(15));
    }

    #[test]
    fn asym_barrier_counts_match_closed_form() {
        for (b, l) in [(3u32, 2u32), (5, 3), (4, 4)] {
            let f = instances::gen_asym_xor_barrier(b, l);
            let mut oracle = CdclOracle::new(&f, 0, None);
            let outcome = exact_count_enumerate(&f, &mut oracle, 1 << (l + 1)).unwrap();
            assert_eq!(outcome.count(), Some((1u64 << l) + 1));
        }
    }

    #[test]
    fn rational_product_survives_overflow() {
        let mut p = RationalProduct::one();
        for _ in 0..20 {
            p.multiply(u64::MAX, 1);
        }
        assert!(!p.exact);
        // Once inexact the reported value comes from the log-space
        // accumulator, saturating to infinity past the float range.
        assert_eq!(p.value(10.0), 1024.0);
        assert_eq!(p.value(20.0 * 64.0), f64::INFINITY);

        let mut q = RationalProduct::one();
        q.multiply(6, 4);
        q.multiply(10, 3);
        assert!(q.exact);
        assert_eq!(q.value(0.0), 5.0);
    }
}
