//! Level-wise search-tree sampling of SAT solutions.
//!
//! The search tree over a variable ordering is explored ⌈n/ℓ⌉ levels at a
//! time: from a set Φ of level-i prefixes, a bounded number of members is
//! selected uniformly without replacement and each selected member's
//! complete descendant set (the level-(i+ℓ) prefixes extending it that
//! still admit a solution) is enumerated through repeated oracle queries
//! with blocking clauses. The final level's prefixes are full solutions.
//! Small descendant fan-out (M = 2^ℓ) bounds how non-uniform membership
//! probabilities can get; enumeration degenerates to exact when the
//! selection budget k exceeds every level's width.

use crate::cnf::{Assignment, Clause, Formula, Lit, VariableOrdering};
use crate::oracle::{
    OracleError, OracleFactory, OracleQuery, OracleResult, OracleStats, SatOracle,
};
use crate::rng::{mix64, rng_from_seed, run_seed, sample_without_replacement, SeededRng};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("prefix at level {level} admits no solution (not a pseudosolution)")]
    NotAPseudosolution { level: u32 },
    #[error("cannot sample from an empty level set")]
    EmptyLevelSet,
    #[error("level {level} is already complete for a formula with {num_vars} variables")]
    LevelExhausted { level: u32, num_vars: u32 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A level-i prefix assignment (values for ordering positions 1..=i) that
/// can be completed to a full solution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PseudoSolution {
    prefix: Vec<bool>,
}

impl PseudoSolution {
    /// The empty prefix (level 0); trivially extendable whenever the
    /// formula is satisfiable.
    pub fn root() -> PseudoSolution {
        PseudoSolution { prefix: Vec::new() }
    }

    pub fn from_bits(prefix: Vec<bool>) -> PseudoSolution {
        PseudoSolution { prefix }
    }

    pub fn level(&self) -> u32 {
        self.prefix.len() as u32
    }

    pub fn bits(&self) -> &[bool] {
        &self.prefix
    }

    /// This prefix extended by `suffix`.
    pub fn extended(&self, suffix: &[bool]) -> PseudoSolution {
        let mut prefix = Vec::with_capacity(self.prefix.len() + suffix.len());
        prefix.extend_from_slice(&self.prefix);
        prefix.extend_from_slice(suffix);
        PseudoSolution { prefix }
    }

    /// The prefix truncated back to `level` (its ancestor).
    pub fn ancestor(&self, level: u32) -> PseudoSolution {
        assert!(level <= self.level());
        PseudoSolution {
            prefix: self.prefix[..level as usize].to_vec(),
        }
    }

    /// The assumption literals pinning this prefix: position p of the
    /// ordering carries value `prefix[p-1]`.
    pub fn assumptions(&self, ordering: &VariableOrdering) -> Vec<Lit> {
        self.prefix
            .iter()
            .enumerate()
            .map(|(idx, &bit)| Lit::new(ordering.var_at(idx as u32 + 1), bit))
            .collect()
    }

    /// Full assignment; the prefix must cover every position.
    pub fn to_assignment(&self, ordering: &VariableOrdering) -> Assignment {
        assert_eq!(self.prefix.len(), ordering.len(), "prefix is not total");
        let mut a = Assignment::all_false(ordering.len() as u32);
        for (idx, &bit) in self.prefix.iter().enumerate() {
            a.set(ordering.var_at(idx as u32 + 1), bit);
        }
        a
    }

    pub fn bitstring(&self) -> String {
        self.prefix
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

impl std::fmt::Display for PseudoSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.bitstring())
    }
}

/// Duplicate-free set of pseudosolutions of one level, kept in canonical
/// (lexicographic-prefix) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet {
    level: u32,
    members: Vec<PseudoSolution>,
}

impl LevelSet {
    /// Φ_0 = { ⊤ }.
    pub fn root() -> LevelSet {
        LevelSet {
            level: 0,
            members: vec![PseudoSolution::root()],
        }
    }

    pub fn empty(level: u32) -> LevelSet {
        LevelSet {
            level,
            members: Vec::new(),
        }
    }

    /// Builds a set from members that must share `level`; sorts and
    /// rejects duplicates.
    pub fn new(level: u32, mut members: Vec<PseudoSolution>) -> Result<LevelSet, SamplerError> {
        if members.iter().any(|m| m.level() != level) {
            return Err(SamplerError::InvalidConfig(format!(
                "level set members must all be at level {level}"
            )));
        }
        members.sort();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(SamplerError::InvalidConfig(
                "level set members must be distinct".into(),
            ));
        }
        Ok(LevelSet { level, members })
    }

    fn from_sorted(level: u32, members: Vec<PseudoSolution>) -> LevelSet {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(members.iter().all(|m| m.level() == level));
        LevelSet { level, members }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn members(&self) -> &[PseudoSolution] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Parameters of one sampling run.
///
/// `k` bounds how many members survive each level (the uniformity knob),
/// `level_bits` is ℓ with fan-out M = 2^ℓ. `ordering` of `None` means the
/// identity ordering. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub k: u64,
    pub level_bits: u32,
    pub seed: u64,
    pub ordering: Option<VariableOrdering>,
    pub record_level_stats: bool,
}

impl SamplerConfig {
    pub fn new(k: u64, seed: u64) -> SamplerConfig {
        SamplerConfig {
            k,
            level_bits: 1,
            seed,
            ordering: None,
            record_level_stats: false,
        }
    }

    pub fn validate(&self, formula: &Formula) -> Result<(), SamplerError> {
        if self.k == 0 {
            return Err(SamplerError::InvalidConfig("k must be at least 1".into()));
        }
        if self.level_bits == 0 {
            return Err(SamplerError::InvalidConfig(
                "level_bits must be at least 1".into(),
            ));
        }
        if let Some(ordering) = &self.ordering {
            if ordering.len() != formula.num_vars() as usize {
                return Err(SamplerError::InvalidConfig(format!(
                    "ordering covers {} variables but the formula has {}",
                    ordering.len(),
                    formula.num_vars()
                )));
            }
        }
        Ok(())
    }

    pub fn resolve_ordering(&self, formula: &Formula) -> VariableOrdering {
        self.ordering
            .clone()
            .unwrap_or_else(|| VariableOrdering::identity(formula.num_vars()))
    }

    /// Number of level steps L = ⌈n/ℓ⌉.
    pub fn num_levels(&self, formula: &Formula) -> u32 {
        formula.num_vars().div_ceil(self.level_bits)
    }
}

/// Everything one run produced. `oracle_stats` is the oracle activity
/// incurred by the run itself (a before/after delta, so a reused oracle
/// still yields per-run numbers).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub final_set: LevelSet,
    /// `per_level_descendant_counts[step][j]` = |D| of the j-th selected
    /// member (in selection order); recorded when
    /// `SamplerConfig::record_level_stats` is on.
    pub per_level_descendant_counts: Vec<Vec<u32>>,
    /// |Φ| after each level step.
    pub level_sizes: Vec<u64>,
    pub oracle_stats: OracleStats,
}

impl RunRecord {
    /// An unsatisfiable formula yields an empty final set.
    pub fn satisfiable(&self) -> bool {
        !self.final_set.is_empty()
    }
}

/// Enumerates D(s): every pseudosolution `min(level_bits, n - level)`
/// levels below `s` that extends it, in canonical order.
///
/// Costs exactly |D(s)| + 1 oracle calls: one SAT answer per descendant,
/// then one UNSAT with all of them blocked. Blocking clauses range over
/// the suffix positions only (the prefix is already pinned by
/// assumptions), so with ℓ = 1 they are unit clauses.
pub fn descendants(
    formula: &Formula,
    s: &PseudoSolution,
    level_bits: u32,
    ordering: &VariableOrdering,
    oracle: &mut dyn SatOracle,
) -> Result<Vec<PseudoSolution>, SamplerError> {
    let n = formula.num_vars();
    let level = s.level();
    if level >= n {
        return Err(SamplerError::LevelExhausted {
            level,
            num_vars: n,
        });
    }
    let width = level_bits.min(n - level);
    let mut query = OracleQuery::new(s.assumptions(ordering), Vec::new());
    let mut suffixes: Vec<Vec<bool>> = Vec::new();
    loop {
        match oracle.solve(&query)? {
            OracleResult::Sat(model) => {
                let suffix: Vec<bool> = (0..width)
                    .map(|j| model.value(ordering.var_at(level + 1 + j)))
                    .collect();
                debug_assert!(!suffixes.contains(&suffix), "oracle ignored a block");
                query.extra_clauses.push(
                    Clause::new(suffix.iter().enumerate().map(|(j, &bit)| {
                        Lit::new(ordering.var_at(level + 1 + j as u32), !bit)
                    }))
                    .expect("suffix is non-empty"),
                );
                suffixes.push(suffix);
                assert!(
                    suffixes.len() <= 1usize << width,
                    "more descendants than the fan-out bound"
                );
            }
            OracleResult::Unsat => {
                if suffixes.is_empty() {
                    return Err(SamplerError::NotAPseudosolution { level });
                }
                break;
            }
        }
    }
    suffixes.sort();
    Ok(suffixes.iter().map(|d| s.extended(d)).collect())
}

fn level_step(
    formula: &Formula,
    phi: &LevelSet,
    k: u64,
    level_bits: u32,
    ordering: &VariableOrdering,
    oracle: &mut dyn SatOracle,
    rng: &mut SeededRng,
) -> Result<(LevelSet, Vec<u32>), SamplerError> {
    if phi.is_empty() {
        return Err(SamplerError::EmptyLevelSet);
    }
    let take = (k.min(phi.len() as u64)) as usize;
    let selected = sample_without_replacement(rng, phi.len(), take);

    // Enumerate in member order (adjacent prefixes share oracle work);
    // report counts in selection order. Alternating the direction per
    // step starts each level where the previous one ended, so a
    // two-branch set costs one cold trail rebuild per level, not two.
    let mut schedule: Vec<(usize, usize)> =
        selected.iter().copied().enumerate().collect();
    schedule.sort_by_key(|&(_, member)| member);
    if (phi.level() / level_bits) % 2 == 1 {
        schedule.reverse();
    }

    let mut counts = vec![0u32; take];
    let mut members: Vec<PseudoSolution> = Vec::new();
    for (position, member) in schedule {
        let d = descendants(formula, &phi.members()[member], level_bits, ordering, oracle)?;
        counts[position] = d.len() as u32;
        members.extend(d);
    }
    // Distinct parents yield disjoint descendant sets, and member order
    // implies descendant blocks are already mutually sorted.
    members.sort();
    debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
    let next_level = phi.level() + level_bits.min(formula.num_vars() - phi.level());
    Ok((LevelSet::from_sorted(next_level, members), counts))
}

/// One selection-and-expansion step: draws min{k, |Φ|} members of `phi`
/// uniformly without replacement (seeded by `cfg.seed`) and returns the
/// union of their descendant sets plus the observed |D| values in
/// selection order.
pub fn black_box_sampler(
    formula: &Formula,
    phi: &LevelSet,
    cfg: &SamplerConfig,
    oracle: &mut dyn SatOracle,
) -> Result<(LevelSet, Vec<u32>), SamplerError> {
    cfg.validate(formula)?;
    let ordering = cfg.resolve_ordering(formula);
    let mut rng = rng_from_seed(cfg.seed);
    level_step(
        formula,
        phi,
        cfg.k,
        cfg.level_bits,
        &ordering,
        oracle,
        &mut rng,
    )
}

/// One complete run: an initial satisfiability check, then level steps
/// from Φ_0 = {⊤} down to level n. The final set is a duplicate-free
/// subset of the solutions with at least min{k, Z} members.
pub fn search_tree_sampler(
    formula: &Formula,
    cfg: &SamplerConfig,
    oracle: &mut dyn SatOracle,
) -> Result<RunRecord, SamplerError> {
    cfg.validate(formula)?;
    let ordering = cfg.resolve_ordering(formula);
    let before = oracle.stats();
    let n = formula.num_vars();

    if !oracle.solve(&OracleQuery::default())?.is_sat() {
        return Ok(RunRecord {
            final_set: LevelSet::empty(n),
            per_level_descendant_counts: Vec::new(),
            level_sizes: Vec::new(),
            oracle_stats: oracle.stats().since(before),
        });
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut phi = LevelSet::root();
    let mut per_level = Vec::new();
    let mut level_sizes = Vec::new();
    while phi.level() < n {
        let (next, counts) = level_step(
            formula,
            &phi,
            cfg.k,
            cfg.level_bits,
            &ordering,
            oracle,
            &mut rng,
        )?;
        level_sizes.push(next.len() as u64);
        if cfg.record_level_stats {
            per_level.push(counts);
        }
        phi = next;
    }
    Ok(RunRecord {
        final_set: phi,
        per_level_descendant_counts: per_level,
        level_sizes,
        oracle_stats: oracle.stats().since(before),
    })
}

/// Pooled samples from repeated runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrawOutcome {
    pub satisfiable: bool,
    /// Concatenation of per-run draws, in run order; at least the
    /// requested count when satisfiable (the last run is kept whole).
    pub samples: Vec<Assignment>,
    pub runs: u64,
    pub per_run_calls: Vec<u64>,
    pub total_calls: u64,
}

/// Runs [`search_tree_sampler`] with derived per-run seeds until at least
/// `target` samples are pooled; each run contributes min{k, |Φ_L|} of its
/// final members, drawn without replacement. A fresh oracle is created
/// per run, so results are independent of `jobs` (runs may be computed
/// speculatively in parallel but are consumed strictly in run order).
pub fn draw_samples(
    formula: &Formula,
    cfg: &SamplerConfig,
    target: u64,
    factory: &dyn OracleFactory,
    jobs: usize,
) -> Result<DrawOutcome, SamplerError> {
    if target == 0 {
        return Err(SamplerError::InvalidConfig(
            "sample target must be at least 1".into(),
        ));
    }
    cfg.validate(formula)?;
    let ordering = cfg.resolve_ordering(formula);

    let run_one = |run_index: u64| -> Result<(Vec<Assignment>, u64), SamplerError> {
        let seed = run_seed(cfg.seed, run_index);
        let mut oracle = factory.create(seed);
        let run_cfg = SamplerConfig {
            seed,
            ..cfg.clone()
        };
        let record = search_tree_sampler(formula, &run_cfg, oracle.as_mut())?;
        let calls = record.oracle_stats.total_calls;
        if !record.satisfiable() {
            return Ok((Vec::new(), calls));
        }
        // The final draw gets its own stream so it cannot collide with
        // the level-selection stream seeded directly by `seed`.
        let mut rng = rng_from_seed(mix64(seed));
        let members = record.final_set.members();
        let take = (cfg.k.min(members.len() as u64)) as usize;
        let picked = sample_without_replacement(&mut rng, members.len(), take);
        let samples = picked
            .into_iter()
            .map(|i| members[i].to_assignment(&ordering))
            .collect();
        Ok((samples, calls))
    };

    let mut outcome = DrawOutcome {
        satisfiable: true,
        samples: Vec::new(),
        runs: 0,
        per_run_calls: Vec::new(),
        total_calls: 0,
    };
    let consume = |outcome: &mut DrawOutcome,
                       result: Result<(Vec<Assignment>, u64), SamplerError>|
     -> Result<bool, SamplerError> {
        let (samples, calls) = result?;
        outcome.runs += 1;
        outcome.per_run_calls.push(calls);
        outcome.total_calls += calls;
        if samples.is_empty() {
            outcome.satisfiable = false;
            return Ok(true);
        }
        outcome.samples.extend(samples);
        Ok(outcome.samples.len() as u64 >= target)
    };

    if jobs <= 1 {
        let mut run_index = 0;
        loop {
            if consume(&mut outcome, run_one(run_index))? {
                return Ok(outcome);
            }
            run_index += 1;
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SamplerError::InvalidConfig(format!("worker pool: {e}")))?;
    let batch = (jobs * 8) as u64;
    let mut next_run = 0u64;
    loop {
        let indices: Vec<u64> = (next_run..next_run + batch).collect();
        next_run += batch;
        let results: Vec<Result<(Vec<Assignment>, u64), SamplerError>> = pool.install(|| {
            use rayon::prelude::*;
            indices.into_par_iter().map(run_one).collect()
        });
        for result in results {
            if consume(&mut outcome, result)? {
                return Ok(outcome);
            }
        }
    }
}
