//! Baseline MCMC samplers over the clause-violation energy landscape:
//! fixed-temperature Metropolis and Gibbs chains with rejection, and a
//! WalkSAT-flavored hybrid that interleaves focused moves with Metropolis
//! steps. Also the closed-form Boltzmann energy profile for the XOR
//! barrier family, used to validate the chains against exact numbers.
//!
//! The hybrid is a deliberately simple stand-in for solution-focused
//! local search; only its qualitative biases are relied on.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cnf::{Assignment, EnergyTracker, Formula, Var};
use crate::rng::{rng_from_seed, SeededRng};

pub const DEFAULT_BURN_IN: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),
}

/// Fixed-temperature chain schedule. Ergodicity needs T > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannParams {
    pub temperature: f64,
    /// Steps discarded before any state is recorded.
    pub burn_in: u64,
    /// Record one state every this many post-burn-in steps.
    pub thinning: u64,
    /// Total step budget, burn-in included.
    pub max_steps: u64,
}

impl BoltzmannParams {
    /// Conventional defaults: 10⁷ burn-in steps and a thinning interval
    /// of 10·n (the interval has to grow with the flip neighborhood).
    pub fn for_formula(temperature: f64, formula: &Formula) -> BoltzmannParams {
        BoltzmannParams {
            temperature,
            burn_in: DEFAULT_BURN_IN,
            thinning: 10 * u64::from(formula.num_vars()),
            max_steps: DEFAULT_BURN_IN + 100_000_000,
        }
    }

    fn validate(&self) -> Result<(), BaselineError> {
        if !(self.temperature > 0.0) {
            return Err(BaselineError::InvalidParams(
                "temperature must be positive".into(),
            ));
        }
        if self.thinning == 0 {
            return Err(BaselineError::InvalidParams(
                "thinning interval must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Counters describing one chain execution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub steps_used: u64,
    /// Metropolis proposals and acceptances (the hybrid counts only its
    /// Metropolis-branch steps here).
    pub sa_proposals: u64,
    pub sa_accepted: u64,
    pub acceptance_rate: f64,
    /// States recorded on the thinning schedule (every step, for the
    /// hybrid).
    pub recorded: u64,
    pub emitted: u64,
    /// emitted / recorded: the rejection-sampling yield.
    pub hit_rate: f64,
    /// energy_histogram[e] = number of recorded states with energy e
    /// (trailing zeros trimmed).
    pub energy_histogram: Vec<u64>,
    pub restarts: u64,
    /// True when the step budget ran out before the requested number of
    /// samples was emitted.
    pub truncated: bool,
}

/// A single-flip Metropolis chain targeting e^{−E/T}. The energy is
/// delta-maintained, never recomputed from scratch.
pub struct SaChain {
    tracker: EnergyTracker,
    rng: SeededRng,
    /// accept[d] = e^{−d/T} for an uphill move of d.
    accept: Vec<f64>,
    num_vars: Var,
    steps: u64,
    proposals: u64,
    accepted: u64,
}

fn random_assignment(num_vars: Var, rng: &mut SeededRng) -> Assignment {
    Assignment::new((0..num_vars).map(|_| rng.gen::<bool>()).collect())
}

fn uphill_table(temperature: f64, num_clauses: usize) -> Vec<f64> {
    (0..=num_clauses)
        .map(|d| (-(d as f64) / temperature).exp())
        .collect()
}

impl SaChain {
    /// Chain started from a uniformly random assignment drawn from the
    /// chain's own seeded stream.
    pub fn new(formula: &Formula, temperature: f64, seed: u64) -> Result<SaChain, BaselineError> {
        let mut rng = rng_from_seed(seed);
        let start = random_assignment(formula.num_vars(), &mut rng);
        Self::build(formula, temperature, rng, start)
    }

    /// Chain started from a caller-chosen assignment (for landscape
    /// experiments that pin the starting basin).
    pub fn with_start(
        formula: &Formula,
        temperature: f64,
        seed: u64,
        start: Assignment,
    ) -> Result<SaChain, BaselineError> {
        Self::build(formula, temperature, rng_from_seed(seed), start)
    }

    fn build(
        formula: &Formula,
        temperature: f64,
        rng: SeededRng,
        start: Assignment,
    ) -> Result<SaChain, BaselineError> {
        if !(temperature > 0.0) {
            return Err(BaselineError::InvalidParams(
                "temperature must be positive".into(),
            ));
        }
        let tracker = EnergyTracker::new(formula, start)
            .map_err(|e| BaselineError::InvalidParams(e.to_string()))?;
        Ok(SaChain {
            tracker,
            rng,
            accept: uphill_table(temperature, formula.clauses().len()),
            num_vars: formula.num_vars(),
            steps: 0,
            proposals: 0,
            accepted: 0,
        })
    }

    /// One Metropolis step: propose a uniformly random flip, accept
    /// downhill/flat moves outright and uphill moves with probability
    /// e^{−ΔE/T}. Rejected proposals still advance the step counter
    /// (self-loop), keeping the chain's law intact.
    pub fn step(&mut self) -> bool {
        self.steps += 1;
        self.proposals += 1;
        let accepted = sa_move(
            &mut self.tracker,
            &mut self.rng,
            &self.accept,
            self.num_vars,
        );
        self.accepted += u64::from(accepted);
        accepted
    }

    pub fn energy(&self) -> u64 {
        self.tracker.energy()
    }

    pub fn assignment(&self) -> &Assignment {
        self.tracker.assignment()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// The shared Metropolis update; the uniform accept/reject draw happens
/// only for strictly uphill proposals, so downhill steps cost one draw.
fn sa_move(
    tracker: &mut EnergyTracker,
    rng: &mut SeededRng,
    accept: &[f64],
    num_vars: Var,
) -> bool {
    let var = rng.gen_range(1..=num_vars);
    let delta = tracker.delta_energy(var);
    let accepted = delta <= 0 || rng.gen::<f64>() < accept[delta as usize];
    if accepted {
        tracker.flip(var);
    }
    accepted
}

/// A single-site Gibbs chain with the same stationary law as [`SaChain`]:
/// the chosen variable is resampled to 1 with probability
/// e^{−E₁/T} / (e^{−E₀/T} + e^{−E₁/T}).
pub struct GibbsChain {
    tracker: EnergyTracker,
    rng: SeededRng,
    /// set_one[d] = probability of resampling to 1 when E₁ − E₀ = d ≥ 0;
    /// negative differences use the complement.
    set_one: Vec<f64>,
    num_vars: Var,
    steps: u64,
}

impl GibbsChain {
    pub fn new(
        formula: &Formula,
        temperature: f64,
        seed: u64,
    ) -> Result<GibbsChain, BaselineError> {
        let mut rng = rng_from_seed(seed);
        let start = random_assignment(formula.num_vars(), &mut rng);
        Self::build(formula, temperature, rng, start)
    }

    pub fn with_start(
        formula: &Formula,
        temperature: f64,
        seed: u64,
        start: Assignment,
    ) -> Result<GibbsChain, BaselineError> {
        Self::build(formula, temperature, rng_from_seed(seed), start)
    }

    fn build(
        formula: &Formula,
        temperature: f64,
        rng: SeededRng,
        start: Assignment,
    ) -> Result<GibbsChain, BaselineError> {
        if !(temperature > 0.0) {
            return Err(BaselineError::InvalidParams(
                "temperature must be positive".into(),
            ));
        }
        let tracker = EnergyTracker::new(formula, start)
            .map_err(|e| BaselineError::InvalidParams(e.to_string()))?;
        let set_one = (0..=formula.clauses().len())
            .map(|d| 1.0 / (1.0 + (d as f64 / temperature).exp()))
            .collect();
        Ok(GibbsChain {
            tracker,
            rng,
            set_one,
            num_vars: formula.num_vars(),
            steps: 0,
        })
    }

    /// One heat-bath step; returns whether the variable changed.
    pub fn step(&mut self) -> bool {
        self.steps += 1;
        let var = self.rng.gen_range(1..=self.num_vars);
        let current = self.tracker.assignment().value(var);
        let flip_delta = self.tracker.delta_energy(var);
        // E₁ − E₀: the flip delta signed by which value we currently hold.
        let diff = if current { -flip_delta } else { flip_delta };
        let p_one = if diff >= 0 {
            self.set_one[diff as usize]
        } else {
            1.0 - self.set_one[(-diff) as usize]
        };
        let new_value = self.rng.gen::<f64>() < p_one;
        if new_value != current {
            self.tracker.flip(var);
            return true;
        }
        false
    }

    pub fn energy(&self) -> u64 {
        self.tracker.energy()
    }

    pub fn assignment(&self) -> &Assignment {
        self.tracker.assignment()
    }
}

fn record_state(
    energy: u64,
    histogram: &mut Vec<u64>,
    recorded: &mut u64,
) {
    let e = energy as usize;
    if histogram.len() <= e {
        histogram.resize(e + 1, 0);
    }
    histogram[e] += 1;
    *recorded += 1;
}

fn finish_diagnostics(mut d: ChainDiagnostics) -> ChainDiagnostics {
    while d.energy_histogram.last() == Some(&0) {
        d.energy_histogram.pop();
    }
    d.acceptance_rate = if d.sa_proposals > 0 {
        d.sa_accepted as f64 / d.sa_proposals as f64
    } else {
        0.0
    };
    d.hit_rate = if d.recorded > 0 {
        d.emitted as f64 / d.recorded as f64
    } else {
        0.0
    };
    d
}

/// Runs a Metropolis chain and keeps the recorded states that are
/// solutions (Boltzmann sampling with rejection): after `burn_in` steps,
/// the state is recorded every `thinning` steps and emitted iff its
/// energy is zero. Stops at `target` emissions or at the step budget,
/// whichever comes first.
pub fn sa_sample(
    formula: &Formula,
    params: &BoltzmannParams,
    target: u64,
    seed: u64,
) -> Result<(Vec<Assignment>, ChainDiagnostics), BaselineError> {
    params.validate()?;
    let mut chain = SaChain::new(formula, params.temperature, seed)?;
    let mut samples = Vec::new();
    let mut diag = ChainDiagnostics {
        steps_used: 0,
        sa_proposals: 0,
        sa_accepted: 0,
        acceptance_rate: 0.0,
        recorded: 0,
        emitted: 0,
        hit_rate: 0.0,
        energy_histogram: Vec::new(),
        restarts: 0,
        truncated: false,
    };
    while (samples.len() as u64) < target && chain.steps < params.max_steps {
        chain.step();
        if chain.steps > params.burn_in
            && (chain.steps - params.burn_in) % params.thinning == 0
        {
            record_state(chain.energy(), &mut diag.energy_histogram, &mut diag.recorded);
            if chain.energy() == 0 {
                samples.push(chain.assignment().clone());
                diag.emitted += 1;
            }
        }
    }
    diag.steps_used = chain.steps;
    diag.sa_proposals = chain.proposals;
    diag.sa_accepted = chain.accepted;
    diag.truncated = (samples.len() as u64) < target;
    Ok((samples, finish_diagnostics(diag)))
}

/// [`sa_sample`] with the Gibbs kernel instead of Metropolis; identical
/// recording and rejection protocol.
pub fn gibbs_sample(
    formula: &Formula,
    params: &BoltzmannParams,
    target: u64,
    seed: u64,
) -> Result<(Vec<Assignment>, ChainDiagnostics), BaselineError> {
    params.validate()?;
    let mut chain = GibbsChain::new(formula, params.temperature, seed)?;
    let mut samples = Vec::new();
    let mut diag = ChainDiagnostics {
        steps_used: 0,
        sa_proposals: 0,
        sa_accepted: 0,
        acceptance_rate: 0.0,
        recorded: 0,
        emitted: 0,
        hit_rate: 0.0,
        energy_histogram: Vec::new(),
        restarts: 0,
        truncated: false,
    };
    while (samples.len() as u64) < target && chain.steps < params.max_steps {
        chain.step();
        if chain.steps > params.burn_in
            && (chain.steps - params.burn_in) % params.thinning == 0
        {
            record_state(chain.energy(), &mut diag.energy_histogram, &mut diag.recorded);
            if chain.energy() == 0 {
                samples.push(chain.assignment().clone());
                diag.emitted += 1;
            }
        }
    }
    diag.steps_used = chain.steps;
    diag.truncated = (samples.len() as u64) < target;
    Ok((samples, finish_diagnostics(diag)))
}

/// Knobs of the focused/Metropolis hybrid.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridParams {
    /// Probability a step is a focused move on an unsatisfied clause.
    pub walk_prob: f64,
    /// Within a focused move, probability of flipping a uniformly random
    /// clause variable instead of the greedy (minimum-energy) one.
    pub noise: f64,
    /// Forced restart interval (steps since the last restart).
    pub restart_every: u64,
    /// Temperature of the Metropolis branch.
    pub temperature: f64,
    pub max_steps: u64,
}

impl HybridParams {
    /// Conventional half-and-half settings.
    pub fn defaults(formula: &Formula) -> HybridParams {
        HybridParams {
            walk_prob: 0.5,
            noise: 0.5,
            restart_every: 100 * u64::from(formula.num_vars()),
            temperature: 0.3,
            max_steps: 100_000_000,
        }
    }

    fn validate(&self) -> Result<(), BaselineError> {
        if !(0.0..=1.0).contains(&self.walk_prob) {
            return Err(BaselineError::InvalidParams(
                "walk_prob must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(BaselineError::InvalidParams(
                "noise must lie in [0, 1]".into(),
            ));
        }
        if !(self.temperature > 0.0) {
            return Err(BaselineError::InvalidParams(
                "temperature must be positive".into(),
            ));
        }
        if self.restart_every == 0 {
            return Err(BaselineError::InvalidParams(
                "restart interval must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The mixed chain: focused clause repair with probability `walk_prob`,
/// otherwise a Metropolis step. Exposed so experiments can drive it
/// step by step.
pub struct HybridChain {
    formula: Formula,
    tracker: EnergyTracker,
    rng: SeededRng,
    accept: Vec<f64>,
    params: HybridParams,
    steps: u64,
    steps_since_restart: u64,
    restarts: u64,
    sa_proposals: u64,
    sa_accepted: u64,
}

impl HybridChain {
    pub fn new(
        formula: &Formula,
        params: &HybridParams,
        seed: u64,
    ) -> Result<HybridChain, BaselineError> {
        params.validate()?;
        let mut rng = rng_from_seed(seed);
        let start = random_assignment(formula.num_vars(), &mut rng);
        let tracker = EnergyTracker::new(formula, start)
            .map_err(|e| BaselineError::InvalidParams(e.to_string()))?;
        Ok(HybridChain {
            formula: formula.clone(),
            tracker,
            rng,
            accept: uphill_table(params.temperature, formula.clauses().len()),
            params: params.clone(),
            steps: 0,
            steps_since_restart: 0,
            restarts: 0,
            sa_proposals: 0,
            sa_accepted: 0,
        })
    }

    /// Redraws the state uniformly at random.
    pub fn restart(&mut self) {
        let fresh = random_assignment(self.formula.num_vars(), &mut self.rng);
        self.tracker
            .reset(&self.formula, fresh)
            .expect("assignment width is fixed");
        self.steps_since_restart = 0;
        self.restarts += 1;
    }

    /// One chain step. The move-kind draw is skipped entirely when
    /// walk_prob = 0, so that setting it to zero reproduces the plain
    /// Metropolis chain draw-for-draw on the same seed.
    pub fn step(&mut self) {
        self.steps += 1;
        self.steps_since_restart += 1;
        let focused = self.params.walk_prob > 0.0
            && self.tracker.num_unsat() > 0
            && self.rng.gen_bool(self.params.walk_prob);
        if focused {
            self.focused_move();
        } else {
            self.sa_proposals += 1;
            let accepted = sa_move(
                &mut self.tracker,
                &mut self.rng,
                &self.accept,
                self.formula.num_vars(),
            );
            self.sa_accepted += u64::from(accepted);
        }
    }

    /// Pick a uniformly random unsatisfied clause; flip one of its
    /// variables — a random one with probability `noise`, otherwise the
    /// one whose flip leaves the lowest energy (ties to the lowest
    /// variable index).
    fn focused_move(&mut self) {
        let pick = self.rng.gen_range(0..self.tracker.num_unsat());
        let clause_idx = self.tracker.unsat_clause(pick) as usize;
        let clause = &self.formula.clauses()[clause_idx];
        let var = if self.rng.gen_bool(self.params.noise) {
            clause.literals()[self.rng.gen_range(0..clause.len())].var()
        } else {
            let mut best: Option<(i64, Var)> = None;
            for lit in clause.literals() {
                let v = lit.var();
                let delta = self.tracker.delta_energy(v);
                match best {
                    Some((d, bv)) if (delta, v) >= (d, bv) => {}
                    _ => best = Some((delta, v)),
                }
            }
            best.expect("unsatisfied clauses are non-empty").1
        };
        self.tracker.flip(var);
    }

    pub fn energy(&self) -> u64 {
        self.tracker.energy()
    }

    pub fn assignment(&self) -> &Assignment {
        self.tracker.assignment()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Runs the hybrid chain, emitting the state every time it is a solution
/// and restarting right after (and also every `restart_every` steps).
/// Emission is on-hit rather than thinned: the chain is a solution
/// finder, not a stationary sampler, which is exactly the bias the
/// experiments probe.
pub fn hybrid_sample(
    formula: &Formula,
    params: &HybridParams,
    target: u64,
    seed: u64,
) -> Result<(Vec<Assignment>, ChainDiagnostics), BaselineError> {
    params.validate()?;
    let mut chain = HybridChain::new(formula, params, seed)?;
    let mut samples = Vec::new();
    let mut diag = ChainDiagnostics {
        steps_used: 0,
        sa_proposals: 0,
        sa_accepted: 0,
        acceptance_rate: 0.0,
        recorded: 0,
        emitted: 0,
        hit_rate: 0.0,
        energy_histogram: Vec::new(),
        restarts: 0,
        truncated: false,
    };
    // A restart (or the initial draw) can itself land on a solution.
    while (samples.len() as u64) < target && chain.energy() == 0 {
        samples.push(chain.assignment().clone());
        diag.emitted += 1;
        chain.restart();
    }
    while (samples.len() as u64) < target && chain.steps < params.max_steps {
        if chain.steps_since_restart >= params.restart_every {
            chain.restart();
        }
        chain.step();
        record_state(chain.energy(), &mut diag.energy_histogram, &mut diag.recorded);
        while (samples.len() as u64) < target && chain.energy() == 0 {
            samples.push(chain.assignment().clone());
            diag.emitted += 1;
            chain.restart();
        }
    }
    diag.steps_used = chain.steps;
    diag.sa_proposals = chain.sa_proposals;
    diag.sa_accepted = chain.sa_accepted;
    diag.restarts = chain.restarts;
    diag.truncated = (samples.len() as u64) < target;
    Ok((samples, finish_diagnostics(diag)))
}

/// Exact Boltzmann energy histogram for the XOR barrier family: the
/// number of assignments at energy i is d(i) = 2·C(b, i), so
/// P[E = i] = 2·C(b,i)·e^{−i/T} / Z(T) with Z(T) = 2·(1+e^{−1/T})^b.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyProfile {
    pub b: u32,
    pub temperature: f64,
    /// log_probabilities[i] = ln P[E = i], i ∈ [0, b].
    pub log_probabilities: Vec<f64>,
}

impl EnergyProfile {
    pub fn probability(&self, i: usize) -> f64 {
        self.log_probabilities[i].exp()
    }
}

/// ln C(b, i): exact 128-bit integer arithmetic while it fits, digit-sum
/// logarithms beyond that.
fn ln_binomial(b: u32, i: u32) -> f64 {
    debug_assert!(i <= b);
    let i = i.min(b - i);
    let mut c: u128 = 1;
    for j in 1..=i {
        match c.checked_mul(u128::from(b - j + 1)) {
            // The running value is itself a binomial, so the division is
            // exact at every step.
            Some(next) => c = next / u128::from(j),
            None => {
                return (1..=i)
                    .map(|j| (f64::from(b - j + 1)).ln() - f64::from(j).ln())
                    .sum();
            }
        }
    }
    (c as f64).ln()
}

pub fn xor_barrier_energy_profile(b: u32, temperature: f64) -> Result<EnergyProfile, BaselineError> {
    if b < 1 {
        return Err(BaselineError::InvalidParams("b must be at least 1".into()));
    }
    if !(temperature > 0.0) {
        return Err(BaselineError::InvalidParams(
            "temperature must be positive".into(),
        ));
    }
    let ln2 = std::f64::consts::LN_2;
    let log_z = ln2 + f64::from(b) * (-1.0 / temperature).exp().ln_1p();
    let log_probabilities = (0..=b)
        .map(|i| ln2 + ln_binomial(b, i) - f64::from(i) / temperature - log_z)
        .collect();
    Ok(EnergyProfile {
        b,
        temperature,
        log_probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{energy, is_solution, parse_dimacs, Clause, Lit};
    use crate::instances;
    use crate::stats::chi2_tail;

    fn short_params(temperature: f64) -> BoltzmannParams {
        BoltzmannParams {
            temperature,
            burn_in: 1_000,
            thinning: 5,
            max_steps: 2_000_000,
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let f = parse_dimacs("p cnf 1 1\n1 0\n").unwrap();
        let bad_t = BoltzmannParams {
            temperature: 0.0,
            ..short_params(1.0)
        };
        assert!(sa_sample(&f, &bad_t, 1, 0).is_err());
        let bad_k = BoltzmannParams {
            thinning: 0,
            ..short_params(1.0)
        };
        assert!(gibbs_sample(&f, &bad_k, 1, 0).is_err());
        let mut bad_h = HybridParams::defaults(&f);
        bad_h.noise = 1.5;
        assert!(hybrid_sample(&f, &bad_h, 1, 0).is_err());
    }

    #[test]
    fn emitted_samples_are_always_solutions() {
        let f = parse_dimacs("p cnf 3 2\n1 0\n2 -3 0\n").unwrap();
        let p = short_params(1.0);
        for seed in 0..3 {
            let (samples, diag) = sa_sample(&f, &p, 50, seed).unwrap();
            assert_eq!(samples.len(), 50);
            assert!(!diag.truncated);
            for s in &samples {
                assert!(is_solution(&f, s).unwrap());
                assert!(s.value(1));
            }
            let (samples, _) = gibbs_sample(&f, &p, 50, seed).unwrap();
            for s in &samples {
                assert!(is_solution(&f, s).unwrap());
            }
            let (samples, _) =
                hybrid_sample(&f, &HybridParams::defaults(&f), 50, seed).unwrap();
            assert_eq!(samples.len(), 50);
            for s in &samples {
                assert!(is_solution(&f, s).unwrap());
            }
        }
    }

    #[test]
    fn truncation_is_flagged_on_budget_exhaustion() {
        // Unsatisfiable: no emission can ever happen.
        let f = parse_dimacs("p cnf 2 4\n1 0\n-1 0\n2 0\n-2 0\n").unwrap();
        let p = BoltzmannParams {
            temperature: 1.0,
            burn_in: 10,
            thinning: 2,
            max_steps: 5_000,
        };
        let (samples, diag) = sa_sample(&f, &p, 5, 1).unwrap();
        assert!(samples.is_empty());
        assert!(diag.truncated);
        assert_eq!(diag.steps_used, 5_000);
        assert_eq!(diag.hit_rate, 0.0);
        assert!(diag.recorded > 0);

        let mut h = HybridParams::defaults(&f);
        h.max_steps = 5_000;
        let (samples, diag) = hybrid_sample(&f, &h, 5, 1).unwrap();
        assert!(samples.is_empty());
        assert!(diag.truncated);
    }

    #[test]
    fn metropolis_stationary_law_matches_two_level_boltzmann() {
        // Two stacked unit clauses on one variable: E(1) = 0, E(0) = 2.
        // Stationary P(x=0) = e^{−2/T}/(1+e^{−2/T}); at T = 1 this is the
        // uphill acceptance rate e^{−2} renormalized.
        let f = Formula::new(
            1,
            vec![
                Clause::new([Lit::new(1, true)]).unwrap(),
                Clause::new([Lit::new(1, true)]).unwrap(),
            ],
        )
        .unwrap();
        let mut chain = SaChain::new(&f, 1.0, 42).unwrap();
        let steps = 2_000_000u64;
        let mut at_zero = 0u64;
        for _ in 0..steps {
            chain.step();
            at_zero += u64::from(!chain.assignment().value(1));
        }
        let expected = 0.11920292202211755f64; // e^{−2}/(1+e^{−2})
        let got = at_zero as f64 / steps as f64;
        assert!((got - expected).abs() < 0.005, "got {got}");
    }

    #[test]
    fn gibbs_conditionals_hit_their_limits() {
        // Free variable: E₀ = E₁ ⇒ conditional 1/2.
        let f = parse_dimacs("p cnf 2 1\n1 0\n").unwrap();
        let mut chain = GibbsChain::new(&f, 1.0, 7).unwrap();
        let steps = 1_000_000u64;
        let mut var2_one = 0u64;
        let mut var1_one = 0u64;
        for _ in 0..steps {
            chain.step();
            var2_one += u64::from(chain.assignment().value(2));
            var1_one += u64::from(chain.assignment().value(1));
        }
        assert!((var2_one as f64 / steps as f64 - 0.5).abs() < 0.01);
        // At T ≈ 0 the constrained variable pins to its satisfying value.
        let mut cold = GibbsChain::with_start(
            &f,
            0.05,
            9,
            Assignment::new(vec![false, false]),
        )
        .unwrap();
        let mut pinned = 0u64;
        for _ in 0..100_000 {
            cold.step();
        }
        for _ in 0..100_000 {
            cold.step();
            pinned += u64::from(cold.assignment().value(1));
        }
        assert!(pinned as f64 / 100_000.0 > 0.999);
        assert!(var1_one > 0);
    }

    #[test]
    fn cached_energy_tracks_recomputation() {
        let f = instances::gen_rand3sat(12, 40, 5);
        let mut chain = SaChain::new(&f, 0.8, 17).unwrap();
        for _ in 0..2_000 {
            chain.step();
            assert_eq!(
                chain.energy(),
                energy(&f, chain.assignment()).unwrap(),
                "cached energy diverged"
            );
        }
        let mut h = HybridChain::new(&f, &HybridParams::defaults(&f), 17).unwrap();
        for _ in 0..2_000 {
            h.step();
            assert_eq!(h.energy(), energy(&f, h.assignment()).unwrap());
        }
    }

    #[test]
    fn chains_are_deterministic_per_seed() {
        let f = instances::gen_rand3sat(10, 30, 2);
        let p = short_params(0.9);
        let (a1, d1) = sa_sample(&f, &p, 20, 5).unwrap();
        let (a2, d2) = sa_sample(&f, &p, 20, 5).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(d1, d2);
        let (g1, _) = gibbs_sample(&f, &p, 20, 5).unwrap();
        let (g2, _) = gibbs_sample(&f, &p, 20, 5).unwrap();
        assert_eq!(g1, g2);
        let h = HybridParams::defaults(&f);
        let (h1, e1) = hybrid_sample(&f, &h, 20, 5).unwrap();
        let (h2, e2) = hybrid_sample(&f, &h, 20, 5).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(e1, e2);
        let (h3, _) = hybrid_sample(&f, &h, 20, 6).unwrap();
        assert!(h1 != h3 || f.num_vars() == 0);
    }

    #[test]
    fn zero_walk_prob_reproduces_metropolis_draw_for_draw() {
        // Unsatisfiable on purpose: the hybrid then never emits/restarts,
        // so the two trajectories stay comparable indefinitely.
        let base = instances::gen_xor_barrier(10);
        let mut clauses = base.clauses().to_vec();
        clauses.push(Clause::new([Lit::new(1, true)]).unwrap());
        clauses.push(Clause::new([Lit::new(1, false)]).unwrap());
        let f = Formula::new(base.num_vars(), clauses).unwrap();

        let params = HybridParams {
            walk_prob: 0.0,
            noise: 0.5,
            restart_every: u64::MAX,
            temperature: 0.7,
            max_steps: u64::MAX,
        };
        let mut hybrid = HybridChain::new(&f, &params, 31).unwrap();
        let mut plain = SaChain::new(&f, 0.7, 31).unwrap();
        for step in 0..10_000 {
            hybrid.step();
            plain.step();
            assert_eq!(
                hybrid.assignment(),
                plain.assignment(),
                "trajectories diverged at step {step}"
            );
        }
    }

    #[test]
    fn focused_moves_cross_plateaus_that_stall_metropolis() {
        let f = instances::gen_plateau(20);
        // Start on the flat side: x1 = 1 keeps every clause except one
        // z-clause satisfied, so Metropolis sees a featureless landscape.
        let n = f.num_vars() as usize;
        let mut start_bits = vec![false; n];
        start_bits[0] = true;
        for (i, bit) in start_bits.iter_mut().enumerate().skip(1) {
            *bit = i % 2 == 0;
        }
        let budget = 200_000u64;
        let mut stalled = 0;
        let mut crossed = 0;
        for seed in 0..5u64 {
            let mut sa =
                SaChain::with_start(&f, 0.3, seed, Assignment::new(start_bits.clone()))
                    .unwrap();
            let mut sa_found = false;
            for _ in 0..budget {
                sa.step();
                if sa.energy() == 0 {
                    sa_found = true;
                    break;
                }
            }
            stalled += u64::from(!sa_found);

            let params = HybridParams {
                walk_prob: 0.8,
                noise: 0.5,
                restart_every: 20_000,
                temperature: 0.3,
                max_steps: budget,
            };
            let (samples, _) = hybrid_sample(&f, &params, 1, seed).unwrap();
            crossed += u64::from(samples.len() == 1);
        }
        assert!(stalled >= 4, "Metropolis crossed the plateau {stalled}");
        assert!(crossed >= 4, "hybrid failed to cross: {crossed}/5");
    }

    #[test]
    fn stationary_distribution_matches_boltzmann_on_tiny_formulas() {
        // Exhaustive Boltzmann law on 4 variables vs a long chain's
        // occupancy; total variation within 0.01.
        let f = instances::gen_rand3sat(4, 6, 11);
        let t = 1.5f64;
        let mut weights = vec![0.0f64; 16];
        for bits in 0..16u32 {
            let a = Assignment::new((0..4).map(|i| bits >> i & 1 == 1).collect());
            weights[bits as usize] = (-(energy(&f, &a).unwrap() as f64) / t).exp();
        }
        let z: f64 = weights.iter().sum();

        for kernel in 0..2 {
            let mut occupancy = vec![0u64; 16];
            let steps = 4_000_000u64;
            let mut sa = SaChain::new(&f, t, 1).unwrap();
            let mut gibbs = GibbsChain::new(&f, t, 1).unwrap();
            for _ in 0..steps {
                let a = if kernel == 0 {
                    sa.step();
                    sa.assignment()
                } else {
                    gibbs.step();
                    gibbs.assignment()
                };
                let mut bits = 0usize;
                for i in 0..4 {
                    bits |= usize::from(a.value(i as Var + 1)) << i;
                }
                occupancy[bits] += 1;
            }
            let tv: f64 = occupancy
                .iter()
                .zip(&weights)
                .map(|(&o, &w)| (o as f64 / steps as f64 - w / z).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.01, "kernel {kernel}: total variation {tv}");
        }
    }

    #[test]
    fn profile_matches_published_point_and_normalizes() {
        let p = xor_barrier_energy_profile(80, 0.75).unwrap();
        let p0 = p.probability(0);
        assert!((p0 - 7.4e-9).abs() / 7.4e-9 < 0.02, "P(0) = {p0}");
        // Independent high-precision references for the same profile.
        assert!((p0 - 7.435485155752487e-9).abs() / p0 < 1e-12);
        let p40 = p.probability(40);
        assert!((1e-9..1e-8).contains(&p40), "P(40) = {p40}");
        assert!((p40 - 5.5001499394671365e-9).abs() / p40 < 1e-11);

        for &(b, t) in &[(1u32, 0.3f64), (5, 0.75), (12, 1.0), (80, 0.75), (200, 2.5)] {
            let profile = xor_barrier_energy_profile(b, t).unwrap();
            let total: f64 = (0..=b as usize).map(|i| profile.probability(i)).sum();
            assert!(
                (total - 1.0).abs() < 1e-12,
                "b={b} T={t}: normalization off by {}",
                total - 1.0
            );
        }
    }

    #[test]
    fn exact_and_logarithmic_binomials_agree() {
        // C(80,40), exact by 128-bit arithmetic.
        assert!(
            (ln_binomial(80, 40) - 107507208733336176461620.0f64.ln()).abs() < 1e-12
        );
        // Force both code paths to meet on values large enough to matter.
        for b in [60u32, 130, 200] {
            for i in [0u32, 1, b / 3, b / 2] {
                let log_sum: f64 = (1..=i.min(b - i))
                    .map(|j| f64::from(b - j + 1).ln() - f64::from(j).ln())
                    .sum();
                assert!(
                    (ln_binomial(b, i) - log_sum).abs() < 1e-9 * log_sum.max(1.0),
                    "b={b} i={i}"
                );
            }
        }
        assert_eq!(ln_binomial(7, 0), 0.0);
        assert_eq!(ln_binomial(7, 7), 0.0);
    }

    #[test]
    fn chain_energy_histogram_follows_the_analytic_profile() {
        // Long Metropolis run on the 12-bit barrier at T = 1; recorded
        // energies binned against the closed form, χ² should not reject.
        let b = 12u32;
        let f = instances::gen_xor_barrier(b);
        let profile = xor_barrier_energy_profile(b, 1.0).unwrap();
        let params = BoltzmannParams {
            temperature: 1.0,
            burn_in: 100_000,
            thinning: 10 * u64::from(f.num_vars()),
            max_steps: 100_000 + 130 * 200_000,
        };
        // Target is unreachable on purpose; we want the full histogram.
        let (_, diag) = sa_sample(&f, &params, u64::MAX, 3).unwrap();
        let recorded = diag.recorded as f64;
        assert!(diag.recorded >= 190_000);

        // Merge the sparse high-energy tail so every bin expects ≥ 10.
        let mut observed: Vec<f64> = Vec::new();
        let mut expected: Vec<f64> = Vec::new();
        let mut tail_obs = 0.0;
        let mut tail_exp = 0.0;
        for i in 0..=b as usize {
            let obs = *diag.energy_histogram.get(i).unwrap_or(&0) as f64;
            let exp = profile.probability(i) * recorded;
            if exp >= 10.0 {
                observed.push(obs);
                expected.push(exp);
            } else {
                tail_obs += obs;
                tail_exp += exp;
            }
        }
        if tail_exp > 0.0 {
            observed.push(tail_obs);
            expected.push(tail_exp);
        }
        let stat: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e) * (o - e) / e)
            .sum();
        let p = chi2_tail(stat, observed.len() as u64 - 1);
        assert!(p >= 0.01, "χ² = {stat} over {} bins, p = {p}", observed.len());
    }

    #[test]
    fn barrier_hit_rate_matches_the_profile_on_a_small_instance() {
        // b = 10, T = 0.75: P[E = 0] ≈ 0.09636 of recorded states should
        // be solutions.
        let f = instances::gen_xor_barrier(10);
        let params = BoltzmannParams {
            temperature: 0.75,
            burn_in: 50_000,
            thinning: 110,
            max_steps: 50_000 + 110 * 30_000,
        };
        let (_, diag) = sa_sample(&f, &params, u64::MAX, 12).unwrap();
        assert!(diag.recorded >= 29_000);
        let expected = 0.09636374370304585f64;
        assert!(
            (diag.hit_rate - expected).abs() < 0.012,
            "hit rate {} vs {expected}",
            diag.hit_rate
        );
    }
}
