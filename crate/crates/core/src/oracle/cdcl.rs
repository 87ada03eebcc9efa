//! Conflict-driven clause-learning solver used as the default oracle.
//!
//! Standard architecture: two watched literals with blockers, first-UIP
//! learning with recursive clause minimization, VSIDS decisions on an
//! indexed binary heap (ties broken by variable index, so runs are
//! deterministic), phase saving, Luby restarts and activity-based
//! learnt-clause reduction.
//!
//! Queries reuse the solver state: assumptions become decisions at levels
//! `1..=A`, and a new query only backtracks to the end of the longest
//! assumption prefix it shares with the previous one, which makes the
//! sampler's millions of near-identical prefix queries cheap. Per-query
//! extra clauses enter as assumptions when unit; wider ones are attached
//! permanently guarded by a fresh activation literal that is assumed true
//! for the query and asserted false forever after.

use crate::cnf::{Assignment, Clause, Formula, Lit};
use crate::rng::mix64;

use super::{
    assert_model, OracleError, OracleFactory, OracleQuery, OracleResult, OracleStats,
    SatOracle,
};

/// Internal literal: `var << 1 | sign`, sign 1 = negated. Variables are
/// 0-based internally.
type ILit = u32;
type CRef = u32;

const CREF_NONE: CRef = u32::MAX;
const VALUE_UNDEF: u8 = 2;

/// High bit marks two special encodings that avoid touching the clause
/// arena for binary clauses: in a `Watcher`, a tagged `cref` means the
/// blocker is the only other literal; in `reason`, a tagged entry stores
/// the falsified antecedent literal itself instead of a clause reference.
/// Plain references stay below the tag because the arena holds one entry
/// per clause and literals carry `var << 1 | sign` with far fewer than
/// 2^30 variables.
const BINARY_TAG: u32 = 1 << 31;

#[inline]
fn make_lit(var: usize, negated: bool) -> ILit {
    ((var as u32) << 1) | negated as u32
}

#[inline]
fn internal(lit: Lit) -> ILit {
    make_lit((lit.var() - 1) as usize, !lit.is_positive())
}

#[inline]
fn var_of(lit: ILit) -> usize {
    (lit >> 1) as usize
}

#[inline]
fn lit_value_in(values: &[u8], lit: ILit) -> u8 {
    let v = values[var_of(lit)];
    if v == VALUE_UNDEF {
        VALUE_UNDEF
    } else {
        v ^ (lit & 1) as u8
    }
}

fn negate(lit: ILit) -> ILit {
    lit ^ 1
}

struct ClauseData {
    lits: Vec<ILit>,
    activity: f64,
    learnt: bool,
    deleted: bool,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: CRef,
    blocker: ILit,
}

/// Max-heap over variables keyed by activity, ties to the smaller index.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    position: Vec<i32>,
}

impl VarHeap {
    fn with_vars(n: usize) -> VarHeap {
        let mut h = VarHeap {
            heap: (0..n as u32).collect(),
            position: (0..n as i32).collect(),
        };
        // Equal activities: the initial layout is already a valid heap
        // (index order).
        debug_assert!(h.heap.len() == h.position.len());
        h.heap.sort_unstable();
        h
    }

    #[inline]
    fn beats(activity: &[f64], a: u32, b: u32) -> bool {
        let (aa, ab) = (activity[a as usize], activity[b as usize]);
        aa > ab || (aa == ab && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        (v as usize) < self.position.len() && self.position[v as usize] >= 0
    }

    fn push_var(&mut self) {
        self.position.push(-1);
    }

    fn insert(&mut self, v: u32, activity: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.position[v as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, activity);
    }

    fn pop_max(&mut self, activity: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.position[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.position[last as usize] = 0;
            self.sift_down(0, activity);
        }
        Some(top)
    }

    fn bumped(&mut self, v: u32, activity: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.position[v as usize] as usize, activity);
        }
    }

    fn sift_up(&mut self, mut i: usize, activity: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::beats(activity, self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, activity: &[f64]) {
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let best = if right < self.heap.len()
                && Self::beats(activity, self.heap[right], self.heap[left])
            {
                right
            } else {
                left
            };
            if Self::beats(activity, self.heap[best], self.heap[i]) {
                self.swap(i, best);
                i = best;
            } else {
                break;
            }
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.position[self.heap[i] as usize] = i as i32;
        self.position[self.heap[j] as usize] = j as i32;
    }
}

enum SearchOutcome {
    Sat,
    UnsatGlobal,
    UnsatUnderAssumptions,
    BudgetExhausted,
}

/// One independent solver context: clause arena, trail, and heuristic
/// state. The public oracle owns a few of these and routes queries among
/// them.
struct SolverCore {
    num_original: usize,

    clauses: Vec<ClauseData>,
    learnts: Vec<CRef>,
    watches: Vec<Vec<Watcher>>,

    values: Vec<u8>,
    polarity: Vec<bool>,
    reason: Vec<CRef>,
    level: Vec<u32>,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    /// Assumption literals currently embodied by decision levels
    /// `1..=len`; the key to trail reuse across queries.
    assumption_trail: Vec<ILit>,

    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,

    seen: Vec<bool>,
    analyze_clear: Vec<u32>,
    analyze_stack: Vec<ILit>,

    ok: bool,
    seed: u64,
    budget: Option<u64>,
    max_learnts: usize,
    propagations: u64,
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_BASE: u64 = 100;

impl SolverCore {
    fn new(formula: &Formula, seed: u64, budget: Option<u64>) -> SolverCore {
        let n = formula.num_vars() as usize;
        let polarity = (0..n).map(|v| initial_phase(seed, v)).collect();
        let mut solver = SolverCore {
            num_original: n,
            clauses: Vec::with_capacity(formula.num_clauses()),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            values: vec![VALUE_UNDEF; n],
            polarity,
            reason: vec![CREF_NONE; n],
            level: vec![0; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            assumption_trail: Vec::new(),
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::with_vars(n),
            seen: vec![false; n],
            analyze_clear: Vec::new(),
            analyze_stack: Vec::new(),
            ok: true,
            seed,
            budget,
            max_learnts: (formula.num_clauses() / 3).max(2000),
            propagations: 0,
        };
        for clause in formula.clauses() {
            if clause.is_tautology() {
                continue;
            }
            let lits: Vec<ILit> = clause.literals().iter().map(|&l| internal(l)).collect();
            solver.add_clause_internal(lits, false);
        }
        solver
    }

    #[inline]
    fn lit_value(&self, lit: ILit) -> u8 {
        lit_value_in(&self.values, lit)
    }

    #[inline]
    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn new_var(&mut self) -> usize {
        let v = self.values.len();
        self.values.push(VALUE_UNDEF);
        self.polarity.push(initial_phase(self.seed, v));
        self.reason.push(CREF_NONE);
        self.level.push(0);
        self.activity.push(0.0);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.seen.push(false);
        self.heap.push_var();
        self.heap.insert(v as u32, &self.activity);
        v
    }

    /// Adds a clause to the arena. Width-1 clauses become level-0 facts.
    /// Returns the clause reference for wider clauses.
    fn add_clause_internal(&mut self, mut lits: Vec<ILit>, learnt: bool) -> Option<CRef> {
        debug_assert!(!lits.is_empty());
        if !learnt && self.decision_level() == 0 {
            // Simplify against root facts; attaching watches on literals
            // already false at level 0 would leave the clause invisible
            // to propagation.
            if lits.iter().any(|&l| self.lit_value(l) == 1) {
                return None;
            }
            lits.retain(|&l| self.lit_value(l) != 0);
            if lits.is_empty() {
                self.ok = false;
                return None;
            }
        }
        if lits.len() == 1 {
            self.cancel_until(0);
            match self.lit_value(lits[0]) {
                1 => {}
                0 => self.ok = false,
                _ => {
                    self.unchecked_enqueue(lits[0], CREF_NONE);
                    if self.propagate().is_some() {
                        self.ok = false;
                    }
                }
            }
            return None;
        }
        let cref = self.clauses.len() as CRef;
        let wref = if lits.len() == 2 {
            cref | BINARY_TAG
        } else {
            cref
        };
        self.watches[lits[0] as usize].push(Watcher {
            cref: wref,
            blocker: lits[1],
        });
        self.watches[lits[1] as usize].push(Watcher {
            cref: wref,
            blocker: lits[0],
        });
        self.clauses.push(ClauseData {
            lits,
            activity: 0.0,
            learnt,
            deleted: false,
        });
        if learnt {
            self.learnts.push(cref);
        }
        Some(cref)
    }

    fn unchecked_enqueue(&mut self, lit: ILit, reason: CRef) {
        let v = var_of(lit);
        debug_assert_eq!(self.values[v], VALUE_UNDEF);
        self.values[v] = (1 - (lit & 1)) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn cancel_until(&mut self, target: u32) {
        if self.decision_level() <= target {
            return;
        }
        let bound = self.trail_lim[target as usize];
        for i in (bound..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = var_of(lit);
            self.polarity[v] = self.values[v] == 1;
            self.values[v] = VALUE_UNDEF;
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(bound);
        self.trail_lim.truncate(target as usize);
        self.qhead = bound.min(self.qhead);
        self.assumption_trail
            .truncate((target as usize).min(self.assumption_trail.len()));
    }

    fn propagate(&mut self) -> Option<CRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.propagations += 1;
            let false_lit = negate(p);
            let mut i = 0;
            let mut j = 0;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            'watchers: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                if w.cref & BINARY_TAG != 0 {
                    // Binary clause: the blocker is its only other literal
                    // and is not true (checked above), so the clause is
                    // unit or conflicting without loading it.
                    ws[j] = w;
                    j += 1;
                    if self.lit_value(w.blocker) == 0 {
                        self.qhead = self.trail.len();
                        while i < ws.len() {
                            ws[j] = ws[i];
                            j += 1;
                            i += 1;
                        }
                        ws.truncate(j);
                        self.watches[false_lit as usize] = ws;
                        return Some(w.cref & !BINARY_TAG);
                    }
                    self.unchecked_enqueue(w.blocker, BINARY_TAG | false_lit);
                    continue;
                }
                let cref = w.cref;
                let clause = &mut self.clauses[cref as usize];
                if clause.lits[0] == false_lit {
                    clause.lits.swap(0, 1);
                }
                debug_assert_eq!(clause.lits[1], false_lit);
                let first = clause.lits[0];
                if first != w.blocker && lit_value_in(&self.values, first) == 1 {
                    ws[j] = Watcher {
                        cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                for k in 2..clause.lits.len() {
                    if lit_value_in(&self.values, clause.lits[k]) != 0 {
                        clause.lits.swap(1, k);
                        let new_watch = clause.lits[1];
                        self.watches[new_watch as usize].push(Watcher {
                            cref,
                            blocker: first,
                        });
                        continue 'watchers;
                    }
                }
                // Unit or conflicting.
                ws[j] = Watcher {
                    cref,
                    blocker: first,
                };
                j += 1;
                if self.lit_value(first) == 0 {
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    ws.truncate(j);
                    self.watches[false_lit as usize] = ws;
                    return Some(cref);
                }
                self.unchecked_enqueue(first, cref);
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: CRef) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &cr in &self.learnts {
                self.clauses[cr as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis; returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, confl: CRef) -> (Vec<ILit>, u32) {
        let mut learnt: Vec<ILit> = vec![0];
        let mut counter = 0u32;
        let mut p: Option<ILit> = None;
        let mut cref = confl;
        let mut index = self.trail.len();
        let current = self.decision_level();

        loop {
            // A tagged reason is the falsified antecedent literal of a
            // binary clause; otherwise the antecedents are the clause
            // literals past the propagated one (past nothing for the
            // conflict clause itself).
            let binary = cref & BINARY_TAG != 0;
            let lits_start = usize::from(p.is_some());
            let ants = if binary {
                debug_assert!(p.is_some());
                1
            } else {
                self.bump_clause(cref);
                self.clauses[cref as usize].lits.len() - lits_start
            };
            for k in 0..ants {
                let q = if binary {
                    cref & !BINARY_TAG
                } else {
                    self.clauses[cref as usize].lits[lits_start + k]
                };
                let v = var_of(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.analyze_clear.push(v as u32);
                    self.bump_var(v);
                    if self.level[v] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[var_of(self.trail[index])] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[var_of(lit)] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = negate(lit);
                break;
            }
            p = Some(lit);
            cref = self.reason[var_of(lit)];
            debug_assert_ne!(cref, CREF_NONE);
        }

        self.minimize(&mut learnt);

        // Place the second-highest-level literal at index 1 (backjump
        // target and watch partner).
        let backjump = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[var_of(learnt[i])] > self.level[var_of(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[var_of(learnt[1])]
        };

        for v in self.analyze_clear.drain(..) {
            self.seen[v as usize] = false;
        }
        (learnt, backjump)
    }

    /// Removes literals whose reason clauses are covered by the rest of
    /// the learnt clause (recursive minimization over seen-marked vars).
    fn minimize(&mut self, learnt: &mut Vec<ILit>) {
        let mut kept = 1;
        for i in 1..learnt.len() {
            let lit = learnt[i];
            if self.reason[var_of(lit)] == CREF_NONE || !self.lit_redundant(lit) {
                learnt[kept] = lit;
                kept += 1;
            }
        }
        learnt.truncate(kept);
    }

    fn lit_redundant(&mut self, lit: ILit) -> bool {
        self.analyze_stack.clear();
        self.analyze_stack.push(lit);
        let mut marked: Vec<u32> = Vec::new();
        while let Some(l) = self.analyze_stack.pop() {
            let cref = self.reason[var_of(l)];
            debug_assert_ne!(cref, CREF_NONE);
            let binary = cref & BINARY_TAG != 0;
            let ants = if binary {
                1
            } else {
                self.clauses[cref as usize].lits.len() - 1
            };
            for k in 0..ants {
                let q = if binary {
                    cref & !BINARY_TAG
                } else {
                    self.clauses[cref as usize].lits[k + 1]
                };
                let v = var_of(q);
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                if self.reason[v] == CREF_NONE {
                    for m in marked {
                        self.seen[m as usize] = false;
                    }
                    return false;
                }
                self.seen[v] = true;
                marked.push(v as u32);
                self.analyze_clear.push(v as u32);
                self.analyze_stack.push(q);
            }
        }
        true
    }

    fn pick_branch_var(&mut self) -> Option<u32> {
        while let Some(v) = self.heap.pop_max(&self.activity) {
            if self.values[v as usize] == VALUE_UNDEF {
                return Some(v);
            }
        }
        None
    }

    fn reduce_db(&mut self) {
        let mut ordered = self.learnts.clone();
        ordered.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .partial_cmp(&self.clauses[b as usize].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        let target = ordered.len() / 2;
        let mut removed = 0;
        for &cref in &ordered {
            if removed >= target {
                break;
            }
            let c = &self.clauses[cref as usize];
            if c.lits.len() <= 2 || self.is_locked(cref) {
                continue;
            }
            self.detach_clause(cref);
            self.clauses[cref as usize].deleted = true;
            self.clauses[cref as usize].lits = Vec::new();
            removed += 1;
        }
        self.learnts
            .retain(|&cref| !self.clauses[cref as usize].deleted);
    }

    fn is_locked(&self, cref: CRef) -> bool {
        let first = self.clauses[cref as usize].lits[0];
        self.lit_value(first) == 1 && self.reason[var_of(first)] == cref
    }

    fn detach_clause(&mut self, cref: CRef) {
        for idx in 0..2 {
            let lit = self.clauses[cref as usize].lits[idx];
            self.watches[lit as usize].retain(|w| w.cref != cref);
        }
    }

    fn search(&mut self, assumptions: &[ILit]) -> SearchOutcome {
        // Keep whatever prefix of the trail the new query shares.
        let mut common = 0;
        while common < assumptions.len()
            && common < self.assumption_trail.len()
            && assumptions[common] == self.assumption_trail[common]
        {
            common += 1;
        }
        self.cancel_until(common as u32);

        let mut conflicts: u64 = 0;
        let mut restarts: u32 = 0;
        let mut restart_limit = RESTART_BASE * luby(restarts);

        loop {
            if let Some(confl) = self.propagate() {
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SearchOutcome::UnsatGlobal;
                }
                conflicts += 1;
                if let Some(budget) = self.budget {
                    if conflicts > budget {
                        self.cancel_until(0);
                        return SearchOutcome::BudgetExhausted;
                    }
                }
                let (learnt, backjump) = self.analyze(confl);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    match self.lit_value(learnt[0]) {
                        1 => {}
                        0 => {
                            self.ok = false;
                            return SearchOutcome::UnsatGlobal;
                        }
                        _ => {
                            self.unchecked_enqueue(learnt[0], CREF_NONE);
                        }
                    }
                } else {
                    let asserting = learnt[0];
                    let cref = self
                        .add_clause_internal(learnt, true)
                        .expect("multi-literal learnt clause");
                    self.bump_clause(cref);
                    self.unchecked_enqueue(asserting, cref);
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                if self.learnts.len() >= self.max_learnts {
                    self.reduce_db();
                    self.max_learnts += self.max_learnts / 10;
                }
                if conflicts >= restart_limit {
                    restarts += 1;
                    restart_limit = conflicts + RESTART_BASE * luby(restarts);
                    self.cancel_until(0);
                }
            } else {
                let placed = self.decision_level() as usize;
                if placed < assumptions.len() {
                    let p = assumptions[placed];
                    match self.lit_value(p) {
                        1 => {
                            // Already true: a dummy level keeps the
                            // level <-> assumption-index correspondence.
                            self.trail_lim.push(self.trail.len());
                            self.assumption_trail.push(p);
                        }
                        0 => return SearchOutcome::UnsatUnderAssumptions,
                        _ => {
                            self.trail_lim.push(self.trail.len());
                            self.assumption_trail.push(p);
                            self.unchecked_enqueue(p, CREF_NONE);
                        }
                    }
                } else if self.trail.len() == self.values.len() {
                    // Fully assigned by propagation alone; answering here
                    // keeps the heap intact instead of draining it var by
                    // var, which matters when queries arrive by the
                    // millions.
                    return SearchOutcome::Sat;
                } else {
                    match self.pick_branch_var() {
                        None => return SearchOutcome::Sat,
                        Some(v) => {
                            let lit = make_lit(v as usize, !self.polarity[v as usize]);
                            self.trail_lim.push(self.trail.len());
                            self.unchecked_enqueue(lit, CREF_NONE);
                        }
                    }
                }
            }
        }
    }

    fn extract_model(&self) -> Assignment {
        let values = self.values[..self.num_original]
            .iter()
            .map(|&v| {
                debug_assert_ne!(v, VALUE_UNDEF);
                v == 1
            })
            .collect();
        Assignment::new(values)
    }
}

fn initial_phase(seed: u64, var: usize) -> bool {
    seed != 0 && mix64(seed ^ (var as u64 + 1)) & 1 == 1
}

/// Luby restart sequence: 1,1,2,1,1,2,4,...
fn luby(i: u32) -> u64 {
    let mut size = 1u32;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

impl SolverCore {
    /// Answers one query on this context: attaches the extra clauses,
    /// searches under `assumptions` (extended in place with unit-extra
    /// and guard literals), and retires any guards afterwards.
    fn run_query(&mut self, assumptions: &mut Vec<ILit>, extra_clauses: &[Clause]) -> QueryAnswer {
        if !self.ok {
            return QueryAnswer::UnsatGlobal;
        }
        let mut activation: Vec<usize> = Vec::new();
        for clause in extra_clauses {
            if clause.is_tautology() {
                continue;
            }
            if clause.len() == 1 {
                assumptions.push(internal(clause.literals()[0]));
            } else {
                let guard = self.new_var();
                let mut lits = Vec::with_capacity(clause.len() + 1);
                lits.push(make_lit(guard, true));
                lits.extend(clause.literals().iter().map(|&l| internal(l)));
                self.add_clause_internal(lits, false);
                assumptions.push(make_lit(guard, false));
                activation.push(guard);
            }
        }

        let outcome = self.search(assumptions);
        // Read the model before guard retirement backtracks the trail.
        let model = match outcome {
            SearchOutcome::Sat => Some(self.extract_model()),
            _ => None,
        };

        if !activation.is_empty() {
            // Retire the guards: assert each false at the root forever,
            // which satisfies the guarded clauses and any learnt clauses
            // mentioning them.
            self.cancel_until(0);
            for guard in activation {
                let off = make_lit(guard, true);
                match self.lit_value(off) {
                    1 => {}
                    0 => unreachable!("guard was forced on at level 0"),
                    _ => {
                        self.unchecked_enqueue(off, CREF_NONE);
                        if self.propagate().is_some() {
                            self.ok = false;
                        }
                    }
                }
            }
        }

        match outcome {
            SearchOutcome::Sat => QueryAnswer::Sat(model.expect("model extracted on Sat")),
            SearchOutcome::UnsatGlobal => QueryAnswer::UnsatGlobal,
            SearchOutcome::UnsatUnderAssumptions => QueryAnswer::UnsatUnderAssumptions,
            SearchOutcome::BudgetExhausted => QueryAnswer::BudgetExhausted,
        }
    }

    /// Attaches a clause outside any query. Only sound from the root:
    /// the clause may be false under the kept trail.
    fn attach_permanent(&mut self, clause: &Clause) {
        self.cancel_until(0);
        let lits: Vec<ILit> = clause.literals().iter().map(|&l| internal(l)).collect();
        self.add_clause_internal(lits, false);
    }
}

enum QueryAnswer {
    Sat(Assignment),
    UnsatGlobal,
    UnsatUnderAssumptions,
    BudgetExhausted,
}

/// Default oracle. Queries are routed to one of a few internal solver
/// contexts by longest shared assumption prefix, so query streams that
/// alternate between a handful of deep branches keep each branch's trail
/// warm instead of tearing it down on every switch. Which context
/// answers never changes any answer — only which model a SAT answer
/// happens to report.
pub struct CdclOracle {
    formula: Formula,
    seed: u64,
    budget: Option<u64>,
    /// Clauses added after construction; replayed into spawned contexts.
    permanent_extras: Vec<Clause>,
    cores: Vec<SolverCore>,
    ok: bool,
    stats: OracleStats,
    /// Reused per-call buffer for the translated assumption vector.
    query_scratch: Vec<ILit>,
}

/// Contexts kept per oracle; each costs one clause arena.
const MAX_CORES: usize = 4;
/// Trail depth the best-matching context would have to abandon before a
/// query prefers spawning a fresh context instead.
const SPAWN_REBUILD_MIN: usize = 8;

impl CdclOracle {
    /// Binds the solver to `formula`. `seed` picks initial decision
    /// phases (seed 0 = all false); `budget` caps conflicts per query.
    pub fn new(formula: &Formula, seed: u64, budget: Option<u64>) -> CdclOracle {
        let core = SolverCore::new(formula, seed, budget);
        CdclOracle {
            formula: formula.clone(),
            seed,
            budget,
            permanent_extras: Vec::new(),
            ok: core.ok,
            cores: vec![core],
            stats: OracleStats::default(),
            query_scratch: Vec::new(),
        }
    }

    /// Picks the context sharing the longest assumption prefix with the
    /// query, spawning a fresh one rather than dismantling a deep trail.
    /// Ties go to the lowest index, so routing is deterministic.
    fn route(&mut self, assumptions: &[ILit]) -> usize {
        let mut best = 0;
        let mut best_lcp = 0;
        for (idx, core) in self.cores.iter().enumerate() {
            let trail = &core.assumption_trail;
            let mut lcp = 0;
            while lcp < assumptions.len()
                && lcp < trail.len()
                && assumptions[lcp] == trail[lcp]
            {
                lcp += 1;
            }
            if idx == 0 || lcp > best_lcp {
                best = idx;
                best_lcp = lcp;
            }
        }
        let abandoned = self.cores[best].assumption_trail.len() - best_lcp;
        if abandoned > SPAWN_REBUILD_MIN
            && best_lcp < assumptions.len()
            && self.cores.len() < MAX_CORES
        {
            let mut core = SolverCore::new(&self.formula, self.seed, self.budget);
            for clause in &self.permanent_extras {
                core.attach_permanent(clause);
            }
            self.cores.push(core);
            return self.cores.len() - 1;
        }
        best
    }
}

impl SatOracle for CdclOracle {
    fn solve(&mut self, query: &OracleQuery) -> Result<OracleResult, OracleError> {
        self.stats.total_calls += 1;
        let num_vars = self.formula.num_vars();
        let mut assumptions = std::mem::take(&mut self.query_scratch);
        assumptions.clear();
        // Validate and convert the assumptions in one pass; extra clauses
        // are still validated up front so an invalid query attaches
        // nothing.
        let mut bad: Option<Lit> = None;
        for &lit in &query.assumptions {
            if lit.var() > num_vars {
                bad = Some(lit);
                break;
            }
            assumptions.push(internal(lit));
        }
        if bad.is_none() {
            'extras: for clause in &query.extra_clauses {
                for &lit in clause.literals() {
                    if lit.var() > num_vars {
                        bad = Some(lit);
                        break 'extras;
                    }
                }
            }
        }
        if let Some(lit) = bad {
            self.query_scratch = assumptions;
            return Err(OracleError::OutOfRange {
                lit: lit.to_dimacs(),
                num_vars,
            });
        }
        if !self.ok {
            self.query_scratch = assumptions;
            self.stats.unsat_answers += 1;
            return Ok(OracleResult::Unsat);
        }

        let core = self.route(&assumptions);
        let answer = self.cores[core].run_query(&mut assumptions, &query.extra_clauses);
        self.query_scratch = assumptions;

        match answer {
            QueryAnswer::Sat(model) => {
                assert_model(&self.formula, query, &model);
                self.stats.sat_answers += 1;
                Ok(OracleResult::Sat(model))
            }
            QueryAnswer::UnsatGlobal => {
                self.ok = false;
                self.stats.unsat_answers += 1;
                Ok(OracleResult::Unsat)
            }
            QueryAnswer::UnsatUnderAssumptions => {
                self.stats.unsat_answers += 1;
                Ok(OracleResult::Unsat)
            }
            QueryAnswer::BudgetExhausted => Err(OracleError::BudgetExhausted {
                budget: self.budget.expect("budget was set"),
            }),
        }
    }

    fn stats(&self) -> OracleStats {
        let mut stats = self.stats;
        stats.propagations = self.cores.iter().map(|c| c.propagations).sum();
        stats
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
        if clause.is_tautology() {
            return Ok(());
        }
        self.permanent_extras.push(clause.clone());
        for core in &mut self.cores {
            core.attach_permanent(clause);
        }
        // A root conflict in any context proves the formula unsatisfiable.
        if self.cores.iter().any(|core| !core.ok) {
            self.ok = false;
        }
        Ok(())
    }
}

/// Factory producing independent [`CdclOracle`] instances over one
/// formula.
pub struct CdclFactory {
    formula: Formula,
    budget: Option<u64>,
}

impl CdclFactory {
    pub fn new(formula: Formula, budget: Option<u64>) -> CdclFactory {
        CdclFactory { formula, budget }
    }
}

impl OracleFactory for CdclFactory {
    fn create(&self, seed: u64) -> Box<dyn SatOracle + Send> {
        Box::new(CdclOracle::new(&self.formula, seed, self.budget))
    }
}
