//! QCDCL search: prefix-ordered decisions, clause and cube propagation,
//! conflict and solution analysis, backjumping and restarts.
//!
//! Variables are stored densely under internal ids. Selector variables of
//! the frame stack live in an implicit outermost existential block at
//! depth 0; user variables start at depth 1.

use std::collections::HashMap;
use std::time::Instant;

use log::{debug, trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{Lit, Prefix, PrefixOrder, Quantifier, Var, Verdict};
use crate::incremental::{Frame, InitialCubeList};
use crate::qres::{reduce_lits, resolve_lits, ConstraintKind};

const VAR_DECAY: f64 = 0.95;
const RESTART_FIRST: u64 = 256;
const RESTART_FACTOR: f64 = 1.5;
const REDUCE_BASE: usize = 4000;
const REDUCE_STEP: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("time limit reached")]
    Timeout,
    #[error("contradictory assumptions on variable {0}")]
    ContradictoryAssumptions(Var),
}

/// Search counters. Totals accumulate over the lifetime of a solver.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub assignments: u64,
    pub backtracks: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub solutions: u64,
    pub learned_clauses: u64,
    pub learned_cubes: u64,
    pub restarts: u64,
    pub wall_time: f64,
}

impl Stats {
    pub(crate) fn since(&self, earlier: &Stats) -> Stats {
        Stats {
            assignments: self.assignments - earlier.assignments,
            backtracks: self.backtracks - earlier.backtracks,
            decisions: self.decisions - earlier.decisions,
            propagations: self.propagations - earlier.propagations,
            conflicts: self.conflicts - earlier.conflicts,
            solutions: self.solutions - earlier.solutions,
            learned_clauses: self.learned_clauses - earlier.learned_clauses,
            learned_cubes: self.learned_cubes - earlier.learned_cubes,
            restarts: self.restarts - earlier.restarts,
            wall_time: self.wall_time - earlier.wall_time,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Reason {
    Unassigned,
    Assumption,
    Decision,
    Clause(u32),
    Cube(u32),
}

#[derive(Clone, Debug)]
pub(crate) struct VarData {
    /// User-visible id; `None` for frame selectors.
    pub user: Option<Var>,
    /// Frame whose selector this is.
    pub frame: Option<usize>,
    pub quantifier: Quantifier,
    pub depth: u32,
    /// Number of enabled original clauses containing the variable.
    pub occurrences: u32,
    pub value: Option<bool>,
    pub level: u32,
    pub reason: Reason,
    pub trail_pos: usize,
    pub activity: f64,
    pub phase: bool,
    pub assumed: bool,
    pub freed: bool,
}

impl VarData {
    fn new(user: Option<Var>, frame: Option<usize>, quantifier: Quantifier) -> VarData {
        VarData {
            user,
            frame,
            quantifier,
            depth: 0,
            occurrences: 0,
            value: None,
            level: 0,
            reason: Reason::Unassigned,
            trail_pos: 0,
            activity: 0.0,
            phase: false,
            assumed: false,
            freed: false,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct StoredClause {
    pub lits: Vec<Lit>,
    pub learned: bool,
    /// Frame of an original clause; `None` for the base and for learned ones.
    pub frame: Option<usize>,
    pub deleted: bool,
    pub activity: f64,
    pub true_count: u32,
    /// Some antecedent came from a frame.
    pub from_framed: bool,
    /// Signature of the variables reduced away while deriving it.
    pub sig: u128,
    /// Set for the current call when the signature meets an assumption.
    pub suspended: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct StoredCube {
    pub lits: Vec<Lit>,
    pub deleted: bool,
    pub activity: f64,
    pub sig: u128,
    pub suspended: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Source {
    Model,
    Cube(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Conflict(u32),
    Solution(Source),
    Stable,
}

enum ClauseState {
    Satisfied,
    Conflict,
    Unit(Lit),
    Open,
}

enum CubeState {
    Dead,
    Solution,
    Unit(Lit),
    Open,
}

enum Analysis {
    Final(Vec<Lit>, bool, u128),
    Learn {
        lits: Vec<Lit>,
        level: u32,
        assert: Option<Lit>,
        from_framed: bool,
        sig: u128,
    },
}

/// Signature bit of a variable in a reduction signature.
pub(crate) fn sig_bit(v: Var) -> u128 {
    1u128 << (v.index() % 128)
}

/// Prefix view over internal variables.
pub(crate) struct Order<'a>(pub &'a [VarData]);

impl PrefixOrder for Order<'_> {
    fn lookup(&self, var: Var) -> Option<(Quantifier, u32)> {
        self.0
            .get(var.index())
            .filter(|_| var.index() > 0)
            .map(|v| (v.quantifier, v.depth))
    }
}

pub(crate) struct Engine {
    pub prefix: Prefix,
    pub vars: Vec<VarData>,
    pub user_to_internal: HashMap<Var, u32>,
    pub clauses: Vec<StoredClause>,
    pub cubes: Vec<StoredCube>,
    pub clause_occ: Vec<Vec<u32>>,
    pub cube_occ: Vec<Vec<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    unsat_original: usize,
    /// Active user variables grouped by depth, index 0 unused.
    by_depth: Vec<Vec<u32>>,
    pub frames: Vec<Frame>,
    pub active_frames: Vec<usize>,
    pub initial_cubes: InitialCubeList,
    pub pending_added: Vec<u32>,
    pub pending_deletion: bool,
    pub keep_learned: bool,
    pub manual_selectors: bool,
    pub gc_min_disabled: usize,
    pub stats: Stats,
    pub deadline: Option<Instant>,
    pub final_constraint: Option<(ConstraintKind, Vec<Lit>)>,
    var_inc: f64,
    cla_inc: f64,
    reduce_rounds: usize,
    rng: Option<ChaCha8Rng>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

impl Engine {
    pub fn new() -> Engine {
        Engine {
            prefix: Prefix::new(),
            vars: vec![VarData::new(None, None, Quantifier::Exists)],
            user_to_internal: HashMap::new(),
            clauses: Vec::new(),
            cubes: Vec::new(),
            clause_occ: vec![Vec::new(), Vec::new()],
            cube_occ: vec![Vec::new(), Vec::new()],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            unsat_original: 0,
            by_depth: Vec::new(),
            frames: Vec::new(),
            active_frames: Vec::new(),
            initial_cubes: InitialCubeList::default(),
            pending_added: Vec::new(),
            pending_deletion: false,
            keep_learned: true,
            manual_selectors: false,
            gc_min_disabled: 4096,
            stats: Stats::default(),
            deadline: None,
            final_constraint: None,
            var_inc: 1.0,
            cla_inc: 1.0,
            reduce_rounds: 0,
            rng: None,
        }
    }

    /// Seeds tiny random activity offsets; `0` keeps activities untouched.
    pub fn set_seed(&mut self, seed: u64) {
        if seed == 0 {
            self.rng = None;
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in self.vars.iter_mut().skip(1) {
            v.activity += rng.gen::<f64>() * 1e-6;
        }
        self.rng = Some(rng);
    }

    fn alloc_var(&mut self, data: VarData) -> u32 {
        let mut data = data;
        if let Some(rng) = self.rng.as_mut() {
            data.activity = rng.gen::<f64>() * 1e-6;
        }
        self.vars.push(data);
        self.clause_occ.push(Vec::new());
        self.clause_occ.push(Vec::new());
        self.cube_occ.push(Vec::new());
        self.cube_occ.push(Vec::new());
        (self.vars.len() - 1) as u32
    }

    /// Internal id for a user variable already present in `prefix`.
    pub fn intern(&mut self, user: Var) -> u32 {
        if let Some(&i) = self.user_to_internal.get(&user) {
            return i;
        }
        let q = self.prefix.quantifier(user).unwrap_or(Quantifier::Exists);
        let i = self.alloc_var(VarData::new(Some(user), None, q));
        self.user_to_internal.insert(user, i);
        i
    }

    pub fn new_selector(&mut self, frame: usize) -> u32 {
        self.alloc_var(VarData::new(None, Some(frame), Quantifier::Exists))
    }

    pub fn var(&self, l: Lit) -> &VarData {
        &self.vars[l.var().index()]
    }

    fn var_mut(&mut self, l: Lit) -> &mut VarData {
        &mut self.vars[l.var().index()]
    }

    pub fn to_user(&self, l: Lit) -> Option<Lit> {
        self.var(l).user.map(|u| Lit::new(u, l.is_negated()))
    }

    pub fn to_internal(&self, l: Lit) -> Option<Lit> {
        self.user_to_internal
            .get(&l.var())
            .map(|&i| Lit::new(Var::new(i), l.is_negated()))
    }

    pub fn is_selector(&self, l: Lit) -> bool {
        self.var(l).frame.is_some()
    }

    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.var(l).value.map(|v| v != l.is_negated())
    }

    fn level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Reduces `lits`, keeping literals of assumed variables, and returns
    /// the signature of the removed variables. A constraint reduced over an
    /// assumed variable would not stay valid when that variable is assumed
    /// the other way in a later call.
    pub fn reduce(&self, kind: ConstraintKind, lits: &mut Vec<Lit>) -> u128 {
        let (kept, mut rest): (Vec<Lit>, Vec<Lit>) = lits.iter().partition(|&&l| self.var(l).assumed);
        let before = rest.clone();
        reduce_lits(&Order(&self.vars), kind, &mut rest);
        let sig = before
            .iter()
            .filter(|l| !rest.contains(l))
            .fold(0, |acc, l| acc | sig_bit(l.var()));
        *lits = kept;
        lits.extend(rest);
        sig
    }

    // ---- depth bookkeeping ----

    /// Recomputes depths from the user prefix, skipping blocks without
    /// active variables and merging equal neighbours.
    pub fn rebuild_order(&mut self) {
        let mut depth = 0u32;
        let mut last_q: Option<Quantifier> = None;
        let mut by_depth: Vec<Vec<u32>> = vec![Vec::new()];
        let blocks: Vec<(Quantifier, Vec<Var>)> = self
            .prefix
            .blocks()
            .iter()
            .map(|b| (b.quantifier, b.vars.clone()))
            .collect();
        for (q, vars) in blocks {
            let ids: Vec<u32> = vars.iter().map(|&v| self.intern(v)).collect();
            let any_active = ids.iter().any(|&i| self.vars[i as usize].occurrences > 0);
            let d = if !any_active {
                depth.max(1)
            } else if last_q == Some(q) {
                depth
            } else {
                depth += 1;
                last_q = Some(q);
                by_depth.push(Vec::new());
                depth
            };
            for &i in &ids {
                let v = &mut self.vars[i as usize];
                v.quantifier = q;
                v.depth = d;
                if v.occurrences > 0 {
                    by_depth[d as usize].push(i);
                }
            }
        }
        for list in &mut by_depth {
            let vars = &self.vars;
            list.sort_by_key(|&i| vars[i as usize].user);
        }
        self.by_depth = by_depth;
    }

    pub fn active_at_depth(&self, depth: u32) -> &[u32] {
        self.by_depth.get(depth as usize).map_or(&[], |v| v.as_slice())
    }

    // ---- storage ----

    pub fn push_clause(&mut self, c: StoredClause) -> u32 {
        let id = self.clauses.len() as u32;
        for &l in &c.lits {
            self.clause_occ[l.code()].push(id);
        }
        self.clauses.push(c);
        id
    }

    pub fn push_cube(&mut self, lits: Vec<Lit>) -> u32 {
        let id = self.cubes.len() as u32;
        for &l in &lits {
            self.cube_occ[l.code()].push(id);
        }
        self.cubes.push(StoredCube {
            lits,
            deleted: false,
            activity: 0.0,
            sig: 0,
            suspended: false,
        });
        id
    }

    /// Rebuilds occurrence lists from the non-deleted constraints.
    pub fn rebuild_occurrences(&mut self) {
        for o in self.clause_occ.iter_mut().chain(self.cube_occ.iter_mut()) {
            o.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if !c.deleted {
                for &l in &c.lits {
                    self.clause_occ[l.code()].push(i as u32);
                }
            }
        }
        for (i, k) in self.cubes.iter().enumerate() {
            if !k.deleted {
                for &l in &k.lits {
                    self.cube_occ[l.code()].push(i as u32);
                }
            }
        }
    }

    // ---- trail ----

    fn assign(&mut self, lit: Lit, reason: Reason) {
        let level = self.level();
        let pos = self.trail.len();
        let v = self.var_mut(lit);
        debug_assert!(v.value.is_none());
        v.value = Some(!lit.is_negated());
        v.level = level;
        v.reason = reason;
        v.trail_pos = pos;
        self.trail.push(lit);
        self.stats.assignments += 1;
        for i in 0..self.clause_occ[lit.code()].len() {
            let cid = self.clause_occ[lit.code()][i] as usize;
            let c = &mut self.clauses[cid];
            c.true_count += 1;
            if c.true_count == 1 && !c.learned && !c.deleted {
                self.unsat_original -= 1;
            }
        }
    }

    fn unassign_last(&mut self) {
        let lit = self.trail.pop().expect("non-empty trail");
        let v = self.var_mut(lit);
        v.phase = !lit.is_negated();
        v.value = None;
        v.reason = Reason::Unassigned;
        for i in 0..self.clause_occ[lit.code()].len() {
            let cid = self.clause_occ[lit.code()][i] as usize;
            let c = &mut self.clauses[cid];
            c.true_count -= 1;
            if c.true_count == 0 && !c.learned && !c.deleted {
                self.unsat_original += 1;
            }
        }
    }

    fn backjump(&mut self, level: u32) {
        if level >= self.level() {
            return;
        }
        let keep = self.trail_lim[level as usize];
        while self.trail.len() > keep {
            self.unassign_last();
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
        self.stats.backtracks += 1;
    }

    /// Unassigns everything, including level 0, and clears assumption marks.
    pub fn reset_trail(&mut self) {
        while !self.trail.is_empty() {
            self.unassign_last();
        }
        self.trail_lim.clear();
        self.qhead = 0;
        for v in &mut self.vars {
            v.assumed = false;
        }
        self.recount_unsat();
    }

    fn recount_unsat(&mut self) {
        for c in &mut self.clauses {
            c.true_count = 0;
        }
        self.unsat_original = self
            .clauses
            .iter()
            .filter(|c| !c.learned && !c.deleted)
            .count();
    }

    // ---- propagation ----

    fn clause_state(&self, cid: u32) -> ClauseState {
        let c = &self.clauses[cid as usize];
        if c.true_count > 0 {
            return ClauseState::Satisfied;
        }
        let max_e = c
            .lits
            .iter()
            .filter(|l| self.var(**l).quantifier == Quantifier::Exists)
            .map(|l| self.var(*l).depth)
            .max();
        let mut unit = None;
        let mut open_e = 0;
        for &l in &c.lits {
            let v = self.var(l);
            if v.value.is_some() {
                continue;
            }
            match v.quantifier {
                Quantifier::Exists => {
                    open_e += 1;
                    unit = Some(l);
                }
                Quantifier::Forall => {
                    if max_e.is_some_and(|m| v.depth < m) {
                        return ClauseState::Open;
                    }
                }
            }
        }
        match open_e {
            0 => ClauseState::Conflict,
            1 => ClauseState::Unit(unit.expect("one open literal")),
            _ => ClauseState::Open,
        }
    }

    fn cube_state(&self, kid: u32) -> CubeState {
        let k = &self.cubes[kid as usize];
        if k.lits.iter().any(|&l| self.lit_value(l) == Some(false)) {
            return CubeState::Dead;
        }
        let max_u = k
            .lits
            .iter()
            .filter(|l| self.var(**l).quantifier == Quantifier::Forall)
            .map(|l| self.var(*l).depth)
            .max();
        let mut unit = None;
        let mut open_u = 0;
        for &l in &k.lits {
            let v = self.var(l);
            if v.value.is_some() {
                continue;
            }
            match v.quantifier {
                Quantifier::Forall => {
                    open_u += 1;
                    unit = Some(l);
                }
                Quantifier::Exists => {
                    if max_u.is_some_and(|m| v.depth < m) {
                        return CubeState::Open;
                    }
                }
            }
        }
        match open_u {
            0 => CubeState::Solution,
            1 => CubeState::Unit(unit.expect("one open literal")),
            _ => CubeState::Open,
        }
    }

    /// Checks every constraint once; used after the level-0 assumptions.
    fn initial_scan(&mut self) -> Outcome {
        for cid in 0..self.clauses.len() as u32 {
            if self.clauses[cid as usize].deleted || self.clauses[cid as usize].suspended {
                continue;
            }
            match self.clause_state(cid) {
                ClauseState::Conflict => return Outcome::Conflict(cid),
                ClauseState::Unit(l) => self.assign(l, Reason::Clause(cid)),
                _ => {}
            }
        }
        for kid in 0..self.cubes.len() as u32 {
            if self.cubes[kid as usize].deleted || self.cubes[kid as usize].suspended {
                continue;
            }
            match self.cube_state(kid) {
                CubeState::Solution => return Outcome::Solution(Source::Cube(kid)),
                CubeState::Unit(l) => self.assign(!l, Reason::Cube(kid)),
                _ => {}
            }
        }
        Outcome::Stable
    }

    fn propagate(&mut self) -> Outcome {
        loop {
            if self.unsat_original == 0 {
                return Outcome::Solution(Source::Model);
            }
            if self.qhead >= self.trail.len() {
                return Outcome::Stable;
            }
            let lit = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let neg = (!lit).code();
            for i in 0..self.clause_occ[neg].len() {
                let cid = self.clause_occ[neg][i];
                if self.clauses[cid as usize].deleted || self.clauses[cid as usize].suspended {
                    continue;
                }
                match self.clause_state(cid) {
                    ClauseState::Conflict => return Outcome::Conflict(cid),
                    ClauseState::Unit(l) => self.assign(l, Reason::Clause(cid)),
                    _ => {}
                }
            }
            let pos = lit.code();
            for i in 0..self.cube_occ[pos].len() {
                let kid = self.cube_occ[pos][i];
                if self.cubes[kid as usize].deleted || self.cubes[kid as usize].suspended {
                    continue;
                }
                match self.cube_state(kid) {
                    CubeState::Solution => return Outcome::Solution(Source::Cube(kid)),
                    CubeState::Unit(l) => self.assign(!l, Reason::Cube(kid)),
                    _ => {}
                }
            }
        }
    }

    // ---- decisions ----

    fn decide(&mut self) -> Option<Lit> {
        for depth in 1..self.by_depth.len() {
            let mut best: Option<u32> = None;
            for &i in &self.by_depth[depth] {
                let v = &self.vars[i as usize];
                if v.value.is_some() {
                    continue;
                }
                if best.is_none_or(|b| v.activity > self.vars[b as usize].activity) {
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                let phase = self.vars[i as usize].phase;
                return Some(Lit::new(Var::new(i), !phase));
            }
        }
        None
    }

    fn bump_var(&mut self, var: Var) {
        let v = &mut self.vars[var.index()];
        v.activity += self.var_inc;
        if v.activity > 1e100 {
            for v in &mut self.vars {
                v.activity *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    fn decay(&mut self) {
        self.var_inc /= VAR_DECAY;
        self.cla_inc /= VAR_DECAY;
    }

    // ---- analysis ----

    fn merge_selectors(&self, lits: &mut Vec<Lit>) {
        let top = lits.iter().filter_map(|&l| self.var(l).frame).max();
        if let Some(top) = top {
            lits.retain(|&l| self.var(l).frame.is_none_or(|f| f == top));
        }
    }

    fn analyze(&mut self, kind: ConstraintKind, mut r: Vec<Lit>, mut from_framed: bool, mut sig: u128) -> Analysis {
        let primary = match kind {
            ConstraintKind::Clause => Quantifier::Exists,
            ConstraintKind::Cube => Quantifier::Forall,
        };
        sig |= self.reduce(kind, &mut r);
        loop {
            if r.iter().all(|&l| self.var(l).assumed) {
                return Analysis::Final(r, from_framed, sig);
            }
            let mut top = 0u32;
            let mut at_top = 0usize;
            let mut cand = None;
            for &l in &r {
                let lv = self.var(l).level;
                if lv > top || cand.is_none() {
                    top = lv;
                    at_top = 1;
                    cand = Some(l);
                } else if lv == top {
                    at_top += 1;
                }
            }
            let cand = cand.expect("non-empty constraint");
            if top >= 1 && at_top == 1 && self.var(cand).quantifier == primary {
                let level = r
                    .iter()
                    .filter(|&&l| l != cand)
                    .map(|&l| self.var(l).level)
                    .max()
                    .unwrap_or(0);
                let assert = match kind {
                    ConstraintKind::Clause => cand,
                    ConstraintKind::Cube => !cand,
                };
                return Analysis::Learn {
                    lits: r,
                    level,
                    assert: Some(assert),
                    from_framed,
                    sig,
                };
            }
            let pivot = r
                .iter()
                .copied()
                .filter(|&l| {
                    let v = self.var(l);
                    v.quantifier == primary
                        && !v.assumed
                        && match kind {
                            ConstraintKind::Clause => matches!(v.reason, Reason::Clause(_)),
                            ConstraintKind::Cube => matches!(v.reason, Reason::Cube(_)),
                        }
                })
                .max_by_key(|&l| self.var(l).trail_pos);
            let Some(pivot) = pivot else {
                debug!("analysis found no pivot, learning non-asserting constraint");
                assert!(top > 0, "analysis stuck at level 0");
                return Analysis::Learn {
                    lits: r,
                    level: top - 1,
                    assert: None,
                    from_framed,
                    sig,
                };
            };
            let mut ante = match self.var(pivot).reason {
                Reason::Clause(cid) => {
                    let c = &mut self.clauses[cid as usize];
                    c.activity += self.cla_inc;
                    from_framed |= c.frame.is_some() || c.from_framed;
                    sig |= c.sig;
                    c.lits.clone()
                }
                Reason::Cube(kid) => {
                    let k = &mut self.cubes[kid as usize];
                    k.activity += self.cla_inc;
                    sig |= k.sig;
                    k.lits.clone()
                }
                _ => unreachable!("pivot without antecedent"),
            };
            sig |= self.reduce(kind, &mut ante);
            let mut res = resolve_lits(&r, &ante, pivot.var())
                .expect("resolution over falsified literals is never tautological");
            if kind == ConstraintKind::Clause {
                self.merge_selectors(&mut res);
            }
            sig |= self.reduce(kind, &mut res);
            trace!("resolved on {:?}: {} literals", pivot, res.len());
            r = res;
        }
    }

    fn learn(&mut self, kind: ConstraintKind, lits: Vec<Lit>, from_framed: bool, sig: u128) -> u32 {
        for &l in &lits {
            self.bump_var(l.var());
        }
        match kind {
            ConstraintKind::Clause => {
                self.stats.learned_clauses += 1;
                let true_count = lits.iter().filter(|&&l| self.lit_value(l) == Some(true)).count() as u32;
                self.push_clause(StoredClause {
                    lits,
                    learned: true,
                    frame: None,
                    deleted: false,
                    activity: self.cla_inc,
                    true_count,
                    from_framed,
                    sig,
                    suspended: false,
                })
            }
            ConstraintKind::Cube => {
                self.stats.learned_cubes += 1;
                let id = self.push_cube(lits);
                self.cubes[id as usize].activity = self.cla_inc;
                self.cubes[id as usize].sig = sig;
                id
            }
        }
    }

    /// A subset of the true user literals that hits every enabled original
    /// clause. Clauses with a single true literal go first; otherwise the
    /// deepest existential is preferred, since reduction removes it again.
    fn model_cube(&mut self) -> Vec<Lit> {
        let mut chosen = vec![false; self.vars.len()];
        let mut lits = Vec::new();
        let mut pending = Vec::new();
        for cid in 0..self.clauses.len() {
            if self.clauses[cid].learned || !self.clause_enabled(cid) {
                continue;
            }
            let true_lits: Vec<Lit> = self.clauses[cid]
                .lits
                .iter()
                .copied()
                .filter(|&l| self.var(l).user.is_some() && self.lit_value(l) == Some(true))
                .collect();
            if let [l] = true_lits[..] {
                if !chosen[l.var().index()] {
                    chosen[l.var().index()] = true;
                    lits.push(l);
                }
            } else {
                pending.push(true_lits);
            }
        }
        for true_lits in pending {
            if true_lits.iter().any(|l| chosen[l.var().index()]) {
                continue;
            }
            let best = true_lits.iter().copied().max_by_key(|&l| {
                let v = self.var(l);
                (v.quantifier == Quantifier::Exists, v.depth, std::cmp::Reverse(l.var()))
            });
            if let Some(l) = best {
                chosen[l.var().index()] = true;
                lits.push(l);
            }
        }
        lits.sort_by_key(|l| self.var(*l).trail_pos);
        let user: Vec<Lit> = lits.iter().filter_map(|&l| self.to_user(l)).collect();
        self.initial_cubes.push(user);
        lits
    }

    /// Learned clauses that reduced away a now assumed universal, and learned
    /// cubes that reduced away a now assumed existential, sit out this call.
    fn suspend_for_assumptions(&mut self, assumptions: &[Lit]) {
        let (mut univ, mut exist) = (0u128, 0u128);
        for &a in assumptions {
            let v = self.var(a);
            if v.frame.is_some() {
                continue;
            }
            match v.quantifier {
                Quantifier::Forall => univ |= sig_bit(a.var()),
                Quantifier::Exists => exist |= sig_bit(a.var()),
            }
        }
        for c in &mut self.clauses {
            c.suspended = c.learned && c.sig & univ != 0;
        }
        for k in &mut self.cubes {
            k.suspended = k.sig & exist != 0;
        }
    }

    // ---- main loop ----

    /// Runs the search under level-0 `assumptions` (internal literals).
    pub fn solve_core(&mut self, assumptions: &[Lit]) -> Result<Verdict, SolveError> {
        let start = Instant::now();
        self.reset_trail();
        self.final_constraint = None;
        for &a in assumptions {
            match self.lit_value(a) {
                Some(true) => continue,
                Some(false) => {
                    self.reset_trail();
                    return Err(SolveError::ContradictoryAssumptions(
                        self.var(a).user.unwrap_or(a.var()),
                    ));
                }
                None => {
                    self.var_mut(a).assumed = true;
                    self.assign(a, Reason::Assumption);
                }
            }
        }
        self.suspend_for_assumptions(assumptions);
        let mut restart_limit = RESTART_FIRST as f64;
        let mut since_restart = 0u64;
        let mut pending = Some(self.initial_scan());
        let verdict = loop {
            let outcome = match pending.take() {
                Some(Outcome::Stable) | None => self.propagate(),
                Some(o) => o,
            };
            let analysis = match outcome {
                Outcome::Stable => {
                    let Some(lit) = self.decide() else {
                        unreachable!("stable state with every variable assigned");
                    };
                    self.stats.decisions += 1;
                    self.trail_lim.push(self.trail.len());
                    self.assign(lit, Reason::Decision);
                    continue;
                }
                Outcome::Conflict(cid) => {
                    self.stats.conflicts += 1;
                    let c = &self.clauses[cid as usize];
                    let (framed, sig) = (c.frame.is_some() || c.from_framed, c.sig);
                    (ConstraintKind::Clause, self.analyze(ConstraintKind::Clause, c.lits.clone(), framed, sig))
                }
                Outcome::Solution(src) => {
                    self.stats.solutions += 1;
                    let (start, sig) = match src {
                        Source::Model => (self.model_cube(), 0),
                        Source::Cube(kid) => (self.cubes[kid as usize].lits.clone(), self.cubes[kid as usize].sig),
                    };
                    (ConstraintKind::Cube, self.analyze(ConstraintKind::Cube, start, false, sig))
                }
            };
            match analysis {
                (kind, Analysis::Final(lits, from_framed, sig)) => {
                    self.learn(kind, lits.clone(), from_framed, sig);
                    self.final_constraint = Some((kind, lits));
                    break match kind {
                        ConstraintKind::Clause => Verdict::Unsat,
                        ConstraintKind::Cube => Verdict::Sat,
                    };
                }
                (kind, Analysis::Learn { lits, level, assert, from_framed, sig }) => {
                    self.backjump(level);
                    let id = self.learn(kind, lits, from_framed, sig);
                    if let Some(a) = assert {
                        let reason = match kind {
                            ConstraintKind::Clause => Reason::Clause(id),
                            ConstraintKind::Cube => Reason::Cube(id),
                        };
                        self.assign(a, reason);
                    }
                }
            }
            self.decay();
            if self.deadline.is_some_and(|d| Instant::now() >= d) {
                self.reset_trail();
                self.stats.wall_time += start.elapsed().as_secs_f64();
                return Err(SolveError::Timeout);
            }
            since_restart += 1;
            if since_restart as f64 >= restart_limit {
                since_restart = 0;
                restart_limit *= RESTART_FACTOR;
                self.stats.restarts += 1;
                self.backjump(0);
                self.reduce_db();
            }
        };
        debug!("verdict {verdict} after {} conflicts", self.stats.conflicts);
        self.reset_trail();
        self.stats.wall_time += start.elapsed().as_secs_f64();
        Ok(verdict)
    }

    fn locked(&self) -> (Vec<bool>, Vec<bool>) {
        let mut clauses = vec![false; self.clauses.len()];
        let mut cubes = vec![false; self.cubes.len()];
        for &l in &self.trail {
            match self.var(l).reason {
                Reason::Clause(c) => clauses[c as usize] = true,
                Reason::Cube(k) => cubes[k as usize] = true,
                _ => {}
            }
        }
        (clauses, cubes)
    }

    /// Drops the less active half of the learned constraints once their
    /// number passes the current limit.
    fn reduce_db(&mut self) {
        let limit = REDUCE_BASE + REDUCE_STEP * self.reduce_rounds;
        let (locked_c, locked_k) = self.locked();
        let mut learned: Vec<(f64, usize)> = self
            .clauses
            .iter()
            .enumerate()
            .filter(|(i, c)| c.learned && !c.deleted && !locked_c[*i])
            .map(|(i, c)| (c.activity, i))
            .collect();
        let mut cubes: Vec<(f64, usize)> = self
            .cubes
            .iter()
            .enumerate()
            .filter(|(i, k)| !k.deleted && !locked_k[*i])
            .map(|(i, k)| (k.activity, i))
            .collect();
        if learned.len() <= limit && cubes.len() <= limit {
            return;
        }
        self.reduce_rounds += 1;
        if learned.len() > limit {
            learned.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(_, i) in &learned[..learned.len() / 2] {
                self.clauses[i].deleted = true;
            }
        }
        if cubes.len() > limit {
            cubes.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(_, i) in &cubes[..cubes.len() / 2] {
                self.cubes[i].deleted = true;
            }
        }
        debug!("learned database reduced, round {}", self.reduce_rounds);
        self.rebuild_occurrences();
    }
}
