//! Programmatic solver interface: prefix editing, a push/pop clause stack,
//! assumptions, solving and relevant-assumption extraction.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{FormulaError, Lit, Pcnf, Prefix, Quantifier, Var, Verdict};
use crate::qcdcl::{Engine, SolveError};
use crate::qres::{Constraint, ConstraintKind};

pub use crate::qcdcl::Stats as SolverStats;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApiError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("pop on an empty frame stack")]
    EmptyStack,
    #[error("variable {0} is not declared")]
    UndeclaredVariable(Var),
    #[error("cannot assume {0}: an earlier block is not fully assumed")]
    NotAssumable(Lit),
    #[error("contradictory assumptions on variable {0}")]
    ContradictoryAssumption(Var),
    #[error("relevant assumptions need an unsatisfiable result with an outermost existential block or a satisfiable one with an outermost universal block")]
    NoRelevantAssumptions,
    #[error("manual selectors cannot be combined with push and pop")]
    SelectorModeMix,
    #[error("selector {0} is not in an outermost existential block")]
    SelectorNotOutermost(Var),
    #[error("selectors must be declared before the first solve")]
    SelectorAfterSolve,
    #[error("assignment is not a model of the enabled clauses")]
    NotAModel,
    #[error("time limit reached")]
    Timeout,
}

/// Selector bookkeeping of one learned clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnedClauseInfo {
    pub selectors: usize,
    pub from_framed: bool,
    pub enabled: bool,
}

pub struct QbfSolver {
    engine: Engine,
    assumptions: Vec<Lit>,
    last_result: Option<Verdict>,
    relevant: Vec<Lit>,
    last_stats: SolverStats,
    manual_selectors: HashSet<Var>,
    solved_once: bool,
    timeout: Option<Duration>,
}

impl Default for QbfSolver {
    fn default() -> Self {
        QbfSolver::new()
    }
}

impl QbfSolver {
    pub fn new() -> QbfSolver {
        QbfSolver {
            engine: Engine::new(),
            assumptions: Vec::new(),
            last_result: None,
            relevant: Vec::new(),
            last_stats: SolverStats::default(),
            manual_selectors: HashSet::new(),
            solved_once: false,
            timeout: None,
        }
    }

    /// A solver holding `f` in its permanent base.
    pub fn from_pcnf(f: &Pcnf) -> QbfSolver {
        let mut s = QbfSolver::new();
        s.engine.load(f);
        s
    }

    pub fn prefix(&self) -> &Prefix {
        &self.engine.prefix
    }

    /// Inserts an empty block at 0-based `position`; returns its 1-based index.
    pub fn new_block(&mut self, position: usize, q: Quantifier) -> Result<usize, ApiError> {
        Ok(self.engine.prefix.add_block(position, q)?)
    }

    /// Appends an empty innermost block; returns its 1-based index.
    pub fn append_block(&mut self, q: Quantifier) -> usize {
        self.engine.prefix.push_block(q)
    }

    pub fn add_var(&mut self, block: usize, var: Var) -> Result<(), ApiError> {
        self.engine.prefix.add_variable(block, var)?;
        let i = self.engine.intern(var);
        self.engine.vars[i as usize].quantifier = self.engine.prefix.quantifier(var).expect("just added");
        Ok(())
    }

    /// Opens a frame; clauses added afterwards are removed by the matching pop.
    pub fn push(&mut self) -> Result<usize, ApiError> {
        if !self.manual_selectors.is_empty() {
            return Err(ApiError::SelectorModeMix);
        }
        Ok(self.engine.push_frame())
    }

    pub fn pop(&mut self) -> Result<usize, ApiError> {
        if !self.manual_selectors.is_empty() {
            return Err(ApiError::SelectorModeMix);
        }
        self.engine.pop_frame().ok_or(ApiError::EmptyStack)
    }

    /// Number of frames currently on the stack.
    pub fn frame_depth(&self) -> usize {
        self.engine.active_frames.len()
    }

    /// Adds a clause to the topmost frame, or permanently when the stack is
    /// empty. Undeclared variables join the outermost existential block.
    /// Returns `false` when the clause is a tautology.
    pub fn add_clause(&mut self, lits: &[Lit]) -> Result<bool, ApiError> {
        for l in lits {
            if !self.engine.prefix.contains(l.var()) {
                self.engine.prefix.adopt_free(l.var())?;
            }
        }
        Ok(self.engine.add_user_clause(lits).is_some())
    }

    pub fn add_clause_dimacs(&mut self, lits: &[i32]) -> Result<bool, ApiError> {
        let lits: Vec<Lit> = lits.iter().map(|&l| Lit::from_dimacs(l)).collect();
        self.add_clause(&lits)
    }

    fn check_assumable(&self, lit: Lit, others: &[Lit]) -> Result<(), ApiError> {
        let &i = self
            .engine
            .user_to_internal
            .get(&lit.var())
            .ok_or(ApiError::UndeclaredVariable(lit.var()))?;
        let v = &self.engine.vars[i as usize];
        if v.occurrences == 0 {
            return Ok(());
        }
        let covered: HashSet<Var> = others.iter().map(|l| l.var()).collect();
        for d in 1..v.depth {
            for &w in self.engine.active_at_depth(d) {
                let user = self.engine.vars[w as usize].user.expect("user variable");
                if !covered.contains(&user) {
                    return Err(ApiError::NotAssumable(lit));
                }
            }
        }
        Ok(())
    }

    /// Records an assumption for the next solve call only.
    pub fn assume(&mut self, lit: Lit) -> Result<(), ApiError> {
        if self.assumptions.contains(&!lit) {
            return Err(ApiError::ContradictoryAssumption(lit.var()));
        }
        if self.assumptions.contains(&lit) {
            return Ok(());
        }
        self.engine.rebuild_order();
        self.check_assumable(lit, &self.assumptions)?;
        self.assumptions.push(lit);
        Ok(())
    }

    pub fn assume_dimacs(&mut self, lit: i32) -> Result<(), ApiError> {
        self.assume(Lit::from_dimacs(lit))
    }

    /// Declares `var` as a user-managed selector, enabled or disabled
    /// through assumptions.
    pub fn declare_selector(&mut self, var: Var) -> Result<(), ApiError> {
        if !self.engine.frames.is_empty() {
            return Err(ApiError::SelectorModeMix);
        }
        if self.solved_once {
            return Err(ApiError::SelectorAfterSolve);
        }
        let p = &self.engine.prefix;
        if p.block_of(var) != Some(1) || p.quantifier(var) != Some(Quantifier::Exists) {
            return Err(ApiError::SelectorNotOutermost(var));
        }
        self.engine.manual_selectors = true;
        self.manual_selectors.insert(var);
        Ok(())
    }

    /// Keep learned constraints between calls (default) or wipe them before
    /// every solve.
    pub fn set_keep_learned(&mut self, keep: bool) {
        self.engine.keep_learned = keep;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.engine.set_seed(seed);
    }

    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
    }

    /// Minimum number of disabled clauses before they are physically removed.
    pub fn set_gc_min_disabled(&mut self, n: usize) {
        self.engine.gc_min_disabled = n;
    }

    pub fn solve(&mut self) -> Result<Verdict, ApiError> {
        let before = self.engine.stats.clone();
        self.last_result = None;
        self.relevant.clear();
        let user = std::mem::take(&mut self.assumptions);
        let mut internal = self.engine.prepare_solve();
        let mut active_user = Vec::new();
        for (n, &a) in user.iter().enumerate() {
            self.check_assumable(a, &user[..n])?;
            let i = self.engine.to_internal(a).expect("checked");
            if self.engine.var(i).occurrences > 0 {
                internal.push(i);
                active_user.push((a, i));
            }
        }
        self.engine.deadline = self.timeout.map(|t| Instant::now() + t);
        let result = self.engine.solve_core(&internal);
        self.engine.deadline = None;
        self.solved_once = true;
        self.last_stats = self.engine.stats.since(&before);
        let verdict = match result {
            Ok(v) => v,
            Err(SolveError::Timeout) => return Err(ApiError::Timeout),
            Err(SolveError::ContradictoryAssumptions(v)) => return Err(ApiError::ContradictoryAssumption(v)),
        };
        if let Some((kind, lits)) = &self.engine.final_constraint {
            let set: HashSet<Lit> = lits.iter().copied().collect();
            self.relevant = active_user
                .iter()
                .filter(|(_, i)| match kind {
                    ConstraintKind::Clause => set.contains(&!*i),
                    ConstraintKind::Cube => set.contains(i),
                })
                .map(|(a, _)| *a)
                .collect();
        }
        self.last_result = Some(verdict);
        Ok(verdict)
    }

    pub fn last_result(&self) -> Option<Verdict> {
        self.last_result
    }

    fn outermost_quantifier(&self) -> Quantifier {
        self.engine
            .active_at_depth(1)
            .first()
            .map_or(Quantifier::Exists, |&i| self.engine.vars[i as usize].quantifier)
    }

    /// Assumptions used by the final constraint of the last solve call.
    pub fn relevant_assumptions(&self) -> Result<Vec<Lit>, ApiError> {
        match (self.last_result, self.outermost_quantifier()) {
            (Some(Verdict::Unsat), Quantifier::Exists) | (Some(Verdict::Sat), Quantifier::Forall) => {
                Ok(self.relevant.clone())
            }
            _ => Err(ApiError::NoRelevantAssumptions),
        }
    }

    /// Counters accumulated over all calls.
    pub fn stats(&self) -> &SolverStats {
        &self.engine.stats
    }

    /// Counters of the last solve call.
    pub fn last_stats(&self) -> &SolverStats {
        &self.last_stats
    }

    /// The enabled original clauses over user variables, compacted.
    pub fn enabled_formula(&self) -> Pcnf {
        let mut f = Pcnf::with_prefix(self.engine.prefix.clone());
        for i in 0..self.engine.clauses.len() {
            let c = &self.engine.clauses[i];
            if c.learned || !self.engine.clause_enabled(i) {
                continue;
            }
            let lits: Vec<Lit> = c.lits.iter().filter_map(|&l| self.engine.to_user(l)).collect();
            f.add_clause(&lits);
        }
        f.compact();
        f
    }

    /// Enabled learned clauses with active selectors removed, then learned cubes.
    pub fn learned_constraints(&self) -> Vec<Constraint> {
        let e = &self.engine;
        let mut out = Vec::new();
        for i in 0..e.clauses.len() {
            let c = &e.clauses[i];
            if !c.learned || !e.clause_enabled(i) {
                continue;
            }
            out.push(Constraint::clause(c.lits.iter().filter_map(|&l| e.to_user(l)).collect()));
        }
        for k in e.cubes.iter().filter(|k| !k.deleted) {
            out.push(Constraint::cube(k.lits.iter().filter_map(|&l| e.to_user(l)).collect()));
        }
        out
    }

    pub fn learned_clause_audit(&self) -> Vec<LearnedClauseInfo> {
        let e = &self.engine;
        (0..e.clauses.len())
            .filter(|&i| e.clauses[i].learned && !e.clauses[i].deleted)
            .map(|i| {
                let c = &e.clauses[i];
                LearnedClauseInfo {
                    selectors: c.lits.iter().filter(|&&l| e.is_selector(l)).count(),
                    from_framed: c.from_framed,
                    enabled: e.clause_enabled(i),
                }
            })
            .collect()
    }

    /// Models currently kept for reseeding learned cubes.
    pub fn initial_cube_models(&self) -> Vec<Vec<Lit>> {
        self.engine.initial_cubes.iter().cloned().collect()
    }

    /// Stores a model of the enabled clauses as if the search had found it.
    pub fn remember_model(&mut self, lits: &[Lit]) -> Result<(), ApiError> {
        let values: HashMap<Var, bool> = lits.iter().map(|l| (l.var(), !l.is_negated())).collect();
        if values.len() != lits.len() {
            return Err(ApiError::NotAModel);
        }
        let f = self.enabled_formula();
        let ok = f
            .clauses()
            .iter()
            .all(|c| c.iter().any(|l| values.get(&l.var()) == Some(&!l.is_negated())));
        if !ok {
            return Err(ApiError::NotAModel);
        }
        self.engine.initial_cubes.push(lits.to_vec());
        Ok(())
    }
}
