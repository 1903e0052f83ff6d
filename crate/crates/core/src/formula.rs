//! Prenex CNF data model: variables, literals, the quantifier prefix and
//! formulas under partial assignments.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// Largest variable id accepted anywhere in the crate.
pub const MAX_VAR_ID: u32 = (1 << 30) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("variable {0} is not declared in the prefix")]
    UndeclaredVariable(Var),
    #[error("variable {0} is already declared")]
    DuplicateVariable(Var),
    #[error("no quantifier block with index {0}")]
    InvalidBlock(usize),
    #[error("block position {position} is out of range (prefix has {len} blocks)")]
    InvalidPosition { position: usize, len: usize },
    #[error("variable {0} is assigned both true and false")]
    ConflictingAssignment(Var),
}

/// A propositional variable. Ids are positive.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn new(id: u32) -> Var {
        assert!(id > 0 && id <= MAX_VAR_ID, "variable id {id} out of range");
        Var(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal, packed as `var << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 << 1 | negated as u32)
    }

    pub fn positive(var: Var) -> Lit {
        Lit::new(var, false)
    }

    pub fn negative(var: Var) -> Lit {
        Lit::new(var, true)
    }

    /// Builds a literal from its DIMACS integer form. Panics on `0`.
    pub fn from_dimacs(value: i32) -> Lit {
        assert!(value != 0, "0 is not a literal");
        Lit::new(Var::new(value.unsigned_abs()), value < 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let id = self.var().id() as i32;
        if self.is_negated() {
            -id
        } else {
            id
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Dense index usable for per-literal tables.
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn dual(self) -> Quantifier {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }
}

/// Outcome of a satisfiability check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Verdict {
    Sat,
    Unsat,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Sat => write!(f, "SAT"),
            Verdict::Unsat => write!(f, "UNSAT"),
        }
    }
}

/// Read access to a linear quantifier ordering.
///
/// `depth` grows from the outermost block inwards; two variables compare
/// equal when they sit in the same block.
pub trait PrefixOrder {
    fn lookup(&self, var: Var) -> Option<(Quantifier, u32)>;
}

/// Relative position of two literals in the prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockOrder {
    Less,
    SameBlock,
    Greater,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub quantifier: Quantifier,
    pub vars: Vec<Var>,
}

/// User-visible quantifier prefix. Blocks are numbered from 1; index 0 is
/// reserved for the solver's hidden selector block.
#[derive(Clone, Debug, Default)]
pub struct Prefix {
    blocks: Vec<Block>,
    var_block: HashMap<Var, usize>,
}

impl PartialEq for Prefix {
    fn eq(&self, other: &Prefix) -> bool {
        self.blocks == other.blocks
    }
}

impl Eq for Prefix {}

impl Prefix {
    pub fn new() -> Prefix {
        Prefix::default()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_vars(&self) -> usize {
        self.var_block.len()
    }

    pub fn contains(&self, var: Var) -> bool {
        self.var_block.contains_key(&var)
    }

    /// Variables in prefix order.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.blocks.iter().flat_map(|b| b.vars.iter().copied())
    }

    /// 1-based index of the block holding `var`.
    pub fn block_of(&self, var: Var) -> Option<usize> {
        self.var_block.get(&var).map(|&i| i + 1)
    }

    pub fn quantifier(&self, var: Var) -> Option<Quantifier> {
        self.var_block
            .get(&var)
            .map(|&i| self.blocks[i].quantifier)
    }

    /// Inserts an empty block so that it ends up at 0-based `position`;
    /// later blocks shift by one. Returns the new block's 1-based index.
    pub fn add_block(&mut self, position: usize, quantifier: Quantifier) -> Result<usize, FormulaError> {
        if position > self.blocks.len() {
            return Err(FormulaError::InvalidPosition {
                position,
                len: self.blocks.len(),
            });
        }
        self.blocks.insert(
            position,
            Block {
                quantifier,
                vars: Vec::new(),
            },
        );
        for idx in self.var_block.values_mut() {
            if *idx >= position {
                *idx += 1;
            }
        }
        Ok(position + 1)
    }

    /// Appends a block at the innermost end.
    pub fn push_block(&mut self, quantifier: Quantifier) -> usize {
        self.add_block(self.blocks.len(), quantifier)
            .expect("appending is always in range")
    }

    /// Adds `var` to the block with 1-based index `block`.
    pub fn add_variable(&mut self, block: usize, var: Var) -> Result<(), FormulaError> {
        if block == 0 || block > self.blocks.len() {
            return Err(FormulaError::InvalidBlock(block));
        }
        if self.var_block.contains_key(&var) {
            return Err(FormulaError::DuplicateVariable(var));
        }
        self.blocks[block - 1].vars.push(var);
        self.var_block.insert(var, block - 1);
        Ok(())
    }

    /// Declares `var` existentially in the outermost position, reusing the
    /// first block when it is existential.
    pub fn adopt_free(&mut self, var: Var) -> Result<(), FormulaError> {
        let block = match self.blocks.first() {
            Some(b) if b.quantifier == Quantifier::Exists => 1,
            _ => self.add_block(0, Quantifier::Exists)?,
        };
        self.add_variable(block, var)
    }

    /// Drops variables outside `keep`, then empty blocks, then merges
    /// adjacent blocks with equal quantifiers. Returns the dropped variables.
    pub fn retain_vars(&mut self, keep: &HashSet<Var>) -> Vec<Var> {
        let mut removed = Vec::new();
        let mut merged: Vec<Block> = Vec::with_capacity(self.blocks.len());
        for mut block in std::mem::take(&mut self.blocks) {
            block.vars.retain(|v| {
                let k = keep.contains(v);
                if !k {
                    removed.push(*v);
                }
                k
            });
            if block.vars.is_empty() {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.quantifier == block.quantifier => last.vars.extend(block.vars),
                _ => merged.push(block),
            }
        }
        self.blocks = merged;
        self.reindex();
        removed.sort();
        removed
    }

    fn reindex(&mut self) {
        self.var_block.clear();
        for (i, b) in self.blocks.iter().enumerate() {
            for &v in &b.vars {
                self.var_block.insert(v, i);
            }
        }
    }

    /// True when no block is empty and neighbours alternate.
    pub fn is_compact(&self) -> bool {
        self.blocks.iter().all(|b| !b.vars.is_empty())
            && self
                .blocks
                .windows(2)
                .all(|w| w[0].quantifier != w[1].quantifier)
    }
}

impl PrefixOrder for Prefix {
    fn lookup(&self, var: Var) -> Option<(Quantifier, u32)> {
        self.var_block
            .get(&var)
            .map(|&i| (self.blocks[i].quantifier, i as u32 + 1))
    }
}

/// Compares two literals by the block of their variables.
pub fn compare_literals<P: PrefixOrder + ?Sized>(
    prefix: &P,
    a: Lit,
    b: Lit,
) -> Result<BlockOrder, FormulaError> {
    let (_, da) = prefix
        .lookup(a.var())
        .ok_or(FormulaError::UndeclaredVariable(a.var()))?;
    let (_, db) = prefix
        .lookup(b.var())
        .ok_or(FormulaError::UndeclaredVariable(b.var()))?;
    Ok(match da.cmp(&db) {
        std::cmp::Ordering::Less => BlockOrder::Less,
        std::cmp::Ordering::Equal => BlockOrder::SameBlock,
        std::cmp::Ordering::Greater => BlockOrder::Greater,
    })
}

/// A set of literals with at most one literal per variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<Var, bool>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_lits<I: IntoIterator<Item = Lit>>(lits: I) -> Result<Assignment, FormulaError> {
        let mut a = Assignment::new();
        for l in lits {
            a.insert(l)?;
        }
        Ok(a)
    }

    pub fn from_dimacs(lits: &[i32]) -> Result<Assignment, FormulaError> {
        Assignment::from_lits(lits.iter().map(|&l| Lit::from_dimacs(l)))
    }

    pub fn insert(&mut self, lit: Lit) -> Result<(), FormulaError> {
        let value = !lit.is_negated();
        match self.values.insert(lit.var(), value) {
            Some(old) if old != value => {
                self.values.insert(lit.var(), old);
                Err(FormulaError::ConflictingAssignment(lit.var()))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.values.get(&var).copied()
    }

    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.value(lit.var()).map(|v| v != lit.is_negated())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn remove(&mut self, var: Var) -> Option<bool> {
        self.values.remove(&var)
    }

    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        self.values.iter().map(|(&v, &b)| Lit::new(v, !b))
    }

    /// True when some literal of `clause` is set true.
    pub fn satisfies_clause(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit_value(l) == Some(true))
    }
}

/// Result of applying an assignment to a formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduced {
    True,
    False,
    Residual(Pcnf),
}

/// A closed formula in prenex CNF.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pcnf {
    prefix: Prefix,
    clauses: Vec<Vec<Lit>>,
}

/// Sorts, removes duplicate literals and reports whether the clause is a
/// tautology.
pub(crate) fn normalize_clause(lits: &[Lit]) -> Option<Vec<Lit>> {
    let mut out = lits.to_vec();
    out.sort();
    out.dedup();
    if out.windows(2).any(|w| w[0].var() == w[1].var()) {
        return None;
    }
    Some(out)
}

impl Pcnf {
    pub fn new() -> Pcnf {
        Pcnf::default()
    }

    pub fn with_prefix(prefix: Prefix) -> Pcnf {
        Pcnf {
            prefix,
            clauses: Vec::new(),
        }
    }

    /// Builds a formula, adopting free variables into an outermost
    /// existential block.
    pub fn from_parts(prefix: Prefix, clauses: Vec<Vec<Lit>>) -> Pcnf {
        let mut f = Pcnf::with_prefix(prefix);
        for c in clauses {
            f.add_clause(&c);
        }
        f
    }

    pub fn prefix(&self) -> &Prefix {
        &self.prefix
    }

    pub fn prefix_mut(&mut self) -> &mut Prefix {
        &mut self.prefix
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn num_vars(&self) -> usize {
        self.prefix.num_vars()
    }

    /// Adds a clause. Duplicate literals are merged and tautologies are
    /// dropped (returns `false`). Undeclared variables are adopted.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        let Some(clause) = normalize_clause(lits) else {
            return false;
        };
        for l in &clause {
            if !self.prefix.contains(l.var()) {
                self.prefix
                    .adopt_free(l.var())
                    .expect("variable was checked to be undeclared");
            }
        }
        self.clauses.push(clause);
        true
    }

    pub fn add_clause_dimacs(&mut self, lits: &[i32]) -> bool {
        let lits: Vec<Lit> = lits.iter().map(|&l| Lit::from_dimacs(l)).collect();
        self.add_clause(&lits)
    }

    /// Removes non-occurring variables and empty blocks and merges
    /// neighbouring blocks with equal quantifiers.
    pub fn compact(&mut self) -> Vec<Var> {
        let occurring: HashSet<Var> = self
            .clauses
            .iter()
            .flat_map(|c| c.iter().map(|l| l.var()))
            .collect();
        self.prefix.retain_vars(&occurring)
    }

    pub fn compacted(&self) -> Pcnf {
        let mut f = self.clone();
        f.compact();
        f
    }

    /// The formula under `assignment`: satisfied clauses vanish, false
    /// literals are dropped, and the prefix is compacted. Unit clauses that
    /// arise are not propagated.
    pub fn apply(&self, assignment: &Assignment) -> Reduced {
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            if assignment.satisfies_clause(c) {
                continue;
            }
            let rest: Vec<Lit> = c
                .iter()
                .copied()
                .filter(|&l| assignment.lit_value(l).is_none())
                .collect();
            if rest.is_empty() {
                return Reduced::False;
            }
            clauses.push(rest);
        }
        if clauses.is_empty() {
            return Reduced::True;
        }
        let mut f = Pcnf {
            prefix: self.prefix.clone(),
            clauses,
        };
        f.compact();
        Reduced::Residual(f)
    }
}

pub fn apply_assignment(f: &Pcnf, a: &Assignment) -> Reduced {
    f.apply(a)
}
