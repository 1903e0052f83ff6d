//! Universal and existential reduction, Q-resolution of clauses, cube
//! resolution and initial-cube generation.
//!
//! The public functions validate their inputs against a prefix. The
//! `*_lits` helpers are the unchecked kernels shared with the search engine.

use std::collections::HashSet;

use thiserror::Error;

use crate::formula::{Assignment, Lit, Pcnf, PrefixOrder, Quantifier, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QresError {
    #[error("expected a {expected:?}, got a {found:?}")]
    KindMismatch {
        expected: ConstraintKind,
        found: ConstraintKind,
    },
    #[error("variable {0} is not declared in the prefix")]
    UndeclaredVariable(Var),
    #[error("pivot {0} has the wrong quantifier for this resolution")]
    PivotQuantifier(Var),
    #[error("pivot {0} does not occur with opposite signs in the operands")]
    PivotMissing(Var),
    #[error("assignment is not a model of the formula")]
    NotAModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Clause,
    Cube,
}

impl ConstraintKind {
    /// Quantifier of the literals that reduction removes.
    fn reduced(self) -> Quantifier {
        match self {
            ConstraintKind::Clause => Quantifier::Forall,
            ConstraintKind::Cube => Quantifier::Exists,
        }
    }

    /// Quantifier a resolution pivot must carry.
    fn pivot(self) -> Quantifier {
        self.reduced().dual()
    }
}

/// A clause or a cube over distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub lits: Vec<Lit>,
}

impl Constraint {
    pub fn clause(lits: Vec<Lit>) -> Constraint {
        Constraint {
            kind: ConstraintKind::Clause,
            lits,
        }
    }

    pub fn cube(lits: Vec<Lit>) -> Constraint {
        Constraint {
            kind: ConstraintKind::Cube,
            lits,
        }
    }

    pub fn clause_dimacs(lits: &[i32]) -> Constraint {
        Constraint::clause(lits.iter().map(|&l| Lit::from_dimacs(l)).collect())
    }

    pub fn cube_dimacs(lits: &[i32]) -> Constraint {
        Constraint::cube(lits.iter().map(|&l| Lit::from_dimacs(l)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    /// Orders literals by prefix position, variable id breaking ties.
    pub fn sorted<P: PrefixOrder + ?Sized>(mut self, order: &P) -> Constraint {
        sort_lits(order, &mut self.lits);
        self
    }

    /// Literal set equality, ignoring order.
    pub fn same_lits(&self, other: &Constraint) -> bool {
        let a: HashSet<Lit> = self.lits.iter().copied().collect();
        let b: HashSet<Lit> = other.lits.iter().copied().collect();
        self.kind == other.kind && a == b
    }
}

fn lookup<P: PrefixOrder + ?Sized>(order: &P, var: Var) -> (Quantifier, u32) {
    order
        .lookup(var)
        .unwrap_or_else(|| panic!("variable {var} missing from prefix"))
}

pub(crate) fn sort_lits<P: PrefixOrder + ?Sized>(order: &P, lits: &mut [Lit]) {
    lits.sort_by_key(|l| (order.lookup(l.var()).map_or(u32::MAX, |x| x.1), l.var(), l.is_negated()));
}

/// Removes the literals that universal (clause) or existential (cube)
/// reduction drops: those of the reduced quantifier lying strictly after
/// every literal of the other quantifier.
pub(crate) fn reduce_lits<P: PrefixOrder + ?Sized>(order: &P, kind: ConstraintKind, lits: &mut Vec<Lit>) {
    let reduced = kind.reduced();
    let max_keep = lits
        .iter()
        .filter_map(|l| {
            let (q, d) = lookup(order, l.var());
            (q != reduced).then_some(d)
        })
        .max();
    lits.retain(|l| {
        let (q, d) = lookup(order, l.var());
        q != reduced || max_keep.is_some_and(|m| d < m)
    });
}

/// Tentative resolvent of `a` and `b` on `pivot`; `None` when it would
/// contain a complementary pair.
pub(crate) fn resolve_lits(a: &[Lit], b: &[Lit], pivot: Var) -> Option<Vec<Lit>> {
    let mut out: Vec<Lit> = a
        .iter()
        .chain(b.iter())
        .copied()
        .filter(|l| l.var() != pivot)
        .collect();
    out.sort();
    out.dedup();
    if out.windows(2).any(|w| w[0].var() == w[1].var()) {
        return None;
    }
    Some(out)
}

fn check_declared<P: PrefixOrder + ?Sized>(order: &P, c: &Constraint) -> Result<(), QresError> {
    match c.lits.iter().find(|l| order.lookup(l.var()).is_none()) {
        Some(l) => Err(QresError::UndeclaredVariable(l.var())),
        None => Ok(()),
    }
}

fn expect_kind(c: &Constraint, kind: ConstraintKind) -> Result<(), QresError> {
    if c.kind != kind {
        return Err(QresError::KindMismatch {
            expected: kind,
            found: c.kind,
        });
    }
    Ok(())
}

/// Universal reduction of a clause.
pub fn universal_reduce<P: PrefixOrder + ?Sized>(order: &P, c: &Constraint) -> Result<Constraint, QresError> {
    expect_kind(c, ConstraintKind::Clause)?;
    reduce(order, c)
}

/// Existential reduction of a cube.
pub fn existential_reduce<P: PrefixOrder + ?Sized>(order: &P, c: &Constraint) -> Result<Constraint, QresError> {
    expect_kind(c, ConstraintKind::Cube)?;
    reduce(order, c)
}

/// Kind-appropriate reduction.
pub fn reduce<P: PrefixOrder + ?Sized>(order: &P, c: &Constraint) -> Result<Constraint, QresError> {
    check_declared(order, c)?;
    let mut lits = c.lits.clone();
    reduce_lits(order, c.kind, &mut lits);
    Ok(Constraint { kind: c.kind, lits }.sorted(order))
}

/// Q-resolution (clauses, existential pivot) or cube resolution (cubes,
/// universal pivot). Each operand is reduced first; the resolvent itself
/// is returned unreduced. `Ok(None)` means the operands have no resolvent.
pub fn resolve<P: PrefixOrder + ?Sized>(
    order: &P,
    c1: &Constraint,
    c2: &Constraint,
    pivot: Var,
) -> Result<Option<Constraint>, QresError> {
    expect_kind(c2, c1.kind)?;
    check_declared(order, c1)?;
    check_declared(order, c2)?;
    let (q, _) = order
        .lookup(pivot)
        .ok_or(QresError::UndeclaredVariable(pivot))?;
    if q != c1.kind.pivot() {
        return Err(QresError::PivotQuantifier(pivot));
    }
    let pos1 = c1.lits.iter().find(|l| l.var() == pivot);
    let pos2 = c2.lits.iter().find(|l| l.var() == pivot);
    match (pos1, pos2) {
        (Some(&a), Some(&b)) if a == !b => {}
        _ => return Err(QresError::PivotMissing(pivot)),
    }
    let mut a = c1.lits.clone();
    let mut b = c2.lits.clone();
    reduce_lits(order, c1.kind, &mut a);
    reduce_lits(order, c1.kind, &mut b);
    Ok(resolve_lits(&a, &b, pivot).map(|lits| {
        Constraint {
            kind: c1.kind,
            lits,
        }
        .sorted(order)
    }))
}

/// The cube made of every literal of a model of `f`.
pub fn initial_cube(f: &Pcnf, model: &Assignment) -> Result<Constraint, QresError> {
    if !f.clauses().iter().all(|c| model.satisfies_clause(c)) {
        return Err(QresError::NotAModel);
    }
    let cube = Constraint::cube(model.lits().collect());
    check_declared(f.prefix(), &cube)?;
    Ok(cube.sorted(f.prefix()))
}

/// Strips the literals of `removed` variables from a cube and reduces the
/// remainder again.
pub fn clean_cube<P: PrefixOrder + ?Sized>(
    order: &P,
    cube: &Constraint,
    removed: &HashSet<Var>,
) -> Result<Constraint, QresError> {
    expect_kind(cube, ConstraintKind::Cube)?;
    let stripped = Constraint::cube(
        cube.lits
            .iter()
            .copied()
            .filter(|l| !removed.contains(&l.var()))
            .collect(),
    );
    reduce(order, &stripped)
}
