//! Brute-force QBF evaluation for testing. Splits variables in prefix order
//! and stops as soon as the matrix is decided under the partial assignment.

use thiserror::Error;

use crate::formula::{Assignment, Lit, Pcnf, Quantifier, Var, Verdict};
use crate::qres::{Constraint, ConstraintKind};

pub const DEFAULT_VAR_BOUND: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("formula has {vars} variables, oracle bound is {bound}")]
    TooManyVariables { vars: usize, bound: usize },
    #[error("variable {0} is not declared in the prefix")]
    UndeclaredVariable(Var),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    Unset,
    True,
    False,
}

struct Matrix<'a> {
    clauses: Vec<Vec<(usize, bool)>>,
    cube: Option<Vec<(usize, bool)>>,
    quantifiers: &'a [Quantifier],
}

#[derive(PartialEq, Eq)]
enum Status {
    True,
    False,
    Open,
}

impl Matrix<'_> {
    fn lit_value(values: &[Value], &(idx, neg): &(usize, bool)) -> Value {
        match (values[idx], neg) {
            (Value::Unset, _) => Value::Unset,
            (Value::True, false) | (Value::False, true) => Value::True,
            _ => Value::False,
        }
    }

    fn status(&self, values: &[Value]) -> Status {
        let mut cnf = Status::True;
        for c in &self.clauses {
            let mut any_unset = false;
            let mut sat = false;
            for l in c {
                match Self::lit_value(values, l) {
                    Value::True => {
                        sat = true;
                        break;
                    }
                    Value::Unset => any_unset = true,
                    Value::False => {}
                }
            }
            if sat {
                continue;
            }
            if any_unset {
                cnf = Status::Open;
            } else {
                cnf = Status::False;
                break;
            }
        }
        let Some(cube) = &self.cube else {
            return cnf;
        };
        if cnf == Status::True {
            return Status::True;
        }
        let mut cube_status = Status::True;
        for l in cube {
            match Self::lit_value(values, l) {
                Value::False => {
                    cube_status = Status::False;
                    break;
                }
                Value::Unset => cube_status = Status::Open,
                Value::True => {}
            }
        }
        match (cnf, cube_status) {
            (_, Status::True) => Status::True,
            (Status::False, Status::False) => Status::False,
            _ => Status::Open,
        }
    }

    fn eval(&self, values: &mut Vec<Value>, next: usize) -> bool {
        match self.status(values) {
            Status::True => return true,
            Status::False => return false,
            Status::Open => {}
        }
        // the matrix cannot be open once every variable is set
        let q = self.quantifiers[next];
        for v in [Value::False, Value::True] {
            values[next] = v;
            let r = self.eval(values, next + 1);
            let done = match q {
                Quantifier::Exists => r,
                Quantifier::Forall => !r,
            };
            if done {
                values[next] = Value::Unset;
                return r;
            }
        }
        values[next] = Value::Unset;
        q == Quantifier::Forall
    }
}

fn index_of(order: &[Var], lit: Lit) -> Result<(usize, bool), OracleError> {
    order
        .iter()
        .position(|&v| v == lit.var())
        .map(|i| (i, lit.is_negated()))
        .ok_or(OracleError::UndeclaredVariable(lit.var()))
}

fn evaluate(f: &Pcnf, extra_clause: Option<&[Lit]>, cube: Option<&[Lit]>, bound: usize) -> Result<Verdict, OracleError> {
    let order: Vec<Var> = f.prefix().vars().collect();
    if order.len() > bound {
        return Err(OracleError::TooManyVariables {
            vars: order.len(),
            bound,
        });
    }
    let quantifiers: Vec<Quantifier> = order
        .iter()
        .map(|&v| f.prefix().quantifier(v).expect("prefix var"))
        .collect();
    let convert = |c: &[Lit]| c.iter().map(|&l| index_of(&order, l)).collect::<Result<Vec<_>, _>>();
    let mut clauses = f.clauses().iter().map(|c| convert(c)).collect::<Result<Vec<_>, _>>()?;
    if let Some(c) = extra_clause {
        clauses.push(convert(c)?);
    }
    let cube = cube.map(convert).transpose()?;
    let m = Matrix {
        clauses,
        cube,
        quantifiers: &quantifiers,
    };
    let mut values = vec![Value::Unset; order.len()];
    Ok(if m.eval(&mut values, 0) {
        Verdict::Sat
    } else {
        Verdict::Unsat
    })
}

/// Truth value of a closed PCNF, with the default variable bound.
pub fn eval(f: &Pcnf) -> Result<Verdict, OracleError> {
    eval_bounded(f, DEFAULT_VAR_BOUND)
}

pub fn eval_bounded(f: &Pcnf, bound: usize) -> Result<Verdict, OracleError> {
    evaluate(f, None, None, bound)
}

/// Whether `a` satisfies every clause of `f`.
pub fn is_model(f: &Pcnf, a: &Assignment) -> bool {
    f.clauses().iter().all(|c| a.satisfies_clause(c))
}

/// Whether adding `c` (conjunctively for clauses, disjunctively for cubes)
/// leaves the truth value of `f` unchanged.
pub fn check_redundant(f: &Pcnf, c: &Constraint) -> Result<bool, OracleError> {
    let base = eval(f)?;
    let with = match c.kind {
        ConstraintKind::Clause => evaluate(f, Some(&c.lits), None, DEFAULT_VAR_BOUND)?,
        ConstraintKind::Cube => evaluate(f, None, Some(&c.lits), DEFAULT_VAR_BOUND)?,
    };
    Ok(base == with)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Prefix;

    pub(crate) fn psi() -> Pcnf {
        let mut p = Prefix::new();
        let b = p.push_block(Quantifier::Exists);
        p.add_variable(b, Var::new(1)).unwrap();
        let b = p.push_block(Quantifier::Forall);
        p.add_variable(b, Var::new(8)).unwrap();
        let b = p.push_block(Quantifier::Exists);
        for i in [5, 2, 6, 4] {
            p.add_variable(b, Var::new(i)).unwrap();
        }
        let mut f = Pcnf::with_prefix(p);
        for c in [[8, -5], [2, -6], [-1, 4], [-8, -4], [1, 6], [4, 5]] {
            f.add_clause_dimacs(&c);
        }
        f
    }

    #[test]
    fn example_formulas() {
        let mut f = psi();
        assert_eq!(eval(&f), Ok(Verdict::Sat));
        f.add_clause_dimacs(&[-2, -4]);
        assert_eq!(eval(&f), Ok(Verdict::Unsat));
    }

    #[test]
    fn trivial_formulas() {
        assert_eq!(eval(&Pcnf::new()), Ok(Verdict::Sat));
        let mut f = psi();
        f.add_clause(&[]);
        assert_eq!(eval(&f), Ok(Verdict::Unsat));
    }

    #[test]
    fn quantifier_matters() {
        let mut p = Prefix::new();
        let b = p.push_block(Quantifier::Forall);
        p.add_variable(b, Var::new(1)).unwrap();
        let b = p.push_block(Quantifier::Exists);
        p.add_variable(b, Var::new(2)).unwrap();
        let mut f = Pcnf::with_prefix(p);
        f.add_clause_dimacs(&[1, 2]);
        f.add_clause_dimacs(&[-1, -2]);
        assert_eq!(eval(&f), Ok(Verdict::Sat));

        let mut p = Prefix::new();
        let b = p.push_block(Quantifier::Exists);
        p.add_variable(b, Var::new(2)).unwrap();
        let b = p.push_block(Quantifier::Forall);
        p.add_variable(b, Var::new(1)).unwrap();
        let mut g = Pcnf::with_prefix(p);
        g.add_clause_dimacs(&[1, 2]);
        g.add_clause_dimacs(&[-1, -2]);
        assert_eq!(eval(&g), Ok(Verdict::Unsat));
    }

    #[test]
    fn models() {
        let f = psi();
        let a1 = Assignment::from_dimacs(&[6, 2, -8, -5, 4]).unwrap();
        assert!(is_model(&f, &a1));
        let mut p = Prefix::new();
        let b = p.push_block(Quantifier::Exists);
        for i in 1..=3 {
            p.add_variable(b, Var::new(i)).unwrap();
        }
        let mut g = Pcnf::with_prefix(p);
        g.add_clause_dimacs(&[1, 2]);
        g.add_clause_dimacs(&[-2, 3]);
        assert!(is_model(&g, &Assignment::from_dimacs(&[1, 3]).unwrap()));
        assert!(!is_model(&g, &Assignment::from_dimacs(&[2]).unwrap()));
    }

    #[test]
    fn redundancy() {
        let f = psi();
        assert_eq!(check_redundant(&f, &Constraint::clause_dimacs(&[-1])), Ok(true));
        assert_eq!(check_redundant(&f, &Constraint::clause_dimacs(&[])), Ok(false));
        assert_eq!(check_redundant(&f, &Constraint::cube_dimacs(&[-8])), Ok(true));
        let mut g = psi();
        g.add_clause_dimacs(&[-2, -4]);
        assert_eq!(check_redundant(&g, &Constraint::clause_dimacs(&[])), Ok(true));
        // the empty cube makes anything true
        assert_eq!(check_redundant(&g, &Constraint::cube_dimacs(&[])), Ok(false));
    }

    #[test]
    fn bound_and_undeclared() {
        let mut p = Prefix::new();
        let b = p.push_block(Quantifier::Exists);
        for i in 1..=25 {
            p.add_variable(b, Var::new(i)).unwrap();
        }
        let f = Pcnf::with_prefix(p);
        assert_eq!(
            eval(&f),
            Err(OracleError::TooManyVariables { vars: 25, bound: 24 })
        );
        assert!(eval_bounded(&f, 25).is_ok());
        assert_eq!(
            check_redundant(&psi(), &Constraint::clause_dimacs(&[3])),
            Err(OracleError::UndeclaredVariable(Var::new(3)))
        );
    }
}
