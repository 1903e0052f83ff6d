//! Incremental QCDCL solver for quantified Boolean formulas in prenex CNF.
//!
//! ```
//! use incqbf::{Lit, QbfSolver, Quantifier, Var, Verdict};
//!
//! let mut s = QbfSolver::new();
//! let b = s.append_block(Quantifier::Exists);
//! s.add_var(b, Var::new(1)).unwrap();
//! s.push().unwrap();
//! s.add_clause(&[Lit::from_dimacs(1)]).unwrap();
//! assert_eq!(s.solve().unwrap(), Verdict::Sat);
//! s.add_clause(&[Lit::from_dimacs(-1)]).unwrap();
//! assert_eq!(s.solve().unwrap(), Verdict::Unsat);
//! s.pop().unwrap();
//! assert_eq!(s.solve().unwrap(), Verdict::Sat);
//! ```

pub mod api;
pub mod cli;
pub mod formula;
pub mod incremental;
pub mod oracle;
pub mod qcdcl;
pub mod qdimacs;
pub mod qres;

pub use api::{ApiError, QbfSolver, SolverStats};
pub use formula::{Assignment, Lit, Pcnf, Prefix, Quantifier, Var, Verdict};
pub use qres::{Constraint, ConstraintKind};
