mod common;

use common::*;
use incqbf::oracle::{self, check_redundant, OracleError};
use incqbf::{Constraint, Pcnf, Verdict};

#[test]
fn oracle_matches_skolem_enumeration() {
    let mut r = rng(11);
    let mut compared = 0;
    while compared < 3000 {
        let f = random_pcnf(&mut r, 6, 4, 12);
        let Some(want) = skolem_eval(&f) else { continue };
        assert_eq!(eval(&f), want, "{}", incqbf::qdimacs::write(&f));
        compared += 1;
    }
}

#[test]
fn oracle_known_values() {
    assert_eq!(eval(&example_psi()), Verdict::Sat);
    assert_eq!(eval(&Pcnf::new()), Verdict::Sat);
    let mut f = Pcnf::with_prefix(example_prefix());
    for c in EXAMPLE_CLAUSES {
        f.add_clause_dimacs(&c);
    }
    f.add_clause_dimacs(&[-2, -4]);
    assert_eq!(eval(&f), Verdict::Unsat);
}

#[test]
fn oracle_bound_is_enforced() {
    let mut f = Pcnf::new();
    let clause: Vec<i32> = (1..=30).collect();
    f.add_clause_dimacs(&clause);
    assert!(matches!(
        oracle::eval_bounded(&f, 10),
        Err(OracleError::TooManyVariables { .. })
    ));
}

#[test]
fn solver_matches_oracle_under_assumptions() {
    let mut r = rng(12);
    for i in 0..4000 {
        let f = random_pcnf(&mut r, 12, 4, 30);
        let a = random_assumptions(&mut r, &f);
        let mut s = solver_for(&f);
        for &l in &a {
            s.assume(l).unwrap();
        }
        let got = s.solve().unwrap();
        assert_eq!(got, eval_under(&f, &a), "instance {i} under {a:?}\n{}", incqbf::qdimacs::write(&f));
    }
}

#[test]
fn seeds_do_not_change_verdicts() {
    let mut r = rng(13);
    for _ in 0..500 {
        let f = random_pcnf(&mut r, 12, 4, 30);
        let want = eval(&f);
        for seed in [1, 2, 99] {
            let mut s = solver_for(&f);
            s.set_seed(seed);
            assert_eq!(s.solve().unwrap(), want);
        }
    }
}

#[test]
fn learned_constraints_of_static_solves_are_redundant() {
    let mut r = rng(14);
    let mut checked = 0;
    for _ in 0..400 {
        let f = random_pcnf(&mut r, 9, 4, 24);
        let mut s = solver_for(&f);
        s.solve().unwrap();
        for c in s.learned_constraints() {
            assert!(check_redundant(&f, &c).unwrap(), "{c:?}\n{}", incqbf::qdimacs::write(&f));
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn check_redundant_rejects_non_consequences() {
    // x1 is free to be false, so the unit clause (x1) is not implied
    let f = example_psi();
    assert!(!check_redundant(&f, &Constraint::clause_dimacs(&[1])).unwrap());
    assert!(check_redundant(&f, &Constraint::clause_dimacs(&[-1])).unwrap());
}
