#![allow(dead_code)]

use incqbf::formula::{Assignment, Reduced};
use incqbf::oracle;
use incqbf::{Lit, Pcnf, Prefix, QbfSolver, Quantifier, Var, Verdict};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn lits(v: &[i32]) -> Vec<Lit> {
    v.iter().map(|&l| Lit::from_dimacs(l)).collect()
}

/// ∃x1 ∀y8 ∃x5,x2,x6,x4, the prefix of the six-clause running example.
pub fn example_prefix() -> Prefix {
    let mut p = Prefix::new();
    let b = p.push_block(Quantifier::Exists);
    p.add_variable(b, Var::new(1)).unwrap();
    let b = p.push_block(Quantifier::Forall);
    p.add_variable(b, Var::new(8)).unwrap();
    let b = p.push_block(Quantifier::Exists);
    for i in [5, 2, 6, 4] {
        p.add_variable(b, Var::new(i)).unwrap();
    }
    p
}

pub const EXAMPLE_CLAUSES: [[i32; 2]; 6] = [[8, -5], [2, -6], [-1, 4], [-8, -4], [1, 6], [4, 5]];

pub fn example_psi() -> Pcnf {
    let mut f = Pcnf::with_prefix(example_prefix());
    for c in EXAMPLE_CLAUSES {
        f.add_clause_dimacs(&c);
    }
    f
}

pub fn example_solver(clauses: &[[i32; 2]]) -> QbfSolver {
    let mut s = QbfSolver::new();
    for (i, b) in example_prefix().blocks().iter().enumerate() {
        let idx = s.append_block(b.quantifier);
        assert_eq!(idx, i + 1);
        for &v in &b.vars {
            s.add_var(idx, v).unwrap();
        }
    }
    for c in clauses {
        s.add_clause_dimacs(c).unwrap();
    }
    s
}

/// Prefix over variables `1..=nvars` split into at most `max_blocks`
/// alternating blocks.
pub fn random_prefix(rng: &mut TestRng, nvars: u32, max_blocks: usize) -> Prefix {
    let mut vars: Vec<u32> = (1..=nvars).collect();
    vars.shuffle(rng);
    let nblocks = rng.gen_range(1..=max_blocks.min(nvars as usize).max(1));
    let mut cuts: Vec<usize> = (1..nvars as usize).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(nblocks - 1).collect();
    cuts.sort();
    cuts.push(nvars as usize);
    let mut q = if rng.gen_bool(0.5) {
        Quantifier::Exists
    } else {
        Quantifier::Forall
    };
    let mut p = Prefix::new();
    let mut start = 0;
    for end in cuts {
        let b = p.push_block(q);
        for &v in &vars[start..end] {
            p.add_variable(b, Var::new(v)).unwrap();
        }
        start = end;
        q = q.dual();
    }
    p
}

pub fn random_clause(rng: &mut TestRng, nvars: u32) -> Vec<Lit> {
    let len = rng.gen_range(1..=4.min(nvars));
    let mut vars: Vec<u32> = (1..=nvars).collect();
    vars.shuffle(rng);
    vars[..len as usize]
        .iter()
        .map(|&v| Lit::new(Var::new(v), rng.gen_bool(0.5)))
        .collect()
}

pub fn random_pcnf(rng: &mut TestRng, max_vars: u32, max_blocks: usize, max_clauses: usize) -> Pcnf {
    let nvars = rng.gen_range(1..=max_vars);
    let p = random_prefix(rng, nvars, max_blocks);
    let mut f = Pcnf::with_prefix(p);
    for _ in 0..rng.gen_range(0..=max_clauses) {
        let c = random_clause(rng, nvars);
        f.add_clause(&c);
    }
    f
}

pub fn eval(f: &Pcnf) -> Verdict {
    oracle::eval(f).expect("within oracle bound")
}

/// Truth value of `f` under `a`.
pub fn eval_under(f: &Pcnf, a: &[Lit]) -> Verdict {
    let a = Assignment::from_lits(a.iter().copied()).unwrap();
    match f.apply(&a) {
        Reduced::True => Verdict::Sat,
        Reduced::False => Verdict::Unsat,
        Reduced::Residual(g) => eval(&g),
    }
}

/// Loads `f` into a fresh solver through the block and clause interface.
pub fn solver_for(f: &Pcnf) -> QbfSolver {
    let mut s = QbfSolver::new();
    for b in f.prefix().blocks() {
        let idx = s.append_block(b.quantifier);
        for &v in &b.vars {
            s.add_var(idx, v).unwrap();
        }
    }
    for c in f.clauses() {
        s.add_clause(c).unwrap();
    }
    s
}

/// Random literals over the first effective block, and over the second
/// when the first is fully assumed.
pub fn random_assumptions(rng: &mut TestRng, f: &Pcnf) -> Vec<Lit> {
    let g = f.compacted();
    let mut out = Vec::new();
    for b in g.prefix().blocks() {
        let mut vars = b.vars.clone();
        vars.shuffle(rng);
        let take = rng.gen_range(0..=vars.len());
        for &v in &vars[..take] {
            out.push(Lit::new(v, rng.gen_bool(0.5)));
        }
        if take < vars.len() || rng.gen_bool(0.5) {
            break;
        }
    }
    out
}

/// Satisfiability by enumerating Skolem functions for the existential
/// variables. Exponential in everything; `None` when the tables would need
/// more than 20 bits.
pub fn skolem_eval(f: &Pcnf) -> Option<Verdict> {
    let order: Vec<(Var, Quantifier)> = f
        .prefix()
        .vars()
        .map(|v| (v, f.prefix().quantifier(v).unwrap()))
        .collect();
    let universals: Vec<Var> = order
        .iter()
        .filter(|(_, q)| *q == Quantifier::Forall)
        .map(|(v, _)| *v)
        .collect();
    // for every existential, the universals it may depend on
    let deps: Vec<(Var, Vec<usize>)> = order
        .iter()
        .enumerate()
        .filter(|(_, (_, q))| *q == Quantifier::Exists)
        .map(|(i, (v, _))| {
            let before: Vec<usize> = universals
                .iter()
                .enumerate()
                .filter(|(_, u)| order[..i].iter().any(|(w, _)| w == *u))
                .map(|(j, _)| j)
                .collect();
            (*v, before)
        })
        .collect();
    let table_bits: Vec<usize> = deps.iter().map(|(_, d)| 1usize << d.len()).collect();
    let total_bits: usize = table_bits.iter().sum();
    if total_bits > 20 {
        return None;
    }
    for strategy in 0u64..(1u64 << total_bits) {
        let mut all_ok = true;
        for univ in 0u64..(1u64 << universals.len()) {
            let mut a = Assignment::new();
            for (j, &u) in universals.iter().enumerate() {
                a.insert(Lit::new(u, univ >> j & 1 == 0)).unwrap();
            }
            let mut offset = 0;
            for ((v, d), bits) in deps.iter().zip(&table_bits) {
                let mut idx = 0;
                for (k, &j) in d.iter().enumerate() {
                    idx |= ((univ >> j & 1) as usize) << k;
                }
                let value = strategy >> (offset + idx) & 1 == 1;
                a.insert(Lit::new(*v, !value)).unwrap();
                offset += bits;
            }
            if !f.clauses().iter().all(|c| a.satisfies_clause(c)) {
                all_ok = false;
                break;
            }
        }
        if all_ok {
            return Some(Verdict::Sat);
        }
    }
    Some(Verdict::Unsat)
}

#[derive(Clone, Debug)]
pub enum Step {
    Push,
    Pop,
    Add(Vec<Lit>),
    Solve(Vec<Lit>),
}

/// The clause stack a script builds, for computing the enabled formula.
#[derive(Clone, Debug)]
pub struct StackModel {
    pub prefix: Prefix,
    pub base: Vec<Vec<Lit>>,
    pub frames: Vec<Vec<Vec<Lit>>>,
}

impl StackModel {
    pub fn new(prefix: Prefix) -> StackModel {
        StackModel {
            prefix,
            base: Vec::new(),
            frames: Vec::new(),
        }
    }

    pub fn apply(&mut self, step: &Step) {
        match step {
            Step::Push => self.frames.push(Vec::new()),
            Step::Pop => {
                self.frames.pop();
            }
            Step::Add(c) => match self.frames.last_mut() {
                Some(f) => f.push(c.clone()),
                None => self.base.push(c.clone()),
            },
            Step::Solve(_) => {}
        }
    }

    pub fn enabled(&self) -> Pcnf {
        let mut f = Pcnf::with_prefix(self.prefix.clone());
        for c in self.base.iter().chain(self.frames.iter().flatten()) {
            f.add_clause(c);
        }
        f
    }
}

/// A random push/pop/add/solve script over a fixed prefix. Solve steps
/// sometimes carry assumptions valid for the formula enabled at that point.
pub fn random_script(rng: &mut TestRng, max_vars: u32, max_commands: usize) -> (Prefix, Vec<Step>) {
    let nvars = rng.gen_range(1..=max_vars);
    let prefix = random_prefix(rng, nvars, 4);
    let mut model = StackModel::new(prefix.clone());
    let mut steps = Vec::new();
    let n = rng.gen_range(1..=max_commands);
    for _ in 0..n {
        let r: f64 = rng.gen();
        let step = if r < 0.4 {
            Step::Add(random_clause(rng, nvars))
        } else if r < 0.55 {
            Step::Push
        } else if r < 0.7 && !model.frames.is_empty() {
            Step::Pop
        } else if r < 0.9 {
            Step::Solve(Vec::new())
        } else {
            let a = random_assumptions(rng, &model.enabled());
            Step::Solve(a)
        };
        model.apply(&step);
        steps.push(step);
    }
    steps.push(Step::Solve(Vec::new()));
    (prefix, steps)
}

pub fn solver_with_prefix(prefix: &Prefix) -> QbfSolver {
    let mut s = QbfSolver::new();
    for b in prefix.blocks() {
        let idx = s.append_block(b.quantifier);
        for &v in &b.vars {
            s.add_var(idx, v).unwrap();
        }
    }
    s
}

/// Runs a script, calling `check` after every solve with the solver, the
/// enabled formula, the assumptions and the verdict.
pub fn run_script<F>(prefix: &Prefix, steps: &[Step], keep: bool, check: F) -> Result<(), String>
where
    F: FnMut(&QbfSolver, &Pcnf, &[Lit], Verdict) -> Result<(), String>,
{
    run_script_with(prefix, steps, |s| s.set_keep_learned(keep), check)
}

/// Like `run_script`, with `setup` applied to the fresh solver.
pub fn run_script_with<S, F>(prefix: &Prefix, steps: &[Step], setup: S, mut check: F) -> Result<(), String>
where
    S: FnOnce(&mut QbfSolver),
    F: FnMut(&QbfSolver, &Pcnf, &[Lit], Verdict) -> Result<(), String>,
{
    let mut s = solver_with_prefix(prefix);
    setup(&mut s);
    let mut model = StackModel::new(prefix.clone());
    for (i, step) in steps.iter().enumerate() {
        match step {
            Step::Push => {
                s.push().map_err(|e| format!("step {i}: {e}"))?;
            }
            Step::Pop => {
                s.pop().map_err(|e| format!("step {i}: {e}"))?;
            }
            Step::Add(c) => {
                s.add_clause(c).map_err(|e| format!("step {i}: {e}"))?;
            }
            Step::Solve(a) => {
                for &l in a {
                    s.assume(l).map_err(|e| format!("step {i}: {e}"))?;
                }
                let v = s.solve().map_err(|e| format!("step {i}: {e}"))?;
                check(&s, &model.enabled(), a, v).map_err(|e| format!("step {i}: {e}"))?;
            }
        }
        model.apply(step);
    }
    Ok(())
}
