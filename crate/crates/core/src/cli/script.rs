//! Incremental scripts, one command per line:
//!
//! ```text
//! e 1 2 0      append an existential block (a for universal)
//! add -1 2 0   add a clause to the topmost frame
//! push / pop
//! assume 5
//! solve
//! expect sat   compare with the last verdict
//! ```
//!
//! Lines starting with `c` or `#` are comments.

use std::fmt;
use std::io::Write;

use crate::api::QbfSolver;
use crate::formula::{Lit, Quantifier, Var, Verdict, MAX_VAR_ID};
use crate::qcdcl::Stats;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptCommand {
    Push,
    Pop,
    Block(Quantifier, Vec<Var>),
    Add(Vec<Lit>),
    Assume(Lit),
    Solve,
    Expect(Verdict),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ScriptError {}

fn err(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError {
        line,
        message: message.into(),
    }
}

fn parse_lit(tok: &str, line: usize) -> Result<i32, ScriptError> {
    let v: i32 = tok
        .parse()
        .map_err(|_| err(line, format!("malformed literal '{tok}'")))?;
    if v.unsigned_abs() > MAX_VAR_ID {
        return Err(err(line, format!("variable {v} out of range")));
    }
    Ok(v)
}

fn zero_terminated(tokens: &[&str], line: usize) -> Result<Vec<i32>, ScriptError> {
    let Some((&last, body)) = tokens.split_last() else {
        return Err(err(line, "missing terminating 0"));
    };
    if last != "0" {
        return Err(err(line, "missing terminating 0"));
    }
    body.iter()
        .map(|t| match parse_lit(t, line)? {
            0 => Err(err(line, "0 before the end of the line")),
            v => Ok(v),
        })
        .collect()
}

pub fn parse_script(text: &str) -> Result<Vec<(usize, ScriptCommand)>, ScriptError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some((&head, rest)) = tokens.split_first() else {
            continue;
        };
        if head.starts_with('#') || head == "c" {
            continue;
        }
        let no_args = |cmd: ScriptCommand| {
            if rest.is_empty() {
                Ok(cmd)
            } else {
                Err(err(line, format!("'{head}' takes no arguments")))
            }
        };
        let cmd = match head {
            "push" => no_args(ScriptCommand::Push)?,
            "pop" => no_args(ScriptCommand::Pop)?,
            "solve" => no_args(ScriptCommand::Solve)?,
            "e" | "a" => {
                let q = if head == "e" {
                    Quantifier::Exists
                } else {
                    Quantifier::Forall
                };
                let vars = zero_terminated(rest, line)?;
                if vars.iter().any(|&v| v < 0) {
                    return Err(err(line, "negative variable in block"));
                }
                ScriptCommand::Block(q, vars.into_iter().map(|v| Var::new(v as u32)).collect())
            }
            "add" => ScriptCommand::Add(zero_terminated(rest, line)?.into_iter().map(Lit::from_dimacs).collect()),
            "assume" => match rest {
                [tok] => match parse_lit(tok, line)? {
                    0 => return Err(err(line, "0 is not a literal")),
                    v => ScriptCommand::Assume(Lit::from_dimacs(v)),
                },
                _ => return Err(err(line, "'assume' takes one literal")),
            },
            "expect" => match rest {
                [v] if v.eq_ignore_ascii_case("sat") => ScriptCommand::Expect(Verdict::Sat),
                [v] if v.eq_ignore_ascii_case("unsat") => ScriptCommand::Expect(Verdict::Unsat),
                _ => return Err(err(line, "'expect' takes sat or unsat")),
            },
            other => return Err(err(line, format!("unknown command '{other}'"))),
        };
        out.push((line, cmd));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SolveRecord {
    pub line: usize,
    pub verdict: Verdict,
    pub stats: Stats,
}

/// Applies one command to `solver`; returns the verdict for `solve`.
pub fn apply(
    solver: &mut QbfSolver,
    cmd: &ScriptCommand,
    last: Option<Verdict>,
    line: usize,
) -> Result<Option<Verdict>, ScriptError> {
    let api = |e: crate::api::ApiError| err(line, e.to_string());
    match cmd {
        ScriptCommand::Push => {
            solver.push().map_err(api)?;
        }
        ScriptCommand::Pop => {
            solver.pop().map_err(api)?;
        }
        ScriptCommand::Block(q, vars) => {
            let blocks = solver.prefix().blocks();
            let block = match blocks.last() {
                Some(b) if b.quantifier == *q => blocks.len(),
                _ => solver.append_block(*q),
            };
            for &v in vars {
                solver.add_var(block, v).map_err(api)?;
            }
        }
        ScriptCommand::Add(lits) => {
            solver.add_clause(lits).map_err(api)?;
        }
        ScriptCommand::Assume(l) => solver.assume(*l).map_err(api)?,
        ScriptCommand::Solve => return solver.solve().map(Some).map_err(api),
        ScriptCommand::Expect(v) => match last {
            None => return Err(err(line, "'expect' before any 'solve'")),
            Some(got) if got != *v => {
                return Err(err(line, format!("expected {v}, solver returned {got}")));
            }
            Some(_) => {}
        },
    }
    Ok(None)
}

/// Runs a script, printing one line per solve call.
pub fn run_script(text: &str, out: &mut dyn Write) -> Result<Vec<SolveRecord>, ScriptError> {
    let commands = parse_script(text)?;
    let mut solver = QbfSolver::new();
    let mut last = None;
    let mut records = Vec::new();
    for (line, cmd) in &commands {
        if let Some(v) = apply(&mut solver, cmd, last, *line)? {
            last = Some(v);
            let stats = solver.last_stats().clone();
            let _ = writeln!(
                out,
                "line {line}: {v} (assignments {}, backtracks {}, decisions {}, {:.3}s)",
                stats.assignments, stats.backtracks, stats.decisions, stats.wall_time
            );
            records.push(SolveRecord {
                line: *line,
                verdict: v,
                stats,
            });
        }
    }
    Ok(records)
}
