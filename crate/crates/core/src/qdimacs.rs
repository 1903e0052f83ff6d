//! QDIMACS reader and writer.

use std::fmt::Write as _;
use std::io::Read;

use log::warn;
use thiserror::Error;

use crate::formula::{Lit, Pcnf, Prefix, Quantifier, Var, MAX_VAR_ID};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing 'p cnf' header")]
    MissingHeader,
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_int(tok: &str, line: usize) -> Result<i64, ParseError> {
    tok.parse::<i64>()
        .map_err(|_| syntax(line, format!("malformed token '{tok}'")))
}

/// Literals of one line, without the terminating 0.
fn parse_terminated(tokens: &[&str], line: usize) -> Result<Vec<i32>, ParseError> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut closed = false;
    for tok in tokens {
        if closed {
            return Err(syntax(line, "tokens after terminating 0"));
        }
        let v = parse_int(tok, line)?;
        if v == 0 {
            closed = true;
            continue;
        }
        if v.unsigned_abs() > MAX_VAR_ID as u64 {
            return Err(syntax(line, format!("variable {v} out of range")));
        }
        out.push(v as i32);
    }
    if !closed {
        return Err(syntax(line, "missing terminating 0"));
    }
    Ok(out)
}

pub fn parse_str(text: &str) -> Result<Pcnf, ParseError> {
    let mut header: Option<(i64, i64)> = None;
    let mut prefix = Prefix::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut clause_lines = 0i64;
    let mut last_q: Option<Quantifier> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&first) = tokens.first() else {
            continue;
        };
        if first.starts_with('c') {
            continue;
        }
        if first == "p" {
            if header.is_some() {
                return Err(syntax(line, "duplicate header"));
            }
            if tokens.len() != 4 || tokens[1] != "cnf" {
                return Err(syntax(line, "expected 'p cnf <vars> <clauses>'"));
            }
            let v = parse_int(tokens[2], line)?;
            let c = parse_int(tokens[3], line)?;
            if v < 0 || c < 0 {
                return Err(syntax(line, "negative count in header"));
            }
            header = Some((v, c));
            continue;
        }
        if header.is_none() {
            return Err(syntax(line, "content before 'p cnf' header"));
        }
        let q = match first {
            "e" => Some(Quantifier::Exists),
            "a" => Some(Quantifier::Forall),
            _ => None,
        };
        if let Some(q) = q {
            if clause_lines > 0 {
                return Err(syntax(line, "quantifier line after the first clause"));
            }
            let vars = parse_terminated(&tokens[1..], line)?;
            if vars.iter().any(|&v| v < 0) {
                return Err(syntax(line, "negative variable in quantifier line"));
            }
            let block = if last_q == Some(q) {
                prefix.num_blocks()
            } else {
                last_q = Some(q);
                prefix.push_block(q)
            };
            for v in vars {
                prefix
                    .add_variable(block, Var::new(v as u32))
                    .map_err(|e| syntax(line, e.to_string()))?;
            }
            continue;
        }
        let lits = parse_terminated(&tokens, line)?;
        clause_lines += 1;
        clauses.push(lits.into_iter().map(Lit::from_dimacs).collect());
    }
    let Some((v, c)) = header else {
        return Err(ParseError::MissingHeader);
    };
    if c != clause_lines {
        warn!("header declares {c} clauses, found {clause_lines}");
    }
    let f = Pcnf::from_parts(prefix, clauses);
    let max_var = f.prefix().vars().map(|x| x.id() as i64).max().unwrap_or(0);
    if max_var > v {
        warn!("header declares {v} variables, found id {max_var}");
    }
    Ok(f)
}

pub fn parse<R: Read>(mut reader: R) -> Result<Pcnf, ParseError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_str(&text)
}

pub fn parse_file(path: &std::path::Path) -> Result<Pcnf, ParseError> {
    parse(std::fs::File::open(path)?)
}

/// Serializes `f`; empty blocks are skipped.
pub fn write(f: &Pcnf) -> String {
    let max_var = f
        .prefix()
        .vars()
        .map(|v| v.id())
        .chain(f.clauses().iter().flatten().map(|l| l.var().id()))
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", max_var, f.clauses().len());
    for b in f.prefix().blocks() {
        if b.vars.is_empty() {
            continue;
        }
        out.push(match b.quantifier {
            Quantifier::Exists => 'e',
            Quantifier::Forall => 'a',
        });
        for v in &b.vars {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    for c in f.clauses() {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Assignment;

    const PSI: &str = "c example\np cnf 8 6\ne 1 0\na 8 0\ne 5 2 6 4 0\n8 -5 0\n2 -6 0\n-1 4 0\n-8 -4 0\n1 6 0\n4 5 0\n";

    #[test]
    fn small_document() {
        let f = parse_str("p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n").unwrap();
        assert_eq!(f.prefix().num_blocks(), 2);
        assert_eq!(f.prefix().quantifier(Var::new(2)), Some(Quantifier::Forall));
        assert_eq!(f.clauses(), &[vec![Lit::from_dimacs(1), Lit::from_dimacs(2)]]);
    }

    #[test]
    fn round_trip() {
        let f = parse_str(PSI).unwrap();
        assert_eq!(f.clauses().len(), 6);
        let g = parse_str(&write(&f)).unwrap();
        assert_eq!(f, g);
        assert_eq!(write(&g), write(&f));
    }

    #[test]
    fn tautology_dropped() {
        let f = parse_str("p cnf 1 1\n1 -1 0\n").unwrap();
        assert!(f.clauses().is_empty());
    }

    #[test]
    fn adjacent_blocks_merge() {
        let f = parse_str("p cnf 3 0\ne 1 0\ne 2 0\na 3 0\n").unwrap();
        assert_eq!(f.prefix().num_blocks(), 2);
        assert_eq!(f.prefix().block_of(Var::new(2)), Some(1));
    }

    #[test]
    fn free_variables_adopted() {
        let f = parse_str("p cnf 2 1\na 2 0\n1 2 0\n").unwrap();
        assert_eq!(f.prefix().quantifier(Var::new(1)), Some(Quantifier::Exists));
        assert_eq!(f.prefix().block_of(Var::new(1)), Some(1));
        let a = Assignment::from_dimacs(&[1]).unwrap();
        assert!(a.satisfies_clause(&f.clauses()[0]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_str("p cnf 2 1\n1 2\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, .. }), "{e}");
        let e = parse_str("p cnf 2 1\n1 x 0\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, .. }));
        let e = parse_str("p cnf 2 2\ne 1 0\n1 0\na 2 0\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 4, .. }));
        assert!(matches!(parse_str(""), Err(ParseError::MissingHeader)));
        assert!(matches!(parse_str("1 0\n"), Err(ParseError::Syntax { line: 1, .. })));
    }

    #[test]
    fn count_mismatch_only_warns() {
        let f = parse_str("p cnf 1 5\n1 0\n").unwrap();
        assert_eq!(f.clauses().len(), 1);
    }

    #[test]
    fn empty_formula() {
        assert_eq!(write(&Pcnf::new()), "p cnf 0 0\n");
    }
}
