//! Slicing benchmark. Each formula is cut into consecutive clause slices,
//! one frame per slice. The forward run solves after every push; the
//! reverse run then pops one frame at a time and solves again.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::api::{ApiError, QbfSolver};
use crate::formula::{Lit, Pcnf, Verdict};
use crate::qdimacs::{self, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Keep,
    Discard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("slices must be at least 1")]
    NoSlices,
    #[error("no input formulas")]
    NoInstances,
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("solver error: {0}")]
    Api(#[from] ApiError),
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub slices: usize,
    pub modes: Vec<Mode>,
    pub directions: Vec<Direction>,
    pub seed: u64,
    pub timeout: Option<Duration>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            slices: 10,
            modes: vec![Mode::Keep, Mode::Discard],
            directions: vec![Direction::Forward, Direction::Reverse],
            seed: 0,
            timeout: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    /// Index of the formula in the slice sequence.
    pub formula: usize,
    pub clauses: usize,
    /// `None` when the time limit was hit.
    pub verdict: Option<Verdict>,
    pub assignments: u64,
    pub backtracks: u64,
    pub decisions: u64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceReport {
    pub instance: String,
    pub mode: Mode,
    pub direction: Direction,
    pub steps: Vec<StepRecord>,
    pub assignments: u64,
    pub backtracks: u64,
    pub wall_time: f64,
    pub timeouts: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub mode: Mode,
    pub direction: Direction,
    pub sequences: usize,
    pub mean_assignments: f64,
    pub median_assignments: f64,
    pub mean_backtracks: f64,
    pub median_backtracks: f64,
    pub mean_time: f64,
    pub median_time: f64,
    pub total_backtracks: u64,
}

/// Relative difference of keep over discard, in percent.
#[derive(Clone, Debug, Serialize)]
pub struct Difference {
    pub direction: Direction,
    pub mean_assignments_pct: Option<f64>,
    pub median_assignments_pct: Option<f64>,
    pub mean_backtracks_pct: Option<f64>,
    pub median_backtracks_pct: Option<f64>,
    pub mean_time_pct: Option<f64>,
    pub median_time_pct: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub slices: usize,
    pub seed: u64,
    pub instances: usize,
    pub sequences: Vec<SequenceReport>,
    pub aggregates: Vec<Aggregate>,
    pub differences: Vec<Difference>,
    pub verdicts_agree: bool,
}

/// Reads QDIMACS files; directories contribute their `.qdimacs` and `.cnf`
/// entries in name order.
pub fn load_instances(paths: &[PathBuf]) -> Result<Vec<(String, Pcnf)>, BenchError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|source| BenchError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension()
                        .is_some_and(|x| x == "qdimacs" || x == "cnf")
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| {
            let name = f.display().to_string();
            load_one(f).map(|pcnf| (name, pcnf))
        })
        .collect()
}

fn load_one(path: &Path) -> Result<Pcnf, BenchError> {
    qdimacs::parse_file(path).map_err(|source| BenchError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Consecutive clause slices; the last one takes the remainder.
pub fn slice_clauses(clauses: &[Vec<Lit>], slices: usize) -> Vec<&[Vec<Lit>]> {
    let size = clauses.len() / slices;
    (0..slices)
        .map(|i| {
            let start = i * size;
            let end = if i + 1 == slices { clauses.len() } else { start + size };
            &clauses[start..end]
        })
        .collect()
}

fn solve_step(s: &mut QbfSolver, formula: usize, clauses: usize) -> Result<StepRecord, BenchError> {
    let verdict = match s.solve() {
        Ok(v) => Some(v),
        Err(ApiError::Timeout) => None,
        Err(e) => return Err(e.into()),
    };
    let st = s.last_stats();
    Ok(StepRecord {
        formula,
        clauses,
        verdict,
        assignments: st.assignments,
        backtracks: st.backtracks,
        decisions: st.decisions,
        wall_time: st.wall_time,
    })
}

/// Forward steps then reverse steps of one instance in one mode.
fn run_sequence(f: &Pcnf, config: &BenchConfig, mode: Mode) -> Result<(Vec<StepRecord>, Vec<StepRecord>), BenchError> {
    let mut s = QbfSolver::new();
    s.set_seed(config.seed);
    s.set_timeout(config.timeout);
    s.set_keep_learned(mode == Mode::Keep);
    for b in f.prefix().blocks() {
        let idx = s.append_block(b.quantifier);
        for &v in &b.vars {
            s.add_var(idx, v)?;
        }
    }
    let slices = slice_clauses(f.clauses(), config.slices);
    let mut sizes = Vec::new();
    let mut forward = Vec::new();
    let mut total = 0;
    for (i, slice) in slices.iter().enumerate() {
        s.push()?;
        for c in slice.iter() {
            s.add_clause(c)?;
        }
        total += slice.len();
        sizes.push(total);
        forward.push(solve_step(&mut s, i, total)?);
    }
    let mut reverse = Vec::new();
    if config.directions.contains(&Direction::Reverse) {
        for i in (0..slices.len().saturating_sub(1)).rev() {
            s.pop()?;
            reverse.push(solve_step(&mut s, i, sizes[i])?);
        }
    }
    Ok((forward, reverse))
}

fn sequence(instance: &str, mode: Mode, direction: Direction, steps: Vec<StepRecord>) -> SequenceReport {
    SequenceReport {
        instance: instance.to_string(),
        mode,
        direction,
        assignments: steps.iter().map(|s| s.assignments).sum(),
        backtracks: steps.iter().map(|s| s.backtracks).sum(),
        wall_time: steps.iter().map(|s| s.wall_time).sum(),
        timeouts: steps.iter().filter(|s| s.verdict.is_none()).count(),
        steps,
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn aggregate(seqs: &[&SequenceReport], mode: Mode, direction: Direction) -> Aggregate {
    let a: Vec<f64> = seqs.iter().map(|s| s.assignments as f64).collect();
    let b: Vec<f64> = seqs.iter().map(|s| s.backtracks as f64).collect();
    let t: Vec<f64> = seqs.iter().map(|s| s.wall_time).collect();
    Aggregate {
        mode,
        direction,
        sequences: seqs.len(),
        mean_assignments: mean(&a),
        median_assignments: median(&a),
        mean_backtracks: mean(&b),
        median_backtracks: median(&b),
        mean_time: mean(&t),
        median_time: median(&t),
        total_backtracks: seqs.iter().map(|s| s.backtracks).sum(),
    }
}

pub fn percent(keep: f64, discard: f64) -> Option<f64> {
    (discard != 0.0).then(|| (keep - discard) / discard * 100.0)
}

pub fn run_bench(instances: &[(String, Pcnf)], config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.slices < 1 {
        return Err(BenchError::NoSlices);
    }
    if instances.is_empty() {
        return Err(BenchError::NoInstances);
    }
    let mut sequences = Vec::new();
    let mut agree = true;
    for (name, f) in instances {
        let mut verdicts: Vec<Option<Verdict>> = vec![None; config.slices];
        for &mode in &config.modes {
            let (forward, reverse) = run_sequence(f, config, mode)?;
            for step in forward.iter().chain(reverse.iter()) {
                if let Some(v) = step.verdict {
                    match verdicts[step.formula] {
                        Some(w) if w != v => agree = false,
                        _ => verdicts[step.formula] = Some(v),
                    }
                }
            }
            if config.directions.contains(&Direction::Forward) {
                sequences.push(sequence(name, mode, Direction::Forward, forward));
            }
            if config.directions.contains(&Direction::Reverse) {
                sequences.push(sequence(name, mode, Direction::Reverse, reverse));
            }
        }
    }
    let mut aggregates = Vec::new();
    let mut differences = Vec::new();
    for &direction in &config.directions {
        for &mode in &config.modes {
            let seqs: Vec<&SequenceReport> = sequences
                .iter()
                .filter(|s| s.mode == mode && s.direction == direction)
                .collect();
            aggregates.push(aggregate(&seqs, mode, direction));
        }
        let find = |m: Mode| aggregates.iter().find(|a: &&Aggregate| a.mode == m && a.direction == direction);
        if let (Some(k), Some(d)) = (find(Mode::Keep), find(Mode::Discard)) {
            differences.push(Difference {
                direction,
                mean_assignments_pct: percent(k.mean_assignments, d.mean_assignments),
                median_assignments_pct: percent(k.median_assignments, d.median_assignments),
                mean_backtracks_pct: percent(k.mean_backtracks, d.mean_backtracks),
                median_backtracks_pct: percent(k.median_backtracks, d.median_backtracks),
                mean_time_pct: percent(k.mean_time, d.mean_time),
                median_time_pct: percent(k.median_time, d.median_time),
            });
        }
    }
    Ok(BenchReport {
        slices: config.slices,
        seed: config.seed,
        instances: instances.len(),
        sequences,
        aggregates,
        differences,
        verdicts_agree: agree,
    })
}

fn pct(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_string(), |v| format!("{v:+.2}%"))
}

/// Table with one row per mode and a difference row per direction.
pub fn render_table(r: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<8} {:>12} {:>12} {:>10} {:>10} {:>9} {:>9}",
        "dir", "mode", "a_mean", "a_median", "b_mean", "b_median", "t_mean", "t_median"
    );
    for a in &r.aggregates {
        let _ = writeln!(
            out,
            "{:<8} {:<8} {:>12.1} {:>12.1} {:>10.1} {:>10.1} {:>9.4} {:>9.4}",
            format!("{:?}", a.direction).to_lowercase(),
            format!("{:?}", a.mode).to_lowercase(),
            a.mean_assignments,
            a.median_assignments,
            a.mean_backtracks,
            a.median_backtracks,
            a.mean_time,
            a.median_time
        );
        if let Some(d) = r
            .differences
            .iter()
            .find(|d| d.direction == a.direction && a.mode == Mode::Discard)
        {
            let _ = writeln!(
                out,
                "{:<8} {:<8} {:>12} {:>12} {:>10} {:>10} {:>9} {:>9}",
                format!("{:?}", d.direction).to_lowercase(),
                "diff",
                pct(d.mean_assignments_pct),
                pct(d.median_assignments_pct),
                pct(d.mean_backtracks_pct),
                pct(d.median_backtracks_pct),
                pct(d.mean_time_pct),
                pct(d.median_time_pct)
            );
        }
    }
    let _ = writeln!(
        out,
        "verdicts {}",
        if r.verdicts_agree { "agree" } else { "DIFFER" }
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdimacs::parse_str;

    const PSI: &str = "p cnf 8 6\ne 1 0\na 8 0\ne 5 2 6 4 0\n8 -5 0\n2 -6 0\n-1 4 0\n-8 -4 0\n1 6 0\n4 5 0\n";

    #[test]
    fn slicing_keeps_order() {
        let f = parse_str(PSI).unwrap();
        let s = slice_clauses(f.clauses(), 4);
        assert_eq!(s.iter().map(|x| x.len()).collect::<Vec<_>>(), vec![1, 1, 1, 3]);
        assert_eq!(s[0][0], f.clauses()[0]);
        let s = slice_clauses(f.clauses(), 10);
        assert_eq!(s.iter().map(|x| x.len()).sum::<usize>(), 6);
    }

    #[test]
    fn zero_slices_rejected() {
        let f = parse_str(PSI).unwrap();
        let cfg = BenchConfig {
            slices: 0,
            ..BenchConfig::default()
        };
        assert!(matches!(run_bench(&[("psi".into(), f)], &cfg), Err(BenchError::NoSlices)));
    }

    #[test]
    fn single_slice_modes_match() {
        let f = parse_str(PSI).unwrap();
        let cfg = BenchConfig {
            slices: 1,
            ..BenchConfig::default()
        };
        let r = run_bench(&[("psi".into(), f)], &cfg).unwrap();
        assert!(r.verdicts_agree);
        let fwd: Vec<&SequenceReport> = r.sequences.iter().filter(|s| s.direction == Direction::Forward).collect();
        assert_eq!(fwd.len(), 2);
        assert_eq!(fwd[0].steps.len(), 1);
        assert_eq!(fwd[0].assignments, fwd[1].assignments);
        assert_eq!(fwd[0].backtracks, fwd[1].backtracks);
    }

    #[test]
    fn report_layout() {
        let f = parse_str(PSI).unwrap();
        let r = run_bench(&[("psi".into(), f)], &BenchConfig::default()).unwrap();
        assert_eq!(r.aggregates.len(), 4);
        assert_eq!(r.differences.len(), 2);
        let table = render_table(&r);
        assert!(table.contains("diff"));
        let json: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!(json.get("aggregates").is_some());
        assert_eq!(percent(5.0, 10.0), Some(-50.0));
        assert_eq!(percent(1.0, 0.0), None);
    }
}
