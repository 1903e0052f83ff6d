//! Command-line front end.

pub mod bench;
pub mod script;

use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::api::QbfSolver;
use crate::formula::Verdict;
use crate::qdimacs;

pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "incqbf", version, about = "Incremental QCDCL solver for QBF in prenex CNF")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Keep,
    Discard,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Reverse,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a QDIMACS file; exit code 10 for SAT, 20 for UNSAT.
    Solve { file: PathBuf },
    /// Run an incremental script.
    Script { file: PathBuf },
    /// Slice formulas into frames and compare keeping or discarding
    /// learned constraints. Directories are scanned for QDIMACS files.
    Bench {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        slices: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
        direction: DirectionArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Time limit per solve call, in seconds.
        #[arg(long)]
        timeout_s: Option<u64>,
        #[arg(long)]
        stats_json: Option<PathBuf>,
    },
}

pub fn verdict_line(v: Verdict) -> String {
    format!("s cnf {v}")
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Sat => EXIT_SAT,
        Verdict::Unsat => EXIT_UNSAT,
    }
}

fn run_solve(file: &std::path::Path, out: &mut dyn Write) -> i32 {
    let f = match qdimacs::parse_file(file) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return EXIT_ERROR;
        }
    };
    let mut s = QbfSolver::from_pcnf(&f);
    match s.solve() {
        Ok(v) => {
            let st = s.last_stats();
            let _ = writeln!(
                out,
                "c assignments {} backtracks {} decisions {} time {:.3}s",
                st.assignments, st.backtracks, st.decisions, st.wall_time
            );
            let _ = writeln!(out, "{}", verdict_line(v));
            exit_code(v)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_script_file(file: &std::path::Path, out: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return EXIT_ERROR;
        }
    };
    match script::run_script(&text, out) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            EXIT_ERROR
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_bench_files(
    files: &[PathBuf],
    slices: usize,
    mode: ModeArg,
    direction: DirectionArg,
    seed: u64,
    timeout_s: Option<u64>,
    stats_json: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> i32 {
    let modes = match mode {
        ModeArg::Keep => vec![bench::Mode::Keep],
        ModeArg::Discard => vec![bench::Mode::Discard],
        ModeArg::Both => vec![bench::Mode::Keep, bench::Mode::Discard],
    };
    let directions = match direction {
        DirectionArg::Forward => vec![bench::Direction::Forward],
        DirectionArg::Reverse => vec![bench::Direction::Reverse],
        DirectionArg::Both => vec![bench::Direction::Forward, bench::Direction::Reverse],
    };
    let config = bench::BenchConfig {
        slices,
        modes,
        directions,
        seed,
        timeout: timeout_s.map(Duration::from_secs),
    };
    let instances = match bench::load_instances(files) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let report = match bench::run_bench(&instances, &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let _ = write!(out, "{}", bench::render_table(&report));
    if let Some(path) = stats_json {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = std::fs::write(path, json) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    if report.verdicts_agree {
        0
    } else {
        eprintln!("error: verdicts differ between modes");
        EXIT_ERROR
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Solve { file } => run_solve(&file, out),
        Command::Script { file } => run_script_file(&file, out),
        Command::Bench {
            files,
            slices,
            mode,
            direction,
            seed,
            timeout_s,
            stats_json,
        } => run_bench_files(&files, slices, mode, direction, seed, timeout_s, stats_json.as_deref(), out),
    }
}
