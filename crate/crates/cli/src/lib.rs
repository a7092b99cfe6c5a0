//! Command-line front end: config ingestion, case execution, CSV and JSON
//! reports, and golden-file comparison.

pub mod config;
pub mod golden;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nonlocal_bbm::quadrature::Preset;

use crate::config::{parse_config, ConfigError, Mode};
use crate::golden::{compare_files, resolve_golden, ColumnTolerance};
use crate::output::{write_csv, Case, Summary, SUMMARY_VERSION};
use crate::run::{execute, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "nonlocal-bbm",
    version,
    about = "Nonlocal fractional operators and their alpha -> 1 limits"
)]
struct Cli {
    /// Worker threads; never changes any output byte.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Geometric and Riesz constants (all dimensions when no config is given).
    Constants(RunArgs),
    /// Raw operator values over schedule x points.
    Eval(RunArgs),
    /// Limit sweeps against their alpha -> 1 targets.
    Sweep(RunArgs),
    /// Explicit-constant inequalities and implicit-constant ratios.
    Audit(RunArgs),
    /// Constants, sweep and audit in one report.
    Report(RunArgs),
    /// Compare a CSV report with a golden file.
    CompareGolden(CompareArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the CSV and JSON files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Base quadrature preset: fast, default or high.
    #[arg(long, value_parser = parse_preset)]
    quad_preset: Option<Preset>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    report: PathBuf,
    /// Golden CSV; relative paths resolve against $NONLOCAL_BBM_GOLDEN_DIR when set.
    #[arg(long)]
    golden: PathBuf,
    /// Per-column tolerance `COLUMN=REL[:ABS]`, repeatable.
    #[arg(long = "tol")]
    tolerances: Vec<ColumnTolerance>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: nonlocal_bbm::Error| e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("--threads must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start the thread pool: {e}");
            return EXIT_CONFIG;
        }
    };
    pool.install(|| match cli.command {
        Command::Constants(a) => run_mode(Mode::Constants, &a),
        Command::Eval(a) => run_mode(Mode::Eval, &a),
        Command::Sweep(a) => run_mode(Mode::Sweep, &a),
        Command::Audit(a) => run_mode(Mode::Audit, &a),
        Command::Report(a) => run_mode(Mode::Report, &a),
        Command::CompareGolden(a) => compare(&a),
    })
}

fn config_error(e: &ConfigError) -> i32 {
    eprintln!("{e}");
    EXIT_CONFIG
}

fn constants_without_config() -> nonlocal_bbm::Result<RunOutput> {
    let entries = run::constants(
        &[1, 2, 3],
        nonlocal_bbm::AlphaSchedule::default().values(),
        1.0,
    )?;
    let rows = run::constant_rows(&entries);
    Ok(RunOutput {
        rows,
        summary: Summary {
            version: SUMMARY_VERSION,
            config_hash: String::new(),
            cases: vec![Case::Constants { entries }],
            fits: vec![],
            audits: vec![],
        },
        problems: 0,
    })
}

fn run_mode(mode: Mode, args: &RunArgs) -> i32 {
    let (result, outputs) = match &args.config {
        None if mode == Mode::Constants => (constants_without_config(), config::Outputs::default()),
        None => {
            eprintln!("{} needs --config", mode.as_str());
            return EXIT_CONFIG;
        }
        Some(path) => {
            let resolved = match parse_config(path).and_then(|c| c.resolve(args.quad_preset)) {
                Ok(r) => r,
                Err(e) => return config_error(&e),
            };
            if let Err(e) = resolved.check_mode(mode) {
                return config_error(&e);
            }
            (execute(&resolved, mode), resolved.config.outputs.clone())
        }
    };
    let out = match result {
        Ok(o) => o,
        Err(nonlocal_bbm::Error::NonConvergence {
            level,
            value,
            estimate,
        }) => {
            eprintln!(
                "{level} quadrature did not converge: estimate {estimate:e} for value {value:e}"
            );
            return EXIT_FAILURE;
        }
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    match write_outputs(&args.out, &outputs, &out) {
        Ok((csv, json)) => {
            println!("wrote {} rows to {}", out.rows.len(), csv.display());
            println!("wrote summary to {}", json.display());
        }
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    }
    for (kind, alpha) in run::explicit_failures(&out.summary) {
        println!("FAIL {} at alpha {alpha}", kind.as_str());
    }
    if out.problems == 0 {
        println!("status: ok");
    } else {
        println!("status: {} failed or non-converged rows", out.problems);
    }
    out.exit_code()
}

fn write_outputs(
    dir: &Path,
    outputs: &config::Outputs,
    out: &RunOutput,
) -> Result<(PathBuf, PathBuf), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let csv_path = dir.join(&outputs.csv);
    let json_path = dir.join(&outputs.json);
    let file = fs::File::create(&csv_path)
        .map_err(|e| format!("cannot create {}: {e}", csv_path.display()))?;
    write_csv(std::io::BufWriter::new(file), &out.rows)
        .map_err(|e| format!("{}: {e}", csv_path.display()))?;
    fs::write(&json_path, out.summary.to_json())
        .map_err(|e| format!("{}: {e}", json_path.display()))?;
    Ok((csv_path, json_path))
}

fn compare(args: &CompareArgs) -> i32 {
    let golden = resolve_golden(&args.golden);
    match compare_files(&args.report, &golden, &args.tolerances) {
        Err(e) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Ok(m) if m.is_empty() => {
            println!("{} matches {}", args.report.display(), golden.display());
            EXIT_OK
        }
        Ok(m) => {
            for x in &m {
                println!("{x}");
            }
            println!("{} mismatches", m.len());
            EXIT_FAILURE
        }
    }
}
