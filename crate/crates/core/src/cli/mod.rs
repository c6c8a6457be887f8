//! Command-line experiment runner.
//!
//! `jellium --config run.cfg --out results/` validates the config, runs the
//! experiment and writes its CSV files plus `manifest.json` into the output
//! directory. `jellium describe KIND` prints the keys of one experiment kind.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or the
//! computation errors, 2 for command-line or config parse errors.

pub mod config;
pub mod run;
pub mod schema;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::parallel::{worker_count, THREADS_ENV};
pub use config::parse_config;
pub use run::{execute, Check, Outputs, RunContext};
pub use schema::{describe, schema, validate, Experiment, KINDS};

#[derive(Debug, Parser)]
#[command(
    name = "jellium",
    version,
    about = "Experiments on two-dimensional Coulomb systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Experiment config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Force the single-threaded deterministic path.
    #[arg(long, global = true)]
    pub serial: bool,
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment in --config.
    Run,
    /// Print the config keys of an experiment kind.
    Describe { kind: String },
    /// Run an experiment kind with its defaults, without a config file.
    Default { kind: String },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let text = match &cli.command {
        Some(Command::Describe { kind }) => {
            return match describe(kind) {
                Some(s) => {
                    print!("{s}");
                    EXIT_OK
                }
                None => {
                    eprintln!(
                        "error: unknown experiment kind '{kind}' (known: {})",
                        KINDS.join(", ")
                    );
                    EXIT_USAGE
                }
            };
        }
        Some(Command::Default { kind }) => format!("[run]\nkind = {kind}\n"),
        Some(Command::Run) | None => {
            let Some(path) = &cli.config else {
                eprintln!("error: --config PATH is required");
                return EXIT_USAGE;
            };
            match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
        }
    };
    let source = cli.config.as_deref();
    let mut exp = match parse_config(&text).and_then(|c| validate(&c)) {
        Ok(e) => e,
        Err(e) => {
            match source {
                Some(p) => eprintln!("error: {}: {e}", p.display()),
                None => eprintln!("error: {e}"),
            }
            return EXIT_USAGE;
        }
    };
    if let Some(s) = cli.seed {
        exp.seed = s;
    }
    let ctx = RunContext {
        serial: cli.serial,
        verbose: cli.verbose,
    };
    run_to_dir(&exp, &ctx, &cli.out)
}

/// Runs `exp` and writes its outputs and manifest into `dir`.
pub fn run_to_dir(exp: &Experiment, ctx: &RunContext, dir: &Path) -> i32 {
    if ctx.verbose {
        eprintln!(
            "running {} (seed {}, {} workers)",
            exp.kind,
            exp.seed,
            worker_count(ctx.serial)
        );
    }
    let start = Instant::now();
    let result = execute(exp, ctx);
    let wall = start.elapsed().as_secs_f64();
    let outputs = match result {
        Ok(o) => o,
        Err(e) => Outputs {
            checks: vec![Check {
                name: "completed".into(),
                passed: false,
                detail: e.to_string(),
            }],
            ..Outputs::default()
        },
    };
    if let Err(e) = write_outputs(exp, ctx, &outputs, wall, dir) {
        eprintln!("error: writing to {}: {e}", dir.display());
        return EXIT_CHECK_FAILED;
    }
    let failed: Vec<&Check> = outputs.checks.iter().filter(|c| !c.passed).collect();
    for c in &outputs.checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        eprintln!("failed checks: {}", names.join(", "));
        EXIT_CHECK_FAILED
    }
}

pub fn manifest(
    exp: &Experiment,
    ctx: &RunContext,
    outputs: &Outputs,
    wall_time: f64,
) -> serde_json::Value {
    let constants: serde_json::Map<String, serde_json::Value> = outputs
        .constants
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    json!({
        "kind": exp.kind,
        "seed": exp.seed,
        "serial": ctx.serial,
        "threads_env": std::env::var(THREADS_ENV).ok(),
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": exp.raw,
        "constants": constants,
        "checks": outputs.checks.iter().map(|c| json!({
            "name": c.name, "passed": c.passed, "detail": c.detail
        })).collect::<Vec<_>>(),
        "outputs": outputs.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>(),
        "wall_time": wall_time,
    })
}

fn write_outputs(
    exp: &Experiment,
    ctx: &RunContext,
    outputs: &Outputs,
    wall: f64,
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &outputs.files {
        std::fs::write(dir.join(name), contents)?;
    }
    let m = serde_json::to_string_pretty(&manifest(exp, ctx, outputs, wall))
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), m + "\n")
}
