use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sleac_cli::sweep::{self, parse_vary, DEFAULT_CAP, DEFAULT_SEEDS};
use sleac_cli::table::{self, BoundsCase, BoundsQuery};
use sleac_cli::{Config, Row, SweepSpec};
use sleac_core::engine::{run_instrumented, Instrumentation, EVENT_HEADER};
use sleac_core::Termination;

/// Energy-aware swarm coverage simulator.
#[derive(Parser)]
#[command(name = "sleac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and emit its metrics row.
    Run(RunArgs),
    /// Run a cross product of parameter values over several seeds.
    Sweep(SweepArgs),
    /// Print closed-form bound values.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Append the row to this CSV file instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 if the run hits the step cap.
    #[arg(long)]
    strict: bool,
    /// Write the per-agent event log to this file.
    #[arg(long)]
    log_events: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// `key=v1,v2,...`; repeat for a cross product.
    #[arg(long)]
    vary: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SEEDS)]
    seeds: u32,
    /// Row CSV destination; rows go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-point aggregate CSV destination; printed to stderr when absent.
    #[arg(long)]
    aggregates: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Exit with status 2 if any run hits the step cap.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// approach1, approach2, linear_edge, linear_mid or sldf.
    case: String,
    #[arg(long)]
    e0: Option<f64>,
    #[arg(long)]
    ecrit_mobile: Option<f64>,
    #[arg(long)]
    ecrit_settled: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    j: Option<u32>,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
    }
}

fn strict_exit(strict: bool, capped: bool) -> ExitCode {
    if strict && capped {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let config = Config::from_file(&a.config)?;
    let region = config.region.load()?;
    let inst = Instrumentation {
        log_events: a.log_events.is_some(),
        check_invariants: false,
    };
    let output = run_instrumented(&region, &config.params, inst)?;
    let row = Row::new(0, &config, &region, &output.metrics);
    if let Some(path) = &a.log_events {
        let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(f, "{EVENT_HEADER}")?;
        for e in &output.events {
            writeln!(f, "{e}")?;
        }
    }
    match &a.out {
        Some(path) => sweep::append_rows(path, std::slice::from_ref(&row))?,
        None => sweep::write_rows(io::stdout().lock(), std::slice::from_ref(&row))?,
    }
    Ok(strict_exit(
        a.strict,
        output.metrics.termination == Termination::StepCap,
    ))
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let mut spec = SweepSpec::new(Config::from_file(&a.config)?).seeds(a.seeds);
    spec.cap = a.cap;
    for v in &a.vary {
        spec.vary.push(parse_vary(v)?);
    }
    let rows = spec.run()?;
    match &a.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            sweep::write_rows(f, &rows)?;
        }
        None => sweep::write_rows(io::stdout().lock(), &rows)?,
    }
    let aggs = sweep::aggregate(&rows);
    match &a.aggregates {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            sweep::write_aggregates(f, &aggs)?;
        }
        None => sweep::write_aggregates(io::stderr().lock(), &aggs)?,
    }
    Ok(strict_exit(a.strict, rows.iter().any(Row::hit_step_cap)))
}

fn cmd_bounds(a: BoundsArgs) -> Result<ExitCode> {
    let case: BoundsCase = a.case.parse()?;
    let q = BoundsQuery {
        e0: a.e0,
        ecrit_mobile: a.ecrit_mobile,
        ecrit_settled: a.ecrit_settled,
        alpha: a.alpha,
        dt: a.dt,
        n: a.n,
        j: a.j,
    };
    let rows = table::bounds_table(case, &q)?;
    if a.csv {
        table::write_csv(io::stdout().lock(), &rows)?;
    } else {
        print!("{}", table::render(&rows));
    }
    Ok(ExitCode::SUCCESS)
}
