//! `superadiabatic` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical or
//! assumption failure, 4 a criterion failed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use superadiabatic::recursion::Corruption;
use superadiabatic::{DoubleDouble, Error};

use config::{ExperimentConfig, Precision};
use output::Provenance;

#[derive(Parser, Debug)]
#[command(name = "superadiabatic", version, about = "Superadiabatic couplings, bounds and transition histories for two-level systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file, or the name of a bundled config.
    #[arg(long, global = true, default_value = "polepair")]
    config: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Arithmetic for the recursion and bases.
    #[arg(long, global = true, value_enum, env = "SUPERADIABATIC_PRECISION")]
    precision: Option<Precision>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Print the resolved plan and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Print gnuplot scripts for the written tables on stdout.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Effective coupling against the universal form.
    Coupling,
    /// A priori recursion bounds and the combinatorial lemma.
    Bounds {
        /// Perturb x_N in the recursion (sensitivity test hook).
        #[arg(long, hide = true)]
        corrupt: Option<usize>,
        #[arg(long, hide = true, default_value_t = 1e-3)]
        corrupt_scale: f64,
    },
    /// Taylor coefficients against the singularity prediction.
    Darboux,
    /// Time evolution and the transition history.
    Simulate,
    /// Natural-time reparametrisation and its singularity data.
    Reparam,
    /// Weighted norm of theta'.
    Norms,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coupling => "coupling",
            Command::Bounds { .. } => "bounds",
            Command::Darboux => "darboux",
            Command::Simulate => "simulate",
            Command::Reparam => "reparam",
            Command::Norms => "norms",
        }
    }
}

enum Failure {
    Lib(Error),
    Criteria(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig, precision: Precision) -> superadiabatic::Result<commands::Report> {
    macro_rules! generic {
        ($f:ident $(, $arg:expr)*) => {
            match precision {
                Precision::Double => commands::$f::<f64>(cfg $(, $arg)*),
                Precision::Extended => commands::$f::<DoubleDouble>(cfg $(, $arg)*),
            }
        };
    }
    match cmd {
        Command::Coupling => generic!(coupling),
        Command::Bounds { corrupt, corrupt_scale } => generic!(bounds, corrupt.map(|index| Corruption { index, scale: corrupt_scale })),
        Command::Darboux => commands::darboux(cfg),
        Command::Simulate => generic!(simulate),
        Command::Reparam => commands::reparam(cfg),
        Command::Norms => generic!(norms),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let text = config::load_text(&cli.config)?;
    let cfg = ExperimentConfig::parse(&text)?;
    let precision = cli.precision.or(cfg.precision).unwrap_or(Precision::Extended);
    let prov = Provenance::new(cli.command.name(), &cfg.name, &text, precision);

    if cli.dry_run {
        let plan = json!({ "provenance": prov, "jobs": cli.jobs, "out": cli.out, "config": cfg });
        println!("{}", serde_json::to_string_pretty(&plan).expect("plan serialises"));
        return Ok(());
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build().map_err(|e| Error::config(e.to_string()))?;
    let report = pool.install(|| dispatch(cli.command, &cfg, precision))?;

    std::fs::create_dir_all(&cli.out).map_err(|e| Error::config(format!("cannot create {}: {e}", cli.out.display())))?;
    let mut files = Vec::new();
    for t in &report.tables {
        files.push(output::write_table(&cli.out, t)?);
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    let summary = json!({
        "provenance": prov,
        "checks": report.checks,
        "pass": failed == 0,
        "results": report.results,
        "tables": report.tables.iter().map(|t| &t.file).collect::<Vec<_>>(),
    });
    files.push(output::write_json(&cli.out, &format!("{}_{}.json", cfg.name, cli.command.name()), &summary)?);

    // with --gnuplot, stdout carries only the scripts
    let mut lines = report.lines.clone();
    for c in &report.checks {
        lines.push(format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    lines.extend(files.iter().map(|f| format!("wrote {}", f.display())));
    if cli.gnuplot {
        for l in &lines {
            eprintln!("{l}");
        }
        for (i, x, ys, log) in &report.plots {
            print!("{}", output::gnuplot_script(&cli.out, &report.tables[*i], *x, ys, *log));
            println!("pause mouse close");
        }
    } else {
        for l in &lines {
            println!("{l}");
        }
    }
    if failed > 0 {
        return Err(Failure::Criteria(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Criteria(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(4)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
