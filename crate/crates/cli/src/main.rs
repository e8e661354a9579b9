//! `wlsi`: derive weighted functional inequalities from drift certificates and check them
//! against independent numerics. Exit status 0 iff every asserted check passes, 1 when a check
//! fails, 2 on configuration or output errors.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::report::Report;

#[derive(Parser)]
#[command(name = "wlsi", version, about = "Weighted log-Sobolev inequalities from Lyapunov conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// nodes of the oracle and transport grids
    #[arg(long, global = true)]
    grid_nodes: Option<usize>,
    /// truncation radius of the oracle grid
    #[arg(long, global = true)]
    rmax: Option<f64>,
    /// override any config key, e.g. --set pipeline.delta=3 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// print the resolved configuration and exit
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov certificate -> weight, rate, F-Sobolev, Poincare, weak and modified LSI
    Derive,
    /// ratio scans and adversarial search over the test-function families
    Verify,
    /// spectral gap, LSI ratio and entropy decay of the discretised weighted generator
    Oracle,
    /// weighted Langevin dynamics, moments, tails and additive-functional deviations
    Simulate,
    /// weighted distance, T1/T2, Bobkov-Gotze and Hopf-Lax checks
    Transport,
    /// canned end-to-end runs
    Reproduce {
        case: Case,
        /// Cauchy exponent
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Cauchy,
    Exponential,
    Subexp,
}

fn preset(command: &Command) -> (String, toml::Table) {
    let mut t = toml::Table::new();
    let mut set = |k: &str| config::set_key(&mut t, k).expect("preset keys are valid");
    let name = match command {
        Command::Derive => "derive",
        Command::Verify => "verify",
        Command::Oracle => "oracle",
        Command::Simulate => "simulate",
        Command::Transport => "transport",
        Command::Reproduce { case, beta } => match case {
            Case::Cauchy => {
                set("measure.kind=cauchy");
                set(&format!("measure.beta={}", beta.unwrap_or(2.0)));
                "reproduce-cauchy"
            }
            Case::Exponential => {
                set("measure.kind=exponential");
                "reproduce-exponential"
            }
            Case::Subexp => {
                set("measure.kind=subexp");
                "reproduce-subexp"
            }
        },
    };
    (name.to_string(), t)
}

fn resolve(cli: &Cli) -> wlsi_core::Result<(String, ExperimentConfig)> {
    let (name, base) = preset(&cli.command);
    let c = &cli.common;
    let mut overrides = c.overrides.clone();
    if let Some(s) = c.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(o) = &c.out {
        overrides.push(format!("out={:?}", o.display().to_string()));
    }
    if let Some(n) = c.grid_nodes {
        overrides.push(format!("oracle.grid_nodes={n}"));
        overrides.push(format!("transport.grid_nodes={n}"));
    }
    if let Some(r) = c.rmax {
        overrides.push(format!("oracle.r_max={r:?}"));
    }
    if let Command::Reproduce { beta: Some(b), case: Case::Cauchy } = &cli.command {
        overrides.push(format!("measure.beta={b:?}"));
    }
    Ok((name, config::load(base, c.config.as_deref(), &overrides)?))
}

fn run(command: &Command, cfg: &ExperimentConfig) -> Report {
    let mut report = Report::default();
    let Some(d) = commands::derive(cfg, &mut report) else {
        return report;
    };
    match command {
        Command::Derive => {}
        Command::Verify => commands::verify(cfg, &d, &mut report),
        Command::Oracle => commands::oracle(cfg, &d, &mut report),
        Command::Simulate => commands::simulate_stage(cfg, &d, &mut report),
        Command::Transport => commands::transport(cfg, &d, &mut report),
        Command::Reproduce { case, .. } => match case {
            Case::Cauchy => commands::verify(cfg, &d, &mut report),
            Case::Exponential => {
                commands::oracle(cfg, &d, &mut report);
                commands::transport(cfg, &d, &mut report);
            }
            Case::Subexp => commands::verify(cfg, &d, &mut report),
        },
    }
    report
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, cfg) = match resolve(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("wlsi: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.common.print_config {
        print!("{}", toml::to_string(&cfg).expect("config serialises"));
        return ExitCode::SUCCESS;
    }
    let report = run(&cli.command, &cfg);
    for c in &report.checks {
        let tag = match (c.passed, c.asserted) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "note",
        };
        println!("[{tag}] {}: {}", c.name, c.detail);
    }
    let dir = PathBuf::from(&cfg.out);
    match report::write(&dir, &name, &cfg, &report) {
        Ok(paths) => println!("wrote {} files to {}", paths.len(), dir.display()),
        Err(e) => {
            eprintln!("wlsi: {e}");
            return ExitCode::from(2);
        }
    }
    if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) }
}
