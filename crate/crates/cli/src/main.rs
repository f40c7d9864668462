//! `cac`: analyze and simulate threshold connection admission control at an
//! OFDMA subscriber station.
//!
//! Exit codes: 0 success, 1 input error, 2 numeric failure, 3 internal error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cac_core::chain::{build_transition_matrix, dump_chain, solve_stationary};
use cac_core::metrics::MetricMode;
use cac_core::run::{plot_script, run, sweep, write_csv, Command, RunOutput, Scenario, SweepSpec};
use cac_core::sim::SimConfig;
use cac_core::{parse_config, Error, SystemConfig};

#[derive(Parser)]
#[command(name = "cac", version, about = "Connection admission control analyzer for OFDMA subscriber stations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the annotated reference configuration.
    Init {
        /// Destination file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the Markov chain and report metrics.
    Analyze(RunArgs),
    /// Estimate metrics by Monte-Carlo simulation.
    Simulate(RunArgs),
    /// Analyze and simulate, one row each.
    Both(RunArgs),
    /// Sweep one parameter under CAC and without CAC.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `key=start:step:end`.
        #[arg(long)]
        sweep: String,
        /// What to run at each point.
        #[arg(long, default_value = "analyze", value_parser = ["analyze", "simulate", "both"])]
        source: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = SimConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SimConfig::default().frames)]
    frames: u64,
    #[arg(long, default_value_t = SimConfig::default().warmup)]
    warmup: u64,
    #[arg(long, default_value_t = SimConfig::default().batches)]
    batches: usize,
    /// Overrides `metric_mode` from the config file.
    #[arg(long, value_parser = ["consistent", "paper_literal"])]
    metric_mode: Option<String>,
    /// Write the transition matrix (and `<PATH>.pi`) as sparse triplets.
    #[arg(long)]
    dump_chain: Option<PathBuf>,
}

impl RunArgs {
    fn sim(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            frames: self.frames,
            warmup: self.warmup,
            batches: self.batches,
        }
    }

    fn load(&self) -> Result<SystemConfig, Error> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| {
            Error::InvalidParams(format!("cannot read {}: {e}", self.config.display()))
        })?;
        let mut config = parse_config(&text)?;
        if let Some(mode) = &self.metric_mode {
            config.metric_mode = mode.parse::<MetricMode>().map_err(Error::InvalidParams)?;
        }
        Ok(config)
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn finish(out: &RunOutput, path: Option<&Path>) -> Result<(), Error> {
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    write_csv(&out.rows, output(path)?)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Cmd::Init { out } => {
            let mut w = output(out.as_deref())?;
            w.write_all(SystemConfig::reference_defaults_text().as_bytes())?;
            w.flush()?;
            Ok(())
        }
        Cmd::Analyze(args) => single(args, Command::Analyze),
        Cmd::Simulate(args) => single(args, Command::Simulate),
        Cmd::Both(args) => single(args, Command::Both),
        Cmd::Sweep { run: args, sweep: text, source } => {
            let config = args.load()?;
            let spec = SweepSpec::parse(&text)?;
            let command = match source.as_str() {
                "simulate" => Command::Simulate,
                "both" => Command::Both,
                _ => Command::Analyze,
            };
            let out = sweep(&config, &spec, command, &args.sim())?;
            finish(&out, args.out.as_deref())?;
            if let Some(csv_path) = &args.out {
                let script = csv_path.with_extension("gp");
                let name = csv_path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                std::fs::write(&script, plot_script(&name, &spec, &out.rows))?;
                eprintln!("plot script: {}", script.display());
            }
            Ok(())
        }
    }
}

fn single(args: RunArgs, command: Command) -> Result<(), Error> {
    let config = args.load()?;
    if let Some(path) = &args.dump_chain {
        let matrix = build_transition_matrix(&config)?;
        let pi = solve_stationary(&matrix, &config.solver.options())?;
        dump_chain(path, &matrix, Some(&pi))?;
    }
    let out = run(&config, command, &args.sim(), &Scenario::base())?;
    finish(&out, args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() {
                1
            } else if e.is_numeric_error() {
                2
            } else {
                3
            })
        }
    }
}
