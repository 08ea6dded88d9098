// negated comparisons are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use commands::{Axis, SweepSpec};
use config::{apply_override, read_table, set, RunConfig};
use error::CliError;

/// Damped quantum oscillator in a thermal bath: moment dynamics, decoherence
/// time scales and a number-basis cross-check.
#[derive(Parser)]
#[command(name = "qdho", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
    /// Fixed oracle basis size (otherwise grown until converged).
    #[arg(long, value_name = "N")]
    oracle_n: Option<usize>,
    #[arg(long, value_name = "X")]
    t_final: Option<f64>,
    /// Number of sample intervals.
    #[arg(long, value_name = "K")]
    samples: Option<usize>,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the moments and write trajectory, decoherence series and report.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also run the number-basis oracle and write oracle.csv.
        #[arg(long)]
        oracle: bool,
    },
    /// Compare the moment dynamics with the number-basis oracle.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate time scales along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Number of points, endpoints included.
        #[arg(long)]
        steps: usize,
    },
    /// Dump the stationary density matrix on a square grid.
    SteadyState {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        grid_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        grid_max: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
}

fn load(common: &Common, extra: &[(&str, Option<Value>)]) -> Result<Table, CliError> {
    let mut table = read_table(common.config.as_deref())?;
    for o in &common.overrides {
        apply_override(&mut table, o)?;
    }
    let flags = [
        (
            "out",
            common
                .out
                .as_ref()
                .map(|p| Value::String(p.display().to_string())),
        ),
        ("t_final", common.t_final.map(Value::Float)),
        ("samples", common.samples.map(|k| Value::Integer(k as i64))),
        (
            "oracle_n",
            common.oracle_n.map(|k| Value::Integer(k as i64)),
        ),
    ];
    for (key, value) in flags.into_iter().chain(extra.iter().cloned()) {
        if let Some(v) = value {
            set(&mut table, key, v);
        }
    }
    Ok(table)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, oracle } => {
            let extra = [("oracle", oracle.then_some(Value::Boolean(true)))];
            commands::simulate(&RunConfig::from_table(load(&common, &extra)?)?)
        }
        Command::Verify { common } => {
            commands::verify_cmd(&RunConfig::from_table(load(&common, &[])?)?)
        }
        Command::Sweep {
            common,
            axis,
            from,
            to,
            steps,
        } => {
            let table = load(&common, &[])?;
            let spec = SweepSpec {
                axis,
                from,
                to,
                steps,
                jobs: common.jobs,
            };
            commands::sweep(&table, &spec)
        }
        Command::SteadyState {
            common,
            grid_min,
            grid_max,
            grid_points,
        } => {
            let extra = [
                ("grid_min", grid_min.map(Value::Float)),
                ("grid_max", grid_max.map(Value::Float)),
                ("grid_points", grid_points.map(|k| Value::Integer(k as i64))),
            ];
            commands::steady_state(&RunConfig::from_table(load(&common, &extra)?)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
