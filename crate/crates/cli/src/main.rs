use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splitdg::config::RunConfig;
use splitdg::driver::{analyze, run, AnalyzeOptions};
use splitdg::operators::OperatorSet;
use splitdg::physics::GasModel;
use splitdg::Error;

/// Environment variable overriding every output directory.
const OUTPUT_ENV: &str = "SPLITDG_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "splitdg", version, about = "Split-form DGSEM solver for compressible LES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML config.
    Run { config: PathBuf },
    /// Diagnostics of a stored field or checkpoint.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        spectrum: bool,
        #[arg(long)]
        channel_stats: bool,
        /// Kinematic viscosity for dissipation rates and wall units.
        #[arg(long)]
        nu: Option<f64>,
        /// Ratio of specific heats of the stored field.
        #[arg(long, default_value_t = 1.4)]
        kappa: f64,
        /// Output directory (default: next to the file).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// 1D operator inspection.
    Operators {
        #[command(subcommand)]
        action: OperatorsAction,
    },
}

#[derive(Subcommand)]
enum OperatorsAction {
    /// Nodes, weights and derivative matrix as CSV on stdout.
    Dump {
        #[arg(long)]
        degree: usize,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::InvalidState { .. } | Error::NonFinite(_) => 3,
        Error::Io { .. } | Error::Format { .. } => 4,
    }
}

fn output_dir(default: PathBuf) -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or(default)
}

fn dump_operators(degree: usize) -> Result<(), Error> {
    let ops = OperatorSet::new(degree)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    writeln!(out, "kind,i,j,value").map_err(io)?;
    for (i, (x, w)) in ops.nodes.iter().zip(&ops.weights).enumerate() {
        writeln!(out, "node,{i},,{x:.17e}").map_err(io)?;
        writeln!(out, "weight,{i},,{w:.17e}").map_err(io)?;
    }
    for i in 0..ops.n_points() {
        for j in 0..ops.n_points() {
            writeln!(out, "derivative,{i},{j},{:.17e}", ops.derivative[(i, j)]).map_err(io)?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_file(&config)?;
            let dir = output_dir(cfg.output.directory.clone());
            let summary = run(&cfg, &dir)?;
            println!(
                "completed {} steps, t = {:.6e}, outputs in {}",
                summary.steps,
                summary.final_time,
                dir.display()
            );
            Ok(())
        }
        Command::Analyze {
            file,
            spectrum,
            channel_stats,
            nu,
            kappa,
            output_dir: dir,
        } => {
            let default = dir.unwrap_or_else(|| {
                file.parent()
                    .map(|p| p.to_path_buf())
                    .filter(|p| !p.as_os_str().is_empty())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let opts = AnalyzeOptions {
                spectrum,
                channel_stats,
                nu,
                gas: GasModel {
                    kappa,
                    ..GasModel::default()
                },
            };
            let written = analyze(&file, &opts, &output_dir(default))?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Operators {
            action: OperatorsAction::Dump { degree },
        } => dump_operators(degree),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
