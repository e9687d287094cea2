use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spinsqueeze::cli::{
    load_config, run_husimi, run_oracle_check, run_phase_gate, run_squeeze_db, run_xi_sweep,
    write_outputs, HusimiConfig, OracleCheckConfig, OutputFormat, Overrides, PhaseGateConfig,
    RunOutput, XiSweepConfig,
};
use spinsqueeze::Error;

#[derive(Parser)]
#[command(
    name = "spinsqueeze",
    version,
    about = "Spin squeezing and geometric phase gate simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Squeezing parameter xi versus twisting strength chi*t
    XiSweep(Common),
    /// Probe-overlap maps of twisted coherent states
    Husimi(Common),
    /// Geometric phase gate traces and phase-vs-M_J fit
    PhaseGate(Common),
    /// Full tensor-space cross-check of the Dicke machinery
    OracleCheck(Common),
    /// 10 log10(var_squeezed / var_unsqueezed)
    SqueezeDb {
        /// Variance of the squeezed quadrature
        #[arg(long)]
        var_squeezed: f64,
        /// Reference variance
        #[arg(long, default_value_t = 1.0)]
        var_unsqueezed: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for tables
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Particle count N (oracle-check: largest N checked)
    #[arg(long)]
    n: Option<usize>,
    /// Largest twisting strength chi*t scanned (xi-sweep)
    #[arg(long)]
    chi_t_max: Option<f64>,
    /// Grid points (xi-sweep: chi_t points; husimi: points per angle; phase-gate: samples per loop)
    #[arg(long)]
    grid: Option<usize>,
    /// Drive strength over gate detuning, lambda/delta' (phase-gate)
    #[arg(long)]
    lambda_over_delta: Option<f64>,
    /// Closed phase-space loops (phase-gate)
    #[arg(long)]
    loops: Option<u32>,
    /// Fock cutoff in place of the automatic rule (phase-gate)
    #[arg(long)]
    n_max_override: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            }),
            n: self.n,
            chi_t_max: self.chi_t_max,
            grid: self.grid,
            lambda_over_delta: self.lambda_over_delta,
            loops: self.loops,
            n_max_override: self.n_max_override,
        }
    }
}

fn run(command: Command) -> Result<RunOutput, Error> {
    let (output, out_dir) = match command {
        Command::XiSweep(c) => {
            let mut cfg: XiSweepConfig = load_config(c.config.as_deref())?;
            cfg.apply(&c.overrides())?;
            (run_xi_sweep(&cfg)?, cfg.out)
        }
        Command::Husimi(c) => {
            let mut cfg: HusimiConfig = load_config(c.config.as_deref())?;
            cfg.apply(&c.overrides())?;
            (run_husimi(&cfg)?, cfg.out)
        }
        Command::PhaseGate(c) => {
            let mut cfg: PhaseGateConfig = load_config(c.config.as_deref())?;
            cfg.apply(&c.overrides())?;
            if let Ok(p) = cfg.params() {
                for w in p.validate().unwrap_or_default() {
                    eprintln!("warning: {w}");
                }
            }
            (run_phase_gate(&cfg)?, cfg.out)
        }
        Command::OracleCheck(c) => {
            let mut cfg: OracleCheckConfig = load_config(c.config.as_deref())?;
            cfg.apply(&c.overrides())?;
            (run_oracle_check(&cfg)?, cfg.out)
        }
        Command::SqueezeDb {
            var_squeezed,
            var_unsqueezed,
        } => (
            run_squeeze_db(var_squeezed, var_unsqueezed)?,
            PathBuf::new(),
        ),
    };
    write_outputs(&out_dir, &output.files)?;
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(output) => {
            println!("{}", output.summary);
            ExitCode::from(output.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
