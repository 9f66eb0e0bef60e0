use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wvb::commands::{self, AnalyzeArgs, SelftestArgs, SimulateArgs, VerifyArgs};
use wvb::io::Layout;
use wvb::CliError;

/// Weak-value commutator benchmark: simulate an RF-marked neutron
/// interferometer campaign, reduce it to weak values and check
/// ⟨[σz, σx]⟩ = 2i⟨σy⟩.
///
/// Exit codes: 0 success, 1 acceptance failure, 2 config, 3 IO,
/// 4 missing data. WVB_THREADS caps worker threads.
#[derive(Debug, Parser)]
#[command(name = "wvb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate time-folded detector histograms for every χ and channel.
    Simulate {
        /// JSON experiment config (defaults when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write expected counts instead of Poisson draws.
        #[arg(long)]
        noiseless: bool,
        #[arg(long, value_enum, default_value_t = Layout::PerChannel)]
        layout: Layout,
    },
    /// Fit a simulated or recorded campaign and reconstruct weak values.
    Analyze {
        /// Campaign directory written by `simulate`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Config to analyze with; defaults to the campaign's config.json.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Rotation angle assumed by the analysis, rad.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Compare −4 p_x Im w with 2 p_y − 1 and gate on the RMS residual.
    Verify {
        /// Directory written by `analyze`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rms_bound: Option<f64>,
        /// Also write a dense sin χ and w(χ) curve for plotting.
        #[arg(long)]
        theory_overlay: bool,
    },
    /// Check the weak-value route against direct matrix arithmetic.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
        /// Negative control: scale the commutator prefactor slightly.
        #[arg(long, hide = true)]
        perturb_prefactor: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = wvb::thread_limit()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("WVB_THREADS: {e}")))?;
    }
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            noiseless,
            layout,
        } => commands::simulate(&SimulateArgs {
            config,
            out,
            seed,
            noiseless,
            layout,
        })
        .map(drop),
        Command::Analyze {
            data,
            out,
            config,
            alpha,
        } => commands::analyze(&AnalyzeArgs {
            data,
            out,
            config,
            alpha,
        })
        .map(drop),
        Command::Verify {
            data,
            out,
            rms_bound,
            theory_overlay,
        } => commands::verify(&VerifyArgs {
            data,
            out,
            rms_bound,
            theory_overlay,
        })
        .map(drop),
        Command::Selftest { seed, perturb_prefactor } => commands::selftest(&SelftestArgs {
            perturb_prefactor,
            seed,
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wvb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
