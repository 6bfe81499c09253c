//! `rabi`: batch front end emitting CSV and JSON.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or domain error,
//! 3 accuracy or truncation failure.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rabi_core::asymptotics::{GnMethod, Source};
use rabi_core::eigensolve::{TruncationPolicy, DEFAULT_TOL};
use rabi_core::transform::TestFunction;
use rabi_core::Error;

use commands::Suite;

#[derive(Parser, Debug)]
#[command(name = "rabi", version, about = "Large eigenvalues of quantum-Rabi-type Jacobi operators")]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues lambda_n for n_lo..=n_hi.
    Spectrum {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n_lo: u64,
        #[arg(long)]
        n_hi: u64,
        #[arg(long)]
        out: PathBuf,
        /// `double` or `fixed:M`.
        #[arg(long, default_value = "double")]
        trunc_policy: TruncationPolicy,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Residuals of a spectrum against the asymptotic predictions.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        spectrum: PathBuf,
        /// E0, E2, Y0 or GRWA.
        #[arg(long)]
        source: Source,
        /// Diagonal-correction provider for GRWA.
        #[arg(long, default_value = "exp")]
        gn_method: GnMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagonal correction g_n(k) and the diagonal l_n(k).
    Gn {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated anchors.
        #[arg(long)]
        n_list: String,
        #[arg(long, default_value = "exp")]
        method: GnMethod,
        /// Rows for |k - n| <= R.
        #[arg(long, default_value_t = 0)]
        k_radius: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smoothed trace difference between L_n and its diagonal.
    TraceCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n_list: String,
        /// `gaussian:SIGMA`.
        #[arg(long)]
        chi: TestFunction,
        #[arg(long)]
        out: PathBuf,
    },
    /// Identity and inequality suites for the phase functions.
    PhaseCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Oscillatory integrals against their bounds over a grid of mu.
    OscillatorySweep {
        #[arg(long)]
        family: PathBuf,
        /// Comma-separated mu values.
        #[arg(long)]
        mu_grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover (omega, E, g) from branch spectra.
    Recover {
        /// `n,lambda[,branch]`; rows marked `-` count as the minus branch.
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        spectrum_minus: Option<PathBuf>,
        #[arg(long)]
        hbar: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        e if e.is_accuracy() => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> io::Result<()> {
    use Command::*;
    match cli.command {
        Spectrum { model, n_lo, n_hi, out, trunc_policy, tol } => {
            commands::spectrum(&model, n_lo, n_hi, trunc_policy, tol, &out)
        }
        Compare { model, spectrum, source, gn_method, out } => {
            commands::compare(&model, &spectrum, source, gn_method, &out)
        }
        Gn { model, n_list, method, k_radius, out } => {
            commands::gn(&model, &io::parse_list(&n_list, "n-list")?, method, k_radius, &out)
        }
        TraceCheck { model, n_list, chi, out } => {
            commands::trace_check(&model, &io::parse_list(&n_list, "n-list")?, chi, &out)
        }
        PhaseCheck { model, suite, samples, seed, out } => commands::phase_check(&model, suite, samples, seed, &out),
        OscillatorySweep { family, mu_grid, out } => {
            commands::oscillatory_sweep(&family, &io::parse_list(&mu_grid, "mu-grid")?, &out)
        }
        Recover { spectrum, spectrum_minus, hbar, out } => {
            commands::recover(&spectrum, spectrum_minus.as_deref(), hbar, &out)
        }
    }
}

fn main() -> ExitCode {
    // Clap prints usage and exits with 2 on bad arguments.
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
