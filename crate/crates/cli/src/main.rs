use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use folbm_cli::commands::{self, VerifyOptions};
use folbm_cli::{configure_threads, CliError, RunConfig, THREADS_VAR};

/// Foliated Brownian motion: simulation, harmonic densities and verification.
#[derive(Parser)]
#[command(name = "folbm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and write paths.csv and meta.txt.
    Simulate(Settings),
    /// Solve for the torus harmonic density and estimate it by occupation.
    Density(Settings),
    /// Run the verification suite and write verify_report.txt.
    Verify {
        #[command(flatten)]
        settings: Settings,
        /// Run a single property.
        #[arg(long)]
        only: Option<String>,
        /// Inject a fault into a property (qv or generator).
        #[arg(long = "break", value_name = "PROPERTY")]
        break_property: Option<String>,
    },
}

/// Values are parsed by the configuration layer so that flags and config
/// files share validation and messages.
#[derive(Args)]
struct Settings {
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// product, kronecker or torus3.
    #[arg(long)]
    model: Option<String>,
    /// Kronecker slope.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Torus radius ratio (b > 1).
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Torus leaf slope.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Product model transverse dimension.
    #[arg(long)]
    q: Option<String>,
    /// Product model leaf dimension.
    #[arg(long)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    n_paths: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Histogram bins per axis.
    #[arg(long)]
    bins: Option<String>,
    /// Collocation points of the density solve.
    #[arg(long)]
    grid: Option<String>,
    /// Occupation samples of the density command.
    #[arg(long)]
    samples: Option<String>,
    /// Record every k-th step.
    #[arg(long)]
    stride: Option<String>,
    /// Comma-separated initial point, or `origin`.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// frame-bundle or flow.
    #[arg(long)]
    construction: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl Settings {
    fn load(self) -> Result<RunConfig, CliError> {
        let flags = [
            ("model", self.model),
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("q", self.q),
            ("p", self.p),
            ("dt", self.dt),
            ("steps", self.steps),
            ("n_paths", self.n_paths),
            ("seed", self.seed),
            ("bins", self.bins),
            ("grid", self.grid),
            ("samples", self.samples),
            ("stride", self.stride),
            ("start", self.start),
            ("construction", self.construction),
            ("out", self.out),
        ];
        let set = flags.into_iter().filter_map(|(k, v)| v.map(|v| (k, v)));
        Ok(RunConfig::load(self.config.as_deref(), set)?)
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads(std::env::var(THREADS_VAR).ok().as_deref())?;
    match cli.command {
        Command::Simulate(settings) => {
            let cfg = settings.load()?;
            let summary = commands::simulate(&cfg)?;
            eprintln!("wrote {} rows to {}", summary.rows, summary.paths_csv.display());
            Ok(true)
        }
        Command::Density(settings) => {
            let cfg = settings.load()?;
            let summary = commands::density(&cfg)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "linf gap {:e}, occupation chi-square p = {:.4}",
                summary.linf_gap, summary.p_value
            );
            Ok(true)
        }
        Command::Verify {
            settings,
            only,
            break_property,
        } => {
            let cfg = settings.load()?;
            let reports = commands::verify(&cfg, &VerifyOptions { only, break_property })?;
            for r in &reports {
                println!("{r}");
            }
            Ok(reports.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
