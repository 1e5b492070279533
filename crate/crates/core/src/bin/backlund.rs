use std::path::PathBuf;
use std::process::ExitCode;

use backlund_quadrics::run::{execute, Command, Options};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "backlund", version, about = "Bäcklund transforms of ruled quadrics, checked numerically")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; falls back to $BACKLUND_OUT_DIR, then ./backlund-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for the random sweeps.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every declared tolerance.
    #[arg(long)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Static, motion, tangency, wedge and flatness identity suites.
    Identities(Common),
    /// Riccati transport of the configured seed; writes CSV meshes.
    Transform(Common),
    /// The balance of the parabola.
    Archimedes {
        #[command(flatten)]
        common: Common,
        /// Number of slices.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common, n) = match cli.command {
        Cmd::Identities(c) => (Command::Identities, c, None),
        Cmd::Transform(c) => (Command::Transform, c, None),
        Cmd::Archimedes { common, n } => (Command::Archimedes, common, n),
    };
    let opts = Options { config: common.config, out: common.out, seed: common.seed, tol_scale: common.tol_scale, n };
    let outcome = execute(command, &opts);
    if let Some(path) = &outcome.report_path {
        println!("{}", path.display());
    }
    if let Some(msg) = &outcome.message {
        eprintln!("backlund {}: {msg}", command.name());
    }
    ExitCode::from(outcome.code as u8)
}
