use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ricci_spectra::experiment::{exit_code, load_config, run_experiment, ExperimentKind, EXIT_OK};

#[derive(Parser)]
#[command(version, about = "Laplacian spectra of surfaces under the Ricci flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow and record the tracked spectrum
    Flow(Common),
    /// Compare eigenvalue variation formulas with finite differences
    Verify(Common),
    /// Check the shrinking-soliton spectrum law
    Soliton(Common),
    /// Unit-area normalized flow on a sphere, following λ1·Area
    Conjecture(Common),
    /// Perelman's lowest eigenvalue of −4Δ + R along the flow
    Perelman(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's [output] dir)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Flow(c) => (ExperimentKind::Flow, c),
        Command::Verify(c) => (ExperimentKind::Verify, c),
        Command::Soliton(c) => (ExperimentKind::Soliton, c),
        Command::Conjecture(c) => (ExperimentKind::Conjecture, c),
        Command::Perelman(c) => (ExperimentKind::Perelman, c),
    };
    let code = match load_config(&common.config, Some(kind)) {
        Err(e) => {
            eprintln!("config error: {e}");
            exit_code(&e)
        }
        Ok(cfg) => {
            let out = common.out.or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            match run_experiment(&cfg, Some(&out)) {
                Ok(run) => {
                    if !common.quiet {
                        println!("{}", serde_json::to_string_pretty(&run.summary).expect("summary serializes"));
                        println!("outputs written to {}", out.display());
                    }
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("{} failed: {e}", kind.name());
                    exit_code(&e)
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
