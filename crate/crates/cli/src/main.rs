use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use genfn_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "genfn", version, about = "Reproducible generalized-function experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config (or an emitted manifest).
    Run {
        config: PathBuf,
        /// Output directory; defaults to $GENFN_LAB_OUT/<kind>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dot-path override, e.g. `params.alpha1=3` or `alpha1=3`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the experiment kinds.
    List,
    /// Print the parameter schema of a kind with its defaults.
    Describe { kind: String },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e.record()).expect("record serializes"));
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, overrides } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(CliError::io(&config, e)),
            };
            let parsed = match ExperimentConfig::from_json(&text, &overrides) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match genfn_cli::run(&parsed, out.as_deref()) {
                Ok(report) => {
                    println!("{}", report.out_dir.display());
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report.manifest["summary"]).expect("summary serializes")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::List => {
            for (name, summary) in genfn_cli::list() {
                println!("{name:<22}{summary}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { kind } => match genfn_cli::describe(&kind) {
            Ok(v) => {
                println!("{}", serde_json::to_string_pretty(&v).expect("schema serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
