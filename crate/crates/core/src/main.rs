use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use asip_lab::runner::{replay, run, ExperimentConfig, RunOptions};
use asip_lab::systems::{MAPS, OBSERVABLES};
use asip_lab::Error;

#[derive(Parser)]
#[command(name = "asip-lab", version, about = "Invariance-principle experiments for expanding interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica fan-out.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory receiving CSV artifacts and the manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config (JSON).
    Run { config: PathBuf },
    /// Re-run a manifest and compare its artifacts byte for byte.
    Replay { manifest: PathBuf },
    ListMaps,
    ListObservables,
}

fn error_line(kind: &str, message: &str) -> String {
    let v = serde_json::json!({ "kind": kind, "message": message });
    format!("error: {v}")
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", error_line(e.code(), &e.to_string()));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", error_line("usage", msg.lines().next().unwrap_or("")));
            return ExitCode::from(2);
        }
    };
    match cli.command {
        Command::ListMaps => {
            for (name, about) in MAPS {
                println!("{name}\t{about}");
            }
            ExitCode::SUCCESS
        }
        Command::ListObservables => {
            for (name, about) in OBSERVABLES {
                println!("{name}\t{about}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let options = RunOptions { out_dir: cli.out_dir, workers: cli.workers, seed: cli.seed };
            match run(&cfg, &options) {
                Ok(out) => {
                    for v in &out.verdicts {
                        println!("{}", v.line());
                    }
                    for a in &out.artifacts {
                        println!("wrote {}", a.display());
                    }
                    println!("wrote {}", out.manifest.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Replay { manifest } => match replay(&manifest, cli.workers) {
            Ok(r) if r.matched() => {
                println!("replay: match ({} artifacts)", r.compared.len());
                ExitCode::SUCCESS
            }
            Ok(r) => {
                println!("replay: mismatch {}", r.mismatches.join(" "));
                ExitCode::from(1)
            }
            Err(e) => fail(&e),
        },
    }
}
