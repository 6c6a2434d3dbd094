use clap::{Parser, Subcommand};
use modwedge::runner::run_config_file;
use modwedge::scenes::{build_scene, describe, list_scenes, parse_params};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "modwedge", version, about = "Form and classical modulus of homology classes on cubical complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write report.json, summary.csv and run.log.
    Run {
        config: PathBuf,
        /// Maximum number of concurrent jobs.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (overrides MODWEDGE_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenes.
    ListScenes,
    /// Show a scene's parameters and featured classes.
    Describe { scene: String },
    /// Print the complex of a scene as JSON.
    ExportMesh {
        scene: String,
        /// Parameters as key=value,key=value.
        #[arg(default_value = "")]
        params: String,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, jobs, out } => {
            if jobs == Some(0) {
                eprintln!("error: --jobs must be at least 1");
                return ExitCode::from(2);
            }
            let (code, outcome, message) = run_config_file(&config, jobs, out.as_deref());
            match outcome {
                Some(o) => {
                    print!("{message}");
                    println!("reports written to {}", o.out_dir.display());
                }
                None => eprintln!("error: {message}"),
            }
            ExitCode::from(code as u8)
        }
        Command::ListScenes => {
            for s in list_scenes() {
                println!("{:<16} {}", s.name, s.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Describe { scene } => match describe(&scene) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::ExportMesh { scene, params, out } => {
            let result = parse_params(&params)
                .and_then(|p| build_scene(&scene, &p))
                .and_then(|s| s.complex.to_json());
            match result {
                Ok(json) => {
                    if let Some(path) = out {
                        if let Err(e) = std::fs::write(&path, json) {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return ExitCode::from(2);
                        }
                    } else {
                        // A closed pipe (e.g. `| head`) is not an error.
                        let _ = writeln!(std::io::stdout().lock(), "{json}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
