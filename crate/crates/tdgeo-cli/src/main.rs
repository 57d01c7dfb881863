//! Scenario runner and validation tool for the time-dependent geometry
//! engine. Exit codes: 0 success, 2 input error, 3 numerical failure.

mod runner;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use runner::run_file;
use scenario::{ModelSection, Scenario, Task};

#[derive(Parser)]
#[command(
    name = "tdgeo",
    about = "Time-dependent Riemannian geometry: geodesics, flows, transport, torsion probes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        /// Scenario files (TOML).
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Directory for output artifacts.
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// Run up to N scenarios concurrently (each gets its own
        /// subdirectory when several files are given).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Suppress report output on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Compare a model's closed forms against its autodiff oracles.
    Validate {
        /// Built-in model name.
        model: String,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// List the built-in models.
    ListModels,
}

fn scenario_out_dir(base: &Path, path: &Path, many: bool) -> PathBuf {
    if many {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        base.join(stem)
    } else {
        base.to_path_buf()
    }
}

fn run_batch(scenarios: &[PathBuf], output_dir: &Path, jobs: usize, quiet: bool) -> u8 {
    let many = scenarios.len() > 1;
    let jobs = jobs.max(1);
    let mut worst = 0u8;
    for chunk in scenarios.chunks(jobs) {
        let codes: Vec<u8> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|path| {
                    let out = scenario_out_dir(output_dir, path, many);
                    scope.spawn(move || match run_file(path, &out, quiet) {
                        Ok(paths) => {
                            if !quiet {
                                println!("wrote {}", paths.summary.display());
                                println!("wrote {}", paths.report.display());
                                if let Some(t) = &paths.trajectory {
                                    println!("wrote {}", t.display());
                                }
                            }
                            0u8
                        }
                        Err(e) => {
                            eprintln!("{}: {}", path.display(), e.message());
                            e.exit_code() as u8
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for c in codes {
            worst = worst.max(c);
        }
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenarios,
            output_dir,
            jobs,
            quiet,
        } => run_batch(&scenarios, &output_dir, jobs, quiet),
        Command::Validate {
            model,
            output_dir,
            quiet,
        } => {
            let sc = Scenario {
                schema_version: scenario::SCHEMA_VERSION,
                task: Task::Validate,
                model: ModelSection {
                    name: model,
                    params: None,
                },
                initial: None,
                interval: None,
                integrator: None,
                field: None,
                field2: None,
                probe: None,
                path: None,
                output: None,
            };
            match runner::run(&sc, &output_dir, quiet) {
                Ok(_) => 0,
                Err(e) => {
                    eprintln!("{}", e.message());
                    e.exit_code() as u8
                }
            }
        }
        Command::ListModels => {
            for name in tdgeo::BUILTIN_MODELS {
                match tdgeo::builtin(name) {
                    Ok(b) => println!("{name:<18} dim {}  {}", b.dim, b.description),
                    Err(e) => {
                        eprintln!("{name}: {e}");
                        return ExitCode::from(3);
                    }
                }
            }
            0
        }
    };
    ExitCode::from(code)
}
