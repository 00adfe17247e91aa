use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cyberbully_dnn::datasets::SplitMode;
use cyberbully_dnn::evaluation::{render_tables, EvalReport, Layout, RenderOptions};
use cyberbully_dnn::experiment::{run_experiment, validate_config, Overrides};
use cyberbully_dnn::{verification, Error};

#[derive(Parser)]
#[command(name = "cbd", version, about = "Neural cyberbullying detection experiments")]
struct Cli {
    /// Master seed, replacing the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where oversampling happens relative to the fold split.
    #[arg(long, global = true)]
    mode: Option<SplitMode>,
    /// Worker threads for grid cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a config file.
    Run { config: PathBuf },
    /// Check a config file and print it with defaults filled in.
    Validate { config: PathBuf },
    /// Render a results.csv (or transfer.csv) in one of the paper layouts.
    Render {
        results: PathBuf,
        #[arg(long, default_value = "table1a")]
        layout: Layout,
        /// Also print the full-precision CSV form.
        #[arg(long)]
        csv: bool,
        /// Embedding used by table3a and table5.
        #[arg(long, default_value = "sswe")]
        focus: String,
        /// Comma-separated embedding columns.
        #[arg(long, value_delimiter = ',', default_value = "random,glove,sswe")]
        embeddings: Vec<String>,
    },
    /// Finite-difference gradient checks for every layer and architecture.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        mode: cli.mode,
        jobs: cli.jobs,
    };
    match run(cli.command, &overrides) {
        Ok(code) => code,
        Err(e @ Error::Validation(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, overrides: &Overrides) -> cyberbully_dnn::Result<ExitCode> {
    match command {
        Command::Validate { config } => {
            let c = validate_config(&config, overrides)?;
            print!("{}", c.to_toml());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config } => {
            let c = validate_config(&config, overrides)?;
            let summary = run_experiment(&c)?;
            println!("{}", summary.results_csv().display());
            if summary.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for f in &summary.failures {
                    eprintln!("failed: {f}");
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::Render {
            results,
            layout,
            csv,
            focus,
            embeddings,
        } => {
            let file = std::fs::File::open(&results).map_err(|e| Error::Io {
                path: results.clone(),
                source: e,
            })?;
            let report = EvalReport::read_csv(file)?;
            let opts = RenderOptions {
                embeddings,
                focus_embedding: focus,
                ..RenderOptions::default()
            };
            let table = render_tables(&[report], layout, &opts);
            print!("{}", table.to_markdown());
            if csv {
                print!("\n{}", table.to_csv()?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { seeds } => {
            let outcomes = verification::run_suite(seeds)?;
            let mut worst: Vec<(String, f64, u64, String)> = Vec::new();
            for o in &outcomes {
                match worst.iter_mut().find(|w| w.0 == o.name) {
                    Some(w) if w.1 >= o.report.max_rel_error => {}
                    Some(w) => *w = (o.name.clone(), o.report.max_rel_error, o.seed, o.report.worst.clone()),
                    None => worst.push((o.name.clone(), o.report.max_rel_error, o.seed, o.report.worst.clone())),
                }
            }
            let mut ok = true;
            for (name, err, seed, at) in &worst {
                let pass = *err < verification::TOLERANCE;
                ok &= pass;
                println!(
                    "{} {name:<24} max rel error {err:.3e} (seed {seed}, {at})",
                    if pass { "PASS" } else { "FAIL" }
                );
            }
            println!("{} checks over {seeds} seeds, tolerance {:e}", outcomes.len(), verification::TOLERANCE);
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
