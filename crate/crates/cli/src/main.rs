//! `starball` — run small-ball / inverse-structure experiments from
//! JSON configs.
//!
//! Exit codes: 0 success, 1 validation error, 2 budget exhaustion.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use starball_cli::{batch, run, write_record, ExperimentConfig, HarnessError, RunRecord};

#[derive(Parser)]
#[command(name = "starball", version, about = "small-ball probability experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory for the JSON record and CSV headline.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every *.json config in a directory (sorted); failures do not
    /// abort the rest.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(samples) = overrides.samples {
        config.samples = samples;
    }
    if let Some(out) = &overrides.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn print_headline(record: &RunRecord) {
    println!("experiment : {}", record.experiment);
    println!("seed       : {}", record.seed);
    for (key, value) in &record.headline {
        println!("{key:<22} {value}");
    }
    println!("wall time  : {} ms", record.wall_time_ms);
}

fn persist(record: &RunRecord, stem: &str) {
    if let Some(dir) = record.config.out.clone() {
        match write_record(record, &dir, stem) {
            Ok((json_path, csv_path)) => {
                println!("record     : {}", json_path.display());
                println!("csv        : {}", csv_path.display());
            }
            Err(e) => eprintln!("warning: could not write record: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let stem = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            let cfg = match load_config(&config, &overrides) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            match run(&cfg) {
                Ok(record) => {
                    print_headline(&record);
                    persist(&record, &stem);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Batch { dir, overrides } => {
            let mut paths: Vec<PathBuf> = match std::fs::read_dir(&dir) {
                Ok(entries) => entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e == "json"))
                    .collect(),
                Err(e) => {
                    eprintln!("validation error: cannot read {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            };
            paths.sort();
            if paths.is_empty() {
                eprintln!("validation error: no *.json configs in {}", dir.display());
                return ExitCode::from(1);
            }
            let mut configs = Vec::new();
            let mut worst = 0i32;
            for path in &paths {
                match load_config(path, &overrides) {
                    Ok(c) => configs.push((path.clone(), c)),
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        worst = worst.max(e.exit_code());
                    }
                }
            }
            let results = batch(&configs.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>());
            for ((path, _), result) in configs.iter().zip(results) {
                println!("── {}", path.display());
                match result {
                    Ok(record) => {
                        print_headline(&record);
                        let stem = path
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_else(|| "run".into());
                        persist(&record, &stem);
                    }
                    Err(e) => {
                        eprintln!("{e}");
                        worst = worst.max(e.exit_code());
                    }
                }
            }
            ExitCode::from(worst as u8)
        }
    }
}
