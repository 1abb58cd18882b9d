use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polarity::config::ExperimentConfig;
use polarity::corpus::{load_tsv, Split};
use polarity::error::{Error, Result};
use polarity::experiment::{
    grid_search, predict_file, run_ablation, run_experiment, write_augmented, write_preprocessed, Ablation, Grid,
    Resources, TrainedSystem,
};

#[derive(Parser)]
#[command(name = "polarity", version, about = "Tweet polarity classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the fully preprocessed splits.
    Preprocess(Common),
    /// Write the augmented training corpus.
    Augment(Common),
    /// Train, evaluate on dev/test and persist the model.
    Train(Common),
    /// Score a persisted model on a labeled TSV file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Directory for report.txt and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the component removals on the dev split.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset, e.g. `no-bow,no-bagging`.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// Exhaustive hyperparameter search on the dev split.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: PathBuf,
    },
    /// Label a TSV file with a persisted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config).map_err(|e| e.in_stage("config"))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e).in_stage("persist"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(common) => {
            for path in write_preprocessed(&load_config(&common)?, &common.out)? {
                println!("{}", path.display());
            }
        }
        Command::Augment(common) => {
            let training = write_augmented(&load_config(&common)?, &common.out)?;
            println!("{} training instances", training.dataset.len());
        }
        Command::Train(common) => {
            let outcome = run_experiment(&load_config(&common)?, Some(&common.out))?;
            println!("{} training instances, layout {}", outcome.train_size, outcome.layout);
            if let Some(dev) = &outcome.dev {
                println!("dev\n{dev}");
            }
            if let Some(test) = &outcome.test {
                println!("test\n{test}");
            }
        }
        Command::Eval { model, input, out } => {
            let system = TrainedSystem::load(&model, &Resources::new()).map_err(|e| e.in_stage("load"))?;
            let dataset = load_tsv(&input, "input", Split::Test).map_err(|e| e.in_stage("load"))?;
            let (evaluation, _) = system.evaluate(&dataset).map_err(|e| e.in_stage("evaluate"))?;
            print!("{evaluation}");
            if let Some(out) = out {
                fs::create_dir_all(&out).map_err(|e| Error::io(&out, e).in_stage("persist"))?;
                write(&out.join("report.txt"), &evaluation.to_text())?;
                write(&out.join("report.json"), &evaluation.to_json())?;
            }
        }
        Command::Ablate { common, only } => {
            let spec = match only {
                None => Ablation::ALL.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|n| {
                        serde_json::from_value(serde_json::Value::String(n.to_lowercase()))
                            .map_err(|_| Error::Config(format!("unknown ablation {n:?}")).in_stage("config"))
                    })
                    .collect::<Result<_>>()?,
            };
            let table = run_ablation(&load_config(&common)?, &spec, Some(&common.out))?;
            print!("{}", table.to_text());
        }
        Command::Grid { common, grid } => {
            let grid: Grid = fs::read_to_string(&grid)
                .map_err(|e| Error::io(&grid, e))
                .and_then(|s| Ok(serde_json::from_str(&s)?))
                .map_err(|e| e.in_stage("config"))?;
            let result = grid_search(&load_config(&common)?, &grid, Some(&common.out))?;
            print!("{}", result.to_tsv());
            let best = result.best();
            let params: Vec<String> = best.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "best: {} (macro-F1 {:.2}, accuracy {:.2})",
                params.join(" "),
                best.macro_f1,
                best.accuracy
            );
        }
        Command::Predict { model, input, output } => {
            let tsv = predict_file(&model, &input)?;
            match output {
                Some(path) => write(&path, &tsv)?,
                None => print!("{tsv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
