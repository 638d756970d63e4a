use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use distress::explain::{write_explanations_csv, ExplainOptions};
use distress::models::ModelArtifact;
use distress::pipeline::{self, PipelineConfig, RunOptions};
use distress::{ingest, Error, Result};

#[derive(Parser)]
#[command(
    name = "distress",
    version,
    about = "Imbalance-aware financial distress prediction"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML or JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config and DISTRESS_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Input CSV; overrides data.input.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    no_smote: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: reports, metrics, artifacts and figures.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; overrides output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drop wall-clock timings from report.json.
        #[arg(long)]
        normalize_report: bool,
    },
    /// Dataset statistics as JSON.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "Bankrupt?")]
        label_column: String,
    },
    /// Train one configured model and save its artifact.
    Train {
        #[command(flatten)]
        common: Common,
        /// Model name from the configuration (default: the first).
        #[arg(long)]
        model: Option<String>,
        /// Artifact path, or a directory to hold model_<name>.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on a labelled CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SHAP values of a saved model for rows of a CSV.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated row indices (default: all rows).
        #[arg(long, value_delimiter = ',')]
        rows: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        n_permutations: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Holdout comparison table as CSV.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(c: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::from_path(p).map_err(|e| e.at_stage("config"))?,
        None => PipelineConfig::default(),
    };
    if c.seed.is_some() {
        cfg.master_seed = c.seed;
    }
    if let Some(i) = &c.input {
        cfg.data.input = Some(i.clone());
    }
    if let Some(l) = &c.label_column {
        cfg.data.label_column = l.clone();
    }
    if let Some(t) = c.threshold {
        cfg.evaluate.threshold = t;
    }
    if c.no_smote {
        cfg.smote.enabled = false;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            common,
            out,
            normalize_report,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let report = pipeline::run_pipeline(&cfg, &RunOptions { normalize_report })?;
            eprintln!(
                "best model: {} (outputs in {})",
                report.best_model,
                report.config.output_dir.display()
            );
        }
        Command::Summarize {
            input,
            label_column,
        } => {
            let ds = ingest::load_csv(&input, &label_column).map_err(|e| e.at_stage("ingest"))?;
            let s = ingest::summarize(&ds).map_err(|e| e.at_stage("summarize"))?;
            emit(None, &(serde_json::to_string_pretty(&s)? + "\n"))?;
        }
        Command::Train { common, model, out } => {
            let cfg = load_config(&common)?;
            let artifact = pipeline::train_single(&cfg, model.as_deref())?;
            let path = if out.is_dir() {
                out.join(format!("model_{}.json", artifact.spec.name))
            } else {
                out
            };
            artifact.save(&path).map_err(|e| e.at_stage("write"))?;
            eprintln!("saved {}", path.display());
        }
        Command::Evaluate {
            model,
            input,
            threshold,
            out,
        } => {
            let artifact = ModelArtifact::load(&model).map_err(|e| e.at_stage("load"))?;
            let ds = ingest::load_csv(&input, &artifact.label_column)
                .map_err(|e| e.at_stage("ingest"))?;
            let report = pipeline::evaluate_artifact(
                &artifact,
                &ds,
                threshold.unwrap_or(distress::evaluate::DEFAULT_THRESHOLD),
            )?;
            emit(
                out.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
        }
        Command::Explain {
            model,
            input,
            rows,
            n_permutations,
            seed,
            out,
        } => {
            let artifact = ModelArtifact::load(&model).map_err(|e| e.at_stage("load"))?;
            let ds = ingest::load_csv(&input, &artifact.label_column)
                .map_err(|e| e.at_stage("ingest"))?;
            let ids: Vec<usize> = if rows.is_empty() {
                (0..ds.n_rows()).collect()
            } else {
                rows
            };
            if let Some(&bad) = ids.iter().find(|&&i| i >= ds.n_rows()) {
                return Err(Error::Config(format!(
                    "row {bad} out of range ({} rows)",
                    ds.n_rows()
                ))
                .at_stage("explain"));
            }
            let subset = ds.subset(&ids);
            let opts = ExplainOptions {
                n_permutations,
                seed: seed.unwrap_or(artifact.seed),
                ..ExplainOptions::default()
            };
            let (expl, _) = pipeline::explain_artifact(&artifact, &subset, &opts)?;
            let mut buf = Vec::new();
            write_explanations_csv(&mut buf, &ids, &expl, &artifact.feature_names)?;
            emit(out.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
        Command::Compare { common, out } => {
            let cfg = load_config(&common)?;
            let table = pipeline::compare(&cfg)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            emit(out.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Error::Config(e.to_string())),
        },
        None => execute(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
