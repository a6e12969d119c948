use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use subgroups::data::undersample;
use subgroups::ingest::write_csv;
use subgroups::kproto::{self, centroid_table, ClusterModel};
use subgroups::mvtest::pairwise_matrix;
use subgroups::pipeline::{
    prepare, run_pipeline, significance_markdown, write_centroids_csv, write_comparison_csv,
    write_hotelling_csv, write_trace_csv, ComparisonEntry, Format, PipelineError, RunConfig,
};
use subgroups::seeding::derive_seed;
use subgroups::selection::{select_k, SelectionError};
use subgroups::supervised::crossval::crossval;
use subgroups::supervised::logistic::per_cluster_significance;
use subgroups::synth::{gen_synthetic, SyntheticSpec};

/// Subgroup discovery and risk-model benchmarking for mixed-type tabular
/// data, driven by a JSON run configuration.
#[derive(Parser)]
#[command(name = "subgroups", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a run configuration without doing any work.
    Validate { config: PathBuf },
    /// Scan cluster counts and emit the selection index trace.
    SelectK { config: PathBuf },
    /// Fit the clustering at the fixed or selected k; saves model.json.
    Cluster { config: PathBuf },
    /// Pairwise cluster-distinctness tests from a saved model.
    Test { config: PathBuf },
    /// Per-cluster regression significance star table.
    Explain { config: PathBuf },
    /// Classifier accuracy/AUC comparison under repeated splits.
    Compare { config: PathBuf },
    /// Run every stage and write the full report bundle.
    Pipeline { config: PathBuf },
    /// Generate a synthetic dataset CSV (plus a true-label sidecar).
    Synth { spec: PathBuf, out: PathBuf },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn validation(message: impl ToString) -> Self {
        CliError {
            code: 1,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => CliError::validation(e),
            other => CliError::runtime(other),
        }
    }
}

impl From<kproto::ClusterError> for CliError {
    fn from(e: kproto::ClusterError) -> Self {
        match e {
            // config/data mismatches are validation failures
            kproto::ClusterError::KTooLarge { .. } | kproto::ClusterError::BadParams(_) => {
                CliError::validation(e)
            }
            other => CliError::runtime(other),
        }
    }
}

impl From<SelectionError> for CliError {
    fn from(e: SelectionError) -> Self {
        match e {
            SelectionError::BadParams(_) | SelectionError::InsufficientRows { .. } => {
                CliError::validation(e)
            }
            SelectionError::Cluster(c) => c.into(),
            other => CliError::runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e)
    }
}

fn emit(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
}

/// Chooses k per the config: fixed_k short-circuits the selection scan.
fn resolve_k(cfg: &RunConfig, normalized: &subgroups::Dataset) -> Result<usize, CliError> {
    match cfg.clustering.fixed_k {
        Some(k) => Ok(k),
        None => {
            let (k, _) = select_k(normalized, &cfg.selection_params(), &cfg.kproto_params())?;
            Ok(k)
        }
    }
}

fn load_model(cfg: &RunConfig) -> Result<ClusterModel, CliError> {
    let path = cfg.output_dir.join("model.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::runtime(format!("invalid model.json: {e}")))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { config } => {
            let cfg = RunConfig::from_path(&config)?;
            emit(json!({"status": "ok", "output_dir": cfg.output_dir}));
        }
        Command::SelectK { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let prepared = prepare(&cfg)?;
            let (chosen_k, trace) =
                select_k(&prepared.normalized, &cfg.selection_params(), &cfg.kproto_params())?;
            if cfg.formats.contains(&Format::Csv) {
                write_trace_csv(&trace, &cfg.output_dir.join("trace.csv"))?;
            }
            emit(json!({"chosen_k": chosen_k, "trace": trace}));
        }
        Command::Cluster { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let prepared = prepare(&cfg)?;
            let k = resolve_k(&cfg, &prepared.normalized)?;
            let model = kproto::fit(&prepared.normalized, k, &cfg.kproto_params())?;
            let centroids =
                centroid_table(&prepared.raw, &model).map_err(CliError::from)?;
            let mut model_json = serde_json::to_string_pretty(&model)
                .map_err(CliError::runtime)?;
            model_json.push('\n');
            fs::write(cfg.output_dir.join("model.json"), model_json)?;
            if cfg.formats.contains(&Format::Csv) {
                write_centroids_csv(&centroids, &cfg.output_dir.join("centroids.csv"))?;
            }
            emit(json!({
                "k": model.k,
                "total_cost": model.total_cost,
                "gamma_used": model.gamma_used,
                "converged": model.converged,
                "centroids": centroids,
            }));
        }
        Command::Test { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let prepared = prepare(&cfg)?;
            let model = load_model(&cfg)?;
            let assignment = kproto::assign(&prepared.normalized, &model)?;
            let matrix = pairwise_matrix(&prepared.normalized, &assignment);
            if cfg.formats.contains(&Format::Csv) {
                write_hotelling_csv(&matrix, &cfg.output_dir.join("hotelling.csv"))?;
            }
            emit(serde_json::to_value(&matrix).map_err(CliError::runtime)?);
        }
        Command::Explain { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let prepared = prepare(&cfg)?;
            let assignment = if cfg.output_dir.join("model.json").exists() {
                kproto::assign(&prepared.normalized, &load_model(&cfg)?)?
            } else {
                let k = resolve_k(&cfg, &prepared.normalized)?;
                kproto::fit(&prepared.normalized, k, &cfg.kproto_params())?.assignment
            };
            let table = per_cluster_significance(
                &prepared.normalized,
                &assignment,
                &prepared.profile.reference_levels,
            )
            .map_err(CliError::runtime)?;
            if cfg.formats.contains(&Format::Markdown) {
                fs::write(
                    cfg.output_dir.join("significance.md"),
                    significance_markdown(&table),
                )?;
            }
            emit(serde_json::to_value(&table).map_err(CliError::runtime)?);
        }
        Command::Compare { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let prepared = prepare(&cfg)?;
            let (balanced, _) =
                undersample(&prepared.normalized, derive_seed(cfg.seed, 3, 0))
                    .map_err(CliError::runtime)?;
            let mut entries = Vec::new();
            for spec in cfg.comparison_specs() {
                let result = crossval(
                    &balanced,
                    &spec,
                    5,
                    derive_seed(cfg.seed, 4, 0),
                    &prepared.profile.reference_levels,
                )
                .map_err(CliError::runtime)?;
                entries.push(ComparisonEntry {
                    classifier: spec.kind.label().to_string(),
                    result,
                });
            }
            if cfg.formats.contains(&Format::Csv) {
                write_comparison_csv(&entries, &cfg.output_dir.join("comparison.csv"))?;
            }
            emit(serde_json::to_value(&entries).map_err(CliError::runtime)?);
        }
        Command::Pipeline { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let bundle = run_pipeline(&cfg)?;
            emit(json!({
                "status": "ok",
                "chosen_k": bundle.chosen_k,
                "output_dir": cfg.output_dir,
            }));
        }
        Command::Synth { spec, out } => {
            let text = fs::read_to_string(&spec)
                .map_err(|e| CliError::validation(format!("{}: {e}", spec.display())))?;
            let spec: SyntheticSpec =
                serde_json::from_str(&text).map_err(CliError::validation)?;
            let data = gen_synthetic(&spec).map_err(CliError::validation)?;
            write_csv(&data.dataset, &out).map_err(CliError::runtime)?;
            let labels_path = out.with_extension("labels.csv");
            let mut w = csv::Writer::from_path(&labels_path)
                .map_err(CliError::runtime)?;
            w.write_record(["true_label"]).map_err(CliError::runtime)?;
            for label in &data.true_labels {
                w.write_record([label.to_string()])
                    .map_err(CliError::runtime)?;
            }
            w.flush()?;
            emit(json!({
                "rows": data.dataset.n_rows,
                "csv": out,
                "labels": labels_path,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                eprintln!("{}", json!({"kind": "validation", "error": e.to_string()}));
                return ExitCode::from(1);
            }
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = if err.code == 1 { "validation" } else { "runtime" };
            eprintln!("{}", json!({"kind": kind, "error": err.message}));
            ExitCode::from(err.code)
        }
    }
}
