//! End-to-end orchestration: JSON run configuration, staged execution
//! (load → normalize → select k → cluster → pairwise tests → per-cluster
//! regression → optional classifier comparison), and report writers.
//!
//! JSON is the canonical output; CSV and markdown files are projections of
//! the same bundle. Timestamps appear only in the provenance block.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{normalize_numeric, undersample, Dataset, PreprocessReport};
use crate::ingest::{builtin_profile, load_csv, profile_from_json, SchemaProfile};
use crate::kproto::{self, centroid_table, CentroidTable, ClusterModel, Gamma, KProtoParams};
use crate::mvtest::{pairwise_matrix, PairOutcome, PairwiseMatrix};
use crate::seeding::derive_seed;
use crate::selection::{select_k, IndexTrace, SelectionParams};
use crate::supervised::crossval::{crossval, ClassifierKind, ClassifierSpec, EvalResult};
use crate::supervised::logistic::{per_cluster_significance, SignificanceTable};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("stage '{stage}' failed (completed: {completed:?}): {message}")]
    Stage {
        stage: &'static str,
        completed: Vec<String>,
        message: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv write error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv, Format::Markdown]
}

/// Either a built-in profile name or an inline profile definition in the
/// same JSON shape as a profile file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileRef {
    Name(String),
    Inline(serde_json::Value),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub csv_path: PathBuf,
    pub profile: ProfileRef,
    /// Overrides the profile's reference levels for one-hot encoding.
    #[serde(default)]
    pub reference_levels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub sample_size: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_k_min() -> usize {
    2
}

fn default_k_max() -> usize {
    10
}

fn default_n_samples() -> usize {
    7
}

fn default_epsilon() -> f64 {
    1e-3
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k_min: default_k_min(),
            k_max: default_k_max(),
            n_samples: default_n_samples(),
            sample_size: None,
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    #[serde(default)]
    pub gamma: Gamma,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restarts")]
    pub n_restarts: usize,
    /// Skips selection and clusters at exactly this k.
    #[serde(default)]
    pub fixed_k: Option<usize>,
}

fn default_max_iter() -> usize {
    100
}

fn default_restarts() -> usize {
    10
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            gamma: Gamma::AUTO,
            max_iter: default_max_iter(),
            n_restarts: default_restarts(),
            fixed_k: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Defaults to LR, RF, SVM, LDA when enabled and left empty.
    #[serde(default)]
    pub specs: Vec<ClassifierSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub comparison: ComparisonConfig,
    pub output_dir: PathBuf,
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl std::str::FromStr for RunConfig {
    type Err = PipelineError;

    fn from_str(text: &str) -> Result<Self, PipelineError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            PipelineError::Config(format!("{}: {e}", path.as_ref().display()))
        })?;
        text.parse()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if let Some(k) = self.clustering.fixed_k {
            if k < 2 {
                return Err(PipelineError::Config(format!(
                    "fixed_k must be >= 2, got {k}"
                )));
            }
        }
        if self.formats.is_empty() {
            return Err(PipelineError::Config("formats must not be empty".into()));
        }
        self.resolve_profile()?;
        fs::create_dir_all(&self.output_dir).map_err(|e| {
            PipelineError::Config(format!(
                "output_dir {} not writable: {e}",
                self.output_dir.display()
            ))
        })?;
        Ok(())
    }

    pub fn resolve_profile(&self) -> Result<SchemaProfile, PipelineError> {
        let mut profile = match &self.data.profile {
            ProfileRef::Name(name) => {
                builtin_profile(name).map_err(|e| PipelineError::Config(e.to_string()))?
            }
            ProfileRef::Inline(value) => profile_from_json(&value.to_string())
                .map_err(|e| PipelineError::Config(e.to_string()))?,
        };
        for (column, level) in &self.data.reference_levels {
            profile
                .reference_levels
                .insert(column.clone(), level.clone());
        }
        Ok(profile)
    }

    pub fn selection_params(&self) -> SelectionParams {
        SelectionParams {
            k_min: self.selection.k_min,
            k_max: self.selection.k_max,
            n_samples: self.selection.n_samples,
            sample_size: self.selection.sample_size,
            epsilon: self.selection.epsilon,
            seed: derive_seed(self.seed, 1, 0),
        }
    }

    pub fn kproto_params(&self) -> KProtoParams {
        KProtoParams {
            gamma: self.clustering.gamma,
            max_iter: self.clustering.max_iter,
            n_restarts: self.clustering.n_restarts,
            seed: derive_seed(self.seed, 2, 0),
        }
    }

    pub fn comparison_specs(&self) -> Vec<ClassifierSpec> {
        let mut specs = if self.comparison.specs.is_empty() {
            [
                ClassifierKind::Lr,
                ClassifierKind::Rf,
                ClassifierKind::Svm,
                ClassifierKind::Lda,
            ]
            .into_iter()
            .map(ClassifierSpec::new)
            .collect()
        } else {
            self.comparison.specs.clone()
        };
        for (i, spec) in specs.iter_mut().enumerate() {
            spec.seed = derive_seed(self.seed, 5, i as u64);
        }
        specs
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub classifier: String,
    pub result: EvalResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub started_at_unix: f64,
    pub finished_at_unix: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub preprocess: PreprocessReport,
    /// Absent when fixed_k skipped selection.
    pub trace: Option<IndexTrace>,
    pub chosen_k: usize,
    pub model: ClusterModel,
    pub centroids: CentroidTable,
    pub hotelling: PairwiseMatrix,
    pub significance: SignificanceTable,
    pub comparison: Option<Vec<ComparisonEntry>>,
    pub provenance: Provenance,
}

/// Cleaned raw data plus its normalized counterpart, as run by the stages.
pub struct PreparedData {
    pub raw: Dataset,
    pub normalized: Dataset,
    pub profile: SchemaProfile,
    pub preprocess: PreprocessReport,
}

fn stage_err(
    stage: &'static str,
    completed: &[&'static str],
    e: impl std::fmt::Display,
) -> PipelineError {
    PipelineError::Stage {
        stage,
        completed: completed.iter().map(|s| s.to_string()).collect(),
        message: e.to_string(),
    }
}

pub fn prepare(config: &RunConfig) -> Result<PreparedData, PipelineError> {
    let mut completed: Vec<&'static str> = Vec::new();
    let profile = config.resolve_profile()?;
    let (raw, mut preprocess) = load_csv(&config.data.csv_path, &profile)
        .map_err(|e| stage_err("load", &completed, e))?;
    completed.push("load");
    let normalized =
        normalize_numeric(&raw).map_err(|e| stage_err("normalize", &completed, e))?;
    preprocess.normalization_divisors = normalized.divisors.clone();
    preprocess.zero_columns = normalized.zero_columns.clone();
    Ok(PreparedData {
        raw,
        normalized: normalized.dataset,
        profile,
        preprocess,
    })
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Runs every stage in order and writes the requested output files.
pub fn run_pipeline(config: &RunConfig) -> Result<ReportBundle, PipelineError> {
    config.validate()?;
    let started_at_unix = now_unix();
    let mut completed: Vec<&'static str> = vec![];

    let mut prepared = prepare(config)?;
    completed.push("load");
    completed.push("normalize");

    let kp = config.kproto_params();
    let (chosen_k, trace) = match config.clustering.fixed_k {
        Some(k) => (k, None),
        None => {
            let (k, trace) = select_k(&prepared.normalized, &config.selection_params(), &kp)
                .map_err(|e| stage_err("select_k", &completed, e))?;
            completed.push("select_k");
            (k, Some(trace))
        }
    };

    let model = kproto::fit(&prepared.normalized, chosen_k, &kp)
        .map_err(|e| stage_err("fit", &completed, e))?;
    completed.push("fit");

    let centroids = centroid_table(&prepared.raw, &model)
        .map_err(|e| stage_err("centroid_table", &completed, e))?;
    completed.push("centroid_table");

    let hotelling = pairwise_matrix(&prepared.normalized, &model.assignment);
    completed.push("pairwise_matrix");

    let significance = per_cluster_significance(
        &prepared.normalized,
        &model.assignment,
        &prepared.profile.reference_levels,
    )
    .map_err(|e| stage_err("per_cluster_significance", &completed, e))?;
    completed.push("per_cluster_significance");

    let comparison = if config.comparison.enabled {
        let (balanced, removed) = undersample(&prepared.normalized, derive_seed(config.seed, 3, 0))
            .map_err(|e| stage_err("undersample", &completed, e))?;
        prepared.preprocess.rows_removed_undersampling = removed;
        prepared.preprocess.final_class_counts = balanced.class_counts();
        completed.push("undersample");
        let mut entries = Vec::new();
        for spec in config.comparison_specs() {
            let result = crossval(
                &balanced,
                &spec,
                5,
                derive_seed(config.seed, 4, 0),
                &prepared.profile.reference_levels,
            )
            .map_err(|e| stage_err("crossval", &completed, e))?;
            entries.push(ComparisonEntry {
                classifier: spec.kind.label().to_string(),
                result,
            });
        }
        completed.push("crossval");
        Some(entries)
    } else {
        None
    };

    let bundle = ReportBundle {
        preprocess: prepared.preprocess,
        trace,
        chosen_k,
        model,
        centroids,
        hotelling,
        significance,
        comparison,
        provenance: Provenance {
            config: serde_json::to_value(config)?,
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at_unix,
            finished_at_unix: now_unix(),
        },
    };
    write_outputs(&bundle, config)?;
    Ok(bundle)
}

pub fn write_outputs(bundle: &ReportBundle, config: &RunConfig) -> Result<(), PipelineError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    if config.formats.contains(&Format::Json) {
        let mut text = serde_json::to_string_pretty(bundle)?;
        text.push('\n');
        fs::write(dir.join("report.json"), text)?;
    }
    if config.formats.contains(&Format::Csv) {
        if let Some(trace) = &bundle.trace {
            write_trace_csv(trace, &dir.join("trace.csv"))?;
        }
        write_centroids_csv(&bundle.centroids, &dir.join("centroids.csv"))?;
        write_hotelling_csv(&bundle.hotelling, &dir.join("hotelling.csv"))?;
        if let Some(comparison) = &bundle.comparison {
            write_comparison_csv(comparison, &dir.join("comparison.csv"))?;
        }
    }
    if config.formats.contains(&Format::Markdown) {
        fs::write(
            dir.join("significance.md"),
            significance_markdown(&bundle.significance),
        )?;
    }
    Ok(())
}

pub fn write_trace_csv(trace: &IndexTrace, path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path)?;
    let n_samples = trace.entries.first().map_or(0, |e| e.samples.len());
    let mut header = vec!["k".to_string(), "median".to_string(), "delta".to_string()];
    header.extend((0..n_samples).map(|s| format!("sample_{s}")));
    w.write_record(&header)?;
    for e in &trace.entries {
        let mut record = vec![
            e.k.to_string(),
            format!("{}", e.median),
            e.delta.map_or(String::new(), |d| format!("{d}")),
        ];
        record.extend(e.samples.iter().map(|s| format!("{s}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_centroids_csv(table: &CentroidTable, path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["cluster".to_string()];
    header.extend(table.headers.iter().cloned());
    w.write_record(&header)?;
    for (c, row) in table.rows.iter().enumerate() {
        let mut record = vec![c.to_string()];
        record.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_hotelling_csv(matrix: &PairwiseMatrix, path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "cluster_i",
        "cluster_j",
        "n_i",
        "n_j",
        "t2",
        "f_stat",
        "df1",
        "df2",
        "p_value",
        "reject_at_90",
        "note",
    ])?;
    for cell in &matrix.cells {
        let base = [
            cell.cluster_i.to_string(),
            cell.cluster_j.to_string(),
            cell.n_i.to_string(),
            cell.n_j.to_string(),
        ];
        let rest = match &cell.outcome {
            PairOutcome::Tested(r) => [
                format!("{}", r.t2),
                format!("{}", r.f_stat),
                r.df1.to_string(),
                r.df2.to_string(),
                format!("{}", r.p_value),
                r.reject_at_90.to_string(),
                if r.dropped_features.is_empty() {
                    String::new()
                } else {
                    format!("dropped: {}", r.dropped_features.join(" "))
                },
            ],
            PairOutcome::Untestable { reason } => [
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("untestable: {reason}"),
            ],
        };
        w.write_record(base.iter().chain(rest.iter()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison_csv(entries: &[ComparisonEntry], path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "classifier",
        "mean_accuracy",
        "mean_auc",
        "n_reps",
        "skipped_reps",
    ])?;
    for e in entries {
        w.write_record([
            e.classifier.clone(),
            format!("{}", e.result.mean_accuracy),
            format!("{}", e.result.mean_auc),
            e.result.n_reps.to_string(),
            e.result.skipped_reps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Clusters x (intercept + features) star table as a markdown document.
pub fn significance_markdown(table: &SignificanceTable) -> String {
    let mut out = String::from("# Per-cluster regression significance\n\n");
    out.push_str("| cluster | n |");
    for name in &table.feature_names {
        out.push_str(&format!(" {name} |"));
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in &table.feature_names {
        out.push_str("---|");
    }
    out.push('\n');
    for (cluster, stars) in table.clusters.iter().zip(table.star_rows()) {
        out.push_str(&format!("| {} | {} |", cluster.cluster, cluster.n_rows));
        for cell in stars {
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out.push_str("\nSignificance: *** p < 0.001, ** p < 0.05, * p < 0.1\n");
    out
}

#[cfg(test)]
mod tests {
    use std::str::FromStr;

    use super::*;
    use crate::ingest::write_csv;
    use crate::synth::{gen_synthetic, SyntheticSpec};

    fn synthetic_csv(dir: &Path) -> PathBuf {
        let spec = SyntheticSpec {
            k_true: 3,
            rows_per_cluster: 60,
            n_numeric: 3,
            n_categorical: 1,
            levels_per_categorical: 3,
            separation: 6.0,
            flip_prob: 0.05,
            seed: 31,
        };
        let data = gen_synthetic(&spec).unwrap();
        let path = dir.join("synth.csv");
        write_csv(&data.dataset, &path).unwrap();
        path
    }

    fn inline_profile() -> ProfileRef {
        ProfileRef::Inline(serde_json::json!({
            "name": "synthetic",
            "columns": [
                {"name": "num0", "kind": "numeric"},
                {"name": "num1", "kind": "numeric"},
                {"name": "num2", "kind": "numeric"},
                {"name": "cat0", "kind": "categorical", "levels": ["l0", "l1", "l2"]},
                {"name": "outcome", "kind": "binary"}
            ],
            "response": "outcome"
        }))
    }

    fn config(dir: &Path, csv: &Path) -> RunConfig {
        RunConfig {
            data: DataConfig {
                csv_path: csv.to_path_buf(),
                profile: inline_profile(),
                reference_levels: BTreeMap::new(),
            },
            selection: SelectionConfig {
                k_max: 5,
                n_samples: 5,
                sample_size: Some(100),
                ..SelectionConfig::default()
            },
            clustering: ClusteringConfig {
                n_restarts: 4,
                ..ClusteringConfig::default()
            },
            comparison: ComparisonConfig {
                enabled: true,
                specs: vec![],
            },
            output_dir: dir.join("out"),
            seed: 99,
            formats: default_formats(),
        }
    }

    #[test]
    fn config_missing_seed_is_rejected_before_work() {
        let err = RunConfig::from_str(
            r#"{"data": {"csv_path": "x.csv", "profile": "florida"}, "output_dir": "/tmp/o"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)), "{err}");
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn fixed_k_below_two_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(tmp.path());
        let mut cfg = config(tmp.path(), &csv);
        cfg.clustering.fixed_k = Some(1);
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let err = RunConfig::from_str(r#"{"seed": 1, "bogus": true}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn synthetic_end_to_end_bundle_shapes() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(tmp.path());
        let cfg = config(tmp.path(), &csv);
        let bundle = run_pipeline(&cfg).unwrap();
        assert_eq!(bundle.chosen_k, 3);
        assert!(bundle.hotelling.all_reject_at_90());
        assert_eq!(bundle.centroids.rows.len(), 3);
        // response + 3 numerics + 3 one-hot category levels
        assert_eq!(bundle.centroids.headers.len(), 7);
        assert_eq!(bundle.significance.clusters.len(), 3);
        // intercept + 3 numerics + 2 indicator columns
        assert_eq!(bundle.significance.feature_names.len(), 6);
        let comparison = bundle.comparison.as_ref().unwrap();
        let labels: Vec<&str> = comparison.iter().map(|e| e.classifier.as_str()).collect();
        assert_eq!(labels, vec!["LR", "RF", "SVM", "LDA"]);
        for name in [
            "report.json",
            "trace.csv",
            "centroids.csv",
            "hotelling.csv",
            "significance.md",
            "comparison.csv",
        ] {
            assert!(cfg.output_dir.join(name).exists(), "{name} missing");
        }
    }

    #[test]
    fn fixed_k_skips_trace() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(tmp.path());
        let mut cfg = config(tmp.path(), &csv);
        cfg.clustering.fixed_k = Some(3);
        cfg.comparison.enabled = false;
        cfg.formats = vec![Format::Json];
        let bundle = run_pipeline(&cfg).unwrap();
        assert!(bundle.trace.is_none());
        assert_eq!(bundle.chosen_k, 3);
        assert!(cfg.output_dir.join("report.json").exists());
        assert!(!cfg.output_dir.join("centroids.csv").exists());
    }

    #[test]
    fn centroid_table_recomputable_from_model_and_raw_data() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(tmp.path());
        let mut cfg = config(tmp.path(), &csv);
        cfg.comparison.enabled = false;
        let bundle = run_pipeline(&cfg).unwrap();
        let prepared = prepare(&cfg).unwrap();
        let recomputed = centroid_table(&prepared.raw, &bundle.model).unwrap();
        assert_eq!(recomputed.headers, bundle.centroids.headers);
        for (a, b) in recomputed.rows.iter().flatten().zip(bundle.centroids.rows.iter().flatten())
        {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stage_failure_reports_completed_stages() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(tmp.path());
        let mut cfg = config(tmp.path(), &csv);
        cfg.clustering.fixed_k = Some(5000); // > n_rows
        let err = run_pipeline(&cfg).unwrap_err();
        match err {
            PipelineError::Stage {
                stage, completed, ..
            } => {
                assert_eq!(stage, "fit");
                assert!(completed.contains(&"normalize".to_string()));
            }
            other => panic!("expected stage error, got {other}"),
        }
    }

    #[test]
    fn markdown_stars_render_legend_strings() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(tmp.path());
        let mut cfg = config(tmp.path(), &csv);
        cfg.comparison.enabled = false;
        let bundle = run_pipeline(&cfg).unwrap();
        let md = significance_markdown(&bundle.significance);
        assert!(md.contains("Significance: *** p < 0.001, ** p < 0.05, * p < 0.1"));
        for row in bundle.significance.star_rows() {
            for cell in row {
                assert!(
                    ["***", "**", "*", "", "n/a"].contains(&cell.as_str()),
                    "bad cell '{cell}'"
                );
            }
        }
    }
}
