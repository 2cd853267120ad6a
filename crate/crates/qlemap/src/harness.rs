//! File-based experiment pipeline. Each stage reads its predecessor's
//! artifacts from a per-seed directory and writes its own, so experiments are
//! resumable stage by stage and reruns with the same config are
//! byte-identical. A sweep runs the whole pipeline over a parameter grid and
//! condenses the results into plot-ready CSV tables.
//!
//! Per-seed directory layout under the configured output directory:
//!
//! ```text
//! s<seed>/
//!   graph.edges             generated graph ("N M" header + edge lines)
//!   labels.csv              node,label          (binary labels)
//!   communities.csv         node,community
//!   split.json              train/test node partition
//!   decomposition.csv       pauli,coefficient   (after thresholding)
//!   threshold.json          kept/dropped counts and retained mass
//!   manifest.json           embedding inputs and trained parameters
//!   embedding.csv           node,y0,...,row_norm
//!   predictions.csv         node,label,p1,predicted
//!   metrics.json            train_loss, test_accuracy, restarts_used
//!   baseline_embedding.csv  classical eigenmap, same schema as embedding.csv
//!   baseline_metrics.json   classical train/test accuracy
//!   quantum_scatter.csv     node,community,x,y  (written by embedviz)
//!   classical_scatter.csv   node,community,x,y
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::EmbeddingAnsatzSpec;
use crate::baseline::{classical_eigenmap, logistic_predict, logistic_train};
use crate::classify::{
    accuracy_of_predictions, conditional_probabilities, train_classifier, write_metrics_json,
    write_predictions_csv, ClassifierMetrics,
};
use crate::embed::{
    embedded_state, select_lambda, train_embedding, EmbeddingProblem, EmbeddingResult, EvalMode,
    LambdaOutcome, LambdaSelection,
};
use crate::graph::{read_communities, read_labels, DataSplit, Graph};
use crate::pauli::{decompose, PauliDecomposition, ThresholdReport};
use crate::qsim::Statevector;
use crate::{Error, Result};

pub const GRAPH_FILE: &str = "graph.edges";
pub const LABELS_FILE: &str = "labels.csv";
pub const COMMUNITIES_FILE: &str = "communities.csv";
pub const SPLIT_FILE: &str = "split.json";
pub const DECOMPOSITION_FILE: &str = "decomposition.csv";
pub const THRESHOLD_FILE: &str = "threshold.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const BASELINE_EMBEDDING_FILE: &str = "baseline_embedding.csv";
pub const BASELINE_METRICS_FILE: &str = "baseline_metrics.json";
pub const QUANTUM_SCATTER_FILE: &str = "quantum_scatter.csv";
pub const CLASSICAL_SCATTER_FILE: &str = "classical_scatter.csv";

const BASELINE_EPOCHS: usize = 5000;
const BASELINE_LEARNING_RATE: f64 = 0.1;

/// Quantum-embedding columns whose normalized overlap with the all-ones
/// direction exceeds this are treated as constant and skipped for plotting.
const CONSTANT_COLUMN_OVERLAP: f64 = 0.95;

/// Derives the stage-specific RNG seed from an experiment seed, so stages
/// draw from independent streams (FNV-1a over the stage name, folded into
/// the seed).
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x0100_0000_01b3);
    for byte in stage.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Penalty weight: either a fixed value or the automatic selection
/// heuristic. Serializes as a bare number or the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LambdaRepr", into = "LambdaRepr")]
pub enum LambdaSpec {
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LambdaRepr {
    Number(f64),
    Keyword(String),
}

impl TryFrom<LambdaRepr> for LambdaSpec {
    type Error = String;

    fn try_from(repr: LambdaRepr) -> std::result::Result<Self, String> {
        match repr {
            LambdaRepr::Number(value) => Ok(LambdaSpec::Fixed(value)),
            LambdaRepr::Keyword(word) if word == "auto" => Ok(LambdaSpec::Auto),
            LambdaRepr::Keyword(word) => {
                Err(format!("lambda must be a number or \"auto\", got \"{word}\""))
            }
        }
    }
}

impl From<LambdaSpec> for LambdaRepr {
    fn from(spec: LambdaSpec) -> LambdaRepr {
        match spec {
            LambdaSpec::Auto => LambdaRepr::Keyword("auto".into()),
            LambdaSpec::Fixed(value) => LambdaRepr::Number(value),
        }
    }
}

fn default_communities() -> usize {
    2
}
fn default_seeds() -> Vec<u64> {
    (0..9).collect()
}
fn default_d() -> usize {
    4
}
fn default_k() -> usize {
    1
}
fn default_lambda() -> LambdaSpec {
    LambdaSpec::Fixed(100.0)
}
fn default_threshold() -> f64 {
    0.1
}
fn default_restarts() -> usize {
    5
}
fn default_max_iter() -> usize {
    2000
}
fn default_test_fraction() -> f64 {
    0.25
}

/// One experiment: a graph family (one graph per seed) and the pipeline
/// settings applied to each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    #[serde(default = "default_communities")]
    pub n_communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Embedding dimension (2 or 4).
    #[serde(default = "default_d")]
    pub d: usize,
    /// Entangling-layer repetitions in the embedding ansatz.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_lambda")]
    pub lambda: LambdaSpec,
    /// Coefficient threshold applied to the decomposition.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub mode: EvalMode,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_nodes < 2 {
            return fail(format!("n_nodes must be at least 2, got {}", self.n_nodes));
        }
        for (name, value) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        if self.seeds.is_empty() {
            return fail("seeds must be nonempty".into());
        }
        let distinct: std::collections::BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return fail("seeds must be distinct".into());
        }
        if !matches!(self.d, 2 | 4) {
            return fail(format!("d must be 2 or 4, got {}", self.d));
        }
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return fail(format!("threshold must be finite and >= 0, got {}", self.threshold));
        }
        if let LambdaSpec::Fixed(value) = self.lambda {
            if !(value >= 0.0) || !value.is_finite() {
                return fail(format!("lambda must be finite and >= 0, got {value}"));
            }
        }
        if let EvalMode::Shots { count, .. } = self.mode {
            if count == 0 {
                return Err(Error::ZeroShots);
            }
        }
        if self.restarts == 0 {
            return fail("restarts must be at least 1".into());
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            ));
        }
        Ok(())
    }

    /// Directory holding the artifacts of one seed's run.
    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("s{seed}"))
    }

    fn ancilla_qubits(&self) -> usize {
        self.d.trailing_zeros() as usize
    }
}

/// Everything the embedding stage decided and produced, written as
/// `manifest.json` and consumed by the classification stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub graph_file: String,
    pub threshold: f64,
    pub d: usize,
    pub k: usize,
    /// Penalty weight actually used (the selection result under "auto").
    pub lambda: f64,
    pub lambda_requested: LambdaSpec,
    pub mode: EvalMode,
    pub graph_seed: u64,
    pub embed_seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub theta_opt: Vec<f64>,
    pub final_cost: f64,
    pub expectation_term: f64,
    pub penalty_term: f64,
    pub best_restart: usize,
    pub cost_trace: Vec<(usize, f64)>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_selection: Option<LambdaSelection>,
}

/// Classical-pipeline counterpart of the classifier metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineMetrics {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

fn require(path: PathBuf, producer: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact {
            path,
            stage: producer,
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(Error::io(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes an embedding matrix as `node,y0,...,y{d-1},row_norm` rows.
pub fn write_embedding_csv(path: impl AsRef<Path>, y: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("node");
    for c in 0..y.ncols() {
        text.push_str(&format!(",y{c}"));
    }
    text.push_str(",row_norm\n");
    for (v, row) in y.rows().into_iter().enumerate() {
        text.push_str(&v.to_string());
        for value in row.iter() {
            text.push_str(&format!(",{value}"));
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        text.push_str(&format!(",{norm}\n"));
    }
    std::fs::write(path, text).map_err(Error::io(path))
}

/// Reads an embedding CSV back into its matrix (the row-norm column is
/// derived data and is dropped).
pub fn read_embedding_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Malformed {
        what: "embedding csv",
        line: 1,
        detail: "empty file".into(),
    })?;
    let cols = header.split(',').count().checked_sub(2).filter(|c| *c >= 1).ok_or(
        Error::Malformed {
            what: "embedding csv",
            line: 1,
            detail: format!("unexpected header {header:?}"),
        },
    )?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (idx, line) in lines {
        let malformed = |detail: String| Error::Malformed {
            what: "embedding csv",
            line: idx + 1,
            detail,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols + 2 {
            return Err(malformed(format!("expected {} fields, got {}", cols + 2, fields.len())));
        }
        let node: usize = fields[0].parse().map_err(|e| malformed(format!("bad node: {e}")))?;
        if node != rows {
            return Err(malformed(format!("expected node {rows}, got {node}")));
        }
        for field in &fields[1..=cols] {
            values.push(field.parse::<f64>().map_err(|e| malformed(format!("bad value: {e}")))?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Malformed {
        what: "embedding csv",
        line: rows + 1,
        detail: e.to_string(),
    })
}

/// Generates the seed's graph and writes the graph, label, community, and
/// train/test-split artifacts.
pub fn stage_generate(config: &ExperimentConfig, seed: u64) -> Result<()> {
    config.validate()?;
    let dir = config.seed_dir(seed);
    std::fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    let graph = Graph::sbm(
        config.n_nodes,
        config.n_communities,
        config.p_in,
        config.p_out,
        seed,
    )?;
    graph.write_edge_list(dir.join(GRAPH_FILE))?;
    graph.write_communities(dir.join(COMMUNITIES_FILE))?;
    if !graph.labels().is_empty() {
        graph.write_labels(dir.join(LABELS_FILE))?;
        let split = graph.train_test_split(config.test_fraction, derive_seed(seed, "split"))?;
        write_json(&dir.join(SPLIT_FILE), &split)?;
    }
    Ok(())
}

/// Decomposes the padded graph Laplacian, applies the coefficient threshold,
/// and writes the surviving terms plus the threshold report.
pub fn stage_decompose(config: &ExperimentConfig, seed: u64) -> Result<ThresholdReport> {
    config.validate()?;
    let dir = config.seed_dir(seed);
    let graph = Graph::read_edge_list(require(dir.join(GRAPH_FILE), "generate")?)?;
    let laplacian = graph.pad_to_power_of_two().laplacian();
    let decomposition = decompose(&laplacian)?;
    let (kept, report) = decomposition.apply_threshold(config.threshold)?;
    kept.write_csv(dir.join(DECOMPOSITION_FILE))?;
    write_json(&dir.join(THRESHOLD_FILE), &report)?;
    Ok(report)
}

fn build_problem(
    config: &ExperimentConfig,
    decomposition: &PauliDecomposition,
    lambda: f64,
) -> Result<EmbeddingProblem> {
    EmbeddingProblem::new(
        decomposition.clone(),
        decomposition.n_qubits(),
        config.ancilla_qubits(),
        config.k,
        lambda,
        config.mode,
    )
}

/// Trains the variational embedding on the thresholded decomposition and
/// writes the run manifest plus the embedding matrix. Under `lambda: "auto"`
/// the penalty weight is selected by training trial embeddings and scoring a
/// classifier on the training split only.
pub fn stage_embed(config: &ExperimentConfig, seed: u64) -> Result<RunManifest> {
    config.validate()?;
    let dir = config.seed_dir(seed);
    let decomposition =
        PauliDecomposition::read_csv(require(dir.join(DECOMPOSITION_FILE), "decompose")?)?;
    let embed_seed = derive_seed(seed, "embed");

    let (lambda, result, selection) = match config.lambda {
        LambdaSpec::Fixed(lambda) => {
            let problem = build_problem(config, &decomposition, lambda)?;
            let result = train_embedding(&problem, config.restarts, config.max_iter, embed_seed)?;
            (lambda, result, None)
        }
        LambdaSpec::Auto => {
            let labels = read_labels(require(dir.join(LABELS_FILE), "generate")?)?;
            let split: DataSplit = read_json(&require(dir.join(SPLIT_FILE), "generate")?)?;
            let mut cache: BTreeMap<u64, EmbeddingResult> = BTreeMap::new();
            let probe = build_problem(config, &decomposition, 100.0)?;
            let selection = select_lambda(&probe, |lambda| {
                let problem = build_problem(config, &decomposition, lambda)?;
                let result =
                    train_embedding(&problem, config.restarts, config.max_iter, embed_seed)?;
                let state = embedded_state(&result.theta_opt, &problem)?;
                let node_qubits = problem.node_qubits();
                let model = train_classifier(
                    &state,
                    node_qubits,
                    &labels,
                    &split.train,
                    config.restarts,
                    config.max_iter,
                    derive_seed(seed, "lambda-classify"),
                )?;
                let predictions =
                    conditional_probabilities(&state, &model.spec, &model.gamma_opt, node_qubits)?;
                let accuracy = accuracy_of_predictions(&predictions, &labels, &split.train)?;
                let outcome = LambdaOutcome {
                    accuracy,
                    final_cost: result.final_cost,
                };
                cache.insert(lambda.to_bits(), result);
                Ok(outcome)
            })?;
            let result = cache
                .remove(&selection.chosen.to_bits())
                .expect("selection came from a trial");
            (selection.chosen, result, Some(selection))
        }
    };

    write_embedding_csv(dir.join(EMBEDDING_FILE), &result.y)?;
    let manifest = RunManifest {
        graph_file: GRAPH_FILE.into(),
        threshold: config.threshold,
        d: config.d,
        k: config.k,
        lambda,
        lambda_requested: config.lambda,
        mode: config.mode,
        graph_seed: seed,
        embed_seed,
        restarts: config.restarts,
        max_iter: config.max_iter,
        theta_opt: result.theta_opt,
        final_cost: result.final_cost,
        expectation_term: result.expectation_term,
        penalty_term: result.penalty_term,
        best_restart: result.best_restart,
        cost_trace: result.cost_trace,
        weights: result.weights,
        lambda_selection: selection,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Rebuilds the embedded state recorded in a manifest.
pub fn manifest_state(manifest: &RunManifest, node_qubits: usize) -> Result<Statevector> {
    let ancillas = manifest.d.trailing_zeros() as usize;
    let spec = EmbeddingAnsatzSpec::new(node_qubits, ancillas, manifest.k);
    Ok(spec.build(&manifest.theta_opt)?.run())
}

fn padded_node_qubits(graph: &Graph) -> usize {
    graph.num_nodes().next_power_of_two().trailing_zeros() as usize
}

/// Trains the variational classifier head on the embedded state recorded in
/// the manifest and writes per-node predictions plus summary metrics.
pub fn stage_classify(config: &ExperimentConfig, seed: u64) -> Result<ClassifierMetrics> {
    config.validate()?;
    let dir = config.seed_dir(seed);
    let manifest: RunManifest = read_json(&require(dir.join(MANIFEST_FILE), "embed")?)?;
    let graph = Graph::read_edge_list(require(dir.join(GRAPH_FILE), "generate")?)?;
    let labels = read_labels(require(dir.join(LABELS_FILE), "generate")?)?;
    let split: DataSplit = read_json(&require(dir.join(SPLIT_FILE), "generate")?)?;

    let node_qubits = padded_node_qubits(&graph);
    let state = manifest_state(&manifest, node_qubits)?;
    let model = train_classifier(
        &state,
        node_qubits,
        &labels,
        &split.train,
        config.restarts,
        config.max_iter,
        derive_seed(seed, "classify"),
    )?;
    let predictions = conditional_probabilities(&state, &model.spec, &model.gamma_opt, node_qubits)?;
    let test_accuracy = accuracy_of_predictions(&predictions, &labels, &split.test)?;
    write_predictions_csv(dir.join(PREDICTIONS_FILE), &predictions, &labels)?;
    let metrics = ClassifierMetrics {
        train_loss: model.final_loss(),
        test_accuracy,
        restarts_used: config.restarts,
    };
    write_metrics_json(dir.join(METRICS_FILE), &metrics)?;
    Ok(metrics)
}

fn logistic_accuracy(
    y: &Array2<f64>,
    model: &crate::baseline::LogisticModel,
    labels: &BTreeMap<usize, u8>,
    nodes: &[usize],
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet("evaluation set"));
    }
    let mut correct = 0usize;
    for &v in nodes {
        if v >= y.nrows() {
            return Err(Error::NodeOutOfRange {
                node: v,
                num_nodes: y.nrows(),
            });
        }
        let label = *labels.get(&v).ok_or(Error::MissingLabel(v))?;
        let p = logistic_predict(model, &y.row(v).to_vec())?;
        // An exact 0.5 never counts as correct, matching the quantum rule.
        if p != 0.5 && (p > 0.5) == (label == 1) {
            correct += 1;
        }
    }
    Ok(correct as f64 / nodes.len() as f64)
}

/// Runs the exact classical pipeline (eigenmap plus logistic regression) on
/// the same graph and split, writing the classical embedding and metrics.
pub fn stage_baseline(config: &ExperimentConfig, seed: u64) -> Result<BaselineMetrics> {
    config.validate()?;
    let dir = config.seed_dir(seed);
    let graph = Graph::read_edge_list(require(dir.join(GRAPH_FILE), "generate")?)?;
    let labels = read_labels(require(dir.join(LABELS_FILE), "generate")?)?;
    let split: DataSplit = read_json(&require(dir.join(SPLIT_FILE), "generate")?)?;

    let y = classical_eigenmap(&graph.laplacian(), config.d)?;
    write_embedding_csv(dir.join(BASELINE_EMBEDDING_FILE), &y)?;
    let model = logistic_train(
        &y,
        &labels,
        &split.train,
        BASELINE_EPOCHS,
        BASELINE_LEARNING_RATE,
        derive_seed(seed, "baseline"),
    )?;
    let metrics = BaselineMetrics {
        train_accuracy: logistic_accuracy(&y, &model, &labels, &split.train)?,
        test_accuracy: logistic_accuracy(&y, &model, &labels, &split.test)?,
    };
    write_json(&dir.join(BASELINE_METRICS_FILE), &metrics)?;
    Ok(metrics)
}

/// Picks the two quantum-embedding columns to plot: highest block weight
/// first, skipping empty columns and columns that are essentially constant
/// across nodes (they carry no layout information). Falls back to plain
/// weight order when fewer than two columns survive the filter.
fn scatter_columns(y: &Array2<f64>, weights: &[f64]) -> (usize, usize) {
    let mut order: Vec<usize> = (0..y.ncols()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let n = y.nrows() as f64;
    let informative: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&c| {
            let col = y.column(c);
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return false;
            }
            let ones_overlap = col.iter().sum::<f64>().abs() / (norm * n.sqrt());
            ones_overlap <= CONSTANT_COLUMN_OVERLAP
        })
        .collect();
    let mut picked: Vec<usize> = informative.into_iter().take(2).collect();
    for &c in &order {
        if picked.len() >= 2 {
            break;
        }
        if !picked.contains(&c) {
            picked.push(c);
        }
    }
    (picked[0], picked[1])
}

fn write_scatter_csv(
    path: &Path,
    y: &Array2<f64>,
    communities: &BTreeMap<usize, usize>,
    cols: (usize, usize),
) -> Result<()> {
    let mut text = String::from("node,community,x,y\n");
    for (&node, &community) in communities {
        if node >= y.nrows() {
            return Err(Error::NodeOutOfRange {
                node,
                num_nodes: y.nrows(),
            });
        }
        text.push_str(&format!(
            "{node},{community},{},{}\n",
            y[[node, cols.0]],
            y[[node, cols.1]]
        ));
    }
    std::fs::write(path, text).map_err(Error::io(path))
}

/// Emits plot-ready 2-D scatter data for both embeddings: the two most
/// informative quantum columns and the first two classical eigenmap
/// dimensions, one `node,community,x,y` row per real (non-padding) node.
pub fn stage_embedviz(config: &ExperimentConfig, seed: u64) -> Result<()> {
    config.validate()?;
    let dir = config.seed_dir(seed);
    let communities = read_communities(require(dir.join(COMMUNITIES_FILE), "generate")?)?;
    if communities.is_empty() {
        return Err(Error::EmptyNodeSet("community assignments"));
    }
    let manifest: RunManifest = read_json(&require(dir.join(MANIFEST_FILE), "embed")?)?;
    let quantum = read_embedding_csv(require(dir.join(EMBEDDING_FILE), "embed")?)?;
    let cols = scatter_columns(&quantum, &manifest.weights);
    write_scatter_csv(&dir.join(QUANTUM_SCATTER_FILE), &quantum, &communities, cols)?;

    let classical = read_embedding_csv(require(dir.join(BASELINE_EMBEDDING_FILE), "baseline")?)?;
    write_scatter_csv(&dir.join(CLASSICAL_SCATTER_FILE), &classical, &communities, (0, 1))?;
    Ok(())
}

/// Pipeline stages in execution order, plus the visualization stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Decompose,
    Embed,
    Classify,
    Baseline,
    Embedviz,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Decompose => "decompose",
            Stage::Embed => "embed",
            Stage::Classify => "classify",
            Stage::Baseline => "baseline",
            Stage::Embedviz => "embedviz",
        }
    }
}

/// Runs one stage for every configured seed (seeds in parallel).
pub fn run_stage(config: &ExperimentConfig, stage: Stage) -> Result<()> {
    config.validate()?;
    let results: Vec<Result<()>> = config
        .seeds
        .par_iter()
        .map(|&seed| match stage {
            Stage::Generate => stage_generate(config, seed),
            Stage::Decompose => stage_decompose(config, seed).map(|_| ()),
            Stage::Embed => stage_embed(config, seed).map(|_| ()),
            Stage::Classify => stage_classify(config, seed).map(|_| ()),
            Stage::Baseline => stage_baseline(config, seed).map(|_| ()),
            Stage::Embedviz => stage_embedviz(config, seed),
        })
        .collect();
    results.into_iter().collect()
}

/// Outcome of one seed's full pipeline run.
#[derive(Debug, Clone)]
pub struct SeedSummary {
    pub seed: u64,
    pub threshold_report: ThresholdReport,
    pub manifest: RunManifest,
    pub metrics: ClassifierMetrics,
    pub baseline: BaselineMetrics,
}

/// Runs every pipeline stage in order for one seed.
pub fn run_seed_pipeline(config: &ExperimentConfig, seed: u64) -> Result<SeedSummary> {
    stage_generate(config, seed)?;
    let threshold_report = stage_decompose(config, seed)?;
    let manifest = stage_embed(config, seed)?;
    let metrics = stage_classify(config, seed)?;
    let baseline = stage_baseline(config, seed)?;
    Ok(SeedSummary {
        seed,
        threshold_report,
        manifest,
        metrics,
        baseline,
    })
}

/// Runs the full pipeline for every configured seed (seeds in parallel).
pub fn run_pipeline(config: &ExperimentConfig) -> Result<Vec<SeedSummary>> {
    config.validate()?;
    let mut summaries: Vec<SeedSummary> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed_pipeline(config, seed))
        .collect::<Result<Vec<_>>>()?;
    summaries.sort_by_key(|s| s.seed);
    Ok(summaries)
}

/// Accuracy of a classifier trained on a random-parameter embedding of the
/// same graph: the embedding circuit gets uniform random angles instead of
/// trained ones, and only the classifier head is optimized. This is the
/// "untrained embedding" control.
pub fn random_parameter_accuracy(config: &ExperimentConfig, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let dir = config.seed_dir(seed);
    let graph = Graph::read_edge_list(require(dir.join(GRAPH_FILE), "generate")?)?;
    let labels = read_labels(require(dir.join(LABELS_FILE), "generate")?)?;
    let split: DataSplit = read_json(&require(dir.join(SPLIT_FILE), "generate")?)?;

    let node_qubits = padded_node_qubits(&graph);
    let spec = EmbeddingAnsatzSpec::new(node_qubits, config.ancilla_qubits(), config.k);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, "random-embed"));
    let theta: Vec<f64> = (0..spec.param_count())
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let state = spec.build(&theta)?.run();
    let model = train_classifier(
        &state,
        node_qubits,
        &labels,
        &split.train,
        config.restarts,
        config.max_iter,
        derive_seed(seed, "random-classify"),
    )?;
    let predictions = conditional_probabilities(&state, &model.spec, &model.gamma_opt, node_qubits)?;
    accuracy_of_predictions(&predictions, &labels, &split.test)
}

/// Sweep over a grid of graph and thresholding parameters. The flattened
/// base config supplies everything else; empty grid axes default to the
/// base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub base: ExperimentConfig,
    #[serde(default)]
    pub p_in_values: Vec<f64>,
    #[serde(default)]
    pub p_out_values: Vec<f64>,
    #[serde(default)]
    pub threshold_values: Vec<f64>,
}

impl SweepConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<SweepConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let config: SweepConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for (name, values) in [
            ("p_in_values", &self.p_in_values),
            ("p_out_values", &self.p_out_values),
            ("threshold_values", &self.threshold_values),
        ] {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            if sorted.len() != values.len() {
                return Err(Error::Config(format!("{name} must be distinct")));
            }
        }
        Ok(())
    }

    fn axis(values: &[f64], fallback: f64) -> Vec<f64> {
        if values.is_empty() {
            vec![fallback]
        } else {
            values.to_vec()
        }
    }

    /// The cell grid: every (p_in, p_out, threshold) combination.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut cells = Vec::new();
        for &p_in in &Self::axis(&self.p_in_values, self.base.p_in) {
            for &p_out in &Self::axis(&self.p_out_values, self.base.p_out) {
                for &threshold in &Self::axis(&self.threshold_values, self.base.threshold) {
                    cells.push((p_in, p_out, threshold));
                }
            }
        }
        cells
    }

    /// Per-cell experiment config, writing into a cell-named subdirectory.
    pub fn cell_config(&self, cell: (f64, f64, f64)) -> ExperimentConfig {
        let (p_in, p_out, threshold) = cell;
        let mut config = self.base.clone();
        config.p_in = p_in;
        config.p_out = p_out;
        config.threshold = threshold;
        config.out_dir = self
            .base
            .out_dir
            .join(format!("cell_pin{p_in}_pout{p_out}_t{threshold}"));
        config
    }
}

/// One (cell, seed) outcome of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub p_in: f64,
    pub p_out: f64,
    pub threshold: f64,
    pub seed: u64,
    /// Retained coefficient mass after thresholding.
    pub alpha: f64,
    /// Surviving decomposition terms.
    pub n_terms: usize,
    pub quantum_accuracy: f64,
    pub classical_accuracy: f64,
    pub random_param_accuracy: f64,
    pub final_cost: f64,
    pub penalty_residual: f64,
    /// Seconds spent on this cell-seed pipeline (excluded from the
    /// deterministic outputs; written to the timings file only).
    pub wall_time_seconds: f64,
}

const SWEEP_LONG_FILE: &str = "sweep_long.csv";
const SWEEP_AGG_FILE: &str = "sweep_agg.csv";
const SWEEP_TIMINGS_FILE: &str = "sweep_timings.csv";
const SWEEP_ERRORS_FILE: &str = "sweep_errors.csv";

fn sweep_key(r: &SweepRecord) -> (f64, f64, f64) {
    (r.p_in, r.p_out, r.threshold)
}

fn write_sweep_files(out_dir: &Path, records: &[SweepRecord], errors: &[(f64, f64, f64, u64, String)]) -> Result<()> {
    let mut long = String::from(
        "p_in,p_out,threshold,seed,alpha,n_terms,quantum_accuracy,classical_accuracy,random_param_accuracy,final_cost,penalty_residual\n",
    );
    for r in records {
        long.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.p_in,
            r.p_out,
            r.threshold,
            r.seed,
            r.alpha,
            r.n_terms,
            r.quantum_accuracy,
            r.classical_accuracy,
            r.random_param_accuracy,
            r.final_cost,
            r.penalty_residual
        ));
    }
    let path = out_dir.join(SWEEP_LONG_FILE);
    std::fs::write(&path, long).map_err(Error::io(&path))?;

    let mut agg = String::from(
        "p_in,p_out,threshold,n_seeds,alpha,n_terms,quantum_accuracy,classical_accuracy,random_param_accuracy,final_cost,penalty_residual\n",
    );
    let mut start = 0;
    while start < records.len() {
        let key = sweep_key(&records[start]);
        let mut end = start;
        while end < records.len() && sweep_key(&records[end]) == key {
            end += 1;
        }
        let group = &records[start..end];
        let mean = |f: &dyn Fn(&SweepRecord) -> f64| {
            group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64
        };
        agg.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            key.0,
            key.1,
            key.2,
            group.len(),
            mean(&|r| r.alpha),
            mean(&|r| r.n_terms as f64),
            mean(&|r| r.quantum_accuracy),
            mean(&|r| r.classical_accuracy),
            mean(&|r| r.random_param_accuracy),
            mean(&|r| r.final_cost),
            mean(&|r| r.penalty_residual)
        ));
        start = end;
    }
    let path = out_dir.join(SWEEP_AGG_FILE);
    std::fs::write(&path, agg).map_err(Error::io(&path))?;

    let mut timings = String::from("p_in,p_out,threshold,seed,wall_time_seconds\n");
    for r in records {
        timings.push_str(&format!(
            "{},{},{},{},{}\n",
            r.p_in, r.p_out, r.threshold, r.seed, r.wall_time_seconds
        ));
    }
    let path = out_dir.join(SWEEP_TIMINGS_FILE);
    std::fs::write(&path, timings).map_err(Error::io(&path))?;

    let mut error_text = String::from("p_in,p_out,threshold,seed,error\n");
    for (p_in, p_out, threshold, seed, message) in errors {
        error_text.push_str(&format!(
            "{p_in},{p_out},{threshold},{seed},{:?}\n",
            message
        ));
    }
    let path = out_dir.join(SWEEP_ERRORS_FILE);
    std::fs::write(&path, error_text).map_err(Error::io(&path))
}

/// Runs the full pipeline (plus the random-parameter control) on every
/// (cell, seed) combination, in parallel, and writes four CSV tables into
/// the output root: the long-format record table, per-cell means, wall-time
/// measurements (kept separate so the other outputs are deterministic), and
/// any per-cell failures (failures do not abort the sweep).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    std::fs::create_dir_all(&config.base.out_dir).map_err(Error::io(&config.base.out_dir))?;
    let jobs: Vec<((f64, f64, f64), u64)> = config
        .cells()
        .into_iter()
        .flat_map(|cell| config.base.seeds.iter().map(move |&seed| (cell, seed)))
        .collect();

    let outcomes: Vec<std::result::Result<SweepRecord, (f64, f64, f64, u64, String)>> = jobs
        .par_iter()
        .map(|&(cell, seed)| {
            let cell_config = config.cell_config(cell);
            let started = Instant::now();
            let run = || -> Result<SweepRecord> {
                let summary = run_seed_pipeline(&cell_config, seed)?;
                let random_param_accuracy = random_parameter_accuracy(&cell_config, seed)?;
                Ok(SweepRecord {
                    p_in: cell.0,
                    p_out: cell.1,
                    threshold: cell.2,
                    seed,
                    alpha: summary.threshold_report.alpha,
                    n_terms: summary.threshold_report.kept,
                    quantum_accuracy: summary.metrics.test_accuracy,
                    classical_accuracy: summary.baseline.test_accuracy,
                    random_param_accuracy,
                    final_cost: summary.manifest.final_cost,
                    penalty_residual: summary.manifest.penalty_term,
                    wall_time_seconds: 0.0,
                })
            };
            match run() {
                Ok(mut record) => {
                    record.wall_time_seconds = started.elapsed().as_secs_f64();
                    Ok(record)
                }
                Err(e) => Err((cell.0, cell.1, cell.2, seed, e.to_string())),
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => records.push(record),
            Err(error) => errors.push(error),
        }
    }
    let order = |a: &(f64, f64, f64, u64), b: &(f64, f64, f64, u64)| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
    };
    records.sort_by(|a, b| {
        order(
            &(a.p_in, a.p_out, a.threshold, a.seed),
            &(b.p_in, b.p_out, b.threshold, b.seed),
        )
    });
    errors.sort_by(|a, b| order(&(a.0, a.1, a.2, a.3), &(b.0, b.1, b.2, b.3)));
    write_sweep_files(&config.base.out_dir, &records, &errors)?;
    Ok(records)
}

/// Applies the `QLEMAP_WORKERS` environment variable to the global worker
/// pool. Silently keeps the default when the variable is unset, unparsable,
/// or the pool is already initialized.
pub fn configure_workers_from_env() {
    if let Some(count) = std::env::var("QLEMAP_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(out_dir: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            n_nodes: 8,
            n_communities: 2,
            p_in: 1.0,
            p_out: 0.0,
            seeds: vec![0],
            d: 2,
            k: 1,
            lambda: LambdaSpec::Fixed(100.0),
            threshold: 0.0,
            mode: EvalMode::Exact,
            restarts: 2,
            max_iter: 250,
            test_fraction: 0.25,
            out_dir,
        }
    }

    fn read_all_artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(dir).unwrap() {
            let entry = entry.unwrap();
            if entry.file_type().unwrap().is_file() {
                files.insert(
                    entry.file_name().to_string_lossy().into_owned(),
                    std::fs::read(entry.path()).unwrap(),
                );
            }
        }
        files
    }

    #[test]
    fn config_json_round_trip_and_lambda_forms() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path().join("out"));
        let text = serde_json::to_string_pretty(&config).unwrap();
        assert!(text.contains("\"lambda\": 100.0"));
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);

        let auto: ExperimentConfig = serde_json::from_str(
            r#"{"n_nodes":8,"p_in":0.7,"p_out":0.1,"lambda":"auto","out_dir":"/tmp/x"}"#,
        )
        .unwrap();
        assert_eq!(auto.lambda, LambdaSpec::Auto);
        assert_eq!(auto.d, 4);
        assert_eq!(auto.seeds, (0..9).collect::<Vec<u64>>());
        assert_eq!(auto.restarts, 5);
        assert_eq!(auto.max_iter, 2000);
        assert_eq!(auto.mode, EvalMode::Exact);
        assert!((auto.test_fraction - 0.25).abs() < 1e-15);

        let bad = serde_json::from_str::<ExperimentConfig>(
            r#"{"n_nodes":8,"p_in":0.7,"p_out":0.1,"lambda":"sometimes","out_dir":"/tmp/x"}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn config_validation_rejects_bad_settings() {
        let dir = tempfile::tempdir().unwrap();
        let good = tiny_config(dir.path().join("out"));
        assert!(good.validate().is_ok());

        let mut c = good.clone();
        c.seeds = vec![3, 3];
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.threshold = -0.1;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.d = 3;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.lambda = LambdaSpec::Fixed(-1.0);
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.test_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.p_in = 1.5;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.restarts = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn derived_seeds_differ_by_stage_and_seed() {
        let stages = ["split", "embed", "classify", "baseline", "random-embed"];
        let mut seen = std::collections::BTreeSet::new();
        for seed in [0u64, 1, 2] {
            for stage in stages {
                assert!(seen.insert(derive_seed(seed, stage)));
                assert_eq!(derive_seed(seed, stage), derive_seed(seed, stage));
            }
        }
    }

    #[test]
    fn embedding_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embedding.csv");
        let y = ndarray::arr2(&[[0.5, -0.25], [0.125, 1.0], [0.0, 0.75], [-0.5, 0.0]]);
        write_embedding_csv(&path, &y).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("node,y0,y1,row_norm\n"));
        assert_eq!(text.lines().count(), 5);
        let back = read_embedding_csv(&path).unwrap();
        assert_eq!(back, y);
    }

    #[test]
    fn pipeline_runs_end_to_end_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path().join("out"));
        let summary = run_seed_pipeline(&config, 0).unwrap();
        stage_embedviz(&config, 0).unwrap();

        let seed_dir = config.seed_dir(0);
        for file in [
            GRAPH_FILE,
            LABELS_FILE,
            COMMUNITIES_FILE,
            SPLIT_FILE,
            DECOMPOSITION_FILE,
            THRESHOLD_FILE,
            MANIFEST_FILE,
            EMBEDDING_FILE,
            PREDICTIONS_FILE,
            METRICS_FILE,
            BASELINE_EMBEDDING_FILE,
            BASELINE_METRICS_FILE,
            QUANTUM_SCATTER_FILE,
            CLASSICAL_SCATTER_FILE,
        ] {
            assert!(seed_dir.join(file).exists(), "missing {file}");
        }

        // Two disjoint cliques with threshold zero: full coefficient mass
        // kept, and both pipelines should classify the easy split well.
        assert_eq!(summary.threshold_report.alpha, 1.0);
        assert!(summary.baseline.test_accuracy >= 0.5);
        assert!(summary.metrics.train_loss.is_finite());
        let manifest: RunManifest = read_json(&seed_dir.join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest, summary.manifest);

        let before = read_all_artifacts(&seed_dir);
        let again = run_seed_pipeline(&config, 0).unwrap();
        stage_embedviz(&config, 0).unwrap();
        assert_eq!(again.manifest, summary.manifest);
        let after = read_all_artifacts(&seed_dir);
        assert_eq!(before, after);
    }

    #[test]
    fn decompose_with_zero_threshold_reconstructs_the_laplacian() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path().join("out"));
        config.n_nodes = 6;
        config.p_in = 0.9;
        config.p_out = 0.2;
        stage_generate(&config, 0).unwrap();
        let report = stage_decompose(&config, 0).unwrap();
        assert_eq!(report.alpha, 1.0);
        assert_eq!(report.dropped, 0);

        let seed_dir = config.seed_dir(0);
        let graph = Graph::read_edge_list(seed_dir.join(GRAPH_FILE)).unwrap();
        let decomposition =
            PauliDecomposition::read_csv(seed_dir.join(DECOMPOSITION_FILE)).unwrap();
        let reconstructed = decomposition.reconstruct();
        let target = graph.pad_to_power_of_two().laplacian();
        let max_err = (&reconstructed - &target)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_err < 1e-10, "max reconstruction error {max_err}");
    }

    #[test]
    fn stages_report_missing_prerequisites() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path().join("out"));
        match stage_classify(&config, 0) {
            Err(Error::MissingArtifact { stage, .. }) => assert_eq!(stage, "embed"),
            other => panic!("expected missing artifact, got {other:?}"),
        }
        match stage_decompose(&config, 0) {
            Err(Error::MissingArtifact { stage, .. }) => assert_eq!(stage, "generate"),
            other => panic!("expected missing artifact, got {other:?}"),
        }
    }

    #[test]
    fn embedviz_rows_cover_exactly_the_real_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path().join("out"));
        // Six real nodes padded to eight: scatter rows must cover exactly
        // the six real ones.
        config.n_nodes = 6;
        config.p_in = 1.0;
        config.p_out = 0.0;
        run_seed_pipeline(&config, 0).unwrap();
        stage_embedviz(&config, 0).unwrap();

        let seed_dir = config.seed_dir(0);
        for file in [QUANTUM_SCATTER_FILE, CLASSICAL_SCATTER_FILE] {
            let text = std::fs::read_to_string(seed_dir.join(file)).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some("node,community,x,y"));
            let rows: Vec<&str> = lines.collect();
            assert_eq!(rows.len(), 6, "{file}");
            for (v, row) in rows.iter().enumerate() {
                assert!(row.starts_with(&format!("{v},")), "{file}: {row}");
                assert_eq!(row.split(',').count(), 4);
            }
        }
    }

    #[test]
    fn scatter_column_choice_prefers_weighted_nonconstant_columns() {
        // Column 0 is constant (skipped), column 2 outweighs column 1.
        let y = ndarray::arr2(&[
            [0.5, 0.1, 0.9, 0.0],
            [0.5, -0.2, -0.3, 0.0],
            [0.5, 0.3, 0.2, 0.0],
            [0.5, -0.4, -0.1, 0.0],
        ]);
        let weights = [0.8, 0.3, 0.5, 0.1];
        assert_eq!(scatter_columns(&y, &weights), (2, 1));

        // All columns constant: falls back to pure weight order.
        let flat = ndarray::arr2(&[[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]);
        assert_eq!(scatter_columns(&flat, &[0.2, 0.9]), (1, 0));
    }

    #[test]
    fn auto_lambda_records_the_selection() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path().join("out"));
        config.lambda = LambdaSpec::Auto;
        config.restarts = 1;
        config.max_iter = 150;
        stage_generate(&config, 0).unwrap();
        stage_decompose(&config, 0).unwrap();
        let manifest = stage_embed(&config, 0).unwrap();
        assert_eq!(manifest.lambda_requested, LambdaSpec::Auto);
        let selection = manifest.lambda_selection.expect("auto records trials");
        assert_eq!(selection.chosen, manifest.lambda);
        assert!(!selection.trials.is_empty());
        assert_eq!(selection.trials[0].0, 100.0);
        // The chosen lambda is always one of the tried values.
        assert!(selection.trials.iter().any(|(l, _)| *l == manifest.lambda));
    }

    #[test]
    fn sweep_composes_with_individual_stages_and_aggregates_means() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = tiny_config(dir.path().join("sweep"));
        base.seeds = vec![0, 1];
        let sweep = SweepConfig {
            base: base.clone(),
            p_in_values: vec![],
            p_out_values: vec![],
            threshold_values: vec![0.0, 0.2],
        };
        let records = run_sweep(&sweep).unwrap();
        assert_eq!(records.len(), 4);

        // Same cell, run via the plain per-stage pipeline: identical output.
        let cell_config = sweep.cell_config((base.p_in, base.p_out, 0.0));
        let direct = run_seed_pipeline(&cell_config, 0).unwrap();
        let in_sweep = records
            .iter()
            .find(|r| r.threshold == 0.0 && r.seed == 0)
            .unwrap();
        assert_eq!(direct.metrics.test_accuracy, in_sweep.quantum_accuracy);
        assert_eq!(direct.manifest.final_cost, in_sweep.final_cost);
        assert_eq!(direct.threshold_report.alpha, in_sweep.alpha);

        // Aggregate rows are the means over seeds of the long rows.
        let text = std::fs::read_to_string(base.out_dir.join(SWEEP_AGG_FILE)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("p_in,p_out,threshold,n_seeds,alpha"));
        let agg_rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(agg_rows.len(), 2);
        for row in &agg_rows {
            let threshold = row[2];
            let group: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.threshold == threshold)
                .collect();
            assert_eq!(row[3] as usize, group.len());
            let mean_quant =
                group.iter().map(|r| r.quantum_accuracy).sum::<f64>() / group.len() as f64;
            assert!((row[6] - mean_quant).abs() < 1e-15);
            let mean_alpha = group.iter().map(|r| r.alpha).sum::<f64>() / group.len() as f64;
            assert!((row[4] - mean_alpha).abs() < 1e-15);
        }

        // Timings live outside the deterministic tables.
        let long_text = std::fs::read_to_string(base.out_dir.join(SWEEP_LONG_FILE)).unwrap();
        assert!(!long_text.contains("wall_time"));
        assert_eq!(long_text.lines().count(), 5);
        let timings = std::fs::read_to_string(base.out_dir.join(SWEEP_TIMINGS_FILE)).unwrap();
        assert_eq!(timings.lines().next().unwrap(), "p_in,p_out,threshold,seed,wall_time_seconds");
        assert_eq!(timings.lines().count(), 5);
        let errors = std::fs::read_to_string(base.out_dir.join(SWEEP_ERRORS_FILE)).unwrap();
        assert_eq!(errors.trim(), "p_in,p_out,threshold,seed,error");

        // Random-parameter control stays a probability.
        for r in &records {
            assert!((0.0..=1.0).contains(&r.random_param_accuracy));
        }
    }

    #[test]
    fn sweep_records_per_cell_failures_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = tiny_config(dir.path().join("sweep"));
        // d = 4 on a 4-node graph: the classical eigenmap needs d < n, so
        // every seed of this cell fails while the sweep itself succeeds.
        base.n_nodes = 4;
        base.d = 4;
        base.seeds = vec![0];
        let sweep = SweepConfig {
            base,
            p_in_values: vec![],
            p_out_values: vec![],
            threshold_values: vec![],
        };
        let records = run_sweep(&sweep).unwrap();
        assert!(records.is_empty());
        let errors =
            std::fs::read_to_string(sweep.base.out_dir.join(SWEEP_ERRORS_FILE)).unwrap();
        assert_eq!(errors.lines().count(), 2);
        assert!(errors.lines().nth(1).unwrap().starts_with("1,0,0,0,"));
        let long = std::fs::read_to_string(sweep.base.out_dir.join(SWEEP_LONG_FILE)).unwrap();
        assert_eq!(long.lines().count(), 1);
    }
}
