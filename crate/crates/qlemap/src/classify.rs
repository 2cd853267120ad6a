//! Variational node classifier on top of the embedding state: a trainable
//! head on the ancilla register turns each node's embedding row into a label
//! probability, trained against binary cross-entropy.
//!
//! The output qubit is the most-significant ancilla. For node v,
//! P(label = 1 | node = v) is the probability that the output qubit reads 1
//! given the node register reads v, after the head circuit is applied.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::ClassifierAnsatzSpec;
use crate::optimize::{minimize, OptimizeConfig};
use crate::qsim::{measure_counts, Circuit, Statevector};
use crate::{Error, Result};

/// Mass below which a node's embedding row is treated as absent (padding
/// nodes): its probabilities degrade to 0.5 and it is excluded from loss and
/// accuracy.
const ROW_MASS_FLOOR: f64 = 1e-12;

/// Clamp bound keeping cross-entropy finite.
const PROB_CLAMP: f64 = 1e-10;

/// Label probabilities for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePrediction {
    pub node: usize,
    pub p0: f64,
    pub p1: f64,
    /// Probability of the node register reading this node at all.
    pub row_mass: f64,
    /// True when `row_mass` vanishes and the probabilities are placeholders.
    pub degenerate: bool,
}

/// Trained classifier head.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub gamma_opt: Vec<f64>,
    /// Best-so-far loss curve of the winning restart.
    pub loss_trace: Vec<(usize, f64)>,
    pub spec: ClassifierAnsatzSpec,
}

impl ClassifierModel {
    /// Training loss of the kept restart.
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().map_or(f64::INFINITY, |(_, l)| *l)
    }
}

/// Summary written next to the predictions.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassifierMetrics {
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub restarts_used: usize,
}

fn head_circuit(
    state: &Statevector,
    spec: &ClassifierAnsatzSpec,
    gamma: &[f64],
    node_qubits: usize,
) -> Result<Circuit> {
    let ancillas = state
        .n_qubits()
        .checked_sub(node_qubits)
        .filter(|p| *p >= 1)
        .ok_or(Error::LengthMismatch {
            expected: node_qubits + 1,
            got: state.n_qubits(),
            context: "register must hold the node qubits plus ancillas",
        })?;
    if spec.qubits != ancillas {
        return Err(Error::LengthMismatch {
            expected: ancillas,
            got: spec.qubits,
            context: "classifier width vs ancilla register",
        });
    }
    spec.build(gamma)?.shifted(state.n_qubits(), node_qubits)
}

fn apply_circuit(state: &Statevector, circuit: &Circuit) -> Result<Statevector> {
    let mut out = state.clone();
    for gate in circuit.gates() {
        out = out.apply_gate(gate)?;
    }
    Ok(out)
}

/// Exact conditional label probabilities for every node register value,
/// read from the amplitudes after applying the head circuit.
pub fn conditional_probabilities(
    state: &Statevector,
    spec: &ClassifierAnsatzSpec,
    gamma: &[f64],
    node_qubits: usize,
) -> Result<Vec<NodePrediction>> {
    let circuit = head_circuit(state, spec, gamma, node_qubits)?;
    let out = apply_circuit(state, &circuit)?;
    let block_len = 1usize << node_qubits;
    let blocks = out.amplitudes().len() / block_len;
    let output_threshold = blocks / 2;
    let mut predictions = Vec::with_capacity(block_len);
    for v in 0..block_len {
        let mut row_mass = 0.0;
        let mut mass1 = 0.0;
        for a in 0..blocks {
            let w = out.amplitudes()[a * block_len + v].norm_sqr();
            row_mass += w;
            if a >= output_threshold {
                mass1 += w;
            }
        }
        predictions.push(if row_mass < ROW_MASS_FLOOR {
            NodePrediction {
                node: v,
                p0: 0.5,
                p1: 0.5,
                row_mass,
                degenerate: true,
            }
        } else {
            let p1 = mass1 / row_mass;
            NodePrediction {
                node: v,
                p0: 1.0 - p1,
                p1,
                row_mass,
                degenerate: false,
            }
        });
    }
    Ok(predictions)
}

/// Shot-based conditionals: measures the node register plus the output qubit
/// jointly and turns the histogram into per-node frequencies. `row_mass` is
/// the observed fraction of shots on the node; nodes never observed come
/// back degenerate. Deterministic per seed.
pub fn sampled_conditional_probabilities(
    state: &Statevector,
    spec: &ClassifierAnsatzSpec,
    gamma: &[f64],
    node_qubits: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<NodePrediction>> {
    let circuit = head_circuit(state, spec, gamma, node_qubits)?;
    let out = apply_circuit(state, &circuit)?;
    let mut measured: Vec<usize> = (0..node_qubits).collect();
    measured.push(out.n_qubits() - 1);
    let counts = measure_counts(&out, &measured, shots, seed)?;

    let block_len = 1usize << node_qubits;
    let mut ones = vec![0usize; block_len];
    let mut totals = vec![0usize; block_len];
    for (key, count) in &counts {
        // Key layout: leftmost char is the output qubit, the rest are node
        // bits most-significant first.
        let output = key.as_bytes()[0] == b'1';
        let node = usize::from_str_radix(&key[1..], 2).expect("binary key");
        totals[node] += count;
        if output {
            ones[node] += count;
        }
    }
    Ok((0..block_len)
        .map(|v| {
            if totals[v] == 0 {
                NodePrediction {
                    node: v,
                    p0: 0.5,
                    p1: 0.5,
                    row_mass: 0.0,
                    degenerate: true,
                }
            } else {
                let p1 = ones[v] as f64 / totals[v] as f64;
                NodePrediction {
                    node: v,
                    p0: 1.0 - p1,
                    p1,
                    row_mass: totals[v] as f64 / shots as f64,
                    degenerate: false,
                }
            }
        })
        .collect())
}

/// Negated binary cross-entropy over the training nodes, with probabilities
/// clamped to [1e-10, 1-1e-10]. Degenerate (zero-mass) nodes contribute
/// nothing.
pub fn bce_loss(
    predictions: &[NodePrediction],
    labels: &BTreeMap<usize, u8>,
    train_nodes: &[usize],
) -> Result<f64> {
    let mut loss = 0.0;
    for &v in train_nodes {
        let prediction = predictions.get(v).ok_or(Error::NodeOutOfRange {
            node: v,
            num_nodes: predictions.len(),
        })?;
        let label = *labels.get(&v).ok_or(Error::MissingLabel(v))?;
        if label > 1 {
            return Err(Error::NonBinaryLabel {
                node: v,
                label: i64::from(label),
            });
        }
        if prediction.degenerate {
            continue;
        }
        let p1 = prediction.p1.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let p0 = prediction.p0.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= if label == 1 { p1.ln() } else { p0.ln() };
    }
    Ok(loss)
}

/// Trains the head by derivative-free minimization of the cross-entropy,
/// restarting from `restarts` independent uniform [0, 2π) points drawn
/// upfront from `seed` and keeping the lowest-loss run (ties broken by
/// restart index). Probabilities are evaluated exactly.
pub fn train_classifier(
    state: &Statevector,
    node_qubits: usize,
    labels: &BTreeMap<usize, u8>,
    train_nodes: &[usize],
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClassifierModel> {
    if restarts == 0 {
        return Err(Error::InvalidParameter {
            name: "restarts",
            value: "0".into(),
            reason: "needs at least one restart",
        });
    }
    if train_nodes.is_empty() {
        return Err(Error::EmptyNodeSet("training set"));
    }
    let ancillas = state.n_qubits().saturating_sub(node_qubits);
    let spec = ClassifierAnsatzSpec::new(ancillas);
    // Surface register problems before spending optimizer evaluations.
    let probe = vec![0.0; spec.param_count()];
    bce_loss(
        &conditional_probabilities(state, &spec, &probe, node_qubits)?,
        labels,
        train_nodes,
    )?;

    let dim = spec.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
        .collect();
    let cfg = OptimizeConfig {
        max_iter,
        seed,
        ..OptimizeConfig::default()
    };
    let objective = |gamma: &[f64]| -> f64 {
        conditional_probabilities(state, &spec, gamma, node_qubits)
            .and_then(|p| bce_loss(&p, labels, train_nodes))
            .unwrap_or(f64::NAN)
    };

    let runs: Vec<Result<crate::optimize::OptimizeResult>> = starts
        .par_iter()
        .map(|x0| minimize(objective, x0, &cfg))
        .collect();
    let mut best: Option<crate::optimize::OptimizeResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.f_opt < b.f_opt) {
                    best = Some(r);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    let run = match best {
        Some(r) => r,
        None => return Err(first_err.expect("restarts >= 1")),
    };
    Ok(ClassifierModel {
        gamma_opt: run.x_opt,
        loss_trace: run.trace,
        spec,
    })
}

fn score(
    predictions: &[NodePrediction],
    labels: &BTreeMap<usize, u8>,
    nodes: &[usize],
) -> Result<(usize, usize)> {
    let mut correct = 0;
    let mut scored = 0;
    for &v in nodes {
        let prediction = predictions.get(v).ok_or(Error::NodeOutOfRange {
            node: v,
            num_nodes: predictions.len(),
        })?;
        let label = *labels.get(&v).ok_or(Error::MissingLabel(v))?;
        if prediction.degenerate {
            continue;
        }
        scored += 1;
        // An exact tie never counts as correct.
        if prediction.p1 != 0.5 && (prediction.p1 > 0.5) == (label == 1) {
            correct += 1;
        }
    }
    Ok((correct, scored))
}

/// Fraction of the given nodes classified correctly (degenerate rows are
/// skipped; exact 0.5 ties score as incorrect).
pub fn accuracy_of_predictions(
    predictions: &[NodePrediction],
    labels: &BTreeMap<usize, u8>,
    nodes: &[usize],
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet("evaluation set"));
    }
    let (correct, scored) = score(predictions, labels, nodes)?;
    if scored == 0 {
        return Err(Error::EmptyNodeSet("non-degenerate evaluation nodes"));
    }
    Ok(correct as f64 / scored as f64)
}

/// Accuracy of a trained model on the given nodes.
pub fn evaluate_accuracy(
    model: &ClassifierModel,
    state: &Statevector,
    node_qubits: usize,
    labels: &BTreeMap<usize, u8>,
    test_nodes: &[usize],
) -> Result<f64> {
    let predictions =
        conditional_probabilities(state, &model.spec, &model.gamma_opt, node_qubits)?;
    accuracy_of_predictions(&predictions, labels, test_nodes)
}

/// Writes `node,label,p1,predicted` rows for every labeled node, in node
/// order.
pub fn write_predictions_csv(
    path: impl AsRef<Path>,
    predictions: &[NodePrediction],
    labels: &BTreeMap<usize, u8>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("node,label,p1,predicted\n");
    for (&node, &label) in labels {
        let prediction = predictions.get(node).ok_or(Error::NodeOutOfRange {
            node,
            num_nodes: predictions.len(),
        })?;
        let predicted = u8::from(prediction.p1 > 0.5);
        out.push_str(&format!("{node},{label},{},{predicted}\n", prediction.p1));
    }
    let mut file = std::fs::File::create(path).map_err(Error::io(path))?;
    file.write_all(out.as_bytes()).map_err(Error::io(path))
}

/// Writes the metrics summary as pretty JSON.
pub fn write_metrics_json(path: impl AsRef<Path>, metrics: &ClassifierMetrics) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(metrics)?;
    std::fs::write(path, text + "\n").map_err(Error::io(path))
}
