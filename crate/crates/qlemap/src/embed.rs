//! Variational Laplacian-eigenmap trainer: the cost couples the Laplacian
//! expectation over the ansatz state's amplitude blocks with an
//! orthogonality penalty between blocks, and minimizing it drives the blocks
//! toward the low end of the spectrum.
//!
//! The register layout puts the node register on the low `n` qubits and the
//! embedding-dimension (ancilla) register on the high `p` qubits, so block
//! `i` of the statevector is `w_i |ψ_i⟩` and the embedding matrix column `i`
//! is the normalized block.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::EmbeddingAnsatzSpec;
use crate::optimize::{minimize, OptimizeConfig};
use crate::pauli::{Pauli, PauliDecomposition, PauliString};
use crate::qsim::{exact_pauli_expectation, sampled_pauli_expectation, Statevector};
use crate::{Error, Result};

/// How expectation values are extracted from the simulated state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Read expectations directly from the amplitudes.
    #[default]
    Exact,
    /// Estimate each Pauli expectation from `count` measurement shots. Shot
    /// noise is frozen per operator (seeds derive from `seed` and the
    /// operator's index), so the optimizer still sees a deterministic
    /// landscape.
    Shots { count: usize, seed: u64 },
}

/// One embedding training task: the (possibly thresholded) Pauli
/// decomposition of the Laplacian plus the ansatz shape and cost settings.
#[derive(Debug, Clone)]
pub struct EmbeddingProblem {
    decomposition: PauliDecomposition,
    node_qubits: usize,
    ancilla_qubits: usize,
    layers: usize,
    lambda: f64,
    mode: EvalMode,
    reconstructed: Array2<f64>,
}

impl EmbeddingProblem {
    /// Validates and caches the reconstructed operator matrix for the exact
    /// fast path. The ancilla register is limited to one or two qubits
    /// (embedding dimension 2 or 4), the sizes the pairwise-overlap recovery
    /// supports.
    pub fn new(
        decomposition: PauliDecomposition,
        node_qubits: usize,
        ancilla_qubits: usize,
        layers: usize,
        lambda: f64,
        mode: EvalMode,
    ) -> Result<EmbeddingProblem> {
        if decomposition.n_qubits() != node_qubits {
            return Err(Error::LengthMismatch {
                expected: node_qubits,
                got: decomposition.n_qubits(),
                context: "decomposition width vs node register",
            });
        }
        if ancilla_qubits == 0 || ancilla_qubits > 2 {
            return Err(Error::UnsupportedAncillaCount(ancilla_qubits));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda.to_string(),
                reason: "must be finite and nonnegative",
            });
        }
        if let EvalMode::Shots { count, .. } = mode {
            if count == 0 {
                return Err(Error::ZeroShots);
            }
        }
        let reconstructed = decomposition.reconstruct();
        Ok(EmbeddingProblem {
            decomposition,
            node_qubits,
            ancilla_qubits,
            layers,
            lambda,
            mode,
            reconstructed,
        })
    }

    pub fn decomposition(&self) -> &PauliDecomposition {
        &self.decomposition
    }

    pub fn node_qubits(&self) -> usize {
        self.node_qubits
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// Embedding dimension d = 2^(ancilla qubits).
    pub fn dimension(&self) -> usize {
        1 << self.ancilla_qubits
    }

    pub fn ansatz(&self) -> EmbeddingAnsatzSpec {
        EmbeddingAnsatzSpec::new(self.node_qubits, self.ancilla_qubits, self.layers)
    }

    /// The operator matrix the decomposition represents (after any
    /// thresholding), reconstructed once at construction.
    pub fn reconstructed_operator(&self) -> &Array2<f64> {
        &self.reconstructed
    }

    /// Sum of the d smallest eigenvalues of the reconstructed operator: the
    /// value an exact orthonormal block assignment would reach.
    pub fn theoretical_minimum(&self) -> Result<f64> {
        let eig = crate::baseline::sym_eigen(&self.reconstructed)?;
        Ok(eig.eigenvalues.iter().take(self.dimension()).sum())
    }
}

/// Result of one embedding training run.
#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    pub theta_opt: Vec<f64>,
    pub final_cost: f64,
    /// Laplacian expectation at `theta_opt`.
    pub expectation_term: f64,
    /// Orthogonality penalty at `theta_opt`, without the lambda factor.
    pub penalty_term: f64,
    /// 2^n x d matrix whose column i is amplitude block i normalized to unit
    /// length (zero when the block weight vanishes). Row v is node v's
    /// embedding vector.
    pub y: Array2<f64>,
    /// Block weights w_i >= 0 with sum of squares 1.
    pub weights: Vec<f64>,
    /// Best-so-far cost curve of the winning restart.
    pub cost_trace: Vec<(usize, f64)>,
    /// Restart index (0-based) that produced the best cost.
    pub best_restart: usize,
}

/// Simulates the ansatz at `theta`.
pub fn embedded_state(theta: &[f64], problem: &EmbeddingProblem) -> Result<Statevector> {
    Ok(problem.ansatz().build(theta)?.run())
}

/// Laplacian expectation ⟨ψ(θ)| (Id_ancilla ⊗ L̃) |ψ(θ)⟩.
///
/// Exact mode evaluates the quadratic form per amplitude block against the
/// cached reconstructed matrix; shot mode estimates every Pauli term from
/// measurements and sums them with their coefficients.
pub fn laplacian_expectation(theta: &[f64], problem: &EmbeddingProblem) -> Result<f64> {
    let sv = embedded_state(theta, problem)?;
    match problem.mode {
        EvalMode::Exact => Ok(block_quadratic_form(&sv, problem)),
        EvalMode::Shots { count, seed } => per_term_expectation(&sv, problem, |term_idx, s| {
            sampled_pauli_expectation(&sv, s, count, seed.wrapping_add(term_idx as u64))
        }),
    }
}

/// The per-Pauli-term route in exact mode: each decomposition string is
/// extended with identities over the ancillas and its expectation read
/// exactly. Terms are evaluated in parallel and summed in index order, so
/// the result is bit-identical run to run.
pub fn laplacian_expectation_per_term(
    theta: &[f64],
    problem: &EmbeddingProblem,
) -> Result<f64> {
    let sv = embedded_state(theta, problem)?;
    per_term_expectation(&sv, problem, |_, s| exact_pauli_expectation(&sv, s))
}

fn per_term_expectation(
    sv: &Statevector,
    problem: &EmbeddingProblem,
    estimate: impl Fn(usize, &PauliString) -> Result<f64> + Sync,
) -> Result<f64> {
    let total = problem.node_qubits + problem.ancilla_qubits;
    let values: Vec<f64> = problem
        .decomposition
        .terms()
        .par_iter()
        .enumerate()
        .map(|(idx, (h, s))| {
            let extended = s.extended(total)?;
            Ok(h * estimate(idx, &extended)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let _ = sv;
    Ok(values.iter().sum())
}

fn block_quadratic_form(sv: &Statevector, problem: &EmbeddingProblem) -> f64 {
    let block_len = 1usize << problem.node_qubits;
    let l = &problem.reconstructed;
    let mut acc = Complex64::new(0.0, 0.0);
    for b in 0..problem.dimension() {
        let block = &sv.amplitudes()[b * block_len..(b + 1) * block_len];
        for u in 0..block_len {
            if block[u].norm_sqr() == 0.0 {
                continue;
            }
            for v in 0..block_len {
                let luv = l[[u, v]];
                if luv != 0.0 {
                    acc += block[u].conj() * luv * block[v];
                }
            }
        }
    }
    acc.re
}

/// The six ancilla-register operators whose expectations recover all
/// pairwise block overlaps for d = 4 (for d = 2 only the first applies).
/// Factors are listed for the full register: identity on every node qubit,
/// the stated Paulis on the ancillas.
fn overlap_operators(problem: &EmbeddingProblem) -> Vec<((usize, usize), Vec<(usize, Pauli)>)> {
    let n = problem.node_qubits;
    match problem.ancilla_qubits {
        1 => vec![((0, 1), vec![(n, Pauli::X)])],
        2 => vec![
            // Overlaps (0,1) and (2,3) from X on ancilla 0 and Z1·X0.
            ((0, 1), vec![(n, Pauli::X)]),
            ((2, 3), vec![(n, Pauli::X), (n + 1, Pauli::Z)]),
            // Overlaps (0,2) and (1,3) from X on ancilla 1 and X1·Z0.
            ((0, 2), vec![(n + 1, Pauli::X)]),
            ((1, 3), vec![(n + 1, Pauli::X), (n, Pauli::Z)]),
            // Overlaps (0,3) and (1,2) from X1·X0 and Y1·Y0.
            ((0, 3), vec![(n, Pauli::X), (n + 1, Pauli::X)]),
            ((1, 2), vec![(n, Pauli::Y), (n + 1, Pauli::Y)]),
        ],
        _ => unreachable!("problem construction limits the ancilla register"),
    }
}

fn build_string(total: usize, placed: &[(usize, Pauli)]) -> PauliString {
    let mut factors = vec![Pauli::I; total];
    for &(q, p) in placed {
        factors[q] = p;
    }
    PauliString::new(factors)
}

/// Recovers every pairwise overlap `w_i w_j ⟨ψ_i|ψ_j⟩` (real amplitudes
/// assumed, as produced by the Ry-only ansatz) from ancilla-register Pauli
/// expectations supplied by `estimate`.
fn overlaps_from_expectations(
    problem: &EmbeddingProblem,
    estimate: impl Fn(usize, &PauliString) -> Result<f64>,
) -> Result<Vec<((usize, usize), f64)>> {
    let total = problem.node_qubits + problem.ancilla_qubits;
    let ops = overlap_operators(problem);
    let mut expectations = Vec::with_capacity(ops.len());
    for (idx, (_, placed)) in ops.iter().enumerate() {
        let s = build_string(total, placed);
        expectations.push(estimate(idx, &s)?);
    }
    match problem.ancilla_qubits {
        1 => Ok(vec![((0, 1), expectations[0] / 2.0)]),
        2 => {
            let [x0, z1x0, x1, x1z0, xx, yy] = [
                expectations[0],
                expectations[1],
                expectations[2],
                expectations[3],
                expectations[4],
                expectations[5],
            ];
            Ok(vec![
                ((0, 1), (x0 + z1x0) / 4.0),
                ((2, 3), (x0 - z1x0) / 4.0),
                ((0, 2), (x1 + x1z0) / 4.0),
                ((1, 3), (x1 - x1z0) / 4.0),
                ((0, 3), (xx - yy) / 4.0),
                ((1, 2), (xx + yy) / 4.0),
            ])
        }
        _ => unreachable!(),
    }
}

/// Orthogonality penalty Σ_{i<j} 2·|w_i w_j ⟨ψ_i|ψ_j⟩|², covering both
/// ordered pairs of each overlap. Exact mode reads block overlaps from the
/// amplitudes; shot mode recovers them from sampled ancilla-register Pauli
/// expectations.
pub fn orthogonality_penalty(theta: &[f64], problem: &EmbeddingProblem) -> Result<f64> {
    let sv = embedded_state(theta, problem)?;
    penalty_of_state(&sv, problem)
}

fn penalty_of_state(sv: &Statevector, problem: &EmbeddingProblem) -> Result<f64> {
    match problem.mode {
        EvalMode::Exact => {
            let d = problem.dimension();
            let mut acc = 0.0;
            for i in 0..d {
                for j in i + 1..d {
                    let overlap = sv.block_overlap(problem.node_qubits, i, j)?;
                    acc += 2.0 * overlap.norm_sqr();
                }
            }
            Ok(acc)
        }
        EvalMode::Shots { count, seed } => {
            // Operator seeds continue after the decomposition's term seeds so
            // no stream is reused across the two cost pieces.
            let base = seed.wrapping_add(problem.decomposition.term_count() as u64);
            let overlaps = overlaps_from_expectations(problem, |idx, s| {
                sampled_pauli_expectation(sv, s, count, base.wrapping_add(idx as u64))
            })?;
            Ok(overlaps.iter().map(|(_, o)| 2.0 * o * o).sum())
        }
    }
}

/// Training cost: Laplacian expectation plus lambda times the penalty.
pub fn cost(theta: &[f64], problem: &EmbeddingProblem) -> Result<f64> {
    let sv = embedded_state(theta, problem)?;
    let expectation = match problem.mode {
        EvalMode::Exact => block_quadratic_form(&sv, problem),
        EvalMode::Shots { count, seed } => per_term_expectation(&sv, problem, |idx, s| {
            sampled_pauli_expectation(&sv, s, count, seed.wrapping_add(idx as u64))
        })?,
    };
    Ok(expectation + problem.lambda * penalty_of_state(&sv, problem)?)
}

/// Reads the embedding matrix and block weights out of the state at `theta`:
/// `w_i` is the norm of amplitude block i and column i of Y is the block
/// divided by `w_i` (zero when `w_i` < 1e-12). Amplitudes are real for the
/// Ry ansatz, so only real parts are kept.
pub fn extract_embedding(
    theta: &[f64],
    problem: &EmbeddingProblem,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let sv = embedded_state(theta, problem)?;
    let block_len = 1usize << problem.node_qubits;
    let d = problem.dimension();
    let mut y = Array2::<f64>::zeros((block_len, d));
    let mut weights = Vec::with_capacity(d);
    for i in 0..d {
        let block = &sv.amplitudes()[i * block_len..(i + 1) * block_len];
        let w = block.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        weights.push(w);
        if w >= 1e-12 {
            for (v, amp) in block.iter().enumerate() {
                y[[v, i]] = amp.re / w;
            }
        }
    }
    Ok((y, weights))
}

/// Runs the derivative-free optimizer from `restarts` independent uniform
/// [0, 2π) starting points (all drawn upfront from `seed`) and keeps the
/// lowest-cost run, breaking ties by restart index. Restarts run in
/// parallel. Fails only if every restart fails.
pub fn train_embedding(
    problem: &EmbeddingProblem,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<EmbeddingResult> {
    if restarts == 0 {
        return Err(Error::InvalidParameter {
            name: "restarts",
            value: "0".into(),
            reason: "needs at least one restart",
        });
    }
    let dim = problem.ansatz().param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
        .collect();
    let cfg = OptimizeConfig {
        max_iter,
        seed,
        ..OptimizeConfig::default()
    };

    let runs: Vec<Result<crate::optimize::OptimizeResult>> = starts
        .par_iter()
        .map(|x0| minimize(|theta| cost(theta, problem).unwrap_or(f64::NAN), x0, &cfg))
        .collect();

    let mut best: Option<(usize, crate::optimize::OptimizeResult)> = None;
    let mut first_err = None;
    for (idx, run) in runs.into_iter().enumerate() {
        match run {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some((_, b)) => r.f_opt < b.f_opt,
                };
                if better {
                    best = Some((idx, r));
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    let (best_restart, run) = match best {
        Some(pair) => pair,
        None => return Err(first_err.expect("restarts >= 1")),
    };

    let (y, weights) = extract_embedding(&run.x_opt, problem)?;
    let expectation_term = laplacian_expectation(&run.x_opt, problem)?;
    let penalty_term = orthogonality_penalty(&run.x_opt, problem)?;
    Ok(EmbeddingResult {
        theta_opt: run.x_opt,
        final_cost: run.f_opt,
        expectation_term,
        penalty_term,
        y,
        weights,
        cost_trace: run.trace,
        best_restart,
    })
}

/// Downstream evaluation of one penalty weight: the test accuracy it led to
/// and the final training cost.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LambdaOutcome {
    pub accuracy: f64,
    pub final_cost: f64,
}

/// Record of a penalty-weight search.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LambdaSelection {
    pub chosen: f64,
    pub trials: Vec<(f64, LambdaOutcome)>,
}

/// Penalty-weight heuristic: try λ = 100 and accept it at accuracy ≥ 0.8.
/// Otherwise compare the final cost against the spectral minimum: a cost
/// below it means the blocks were not orthogonal (raise λ to 200), above it
/// means the penalty dominated (drop λ to 10). Returns the best-accuracy
/// trial.
pub fn select_lambda(
    problem: &EmbeddingProblem,
    mut evaluate: impl FnMut(f64) -> Result<LambdaOutcome>,
) -> Result<LambdaSelection> {
    let first = evaluate(100.0)?;
    let mut trials = vec![(100.0, first)];
    if first.accuracy >= 0.8 {
        return Ok(LambdaSelection {
            chosen: 100.0,
            trials,
        });
    }
    let floor = problem.theoretical_minimum()?;
    let second_lambda = if first.final_cost < floor { 200.0 } else { 10.0 };
    let second = evaluate(second_lambda)?;
    trials.push((second_lambda, second));
    let chosen = if second.accuracy > first.accuracy {
        second_lambda
    } else {
        100.0
    };
    Ok(LambdaSelection { chosen, trials })
}

/// Loads a classical embedding matrix into a statevector with the same block
/// layout the ansatz produces: amplitude `i·2^n + v` is `Y[v, i]` divided by
/// the Frobenius norm of Y. Row count must be a power of two and the column
/// count must match a supported ancilla register (2 or 4 columns).
pub fn amplitude_encode_embedding(y: &Array2<f64>) -> Result<Statevector> {
    let rows = y.nrows();
    let cols = y.ncols();
    if rows == 0 || !rows.is_power_of_two() {
        return Err(Error::SizeNotPowerOfTwo(rows));
    }
    if cols != 2 && cols != 4 {
        return Err(Error::UnsupportedAncillaCount(cols.trailing_zeros() as usize));
    }
    let fro = y.iter().map(|x| x * x).sum::<f64>().sqrt();
    if fro < 1e-12 {
        return Err(Error::InvalidParameter {
            name: "embedding",
            value: "zero matrix".into(),
            reason: "cannot amplitude-encode an all-zero embedding",
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); rows * cols];
    for i in 0..cols {
        for v in 0..rows {
            amps[i * rows + v] = Complex64::new(y[[v, i]] / fro, 0.0);
        }
    }
    Statevector::from_amplitudes(amps)
}
