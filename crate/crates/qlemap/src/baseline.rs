//! Classical reference pipeline: a cyclic Jacobi eigensolver, the classical
//! Laplacian eigenmap, and an unregularized logistic regression trained by
//! full-batch gradient descent.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Full spectrum of a real symmetric matrix. Column `i` of `eigenvectors`
/// belongs to `eigenvalues[i]`; eigenvalues ascend, eigenvectors are
/// orthonormal, and each vector's first component above 1e-10 in magnitude is
/// positive. Ties in the eigenvalue sort are broken by lexicographic order of
/// the sign-normalized vectors so repeated eigenvalues still yield one
/// reproducible basis.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<f64>,
}

const OFF_DIAGONAL_TARGET: f64 = 1e-12;
const MAX_JACOBI_SWEEPS: usize = 100;

/// Diagonalizes a symmetric matrix with cyclic Jacobi rotations, sweeping
/// until the off-diagonal Frobenius norm drops below 1e-12.
pub fn sym_eigen(m: &Array2<f64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidParameter {
            name: "matrix",
            value: format!("{}x{}", m.nrows(), m.ncols()),
            reason: "must be square and nonempty",
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            let delta = (m[[i, j]] - m[[j, i]]).abs();
            if delta > 1e-10 {
                return Err(Error::NotSymmetric { i, j, delta });
            }
        }
    }

    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < OFF_DIAGONAL_TARGET {
            break;
        }
        if sweeps >= MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() < OFF_DIAGONAL_TARGET / (n * n) as f64 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
    }

    let mut columns: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[[i, j]]).collect();
            normalize_sign(&mut col);
            (a[[j, j]], col)
        })
        .collect();
    columns.sort_by(|(la, va), (lb, vb)| {
        la.total_cmp(lb).then_with(|| {
            va.iter()
                .zip(vb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let eigenvalues: Vec<f64> = columns.iter().map(|(l, _)| *l).collect();
    let mut eigenvectors = Array2::<f64>::zeros((n, n));
    for (j, (_, col)) in columns.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            eigenvectors[[i, j]] = x;
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[[i, j]] * a[[i, j]];
            }
        }
    }
    acc.sqrt()
}

fn normalize_sign(col: &mut [f64]) {
    for &x in col.iter() {
        if x.abs() > 1e-10 {
            if x < 0.0 {
                col.iter_mut().for_each(|y| *y = -*y);
            }
            return;
        }
    }
}

/// Eigenvector columns at sorted spectrum positions 1..=d (position 0, the
/// constant direction on connected graphs, is dropped). Requires
/// `1 <= d < matrix size`.
pub fn classical_eigenmap(l: &Array2<f64>, d: usize) -> Result<Array2<f64>> {
    let n = l.nrows();
    if d == 0 || d >= n {
        return Err(Error::DimensionOutOfRange {
            d,
            max: n.saturating_sub(1),
            size: n,
        });
    }
    let eig = sym_eigen(l)?;
    let mut y = Array2::<f64>::zeros((n, d));
    for j in 0..d {
        for i in 0..n {
            y[[i, j]] = eig.eigenvectors[[i, j + 1]];
        }
    }
    Ok(y)
}

/// Linear logistic model over embedding rows. `degenerate` marks a constant
/// predictor produced from a single-class training set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub degenerate: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains by full-batch gradient descent on binary cross-entropy, stopping
/// when the gradient norm drops below 1e-6 or `epochs` is exhausted.
/// Weights start at U(-0.01, 0.01) draws from the seed; the bias starts at 0.
pub fn logistic_train(
    y: &Array2<f64>,
    labels: &BTreeMap<usize, u8>,
    train_nodes: &[usize],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<LogisticModel> {
    if train_nodes.is_empty() {
        return Err(Error::EmptyNodeSet("training set"));
    }
    let dim = y.ncols();
    let mut rows = Vec::with_capacity(train_nodes.len());
    for &node in train_nodes {
        if node >= y.nrows() {
            return Err(Error::NodeOutOfRange {
                node,
                num_nodes: y.nrows(),
            });
        }
        let label = *labels.get(&node).ok_or(Error::MissingLabel(node))?;
        if label > 1 {
            return Err(Error::NonBinaryLabel {
                node,
                label: i64::from(label),
            });
        }
        rows.push((node, f64::from(label)));
    }

    let first = rows[0].1;
    if rows.iter().all(|&(_, t)| t == first) {
        return Ok(LogisticModel {
            weights: vec![0.0; dim],
            bias: if first > 0.5 { 25.0 } else { -25.0 },
            degenerate: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut bias = 0.0;
    let m = rows.len() as f64;
    for _ in 0..epochs {
        let mut grad_w = vec![0.0; dim];
        let mut grad_b = 0.0;
        for &(node, target) in &rows {
            let z = bias
                + weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * y[[node, j]])
                    .sum::<f64>();
            let err = sigmoid(z) - target;
            for j in 0..dim {
                grad_w[j] += err * y[[node, j]];
            }
            grad_b += err;
        }
        grad_w.iter_mut().for_each(|g| *g /= m);
        grad_b /= m;
        let grad_norm =
            (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if grad_norm < 1e-6 {
            break;
        }
        for j in 0..dim {
            weights[j] -= lr * grad_w[j];
        }
        bias -= lr * grad_b;
    }
    Ok(LogisticModel {
        weights,
        bias,
        degenerate: false,
    })
}

/// Probability of class 1 for one embedding row.
pub fn logistic_predict(model: &LogisticModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.weights.len() {
        return Err(Error::LengthMismatch {
            expected: model.weights.len(),
            got: row.len(),
            context: "logistic feature dimension",
        });
    }
    let z = model.bias
        + model
            .weights
            .iter()
            .zip(row)
            .map(|(w, x)| w * x)
            .sum::<f64>();
    Ok(sigmoid(z))
}
