//! Exact decomposition of real symmetric matrices into weighted Pauli
//! strings, coefficient thresholding, and coefficient statistics.
//!
//! A matrix of size 2ⁿ is split recursively into quadrants `[[A, B], [C, D]]`
//! and rewritten as `I⊗(A+D)/2 + Z⊗(A−D)/2 + X⊗(B+C)/2 + iY⊗(B−C)/2`, one
//! qubit per level. This costs `O(n·4ⁿ)` instead of the `O(16ⁿ)` of taking a
//! trace inner product per Pauli string, which makes 64-node graphs cheap.
//!
//! For real symmetric input every coefficient is real and every surviving
//! string contains an even number of Y factors; both facts are checked by the
//! test suite against an independent trace oracle.

use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;

use crate::{Error, Result};

/// Coefficients with absolute value below this are treated as numerical
/// zeros and pruned by [`decompose`].
pub const NUMERICAL_ZERO: f64 = 1e-12;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

/// Tensor product of single-qubit Paulis. `factors[0]` acts on qubit 0, the
/// least-significant bit of a basis-state index; the text rendering puts the
/// highest qubit first, so `"ZIX"` means Z on qubit 2 and X on qubit 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

/// Permutation-with-phase form of a Pauli string: column `j` of the matrix
/// has its single nonzero entry at row `j ^ flip` with value
/// `i^y_count * (-1)^popcount(j & phase_mask)`.
#[derive(Debug, Clone, Copy)]
pub struct PauliAction {
    flip: usize,
    phase_mask: usize,
    i_power: u8,
}

impl PauliAction {
    /// Row index and entry value of the single nonzero in column `col`.
    pub fn column(&self, col: usize) -> (usize, Complex64) {
        const I_POWERS: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let mut phase = I_POWERS[(self.i_power & 3) as usize];
        if (col & self.phase_mask).count_ones() % 2 == 1 {
            phase = -phase;
        }
        (col ^ self.flip, phase)
    }

    pub fn flip_mask(&self) -> usize {
        self.flip
    }
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Self {
        PauliString { factors }
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            factors: vec![Pauli::I; n_qubits],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn factor(&self, qubit: usize) -> Pauli {
        self.factors[qubit]
    }

    /// Number of Y factors.
    pub fn y_count(&self) -> usize {
        self.factors.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// True when every factor is the identity.
    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&p| p == Pauli::I)
    }

    /// Base-4 encoding with qubit `q` contributing `digit * 4^q`; sorting by
    /// this code equals lexicographic order of the text rendering.
    pub fn code(&self) -> usize {
        self.factors
            .iter()
            .enumerate()
            .map(|(q, p)| p.index() << (2 * q))
            .sum()
    }

    fn from_code(code: usize, n_qubits: usize) -> Self {
        const ORDER: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let factors = (0..n_qubits)
            .map(|q| ORDER[(code >> (2 * q)) & 3])
            .collect();
        PauliString { factors }
    }

    /// Same string acting on a wider register, with identity factors added on
    /// the new most-significant qubits.
    pub fn extended(&self, total_qubits: usize) -> Result<PauliString> {
        if total_qubits < self.factors.len() {
            return Err(Error::LengthMismatch {
                expected: self.factors.len(),
                got: total_qubits,
                context: "extended register must not shrink the string",
            });
        }
        let mut factors = self.factors.clone();
        factors.resize(total_qubits, Pauli::I);
        Ok(PauliString { factors })
    }

    /// Precomputed flip/phase data for applying this string to basis states.
    pub fn action(&self) -> PauliAction {
        let mut flip = 0usize;
        let mut phase_mask = 0usize;
        let mut i_power = 0u8;
        for (q, &p) in self.factors.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => flip |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    phase_mask |= 1 << q;
                    i_power = (i_power + 1) & 3;
                }
                Pauli::Z => phase_mask |= 1 << q,
            }
        }
        PauliAction {
            flip,
            phase_mask,
            i_power,
        }
    }

    /// Dense matrix of the string, built column by column from
    /// [`PauliString::action`].
    pub fn matrix(&self) -> Array2<Complex64> {
        let dim = 1usize << self.factors.len();
        let act = self.action();
        let mut m = Array2::zeros((dim, dim));
        for col in 0..dim {
            let (row, value) = act.column(col);
            m[[row, col]] = value;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in self.factors.iter().rev() {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Malformed {
                what: "pauli string",
                line: 0,
                detail: "empty string".into(),
            });
        }
        let mut factors = Vec::with_capacity(s.len());
        for c in s.chars().rev() {
            factors.push(Pauli::from_char(c).ok_or_else(|| Error::Malformed {
                what: "pauli string",
                line: 0,
                detail: format!("invalid character {c:?}"),
            })?);
        }
        Ok(PauliString { factors })
    }
}

/// Weighted sum of Pauli strings representing a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
    source_norm: f64,
}

/// Outcome of thresholding a decomposition at `t`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub kept: usize,
    pub dropped: usize,
    /// Retained fraction of the pre-threshold coefficient mass,
    /// `Σ_{|h|≥t} |h| / Σ |h|`.
    pub alpha: f64,
}

impl PauliDecomposition {
    /// Builds a decomposition from explicit terms, validating string lengths,
    /// duplicate strings, and zero or non-finite coefficients.
    pub fn new(n_qubits: usize, mut terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (h, s) in &terms {
            if s.num_qubits() != n_qubits {
                return Err(Error::LengthMismatch {
                    expected: n_qubits,
                    got: s.num_qubits(),
                    context: "pauli string length",
                });
            }
            if !h.is_finite() || *h == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "coefficient",
                    value: format!("{h} for {s}"),
                    reason: "coefficients must be finite and nonzero",
                });
            }
            if !seen.insert(s.code()) {
                return Err(Error::InvalidParameter {
                    name: "terms",
                    value: s.to_string(),
                    reason: "duplicate pauli string",
                });
            }
        }
        terms.sort_by_key(|(_, s)| s.code());
        let source_norm = terms.iter().map(|(h, _)| h.abs()).sum();
        Ok(PauliDecomposition {
            n_qubits,
            terms,
            source_norm,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Terms as (coefficient, string) pairs, sorted by string code.
    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Sum of |h| over the terms currently present.
    pub fn abs_sum(&self) -> f64 {
        self.terms.iter().map(|(h, _)| h.abs()).sum()
    }

    /// Sum of |h| before any thresholding was applied.
    pub fn source_norm(&self) -> f64 {
        self.source_norm
    }

    /// Dense matrix `Σ h · matrix(H)`. The accumulated imaginary part is
    /// checked to be below `1e-12` per entry and discarded.
    pub fn reconstruct(&self) -> Array2<f64> {
        let dim = 1usize << self.n_qubits;
        let mut acc: Array2<Complex64> = Array2::zeros((dim, dim));
        for (h, string) in &self.terms {
            let act = string.action();
            for col in 0..dim {
                let (row, value) = act.column(col);
                acc[[row, col]] += value * *h;
            }
        }
        acc.mapv(|z| {
            assert!(
                z.im.abs() < 1e-12,
                "reconstruction produced imaginary entry {z}"
            );
            z.re
        })
    }

    /// Keeps exactly the terms with `|h| ≥ t` (ties kept) and reports the
    /// retained coefficient mass relative to this decomposition's pre-threshold
    /// sum. The thresholded decomposition inherits `source_norm`.
    pub fn apply_threshold(&self, t: f64) -> Result<(PauliDecomposition, ThresholdReport)> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                value: t.to_string(),
                reason: "must be a nonnegative real",
            });
        }
        let mut kept_terms = Vec::new();
        let mut kept_sum = 0.0;
        for (h, s) in &self.terms {
            if h.abs() >= t {
                kept_terms.push((*h, s.clone()));
                kept_sum += h.abs();
            }
        }
        let report = ThresholdReport {
            threshold: t,
            kept: kept_terms.len(),
            dropped: self.terms.len() - kept_terms.len(),
            alpha: if self.source_norm > 0.0 {
                kept_sum / self.source_norm
            } else {
                0.0
            },
        };
        let dec = PauliDecomposition {
            n_qubits: self.n_qubits,
            terms: kept_terms,
            source_norm: self.source_norm,
        };
        Ok((dec, report))
    }

    /// Cumulative coefficient-mass curve: terms sorted by decreasing |h|,
    /// point k is `(k/N, Σ_{l≤k} |h_l| / Σ |h|)`. Ends at `(1, 1)`.
    pub fn coefficient_curve(&self) -> Result<Vec<(f64, f64)>> {
        if self.terms.is_empty() {
            return Err(Error::EmptyDecomposition);
        }
        let mut mags: Vec<f64> = self.terms.iter().map(|(h, _)| h.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = mags.iter().sum();
        let n = mags.len() as f64;
        let mut cum = 0.0;
        Ok(mags
            .iter()
            .enumerate()
            .map(|(k, m)| {
                cum += m;
                ((k + 1) as f64 / n, cum / total)
            })
            .collect())
    }

    /// Curve value at a fraction of terms, reading the point at
    /// `round(fraction * N)` terms (0 below the first point).
    pub fn curve_value_at(&self, fraction: f64) -> Result<f64> {
        let curve = self.coefficient_curve()?;
        let k = (fraction * curve.len() as f64).round() as usize;
        Ok(if k == 0 { 0.0 } else { curve[k - 1].1 })
    }

    /// Writes the `pauli,coefficient` CSV with 17-significant-digit
    /// coefficients, losslessly round-trippable.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("pauli,coefficient\n");
        for (h, s) in &self.terms {
            out.push_str(&format!("{s},{h:.16e}\n"));
        }
        std::fs::write(path, out).map_err(Error::io(path))
    }

    /// Reads a CSV written by [`PauliDecomposition::write_csv`]. The restored
    /// `source_norm` is the sum over the rows present in the file.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<PauliDecomposition> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::io(path))?;
        let mut terms: Vec<(f64, PauliString)> = Vec::new();
        let mut n_qubits = None;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(Error::io(path))?;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let (s, h) = line.split_once(',').ok_or_else(|| Error::Malformed {
                what: "decomposition csv",
                line: idx + 1,
                detail: "expected pauli,coefficient".into(),
            })?;
            let string: PauliString = s.trim().parse()?;
            let coeff: f64 = h.trim().parse().map_err(|e| Error::Malformed {
                what: "decomposition csv",
                line: idx + 1,
                detail: format!("coefficient: {e}"),
            })?;
            match n_qubits {
                None => n_qubits = Some(string.num_qubits()),
                Some(n) if n != string.num_qubits() => {
                    return Err(Error::Malformed {
                        what: "decomposition csv",
                        line: idx + 1,
                        detail: format!(
                            "string length {} differs from earlier rows ({n})",
                            string.num_qubits()
                        ),
                    });
                }
                _ => {}
            }
            terms.push((coeff, string));
        }
        let n_qubits = n_qubits.ok_or(Error::EmptyDecomposition)?;
        PauliDecomposition::new(n_qubits, terms)
    }
}

/// Decomposes a real symmetric matrix of size 2ⁿ into Pauli strings by the
/// quadrant recursion, pruning coefficients below [`NUMERICAL_ZERO`].
pub fn decompose(matrix: &Array2<f64>) -> Result<PauliDecomposition> {
    let n_qubits = validate_input(matrix)?;
    let raw = recurse_all(matrix, n_qubits);
    let mut terms = Vec::new();
    let mut source_norm = 0.0;
    for (code, h) in raw.into_iter().enumerate() {
        debug_assert!(h.im.abs() < 1e-12, "complex coefficient {h} at code {code}");
        if h.re.abs() >= NUMERICAL_ZERO {
            terms.push((h.re, PauliString::from_code(code, n_qubits)));
            source_norm += h.re.abs();
        }
    }
    Ok(PauliDecomposition {
        n_qubits,
        terms,
        source_norm,
    })
}

/// All 4ⁿ coefficients of the quadrant recursion before any pruning, as
/// (complex coefficient, string) pairs sorted by string code. Exposed so the
/// reality and Y-parity guarantees can be checked on the raw output.
pub fn decompose_raw(matrix: &Array2<f64>) -> Result<Vec<(Complex64, PauliString)>> {
    let n_qubits = validate_input(matrix)?;
    let raw = recurse_all(matrix, n_qubits);
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(code, h)| (h, PauliString::from_code(code, n_qubits)))
        .collect())
}

fn validate_input(matrix: &Array2<f64>) -> Result<usize> {
    let (rows, cols) = matrix.dim();
    if rows != cols || !rows.is_power_of_two() {
        return Err(Error::SizeNotPowerOfTwo(if rows == cols {
            rows
        } else {
            rows.max(cols)
        }));
    }
    for i in 0..rows {
        for j in (i + 1)..rows {
            let delta = (matrix[[i, j]] - matrix[[j, i]]).abs();
            if delta > 1e-10 {
                return Err(Error::NotSymmetric { i, j, delta });
            }
        }
    }
    Ok(rows.trailing_zeros() as usize)
}

/// Returns all 4ⁿ coefficients indexed by string code.
fn recurse_all(matrix: &Array2<f64>, n_qubits: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 1 << (2 * n_qubits)];
    let complex = matrix.mapv(|x| Complex64::new(x, 0.0));
    recurse(&complex, n_qubits, 0, &mut out);
    out
}

fn recurse(m: &Array2<Complex64>, level: usize, code: usize, out: &mut Vec<Complex64>) {
    if level == 0 {
        out[code] = m[[0, 0]];
        return;
    }
    let h = m.nrows() / 2;
    let a = m.slice(ndarray::s![..h, ..h]);
    let b = m.slice(ndarray::s![..h, h..]);
    let c = m.slice(ndarray::s![h.., ..h]);
    let d = m.slice(ndarray::s![h.., h..]);
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    let digit = 1usize << (2 * (level - 1));
    let sub_i = (&a + &d).mapv(|z| z * half);
    let sub_x = (&b + &c).mapv(|z| z * half);
    let sub_y = (&b - &c).mapv(|z| z * half_i);
    let sub_z = (&a - &d).mapv(|z| z * half);
    recurse(&sub_i, level - 1, code + Pauli::I.index() * digit, out);
    recurse(&sub_x, level - 1, code + Pauli::X.index() * digit, out);
    recurse(&sub_y, level - 1, code + Pauli::Y.index() * digit, out);
    recurse(&sub_z, level - 1, code + Pauli::Z.index() * digit, out);
}

/// Mean term count of the decompositions of `n_graphs` random graphs with the
/// given node count and density, using seeds `seed .. seed + n_graphs`. Graphs
/// are padded to a power-of-two node count before decomposition.
pub fn mean_term_count(n_nodes: usize, density: f64, n_graphs: usize, seed: u64) -> Result<f64> {
    if n_graphs == 0 {
        return Err(Error::InvalidParameter {
            name: "n_graphs",
            value: "0".into(),
            reason: "need at least one graph",
        });
    }
    let mut total = 0usize;
    for i in 0..n_graphs {
        let g = crate::graph::Graph::random(n_nodes, density, seed + i as u64)?;
        total += decompose(&g.pad_to_power_of_two().laplacian())?.term_count();
    }
    Ok(total as f64 / n_graphs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use ndarray::arr2;
    use proptest::prelude::*;

    /// Independent dense matrix for a Pauli string, built from explicit 2x2
    /// matrices with Kronecker products folded from the highest qubit down.
    fn kron_matrix(s: &PauliString) -> Array2<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let single = |p: Pauli| -> Array2<Complex64> {
            match p {
                Pauli::I => arr2(&[[one, zero], [zero, one]]),
                Pauli::X => arr2(&[[zero, one], [one, zero]]),
                Pauli::Y => arr2(&[[zero, -i], [i, zero]]),
                Pauli::Z => arr2(&[[one, zero], [zero, -one]]),
            }
        };
        let mut m = arr2(&[[one]]);
        for &p in s.factors().iter().rev() {
            m = kron(&m, &single(p));
        }
        m
    }

    fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
        let (ar, ac) = a.dim();
        let (br, bc) = b.dim();
        let mut out = Array2::zeros((ar * br, ac * bc));
        for ia in 0..ar {
            for ja in 0..ac {
                for ib in 0..br {
                    for jb in 0..bc {
                        out[[ia * br + ib, ja * bc + jb]] = a[[ia, ja]] * b[[ib, jb]];
                    }
                }
            }
        }
        out
    }

    /// Trace oracle: h = tr(matrix(H) · L) / 2^n.
    fn trace_coefficient(s: &PauliString, l: &Array2<f64>) -> Complex64 {
        let m = kron_matrix(s);
        let dim = l.nrows();
        let mut tr = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            for k in 0..dim {
                tr += m[[r, k]] * l[[k, r]];
            }
        }
        tr / dim as f64
    }

    fn all_strings(n: usize) -> impl Iterator<Item = PauliString> {
        (0..(1usize << (2 * n))).map(move |code| PauliString::from_code(code, n))
    }

    #[test]
    fn two_node_path_matches_trace_oracle() {
        let l = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let dec = decompose(&l).unwrap();
        let mut expected: Vec<(f64, String)> = Vec::new();
        for s in all_strings(1) {
            let h = trace_coefficient(&s, &l);
            assert!(h.im.abs() < 1e-14);
            if h.re.abs() >= NUMERICAL_ZERO {
                expected.push((h.re, s.to_string()));
            }
        }
        let got: Vec<(f64, String)> = dec
            .terms()
            .iter()
            .map(|(h, s)| (*h, s.to_string()))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec![(1.0, "I".to_string()), (-1.0, "X".to_string())]);
    }

    #[test]
    fn zero_matrix_decomposes_to_nothing() {
        let dec = decompose(&Array2::zeros((4, 4))).unwrap();
        assert_eq!(dec.term_count(), 0);
        assert_eq!(dec.source_norm(), 0.0);
    }

    #[test]
    fn four_node_path_matches_trace_oracle_on_all_16_strings() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let l = g.laplacian();
        let dec = decompose(&l).unwrap();
        for s in all_strings(2) {
            let want = trace_coefficient(&s, &l);
            assert!(want.im.abs() < 1e-14);
            let got = dec
                .terms()
                .iter()
                .find(|(_, ts)| ts == &s)
                .map(|(h, _)| *h)
                .unwrap_or(0.0);
            let reference = if want.re.abs() >= NUMERICAL_ZERO {
                want.re
            } else {
                0.0
            };
            assert!(
                (got - reference).abs() < 1e-12,
                "coefficient of {s}: got {got}, oracle {reference}"
            );
        }
        let coeff = |name: &str| {
            let s: PauliString = name.parse().unwrap();
            dec.terms()
                .iter()
                .find(|(_, ts)| ts == &s)
                .map(|(h, _)| *h)
                .unwrap_or(0.0)
        };
        assert_eq!(coeff("II"), 1.5);
        assert_eq!(coeff("IX"), -1.0);
        assert_eq!(coeff("ZZ"), -0.5);
    }

    #[test]
    fn complete_graph_matches_trace_oracle() {
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let l = g.laplacian();
        let dec = decompose(&l).unwrap();
        for (h, s) in dec.terms() {
            let want = trace_coefficient(s, &l).re;
            assert!((h - want).abs() < 1e-12, "coefficient of {s}");
        }
    }

    #[test]
    fn raw_output_is_real_with_even_y_parity() {
        for seed in 0..5 {
            let g = Graph::random(8, 0.5, seed).unwrap();
            let raw = decompose_raw(&g.laplacian()).unwrap();
            assert_eq!(raw.len(), 64);
            for (h, s) in raw {
                assert!(h.im.abs() < 1e-12, "imaginary coefficient {h} at {s}");
                if s.y_count() % 2 == 1 {
                    assert!(h.norm() < 1e-12, "odd-Y string {s} has |h| = {}", h.norm());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input_shapes() {
        assert!(matches!(
            decompose(&Array2::zeros((3, 3))),
            Err(Error::SizeNotPowerOfTwo(3))
        ));
        assert!(matches!(
            decompose(&Array2::zeros((2, 4))),
            Err(Error::SizeNotPowerOfTwo(4))
        ));
        let asym = arr2(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(decompose(&asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn single_z_term_reconstructs_to_diag() {
        let dec = PauliDecomposition::new(1, vec![(1.0, "Z".parse().unwrap())]).unwrap();
        assert_eq!(dec.reconstruct(), arr2(&[[1.0, 0.0], [0.0, -1.0]]));
    }

    #[test]
    fn threshold_keeps_ties_and_reports_alpha() {
        let l = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap().laplacian();
        let dec = decompose(&l).unwrap();

        let (full, report) = dec.apply_threshold(0.0).unwrap();
        assert_eq!(full.terms(), dec.terms());
        assert_eq!(report.alpha, 1.0);
        assert_eq!(report.dropped, 0);

        // |h| = 0.5 exists in this decomposition; a threshold exactly there
        // must keep it.
        let (tied, _) = dec.apply_threshold(0.5).unwrap();
        assert!(tied.terms().iter().any(|(h, _)| h.abs() == 0.5));

        let max = dec.terms().iter().map(|(h, _)| h.abs()).fold(0.0, f64::max);
        let (empty, report) = dec.apply_threshold(max + 1.0).unwrap();
        assert_eq!(empty.term_count(), 0);
        assert_eq!(report.alpha, 0.0);
        assert_eq!(report.kept, 0);
        assert_eq!(report.dropped, dec.term_count());

        assert!(dec.apply_threshold(-0.1).is_err());
    }

    #[test]
    fn alpha_is_nonincreasing_in_threshold() {
        let g = Graph::sbm(16, 2, 0.7, 0.05, 2).unwrap();
        let dec = decompose(&g.laplacian()).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..40 {
            let t = i as f64 * 0.05;
            let (kept, report) = dec.apply_threshold(t).unwrap();
            assert!(report.alpha <= last + 1e-15, "alpha rose at t = {t}");
            assert_eq!(report.kept + report.dropped, dec.term_count());
            assert_eq!(kept.term_count(), report.kept);
            last = report.alpha;
        }
    }

    #[test]
    fn coefficient_curve_shapes() {
        let single = PauliDecomposition::new(1, vec![(0.7, "Z".parse().unwrap())]).unwrap();
        assert_eq!(single.coefficient_curve().unwrap(), vec![(1.0, 1.0)]);

        let uniform = PauliDecomposition::new(
            2,
            vec![
                (0.5, "II".parse().unwrap()),
                (-0.5, "IX".parse().unwrap()),
                (0.5, "XI".parse().unwrap()),
                (-0.5, "ZZ".parse().unwrap()),
            ],
        )
        .unwrap();
        let curve = uniform.coefficient_curve().unwrap();
        for (k, (x, y)) in curve.iter().enumerate() {
            let frac = (k + 1) as f64 / 4.0;
            assert!((x - frac).abs() < 1e-15);
            assert!((y - frac).abs() < 1e-15);
        }

        let empty = decompose(&Array2::zeros((2, 2))).unwrap();
        assert!(matches!(
            empty.coefficient_curve(),
            Err(Error::EmptyDecomposition)
        ));
    }

    #[test]
    fn term_count_examples() {
        let edgeless = decompose(&Array2::zeros((8, 8))).unwrap();
        assert_eq!(edgeless.term_count(), 0);
        let path = decompose(&arr2(&[[1.0, -1.0], [-1.0, 1.0]])).unwrap();
        assert_eq!(path.term_count(), 2);
    }

    #[test]
    fn mean_term_count_tracks_edge_count() {
        // The claim "number of terms is approximately equal to the number of
        // edges" is qualitative: measured ratios sit near 1.1 at density 0.7
        // and near 1.7 at density 0.5, so assert same order of magnitude
        // only, plus the stronger observed fact that the count depends
        // little on density at fixed size.
        let n_graphs = 10;
        let mean_terms = mean_term_count(32, 0.5, n_graphs, 100).unwrap();
        let mut mean_edges = 0.0;
        for seed in 100..100 + n_graphs as u64 {
            mean_edges += Graph::random(32, 0.5, seed).unwrap().num_edges() as f64;
        }
        mean_edges /= n_graphs as f64;
        let ratio = mean_terms / mean_edges;
        assert!(
            (0.5..=3.0).contains(&ratio),
            "terms/edges ratio {ratio} (mean terms {mean_terms}, mean edges {mean_edges})"
        );

        let sparse = mean_term_count(32, 0.3, n_graphs, 100).unwrap();
        let dense = mean_term_count(32, 0.7, n_graphs, 100).unwrap();
        let spread = (sparse - dense).abs() / mean_terms;
        assert!(
            spread < 0.2,
            "term count should depend little on density: {sparse} vs {dense}"
        );
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::sbm(16, 2, 0.7, 0.05, 9).unwrap();
        let dec = decompose(&g.laplacian()).unwrap();
        let path = dir.path().join("decomposition.csv");
        dec.write_csv(&path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("pauli,coefficient"));
        let first = lines.next().unwrap();
        assert!(first.split_once(',').is_some());

        let back = PauliDecomposition::read_csv(&path).unwrap();
        assert_eq!(back.n_qubits(), dec.n_qubits());
        assert_eq!(back.terms(), dec.terms());
    }

    #[test]
    fn string_rendering_round_trips_and_orders() {
        let s: PauliString = "ZIX".parse().unwrap();
        assert_eq!(s.factor(0), Pauli::X);
        assert_eq!(s.factor(1), Pauli::I);
        assert_eq!(s.factor(2), Pauli::Z);
        assert_eq!(s.to_string(), "ZIX");
        assert!("ZQX".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());

        let ext = s.extended(5).unwrap();
        assert_eq!(ext.to_string(), "IIZIX");
        assert!(s.extended(2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn round_trip_reconstructs_laplacian(seed in 0u64..1000, n in 3usize..13) {
            let g = Graph::random(n, 0.5, seed).unwrap().pad_to_power_of_two();
            let l = g.laplacian();
            let dec = decompose(&l).unwrap();
            let back = dec.reconstruct();
            let max_err = (&back - &l).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(max_err < 1e-10, "max reconstruction error {max_err}");
            for (h, s) in dec.terms() {
                prop_assert!(h.abs() >= NUMERICAL_ZERO);
                prop_assert_eq!(s.y_count() % 2, 0, "odd-Y term {} survived", s);
            }
        }

        #[test]
        fn string_code_round_trips(code in 0usize..4096) {
            let s = PauliString::from_code(code, 6);
            prop_assert_eq!(s.code(), code);
            let parsed: PauliString = s.to_string().parse().unwrap();
            prop_assert_eq!(parsed, s);
        }

        #[test]
        fn matrix_matches_kron_oracle(code in 0usize..256) {
            let s = PauliString::from_code(code, 4);
            let fast = s.matrix();
            let slow = kron_matrix(&s);
            for (a, b) in fast.iter().zip(slow.iter()) {
                prop_assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
