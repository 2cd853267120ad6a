//! Dense statevector simulator for the small registers this pipeline needs
//! (at most a handful of qubits), with exact and shot-based Pauli expectation
//! estimation.
//!
//! Basis-state index bit `q` is qubit `q`, so qubit 0 is the least-significant
//! bit. The embedding-dimension (ancilla) register always sits on the
//! most-significant qubits, which makes each `w_i |ψ_i⟩` block a contiguous
//! slice of the amplitude vector.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pauli::{Pauli, PauliString};
use crate::{Error, Result};

/// Single gate from the supported set. Angles are radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H { target: usize },
    X { target: usize },
    CX { control: usize, target: usize },
    Ry { theta: f64, target: usize },
    Rx { theta: f64, target: usize },
    U3 { theta: f64, phi: f64, lambda: f64, target: usize },
}

impl Gate {
    pub fn h(target: usize) -> Gate {
        Gate::H { target }
    }

    pub fn x(target: usize) -> Gate {
        Gate::X { target }
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::CX { control, target }
    }

    pub fn ry(theta: f64, target: usize) -> Gate {
        Gate::Ry { theta, target }
    }

    pub fn rx(theta: f64, target: usize) -> Gate {
        Gate::Rx { theta, target }
    }

    pub fn u3(theta: f64, phi: f64, lambda: f64, target: usize) -> Gate {
        Gate::U3 {
            theta,
            phi,
            lambda,
            target,
        }
    }

    fn target(&self) -> usize {
        match *self {
            Gate::H { target }
            | Gate::X { target }
            | Gate::CX { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rx { target, .. }
            | Gate::U3 { target, .. } => target,
        }
    }

    fn control(&self) -> Option<usize> {
        match *self {
            Gate::CX { control, .. } => Some(control),
            _ => None,
        }
    }

    /// 2x2 matrix of the single-qubit gates, row-major.
    fn single_qubit_matrix(&self) -> Option<[Complex64; 4]> {
        let re = |x: f64| Complex64::new(x, 0.0);
        match *self {
            Gate::H { .. } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Some([re(s), re(s), re(s), re(-s)])
            }
            Gate::X { .. } => Some([re(0.0), re(1.0), re(1.0), re(0.0)]),
            Gate::Ry { theta, .. } => {
                let (sin, cos) = (theta / 2.0).sin_cos();
                Some([re(cos), re(-sin), re(sin), re(cos)])
            }
            Gate::Rx { theta, .. } => {
                let (sin, cos) = (theta / 2.0).sin_cos();
                let mi = Complex64::new(0.0, -1.0);
                Some([re(cos), mi * sin, mi * sin, re(cos)])
            }
            Gate::U3 {
                theta, phi, lambda, ..
            } => {
                let (sin, cos) = (theta / 2.0).sin_cos();
                Some([
                    re(cos),
                    -Complex64::from_polar(sin, lambda),
                    Complex64::from_polar(sin, phi),
                    Complex64::from_polar(cos, phi + lambda),
                ])
            }
            Gate::CX { .. } => None,
        }
    }
}

/// Ordered gate list over a fixed-width register. Gates are validated when
/// pushed, so running a circuit cannot fail.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Circuit {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let target = gate.target();
        if target >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: target,
                num_qubits: self.n_qubits,
            });
        }
        if let Some(control) = gate.control() {
            if control >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: control,
                    num_qubits: self.n_qubits,
                });
            }
            if control == target {
                return Err(Error::ControlEqualsTarget(target));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Same gate sequence on a wider register, with every qubit index moved
    /// up by `offset`.
    pub fn shifted(&self, total_qubits: usize, offset: usize) -> Result<Circuit> {
        let mut out = Circuit::new(total_qubits);
        for gate in &self.gates {
            let mut g = *gate;
            match &mut g {
                Gate::H { target }
                | Gate::X { target }
                | Gate::Ry { target, .. }
                | Gate::Rx { target, .. }
                | Gate::U3 { target, .. } => *target += offset,
                Gate::CX { control, target } => {
                    *control += offset;
                    *target += offset;
                }
            }
            out.push(g)?;
        }
        Ok(out)
    }

    /// Applies the gates in order to |0…0⟩.
    pub fn run(&self) -> Statevector {
        let mut sv = Statevector::zero_state(self.n_qubits);
        for gate in &self.gates {
            sv.apply_in_place(gate);
        }
        sv
    }
}

/// Unit-norm complex amplitude vector over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// The computational basis state |0…0⟩.
    pub fn zero_state(n_qubits: usize) -> Statevector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    /// Wraps an explicit amplitude vector; the length must be a power of two
    /// and the norm must be 1 within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Statevector> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::SizeNotPowerOfTwo(amps.len()));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let deviation = (norm_sq.sqrt() - 1.0).abs();
        if deviation > 1e-10 {
            return Err(Error::NotNormalized(deviation));
        }
        Ok(Statevector {
            n_qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Returns a new state with the gate applied.
    pub fn apply_gate(&self, gate: &Gate) -> Result<Statevector> {
        let max = gate.target().max(gate.control().unwrap_or(0));
        if max >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: max,
                num_qubits: self.n_qubits,
            });
        }
        if gate.control() == Some(gate.target()) {
            return Err(Error::ControlEqualsTarget(gate.target()));
        }
        let mut out = self.clone();
        out.apply_in_place(gate);
        Ok(out)
    }

    fn apply_in_place(&mut self, gate: &Gate) {
        match gate {
            Gate::CX { control, target } => {
                let cbit = 1usize << control;
                let tbit = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
            _ => {
                let [m00, m01, m10, m11] = gate
                    .single_qubit_matrix()
                    .expect("non-CX gates have a 2x2 matrix");
                let tbit = 1usize << gate.target();
                for i in 0..self.amps.len() {
                    if i & tbit == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | tbit];
                        self.amps[i] = m00 * a + m01 * b;
                        self.amps[i | tbit] = m10 * a + m11 * b;
                    }
                }
            }
        }
    }

    /// Probability weight of each basis state.
    fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Dot product of amplitude blocks `i` and `j` when the register is read
    /// as a column of `2^(n_qubits - n_node_qubits)` blocks of length
    /// `2^n_node_qubits`: returns `w_i w_j ⟨ψ_i|ψ_j⟩` with the bra on block
    /// `i`.
    pub fn block_overlap(&self, n_node_qubits: usize, i: usize, j: usize) -> Result<Complex64> {
        if n_node_qubits > self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: n_node_qubits,
                num_qubits: self.n_qubits,
            });
        }
        let block_len = 1usize << n_node_qubits;
        let blocks = self.amps.len() / block_len;
        for idx in [i, j] {
            if idx >= blocks {
                return Err(Error::InvalidParameter {
                    name: "block index",
                    value: idx.to_string(),
                    reason: "must be below 2^(ancilla qubits)",
                });
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..block_len {
            acc += self.amps[i * block_len + t].conj() * self.amps[j * block_len + t];
        }
        Ok(acc)
    }

    /// Debug dump of the amplitudes as an `index,re,im` CSV.
    pub fn write_amplitudes_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(Error::io(path))?;
        let mut out = String::from("index,re,im\n");
        for (i, a) in self.amps.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", a.re, a.im));
        }
        file.write_all(out.as_bytes()).map_err(Error::io(path))
    }
}

/// Exact ⟨ψ|σ|ψ⟩ straight from the amplitudes, using the
/// permutation-with-phase structure of Pauli strings.
pub fn exact_pauli_expectation(sv: &Statevector, p: &PauliString) -> Result<f64> {
    if p.num_qubits() != sv.n_qubits() {
        return Err(Error::LengthMismatch {
            expected: sv.n_qubits(),
            got: p.num_qubits(),
            context: "pauli string length vs register width",
        });
    }
    let action = p.action();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, amp) in sv.amps.iter().enumerate() {
        let (row, phase) = action.column(i);
        acc += sv.amps[row].conj() * phase * amp;
    }
    Ok(acc.re)
}

/// Shot-based estimate of ⟨ψ|σ|ψ⟩: rotates X factors with H and Y factors
/// with RX(π/2) into the computational basis, samples bitstrings, and
/// averages eigenvalues `λ_v = Π α_j` where `α_j = -1` iff bit `j` is 1 and
/// `σ^j` is not the identity. Deterministic per seed.
pub fn sampled_pauli_expectation(
    sv: &Statevector,
    p: &PauliString,
    shots: usize,
    seed: u64,
) -> Result<f64> {
    if p.num_qubits() != sv.n_qubits() {
        return Err(Error::LengthMismatch {
            expected: sv.n_qubits(),
            got: p.num_qubits(),
            context: "pauli string length vs register width",
        });
    }
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let mut rotated = sv.clone();
    let mut sign_mask = 0usize;
    for (q, &factor) in p.factors().iter().enumerate() {
        match factor {
            Pauli::I => {}
            Pauli::X => {
                rotated.apply_in_place(&Gate::h(q));
                sign_mask |= 1 << q;
            }
            Pauli::Y => {
                rotated.apply_in_place(&Gate::rx(std::f64::consts::FRAC_PI_2, q));
                sign_mask |= 1 << q;
            }
            Pauli::Z => sign_mask |= 1 << q,
        }
    }
    let sampler = Sampler::new(&rotated.probabilities());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0i64;
    for _ in 0..shots {
        let outcome = sampler.draw(&mut rng);
        if (outcome & sign_mask).count_ones() % 2 == 0 {
            total += 1;
        } else {
            total -= 1;
        }
    }
    Ok(total as f64 / shots as f64)
}

/// Samples the marginal distribution over the named qubits `shots` times.
/// Keys are bitstrings with `qubits[0]` as the rightmost character.
/// Deterministic per seed.
pub fn measure_counts(
    sv: &Statevector,
    qubits: &[usize],
    shots: usize,
    seed: u64,
) -> Result<BTreeMap<String, usize>> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let mut seen = std::collections::HashSet::new();
    for &q in qubits {
        if q >= sv.n_qubits() {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: sv.n_qubits(),
            });
        }
        if !seen.insert(q) {
            return Err(Error::InvalidParameter {
                name: "qubits",
                value: q.to_string(),
                reason: "duplicate measured qubit",
            });
        }
    }
    let sampler = Sampler::new(&sv.probabilities());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..shots {
        let outcome = sampler.draw(&mut rng);
        let key: String = qubits
            .iter()
            .rev()
            .map(|&q| if outcome & (1 << q) != 0 { '1' } else { '0' })
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Inverse-CDF sampler over a fixed discrete distribution.
struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(probabilities: &[f64]) -> Sampler {
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in probabilities {
            acc += p;
            cumulative.push(acc);
        }
        Sampler { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty distribution");
        let r = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}
