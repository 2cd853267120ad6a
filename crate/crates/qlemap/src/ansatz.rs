//! Parameterized circuit families: a real-amplitude Ry ansatz that prepares
//! the embedding state over the node+ancilla register, and a small
//! general-unitary ansatz used as the trainable classifier head on the
//! ancilla register.
//!
//! Parameter vectors are flat `Vec<f64>` in layer-major, qubit-minor order;
//! the `param_index` helpers document the exact offsets.

use crate::qsim::{Circuit, Gate};
use crate::{Error, Result};

/// Flat real parameter vector for either ansatz.
pub type ParamVector = Vec<f64>;

/// Ry-rotation ansatz over `node_qubits + ancilla_qubits` wires: an initial
/// rotation layer followed by `layers` repetitions of a CNOT ring and another
/// rotation layer. Using only Ry keeps every amplitude real.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingAnsatzSpec {
    pub node_qubits: usize,
    pub ancilla_qubits: usize,
    pub layers: usize,
}

impl EmbeddingAnsatzSpec {
    pub fn new(node_qubits: usize, ancilla_qubits: usize, layers: usize) -> EmbeddingAnsatzSpec {
        EmbeddingAnsatzSpec {
            node_qubits,
            ancilla_qubits,
            layers,
        }
    }

    pub fn total_qubits(&self) -> usize {
        self.node_qubits + self.ancilla_qubits
    }

    /// One angle per qubit per rotation layer: `(layers + 1) * total_qubits`.
    pub fn param_count(&self) -> usize {
        (self.layers + 1) * self.total_qubits()
    }

    /// Offset of the angle for `qubit` in rotation layer `layer`
    /// (layer 0 is the initial layer before any entangler).
    pub fn param_index(&self, layer: usize, qubit: usize) -> usize {
        layer * self.total_qubits() + qubit
    }

    /// Builds the circuit for one parameter assignment.
    ///
    /// The entangling block is a ring: CX from the last qubit to qubit 0,
    /// then a descending chain CX(0→1), CX(1→2), … On a single-qubit
    /// register the ring is empty.
    pub fn build(&self, theta: &[f64]) -> Result<Circuit> {
        if theta.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                got: theta.len(),
                context: "embedding ansatz parameters",
            });
        }
        let width = self.total_qubits();
        let mut circuit = Circuit::new(width);
        for q in 0..width {
            circuit.push(Gate::ry(theta[self.param_index(0, q)], q))?;
        }
        for layer in 1..=self.layers {
            if width > 1 {
                circuit.push(Gate::cx(width - 1, 0))?;
                for q in 0..width - 1 {
                    circuit.push(Gate::cx(q, q + 1))?;
                }
            }
            for q in 0..width {
                circuit.push(Gate::ry(theta[self.param_index(layer, q)], q))?;
            }
        }
        Ok(circuit)
    }
}

/// General-unitary ansatz on a `qubits`-wide register (the ancilla register
/// of the pipeline): a U3 layer, then `layers` repetitions of one CNOT with
/// alternating direction and another U3 layer.
///
/// The circuit is built on local wires 0..qubits; callers place it on the
/// most-significant qubits with [`Circuit::shifted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifierAnsatzSpec {
    pub qubits: usize,
    pub layers: usize,
}

impl ClassifierAnsatzSpec {
    /// The standard head: 8 entangling layers.
    pub fn new(qubits: usize) -> ClassifierAnsatzSpec {
        ClassifierAnsatzSpec { qubits, layers: 8 }
    }

    /// Three Euler angles per qubit per U3 layer: `3 * qubits * (layers + 1)`.
    pub fn param_count(&self) -> usize {
        3 * self.qubits * (self.layers + 1)
    }

    /// Offset of Euler angle `angle` (0 = θ, 1 = φ, 2 = λ) for `qubit` in U3
    /// layer `layer`.
    pub fn param_index(&self, layer: usize, qubit: usize, angle: usize) -> usize {
        3 * (layer * self.qubits + qubit) + angle
    }

    /// Builds the circuit for one parameter assignment.
    ///
    /// Odd entangling layers use CX(0→1), even layers CX(1→0); on a
    /// single-qubit register there is no entangler. Registers wider than two
    /// qubits alternate the same pair of directions on neighboring wires.
    pub fn build(&self, gamma: &[f64]) -> Result<Circuit> {
        if gamma.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                got: gamma.len(),
                context: "classifier ansatz parameters",
            });
        }
        let mut circuit = Circuit::new(self.qubits);
        self.push_u3_layer(&mut circuit, gamma, 0)?;
        for layer in 1..=self.layers {
            if self.qubits > 1 {
                let pair = (layer - 1) % (self.qubits - 1);
                if layer % 2 == 1 {
                    circuit.push(Gate::cx(pair, pair + 1))?;
                } else {
                    circuit.push(Gate::cx(pair + 1, pair))?;
                }
            }
            self.push_u3_layer(&mut circuit, gamma, layer)?;
        }
        Ok(circuit)
    }

    fn push_u3_layer(&self, circuit: &mut Circuit, gamma: &[f64], layer: usize) -> Result<()> {
        for q in 0..self.qubits {
            circuit.push(Gate::u3(
                gamma[self.param_index(layer, q, 0)],
                gamma[self.param_index(layer, q, 1)],
                gamma[self.param_index(layer, q, 2)],
                q,
            ))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::Statevector;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn invert(circuit: &Circuit) -> Circuit {
        let mut out = Circuit::new(circuit.n_qubits());
        for gate in circuit.gates().iter().rev() {
            let inv = match *gate {
                Gate::H { target } => Gate::h(target),
                Gate::X { target } => Gate::x(target),
                Gate::CX { control, target } => Gate::cx(control, target),
                Gate::Ry { theta, target } => Gate::ry(-theta, target),
                Gate::Rx { theta, target } => Gate::rx(-theta, target),
                Gate::U3 {
                    theta,
                    phi,
                    lambda,
                    target,
                } => Gate::u3(-theta, -lambda, -phi, target),
            };
            out.push(inv).unwrap();
        }
        out
    }

    fn apply_all(sv: &Statevector, circuit: &Circuit) -> Statevector {
        let mut out = sv.clone();
        for gate in circuit.gates() {
            out = out.apply_gate(gate).unwrap();
        }
        out
    }

    #[test]
    fn embedding_with_zero_layers_and_zero_angles_is_vacuous() {
        let spec = EmbeddingAnsatzSpec::new(2, 1, 0);
        assert_eq!(spec.param_count(), 3);
        let sv = spec.build(&[0.0; 3]).unwrap().run();
        assert_eq!(sv.amplitudes()[0], Complex64::new(1.0, 0.0));
        for amp in &sv.amplitudes()[1..] {
            assert_eq!(amp.norm(), 0.0);
        }
    }

    #[test]
    fn embedding_param_count_for_one_layer_seven_qubits() {
        let spec = EmbeddingAnsatzSpec::new(5, 2, 1);
        assert_eq!(spec.param_count(), 14);
    }

    #[test]
    fn embedding_rejects_wrong_parameter_length() {
        let spec = EmbeddingAnsatzSpec::new(2, 1, 1);
        assert!(spec.build(&[0.0; 5]).is_err());
        assert!(spec.build(&vec![0.0; spec.param_count()]).is_ok());
    }

    #[test]
    fn embedding_gate_structure() {
        let spec = EmbeddingAnsatzSpec::new(2, 1, 2);
        let circuit = spec.build(&vec![0.1; spec.param_count()]).unwrap();
        let cx_count = circuit
            .gates()
            .iter()
            .filter(|g| matches!(g, Gate::CX { .. }))
            .count();
        let ry_count = circuit
            .gates()
            .iter()
            .filter(|g| matches!(g, Gate::Ry { .. }))
            .count();
        assert_eq!(cx_count, 2 * 3);
        assert_eq!(ry_count, 3 * 3);
        assert_eq!(circuit.gates()[3], Gate::cx(2, 0));
        assert_eq!(circuit.gates()[4], Gate::cx(0, 1));
        assert_eq!(circuit.gates()[5], Gate::cx(1, 2));
    }

    #[test]
    fn classifier_zero_angles_reduce_to_bare_cnots() {
        let spec = ClassifierAnsatzSpec::new(2);
        let gamma = vec![0.0; spec.param_count()];
        let circuit = spec.build(&gamma).unwrap();

        let mut cnots_only = Circuit::new(2);
        for layer in 1..=8 {
            if layer % 2 == 1 {
                cnots_only.push(Gate::cx(0, 1)).unwrap();
            } else {
                cnots_only.push(Gate::cx(1, 0)).unwrap();
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut amps: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let sv = Statevector::from_amplitudes(amps).unwrap();
        let a = apply_all(&sv, &circuit);
        let b = apply_all(&sv, &cnots_only);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn classifier_has_eight_alternating_cnots() {
        let spec = ClassifierAnsatzSpec::new(2);
        assert_eq!(spec.param_count(), 54);
        let circuit = spec.build(&vec![0.3; 54]).unwrap();
        let cnots: Vec<&Gate> = circuit
            .gates()
            .iter()
            .filter(|g| matches!(g, Gate::CX { .. }))
            .collect();
        assert_eq!(cnots.len(), 8);
        for (i, gate) in cnots.iter().enumerate() {
            let expected = if i % 2 == 0 {
                Gate::cx(0, 1)
            } else {
                Gate::cx(1, 0)
            };
            assert_eq!(**gate, expected);
        }
    }

    #[test]
    fn classifier_circuit_is_unitary() {
        let spec = ClassifierAnsatzSpec::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gamma: Vec<f64> = (0..spec.param_count())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let circuit = spec.build(&gamma).unwrap();
        let mut amps: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let sv = Statevector::from_amplitudes(amps).unwrap();
        let round_trip = apply_all(&apply_all(&sv, &circuit), &invert(&circuit));
        for (x, y) in round_trip.amplitudes().iter().zip(sv.amplitudes()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn shifted_classifier_commutes_with_node_register_gates() {
        let node_qubits = 3;
        let spec = ClassifierAnsatzSpec::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let gamma: Vec<f64> = (0..spec.param_count())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let head = spec
            .build(&gamma)
            .unwrap()
            .shifted(node_qubits + 2, node_qubits)
            .unwrap();

        let prep = EmbeddingAnsatzSpec::new(node_qubits, 2, 1);
        let theta: Vec<f64> = (0..prep.param_count())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let sv = prep.build(&theta).unwrap().run();

        let node_flip = Gate::x(1);
        let a = apply_all(&sv.apply_gate(&node_flip).unwrap(), &head);
        let b = apply_all(&sv, &head).apply_gate(&node_flip).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn embedding_param_count_formula(n in 1usize..5, p in 0usize..3, k in 0usize..4) {
            let spec = EmbeddingAnsatzSpec::new(n, p, k);
            prop_assert_eq!(spec.param_count(), (k + 1) * (n + p));
            let circuit = spec.build(&vec![0.5; spec.param_count()]).unwrap();
            let ry = circuit.gates().iter().filter(|g| matches!(g, Gate::Ry { .. })).count();
            prop_assert_eq!(ry, spec.param_count());
        }

        #[test]
        fn classifier_param_count_formula(q in 1usize..4, layers in 1usize..10) {
            let spec = ClassifierAnsatzSpec { qubits: q, layers };
            prop_assert_eq!(spec.param_count(), 3 * q * (layers + 1));
        }

        #[test]
        fn embedding_amplitudes_stay_real(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = EmbeddingAnsatzSpec::new(3, 2, 2);
            let theta: Vec<f64> = (0..spec.param_count())
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect();
            let sv = spec.build(&theta).unwrap().run();
            for amp in sv.amplitudes() {
                prop_assert!(amp.im.abs() < 1e-12);
            }
        }
    }
}
