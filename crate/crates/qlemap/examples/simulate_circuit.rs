//! Drive the statevector simulator directly: build a circuit, read
//! amplitudes, and compare exact Pauli expectations with sampled estimates.

use qlemap::qsim::{exact_pauli_expectation, measure_counts, sampled_pauli_expectation, Circuit};
use std::f64::consts::FRAC_PI_2;

fn main() -> qlemap::Result<()> {
    // A 3-qubit GHZ-style circuit: H on qubit 0, then a CNOT chain.
    let mut circuit = Circuit::new(3);
    circuit.push(qlemap::qsim::Gate::h(0))?;
    circuit.push(qlemap::qsim::Gate::cx(0, 1))?;
    circuit.push(qlemap::qsim::Gate::cx(1, 2))?;
    let state = circuit.run();
    println!("GHZ amplitudes (index: amplitude):");
    for (i, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() > 1e-12 {
            println!("  |{i:03b}>: {:.4}{:+.4}i", amp.re, amp.im);
        }
    }

    // Parity operator ZZZ distinguishes GHZ's two branches; XXX flips both.
    for pauli in ["ZZZ", "XXX", "ZZI", "XYY"] {
        let s: qlemap::pauli::PauliString = pauli.parse()?;
        let exact = exact_pauli_expectation(&state, &s)?;
        let sampled = sampled_pauli_expectation(&state, &s, 20_000, 5)?;
        println!("<{pauli}>: exact {exact:+.4}, sampled {sampled:+.4} (20k shots)");
    }

    // Rotation gates: Ry(pi/2) on the zero state gives equal real amplitudes.
    let mut rot = Circuit::new(1);
    rot.push(qlemap::qsim::Gate::ry(FRAC_PI_2, 0))?;
    let plus = rot.run();
    println!(
        "Ry(pi/2)|0> = [{:.4}, {:.4}]",
        plus.amplitudes()[0].re,
        plus.amplitudes()[1].re
    );

    // Measurement histograms are seeded and reproducible.
    let counts = measure_counts(&state, &[0, 1, 2], 10_000, 11)?;
    println!("GHZ measurement histogram (10k shots):");
    for (outcome, count) in &counts {
        println!("  {outcome}: {count}");
    }
    let again = measure_counts(&state, &[0, 1, 2], 10_000, 11)?;
    println!("same seed reproduces: {}", counts == again);
    Ok(())
}
