//! Train a variational spectral embedding on the two-clique graph and
//! inspect the optimizer trace, the orthogonality penalty, and the
//! embedding coordinates it produces.

use qlemap::embed::{train_embedding, EmbeddingProblem, EvalMode};
use qlemap::graph::Graph;
use qlemap::pauli::decompose;

fn main() -> qlemap::Result<()> {
    // Two disjoint 4-cliques: the canonical graph whose Laplacian has two
    // zero eigenvalues, one indicator vector per clique.
    let mut edges = Vec::new();
    for block in [0usize, 4] {
        for u in block..block + 4 {
            for v in u + 1..block + 4 {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::new(8, edges)?;
    let decomposition = decompose(&graph.laplacian())?;
    println!(
        "two-clique Laplacian decomposes into {} Pauli terms on {} qubits",
        decomposition.terms().len(),
        decomposition.n_qubits()
    );

    // d = 2 embedding: one ancilla qubit, one entangling layer, lambda = 100.
    let problem = EmbeddingProblem::new(decomposition, 3, 1, 1, 100.0, EvalMode::Exact)?;
    println!(
        "ansatz: {} qubits, {} parameters, target subspace dimension {}",
        problem.ansatz().total_qubits(),
        problem.ansatz().param_count(),
        problem.dimension()
    );
    println!(
        "sum of the {} smallest Laplacian eigenvalues: {:.6}",
        problem.dimension(),
        problem.theoretical_minimum()?
    );

    let result = train_embedding(&problem, 5, 2000, 7)?;
    println!(
        "best of 5 restarts (restart {}): cost {:.6} = expectation {:.6} + lambda * penalty ({:.3e})",
        result.best_restart, result.final_cost, result.expectation_term, result.penalty_term
    );
    let trace = &result.cost_trace;
    println!("cost trace: {} recorded points, first 3 and last 3:", trace.len());
    for &(eval, cost) in trace.iter().take(3).chain(trace.iter().rev().take(3).rev()) {
        println!("  eval {eval:>5}: {cost:.6}");
    }

    println!("subspace weights: {:?}", result.weights);
    println!("embedding rows (node: y0, y1):");
    for (node, row) in result.y.rows().into_iter().enumerate() {
        println!("  {node}: {:+.4} {:+.4}", row[0], row[1]);
    }

    // The two cliques should separate along at least one coordinate.
    let mean = |nodes: std::ops::Range<usize>, col: usize| {
        nodes.map(|v| result.y[[v, col]]).sum::<f64>() / 4.0
    };
    for col in 0..2 {
        println!(
            "column {col}: clique means {:+.4} vs {:+.4}",
            mean(0..4, col),
            mean(4..8, col)
        );
    }
    Ok(())
}
