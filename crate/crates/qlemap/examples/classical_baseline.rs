//! The classical reference pipeline: exact Laplacian eigenmap plus logistic
//! regression. Also shows the eigensolver on its own, including the
//! zero-eigenvalue / connected-component correspondence.

use qlemap::baseline::{classical_eigenmap, logistic_predict, logistic_train, sym_eigen};
use qlemap::graph::Graph;

fn main() -> qlemap::Result<()> {
    // Eigenvalues of a disconnected graph: one zero per component.
    let two_triangles = Graph::new(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])?;
    let eig = sym_eigen(&two_triangles.laplacian())?;
    println!("two-triangle Laplacian spectrum: {:?}", eig.eigenvalues);
    let zeros = eig.eigenvalues.iter().filter(|&&v| v.abs() < 1e-9).count();
    println!("zero eigenvalues: {zeros} (one per connected component)");

    // Full baseline on a planted partition.
    let graph = Graph::sbm(16, 2, 0.8, 0.05, 2)?;
    let split = graph.train_test_split(0.25, 5)?;
    let y = classical_eigenmap(&graph.laplacian(), 2)?;
    println!("\neigenmap coordinates (node: y0, y1, label):");
    for (node, row) in y.rows().into_iter().enumerate() {
        println!(
            "  {node:>2}: {:+.4} {:+.4}   {}",
            row[0], row[1], graph.labels()[&node]
        );
    }

    let model = logistic_train(&y, graph.labels(), &split.train, 5000, 0.1, 13)?;
    println!(
        "logistic model: weights {:?}, bias {:.4}",
        model.weights, model.bias
    );

    let accuracy_on = |nodes: &[usize]| -> qlemap::Result<f64> {
        let mut correct = 0usize;
        for &node in nodes {
            let p = logistic_predict(&model, y.row(node).as_slice().unwrap())?;
            let predicted = u8::from(p > 0.5);
            if p != 0.5 && predicted == graph.labels()[&node] {
                correct += 1;
            }
        }
        Ok(correct as f64 / nodes.len() as f64)
    };
    println!(
        "train accuracy {:.3}, test accuracy {:.3}",
        accuracy_on(&split.train)?,
        accuracy_on(&split.test)?
    );
    Ok(())
}
