//! Decompose a graph Laplacian into Pauli strings, truncate small
//! coefficients, and inspect how much coefficient mass survives.

use qlemap::graph::Graph;
use qlemap::pauli::decompose;

fn main() -> qlemap::Result<()> {
    let graph = Graph::sbm(16, 2, 0.7, 0.1, 3)?;
    let laplacian = graph.laplacian();
    let decomposition = decompose(&laplacian)?;
    println!(
        "L is {} qubits wide and decomposes into {} Pauli terms",
        decomposition.n_qubits(),
        decomposition.term_count()
    );

    // The largest few terms carry most of the operator.
    let mut terms: Vec<_> = decomposition.terms().to_vec();
    terms.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    println!("largest terms:");
    for (h, s) in terms.iter().take(5) {
        println!("  {s}  {h:+.4}");
    }

    // The cumulative |h| curve shows how concentrated the coefficients are:
    // the value at fraction 0.5 is the mass carried by the largest half.
    let at_half = decomposition.curve_value_at(0.5)?;
    println!("largest 50% of terms hold {:.1}% of the mass", 100.0 * at_half);

    // Thresholding drops small terms; alpha is the retained mass fraction.
    for t in [0.05, 0.1, 0.3] {
        let (kept, report) = decomposition.apply_threshold(t)?;
        println!(
            "threshold {t}: kept {} of {} terms, alpha = {:.3}",
            report.kept,
            decomposition.term_count(),
            report.alpha
        );
        // The truncated operator stays close to L in the sup norm.
        let err = (&kept.reconstruct() - &laplacian)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        println!("  max |reconstruction - L| = {err:.4}");
    }

    // Exact reconstruction at threshold zero.
    let (all, report) = decomposition.apply_threshold(0.0)?;
    let err = (&all.reconstruct() - &laplacian)
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    println!(
        "threshold 0: alpha = {}, max reconstruction error = {err:.2e}",
        report.alpha
    );
    Ok(())
}
