//! Generate stochastic block model graphs, inspect their structure, and
//! round-trip them through the edge-list format.

use qlemap::graph::Graph;

fn main() -> qlemap::Result<()> {
    // Two planted communities of 8 nodes each: dense inside, sparse across.
    let graph = Graph::sbm(16, 2, 0.8, 0.05, 7)?;
    println!(
        "SBM graph: {} nodes, {} edges",
        graph.num_nodes(),
        graph.num_edges()
    );

    let mut cross = 0;
    for (u, v) in graph.edges() {
        if graph.communities()[&u] != graph.communities()[&v] {
            cross += 1;
        }
    }
    println!("cross-community edges: {cross} of {}", graph.num_edges());

    // Binary community labels drive the classification stages downstream.
    let ones = graph.labels().values().filter(|&&l| l == 1).count();
    println!("labels: {} zeros, {} ones", graph.num_nodes() - ones, ones);

    // The Laplacian L = D - A is the operator the whole pipeline embeds.
    let laplacian = graph.laplacian();
    println!(
        "Laplacian trace = {} (twice the edge count)",
        laplacian.diag().sum()
    );

    // A 75/25 split of the labeled nodes, reproducible from its seed.
    let split = graph.train_test_split(0.25, 42)?;
    println!(
        "split: {} train / {} test nodes",
        split.train.len(),
        split.test.len()
    );

    // Graphs serialize as plain text edge lists and read back identically.
    let text = graph.to_edge_list_string();
    let back = Graph::from_edge_list_str(&text)?;
    println!(
        "edge-list round trip: {} ({} bytes)",
        if back.num_edges() == graph.num_edges() {
            "ok"
        } else {
            "mismatch"
        },
        text.len()
    );

    // Node counts that are not powers of two are padded with isolated nodes
    // so the graph fits a qubit register.
    let odd = Graph::sbm(12, 2, 0.8, 0.05, 7)?;
    let padded = odd.pad_to_power_of_two();
    println!(
        "padding: {} nodes -> {} nodes ({} qubits)",
        odd.num_nodes(),
        padded.num_nodes(),
        padded.num_nodes().trailing_zeros()
    );
    Ok(())
}
