//! End-to-end quantum node classification on a small planted-partition
//! graph: train the embedding, train the variational classifier head on the
//! embedded state, and score held-out nodes.

use qlemap::classify::{conditional_probabilities, evaluate_accuracy, train_classifier};
use qlemap::embed::{embedded_state, train_embedding, EmbeddingProblem, EvalMode};
use qlemap::graph::Graph;
use qlemap::pauli::decompose;

fn main() -> qlemap::Result<()> {
    // 8 nodes, two dense communities, a little cross-community noise.
    let graph = Graph::sbm(8, 2, 0.95, 0.05, 3)?;
    let split = graph.train_test_split(0.25, 41)?;
    println!(
        "graph: {} nodes, {} edges; split {} train / {} test",
        graph.num_nodes(),
        graph.edges().count(),
        split.train.len(),
        split.test.len()
    );

    let decomposition = decompose(&graph.laplacian())?;
    let problem = EmbeddingProblem::new(decomposition, 3, 1, 1, 100.0, EvalMode::Exact)?;
    let embedding = train_embedding(&problem, 5, 2000, 9)?;
    println!(
        "embedding trained: cost {:.4}, penalty residual {:.2e}",
        embedding.final_cost, embedding.penalty_term
    );

    // The classifier head acts on the ancilla register of the trained state.
    let state = embedded_state(&embedding.theta_opt, &problem)?;
    let model = train_classifier(&state, 3, graph.labels(), &split.train, 5, 1500, 17)?;
    println!(
        "classifier trained: {} parameters, final training loss {:.4}",
        model.gamma_opt.len(),
        model.final_loss()
    );

    let predictions = conditional_probabilities(&state, &model.spec, &model.gamma_opt, 3)?;
    println!("node  label  p(class 1)  predicted");
    for p in &predictions {
        let label = graph.labels()[&p.node];
        let predicted = u8::from(p.p1 > 0.5);
        let mark = if predicted == label { "" } else { "  <- miss" };
        println!("  {:>2}     {}      {:.4}        {}{mark}", p.node, label, p.p1, predicted);
    }

    let train_acc = evaluate_accuracy(&model, &state, 3, graph.labels(), &split.train)?;
    let test_acc = evaluate_accuracy(&model, &state, 3, graph.labels(), &split.test)?;
    println!("train accuracy {train_acc:.3}, test accuracy {test_acc:.3}");
    Ok(())
}
