//! Run the full file-based pipeline for one seed and produce the scatter
//! CSVs that compare the trained quantum embedding with the classical
//! eigenmap, ready for plotting.

use qlemap::embed::EvalMode;
use qlemap::harness::{
    run_pipeline, stage_embedviz, ExperimentConfig, LambdaSpec, CLASSICAL_SCATTER_FILE,
    QUANTUM_SCATTER_FILE,
};

fn main() -> qlemap::Result<()> {
    let out = tempfile::tempdir().expect("temp dir");
    let config = ExperimentConfig {
        n_nodes: 8,
        n_communities: 2,
        p_in: 1.0,
        p_out: 0.05,
        seeds: vec![4],
        d: 2,
        k: 1,
        lambda: LambdaSpec::Fixed(100.0),
        threshold: 0.0,
        mode: EvalMode::Exact,
        restarts: 4,
        max_iter: 2000,
        test_fraction: 0.25,
        out_dir: out.path().to_path_buf(),
    };

    let summaries = run_pipeline(&config)?;
    let summary = &summaries[0];
    println!(
        "pipeline done: cost {:.4}, quantum test accuracy {:.3}, classical test accuracy {:.3}",
        summary.manifest.final_cost,
        summary.metrics.test_accuracy,
        summary.baseline.test_accuracy
    );

    stage_embedviz(&config, 4)?;
    let dir = config.seed_dir(4);
    for (title, file) in [
        ("quantum embedding scatter", QUANTUM_SCATTER_FILE),
        ("classical eigenmap scatter", CLASSICAL_SCATTER_FILE),
    ] {
        let text = std::fs::read_to_string(dir.join(file)).expect("scatter file");
        println!("\n{title} ({file}):\n{text}");
    }

    println!("artifacts written under {}:", dir.display());
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .expect("seed dir")
        .map(|e| e.expect("dir entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }
    Ok(())
}
