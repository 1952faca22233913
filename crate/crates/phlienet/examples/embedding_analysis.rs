//! Embedding-space diagnostics: PCA projection, RBF activation heatmap, and
//! the weight-distance matrix, written as plot-ready CSVs.
//!
//! Run with: cargo run --release --example embedding_analysis

use phlienet::analysis::{default_probe_grid, embedding_report, monotone_row_fraction, pc1_monotone_fraction};
use phlienet::lie::LieSpec;
use phlienet::sysgen::Scaler;
use phlienet::targets::TargetSpec;
use phlienet::trainer::{ModelSpec, ModelState};

fn main() {
    let spec = ModelSpec::phlienet(
        "demo",
        TargetSpec::tcnn_cd(2, 2, 16, 10, 5),
        LieSpec::new(12, 8, 0.2),
    );
    let scaler = Scaler { mean: vec![0.0, 0.0], std: vec![1.0, 1.0] };
    let state = ModelState::init(&spec, &scaler, [1.0, 8.0], 99);

    let probes = default_probe_grid([1.0, 8.0], 40);
    let report = embedding_report(&state, &probes).expect("report");
    println!(
        "probe grid: {} points in [{:.2}, {:.2}] (10% extrapolation margin each side)",
        probes.len(),
        probes[0],
        probes.last().unwrap()
    );
    println!(
        "explained variance: pc1 {:.3}, pc2 {:.3}",
        report.explained_variance[0], report.explained_variance[1]
    );
    println!(
        "monotone weight-distance rows: {:.0}%",
        100.0 * monotone_row_fraction(&report.weight_distances)
    );
    println!(
        "pc1 ordered by parameter on {:.0}% of consecutive probes",
        100.0 * pc1_monotone_fraction(&report)
    );

    let dir = std::env::temp_dir().join("phlienet_example_analysis");
    report.write(&dir).expect("write csvs");
    println!("wrote embedding_pca.csv, rbf_heatmap.csv, weight_distances.csv to {}", dir.display());
}
