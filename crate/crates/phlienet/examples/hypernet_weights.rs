//! Weight generation: embedding in, a complete forecaster weight vector out.
//!
//! Binds a hypernetwork to a dilated-conv target, generates weights at a few
//! parameter values, and prints the pairwise weight-distance matrix that
//! diagnoses smooth weight variation.
//!
//! Run with: cargo run --release --example hypernet_weights

use phlienet::diffcore::ParameterStore;
use phlienet::hypernet::{generate_weights, weight_distance_matrix, HyperNetSpec};
use phlienet::lie::{AnchorBank, LieSpec};
use phlienet::targets::{target_param_count, TargetSpec};

fn main() {
    let target = TargetSpec::tcnn_cd(2, 2, 16, 22, 5);
    println!(
        "target: dilated conv, {} layers, {} weights",
        target.layers(),
        target_param_count(&target)
    );

    let lie = LieSpec::new(8, 16, 0.2);
    let bank = AnchorBank::init(&lie, [1.0, 8.0], 11);
    let hnn = HyperNetSpec::for_target(lie.embedding_dim, &target);
    let mut store = ParameterStore::new();
    hnn.init_into(&mut store, target.layers() + 1, 12);
    println!("hypernetwork: {} -> {:?} -> {}", hnn.input_dim, hnn.hidden, hnn.output_dim);

    let w = generate_weights(&hnn, &store, &target, &bank.embed(3.0)).expect("generate");
    println!("generated |w_f| = {} scalars at p = 3.0", w.flat.len());
    for (name, t) in w.unpack().iter().take(3) {
        println!("  {name}: shape {:?}", t.shape());
    }

    let probes: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
    let dist = weight_distance_matrix(&hnn, &store, &bank, &probes).expect("distances");
    println!("\nweight-distance matrix over p = {probes:?}");
    for row in &dist {
        let cells: Vec<String> = row.iter().map(|d| format!("{d:6.3}")).collect();
        println!("  [{}]", cells.join(" "));
    }
}
