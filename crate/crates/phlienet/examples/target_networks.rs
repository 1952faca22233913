//! The three forecaster architectures and their flattened weight layouts.
//!
//! Run with: cargo run --release --example target_networks

use phlienet::rng::Rng;
use phlienet::targets::{
    forward, layout_for, receptive_field, target_param_count, tcnn_layers_for, TargetSpec,
    WeightVector,
};

fn main() {
    println!("layer-count law: minimal L with receptive field >= ISL");
    for (isl, k) in [(16usize, 5usize), (32, 5), (64, 5), (12, 3)] {
        let l = tcnn_layers_for(isl, k);
        println!(
            "  ISL {isl:3}, kernel {k} -> {l} layers (R = {}, R at L-1 = {})",
            receptive_field(l, k),
            if l > 1 { receptive_field(l - 1, k) } else { 1 }
        );
    }

    let specs = [
        ("dilated conv", TargetSpec::tcnn_cd(2, 2, 16, 22, 5)),
        ("lstm", TargetSpec::lstm(3, 3, 16, 48)),
        ("ffnn", TargetSpec::ffnn(3, 3, 1, vec![40, 40])),
    ];
    println!("\nweight layouts");
    for (label, spec) in &specs {
        let layout = layout_for(spec);
        println!("  {label}: {} scalars in {} tensors", target_param_count(spec), layout.entries.len());
        for e in layout.entries.iter().take(2) {
            println!("    {} shape {:?} offset {}", e.name, e.shape, e.offset);
        }
    }

    // run each forward on a random window
    let mut rng = Rng::new(5);
    println!("\nforward passes on a random window");
    for (label, spec) in &specs {
        let layout = layout_for(spec);
        let w = WeightVector::new((0..layout.total).map(|_| rng.normal() * 0.2).collect(), layout);
        let history: Vec<f64> = (0..spec.isl * spec.input_dim).map(|_| rng.normal()).collect();
        let out = forward(spec, &w, &history).expect("forward");
        println!("  {label}: derivative estimate {out:?}");
    }
}
