//! Exact gradients vs central finite differences.
//!
//! Builds a miniature weight-generating model (anchor embeddings -> MLP ->
//! dilated conv forecaster), evaluates one training-batch loss, and sweeps
//! every trainable scalar with a finite-difference check.
//!
//! Run with: cargo run --release --example gradient_check

use phlienet::diffcore::finite_difference_check;
use phlienet::lie::LieSpec;
use phlienet::rng::Rng;
use phlienet::sysgen::Scaler;
use phlienet::targets::TargetSpec;
use phlienet::trainer::{batch_loss_graph, Minibatch, ModelSpec, ModelState};

fn main() {
    let spec = ModelSpec {
        name: "mini".into(),
        variant: phlienet::rollout::Variant::Phlienet,
        target: TargetSpec::tcnn_cd(2, 2, 8, 6, 5),
        lie: Some(LieSpec::new(4, 8, 0.2)),
        hypernet_hidden: vec![16],
    };
    let scaler = Scaler { mean: vec![0.0, 0.0], std: vec![1.0, 1.0] };
    let state = ModelState::init(&spec, &scaler, [1.0, 8.0], 42);
    println!("trainable scalars: {}", state.params.scalar_count());

    let mut rng = Rng::new(7);
    let n = 4;
    let batch = Minibatch {
        n,
        isl: 8,
        input_dim: 2,
        out_dim: 2,
        windows: (0..n * 8 * 2).map(|_| rng.normal()).collect(),
        targets: (0..n * 2).map(|_| rng.normal()).collect(),
        p_raw: vec![2.0, 2.0, 5.5, 7.1],
    };

    let state2 = state.clone();
    let report = finite_difference_check(
        move |g, p| batch_loss_graph(g, &state2, &|name| p.node(name), &batch),
        &state.params,
        1e-5,
        1e-4,
    )
    .expect("finite loss");

    println!("checked {} scalars, max relative error {:.3e}", report.checked, report.max_rel_err);
    println!(
        "worst: {}[{}] analytic {:.6e} vs numeric {:.6e}",
        report.worst.name, report.worst.index, report.worst.analytic, report.worst.numeric
    );
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
}
