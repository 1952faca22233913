//! End-to-end micro training run on the Van der Pol oscillator.
//!
//! Generates a very small dataset, trains a weight-generating model and a
//! parameter-agnostic LSTM for a few epochs, and compares their forecasting
//! metrics on a held-out parameter. Sizes are kept tiny so this finishes in
//! about a minute; see the `phlienet` binary for full desk/paper profiles.
//!
//! Run with: cargo run --release --example train_vanderpol

use phlienet::lie::LieSpec;
use phlienet::metrics::compute_report;
use phlienet::rollout::{batch_forecast, Variant};
use phlienet::sysgen::{build_dataset, ParamSpec, Split, SplitProtocol, SystemName, SystemSpec};
use phlienet::targets::TargetSpec;
use phlienet::trainer::{train_multiseed, ModelSpec, OptimizerKind, TrainConfig};

fn main() {
    let sys = SystemSpec::standard(SystemName::Vanderpol);
    let train_p = SplitProtocol { params: ParamSpec::Sobol { n: 6, offset: 0 }, n_ics: 2, t_end: 10.0 };
    let val_p = SplitProtocol { params: ParamSpec::Sobol { n: 6, offset: 0 }, n_ics: 1, t_end: 10.0 };
    let test_p = SplitProtocol { params: ParamSpec::Sobol { n: 2, offset: 64 }, n_ics: 2, t_end: 10.0 };
    let train_ds = build_dataset(&sys, Split::Train, &train_p, 7, 0.05, None).expect("train data");
    let val_ds =
        build_dataset(&sys, Split::Val, &val_p, 7, 0.05, Some(&train_ds.scaler)).expect("val data");
    let test_ds = build_dataset(&sys, Split::TestInterp, &test_p, 7, 0.05, Some(&train_ds.scaler))
        .expect("test data");
    println!("held-out parameters: {:?}", test_ds.params);

    let isl = 8;
    let models = [
        ModelSpec::phlienet(
            "phlienet_8_8",
            TargetSpec::tcnn_cd(2, 2, isl, 12, 5),
            LieSpec::new(8, 8, 0.2),
        ),
        ModelSpec::baseline("lstm_a", Variant::Agnostic, TargetSpec::lstm(2, 2, isl, 24)),
    ];
    let config = TrainConfig {
        batch_size: 256,
        max_epochs: 120,
        lr0: 2e-3,
        noise_level: 0.05,
        seeds: 1,
        optimizer: OptimizerKind::Adam,
        window_stride: 2,
        ..TrainConfig::default()
    };

    for spec in &models {
        let t0 = std::time::Instant::now();
        let (best, ckpts) = train_multiseed(spec, &train_ds, &val_ds, &config, 7).expect("train");
        let ckpt = &ckpts[best];
        let state = ckpt.model.clone();
        let runs =
            batch_forecast(&spec.name, spec.variant, |p| state.bind(p), &test_ds).expect("rollout");
        let report = compute_report(&runs, &test_ds.params, 0.2);
        println!(
            "{:14} {:3} epochs in {:5.1}s | val {:.3e} | TtT_0.2 {:.2} +- {:.2} | spectrum {:?}",
            spec.name,
            ckpt.history.len(),
            t0.elapsed().as_secs_f64(),
            ckpt.best_val,
            report.ttt.mean,
            report.ttt.std,
            report.spectrum_aggregate,
        );
    }
}
