//! Autoregressive rollout and the three evaluation metrics.
//!
//! Forecasts Lorenz trajectories with the exact vector field as the model
//! (the strongest baseline: only the Euler-vs-RK4 gap remains) and with the
//! zero model, then scores both with NRMSE evolution, time-to-threshold, and
//! the power-spectrum error.
//!
//! Run with: cargo run --release --example forecast_and_metrics

use phlienet::metrics::compute_report;
use phlienet::rollout::{batch_forecast, Forecaster, Variant, VectorFieldOracle, ZeroModel};
use phlienet::sysgen::{build_dataset, ParamSpec, Split, SplitProtocol, SystemName, SystemSpec};

fn main() {
    let sys = SystemSpec::standard(SystemName::Lorenz3d);
    let protocol = SplitProtocol {
        params: ParamSpec::Explicit(vec![16.0, 28.0]),
        n_ics: 3,
        t_end: 8.0,
    };
    let ds = build_dataset(&sys, Split::Train, &protocol, 21, 0.0, None).expect("dataset");
    println!(
        "lorenz dataset: {} params x {} ics x {} steps",
        ds.n_params(),
        ds.n_ics,
        ds.n_t
    );

    let isl = 16;
    for (label, factory) in [
        (
            "vector-field oracle",
            Box::new(|p: f64| -> phlienet::Result<Box<dyn Forecaster>> {
                Ok(Box::new(VectorFieldOracle {
                    system: SystemSpec::standard(SystemName::Lorenz3d),
                    p,
                    isl,
                }))
            }) as Box<dyn Fn(f64) -> phlienet::Result<Box<dyn Forecaster>>>,
        ),
        (
            "zero model",
            Box::new(|_p: f64| -> phlienet::Result<Box<dyn Forecaster>> {
                Ok(Box::new(ZeroModel { isl, dim: 3 }))
            }),
        ),
    ] {
        let runs = batch_forecast(label, Variant::Agnostic, factory, &ds).expect("rollout");
        let report = compute_report(&runs, &ds.params, 0.2);
        println!("\n{label}");
        println!("  TtT_0.2 per parameter: {:?}", report.ttt.per_param);
        println!("  TtT_0.2 mean +- std:   {:.3} +- {:.3}", report.ttt.mean, report.ttt.std);
        println!("  TtT_0.2 (mean curve):  {:.3}", report.ttt.legend);
        println!("  spectrum error:        {:?}", report.spectrum_aggregate);
        println!("  diverged runs:         {}", report.diverged_runs);
    }
}
