//! Trajectory dataset generation and the on-disk format.
//!
//! Samples quasi-random parameters, integrates the Van der Pol oscillator,
//! saves the dataset (manifest.json + data.bin), reloads it, and verifies the
//! round trip is bit-identical.
//!
//! Run with: cargo run --release --example generate_dataset

use phlienet::sysgen::{
    build_dataset, load_dataset, save_dataset, sobol_sample, ParamSpec, Split, SplitProtocol,
    SystemName, SystemSpec,
};

fn main() {
    let sys = SystemSpec::standard(SystemName::Vanderpol);
    println!(
        "system {} | dim {} | dt {} | sample every {}",
        sys.name.as_str(),
        sys.state_dim,
        sys.solver_step,
        sys.sample_interval
    );

    let params = sobol_sample(sys.varied_param_range, 8, 0);
    println!("first 8 Sobol parameters in [1, 8]: {params:?}");

    let protocol = SplitProtocol { params: ParamSpec::Sobol { n: 4, offset: 0 }, n_ics: 2, t_end: 5.0 };
    let ds = build_dataset(&sys, Split::Train, &protocol, 7, 0.05, None).expect("generation");
    println!(
        "dataset: {} params x {} ics x {} samples x {} dims",
        ds.n_params(),
        ds.n_ics,
        ds.n_t,
        ds.state_dim()
    );
    println!("scaler mean {:?} std {:?}", ds.scaler.mean, ds.scaler.std);

    let dir = std::env::temp_dir().join("phlienet_example_dataset");
    save_dataset(&ds, &dir).expect("save");
    let back = load_dataset(&dir).expect("load");
    println!("round trip bit-identical: {}", ds == back);
    println!("wrote {}", dir.display());
}
