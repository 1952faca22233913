//! The four pipeline stages driven through the library API exactly as the
//! `phlienet` binary drives them, on a micro configuration.
//!
//! Run with: cargo run --release --example cli_pipeline

use phlienet::cli::{cmd_analyze, cmd_evaluate, cmd_generate, cmd_train, profiles, Profile};
use phlienet::sysgen::{ParamSpec, Split, SplitProtocol, SystemName};

fn main() {
    let out = std::env::temp_dir().join("phlienet_example_pipeline");
    std::fs::remove_dir_all(&out).ok();
    let mut cfg =
        profiles::config(SystemName::Vanderpol, Profile::Desk, &out.to_string_lossy(), 7);

    // shrink the desk profile to a smoke-test footprint
    cfg.splits.train =
        SplitProtocol { params: ParamSpec::Sobol { n: 4, offset: 0 }, n_ics: 2, t_end: 5.0 };
    cfg.splits.val =
        SplitProtocol { params: ParamSpec::Sobol { n: 4, offset: 0 }, n_ics: 1, t_end: 5.0 };
    cfg.splits.test_interp = Some(SplitProtocol {
        params: ParamSpec::Sobol { n: 2, offset: 1024 },
        n_ics: 2,
        t_end: 5.0,
    });
    cfg.splits.test_extrap = None;
    cfg.isl = 8;
    cfg.train.max_epochs = 10;
    cfg.train.seeds = 1;
    cfg.models.retain(|m| m.name == "phlienet_16_16");

    println!("generate ->");
    for dir in cmd_generate(&cfg, false).expect("generate") {
        println!("  {}", dir.display());
    }

    println!("train ->");
    let dir = cmd_train(&cfg, "phlienet_16_16", false).expect("train");
    println!("  {}", dir.display());

    println!("evaluate ->");
    let dir = cmd_evaluate(&cfg, &["phlienet_16_16".into()], Split::TestInterp, None)
        .expect("evaluate");
    println!("  {}", dir.display());
    let comparison = std::fs::read_to_string(dir.join("comparison.csv")).unwrap();
    print!("{comparison}");

    println!("analyze ->");
    let dir = cmd_analyze(&cfg, "phlienet_16_16", 50).expect("analyze");
    println!("  {}", dir.display());
}
