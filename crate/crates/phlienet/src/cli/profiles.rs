//! Built-in experiment profiles. "paper" carries the full per-system data
//! and training protocol; "desk" shrinks parameter counts, initial
//! conditions, epochs, seeds, and window stride to laptop scale while keeping
//! the same protocol structure.

use super::{ExperimentConfig, ModelConfig, SplitsConfig};
use crate::error::{Error, Result};
use crate::lie::LieSpec;
use crate::rollout::Variant;
use crate::sysgen::{ParamSpec, SplitProtocol, SystemName};
use crate::targets::TargetKind;
use crate::trainer::{OptimizerKind, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!("unknown profile: {other} (desk|paper)"))),
        }
    }
}

/// Sobol offset reserving the head of the sequence for training points.
const HELD_OUT_OFFSET: u32 = 1024;

fn extrapolation_list(system: SystemName) -> Option<Vec<f64>> {
    match system {
        SystemName::Vanderpol => {
            Some(vec![0.4, 0.5, 0.6, 0.7, 0.8, 8.3, 8.6, 8.9, 9.2, 9.4])
        }
        SystemName::Roessler => {
            Some(vec![1.8, 2.0, 2.3, 2.5, 2.8, 9.2, 9.5, 9.7, 10.0, 10.2])
        }
        SystemName::Finance => {
            Some(vec![0.55, 0.65, 0.75, 0.85, 0.95, 3.55, 3.60, 3.65, 3.70, 3.75])
        }
        SystemName::Chua => {
            Some(vec![8.1, 8.2, 8.25, 8.3, 8.4, 10.6, 10.7, 10.75, 10.8, 10.9])
        }
        // the varied parameter drives bifurcations too strong for any model
        // to extrapolate across, so no extrapolation split is defined
        SystemName::Lorenz3d | SystemName::Duffing => None,
    }
}

fn lorenz_interp_list() -> Vec<f64> {
    vec![12.0, 16.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0, 32.0, 34.0]
}

fn paper_splits(system: SystemName) -> SplitsConfig {
    let (n_train, ics_train, t_train) = match system {
        SystemName::Lorenz3d => (50, 5, 20.0),
        SystemName::Duffing => (100, 10, 50.0),
        SystemName::Finance => (50, 10, 100.0),
        _ => (50, 10, 20.0),
    };
    let (interp_params, ics_test, t_test) = match system {
        SystemName::Vanderpol => (ParamSpec::Sobol { n: 10, offset: HELD_OUT_OFFSET }, 10, 50.0),
        SystemName::Roessler => (ParamSpec::Sobol { n: 10, offset: HELD_OUT_OFFSET }, 10, 100.0),
        SystemName::Finance => (ParamSpec::Sobol { n: 10, offset: HELD_OUT_OFFSET }, 10, 100.0),
        SystemName::Lorenz3d => (ParamSpec::Explicit(lorenz_interp_list()), 20, 30.0),
        SystemName::Chua => (ParamSpec::Sobol { n: 10, offset: HELD_OUT_OFFSET }, 10, 50.0),
        SystemName::Duffing => (ParamSpec::Sobol { n: 50, offset: HELD_OUT_OFFSET }, 10, 50.0),
    };
    SplitsConfig {
        train: SplitProtocol {
            params: ParamSpec::Sobol { n: n_train, offset: 0 },
            n_ics: ics_train,
            t_end: t_train,
        },
        val: SplitProtocol {
            params: ParamSpec::Sobol { n: n_train, offset: 0 },
            n_ics: ics_train,
            t_end: t_train,
        },
        test_interp: Some(SplitProtocol { params: interp_params, n_ics: ics_test, t_end: t_test }),
        test_extrap: extrapolation_list(system).map(|list| SplitProtocol {
            params: ParamSpec::Explicit(list),
            n_ics: ics_test,
            t_end: t_test,
        }),
    }
}

fn desk_splits(system: SystemName) -> SplitsConfig {
    match system {
        SystemName::Vanderpol => SplitsConfig {
            train: SplitProtocol {
                params: ParamSpec::Sobol { n: 20, offset: 0 },
                n_ics: 4,
                t_end: 20.0,
            },
            val: SplitProtocol {
                params: ParamSpec::Sobol { n: 20, offset: 0 },
                n_ics: 4,
                t_end: 20.0,
            },
            test_interp: Some(SplitProtocol {
                params: ParamSpec::Sobol { n: 6, offset: HELD_OUT_OFFSET },
                n_ics: 4,
                t_end: 20.0,
            }),
            test_extrap: extrapolation_list(system).map(|list| SplitProtocol {
                params: ParamSpec::Explicit(list),
                n_ics: 2,
                t_end: 20.0,
            }),
        },
        SystemName::Lorenz3d => SplitsConfig {
            train: SplitProtocol {
                params: ParamSpec::Sobol { n: 12, offset: 0 },
                n_ics: 3,
                t_end: 20.0,
            },
            val: SplitProtocol {
                params: ParamSpec::Sobol { n: 12, offset: 0 },
                n_ics: 2,
                t_end: 20.0,
            },
            test_interp: Some(SplitProtocol {
                params: ParamSpec::Explicit(vec![12.0, 16.0, 22.0, 28.0, 34.0]),
                n_ics: 10,
                t_end: 20.0,
            }),
            test_extrap: None,
        },
        _ => {
            let paper = paper_splits(system);
            SplitsConfig {
                train: SplitProtocol {
                    params: ParamSpec::Sobol { n: 12, offset: 0 },
                    n_ics: 4,
                    t_end: paper.train.t_end.min(20.0),
                },
                val: SplitProtocol {
                    params: ParamSpec::Sobol { n: 12, offset: 0 },
                    n_ics: 2,
                    t_end: paper.train.t_end.min(20.0),
                },
                test_interp: paper.test_interp.map(|p| SplitProtocol {
                    params: ParamSpec::Sobol { n: 5, offset: HELD_OUT_OFFSET },
                    n_ics: 4,
                    t_end: p.t_end.min(20.0),
                }),
                test_extrap: extrapolation_list(system).map(|list| SplitProtocol {
                    params: ParamSpec::Explicit(list),
                    n_ics: 2,
                    t_end: 20.0,
                }),
            }
        }
    }
}

fn paper_models() -> Vec<ModelConfig> {
    vec![
        ModelConfig::phlienet("phlienet_32_16", LieSpec::new(32, 16, 0.2)),
        ModelConfig::phlienet("phlienet_16_32", LieSpec::new(16, 32, 0.2)),
        ModelConfig::phlienet("phlienet_32_64", LieSpec::new(32, 64, 0.2)),
        ModelConfig::baseline("lstm_a", Variant::Agnostic, TargetKind::Lstm),
        ModelConfig::baseline("lstm_p", Variant::Augmented, TargetKind::Lstm),
        ModelConfig::baseline("tcnn_a", Variant::Agnostic, TargetKind::TcnnCd),
        ModelConfig::baseline("ffnn_p", Variant::Augmented, TargetKind::Ffnn),
    ]
}

fn desk_models(system: SystemName) -> Vec<ModelConfig> {
    match system {
        SystemName::Lorenz3d => vec![
            ModelConfig::phlienet("phlienet_16_16", LieSpec::new(16, 16, 0.2)),
        ],
        _ => vec![
            ModelConfig::phlienet("phlienet_16_16", LieSpec::new(16, 16, 0.2)),
            ModelConfig::baseline("lstm_a", Variant::Agnostic, TargetKind::Lstm),
            ModelConfig::baseline("lstm_p", Variant::Augmented, TargetKind::Lstm),
        ],
    }
}

/// The built-in configuration for a (system, profile) pair.
pub fn config(system: SystemName, profile: Profile, out_dir: &str, seed: u64) -> ExperimentConfig {
    let isl = match (profile, system) {
        (Profile::Paper, SystemName::Lorenz3d) => 32,
        (Profile::Paper, _) => 64,
        (Profile::Desk, _) => 8,
    };
    let train = match profile {
        Profile::Paper => TrainConfig {
            batch_size: 256,
            max_epochs: 1000,
            lr0: 1e-3,
            plateau_factor: 0.25,
            plateau_patience: 15,
            plateau_rel_margin: 1e-5,
            stop_patience: 30,
            noise_level: 0.05,
            seeds: 5,
            optimizer: OptimizerKind::RangerLike,
            window_stride: 1,
        },
        Profile::Desk => TrainConfig {
            batch_size: 256,
            max_epochs: 200,
            lr0: 1e-3,
            plateau_factor: 0.25,
            plateau_patience: 15,
            plateau_rel_margin: 1e-5,
            stop_patience: 30,
            noise_level: 0.05,
            seeds: 2,
            optimizer: OptimizerKind::Adam,
            window_stride: 2,
        },
    };
    ExperimentConfig {
        system,
        out_dir: out_dir.to_string(),
        seed,
        theta_rel: 0.2,
        isl,
        splits: match profile {
            Profile::Paper => paper_splits(system),
            Profile::Desk => desk_splits(system),
        },
        models: match profile {
            Profile::Paper => paper_models(),
            Profile::Desk => desk_models(system),
        },
        train,
    }
}
