//! The six benchmark ODE systems, their integration and sampling protocols,
//! and serialized trajectory datasets with derivative targets.

mod dataset;
mod integrate;
mod sobol;

pub use dataset::{
    build_dataset, load_dataset, save_dataset, ParamSpec, Scaler, Split, SplitProtocol,
    TrajectoryDataset,
};
pub use integrate::{integrate, integrate_rhs, rk4_step};
pub use sobol::sobol_sample;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemName {
    Vanderpol,
    Roessler,
    Finance,
    Lorenz3d,
    Chua,
    Duffing,
}

impl SystemName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "vanderpol" => Ok(SystemName::Vanderpol),
            "roessler" => Ok(SystemName::Roessler),
            "finance" => Ok(SystemName::Finance),
            "lorenz3d" => Ok(SystemName::Lorenz3d),
            "chua" => Ok(SystemName::Chua),
            "duffing" => Ok(SystemName::Duffing),
            other => Err(Error::Config(format!("unknown system name: {other}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SystemName::Vanderpol => "vanderpol",
            SystemName::Roessler => "roessler",
            SystemName::Finance => "finance",
            SystemName::Lorenz3d => "lorenz3d",
            SystemName::Chua => "chua",
            SystemName::Duffing => "duffing",
        }
    }

    pub const ALL: [SystemName; 6] = [
        SystemName::Vanderpol,
        SystemName::Roessler,
        SystemName::Finance,
        SystemName::Lorenz3d,
        SystemName::Chua,
        SystemName::Duffing,
    ];
}

/// One parametric ODE benchmark: vector field, parameter range, and the
/// integration/sampling constants of its data protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: SystemName,
    pub state_dim: usize,
    pub param_dim: usize,
    /// [lo, hi] of the single varied parameter.
    pub varied_param_range: [f64; 2],
    pub fixed_params: Vec<(String, f64)>,
    /// Solver step (seconds).
    pub solver_step: f64,
    /// Observation sampling interval; an integer multiple of `solver_step`.
    pub sample_interval: f64,
    /// Transient discarded before recording.
    pub t_trans: f64,
    /// Default recording horizon.
    pub t_end: f64,
    pub nonautonomous: bool,
    /// Per-dimension [lo, hi] box initial conditions are drawn from.
    pub ic_box: Vec<[f64; 2]>,
}

impl SystemSpec {
    /// The per-system data protocol constants.
    pub fn standard(name: SystemName) -> Self {
        match name {
            SystemName::Vanderpol => SystemSpec {
                name,
                state_dim: 2,
                param_dim: 1,
                varied_param_range: [1.0, 8.0],
                fixed_params: vec![],
                solver_step: 1e-3,
                sample_interval: 0.05,
                t_trans: 0.0,
                t_end: 20.0,
                nonautonomous: false,
                ic_box: vec![[-2.0, 2.0], [-2.0, 2.0]],
            },
            SystemName::Roessler => SystemSpec {
                name,
                state_dim: 3,
                param_dim: 1,
                varied_param_range: [3.0, 9.0],
                fixed_params: vec![("a".into(), 0.2), ("b".into(), 0.2)],
                solver_step: 1e-3,
                sample_interval: 0.1,
                t_trans: 300.0,
                t_end: 20.0,
                nonautonomous: false,
                ic_box: vec![[-5.0, 5.0], [-5.0, 5.0], [-5.0, 5.0]],
            },
            SystemName::Finance => SystemSpec {
                name,
                state_dim: 3,
                param_dim: 1,
                varied_param_range: [1.0, 3.5],
                fixed_params: vec![("b".into(), 0.2), ("c".into(), 1.0)],
                solver_step: 1e-3,
                sample_interval: 0.1,
                t_trans: 200.0,
                t_end: 100.0,
                nonautonomous: false,
                ic_box: vec![[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
            },
            SystemName::Lorenz3d => SystemSpec {
                name,
                state_dim: 3,
                param_dim: 1,
                varied_param_range: [10.0, 35.0],
                fixed_params: vec![("sigma".into(), 10.0), ("beta".into(), 8.0 / 3.0)],
                solver_step: 1e-3,
                sample_interval: 0.02,
                t_trans: 0.0,
                t_end: 20.0,
                nonautonomous: false,
                ic_box: vec![[-10.0, 10.0], [-10.0, 10.0], [5.0, 30.0]],
            },
            SystemName::Chua => SystemSpec {
                name,
                state_dim: 3,
                param_dim: 1,
                varied_param_range: [8.5, 10.5],
                fixed_params: vec![
                    ("b".into(), 15.0),
                    ("mu0".into(), -1.143),
                    ("mu1".into(), -0.714),
                ],
                solver_step: 1e-3,
                sample_interval: 0.05,
                t_trans: 100.0,
                t_end: 20.0,
                nonautonomous: false,
                ic_box: vec![[-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5]],
            },
            SystemName::Duffing => SystemSpec {
                name,
                state_dim: 2,
                param_dim: 1,
                varied_param_range: [0.10, 0.80],
                fixed_params: vec![
                    ("alpha".into(), -1.0),
                    ("beta".into(), 1.0),
                    ("delta".into(), 0.3),
                    ("omega".into(), 1.2),
                ],
                solver_step: 1e-3,
                sample_interval: 0.02,
                t_trans: 200.0,
                t_end: 50.0,
                nonautonomous: true,
                ic_box: vec![[-2.0, 2.0], [-2.0, 2.0]],
            },
        }
    }

    pub fn fixed(&self, key: &str) -> f64 {
        self.fixed_params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("system {} has no fixed param {key}", self.name.as_str()))
    }

    /// Samples recorded for a horizon: floor(t_span / sample_interval) + 1.
    pub fn samples_for(&self, t_span: f64) -> usize {
        (t_span / self.sample_interval + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.solver_step <= 0.0 {
            return Err(Error::Config("solver_step must be positive".into()));
        }
        let ratio = self.sample_interval / self.solver_step;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::Config(format!(
                "sample_interval {} is not an integer multiple of solver_step {}",
                self.sample_interval, self.solver_step
            )));
        }
        if self.varied_param_range[0] >= self.varied_param_range[1] {
            return Err(Error::Config("parameter range must satisfy lo < hi".into()));
        }
        if self.ic_box.len() != self.state_dim {
            return Err(Error::Config("ic_box dimension mismatch".into()));
        }
        Ok(())
    }
}

/// Analytic right-hand side dx/dt = f(x, p) (or f(x, p, t) for the forced
/// oscillator).
pub fn vector_field(system: &SystemSpec, x: &[f64], p: f64, t: f64) -> Vec<f64> {
    debug_assert_eq!(x.len(), system.state_dim);
    match system.name {
        SystemName::Vanderpol => {
            let mu = p;
            vec![x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0]]
        }
        SystemName::Roessler => {
            let (a, b, c) = (system.fixed("a"), system.fixed("b"), p);
            vec![-x[1] - x[2], x[0] + a * x[1], b + x[2] * (x[0] - c)]
        }
        SystemName::Finance => {
            let (a, b, c) = (p, system.fixed("b"), system.fixed("c"));
            vec![
                (1.0 / b - a) * x[0] + x[2] + x[0] * x[1],
                -b * x[1] - x[0] * x[0],
                -x[0] - c * x[2],
            ]
        }
        SystemName::Lorenz3d => {
            let (sigma, beta, rho) = (system.fixed("sigma"), system.fixed("beta"), p);
            vec![
                sigma * (x[1] - x[0]),
                x[0] * (rho - x[2]) - x[1],
                x[0] * x[1] - beta * x[2],
            ]
        }
        SystemName::Chua => {
            let (a, b) = (p, system.fixed("b"));
            let (mu0, mu1) = (system.fixed("mu0"), system.fixed("mu1"));
            let h = mu1 * x[0] + 0.5 * (mu0 - mu1) * ((x[0] + 1.0).abs() - (x[0] - 1.0).abs());
            vec![a * (x[1] - x[0] - h), x[0] - x[1] + x[2], -b * x[1]]
        }
        SystemName::Duffing => {
            let gamma = p;
            let (alpha, beta) = (system.fixed("alpha"), system.fixed("beta"));
            let (delta, omega) = (system.fixed("delta"), system.fixed("omega"));
            vec![
                x[1],
                gamma * (omega * t).cos() - delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0],
            ]
        }
    }
}

/// The stable fixed points C± of the Lorenz system below the chaotic
/// transition, used by the regime-capture checks.
pub fn lorenz_fixed_points(rho: f64, beta: f64) -> ([f64; 3], [f64; 3]) {
    let r = (beta * (rho - 1.0)).sqrt();
    ([r, r, rho - 1.0], [-r, -r, rho - 1.0])
}
