//! Autoregressive forecasting: warm-start from ground-truth history, then
//! iterate derivative prediction + explicit Euler update.

use crate::error::{Error, Result};
use crate::sysgen::{vector_field, SystemSpec, TrajectoryDataset};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Phlienet,
    Agnostic,
    Augmented,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Phlienet => "phlienet",
            Variant::Agnostic => "agnostic",
            Variant::Augmented => "augmented",
        }
    }
}

/// A dynamics model bound to one parameter value: predicts the raw-space
/// state derivative from an oldest-first window of raw states.
pub trait Forecaster {
    fn isl(&self) -> usize;
    /// `t_abs` is the absolute time of the newest window row (relevant only
    /// for nonautonomous systems).
    fn predict_deriv(&self, window_raw: &[f64], t_abs: f64) -> Vec<f64>;
}

/// The true vector field as a forecaster; the strongest possible model and
/// the oracle for rollout plumbing.
pub struct VectorFieldOracle {
    pub system: SystemSpec,
    pub p: f64,
    pub isl: usize,
}

impl Forecaster for VectorFieldOracle {
    fn isl(&self) -> usize {
        self.isl
    }

    fn predict_deriv(&self, window_raw: &[f64], t_abs: f64) -> Vec<f64> {
        let d = self.system.state_dim;
        let last = &window_raw[window_raw.len() - d..];
        vector_field(&self.system, last, self.p, t_abs)
    }
}

/// f == 0: predictions stay at the last warm-up state.
pub struct ZeroModel {
    pub isl: usize,
    pub dim: usize,
}

impl Forecaster for ZeroModel {
    fn isl(&self) -> usize {
        self.isl
    }

    fn predict_deriv(&self, _window_raw: &[f64], _t_abs: f64) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// One autoregressive rollout against a stored ground-truth trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastRun {
    pub model_id: String,
    pub variant: Variant,
    pub p_raw: f64,
    pub param_index: usize,
    pub ic_index: usize,
    pub dim: usize,
    pub dt: f64,
    /// (N_T, D_x) row-major.
    pub x_true: Vec<f64>,
    /// Same shape; first ISL rows equal `x_true` bit-exactly. Rows after a
    /// divergence are frozen at the last finite state.
    pub x_pred: Vec<f64>,
    pub isl: usize,
    /// First step index at which the state left the finite/bounded regime.
    pub diverged_at: Option<usize>,
}

impl ForecastRun {
    pub fn n_t(&self) -> usize {
        self.x_true.len() / self.dim
    }

    pub fn true_row(&self, t: usize) -> &[f64] {
        &self.x_true[t * self.dim..(t + 1) * self.dim]
    }

    pub fn pred_row(&self, t: usize) -> &[f64] {
        &self.x_pred[t * self.dim..(t + 1) * self.dim]
    }
}

#[derive(Clone, Debug)]
pub struct RunMeta {
    pub model_id: String,
    pub variant: Variant,
    pub p_raw: f64,
    pub param_index: usize,
    pub ic_index: usize,
}

/// Rolls `model` along one stored trajectory: copy the first ISL true states,
/// then x[t] = x[t-1] + dt * f(window of the last ISL predicted states).
pub fn forecast(
    model: &dyn Forecaster,
    truth: &[f64],
    dim: usize,
    dt: f64,
    t0: f64,
    meta: RunMeta,
) -> Result<ForecastRun> {
    let n_t = truth.len() / dim;
    let isl = model.isl();
    if n_t < isl + 1 {
        return Err(Error::Evaluation(format!(
            "trajectory has {n_t} samples; rollout needs at least ISL + 1 = {}",
            isl + 1
        )));
    }
    let mut pred = vec![0.0; truth.len()];
    pred[..isl * dim].copy_from_slice(&truth[..isl * dim]);
    let mut diverged_at = None;

    for t in isl..n_t {
        let window = &pred[(t - isl) * dim..t * dim];
        let t_last = t0 + (t - 1) as f64 * dt;
        let deriv = model.predict_deriv(window, t_last);
        debug_assert_eq!(deriv.len(), dim);
        let mut next = vec![0.0; dim];
        let mut norm2 = 0.0;
        for d in 0..dim {
            next[d] = pred[(t - 1) * dim + d] + dt * deriv[d];
            norm2 += next[d] * next[d];
        }
        if !norm2.is_finite() || norm2.sqrt() > DIVERGENCE_LIMIT {
            diverged_at = Some(t);
            let row = pred[(t - 1) * dim..t * dim].to_vec();
            for tt in t..n_t {
                pred[tt * dim..(tt + 1) * dim].copy_from_slice(&row);
            }
            break;
        }
        pred[t * dim..(t + 1) * dim].copy_from_slice(&next);
    }

    Ok(ForecastRun {
        model_id: meta.model_id,
        variant: meta.variant,
        p_raw: meta.p_raw,
        param_index: meta.param_index,
        ic_index: meta.ic_index,
        dim,
        dt,
        x_true: truth.to_vec(),
        x_pred: pred,
        isl,
        diverged_at,
    })
}

/// Rolls a model over every (parameter, initial condition) of a split in
/// deterministic (parameter index, ic index) order. Per-run divergence is
/// recorded, never fatal. The factory is invoked once per parameter so
/// per-parameter weight generation is reused across initial conditions.
pub fn batch_forecast<F>(
    model_id: &str,
    variant: Variant,
    factory: F,
    dataset: &TrajectoryDataset,
) -> Result<Vec<ForecastRun>>
where
    F: Fn(f64) -> Result<Box<dyn Forecaster>>,
{
    let mut runs = Vec::with_capacity(dataset.n_params() * dataset.n_ics);
    let dim = dataset.state_dim();
    let dt = dataset.system.sample_interval;
    let t0 = dataset.sample_time(0);
    for (pi, &p) in dataset.params.iter().enumerate() {
        let model = factory(p)?;
        for ic in 0..dataset.n_ics {
            let truth = dataset.trajectory(pi, ic);
            let meta = RunMeta {
                model_id: model_id.to_string(),
                variant,
                p_raw: p,
                param_index: pi,
                ic_index: ic,
            };
            runs.push(forecast(model.as_ref(), truth, dim, dt, t0, meta)?);
        }
    }
    Ok(runs)
}

/// Writes one run as CSV: t, true_0.., pred_0..
pub fn write_run_csv(run: &ForecastRun, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push('t');
    for d in 0..run.dim {
        out.push_str(&format!(",true_{d}"));
    }
    for d in 0..run.dim {
        out.push_str(&format!(",pred_{d}"));
    }
    out.push('\n');
    for t in 0..run.n_t() {
        out.push_str(&format!("{}", t as f64 * run.dt));
        for v in run.true_row(t) {
            out.push_str(&format!(",{v}"));
        }
        for v in run.pred_row(t) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}
