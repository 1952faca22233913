//! Fixed-step classical 4th-order Runge–Kutta integration.
//!
//! The data protocols pin a solver step rather than an adaptive tolerance,
//! so a fixed step keeps every trajectory deterministic and testable.

use super::{vector_field, SystemSpec};
use crate::error::{Error, Result};

pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// One RK4 step of a generic right-hand side f(x, t).
pub fn rk4_step(f: &dyn Fn(&[f64], f64) -> Vec<f64>, x: &[f64], t: f64, h: f64) -> Vec<f64> {
    let k1 = f(x, t);
    let x2: Vec<f64> = x.iter().zip(&k1).map(|(&xi, &ki)| xi + 0.5 * h * ki).collect();
    let k2 = f(&x2, t + 0.5 * h);
    let x3: Vec<f64> = x.iter().zip(&k2).map(|(&xi, &ki)| xi + 0.5 * h * ki).collect();
    let k3 = f(&x3, t + 0.5 * h);
    let x4: Vec<f64> = x.iter().zip(&k3).map(|(&xi, &ki)| xi + h * ki).collect();
    let k4 = f(&x4, t + h);
    x.iter()
        .enumerate()
        .map(|(i, &xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates a generic right-hand side from `t0`, recording a sample every
/// `record_every` time units over `t_span` (inclusive of both endpoints).
///
/// `record_every` must be an integer multiple of `h`. Returns the sampled
/// states and the absolute time of the first sample.
pub fn integrate_rhs(
    f: &dyn Fn(&[f64], f64) -> Vec<f64>,
    x0: &[f64],
    t0: f64,
    t_span: f64,
    h: f64,
    record_every: f64,
) -> Result<Vec<Vec<f64>>> {
    assert!(t_span >= 0.0 && h > 0.0);
    let steps_per_sample = (record_every / h).round() as usize;
    assert!(steps_per_sample >= 1, "record_every must be >= solver step");
    let n_samples = (t_span / record_every + 1e-9).floor() as usize + 1;

    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(n_samples);
    out.push(x.clone());
    for s in 1..n_samples {
        for k in 0..steps_per_sample {
            let t = t0 + ((s - 1) * steps_per_sample + k) as f64 * h;
            x = rk4_step(f, &x, t, h);
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        if !norm2.is_finite() || norm2.sqrt() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                system: "rhs".into(),
                param: f64::NAN,
                ic: 0,
                time: t0 + s as f64 * record_every,
            });
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Integrates a benchmark system at parameter `p` from `x0`, discarding the
/// system's transient before recording `t_span` worth of samples.
///
/// Recorded time for the nonautonomous forcing starts at `t_trans`, so the
/// phase is reproducible from the stored metadata.
pub fn integrate(system: &SystemSpec, p: f64, x0: &[f64], t_span: f64) -> Result<Vec<Vec<f64>>> {
    let sys = system.clone();
    let f = move |x: &[f64], t: f64| vector_field(&sys, x, p, t);
    let h = system.solver_step;

    let mut state = x0.to_vec();
    let mut t = 0.0;
    if system.t_trans > 0.0 {
        let n_steps = (system.t_trans / h).round() as usize;
        for k in 0..n_steps {
            state = rk4_step(&f, &state, k as f64 * h, h);
            let norm2: f64 = state.iter().map(|v| v * v).sum();
            if !norm2.is_finite() || norm2.sqrt() > DIVERGENCE_LIMIT {
                return Err(Error::Divergence {
                    system: system.name.as_str().into(),
                    param: p,
                    ic: 0,
                    time: k as f64 * h,
                });
            }
        }
        t = system.t_trans;
    }
    integrate_rhs(&f, &state, t, t_span, h, system.sample_interval).map_err(|e| match e {
        Error::Divergence { time, .. } => Error::Divergence {
            system: system.name.as_str().into(),
            param: p,
            ic: 0,
            time,
        },
        other => other,
    })
}
