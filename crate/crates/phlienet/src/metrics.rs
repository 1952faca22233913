//! Forecast quality metrics: NRMSE evolution, Time-to-Threshold with the two
//! aggregation modes, and the dB power-spectrum error.

use crate::error::{Error, Result};
use crate::rollout::ForecastRun;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Guard against zero ground-truth variance in the NRMSE denominator.
pub const EPSILON: f64 = 1e-8;
/// Guard against zero bins inside the dB logarithm.
pub const EPSILON_LOG: f64 = 1e-12;

/// Variance of the ground-truth states aggregated across initial conditions,
/// times, and dimensions (one scalar per parameter value).
pub fn ground_truth_variance(runs: &[&ForecastRun]) -> f64 {
    let mut n = 0usize;
    let mut mean = 0.0;
    for r in runs {
        for v in &r.x_true {
            n += 1;
            mean += v;
        }
    }
    mean /= n as f64;
    let mut var = 0.0;
    for r in runs {
        for v in &r.x_true {
            var += (v - mean) * (v - mean);
        }
    }
    var / n as f64
}

/// NRMSE(t) = ||pred(t) - true(t)||_2 / (sqrt(sigma2) + EPSILON). Warm-up
/// steps contribute zeros by construction; steps at or after a divergence are
/// +inf so they sit above any threshold.
pub fn nrmse_curve(run: &ForecastRun, sigma2: f64) -> Vec<f64> {
    assert!(sigma2 >= 0.0);
    let denom = sigma2.sqrt() + EPSILON;
    let mut out = Vec::with_capacity(run.n_t());
    for t in 0..run.n_t() {
        if run.diverged_at.is_some_and(|d| t >= d) {
            out.push(f64::INFINITY);
            continue;
        }
        let err: f64 = run
            .pred_row(t)
            .iter()
            .zip(run.true_row(t))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        out.push(err / denom);
    }
    out
}

/// Maximum continuous time the curve stays below the threshold: the index of
/// the first value >= theta_rel, times dt; the full horizon if it never
/// crosses.
pub fn ttt(curve: &[f64], theta_rel: f64, dt: f64) -> f64 {
    assert!(theta_rel > 0.0);
    match curve.iter().position(|&v| v >= theta_rel) {
        Some(i) => i as f64 * dt,
        None => curve.len() as f64 * dt,
    }
}

fn mean_curve(curves: &[&[f64]]) -> Vec<f64> {
    let n_t = curves[0].len();
    let mut out = vec![0.0; n_t];
    for c in curves {
        assert_eq!(c.len(), n_t, "curves must share a horizon");
        for (o, v) in out.iter_mut().zip(c.iter()) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= curves.len() as f64;
    }
    out
}

/// Both TtT aggregation modes over one model's runs.
#[derive(Clone, Debug, Serialize)]
pub struct TttSummary {
    /// All curves (every IC of every parameter) averaged into one mean curve,
    /// then thresholded: the value annotated in NRMSE-evolution legends.
    pub legend: f64,
    /// Threshold crossing of each per-parameter mean curve (ICs averaged).
    pub per_param: Vec<f64>,
    /// Mean and population standard deviation of `per_param`.
    pub mean: f64,
    pub std: f64,
}

/// Computes both modes from per-run curves grouped by `param_index`.
pub fn ttt_aggregate_modes(
    curves: &[Vec<f64>],
    param_indices: &[usize],
    n_params: usize,
    theta_rel: f64,
    dt: f64,
) -> TttSummary {
    assert_eq!(curves.len(), param_indices.len());
    let all: Vec<&[f64]> = curves.iter().map(|c| c.as_slice()).collect();
    let legend = ttt(&mean_curve(&all), theta_rel, dt);

    let mut per_param = Vec::with_capacity(n_params);
    for p in 0..n_params {
        let group: Vec<&[f64]> = curves
            .iter()
            .zip(param_indices)
            .filter(|(_, &pi)| pi == p)
            .map(|(c, _)| c.as_slice())
            .collect();
        assert!(!group.is_empty(), "parameter {p} has no runs");
        per_param.push(ttt(&mean_curve(&group), theta_rel, dt));
    }
    let mean = per_param.iter().sum::<f64>() / per_param.len() as f64;
    let var =
        per_param.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / per_param.len() as f64;
    TttSummary { legend, per_param, mean, std: var.sqrt() }
}

/// Magnitudes of the one-sided spectrum: |FFT(x)| at bins 0..=N/2.
pub fn rfft_magnitudes(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Per-dimension power spectral density in decibels:
/// 20 log10((2/N) |rFFT(x)| + EPSILON_LOG).
pub fn psd_db(signal: &[f64]) -> Vec<f64> {
    let n = signal.len() as f64;
    rfft_magnitudes(signal)
        .into_iter()
        .map(|m| 20.0 * ((2.0 / n) * m + EPSILON_LOG).log10())
        .collect()
}

/// Mean over dimensions of the mean absolute PSD difference across frequency
/// bins. Diverged runs are excluded (None) rather than reported as infinite.
pub fn spectrum_error(run: &ForecastRun) -> Option<f64> {
    if run.diverged_at.is_some() {
        return None;
    }
    if run.n_t() < 8 {
        return None;
    }
    let mut total = 0.0;
    for d in 0..run.dim {
        let truth: Vec<f64> = (0..run.n_t()).map(|t| run.true_row(t)[d]).collect();
        let pred: Vec<f64> = (0..run.n_t()).map(|t| run.pred_row(t)[d]).collect();
        let pt = psd_db(&truth);
        let pp = psd_db(&pred);
        let l1: f64 = pt.iter().zip(&pp).map(|(a, b)| (a - b).abs()).sum::<f64>() / pt.len() as f64;
        total += l1;
    }
    Some(total / run.dim as f64)
}

/// Everything evaluation needs for one model on one split.
#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub model_id: String,
    pub theta_rel: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub params: Vec<f64>,
    /// (param_index, ic_index) per run, in run order.
    pub run_index: Vec<(usize, usize)>,
    pub per_run_nrmse: Vec<Vec<f64>>,
    pub per_param_nrmse: Vec<Vec<f64>>,
    pub aggregate_nrmse: Vec<f64>,
    pub ttt: TttSummary,
    pub spectrum_per_run: Vec<Option<f64>>,
    pub spectrum_per_param: Vec<Option<f64>>,
    pub spectrum_aggregate: Option<f64>,
    pub spectrum_excluded: usize,
    pub diverged_runs: usize,
}

/// Scalar section written to metrics.json.
#[derive(Serialize)]
pub struct MetricsScalars<'a> {
    pub model_id: &'a str,
    pub theta_rel: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub params: &'a [f64],
    pub ttt_legend: f64,
    pub ttt_per_param: &'a [f64],
    pub ttt_mean: f64,
    pub ttt_std: f64,
    pub spectrum_per_param: &'a [Option<f64>],
    pub spectrum_aggregate: Option<f64>,
    pub spectrum_excluded: usize,
    pub diverged_runs: usize,
}

/// Computes every metric for one model's runs (all from the same split, so
/// all curves share the horizon).
pub fn compute_report(runs: &[ForecastRun], params: &[f64], theta_rel: f64) -> MetricsReport {
    assert!(!runs.is_empty(), "no runs to evaluate");
    let model_id = runs[0].model_id.clone();
    let dt = runs[0].dt;
    let n_params = params.len();

    // per-parameter ground-truth variance
    let sigma2: Vec<f64> = (0..n_params)
        .map(|p| {
            let group: Vec<&ForecastRun> =
                runs.iter().filter(|r| r.param_index == p).collect();
            ground_truth_variance(&group)
        })
        .collect();

    let per_run_nrmse: Vec<Vec<f64>> =
        runs.iter().map(|r| nrmse_curve(r, sigma2[r.param_index])).collect();
    let run_index: Vec<(usize, usize)> =
        runs.iter().map(|r| (r.param_index, r.ic_index)).collect();
    let param_indices: Vec<usize> = runs.iter().map(|r| r.param_index).collect();

    let per_param_nrmse: Vec<Vec<f64>> = (0..n_params)
        .map(|p| {
            let group: Vec<&[f64]> = per_run_nrmse
                .iter()
                .zip(&param_indices)
                .filter(|(_, &pi)| pi == p)
                .map(|(c, _)| c.as_slice())
                .collect();
            mean_curve(&group)
        })
        .collect();
    let all: Vec<&[f64]> = per_run_nrmse.iter().map(|c| c.as_slice()).collect();
    let aggregate_nrmse = mean_curve(&all);

    let ttt = ttt_aggregate_modes(&per_run_nrmse, &param_indices, n_params, theta_rel, dt);

    let spectrum_per_run: Vec<Option<f64>> = runs.iter().map(spectrum_error).collect();
    let spectrum_per_param: Vec<Option<f64>> = (0..n_params)
        .map(|p| {
            let vals: Vec<f64> = spectrum_per_run
                .iter()
                .zip(&param_indices)
                .filter(|(_, &pi)| pi == p)
                .filter_map(|(s, _)| *s)
                .collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        })
        .collect();
    let finite: Vec<f64> = spectrum_per_run.iter().filter_map(|s| *s).collect();
    let spectrum_aggregate = if finite.is_empty() {
        None
    } else {
        Some(finite.iter().sum::<f64>() / finite.len() as f64)
    };
    let spectrum_excluded = spectrum_per_run.iter().filter(|s| s.is_none()).count();
    let diverged_runs = runs.iter().filter(|r| r.diverged_at.is_some()).count();

    MetricsReport {
        model_id,
        theta_rel,
        epsilon: EPSILON,
        dt,
        params: params.to_vec(),
        run_index,
        per_run_nrmse,
        per_param_nrmse,
        aggregate_nrmse,
        ttt,
        spectrum_per_run,
        spectrum_per_param,
        spectrum_aggregate,
        spectrum_excluded,
        diverged_runs,
    }
}

impl MetricsReport {
    pub fn scalars(&self) -> MetricsScalars<'_> {
        MetricsScalars {
            model_id: &self.model_id,
            theta_rel: self.theta_rel,
            epsilon: self.epsilon,
            dt: self.dt,
            params: &self.params,
            ttt_legend: self.ttt.legend,
            ttt_per_param: &self.ttt.per_param,
            ttt_mean: self.ttt.mean,
            ttt_std: self.ttt.std,
            spectrum_per_param: &self.spectrum_per_param,
            spectrum_aggregate: self.spectrum_aggregate,
            spectrum_excluded: self.spectrum_excluded,
            diverged_runs: self.diverged_runs,
        }
    }

    /// metrics.json (scalars), nrmse_curves.csv (aggregate + per-parameter
    /// mean curves), spectra.csv (per-bin dB per run and dimension).
    pub fn write(&self, dir: &Path, runs: &[ForecastRun]) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let jpath = dir.join("metrics.json");
        let json = serde_json::to_string_pretty(&self.scalars())
            .map_err(|e| Error::Json { path: jpath.display().to_string(), source: e })?;
        std::fs::write(&jpath, json).map_err(|e| Error::io(&jpath, e))?;

        let cpath = dir.join("nrmse_curves.csv");
        let mut csv = String::from("t,aggregate");
        for p in 0..self.params.len() {
            csv.push_str(&format!(",p{p}"));
        }
        csv.push('\n');
        for t in 0..self.aggregate_nrmse.len() {
            csv.push_str(&format!("{}", t as f64 * self.dt));
            csv.push_str(&format!(",{}", self.aggregate_nrmse[t]));
            for c in &self.per_param_nrmse {
                csv.push_str(&format!(",{}", c[t]));
            }
            csv.push('\n');
        }
        std::fs::write(&cpath, csv).map_err(|e| Error::io(&cpath, e))?;

        let rpath = dir.join("nrmse_runs.csv");
        let mut csv = String::from("t");
        for (p, ic) in &self.run_index {
            csv.push_str(&format!(",p{p}_ic{ic}"));
        }
        csv.push('\n');
        for t in 0..self.aggregate_nrmse.len() {
            csv.push_str(&format!("{}", t as f64 * self.dt));
            for c in &self.per_run_nrmse {
                csv.push_str(&format!(",{}", c[t]));
            }
            csv.push('\n');
        }
        std::fs::write(&rpath, csv).map_err(|e| Error::io(&rpath, e))?;

        let spath = dir.join("spectra.csv");
        let mut f = std::fs::File::create(&spath).map_err(|e| Error::io(&spath, e))?;
        let mut s = String::from("param_index,ic_index,dim,bin,psd_true_db,psd_pred_db\n");
        for run in runs {
            if run.diverged_at.is_some() {
                continue;
            }
            for d in 0..run.dim {
                let truth: Vec<f64> = (0..run.n_t()).map(|t| run.true_row(t)[d]).collect();
                let pred: Vec<f64> = (0..run.n_t()).map(|t| run.pred_row(t)[d]).collect();
                let (pt, pp) = (psd_db(&truth), psd_db(&pred));
                for (b, (a, c)) in pt.iter().zip(&pp).enumerate() {
                    s.push_str(&format!(
                        "{},{},{d},{b},{a},{c}\n",
                        run.param_index, run.ic_index
                    ));
                }
            }
        }
        f.write_all(s.as_bytes()).map_err(|e| Error::io(&spath, e))?;
        Ok(())
    }
}
