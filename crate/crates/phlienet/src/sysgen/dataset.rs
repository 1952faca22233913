//! Trajectory datasets: generation, normalization statistics, and the
//! on-disk format (manifest.json + PHLD1 binary blob).

use super::{integrate, sobol_sample, vector_field, SystemSpec};
use crate::error::{Error, Result};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

pub const DATA_MAGIC: &[u8; 5] = b"PHLD1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "val")]
    Val,
    #[serde(rename = "test-interp")]
    TestInterp,
    #[serde(rename = "test-extrap")]
    TestExtrap,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::TestInterp => "test-interp",
            Split::TestExtrap => "test-extrap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test-interp" => Ok(Split::TestInterp),
            "test-extrap" => Ok(Split::TestExtrap),
            other => Err(Error::Config(format!("unknown split: {other}"))),
        }
    }

    fn stream_id(&self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::TestInterp => 2,
            Split::TestExtrap => 3,
        }
    }

    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::TestInterp, Split::TestExtrap];
}

/// How a split picks its parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSpec {
    /// Quasi-random points in the system's training range; `offset` selects a
    /// disjoint subsequence for held-out splits.
    Sobol { n: usize, offset: u32 },
    /// An explicit parameter list (extrapolation protocols).
    Explicit(Vec<f64>),
}

/// Generation protocol for one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitProtocol {
    pub params: ParamSpec,
    pub n_ics: usize,
    pub t_end: f64,
}

/// Per-feature normalization statistics over the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &[f64], state_dim: usize) -> Result<Self> {
        let n = x.len() / state_dim;
        let mut mean = vec![0.0; state_dim];
        for row in 0..n {
            for d in 0..state_dim {
                mean[d] += x[row * state_dim + d];
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; state_dim];
        for row in 0..n {
            for d in 0..state_dim {
                let c = x[row * state_dim + d] - mean[d];
                var[d] += c * c;
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
        if std.iter().any(|&s| s <= 0.0) {
            return Err(Error::Format("degenerate feature: scaler std must be > 0".into()));
        }
        Ok(Scaler { mean, std })
    }

    pub fn normalize(&self, x: &[f64], out: &mut [f64]) {
        for (d, o) in out.iter_mut().enumerate() {
            let f = d % self.mean.len();
            *o = (x[d] - self.mean[f]) / self.std[f];
        }
    }
}

/// Trajectories indexed by (parameter, initial condition, time) plus analytic
/// derivative targets and the training-split normalization statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDataset {
    pub system: SystemSpec,
    pub split: Split,
    pub params: Vec<f64>,
    pub n_ics: usize,
    pub n_t: usize,
    /// States, shape (N_p, N_ics, N_T, D_x) row-major.
    pub x: Vec<f64>,
    /// Analytic vector field at each sample, same shape as `x`.
    pub dx: Vec<f64>,
    pub scaler: Scaler,
    pub noise_level: f64,
    pub seed: u64,
    pub t_end: f64,
}

impl TrajectoryDataset {
    pub fn state_dim(&self) -> usize {
        self.system.state_dim
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn idx(&self, p: usize, ic: usize, t: usize) -> usize {
        ((p * self.n_ics + ic) * self.n_t + t) * self.state_dim()
    }

    pub fn state(&self, p: usize, ic: usize, t: usize) -> &[f64] {
        let i = self.idx(p, ic, t);
        &self.x[i..i + self.state_dim()]
    }

    pub fn deriv(&self, p: usize, ic: usize, t: usize) -> &[f64] {
        let i = self.idx(p, ic, t);
        &self.dx[i..i + self.state_dim()]
    }

    /// Full trajectory (N_T, D_x) for one (parameter, initial condition).
    pub fn trajectory(&self, p: usize, ic: usize) -> &[f64] {
        let i = self.idx(p, ic, 0);
        &self.x[i..i + self.n_t * self.state_dim()]
    }

    /// Absolute time of sample `t` (transient offset included), as seen by the
    /// nonautonomous forcing term.
    pub fn sample_time(&self, t: usize) -> f64 {
        self.system.t_trans + t as f64 * self.system.sample_interval
    }

    fn expected_len(&self) -> usize {
        self.n_params() * self.n_ics * self.n_t * self.state_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.expected_len() || self.dx.len() != self.x.len() {
            return Err(Error::Shape(format!(
                "dataset arrays: {} / {} scalars, expected {}",
                self.x.len(),
                self.dx.len(),
                self.expected_len()
            )));
        }
        if self.x.iter().chain(self.dx.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Format("dataset contains non-finite values".into()));
        }
        if self.scaler.std.iter().any(|&s| s <= 0.0) {
            return Err(Error::Format("scaler std must be > 0 per feature".into()));
        }
        Ok(())
    }
}

fn resolve_params(system: &SystemSpec, spec: &ParamSpec) -> Vec<f64> {
    match spec {
        ParamSpec::Sobol { n, offset } => sobol_sample(system.varied_param_range, *n, *offset),
        ParamSpec::Explicit(list) => list.clone(),
    }
}

/// Generates all trajectories of one split.
///
/// Initial conditions are drawn from the system's IC box by a generator
/// seeded per (split, parameter, initial condition), so results do not depend
/// on generation order. For the training split the scaler is fitted here; all
/// other splits copy the training scaler passed in.
pub fn build_dataset(
    system: &SystemSpec,
    split: Split,
    protocol: &SplitProtocol,
    seed: u64,
    noise_level: f64,
    train_scaler: Option<&Scaler>,
) -> Result<TrajectoryDataset> {
    system.validate()?;
    if protocol.n_ics == 0 {
        return Err(Error::Config("n_ics must be positive".into()));
    }
    let params = resolve_params(system, &protocol.params);
    if params.is_empty() {
        return Err(Error::Config("empty parameter set".into()));
    }
    let n_t = system.samples_for(protocol.t_end);
    let d = system.state_dim;
    let mut x = vec![0.0; params.len() * protocol.n_ics * n_t * d];
    let mut dx = vec![0.0; x.len()];

    for (pi, &p) in params.iter().enumerate() {
        for ic in 0..protocol.n_ics {
            let mut rng = Rng::stream(seed, split.stream_id(), pi as u64, ic as u64);
            let x0: Vec<f64> =
                system.ic_box.iter().map(|b| rng.uniform_in(b[0], b[1])).collect();
            let traj = integrate(system, p, &x0, protocol.t_end).map_err(|e| match e {
                Error::Divergence { system, param, time, .. } => {
                    Error::Divergence { system, param, ic, time }
                }
                other => other,
            })?;
            debug_assert_eq!(traj.len(), n_t);
            for (t, state) in traj.iter().enumerate() {
                let t_abs = system.t_trans + t as f64 * system.sample_interval;
                let deriv = vector_field(system, state, p, t_abs);
                let base = ((pi * protocol.n_ics + ic) * n_t + t) * d;
                x[base..base + d].copy_from_slice(state);
                dx[base..base + d].copy_from_slice(&deriv);
            }
        }
    }

    let scaler = match (split, train_scaler) {
        (Split::Train, _) => Scaler::fit(&x, d)?,
        (_, Some(s)) => s.clone(),
        (_, None) => {
            return Err(Error::Config(format!(
                "split {} requires the training scaler",
                split.as_str()
            )))
        }
    };

    let ds = TrajectoryDataset {
        system: system.clone(),
        split,
        params,
        n_ics: protocol.n_ics,
        n_t,
        x,
        dx,
        scaler,
        noise_level,
        seed,
        t_end: protocol.t_end,
    };
    ds.validate()?;
    Ok(ds)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    system: SystemSpec,
    split: Split,
    params: Vec<f64>,
    n_ics: usize,
    n_t: usize,
    state_dim: usize,
    scaler: Scaler,
    noise_level: f64,
    seed: u64,
    t_end: f64,
}

/// Writes `manifest.json` and `data.bin` (magic + X then dX as little-endian
/// f64) into `dir`.
pub fn save_dataset(ds: &TrajectoryDataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        system: ds.system.clone(),
        split: ds.split,
        params: ds.params.clone(),
        n_ics: ds.n_ics,
        n_t: ds.n_t,
        state_dim: ds.state_dim(),
        scaler: ds.scaler.clone(),
        noise_level: ds.noise_level,
        seed: ds.seed,
        t_end: ds.t_end,
    };
    let mpath = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Json { path: mpath.display().to_string(), source: e })?;
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;

    let bpath = dir.join("data.bin");
    let mut buf = Vec::with_capacity(5 + 8 * (ds.x.len() + ds.dx.len()));
    buf.extend_from_slice(DATA_MAGIC);
    for v in ds.x.iter().chain(ds.dx.iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(&bpath).map_err(|e| Error::io(&bpath, e))?;
    f.write_all(&buf).map_err(|e| Error::io(&bpath, e))?;
    Ok(())
}

/// Lossless inverse of [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<TrajectoryDataset> {
    let mpath = dir.join("manifest.json");
    let mtext = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: Manifest = serde_json::from_str(&mtext)
        .map_err(|e| Error::Json { path: mpath.display().to_string(), source: e })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset format version {}",
            manifest.format_version
        )));
    }
    if manifest.state_dim != manifest.system.state_dim {
        return Err(Error::Format("manifest state_dim disagrees with system".into()));
    }

    let bpath = dir.join("data.bin");
    let mut raw = Vec::new();
    fs::File::open(&bpath)
        .map_err(|e| Error::io(&bpath, e))?
        .read_to_end(&mut raw)
        .map_err(|e| Error::io(&bpath, e))?;
    if raw.len() < DATA_MAGIC.len() || &raw[..DATA_MAGIC.len()] != DATA_MAGIC {
        return Err(Error::Format("bad magic in data.bin".into()));
    }
    let body = &raw[DATA_MAGIC.len()..];
    let n_expected = manifest.params.len() * manifest.n_ics * manifest.n_t * manifest.state_dim;
    if body.len() != 2 * n_expected * 8 {
        return Err(Error::Format(format!(
            "data.bin holds {} bytes, manifest declares {}",
            body.len(),
            2 * n_expected * 8
        )));
    }
    let mut values = Vec::with_capacity(2 * n_expected);
    for chunk in body.chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let dx = values.split_off(n_expected);
    let ds = TrajectoryDataset {
        system: manifest.system,
        split: manifest.split,
        params: manifest.params,
        n_ics: manifest.n_ics,
        n_t: manifest.n_t,
        x: values,
        dx,
        scaler: manifest.scaler,
        noise_level: manifest.noise_level,
        seed: manifest.seed,
        t_end: manifest.t_end,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysgen::SystemName;

    fn tiny_vdp() -> TrajectoryDataset {
        let sys = SystemSpec::standard(SystemName::Vanderpol);
        let protocol = SplitProtocol {
            params: ParamSpec::Sobol { n: 2, offset: 0 },
            n_ics: 2,
            t_end: 0.5,
        };
        build_dataset(&sys, Split::Train, &protocol, 7, 0.05, None).unwrap()
    }

    #[test]
    fn shapes_follow_protocol() {
        let ds = tiny_vdp();
        assert_eq!(ds.n_params(), 2);
        assert_eq!(ds.n_ics, 2);
        assert_eq!(ds.n_t, 11); // 0.5 / 0.05 + 1
        assert_eq!(ds.x.len(), 2 * 2 * 11 * 2);
    }

    #[test]
    fn derivative_identity_is_bit_exact() {
        let ds = tiny_vdp();
        for pi in 0..ds.n_params() {
            for ic in 0..ds.n_ics {
                for t in 0..ds.n_t {
                    let want =
                        vector_field(&ds.system, ds.state(pi, ic, t), ds.params[pi], ds.sample_time(t));
                    assert_eq!(ds.deriv(pi, ic, t), &want[..]);
                }
            }
        }
    }

    #[test]
    fn minimal_time_axis() {
        let sys = SystemSpec::standard(SystemName::Vanderpol);
        let protocol = SplitProtocol {
            params: ParamSpec::Explicit(vec![2.0]),
            n_ics: 1,
            t_end: sys.sample_interval,
        };
        let ds = build_dataset(&sys, Split::Train, &protocol, 1, 0.0, None).unwrap();
        assert_eq!(ds.n_t, 2);
    }

    #[test]
    fn non_train_split_requires_scaler_and_copies_it() {
        let train = tiny_vdp();
        let sys = train.system.clone();
        let protocol = SplitProtocol {
            params: ParamSpec::Explicit(vec![3.0]),
            n_ics: 1,
            t_end: 0.5,
        };
        assert!(build_dataset(&sys, Split::Val, &protocol, 7, 0.05, None).is_err());
        let val = build_dataset(&sys, Split::Val, &protocol, 7, 0.05, Some(&train.scaler)).unwrap();
        assert_eq!(val.scaler, train.scaler);
    }

    #[test]
    fn val_split_uses_different_initial_conditions() {
        let sys = SystemSpec::standard(SystemName::Vanderpol);
        let protocol =
            SplitProtocol { params: ParamSpec::Explicit(vec![2.0]), n_ics: 1, t_end: 0.1 };
        let train = build_dataset(&sys, Split::Train, &protocol, 7, 0.0, None).unwrap();
        let val =
            build_dataset(&sys, Split::Val, &protocol, 7, 0.0, Some(&train.scaler)).unwrap();
        assert_ne!(train.state(0, 0, 0), val.state(0, 0, 0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = tiny_vdp();
        let b = tiny_vdp();
        assert_eq!(a, b);
    }

    #[test]
    fn roundtrip_is_bit_identical() {
        let ds = tiny_vdp();
        let dir = std::env::temp_dir().join(format!("phld_rt_{}", std::process::id()));
        save_dataset(&ds, &dir).unwrap();
        let back = load_dataset(&dir).unwrap();
        assert_eq!(ds, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corrupt_magic_is_format_error() {
        let ds = tiny_vdp();
        let dir = std::env::temp_dir().join(format!("phld_mag_{}", std::process::id()));
        save_dataset(&ds, &dir).unwrap();
        let bpath = dir.join("data.bin");
        let mut raw = std::fs::read(&bpath).unwrap();
        raw[0] = b'X';
        std::fs::write(&bpath, raw).unwrap();
        match load_dataset(&dir) {
            Err(Error::Format(msg)) => assert!(msg.contains("magic")),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_blob_is_format_error() {
        let ds = tiny_vdp();
        let dir = std::env::temp_dir().join(format!("phld_tr_{}", std::process::id()));
        save_dataset(&ds, &dir).unwrap();
        let bpath = dir.join("data.bin");
        let raw = std::fs::read(&bpath).unwrap();
        std::fs::write(&bpath, &raw[..raw.len() - 8]).unwrap();
        assert!(matches!(load_dataset(&dir), Err(Error::Format(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_shape_disagreement_is_error() {
        let ds = tiny_vdp();
        let dir = std::env::temp_dir().join(format!("phld_sh_{}", std::process::id()));
        save_dataset(&ds, &dir).unwrap();
        let mpath = dir.join("manifest.json");
        let text = std::fs::read_to_string(&mpath).unwrap();
        // declare one extra time sample without touching the blob
        let text = text.replace("\"n_t\": 11", "\"n_t\": 12");
        std::fs::write(&mpath, text).unwrap();
        assert!(matches!(load_dataset(&dir), Err(Error::Format(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn duffing_phase_identity_reproducible_from_metadata() {
        // the forcing term reads absolute time starting at t_trans; stored
        // derivatives must match the vector field re-evaluated from metadata
        let mut sys = SystemSpec::standard(SystemName::Duffing);
        sys.t_trans = 2.0; // short transient keeps the test quick
        let protocol = SplitProtocol {
            params: ParamSpec::Explicit(vec![0.3]),
            n_ics: 1,
            t_end: 0.5,
        };
        let ds = build_dataset(&sys, Split::Train, &protocol, 3, 0.0, None).unwrap();
        for t in 0..ds.n_t {
            let t_abs = ds.sample_time(t);
            assert_eq!(t_abs, sys.t_trans + t as f64 * sys.sample_interval);
            let want = vector_field(&ds.system, ds.state(0, 0, t), 0.3, t_abs);
            assert_eq!(ds.deriv(0, 0, t), &want[..]);
            // and the phase genuinely matters: time zero would disagree
            let wrong = vector_field(&ds.system, ds.state(0, 0, t), 0.3, t as f64 * sys.sample_interval);
            if t > 0 {
                assert_ne!(ds.deriv(0, 0, t), &wrong[..]);
            }
        }
    }

    #[test]
    fn finance_extrapolation_list_from_protocol() {
        let want = [0.55, 0.65, 0.75, 0.85, 0.95, 3.55, 3.60, 3.65, 3.70, 3.75];
        let sys = SystemSpec::standard(SystemName::Finance);
        let got = resolve_params(&sys, &ParamSpec::Explicit(want.to_vec()));
        assert_eq!(got, want);
    }
}
