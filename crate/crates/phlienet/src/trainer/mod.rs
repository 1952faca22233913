//! End-to-end optimization of every model variant: derivative-matching loss,
//! plateau LR schedule, early stopping, input-noise augmentation, and
//! multi-seed training with validation-based selection.

mod checkpoint;
mod optim;

pub use checkpoint::{load_checkpoint, save_checkpoint, ModelCheckpoint};
pub use optim::{Optimizer, OptimizerKind};

use crate::diffcore::{bind, value_and_grad, Graph, NodeId, ParameterStore, Tensor};
use crate::error::{Error, Result};
use crate::hypernet::HyperNetSpec;
use crate::lie::{AnchorBank, LieSpec};
use crate::rng::Rng;
use crate::rollout::{Forecaster, Variant};
use crate::sysgen::{Scaler, TrajectoryDataset};
use crate::targets::{
    ffnn_forward_graph, forward, layout_for, lstm_forward_graph, tcnn_forward_graph, TargetKind,
    TargetNodes, TargetSpec, WeightVector,
};
use serde::{Deserialize, Serialize};

/// Training protocol knobs. Defaults follow the standard protocol; desk
/// profiles shrink epochs/seeds and subsample windows via `window_stride`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr0: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub plateau_rel_margin: f64,
    pub stop_patience: usize,
    pub noise_level: f64,
    pub seeds: usize,
    pub optimizer: OptimizerKind,
    /// Take every k-th training window along the time axis.
    pub window_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            max_epochs: 1000,
            lr0: 1e-3,
            plateau_factor: 0.25,
            plateau_patience: 15,
            plateau_rel_margin: 1e-5,
            stop_patience: 30,
            noise_level: 0.05,
            seeds: 5,
            optimizer: OptimizerKind::Adam,
            window_stride: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.seeds == 0 || self.window_stride == 0 {
            return Err(Error::Config("batch_size, seeds, window_stride must be positive".into()));
        }
        if !(0.0 < self.plateau_factor && self.plateau_factor < 1.0) {
            return Err(Error::Config("plateau_factor must lie in (0, 1)".into()));
        }
        if self.lr0 <= 0.0 || self.plateau_rel_margin <= 0.0 {
            return Err(Error::Config("lr0 and plateau_rel_margin must be positive".into()));
        }
        Ok(())
    }

    /// Stable fingerprint of the configuration (FNV-1a over its JSON form).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// One model to train: variant + target architecture (+ LIE/hypernet shape
/// for the weight-generating variant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub variant: Variant,
    pub target: TargetSpec,
    pub lie: Option<LieSpec>,
    pub hypernet_hidden: Vec<usize>,
}

impl ModelSpec {
    pub fn phlienet(name: &str, target: TargetSpec, lie: LieSpec) -> Self {
        ModelSpec {
            name: name.into(),
            variant: Variant::Phlienet,
            target,
            lie: Some(lie),
            hypernet_hidden: vec![64, 64],
        }
    }

    pub fn baseline(name: &str, variant: Variant, target: TargetSpec) -> Self {
        assert_ne!(variant, Variant::Phlienet);
        ModelSpec { name: name.into(), variant, target, lie: None, hypernet_hidden: vec![] }
    }

    pub fn hypernet_spec(&self) -> Option<HyperNetSpec> {
        let lie = self.lie.as_ref()?;
        Some(
            HyperNetSpec::for_target(lie.embedding_dim, &self.target)
                .with_hidden(self.hypernet_hidden.clone()),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self.variant {
            Variant::Phlienet => {
                if self.lie.is_none() {
                    return Err(Error::Config(format!(
                        "model {} is phlienet but carries no LIE spec",
                        self.name
                    )));
                }
            }
            _ => {
                if self.lie.is_some() {
                    return Err(Error::Config(format!(
                        "model {} is a baseline but carries a LIE spec",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A model's trainable state plus the normalization context it was fit with.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub spec: ModelSpec,
    pub params: ParameterStore,
    pub scaler: Scaler,
    pub param_norm: [f64; 2],
}

impl ModelState {
    /// Freshly initialized parameters for this model (seeded).
    pub fn init(spec: &ModelSpec, scaler: &Scaler, param_norm: [f64; 2], seed: u64) -> Self {
        spec.validate().expect("valid model spec");
        let mut params = ParameterStore::new();
        match spec.variant {
            Variant::Phlienet => {
                let lie = spec.lie.as_ref().unwrap();
                let bank = AnchorBank::init(lie, param_norm, seed);
                params.insert("lie.embeddings", bank.embeddings.clone());
                let hnn = spec.hypernet_spec().unwrap();
                hnn.init_into(&mut params, spec.target.layers() + 1, seed ^ 0x9e37);
            }
            _ => {
                let layout = layout_for(&spec.target);
                let mut rng = Rng::stream(seed, 0x700, 0, 0);
                for e in &layout.entries {
                    let t = if e.name.ends_with(".bias") {
                        Tensor::zeros(&e.shape)
                    } else {
                        let fan_in = e.shape[..e.shape.len() - 1].iter().product::<usize>().max(1);
                        let std = 1.0 / (fan_in as f64).sqrt();
                        Tensor::from_vec(
                            &e.shape,
                            (0..e.shape.iter().product()).map(|_| rng.normal() * std).collect(),
                        )
                    };
                    params.insert(&e.name, t);
                }
            }
        }
        ModelState { spec: spec.clone(), params, scaler: scaler.clone(), param_norm }
    }

    pub fn anchor_bank(&self) -> Option<AnchorBank> {
        let lie = self.spec.lie.as_ref()?;
        let emb = self.params.get("lie.embeddings")?.clone();
        Some(AnchorBank::init(lie, self.param_norm, 0).with_embeddings(emb))
    }

    fn normalize_p(&self, p_raw: f64) -> f64 {
        (p_raw - self.param_norm[0]) / (self.param_norm[1] - self.param_norm[0])
    }

    /// Weight vector this model would run at parameter `p_raw`: generated by
    /// the hypernetwork for phlienet, packed directly for baselines.
    pub fn weights_at(&self, p_raw: f64) -> Result<WeightVector> {
        match self.spec.variant {
            Variant::Phlienet => {
                let bank = self
                    .anchor_bank()
                    .ok_or_else(|| Error::Config("phlienet state without anchor bank".into()))?;
                let hnn = self.spec.hypernet_spec().unwrap();
                crate::hypernet::generate_weights(
                    &hnn,
                    &self.params,
                    &self.spec.target,
                    &bank.embed(p_raw),
                )
            }
            _ => {
                let layout = layout_for(&self.spec.target);
                let tensors: Vec<(String, Tensor)> = self
                    .params
                    .iter()
                    .map(|(n, t)| (n.to_string(), t.clone()))
                    .collect();
                Ok(WeightVector::pack(&layout, &tensors))
            }
        }
    }

    /// Binds the model to one parameter value as a rollout forecaster; for
    /// phlienet the target weights are generated once and reused for the
    /// whole rollout.
    pub fn bind(&self, p_raw: f64) -> Result<Box<dyn Forecaster>> {
        let w = self.weights_at(p_raw)?;
        Ok(Box::new(NetForecaster {
            target: self.spec.target.clone(),
            weights: w,
            scaler: self.scaler.clone(),
            p_feature: match self.spec.variant {
                Variant::Augmented => Some(self.normalize_p(p_raw)),
                _ => None,
            },
        }))
    }
}

/// A bound network: consumes scaler-normalized windows, emits normalized
/// derivative estimates, de-normalized by the feature std before the Euler
/// step. Noise is never injected here.
pub struct NetForecaster {
    target: TargetSpec,
    weights: WeightVector,
    scaler: Scaler,
    p_feature: Option<f64>,
}

impl Forecaster for NetForecaster {
    fn isl(&self) -> usize {
        self.target.isl
    }

    fn predict_deriv(&self, window_raw: &[f64], _t_abs: f64) -> Vec<f64> {
        let d = self.scaler.mean.len();
        let isl = self.target.isl;
        let din = self.target.input_dim;
        let mut win = vec![0.0; isl * din];
        for t in 0..isl {
            for f in 0..d {
                win[t * din + f] =
                    (window_raw[t * d + f] - self.scaler.mean[f]) / self.scaler.std[f];
            }
            if let Some(p) = self.p_feature {
                win[t * din + d] = p;
            }
        }
        let out = forward(&self.target, &self.weights, &win).expect("bound forward");
        out.iter().zip(&self.scaler.std).map(|(z, s)| z * s).collect()
    }
}

/// One assembled minibatch: normalized windows (noise already applied when
/// training), normalized derivative targets, and the raw parameter of every
/// window.
#[derive(Clone, Debug)]
pub struct Minibatch {
    pub n: usize,
    pub isl: usize,
    pub input_dim: usize,
    pub out_dim: usize,
    /// n x isl x input_dim, oldest first.
    pub windows: Vec<f64>,
    /// n x out_dim.
    pub targets: Vec<f64>,
    pub p_raw: Vec<f64>,
}

/// Builds the per-variant loss graph: mean over the minibatch of the squared
/// error between predicted and true normalized derivatives.
pub fn batch_loss_graph(
    g: &mut Graph,
    state: &ModelState,
    node_of: &dyn Fn(&str) -> NodeId,
    batch: &Minibatch,
) -> NodeId {
    let spec = &state.spec;
    let (isl, din, dout, n) = (batch.isl, batch.input_dim, batch.out_dim, batch.n);
    assert!(n > 0, "empty minibatch");

    let preds_and_targets: Vec<(NodeId, NodeId)> = match spec.variant {
        Variant::Phlienet => {
            // group rows by parameter so weights are generated once per value
            let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
            for (i, &p) in batch.p_raw.iter().enumerate() {
                let key = p.to_bits();
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, idx)) => idx.push(i),
                    None => groups.push((key, vec![i])),
                }
            }
            let bank = state.anchor_bank().expect("phlienet bank");
            let hnn = spec.hypernet_spec().unwrap();
            let layout = layout_for(&spec.target);
            groups
                .into_iter()
                .map(|(key, rows)| {
                    let p_raw = f64::from_bits(key);
                    let e = bank.embed_graph(g, node_of("lie.embeddings"), p_raw);
                    let wf = hnn.forward_graph(g, node_of, e);
                    let nodes = TargetNodes::from_flat(g, &layout, wf);
                    let input = g.constant(gather_channel_major(batch, &rows));
                    let pred = tcnn_forward_graph(g, &spec.target, &nodes, input);
                    let tgt = g.constant(gather_targets(batch, &rows));
                    (pred, tgt)
                })
                .collect()
        }
        _ => {
            let layout = layout_for(&spec.target);
            let nodes = TargetNodes::from_nodes(
                layout.entries.iter().map(|e| (e.name.clone(), node_of(&e.name))).collect(),
            );
            let rows: Vec<usize> = (0..n).collect();
            let pred = match spec.target.kind {
                TargetKind::TcnnCd => {
                    let input = g.constant(gather_channel_major(batch, &rows));
                    tcnn_forward_graph(g, &spec.target, &nodes, input)
                }
                TargetKind::Lstm => {
                    let steps: Vec<NodeId> = (0..isl)
                        .map(|t| {
                            let mut data = Vec::with_capacity(n * din);
                            for &r in &rows {
                                let base = (r * isl + t) * din;
                                data.extend_from_slice(&batch.windows[base..base + din]);
                            }
                            g.constant(Tensor::from_vec(&[n, din], data))
                        })
                        .collect();
                    lstm_forward_graph(g, &spec.target, &nodes, &steps)
                }
                TargetKind::Ffnn => {
                    let mut data = Vec::with_capacity(n * din);
                    for &r in &rows {
                        let base = (r * isl + isl - 1) * din;
                        data.extend_from_slice(&batch.windows[base..base + din]);
                    }
                    let input = g.constant(Tensor::from_vec(&[n, din], data));
                    ffnn_forward_graph(g, &spec.target, &nodes, input)
                }
            };
            let tgt = g.constant(Tensor::from_vec(&[n, dout], batch.targets.clone()));
            vec![(pred, tgt)]
        }
    };

    let mut sse: Option<NodeId> = None;
    for (pred, tgt) in preds_and_targets {
        let d = g.sub(pred, tgt);
        let sq = g.square(d);
        let s = g.sum(sq);
        sse = Some(match sse {
            Some(acc) => g.add(acc, s),
            None => s,
        });
    }
    g.scale(sse.expect("at least one group"), 1.0 / n as f64)
}

fn gather_channel_major(batch: &Minibatch, rows: &[usize]) -> Tensor {
    let (isl, din) = (batch.isl, batch.input_dim);
    let mut data = vec![0.0; rows.len() * din * isl];
    for (bi, &r) in rows.iter().enumerate() {
        for t in 0..isl {
            for c in 0..din {
                data[(bi * din + c) * isl + t] = batch.windows[(r * isl + t) * din + c];
            }
        }
    }
    Tensor::from_vec(&[rows.len(), din, isl], data)
}

fn gather_targets(batch: &Minibatch, rows: &[usize]) -> Tensor {
    let dout = batch.out_dim;
    let mut data = Vec::with_capacity(rows.len() * dout);
    for &r in rows {
        data.extend_from_slice(&batch.targets[r * dout..(r + 1) * dout]);
    }
    Tensor::from_vec(&[rows.len(), dout], data)
}

/// Loss and gradients for one minibatch.
pub fn batch_loss(state: &ModelState, batch: &Minibatch) -> Result<(f64, ParameterStore)> {
    value_and_grad(|g, p| batch_loss_graph(g, state, &|n| p.node(n), batch), &state.params)
}

/// Loss value only (validation path).
pub fn batch_loss_value(state: &ModelState, batch: &Minibatch) -> f64 {
    let mut g = Graph::new();
    let bound = bind(&mut g, &state.params);
    let id = batch_loss_graph(&mut g, state, &|n| bound.node(n), batch);
    g.value(id).item()
}

/// Normalized views of a dataset used to assemble minibatches quickly.
///
/// Training targets are the normalized discrete-time derivatives
/// (z[t+1] - z[t]) / dt, so a model that matches its targets reproduces the
/// sampled trajectory exactly under the explicit-Euler rollout. The last
/// sample of each trajectory has no successor and is never a window anchor.
pub struct PreparedData {
    /// z = (x - mean) / std, same shape as the dataset states.
    z: Vec<f64>,
    /// (z[t+1] - z[t]) / dt; the final time index is unused padding.
    dz: Vec<f64>,
    n_ics: usize,
    n_t: usize,
    dim: usize,
    params: Vec<f64>,
    p_norm: Vec<f64>,
    /// (p, ic, t_last) of every usable window.
    index: Vec<(usize, usize, usize)>,
}

impl PreparedData {
    pub fn new(ds: &TrajectoryDataset, isl: usize, stride: usize) -> Self {
        let d = ds.state_dim();
        let dt = ds.system.sample_interval;
        let scaler = &ds.scaler;
        let z: Vec<f64> = ds
            .x
            .iter()
            .enumerate()
            .map(|(i, v)| (v - scaler.mean[i % d]) / scaler.std[i % d])
            .collect();
        let n_rows = ds.n_params() * ds.n_ics;
        let mut dz = vec![0.0; z.len()];
        for row in 0..n_rows {
            for t in 0..ds.n_t - 1 {
                let at = (row * ds.n_t + t) * d;
                for f in 0..d {
                    dz[at + f] = (z[at + d + f] - z[at + f]) / dt;
                }
            }
        }
        let lo = ds.system.varied_param_range[0];
        let hi = ds.system.varied_param_range[1];
        let p_norm = ds.params.iter().map(|p| (p - lo) / (hi - lo)).collect();
        let mut index = Vec::new();
        for pi in 0..ds.n_params() {
            for ic in 0..ds.n_ics {
                let mut t = isl - 1;
                while t + 1 < ds.n_t {
                    index.push((pi, ic, t));
                    t += stride;
                }
            }
        }
        PreparedData {
            z,
            dz,
            n_ics: ds.n_ics,
            n_t: ds.n_t,
            dim: d,
            params: ds.params.clone(),
            p_norm,
            index,
        }
    }

    pub fn window_count(&self) -> usize {
        self.index.len()
    }

    /// Assembles the minibatch for `which` window indices. Gaussian noise of
    /// the configured level is added to inputs only (never targets) when a
    /// noise stream is supplied.
    pub fn assemble(
        &self,
        which: &[usize],
        spec: &ModelSpec,
        noise: Option<(&mut Rng, f64)>,
    ) -> Minibatch {
        let isl = spec.target.isl;
        let din = spec.target.input_dim;
        let dout = spec.target.output_dim;
        let augmented = matches!(spec.variant, Variant::Augmented);
        assert_eq!(din, self.dim + usize::from(augmented));

        let n = which.len();
        let mut windows = vec![0.0; n * isl * din];
        let mut targets = Vec::with_capacity(n * dout);
        let mut p_raw = Vec::with_capacity(n);
        for (bi, &wi) in which.iter().enumerate() {
            let (pi, ic, t_last) = self.index[wi];
            let t0 = t_last + 1 - isl;
            for t in 0..isl {
                let src = ((pi * self.n_ics + ic) * self.n_t + t0 + t) * self.dim;
                let dst = (bi * isl + t) * din;
                windows[dst..dst + self.dim].copy_from_slice(&self.z[src..src + self.dim]);
                if augmented {
                    windows[dst + self.dim] = self.p_norm[pi];
                }
            }
            let src = ((pi * self.n_ics + ic) * self.n_t + t_last) * self.dim;
            targets.extend_from_slice(&self.dz[src..src + self.dim]);
            p_raw.push(self.params[pi]);
        }
        if let Some((rng, level)) = noise {
            if level > 0.0 {
                for v in &mut windows {
                    *v += level * rng.normal();
                }
            }
        }
        Minibatch { n, isl, input_dim: din, out_dim: dout, windows, targets, p_raw }
    }
}

/// Plateau + early-stop bookkeeping over validation losses. Improvement means
/// val < best * (1 - rel_margin); the stop check runs before the cut check.
pub struct PlateauController {
    best: f64,
    plateau_counter: usize,
    stop_counter: usize,
    factor: f64,
    plateau_patience: usize,
    stop_patience: usize,
    rel_margin: f64,
    pub cuts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlateauAction {
    Improved,
    None,
    CutLr,
    Stop,
}

impl PlateauController {
    pub fn new(config: &TrainConfig) -> Self {
        PlateauController {
            best: f64::INFINITY,
            plateau_counter: 0,
            stop_counter: 0,
            factor: config.plateau_factor,
            plateau_patience: config.plateau_patience,
            stop_patience: config.stop_patience,
            rel_margin: config.plateau_rel_margin,
            cuts: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn observe(&mut self, val: f64) -> PlateauAction {
        if val < self.best * (1.0 - self.rel_margin) {
            self.best = val;
            self.plateau_counter = 0;
            self.stop_counter = 0;
            return PlateauAction::Improved;
        }
        self.plateau_counter += 1;
        self.stop_counter += 1;
        if self.stop_counter >= self.stop_patience {
            return PlateauAction::Stop;
        }
        if self.plateau_counter >= self.plateau_patience {
            self.plateau_counter = 0;
            self.cuts += 1;
            return PlateauAction::CutLr;
        }
        PlateauAction::None
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

/// Per-epoch record kept in the checkpoint and training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Trains one model from one seed. Runs epochs of seeded shuffled minibatches
/// with input noise, evaluates the validation loss (no noise) after each
/// epoch, applies the plateau schedule and early stopping, and returns the
/// best-validation checkpoint. Non-finite losses end training with the last
/// finite state and a failure flag instead of an error.
pub fn train(
    spec: &ModelSpec,
    train_ds: &TrajectoryDataset,
    val_ds: &TrajectoryDataset,
    config: &TrainConfig,
    seed_index: usize,
    base_seed: u64,
) -> Result<ModelCheckpoint> {
    config.validate()?;
    spec.validate()?;
    if train_ds.scaler != val_ds.scaler {
        return Err(Error::Config("train and val datasets must share a scaler".into()));
    }
    let seed = Rng::stream(base_seed, 0x5eed, seed_index as u64, 0).next_u64();
    let mut state = ModelState::init(
        spec,
        &train_ds.scaler,
        train_ds.system.varied_param_range,
        seed,
    );
    let train_prep = PreparedData::new(train_ds, spec.target.isl, config.window_stride);
    let val_prep = PreparedData::new(val_ds, spec.target.isl, config.window_stride);
    if train_prep.window_count() == 0 || val_prep.window_count() == 0 {
        return Err(Error::Config(format!(
            "no usable training windows: trajectories hold {} samples but ISL={} needs at least ISL+1",
            train_ds.n_t, spec.target.isl
        )));
    }

    let mut best_state = state.clone();
    let mut controller = PlateauController::new(config);
    let mut optimizer = Optimizer::new(config.optimizer, config.lr0, &state.params);
    let mut history = Vec::new();
    let mut failed = false;

    if config.max_epochs == 0 {
        let val_loss = full_loss(&state, &val_prep, config.batch_size);
        return Ok(ModelCheckpoint {
            model: state,
            seed_index,
            history,
            best_val: val_loss,
            failed: false,
            config_hash: config.hash(),
        });
    }

    let mut order: Vec<usize> = (0..train_prep.window_count()).collect();
    'epochs: for epoch in 0..config.max_epochs {
        let mut shuffle_rng = Rng::stream(seed, 0x0e9, epoch as u64, 0);
        shuffle_rng.shuffle(&mut order);
        let mut train_loss_sum = 0.0;
        let mut train_batches = 0usize;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut noise_rng = Rng::stream(seed, 0x015e, epoch as u64, bi as u64);
            let batch =
                train_prep.assemble(chunk, spec, Some((&mut noise_rng, config.noise_level)));
            match batch_loss(&state, &batch) {
                Ok((loss, grads)) => {
                    optimizer.step(&mut state.params, &grads);
                    train_loss_sum += loss;
                    train_batches += 1;
                }
                Err(Error::NonFiniteLoss { .. }) => {
                    failed = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        let val_loss = full_loss(&state, &val_prep, config.batch_size);
        if !val_loss.is_finite() {
            failed = true;
            break;
        }
        history.push(EpochStats {
            epoch,
            lr: optimizer.lr(),
            train_loss: train_loss_sum / train_batches.max(1) as f64,
            val_loss,
        });
        match controller.observe(val_loss) {
            PlateauAction::Improved => best_state = state.clone(),
            PlateauAction::None => {}
            PlateauAction::CutLr => {
                let lr = optimizer.lr() * controller.factor();
                optimizer.set_lr(lr);
            }
            PlateauAction::Stop => break,
        }
    }

    let best_val = if controller.best().is_finite() {
        controller.best()
    } else {
        full_loss(&best_state, &val_prep, config.batch_size)
    };
    Ok(ModelCheckpoint {
        model: best_state,
        seed_index,
        history,
        best_val,
        failed,
        config_hash: config.hash(),
    })
}

/// Mean loss over every window of a prepared dataset (no noise), evaluated in
/// batch-size chunks.
pub fn full_loss(state: &ModelState, prep: &PreparedData, batch_size: usize) -> f64 {
    let idx: Vec<usize> = (0..prep.window_count()).collect();
    let mut sum = 0.0;
    for chunk in idx.chunks(batch_size) {
        let batch = prep.assemble(chunk, &state.spec, None);
        sum += batch_loss_value(state, &batch) * chunk.len() as f64;
    }
    sum / prep.window_count() as f64
}

/// Worker count for multi-seed training: PHLIENET_WORKERS, else the machine's
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var("PHLIENET_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

/// Runs `config.seeds` independent trainings and keeps the checkpoint with
/// the lowest validation loss; ties break toward the lowest seed index.
/// Returns every per-seed checkpoint alongside the winner's index.
pub fn train_multiseed(
    spec: &ModelSpec,
    train_ds: &TrajectoryDataset,
    val_ds: &TrajectoryDataset,
    config: &TrainConfig,
    base_seed: u64,
) -> Result<(usize, Vec<ModelCheckpoint>)> {
    let workers = worker_count().min(config.seeds).max(1);
    let mut checkpoints: Vec<Option<ModelCheckpoint>> = (0..config.seeds).map(|_| None).collect();

    if workers == 1 {
        for (i, slot) in checkpoints.iter_mut().enumerate() {
            *slot = Some(train(spec, train_ds, val_ds, config, i, base_seed)?);
        }
    } else {
        let results: Vec<Result<ModelCheckpoint>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.seeds)
                .map(|i| scope.spawn(move || train(spec, train_ds, val_ds, config, i, base_seed)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("training thread")).collect()
        });
        for (i, r) in results.into_iter().enumerate() {
            checkpoints[i] = Some(r?);
        }
    }

    let checkpoints: Vec<ModelCheckpoint> =
        checkpoints.into_iter().map(|c| c.expect("all seeds ran")).collect();
    let mut best: Option<usize> = None;
    for (i, c) in checkpoints.iter().enumerate() {
        if c.failed {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => c.best_val < checkpoints[b].best_val,
        };
        if better {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| {
        Error::Training(format!("all {} seeds failed for model {}", config.seeds, spec.name))
    })?;
    Ok((best, checkpoints))
}

/// CSV of every seed's epoch history.
pub fn write_training_log(checkpoints: &[ModelCheckpoint], path: &std::path::Path) -> Result<()> {
    let mut s = String::from("seed,epoch,lr,train_loss,val_loss\n");
    for c in checkpoints {
        for e in &c.history {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                c.seed_index, e.epoch, e.lr, e.train_loss, e.val_loss
            ));
        }
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests;
