//! Error-prediction regression network.
//!
//! Five dense blocks (affine -> batch norm -> ReLU), a dropout layer after
//! the final block's ReLU, and a scalar regression head trained with MSE
//! loss under Adam. The net maps `(t, x, v, s1, s2)` (optionally plus the
//! control signal `u`) to the predicted absolute tracking error.
//!
//! Everything is implemented directly over flat `f64` buffers: training runs
//! inside the control loop's retrain path, so the implementation favours
//! deterministic, allocation-light inner loops over generality. All
//! randomness (weight init, epoch shuffling, dropout masks) comes from one
//! seeded ChaCha stream owned by the net, which makes full training runs
//! bit-reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{Dataset, SampleRecord};

/// Architecture and training-time constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Feature count: 5 for `(t, x, v, s1, s2)`, 6 when `u` is included.
    pub input_dim: usize,
    pub hidden_width: usize,
    pub blocks: usize,
    /// Dropout probability applied after the last block's ReLU (train only).
    pub dropout_rate: f64,
    /// Running-statistics update factor: `r = m*r + (1-m)*batch`.
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            input_dim: 5,
            hidden_width: 32,
            blocks: 5,
            dropout_rate: 0.2,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_width == 0 || self.blocks == 0 {
            return Err(Error::Config("net dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("dropout_rate must be in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || self.bn_epsilon <= 0.0 {
            return Err(Error::Config("invalid batch-norm constants".into()));
        }
        Ok(())
    }

    pub fn include_u(&self) -> bool {
        self.input_dim == 6
    }
}

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Block {
    /// `in_dim x out_dim`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
    bn_scale: Vec<f64>,
    bn_shift: Vec<f64>,
    run_mean: Vec<f64>,
    run_var: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
}

impl Block {
    fn new(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let init = Normal::new(0.0, (2.0 / in_dim as f64).sqrt()).unwrap();
        Self {
            w: (0..in_dim * out_dim).map(|_| init.sample(rng)).collect(),
            b: vec![0.0; out_dim],
            bn_scale: vec![1.0; out_dim],
            bn_shift: vec![0.0; out_dim],
            run_mean: vec![0.0; out_dim],
            run_var: vec![1.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    fn param_len(&self) -> usize {
        self.w.len() + self.b.len() + self.bn_scale.len() + self.bn_shift.len()
    }
}

/// Per-block forward cache used by the backward pass.
struct BlockCache {
    /// Pre-batch-norm activations.
    z: Vec<f64>,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    /// Normalized activations before scale/shift.
    z_hat: Vec<f64>,
    /// Post-scale/shift (ReLU decisions are `h > 0`).
    h: Vec<f64>,
    /// Post-ReLU output.
    a: Vec<f64>,
}

struct ForwardCache {
    /// Standardized input rows.
    input: Vec<f64>,
    blocks: Vec<BlockCache>,
    /// Inverted-dropout mask over the last activation (all ones when unused).
    mask: Vec<f64>,
    predictions: Vec<f64>,
}

/// Gradients in flat parameter order (see [`RegressionNet::for_each_param`]).
pub struct Gradients(pub Vec<f64>);

/// Per-epoch training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub lr: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub batch_size: usize,
    pub epochs: Vec<EpochRow>,
}

/// Training hyperparameters. The learning rate follows
/// `lr0 * decay^(epoch / decay_every)` with integer division.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr0: f64,
    pub decay: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    /// Recompute input standardization from the train split. Retraining
    /// keeps the constants frozen so feature scaling stays consistent with
    /// the existing weights.
    pub restandardize: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 5,
            lr0: 1e-3,
            decay: 0.2,
            decay_every: 5,
            batch_size: 64,
            restandardize: true,
        }
    }
}

pub fn learning_rate(opts: &TrainOptions, epoch: usize) -> f64 {
    opts.lr0 * opts.decay.powi((epoch / opts.decay_every) as i32)
}

/// Mean squared error.
pub fn loss_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// The regression net with its optimizer state.
#[derive(Clone)]
pub struct RegressionNet {
    cfg: NetConfig,
    blocks: Vec<Block>,
    out_w: Vec<f64>,
    out_b: f64,
    x_mean: Option<Vec<f64>>,
    x_std: Option<Vec<f64>>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    adam_step: u64,
    rng: ChaCha8Rng,
}

impl RegressionNet {
    pub fn new(cfg: NetConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut blocks = Vec::with_capacity(cfg.blocks);
        let mut prev = cfg.input_dim;
        for _ in 0..cfg.blocks {
            blocks.push(Block::new(prev, cfg.hidden_width, &mut rng));
            prev = cfg.hidden_width;
        }
        let out_init = Normal::new(0.0, (1.0 / prev as f64).sqrt()).unwrap();
        let out_w = (0..prev).map(|_| out_init.sample(&mut rng)).collect();
        let n_params = Self::count_params(&blocks, prev);
        Ok(Self {
            cfg,
            blocks,
            out_w,
            out_b: 0.0,
            x_mean: None,
            x_std: None,
            adam_m: vec![0.0; n_params],
            adam_v: vec![0.0; n_params],
            adam_step: 0,
            rng,
        })
    }

    fn count_params(blocks: &[Block], out_in: usize) -> usize {
        blocks.iter().map(Block::param_len).sum::<usize>() + out_in + 1
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn is_trained(&self) -> bool {
        self.x_mean.is_some()
    }

    pub fn n_params(&self) -> usize {
        self.adam_m.len()
    }

    /// Visit every trainable parameter in the canonical flat order:
    /// per block `w, b, bn_scale, bn_shift`, then the output layer.
    fn for_each_param(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut i = 0;
        for bl in &mut self.blocks {
            for p in bl
                .w
                .iter_mut()
                .chain(bl.b.iter_mut())
                .chain(bl.bn_scale.iter_mut())
                .chain(bl.bn_shift.iter_mut())
            {
                f(i, p);
                i += 1;
            }
        }
        for p in self.out_w.iter_mut() {
            f(i, p);
            i += 1;
        }
        f(i, &mut self.out_b);
    }

    #[cfg(test)]
    fn get_param(&mut self, index: usize) -> f64 {
        let mut out = 0.0;
        self.for_each_param(|i, p| {
            if i == index {
                out = *p;
            }
        });
        out
    }

    #[cfg(test)]
    fn add_to_param(&mut self, index: usize, delta: f64) {
        self.for_each_param(|i, p| {
            if i == index {
                *p += delta;
            }
        });
    }

    fn standardize_row(&self, row: &[f64], out: &mut [f64]) {
        match (&self.x_mean, &self.x_std) {
            (Some(mean), Some(std)) => {
                for j in 0..row.len() {
                    out[j] = (row[j] - mean[j]) / std[j];
                }
            }
            _ => out.copy_from_slice(row),
        }
    }

    fn check_width(&self, batch: &[Vec<f64>]) -> Result<()> {
        for row in batch {
            if row.len() != self.cfg.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.cfg.input_dim,
                    got: row.len(),
                });
            }
        }
        Ok(())
    }

    /// Forward pass. Train mode uses batch statistics, updates the running
    /// statistics, and applies inverted dropout; Infer mode is deterministic
    /// and does not mutate the net (see [`RegressionNet::forward_infer`]).
    pub fn forward(&mut self, batch: &[Vec<f64>], mode: Mode) -> Result<Vec<f64>> {
        match mode {
            Mode::Infer => self.forward_infer(batch),
            Mode::Train => {
                self.check_width(batch)?;
                if batch.len() < 2 {
                    return Err(Error::DegenerateBatch(batch.len()));
                }
                let flat = self.flatten_standardized(batch);
                Ok(self.forward_train_cached(&flat, batch.len()).predictions)
            }
        }
    }

    /// Deterministic inference on a shared, immutable net.
    pub fn forward_infer(&self, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_width(batch)?;
        let flat = self.flatten_standardized(batch);
        Ok(self.infer_flat(&flat, batch.len()))
    }

    fn flatten_standardized(&self, batch: &[Vec<f64>]) -> Vec<f64> {
        let d = self.cfg.input_dim;
        let mut flat = vec![0.0; batch.len() * d];
        for (r, row) in batch.iter().enumerate() {
            self.standardize_row(row, &mut flat[r * d..(r + 1) * d]);
        }
        flat
    }

    fn affine(block: &Block, input: &[f64], rows: usize) -> Vec<f64> {
        let (ni, no) = (block.in_dim, block.out_dim);
        let mut z = vec![0.0; rows * no];
        for r in 0..rows {
            let a_row = &input[r * ni..(r + 1) * ni];
            let z_row = &mut z[r * no..(r + 1) * no];
            z_row.copy_from_slice(&block.b);
            for (i, &ai) in a_row.iter().enumerate() {
                let w_row = &block.w[i * no..(i + 1) * no];
                for j in 0..no {
                    z_row[j] += ai * w_row[j];
                }
            }
        }
        z
    }

    fn infer_flat(&self, input: &[f64], rows: usize) -> Vec<f64> {
        let mut a = input.to_vec();
        for block in &self.blocks {
            let no = block.out_dim;
            let mut z = Self::affine(block, &a, rows);
            for r in 0..rows {
                for j in 0..no {
                    let zh = (z[r * no + j] - block.run_mean[j])
                        / (block.run_var[j] + self.cfg.bn_epsilon).sqrt();
                    z[r * no + j] = (block.bn_scale[j] * zh + block.bn_shift[j]).max(0.0);
                }
            }
            a = z;
        }
        let no = self.blocks.last().map_or(self.cfg.input_dim, |b| b.out_dim);
        (0..rows)
            .map(|r| {
                self.out_b
                    + a[r * no..(r + 1) * no]
                        .iter()
                        .zip(&self.out_w)
                        .map(|(ai, wi)| ai * wi)
                        .sum::<f64>()
            })
            .collect()
    }

    fn forward_train_cached(&mut self, input: &[f64], rows: usize) -> ForwardCache {
        let eps = self.cfg.bn_epsilon;
        let momentum = self.cfg.bn_momentum;
        let mut a = input.to_vec();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &mut self.blocks {
            let no = block.out_dim;
            let z = Self::affine(block, &a, rows);
            let m = rows as f64;
            let mut mean = vec![0.0; no];
            for r in 0..rows {
                for j in 0..no {
                    mean[j] += z[r * no + j];
                }
            }
            for mj in &mut mean {
                *mj /= m;
            }
            let mut var = vec![0.0; no];
            for r in 0..rows {
                for j in 0..no {
                    let d = z[r * no + j] - mean[j];
                    var[j] += d * d;
                }
            }
            for vj in &mut var {
                *vj /= m;
            }
            for j in 0..no {
                block.run_mean[j] = momentum * block.run_mean[j] + (1.0 - momentum) * mean[j];
                block.run_var[j] = momentum * block.run_var[j] + (1.0 - momentum) * var[j];
            }
            let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
            let mut z_hat = vec![0.0; rows * no];
            let mut h = vec![0.0; rows * no];
            let mut out = vec![0.0; rows * no];
            for r in 0..rows {
                for j in 0..no {
                    let idx = r * no + j;
                    z_hat[idx] = (z[idx] - mean[j]) * inv_std[j];
                    h[idx] = block.bn_scale[j] * z_hat[idx] + block.bn_shift[j];
                    out[idx] = h[idx].max(0.0);
                }
            }
            caches.push(BlockCache { z, mean, inv_std, z_hat, h, a: out.clone() });
            a = out;
        }

        let p = self.cfg.dropout_rate;
        let mask: Vec<f64> = if p > 0.0 {
            let keep = 1.0 - p;
            (0..a.len())
                .map(|_| {
                    if self.rng.random::<f64>() >= p {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect()
        } else {
            vec![1.0; a.len()]
        };
        for (ai, mi) in a.iter_mut().zip(&mask) {
            *ai *= mi;
        }

        let no = self.blocks.last().unwrap().out_dim;
        let predictions = (0..rows)
            .map(|r| {
                self.out_b
                    + a[r * no..(r + 1) * no]
                        .iter()
                        .zip(&self.out_w)
                        .map(|(ai, wi)| ai * wi)
                        .sum::<f64>()
            })
            .collect();
        ForwardCache { input: input.to_vec(), blocks: caches, mask, predictions }
    }

    /// Exact gradients of `loss_mse(forward(Train))` for one batch, holding
    /// the dropout mask fixed. The internal train-mode forward updates the
    /// running statistics exactly as a training step does.
    pub fn backward(&mut self, batch: &[Vec<f64>], targets: &[f64]) -> Result<Gradients> {
        self.check_width(batch)?;
        if batch.len() < 2 {
            return Err(Error::DegenerateBatch(batch.len()));
        }
        if targets.len() != batch.len() {
            return Err(Error::DimensionMismatch { expected: batch.len(), got: targets.len() });
        }
        let flat = self.flatten_standardized(batch);
        let cache = self.forward_train_cached(&flat, batch.len());
        Ok(self.backprop(&cache, targets, batch.len()))
    }

    fn backprop(&self, cache: &ForwardCache, targets: &[f64], rows: usize) -> Gradients {
        let mut grads = vec![0.0; self.adam_m.len()];
        let n = rows as f64;
        let no_last = self.blocks.last().unwrap().out_dim;

        // dL/dy for mean squared error
        let dy: Vec<f64> = cache
            .predictions
            .iter()
            .zip(targets)
            .map(|(p, y)| 2.0 * (p - y) / n)
            .collect();

        // output layer; its input is the post-dropout activation
        let block_params: usize = self.blocks.iter().map(Block::param_len).sum();
        {
            let (g_out_w, rest) = grads[block_params..].split_at_mut(no_last);
            let g_out_b = &mut rest[0];
            for r in 0..rows {
                *g_out_b += dy[r];
                let a_row = &cache.blocks.last().unwrap().a[r * no_last..(r + 1) * no_last];
                let m_row = &cache.mask[r * no_last..(r + 1) * no_last];
                for j in 0..no_last {
                    g_out_w[j] += dy[r] * a_row[j] * m_row[j];
                }
            }
        }

        // gradient w.r.t. the last post-ReLU activation (through dropout)
        let mut da = vec![0.0; rows * no_last];
        for r in 0..rows {
            for j in 0..no_last {
                da[r * no_last + j] = dy[r] * self.out_w[j] * cache.mask[r * no_last + j];
            }
        }

        let mut offset_end = block_params;
        for (bi, block) in self.blocks.iter().enumerate().rev() {
            let bc = &cache.blocks[bi];
            let (ni, no) = (block.in_dim, block.out_dim);
            let m = rows as f64;
            let offset = offset_end - block.param_len();

            // ReLU
            let mut dh = da;
            for (d, &hv) in dh.iter_mut().zip(&bc.h) {
                if hv <= 0.0 {
                    *d = 0.0;
                }
            }

            // scale/shift
            let mut g_scale = vec![0.0; no];
            let mut g_shift = vec![0.0; no];
            let mut dz_hat = vec![0.0; rows * no];
            for r in 0..rows {
                for j in 0..no {
                    let idx = r * no + j;
                    g_scale[j] += dh[idx] * bc.z_hat[idx];
                    g_shift[j] += dh[idx];
                    dz_hat[idx] = dh[idx] * block.bn_scale[j];
                }
            }

            // batch-norm statistics
            let mut d_var = vec![0.0; no];
            let mut d_mean = vec![0.0; no];
            let mut sum_centered = vec![0.0; no];
            for r in 0..rows {
                for j in 0..no {
                    let idx = r * no + j;
                    let centered = bc.z[idx] - bc.mean[j];
                    sum_centered[j] += centered;
                    d_var[j] += dz_hat[idx] * centered;
                    d_mean[j] -= dz_hat[idx] * bc.inv_std[j];
                }
            }
            for j in 0..no {
                d_var[j] *= -0.5 * bc.inv_std[j].powi(3);
                d_mean[j] += d_var[j] * (-2.0 * sum_centered[j]) / m;
            }

            let mut dz = vec![0.0; rows * no];
            for r in 0..rows {
                for j in 0..no {
                    let idx = r * no + j;
                    dz[idx] = dz_hat[idx] * bc.inv_std[j]
                        + d_var[j] * 2.0 * (bc.z[idx] - bc.mean[j]) / m
                        + d_mean[j] / m;
                }
            }

            // affine parameters and input gradient
            let a_prev: &[f64] = if bi == 0 { &cache.input } else { &cache.blocks[bi - 1].a };
            {
                let seg = &mut grads[offset..offset_end];
                let (g_w, rest) = seg.split_at_mut(ni * no);
                let (g_b, rest) = rest.split_at_mut(no);
                let (g_sc, g_sh) = rest.split_at_mut(no);
                for r in 0..rows {
                    let a_row = &a_prev[r * ni..(r + 1) * ni];
                    let dz_row = &dz[r * no..(r + 1) * no];
                    for (i, &ai) in a_row.iter().enumerate() {
                        let g_row = &mut g_w[i * no..(i + 1) * no];
                        for j in 0..no {
                            g_row[j] += ai * dz_row[j];
                        }
                    }
                    for j in 0..no {
                        g_b[j] += dz_row[j];
                    }
                }
                g_sc.copy_from_slice(&g_scale);
                g_sh.copy_from_slice(&g_shift);
            }

            let mut da_prev = vec![0.0; rows * ni];
            for r in 0..rows {
                let dz_row = &dz[r * no..(r + 1) * no];
                let da_row = &mut da_prev[r * ni..(r + 1) * ni];
                for i in 0..ni {
                    let w_row = &block.w[i * no..(i + 1) * no];
                    let mut acc = 0.0;
                    for j in 0..no {
                        acc += dz_row[j] * w_row[j];
                    }
                    da_row[i] = acc;
                }
            }
            da = da_prev;
            offset_end = offset;
        }
        Gradients(grads)
    }

    /// Standard Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        assert_eq!(grads.0.len(), self.adam_m.len(), "gradient shape mismatch");
        self.adam_step += 1;
        let t = self.adam_step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        // split borrows: moments are updated in lockstep with the parameters
        let mut m = std::mem::take(&mut self.adam_m);
        let mut v = std::mem::take(&mut self.adam_v);
        self.for_each_param(|i, p| {
            let g = grads.0[i];
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + EPS);
        });
        self.adam_m = m;
        self.adam_v = v;
    }

    /// Clear optimizer moments and the step counter (a retrain restarts the
    /// schedule from epoch zero).
    pub fn reset_optimizer(&mut self) {
        self.adam_m.fill(0.0);
        self.adam_v.fill(0.0);
        self.adam_step = 0;
    }

    fn records_to_rows(&self, records: impl Iterator<Item = SampleRecord>) -> (Vec<Vec<f64>>, Vec<f64>) {
        let include_u = self.cfg.include_u();
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for r in records {
            rows.push(feature_row(&r, include_u));
            targets.push(r.err);
        }
        (rows, targets)
    }

    /// Shuffled mini-batch training over the dataset's train split.
    pub fn train(&mut self, ds: &Dataset, opts: &TrainOptions) -> Result<TrainLog> {
        let (train_rows, train_targets) = self.records_to_rows(ds.train_records().copied());
        if train_rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (test_rows, test_targets) = self.records_to_rows(ds.test_records().copied());

        if opts.restandardize || self.x_mean.is_none() {
            let d = self.cfg.input_dim;
            let n = train_rows.len() as f64;
            let mut mean = vec![0.0; d];
            for row in &train_rows {
                for j in 0..d {
                    mean[j] += row[j];
                }
            }
            for mj in &mut mean {
                *mj /= n;
            }
            let mut std = vec![0.0; d];
            for row in &train_rows {
                for j in 0..d {
                    let dv = row[j] - mean[j];
                    std[j] += dv * dv;
                }
            }
            for sj in &mut std {
                *sj = (*sj / n).sqrt();
                if *sj < 1e-12 {
                    *sj = 1.0;
                }
            }
            self.x_mean = Some(mean);
            self.x_std = Some(std);
        }

        let mut log = TrainLog { batch_size: opts.batch_size, epochs: Vec::new() };
        let mut order: Vec<usize> = (0..train_rows.len()).collect();
        for epoch in 0..opts.epochs {
            let lr = learning_rate(opts, epoch);
            // Fisher-Yates from the net's own stream keeps runs reproducible
            for i in (1..order.len()).rev() {
                let j = self.rng.random_range(0..=i);
                order.swap(i, j);
            }
            for chunk in order.chunks(opts.batch_size) {
                if chunk.len() < 2 {
                    continue; // batch statistics need at least two rows
                }
                let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| train_rows[i].clone()).collect();
                let targets: Vec<f64> = chunk.iter().map(|&i| train_targets[i]).collect();
                let grads = self.backward(&batch, &targets)?;
                self.adam_step(&grads, lr);
            }
            let train_rmse = self.eval_rmse(&train_rows, &train_targets)?;
            let test_rmse = if test_rows.is_empty() {
                f64::NAN
            } else {
                self.eval_rmse(&test_rows, &test_targets)?
            };
            log.epochs.push(EpochRow { epoch, lr, train_rmse, test_rmse });
        }
        Ok(log)
    }

    /// Infer-mode RMSE over rows.
    pub fn eval_rmse(&self, rows: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        let preds = self.forward_infer(rows)?;
        Ok(loss_mse(&preds, targets)?.sqrt())
    }

    /// Deterministic single-row prediction of the absolute tracking error.
    pub fn predict_error(
        &self,
        t: f64,
        x: f64,
        v: f64,
        s1: f64,
        s2: f64,
        u: Option<f64>,
    ) -> Result<f64> {
        if !self.is_trained() {
            return Err(Error::Untrained);
        }
        let row = match (self.cfg.include_u(), u) {
            (false, None) => vec![t, x, v, s1, s2],
            (true, Some(u)) => vec![t, x, v, s1, s2, u],
            (want_u, _) => {
                return Err(Error::DimensionMismatch {
                    expected: if want_u { 6 } else { 5 },
                    got: if want_u { 5 } else { 6 },
                })
            }
        };
        Ok(self.forward_infer(&[row])?[0])
    }

    // -- checkpointing ------------------------------------------------------

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.cfg,
            blocks: self.blocks.clone(),
            out_w: self.out_w.clone(),
            out_b: self.out_b,
            x_mean: self.x_mean.clone(),
            x_std: self.x_std.clone(),
            adam_m: self.adam_m.clone(),
            adam_v: self.adam_v.clone(),
            adam_step: self.adam_step,
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.config.validate()?;
        let n_params = Self::count_params(&ck.blocks, ck.out_w.len());
        if ck.adam_m.len() != n_params || ck.adam_v.len() != n_params {
            return Err(Error::Config("checkpoint moment shapes do not match".into()));
        }
        Ok(Self {
            cfg: ck.config,
            blocks: ck.blocks,
            out_w: ck.out_w,
            out_b: ck.out_b,
            x_mean: ck.x_mean,
            x_std: ck.x_std,
            adam_m: ck.adam_m,
            adam_v: ck.adam_v,
            adam_step: ck.adam_step,
            rng: ChaCha8Rng::seed_from_u64(ck.config.seed),
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_checkpoint())
            .map_err(|e| Error::Config(format!("checkpoint serialization failed: {e}")))?;
        crate::harness::write_file(path, &text)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = crate::harness::read_file(path)?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::from_checkpoint(ck)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized model state. JSON floats use the shortest round-trip form, so
/// a saved-then-loaded net reproduces predictions bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: NetConfig,
    blocks: Vec<Block>,
    out_w: Vec<f64>,
    out_b: f64,
    x_mean: Option<Vec<f64>>,
    x_std: Option<Vec<f64>>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    adam_step: u64,
}

/// Feature vector of one sample row.
pub fn feature_row(r: &SampleRecord, include_u: bool) -> Vec<f64> {
    if include_u {
        vec![r.t, r.x, r.v, r.s1, r.s2, r.u]
    } else {
        vec![r.t, r.x, r.v, r.s1, r.s2]
    }
}
