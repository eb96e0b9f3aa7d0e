//! Forward and backward passes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::CnnConfig;
use super::layers::{
    col2im, im2col, max_pool2, max_pool2_backward, relu_backward_in_place, relu_in_place,
    softmax_rows,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PARAM_NAMES: [&str; 8] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "fc1.weight",
    "fc1.bias",
    "fc2.weight",
    "fc2.bias",
];

/// Network weights. Convolution weights are `filters x (in_channels * k *
/// k)`, dense weights `out x in`, all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams<T> {
    pub conv1_w: Vec<T>,
    pub conv1_b: Vec<T>,
    pub conv2_w: Vec<T>,
    pub conv2_b: Vec<T>,
    pub fc1_w: Vec<T>,
    pub fc1_b: Vec<T>,
    pub fc2_w: Vec<T>,
    pub fc2_b: Vec<T>,
}

/// Element count of each parameter tensor, in [`PARAM_NAMES`] order.
pub fn param_lens(cfg: &CnnConfig) -> [usize; 8] {
    let kk = cfg.kernel * cfg.kernel;
    [
        cfg.conv1_filters * cfg.input_channels * kk,
        cfg.conv1_filters,
        cfg.conv2_filters * cfg.conv1_filters * kk,
        cfg.conv2_filters,
        cfg.fc1_units * cfg.flatten_len(),
        cfg.fc1_units,
        cfg.num_classes * cfg.fc1_units,
        cfg.num_classes,
    ]
}

impl<T: Scalar> CnnParams<T> {
    pub fn zeros(cfg: &CnnConfig) -> Self {
        let l = param_lens(cfg);
        let z = |n: usize| vec![T::zero(); n];
        CnnParams {
            conv1_w: z(l[0]),
            conv1_b: z(l[1]),
            conv2_w: z(l[2]),
            conv2_b: z(l[3]),
            fc1_w: z(l[4]),
            fc1_b: z(l[5]),
            fc2_w: z(l[6]),
            fc2_b: z(l[7]),
        }
    }

    /// He-scaled normal weights, zero biases.
    pub fn init(cfg: &CnnConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(cfg);
        let kk = cfg.kernel * cfg.kernel;
        let fan_ins = [
            cfg.input_channels * kk,
            cfg.conv1_filters * kk,
            cfg.flatten_len(),
            cfg.fc1_units,
        ];
        let weights = [&mut p.conv1_w, &mut p.conv2_w, &mut p.fc1_w, &mut p.fc2_w];
        for (w, fan_in) in weights.into_iter().zip(fan_ins) {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            for v in w.iter_mut() {
                *v = T::from_f64_lossy(normal.sample(rng));
            }
        }
        p
    }

    pub fn tensors(&self) -> [&[T]; 8] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 8] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    pub fn matches(&self, cfg: &CnnConfig) -> bool {
        self.tensors()
            .iter()
            .zip(param_lens(cfg))
            .all(|(t, n)| t.len() == n)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Converts every value to another scalar type.
    pub fn cast<U: Scalar>(&self) -> CnnParams<U> {
        let c = |v: &[T]| -> Vec<U> {
            v.iter()
                .map(|x| U::from_f64_lossy(x.to_f64().unwrap_or(f64::NAN)))
                .collect()
        };
        CnnParams {
            conv1_w: c(&self.conv1_w),
            conv1_b: c(&self.conv1_b),
            conv2_w: c(&self.conv2_w),
            conv2_b: c(&self.conv2_b),
            fc1_w: c(&self.fc1_w),
            fc1_b: c(&self.fc1_b),
            fc2_w: c(&self.fc2_w),
            fc2_b: c(&self.fc2_b),
        }
    }
}

/// Whether dropout is active.
pub enum Mode<'a> {
    Train(&'a mut ChaCha8Rng),
    Infer,
}

/// Intermediates kept for the backward pass.
pub struct ForwardCache<T> {
    batch: usize,
    conv1_act: Vec<T>,
    pool1_idx: Vec<u32>,
    pool1: Vec<T>,
    conv2_act: Vec<T>,
    pool2_idx: Vec<u32>,
    flat: Vec<T>,
    hidden: Vec<T>,
    dropout_mask: Option<Vec<T>>,
    hidden_out: Vec<T>,
}

pub struct ForwardOutput<T> {
    /// `batch x num_classes`, rows sum to one.
    pub probs: Vec<T>,
    pub cache: ForwardCache<T>,
}

fn check_input<T>(cfg: &CnnConfig, params: &CnnParams<T>, input: &[T], batch: usize) -> Result<()>
where
    T: Scalar,
{
    if batch == 0 || input.len() != batch * cfg.input_len() {
        return Err(Error::ShapeMismatch(format!(
            "input of {} values is not {batch} x {}x{}x{}",
            input.len(),
            cfg.input_channels,
            cfg.input_height,
            cfg.input_width
        )));
    }
    if !params.matches(cfg) {
        return Err(Error::ShapeMismatch(
            "parameters do not match the configuration".into(),
        ));
    }
    Ok(())
}

/// Broadcasts `bias[r]` over row `r` of a `rows x cols` matrix.
fn fill_row_bias<T: Scalar>(out: &mut [T], bias: &[T], cols: usize) {
    for (row, &b) in out.chunks_mut(cols).zip(bias) {
        row.fill(b);
    }
}

/// Copies `bias` into every row of a `rows x bias.len()` matrix.
fn fill_col_bias<T: Scalar>(out: &mut [T], bias: &[T]) {
    for row in out.chunks_mut(bias.len()) {
        row.copy_from_slice(bias);
    }
}

fn add_row_sums<T: Scalar>(acc: &mut [T], m: &[T], cols: usize) {
    for (a, row) in acc.iter_mut().zip(m.chunks(cols)) {
        *a = *a + row.iter().copied().sum::<T>();
    }
}

fn col_sums<T: Scalar>(m: &[T], cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); cols];
    for row in m.chunks(cols) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = *o + v;
        }
    }
    out
}

/// conv → ReLU → pool → conv → ReLU → pool → dense → ReLU → dropout →
/// dense → softmax, for `batch` inputs laid out back to back.
pub fn forward<T: Scalar>(
    params: &CnnParams<T>,
    cfg: &CnnConfig,
    input: &[T],
    batch: usize,
    mode: Mode<'_>,
) -> Result<ForwardOutput<T>> {
    check_input(cfg, params, input, batch)?;
    let (h, w, k) = (cfg.input_height, cfg.input_width, cfg.kernel);
    let (c0, f1, f2) = (cfg.input_channels, cfg.conv1_filters, cfg.conv2_filters);
    let (p1, p2, p3) = (cfg.plane1(), cfg.plane2(), cfg.plane3());
    let kk = k * k;
    let flat_len = cfg.flatten_len();
    let units = cfg.fc1_units;
    let classes = cfg.num_classes;

    let mut conv1_act = vec![T::zero(); batch * f1 * p1];
    let mut pool1_idx = vec![0u32; batch * f1 * p2];
    let mut pool1 = vec![T::zero(); batch * f1 * p2];
    let mut conv2_act = vec![T::zero(); batch * f2 * p2];
    let mut pool2_idx = vec![0u32; batch * f2 * p3];
    let mut flat = vec![T::zero(); batch * flat_len];
    let mut cols1 = vec![T::zero(); c0 * kk * p1];
    let mut cols2 = vec![T::zero(); f1 * kk * p2];

    for s in 0..batch {
        let x = &input[s * cfg.input_len()..(s + 1) * cfg.input_len()];
        im2col(x, c0, h, w, k, &mut cols1);
        let a1 = &mut conv1_act[s * f1 * p1..(s + 1) * f1 * p1];
        fill_row_bias(a1, &params.conv1_b, p1);
        T::gemm(
            f1,
            c0 * kk,
            p1,
            T::one(),
            &params.conv1_w,
            (c0 * kk, 1),
            &cols1,
            (p1, 1),
            T::one(),
            a1,
            (p1, 1),
        );
        relu_in_place(a1);
        let pooled1 = &mut pool1[s * f1 * p2..(s + 1) * f1 * p2];
        max_pool2(
            a1,
            f1,
            h,
            w,
            pooled1,
            &mut pool1_idx[s * f1 * p2..(s + 1) * f1 * p2],
        );

        im2col(pooled1, f1, h / 2, w / 2, k, &mut cols2);
        let a2 = &mut conv2_act[s * f2 * p2..(s + 1) * f2 * p2];
        fill_row_bias(a2, &params.conv2_b, p2);
        T::gemm(
            f2,
            f1 * kk,
            p2,
            T::one(),
            &params.conv2_w,
            (f1 * kk, 1),
            &cols2,
            (p2, 1),
            T::one(),
            a2,
            (p2, 1),
        );
        relu_in_place(a2);
        max_pool2(
            a2,
            f2,
            h / 2,
            w / 2,
            &mut flat[s * flat_len..(s + 1) * flat_len],
            &mut pool2_idx[s * f2 * p3..(s + 1) * f2 * p3],
        );
    }

    let mut hidden = vec![T::zero(); batch * units];
    fill_col_bias(&mut hidden, &params.fc1_b);
    T::gemm(
        batch,
        flat_len,
        units,
        T::one(),
        &flat,
        (flat_len, 1),
        &params.fc1_w,
        (1, flat_len),
        T::one(),
        &mut hidden,
        (units, 1),
    );
    relu_in_place(&mut hidden);

    let (dropout_mask, hidden_out) = match mode {
        Mode::Train(rng) if cfg.dropout_rate > 0.0 => {
            let keep_scale = T::from_f64_lossy(1.0 / (1.0 - cfg.dropout_rate));
            let mask: Vec<T> = (0..hidden.len())
                .map(|_| {
                    if rng.random::<f64>() < cfg.dropout_rate {
                        T::zero()
                    } else {
                        keep_scale
                    }
                })
                .collect();
            let out = hidden.iter().zip(&mask).map(|(&a, &m)| a * m).collect();
            (Some(mask), out)
        }
        _ => (None, hidden.clone()),
    };

    let mut probs = vec![T::zero(); batch * classes];
    fill_col_bias(&mut probs, &params.fc2_b);
    T::gemm(
        batch,
        units,
        classes,
        T::one(),
        &hidden_out,
        (units, 1),
        &params.fc2_w,
        (1, units),
        T::one(),
        &mut probs,
        (classes, 1),
    );
    softmax_rows(&mut probs, classes);

    Ok(ForwardOutput {
        probs,
        cache: ForwardCache {
            batch,
            conv1_act,
            pool1_idx,
            pool1,
            conv2_act,
            pool2_idx,
            flat,
            hidden,
            dropout_mask,
            hidden_out,
        },
    })
}

fn check_labels(cfg: &CnnConfig, labels: &[usize], batch: usize) -> Result<()> {
    if labels.len() != batch || labels.iter().any(|&y| y >= cfg.num_classes) {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for a batch of {batch} (classes 0..{})",
            labels.len(),
            cfg.num_classes
        )));
    }
    Ok(())
}

/// Mean cross-entropy of `probs` against integer labels.
pub fn cross_entropy<T: Scalar>(probs: &[T], labels: &[usize], classes: usize) -> T {
    let total: T = probs
        .chunks(classes)
        .zip(labels)
        .map(|(row, &y)| -row[y].max(T::min_positive_value()).ln())
        .sum();
    total / T::from_usize(labels.len()).expect("batch size fits scalar")
}

/// Gradients of the mean cross-entropy with respect to every parameter.
pub fn backward<T: Scalar>(
    params: &CnnParams<T>,
    cfg: &CnnConfig,
    input: &[T],
    labels: &[usize],
    fwd: &ForwardOutput<T>,
) -> Result<CnnParams<T>> {
    let cache = &fwd.cache;
    let batch = cache.batch;
    check_labels(cfg, labels, batch)?;
    check_input(cfg, params, input, batch)?;
    let (h, w, k) = (cfg.input_height, cfg.input_width, cfg.kernel);
    let (c0, f1, f2) = (cfg.input_channels, cfg.conv1_filters, cfg.conv2_filters);
    let (p1, p2, p3) = (cfg.plane1(), cfg.plane2(), cfg.plane3());
    let kk = k * k;
    let flat_len = cfg.flatten_len();
    let units = cfg.fc1_units;
    let classes = cfg.num_classes;
    let mut grads = CnnParams::zeros(cfg);

    let inv_batch = T::one() / T::from_usize(batch).expect("batch size fits scalar");
    let mut d_logits = fwd.probs.clone();
    for (row, &y) in d_logits.chunks_mut(classes).zip(labels) {
        row[y] = row[y] - T::one();
        for v in row.iter_mut() {
            *v = *v * inv_batch;
        }
    }

    // Output layer.
    T::gemm(
        classes,
        batch,
        units,
        T::one(),
        &d_logits,
        (1, classes),
        &cache.hidden_out,
        (units, 1),
        T::zero(),
        &mut grads.fc2_w,
        (units, 1),
    );
    grads.fc2_b = col_sums(&d_logits, classes);
    let mut d_hidden = vec![T::zero(); batch * units];
    T::gemm(
        batch,
        classes,
        units,
        T::one(),
        &d_logits,
        (classes, 1),
        &params.fc2_w,
        (units, 1),
        T::zero(),
        &mut d_hidden,
        (units, 1),
    );
    if let Some(mask) = &cache.dropout_mask {
        for (g, &m) in d_hidden.iter_mut().zip(mask) {
            *g = *g * m;
        }
    }
    relu_backward_in_place(&mut d_hidden, &cache.hidden);

    // Hidden layer.
    T::gemm(
        units,
        batch,
        flat_len,
        T::one(),
        &d_hidden,
        (1, units),
        &cache.flat,
        (flat_len, 1),
        T::zero(),
        &mut grads.fc1_w,
        (flat_len, 1),
    );
    grads.fc1_b = col_sums(&d_hidden, units);
    let mut d_flat = vec![T::zero(); batch * flat_len];
    T::gemm(
        batch,
        units,
        flat_len,
        T::one(),
        &d_hidden,
        (units, 1),
        &params.fc1_w,
        (flat_len, 1),
        T::zero(),
        &mut d_flat,
        (flat_len, 1),
    );

    // Convolution stack, one sample at a time in a fixed order.
    let mut cols1 = vec![T::zero(); c0 * kk * p1];
    let mut cols2 = vec![T::zero(); f1 * kk * p2];
    let mut d_cols2 = vec![T::zero(); f1 * kk * p2];
    let mut d_a2 = vec![T::zero(); f2 * p2];
    let mut d_pool1 = vec![T::zero(); f1 * p2];
    let mut d_a1 = vec![T::zero(); f1 * p1];
    for s in 0..batch {
        max_pool2_backward(
            &d_flat[s * flat_len..(s + 1) * flat_len],
            &cache.pool2_idx[s * f2 * p3..(s + 1) * f2 * p3],
            f2,
            h / 2,
            w / 2,
            &mut d_a2,
        );
        relu_backward_in_place(&mut d_a2, &cache.conv2_act[s * f2 * p2..(s + 1) * f2 * p2]);
        add_row_sums(&mut grads.conv2_b, &d_a2, p2);
        let pooled1 = &cache.pool1[s * f1 * p2..(s + 1) * f1 * p2];
        im2col(pooled1, f1, h / 2, w / 2, k, &mut cols2);
        T::gemm(
            f2,
            p2,
            f1 * kk,
            T::one(),
            &d_a2,
            (p2, 1),
            &cols2,
            (1, p2),
            T::one(),
            &mut grads.conv2_w,
            (f1 * kk, 1),
        );
        T::gemm(
            f1 * kk,
            f2,
            p2,
            T::one(),
            &params.conv2_w,
            (1, f1 * kk),
            &d_a2,
            (p2, 1),
            T::zero(),
            &mut d_cols2,
            (p2, 1),
        );
        col2im(&d_cols2, f1, h / 2, w / 2, k, &mut d_pool1);

        max_pool2_backward(
            &d_pool1,
            &cache.pool1_idx[s * f1 * p2..(s + 1) * f1 * p2],
            f1,
            h,
            w,
            &mut d_a1,
        );
        relu_backward_in_place(&mut d_a1, &cache.conv1_act[s * f1 * p1..(s + 1) * f1 * p1]);
        add_row_sums(&mut grads.conv1_b, &d_a1, p1);
        let x = &input[s * cfg.input_len()..(s + 1) * cfg.input_len()];
        im2col(x, c0, h, w, k, &mut cols1);
        T::gemm(
            f1,
            p1,
            c0 * kk,
            T::one(),
            &d_a1,
            (p1, 1),
            &cols1,
            (1, p1),
            T::one(),
            &mut grads.conv1_w,
            (c0 * kk, 1),
        );
    }
    Ok(grads)
}

/// Forward pass plus gradients. Returns the mean cross-entropy.
pub fn loss_and_grads<T: Scalar>(
    params: &CnnParams<T>,
    cfg: &CnnConfig,
    input: &[T],
    labels: &[usize],
    mode: Mode<'_>,
) -> Result<(T, CnnParams<T>)> {
    let batch = labels.len();
    check_labels(cfg, labels, batch)?;
    let fwd = forward(params, cfg, input, batch, mode)?;
    let loss = cross_entropy(&fwd.probs, labels, cfg.num_classes);
    let grads = backward(params, cfg, input, labels, &fwd)?;
    Ok((loss, grads))
}

/// Inference-mode class probabilities for a batch.
pub fn predict_probs<T: Scalar>(
    params: &CnnParams<T>,
    cfg: &CnnConfig,
    input: &[T],
    batch: usize,
) -> Result<Vec<T>> {
    Ok(forward(params, cfg, input, batch, Mode::Infer)?.probs)
}

/// Index of the largest entry (first on ties).
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}
