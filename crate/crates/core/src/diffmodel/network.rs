//! Forward and backward passes for [`ModelSpec`] networks over flat parameter buffers.

use rand::Rng;

use super::loss::{output_delta, sample_loss, LossKind, SampleTarget, Targets};
use super::params::{GradientVector, ParameterVector};
use super::spec::{Architecture, ModelSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from};

const INSTANCE_NORM_EPS: f64 = 1e-8;

/// Whether dropout is active. In training mode the dropout mask of batch
/// row `k` is drawn from `derive_seed(seed, k)`, so single-sample and batch
/// passes agree for the same row position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PassMode {
    #[default]
    Eval,
    Train { seed: u64 },
}

/// Scratch buffers for one sample's forward and backward pass.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    offsets: Vec<(usize, usize)>,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    mask: Vec<Vec<f64>>,
    out: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(spec: &ModelSpec) -> Self {
        let depth = spec.depth();
        let mut offsets = Vec::with_capacity(depth);
        let mut off = 0;
        for w in spec.widths.windows(2) {
            offsets.push((off, off + w[0] * w[1]));
            off += w[0] * w[1] + w[1];
        }
        let hidden = &spec.widths[1..depth];
        let max_w = *spec.widths.iter().max().unwrap_or(&0);
        Self {
            offsets,
            input: vec![0.0; spec.input_width()],
            pre: spec.widths[1..].iter().map(|&w| vec![0.0; w]).collect(),
            act: hidden.iter().map(|&w| vec![0.0; w]).collect(),
            mask: hidden.iter().map(|&w| vec![1.0; w]).collect(),
            out: vec![0.0; spec.output_width()],
            delta: vec![0.0; max_w],
            delta_prev: vec![0.0; max_w],
        }
    }

    pub(crate) fn output(&self) -> &[f64] {
        &self.out
    }
}

fn load_input(spec: &ModelSpec, x: &[f64], dst: &mut [f64]) {
    if spec.instance_norm {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + INSTANCE_NORM_EPS).sqrt();
        for (d, v) in dst.iter_mut().zip(x) {
            *d = (v - mean) * inv;
        }
    } else {
        dst.copy_from_slice(x);
    }
}

#[inline]
fn affine(params: &[f64], w_off: usize, b_off: usize, input: &[f64], out: &mut [f64]) {
    let fan_in = input.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &params[w_off + i * fan_in..w_off + (i + 1) * fan_in];
        let mut acc = params[b_off + i];
        for (w, a) in row.iter().zip(input) {
            acc += w * a;
        }
        *o = acc;
    }
}

fn softmax_into(z: &[f64], out: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Runs one row through the network, leaving intermediates in `ws`.
pub(crate) fn forward_row(
    spec: &ModelSpec,
    params: &[f64],
    x: &[f64],
    mode: PassMode,
    row: u64,
    ws: &mut Workspace,
) {
    let depth = spec.depth();
    let Workspace {
        offsets,
        input,
        pre,
        act,
        mask,
        out,
        ..
    } = ws;
    load_input(spec, x, input);

    let mut dropout_rng = match mode {
        PassMode::Train { seed } if spec.dropout > 0.0 => Some(rng_from(derive_seed(seed, row))),
        _ => None,
    };
    let keep_scale = 1.0 / (1.0 - spec.dropout);

    for l in 0..depth {
        let (w_off, b_off) = offsets[l];
        let src: &[f64] = if l == 0 { input } else { &act[l - 1] };
        affine(params, w_off, b_off, src, &mut pre[l]);
        if l + 1 < depth {
            let m = &mut mask[l];
            match dropout_rng.as_mut() {
                Some(rng) => {
                    for v in m.iter_mut() {
                        *v = if rng.random::<f64>() < spec.dropout {
                            0.0
                        } else {
                            keep_scale
                        };
                    }
                }
                None => m.iter_mut().for_each(|v| *v = 1.0),
            }
            for ((a, &z), &s) in act[l].iter_mut().zip(&pre[l]).zip(m.iter()) {
                *a = spec.activation.apply(z) * s;
            }
        }
    }
    let logits = &pre[depth - 1];
    match spec.architecture {
        Architecture::Classifier => softmax_into(logits, out),
        Architecture::Autoencoder => out.copy_from_slice(logits),
    }
}

/// Accumulates `scale * dL/dθ` for the row last passed through [`forward_row`].
pub(crate) fn backward_row(
    spec: &ModelSpec,
    params: &[f64],
    ws: &mut Workspace,
    target: SampleTarget<'_>,
    scale: f64,
    grad: &mut [f64],
) {
    let depth = spec.depth();
    let Workspace {
        offsets,
        input,
        pre,
        act,
        mask,
        out,
        delta,
        delta_prev,
    } = ws;
    let out_w = spec.output_width();
    output_delta(out, target, &mut delta[..out_w]);

    for l in (0..depth).rev() {
        let (w_off, b_off) = offsets[l];
        let fan_in = spec.widths[l];
        let fan_out = spec.widths[l + 1];
        let a_prev: &[f64] = if l == 0 { input } else { &act[l - 1] };
        for i in 0..fan_out {
            let d = scale * delta[i];
            if d == 0.0 {
                continue;
            }
            grad[b_off + i] += d;
            let g_row = &mut grad[w_off + i * fan_in..w_off + (i + 1) * fan_in];
            for (g, a) in g_row.iter_mut().zip(a_prev) {
                *g += d * a;
            }
        }
        if l > 0 {
            let back = &mut delta_prev[..fan_in];
            back.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..fan_out {
                let di = delta[i];
                if di == 0.0 {
                    continue;
                }
                let w_row = &params[w_off + i * fan_in..w_off + (i + 1) * fan_in];
                for (b, w) in back.iter_mut().zip(w_row) {
                    *b += w * di;
                }
            }
            for ((b, &z), &m) in back.iter_mut().zip(&pre[l - 1]).zip(&mask[l - 1]) {
                *b *= m * spec.activation.derivative(z);
            }
            std::mem::swap(delta, delta_prev);
        }
    }
}

/// Writes one sample's loss gradient into `grad` (overwriting it) and returns its loss.
pub(crate) fn sample_grad_into(
    spec: &ModelSpec,
    params: &[f64],
    x: &[f64],
    target: SampleTarget<'_>,
    mode: PassMode,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    forward_row(spec, params, x, mode, 0, ws);
    let l = sample_loss(ws.output(), target);
    backward_row(spec, params, ws, target, 1.0, grad);
    l
}

/// Accumulates the (weighted) mean gradient over `rows` into `grad`, which is
/// overwritten. Returns the batch loss.
#[allow(clippy::too_many_arguments)]
pub(crate) fn batch_grad_into(
    spec: &ModelSpec,
    params: &[f64],
    x: &Matrix,
    y: &Targets<'_>,
    rows: &[usize],
    kind: &LossKind,
    mode: PassMode,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = rows.len() as f64;
    let weights = kind.sample_weights(y, rows);
    let mut total = 0.0;
    for (k, &r) in rows.iter().enumerate() {
        let w = weights.as_ref().map_or(1.0, |w| w[k]);
        let target = y.row(r);
        forward_row(spec, params, x.row(r), mode, k as u64, ws);
        total += w * sample_loss(ws.output(), target);
        backward_row(spec, params, ws, target, w / n, grad);
    }
    total / n
}

pub(crate) fn check_params(spec: &ModelSpec, params: &ParameterVector) -> Result<()> {
    spec.validate()?;
    if !params.same_layout(&spec.layout()) {
        return Err(Error::LayoutMismatch);
    }
    Ok(())
}

pub(crate) fn check_loss_kind(spec: &ModelSpec, kind: &LossKind) -> Result<()> {
    match (spec.architecture, kind) {
        (Architecture::Classifier, LossKind::CrossEntropy { .. })
        | (Architecture::Autoencoder, LossKind::MeanSquaredError) => {
            kind.validate(spec.output_width())
        }
        _ => Err(Error::config(format!(
            "loss {kind:?} does not fit a {} model",
            spec.architecture
        ))),
    }
}

pub(crate) fn check_features(spec: &ModelSpec, x: &Matrix) -> Result<()> {
    if x.cols() != spec.input_width() {
        return Err(Error::DimensionMismatch {
            what: "feature width",
            expected: spec.input_width(),
            actual: x.cols(),
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("features"));
    }
    Ok(())
}

/// Predictions for every row of `x`: class probabilities for a classifier,
/// reconstructions for an autoencoder.
pub fn forward(spec: &ModelSpec, params: &ParameterVector, x: &Matrix, mode: PassMode) -> Result<Matrix> {
    check_params(spec, params)?;
    check_features(spec, x)?;
    let mut ws = Workspace::new(spec);
    let mut out = Matrix::zeros(x.rows(), spec.output_width());
    for i in 0..x.rows() {
        forward_row(spec, params.values(), x.row(i), mode, i as u64, &mut ws);
        out.row_mut(i).copy_from_slice(ws.output());
    }
    Ok(out)
}

/// Gradient of one sample's unweighted loss.
pub fn grad_single(
    spec: &ModelSpec,
    params: &ParameterVector,
    x: &[f64],
    y: SampleTarget<'_>,
    kind: &LossKind,
    mode: PassMode,
) -> Result<GradientVector> {
    let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
    match y {
        SampleTarget::Class(c) => grad_batch(spec, params, &xm, Targets::Classes(&[c]), kind, mode),
        SampleTarget::Dense(t) => {
            let tm = Matrix::from_vec(1, t.len(), t.to_vec())?;
            grad_batch(spec, params, &xm, Targets::Dense(&tm), kind, mode)
        }
    }
}

/// Mean loss gradient over a batch (class-weighted when the loss carries weights).
pub fn grad_batch(
    spec: &ModelSpec,
    params: &ParameterVector,
    x: &Matrix,
    y: Targets<'_>,
    kind: &LossKind,
    mode: PassMode,
) -> Result<GradientVector> {
    check_params(spec, params)?;
    check_loss_kind(spec, kind)?;
    if x.rows() == 0 {
        return Err(Error::Empty("gradient batch"));
    }
    check_features(spec, x)?;
    y.check(x.rows(), spec.output_width(), kind)?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut ws = Workspace::new(spec);
    let mut grad = GradientVector::zeros(params.layout().clone());
    let loss = batch_grad_into(
        spec,
        params.values(),
        x,
        &y,
        &rows,
        kind,
        mode,
        &mut ws,
        grad.values_mut(),
    );
    if !loss.is_finite() || grad.values().iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(grad)
}
