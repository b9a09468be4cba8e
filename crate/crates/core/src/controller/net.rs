//! Forward and reverse passes over a whole batch.
//!
//! Activations are kept row-major as `[batch][row][col][channel]`. A conv
//! layer unrolls its input into a patch matrix `[batch * positions][k*k*c_in]`
//! (patch entries ordered `(ky, kx, c_in)`) and multiplies it by the weight
//! matrix `[filters][k*k*c_in]`. Dense weights are `[n_out][n_in]`.

use thiserror::Error;

use super::scalar::{gemm, pooled, recycle, zeroed, Scalar, Strides};
use super::schedule::{Activation, ConvShape, LayerSchedule, ScheduleError};
use crate::image::{ImageTensor, PixelRange};
use crate::rng::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("input is {got_h}x{got_w}x{got_c}, the schedule expects {want_h}x{want_w}x{want_c}")]
    InputDims {
        got_h: usize,
        got_w: usize,
        got_c: usize,
        want_h: usize,
        want_w: usize,
        want_c: usize,
    },
    #[error("input has {got} values, the schedule expects {want}")]
    InputLength { got: usize, want: usize },
    #[error("input must be a normalized image")]
    InputRange,
    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("empty batch")]
    EmptyBatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Infer,
    /// Inverted dropout with the given rate on the input of every dense layer.
    Train { dropout: f64 },
}

/// Network parameters in one flat buffer, layer by layer, weights before biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Net<T: Scalar> {
    schedule: LayerSchedule,
    conv_shapes: Vec<ConvShape>,
    dense_shapes: Vec<(usize, usize)>,
    params: Vec<T>,
    /// `(weight offset, bias offset, bias end)` per layer.
    offsets: Vec<(usize, usize, usize)>,
}

/// The steering network used by the experiments.
pub type ControllerNet = Net<f32>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    /// Mean squared error over the batch.
    pub data: f64,
    /// `lambda * sum(w^2)` over weights (biases excluded).
    pub l2: f64,
}

impl Loss {
    pub fn total(&self) -> f64 {
        self.data + self.l2
    }
}

struct Cache<T> {
    patches: Vec<Vec<T>>,
    conv_out: Vec<Vec<T>>,
    dense_in: Vec<Vec<T>>,
    masks: Vec<Option<Vec<T>>>,
    dense_out: Vec<Vec<T>>,
}

fn activate<T: Scalar>(a: Activation, v: &mut [T]) {
    if a == Activation::Relu {
        for x in v.iter_mut() {
            if !(*x > T::ZERO) {
                *x = T::ZERO;
            }
        }
    }
}

fn check_finite<T: Scalar>(v: &[T], layer: usize) -> Result<(), NetError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NetError::NonFiniteActivation { layer })
    }
}

/// Valid kernel columns `kx0..kx1` for output column `ox`, and the first input column.
fn kx_range(ox: usize, stride: usize, pad: usize, kernel: usize, in_w: usize) -> (usize, usize, usize) {
    let start = (ox * stride) as isize - pad as isize;
    let kx0 = (-start).max(0) as usize;
    let kx1 = ((in_w as isize - start).min(kernel as isize)).max(0) as usize;
    (kx0, kx1.max(kx0), (start + kx0 as isize).max(0) as usize)
}

fn im2col<T: Scalar>(x: &[T], batch: usize, s: &ConvShape, kernel: usize, stride: usize, pad: usize) -> Vec<T> {
    let k_len = s.patch_len(kernel);
    let p = s.positions();
    let mut out = zeroed(batch * p * k_len);
    let c = s.in_c;
    for b in 0..batch {
        let img = &x[b * s.in_h * s.in_w * c..(b + 1) * s.in_h * s.in_w * c];
        for oy in 0..s.out_h {
            for ox in 0..s.out_w {
                let row = &mut out[((b * p) + oy * s.out_w + ox) * k_len..][..k_len];
                let (kx0, kx1, ix0) = kx_range(ox, stride, pad, kernel, s.in_w);
                let run = (kx1 - kx0) * c;
                for ky in 0..kernel {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= s.in_h as isize {
                        continue;
                    }
                    let src = (iy as usize * s.in_w + ix0) * c;
                    let dst = (ky * kernel + kx0) * c;
                    row[dst..dst + run].copy_from_slice(&img[src..src + run]);
                }
            }
        }
    }
    out
}

fn col2im<T: Scalar>(cols: &[T], batch: usize, s: &ConvShape, kernel: usize, stride: usize, pad: usize) -> Vec<T> {
    let k_len = s.patch_len(kernel);
    let p = s.positions();
    let c = s.in_c;
    let mut out = zeroed(batch * s.in_h * s.in_w * c);
    for b in 0..batch {
        let img = &mut out[b * s.in_h * s.in_w * c..(b + 1) * s.in_h * s.in_w * c];
        for oy in 0..s.out_h {
            for ox in 0..s.out_w {
                let row = &cols[((b * p) + oy * s.out_w + ox) * k_len..][..k_len];
                let (kx0, kx1, ix0) = kx_range(ox, stride, pad, kernel, s.in_w);
                let run = (kx1 - kx0) * c;
                for ky in 0..kernel {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= s.in_h as isize {
                        continue;
                    }
                    let dst = (iy as usize * s.in_w + ix0) * c;
                    let src = (ky * kernel + kx0) * c;
                    for (d, &v) in img[dst..dst + run].iter_mut().zip(&row[src..src + run]) {
                        *d += v;
                    }
                }
            }
        }
    }
    out
}

impl<T: Scalar> Net<T> {
    /// All-zero parameters.
    pub fn zeros(schedule: LayerSchedule) -> Result<Self, NetError> {
        schedule.validate()?;
        let conv_shapes = schedule.conv_shapes()?;
        let dense_shapes = schedule.dense_shapes()?;
        let mut offsets = Vec::new();
        let mut at = 0;
        for (w, b) in schedule.layer_sizes()? {
            offsets.push((at, at + w, at + w + b));
            at += w + b;
        }
        Ok(Self {
            schedule,
            conv_shapes,
            dense_shapes,
            params: vec![T::ZERO; at],
            offsets,
        })
    }

    /// Weights uniform in `+-sqrt(3 / fan_in)`, biases zero. Draws run layer by
    /// layer in storage order.
    pub fn init(schedule: LayerSchedule, rng: &mut Rng) -> Result<Self, NetError> {
        let mut net = Self::zeros(schedule)?;
        let fan_ins: Vec<usize> = net
            .schedule
            .conv
            .iter()
            .zip(&net.conv_shapes)
            .map(|(l, s)| s.patch_len(l.kernel))
            .chain(net.dense_shapes.iter().map(|&(i, _)| i))
            .collect();
        for (layer, fan_in) in fan_ins.into_iter().enumerate() {
            let (w0, b0, _) = net.offsets[layer];
            let limit = (3.0 / fan_in as f64).sqrt();
            for w in &mut net.params[w0..b0] {
                *w = T::from_f64(rng.uniform(-limit, limit));
            }
        }
        Ok(net)
    }

    pub fn from_params(schedule: LayerSchedule, params: Vec<T>) -> Result<Self, NetError> {
        let mut net = Self::zeros(schedule)?;
        if params.len() != net.params.len() {
            return Err(NetError::InputLength {
                got: params.len(),
                want: net.params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn schedule(&self) -> &LayerSchedule {
        &self.schedule
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layer_count(&self) -> usize {
        self.offsets.len()
    }

    /// `(weights, biases)` of layer `i` (conv layers first).
    pub fn layer(&self, i: usize) -> (&[T], &[T]) {
        let (w, b, e) = self.offsets[i];
        (&self.params[w..b], &self.params[b..e])
    }

    /// Layer index of every parameter and whether it is a weight.
    pub fn param_layout(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::with_capacity(self.params.len());
        for (l, &(w, b, e)) in self.offsets.iter().enumerate() {
            out.extend(std::iter::repeat_n((l, true), b - w));
            out.extend(std::iter::repeat_n((l, false), e - b));
        }
        out
    }

    /// `sum(w^2)` over weights.
    pub fn weight_sq_sum(&self) -> f64 {
        self.offsets
            .iter()
            .flat_map(|&(w, b, _)| self.params[w..b].iter())
            .map(|&v| v.to_f64() * v.to_f64())
            .sum()
    }

    pub fn check_image(&self, img: &ImageTensor) -> Result<(), NetError> {
        let s = &self.schedule;
        if img.height() != s.input_height || img.width() != s.input_width || s.input_channels != 3 {
            return Err(NetError::InputDims {
                got_h: img.height(),
                got_w: img.width(),
                got_c: 3,
                want_h: s.input_height,
                want_w: s.input_width,
                want_c: s.input_channels,
            });
        }
        if img.range() != PixelRange::Normalized {
            return Err(NetError::InputRange);
        }
        Ok(())
    }

    fn gather(&self, inputs: &[&[f32]]) -> Result<Vec<T>, NetError> {
        let n = self.schedule.input_len();
        let mut x = zeroed(inputs.len() * n);
        for (inp, dst) in inputs.iter().zip(x.chunks_exact_mut(n)) {
            if inp.len() != n {
                recycle(x);
                return Err(NetError::InputLength {
                    got: inp.len(),
                    want: n,
                });
            }
            for (d, &v) in dst.iter_mut().zip(*inp) {
                *d = T::from_f64(v as f64);
            }
        }
        Ok(x)
    }

    fn run(&self, inputs: &[&[f32]], mode: Mode, rng: &mut Rng, keep: bool) -> Result<(Vec<T>, Option<Cache<T>>), NetError> {
        if inputs.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        let batch = inputs.len();
        let mut x = self.gather(inputs)?;
        let mut cache = Cache {
            patches: Vec::new(),
            conv_out: Vec::new(),
            dense_in: Vec::new(),
            masks: Vec::new(),
            dense_out: Vec::new(),
        };
        for (i, (l, s)) in self.schedule.conv.iter().zip(&self.conv_shapes).enumerate() {
            let patches = im2col(&x, batch, s, l.kernel, l.stride, l.padding);
            let (k_len, rows) = (s.patch_len(l.kernel), batch * s.positions());
            let (w, b) = self.layer(i);
            let mut y = pooled(rows * l.filters);
            for _ in 0..rows {
                y.extend_from_slice(b);
            }
            gemm(rows, k_len, l.filters, &patches, Strides::rm(k_len), w, Strides::tr(k_len), T::ONE, &mut y, Strides::rm(l.filters));
            activate(l.activation, &mut y);
            check_finite(&y, i)?;
            if keep {
                cache.patches.push(patches);
                let mut kept = pooled(y.len());
                kept.extend_from_slice(&y);
                cache.conv_out.push(kept);
            } else {
                recycle(patches);
            }
            recycle(std::mem::replace(&mut x, y));
        }
        let n_conv = self.conv_shapes.len();
        for (j, (d, &(n_in, n_out))) in self.schedule.dense.iter().zip(&self.dense_shapes).enumerate() {
            let mask = match mode {
                Mode::Train { dropout } if dropout > 0.0 => {
                    let scale = T::from_f64(1.0 / (1.0 - dropout));
                    let m: Vec<T> = (0..batch * n_in)
                        .map(|_| if rng.next_f64() < dropout { T::ZERO } else { scale })
                        .collect();
                    for (v, &k) in x.iter_mut().zip(&m) {
                        *v = *v * k;
                    }
                    Some(m)
                }
                _ => None,
            };
            let (w, b) = self.layer(n_conv + j);
            let mut y = zeroed(batch * n_out);
            for r in 0..batch {
                y[r * n_out..(r + 1) * n_out].copy_from_slice(b);
            }
            gemm(batch, n_in, n_out, &x, Strides::rm(n_in), w, Strides::tr(n_in), T::ONE, &mut y, Strides::rm(n_out));
            activate(d.activation, &mut y);
            check_finite(&y, n_conv + j)?;
            if keep {
                cache.dense_in.push(std::mem::take(&mut x));
                cache.masks.push(mask);
                cache.dense_out.push(y.clone());
            } else {
                recycle(std::mem::take(&mut x));
            }
            x = y;
        }
        Ok((x, keep.then_some(cache)))
    }

    /// Predictions for a batch of flattened normalized inputs.
    pub fn forward_batch(&self, inputs: &[&[f32]], mode: Mode, rng: &mut Rng) -> Result<Vec<f64>, NetError> {
        let (y, _) = self.run(inputs, mode, rng, false)?;
        Ok(y.into_iter().map(T::to_f64).collect())
    }

    /// Inference over any number of inputs, in chunks.
    pub fn predict(&self, inputs: &[&[f32]]) -> Result<Vec<f64>, NetError> {
        let mut out = Vec::with_capacity(inputs.len());
        let mut unused = Rng::new(0);
        for chunk in inputs.chunks(64) {
            out.extend(self.forward_batch(chunk, Mode::Infer, &mut unused)?);
        }
        Ok(out)
    }

    /// Raw (unclamped) prediction for one normalized image.
    pub fn forward(&self, img: &ImageTensor, mode: Mode, rng: &mut Rng) -> Result<f64, NetError> {
        self.check_image(img)?;
        Ok(self.forward_batch(&[img.data()], mode, rng)?[0])
    }

    /// Loss `mean((label - prediction)^2) + lambda * sum(w^2)` and its gradient
    /// with respect to every parameter, in the flat parameter layout.
    pub fn backward(&self, batch: &[(&[f32], f64)], lambda: f64, mode: Mode, rng: &mut Rng) -> Result<(Vec<T>, Loss), NetError> {
        let inputs: Vec<&[f32]> = batch.iter().map(|(x, _)| *x).collect();
        let (pred, cache) = self.run(&inputs, mode, rng, true)?;
        let cache = cache.expect("cache requested");
        let n = batch.len();
        let mut data = 0.0;
        let mut dy: Vec<T> = Vec::with_capacity(n);
        for (p, &(_, label)) in pred.iter().zip(batch) {
            let e = p.to_f64() - label;
            data += e * e;
            dy.push(T::from_f64(2.0 * e / n as f64));
        }
        let loss = Loss {
            data: data / n as f64,
            l2: lambda * self.weight_sq_sum(),
        };

        let mut grad = vec![T::ZERO; self.params.len()];
        let n_conv = self.conv_shapes.len();
        let mut upstream = dy;
        for (j, (d, &(n_in, n_out))) in self.schedule.dense.iter().zip(&self.dense_shapes).enumerate().rev() {
            let layer = n_conv + j;
            let out = &cache.dense_out[j];
            if d.activation == Activation::Relu {
                for (g, &o) in upstream.iter_mut().zip(out) {
                    if !(o > T::ZERO) {
                        *g = T::ZERO;
                    }
                }
            }
            let (w0, b0, e0) = self.offsets[layer];
            let (gw, gb) = grad[w0..e0].split_at_mut(b0 - w0);
            gemm(n_out, n, n_in, &upstream, Strides::tr(n_out), &cache.dense_in[j], Strides::rm(n_in), T::ZERO, gw, Strides::rm(n_in));
            for r in 0..n {
                for o in 0..n_out {
                    gb[o] += upstream[r * n_out + o];
                }
            }
            if j == 0 && n_conv == 0 {
                break;
            }
            let mut dx = zeroed(n * n_in);
            gemm(n, n_out, n_in, &upstream, Strides::rm(n_out), &self.params[w0..b0], Strides::rm(n_in), T::ZERO, &mut dx, Strides::rm(n_in));
            if let Some(m) = &cache.masks[j] {
                for (g, &k) in dx.iter_mut().zip(m) {
                    *g = *g * k;
                }
            }
            recycle(std::mem::replace(&mut upstream, dx));
        }
        for (i, (l, s)) in self.schedule.conv.iter().zip(&self.conv_shapes).enumerate().rev() {
            let out = &cache.conv_out[i];
            if l.activation == Activation::Relu {
                for (g, &o) in upstream.iter_mut().zip(out) {
                    if !(o > T::ZERO) {
                        *g = T::ZERO;
                    }
                }
            }
            let (k_len, rows, f) = (s.patch_len(l.kernel), n * s.positions(), l.filters);
            let (w0, b0, e0) = self.offsets[i];
            let (gw, gb) = grad[w0..e0].split_at_mut(b0 - w0);
            gemm(f, rows, k_len, &upstream, Strides::tr(f), &cache.patches[i], Strides::rm(k_len), T::ZERO, gw, Strides::rm(k_len));
            for r in 0..rows {
                for o in 0..f {
                    gb[o] += upstream[r * f + o];
                }
            }
            if i == 0 {
                break;
            }
            let mut dcols = zeroed(rows * k_len);
            gemm(rows, f, k_len, &upstream, Strides::rm(f), &self.params[w0..b0], Strides::rm(k_len), T::ZERO, &mut dcols, Strides::rm(k_len));
            let dx = col2im(&dcols, n, s, l.kernel, l.stride, l.padding);
            recycle(dcols);
            recycle(std::mem::replace(&mut upstream, dx));
        }
        recycle(upstream);
        for v in cache.patches.into_iter().chain(cache.conv_out).chain(cache.dense_in) {
            recycle(v);
        }

        let two_lambda = T::from_f64(2.0 * lambda);
        for (layer, &(w0, b0, e0)) in self.offsets.iter().enumerate() {
            if lambda != 0.0 {
                for (g, &w) in grad[w0..b0].iter_mut().zip(&self.params[w0..b0]) {
                    *g += two_lambda * w;
                }
            }
            if !grad[w0..e0].iter().all(|g| g.is_finite()) {
                return Err(NetError::NonFiniteGradient { layer });
            }
        }
        Ok((grad, loss))
    }
}

/// Free-function form of [`Net::forward`].
pub fn forward<T: Scalar>(net: &Net<T>, img: &ImageTensor, mode: Mode, rng: &mut Rng) -> Result<f64, NetError> {
    net.forward(img, mode, rng)
}

/// Free-function form of [`Net::backward`] on images.
pub fn backward<T: Scalar>(net: &Net<T>, batch: &[(ImageTensor, f64)], lambda: f64, mode: Mode, rng: &mut Rng) -> Result<(Vec<T>, Loss), NetError> {
    for (img, _) in batch {
        net.check_image(img)?;
    }
    let rows: Vec<(&[f32], f64)> = batch.iter().map(|(i, l)| (i.data(), *l)).collect();
    net.backward(&rows, lambda, mode, rng)
}
