use rand::Rng;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::spec::{projection_stride, LayerSpec};
use crate::tensor::Shape;

/// Per-sample activations kept for the backward pass.
#[derive(Debug)]
pub(crate) enum Cache<T> {
    Input(Vec<T>),
    Argmax(Vec<usize>),
    Residual {
        inner: Vec<Cache<T>>,
        projection: Option<Box<Cache<T>>>,
    },
    Empty,
}

#[derive(Debug, Clone)]
pub(crate) struct Conv<T> {
    pub input: Shape,
    pub output: Shape,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    /// `[out][in][kh][kw]`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct Pool {
    pub input: Shape,
    pub output: Shape,
    pub size: usize,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Dense<T> {
    pub n_in: usize,
    /// `[out][in]`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct Residual<T> {
    pub inner: Vec<Layer<T>>,
    pub projection: Option<Conv<T>>,
}

#[derive(Debug, Clone)]
pub(crate) enum Layer<T> {
    Conv(Conv<T>),
    Pool(Pool),
    Dense(Dense<T>),
    Relu,
    Softmax,
    Residual(Residual<T>),
}

fn he_uniform<T: Scalar, R: Rng>(rng: &mut R, n: usize, fan_in: usize) -> Vec<T> {
    let limit = (6.0 / fan_in.max(1) as f64).sqrt();
    (0..n).map(|_| T::from_f64(rng.gen_range(-limit..limit))).collect()
}

/// Range of output positions `o` with `o*stride + k - pad` inside `0..len`.
fn valid_range(out_len: usize, len: usize, k: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    if len + pad <= k {
        return (0, 0);
    }
    let hi = ((len - 1 + pad - k) / stride + 1).min(out_len);
    (lo.min(hi), hi)
}

impl<T: Scalar> Conv<T> {
    fn new<R: Rng>(
        rng: &mut R,
        input: Shape,
        out_channels: usize,
        (kh, kw): (usize, usize),
        stride: usize,
        pad: usize,
    ) -> Result<Self> {
        let spec = LayerSpec::Conv {
            out_channels,
            kernel_h: kh,
            kernel_w: kw,
            stride,
            padding: pad,
        };
        let output = spec.output_shape(input)?;
        let fan_in = input.c * kh * kw;
        Ok(Self {
            input,
            output,
            kh,
            kw,
            stride,
            pad,
            weight: he_uniform(rng, out_channels * fan_in, fan_in),
            bias: vec![T::ZERO; out_channels],
        })
    }

    fn forward(&self, x: &[T]) -> Vec<T> {
        let (ic, ih, iw) = (self.input.c, self.input.h, self.input.w);
        let (oc, oh, ow) = (self.output.c, self.output.h, self.output.w);
        let (s, pad) = (self.stride, self.pad);
        let mut out = vec![T::ZERO; self.output.len()];
        for o in 0..oc {
            let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = self.bias[o]);
            for c in 0..ic {
                let xin = &x[c * ih * iw..(c + 1) * ih * iw];
                for ky in 0..self.kh {
                    let (oy_lo, oy_hi) = valid_range(oh, ih, ky, s, pad);
                    for kx in 0..self.kw {
                        let wv = self.weight[((o * ic + c) * self.kh + ky) * self.kw + kx];
                        let (ox_lo, ox_hi) = valid_range(ow, iw, kx, s, pad);
                        for oy in oy_lo..oy_hi {
                            let iy = oy * s + ky - pad;
                            let in_row = &xin[iy * iw..(iy + 1) * iw];
                            let out_row = &mut plane[oy * ow..(oy + 1) * ow];
                            if s == 1 {
                                let off = ox_lo + kx - pad;
                                let src = &in_row[off..off + (ox_hi - ox_lo)];
                                for (d, &v) in out_row[ox_lo..ox_hi].iter_mut().zip(src) {
                                    *d += wv * v;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    out_row[ox] += wv * in_row[ox * s + kx - pad];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn backward(&self, x: &[T], g: &[T], gw: &mut [T], gb: &mut [T]) -> Vec<T> {
        let (ic, ih, iw) = (self.input.c, self.input.h, self.input.w);
        let (oc, oh, ow) = (self.output.c, self.output.h, self.output.w);
        let (s, pad) = (self.stride, self.pad);
        let mut gin = vec![T::ZERO; self.input.len()];
        for o in 0..oc {
            let gplane = &g[o * oh * ow..(o + 1) * oh * ow];
            gb[o] += gplane.iter().copied().sum::<T>();
            for c in 0..ic {
                let xin = &x[c * ih * iw..(c + 1) * ih * iw];
                let gi = &mut gin[c * ih * iw..(c + 1) * ih * iw];
                for ky in 0..self.kh {
                    let (oy_lo, oy_hi) = valid_range(oh, ih, ky, s, pad);
                    for kx in 0..self.kw {
                        let widx = ((o * ic + c) * self.kh + ky) * self.kw + kx;
                        let wv = self.weight[widx];
                        let (ox_lo, ox_hi) = valid_range(ow, iw, kx, s, pad);
                        let mut acc = T::ZERO;
                        for oy in oy_lo..oy_hi {
                            let iy = oy * s + ky - pad;
                            let g_row = &gplane[oy * ow..(oy + 1) * ow];
                            let in_row = &xin[iy * iw..(iy + 1) * iw];
                            let gi_row = &mut gi[iy * iw..(iy + 1) * iw];
                            if s == 1 {
                                let off = ox_lo + kx - pad;
                                let n = ox_hi - ox_lo;
                                let gr = &g_row[ox_lo..ox_hi];
                                for ((&gv, &xv), gd) in
                                    gr.iter().zip(&in_row[off..off + n]).zip(&mut gi_row[off..off + n])
                                {
                                    acc += gv * xv;
                                    *gd += wv * gv;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ox * s + kx - pad;
                                    acc += g_row[ox] * in_row[ix];
                                    gi_row[ix] += wv * g_row[ox];
                                }
                            }
                        }
                        gw[widx] += acc;
                    }
                }
            }
        }
        gin
    }
}

impl Pool {
    fn forward<T: Scalar>(&self, x: &[T]) -> (Vec<T>, Vec<usize>) {
        let (ih, iw) = (self.input.h, self.input.w);
        let (oh, ow) = (self.output.h, self.output.w);
        let mut out = Vec::with_capacity(self.output.len());
        let mut arg = Vec::with_capacity(self.output.len());
        for c in 0..self.input.c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = c * ih * iw + oy * self.stride * iw + ox * self.stride;
                    for dy in 0..self.size {
                        for dx in 0..self.size {
                            let idx = c * ih * iw + (oy * self.stride + dy) * iw + ox * self.stride + dx;
                            if x[idx] > x[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(x[best]);
                    arg.push(best);
                }
            }
        }
        (out, arg)
    }

    fn backward<T: Scalar>(&self, arg: &[usize], g: &[T]) -> Vec<T> {
        let mut gin = vec![T::ZERO; self.input.len()];
        for (&i, &gv) in arg.iter().zip(g) {
            gin[i] += gv;
        }
        gin
    }
}

impl<T: Scalar> Dense<T> {
    fn forward(&self, x: &[T]) -> Vec<T> {
        self.weight
            .chunks_exact(self.n_in)
            .zip(&self.bias)
            .map(|(row, &b)| b + row.iter().zip(x).map(|(&w, &v)| w * v).sum::<T>())
            .collect()
    }

    fn backward(&self, x: &[T], g: &[T], gw: &mut [T], gb: &mut [T]) -> Vec<T> {
        let mut gin = vec![T::ZERO; self.n_in];
        for (o, &gv) in g.iter().enumerate() {
            gb[o] += gv;
            if gv == T::ZERO {
                continue;
            }
            let row = &self.weight[o * self.n_in..(o + 1) * self.n_in];
            let grow = &mut gw[o * self.n_in..(o + 1) * self.n_in];
            for ((gwv, &xv), (gi, &wv)) in grow.iter_mut().zip(x).zip(gin.iter_mut().zip(row)) {
                *gwv += gv * xv;
                *gi += gv * wv;
            }
        }
        gin
    }
}

pub(crate) fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(z[0], T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl<T: Scalar> Layer<T> {
    pub fn build<R: Rng>(spec: &LayerSpec, input: Shape, rng: &mut R) -> Result<Self> {
        Ok(match *spec {
            LayerSpec::Conv {
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
            } => Layer::Conv(Conv::new(rng, input, out_channels, (kernel_h, kernel_w), stride, padding)?),
            LayerSpec::MaxPool { size, stride } => Layer::Pool(Pool {
                input,
                output: spec.output_shape(input)?,
                size,
                stride,
            }),
            LayerSpec::Dense { units } => {
                let n_in = input.len();
                spec.output_shape(input)?;
                Layer::Dense(Dense {
                    n_in,
                    weight: he_uniform(rng, units * n_in, n_in),
                    bias: vec![T::ZERO; units],
                })
            }
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Softmax => Layer::Softmax,
            LayerSpec::Residual { ref inner, projection } => {
                let out = spec.output_shape(input)?;
                let mut shape = input;
                let mut layers = Vec::with_capacity(inner.len());
                for l in inner {
                    layers.push(Layer::build(l, shape, rng)?);
                    shape = l.output_shape(shape)?;
                }
                let projection = if projection {
                    let s = projection_stride(input, out)
                        .ok_or_else(|| NnError::ShapeMismatch(format!("no projection maps {input} to {out}")))?;
                    Some(Conv::new(rng, input, out.c, (1, 1), s, 0)?)
                } else {
                    None
                };
                Layer::Residual(Residual {
                    inner: layers,
                    projection,
                })
            }
        })
    }

    pub fn params(&self) -> Vec<&Vec<T>> {
        match self {
            Layer::Conv(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::Residual(r) => {
                let mut v: Vec<&Vec<T>> = r.inner.iter().flat_map(|l| l.params()).collect();
                if let Some(p) = &r.projection {
                    v.extend([&p.weight, &p.bias]);
                }
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<T>> {
        match self {
            Layer::Conv(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::Residual(r) => {
                let mut v: Vec<&mut Vec<T>> = r.inner.iter_mut().flat_map(|l| l.params_mut()).collect();
                if let Some(p) = &mut r.projection {
                    v.extend([&mut p.weight, &mut p.bias]);
                }
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn n_param_tensors(&self) -> usize {
        match self {
            Layer::Conv(_) | Layer::Dense(_) => 2,
            Layer::Residual(r) => {
                r.inner.iter().map(Layer::n_param_tensors).sum::<usize>() + 2 * r.projection.is_some() as usize
            }
            _ => 0,
        }
    }

    pub fn forward(&self, x: Vec<T>) -> (Vec<T>, Cache<T>) {
        match self {
            Layer::Conv(c) => (c.forward(&x), Cache::Input(x)),
            Layer::Pool(p) => {
                let (y, arg) = p.forward(&x);
                (y, Cache::Argmax(arg))
            }
            Layer::Dense(d) => (d.forward(&x), Cache::Input(x)),
            Layer::Relu => {
                let y = x.iter().map(|&v| if v > T::ZERO { v } else { T::ZERO }).collect();
                (y, Cache::Input(x))
            }
            Layer::Softmax => (softmax(&x), Cache::Empty),
            Layer::Residual(r) => {
                let (short, proj_cache) = match &r.projection {
                    Some(p) => (p.forward(&x), Some(Box::new(Cache::Input(x.clone())))),
                    None => (x.clone(), None),
                };
                let mut h = x;
                let mut caches = Vec::with_capacity(r.inner.len());
                for l in &r.inner {
                    let (y, c) = l.forward(h);
                    caches.push(c);
                    h = y;
                }
                for (a, b) in h.iter_mut().zip(&short) {
                    *a += *b;
                }
                (
                    h,
                    Cache::Residual {
                        inner: caches,
                        projection: proj_cache,
                    },
                )
            }
        }
    }

    /// Accumulates parameter gradients into `grads` (one slot per parameter
    /// tensor of this layer) and returns the gradient w.r.t. the input.
    pub fn backward(&self, cache: &Cache<T>, g: Vec<T>, grads: &mut [Vec<T>]) -> Vec<T> {
        match (self, cache) {
            (Layer::Conv(c), Cache::Input(x)) => {
                let (gw, gb) = grads.split_at_mut(1);
                c.backward(x, &g, &mut gw[0], &mut gb[0])
            }
            (Layer::Dense(d), Cache::Input(x)) => {
                let (gw, gb) = grads.split_at_mut(1);
                d.backward(x, &g, &mut gw[0], &mut gb[0])
            }
            (Layer::Pool(p), Cache::Argmax(arg)) => p.backward(arg, &g),
            (Layer::Relu, Cache::Input(x)) => g
                .into_iter()
                .zip(x)
                .map(|(gv, &xv)| if xv > T::ZERO { gv } else { T::ZERO })
                .collect(),
            (Layer::Residual(r), Cache::Residual { inner, projection }) => {
                let n_inner: usize = r.inner.iter().map(Layer::n_param_tensors).sum();
                let (inner_grads, proj_grads) = grads.split_at_mut(n_inner);
                let mut gin = match (&r.projection, projection) {
                    (Some(p), Some(pc)) => match pc.as_ref() {
                        Cache::Input(x) => {
                            let (gw, gb) = proj_grads.split_at_mut(1);
                            p.backward(x, &g, &mut gw[0], &mut gb[0])
                        }
                        _ => unreachable!("projection cache"),
                    },
                    _ => g.clone(),
                };
                let mut offsets = Vec::with_capacity(r.inner.len());
                let mut off = 0;
                for l in &r.inner {
                    offsets.push(off);
                    off += l.n_param_tensors();
                }
                let mut h = g;
                for (i, l) in r.inner.iter().enumerate().rev() {
                    let n = l.n_param_tensors();
                    h = l.backward(&inner[i], h, &mut inner_grads[offsets[i]..offsets[i] + n]);
                }
                for (a, b) in gin.iter_mut().zip(&h) {
                    *a += *b;
                }
                gin
            }
            (Layer::Softmax, _) => panic!("softmax backward is fused into the loss"),
            _ => unreachable!("cache does not match layer"),
        }
    }
}
