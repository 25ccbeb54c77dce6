use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layers::{Cache, Layer};
use crate::scalar::Scalar;
use crate::spec::Architecture;
use crate::tensor::{Shape, Tensor};

/// Feed-forward network built from an [`Architecture`].
#[derive(Debug, Clone)]
pub struct Network<T> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
    n_classes: usize,
}

/// Softmax cross-entropy of `logits` against `label`, and its gradient with
/// respect to the logits.
pub fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    let m = logits.iter().copied().fold(logits[0], T::max);
    let sum: T = logits.iter().map(|&z| (z - m).exp()).sum();
    let lse = m + sum.ln();
    let grad = logits
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let p = (z - lse).exp();
            if i == label {
                p - T::ONE
            } else {
                p
            }
        })
        .collect();
    (lse - logits[label], grad)
}

impl<T: Scalar> Network<T> {
    /// He-uniform weights drawn from a ChaCha8 stream seeded with `seed`,
    /// zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let n_classes = arch.n_classes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shape = arch.input;
        let mut layers = Vec::with_capacity(arch.layers.len());
        for spec in &arch.layers {
            layers.push(Layer::build(spec, shape, &mut rng)?);
            shape = spec.output_shape(shape)?;
        }
        Ok(Self {
            arch,
            layers,
            n_classes,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_shape(&self) -> Shape {
        self.arch.input
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Parameter tensors in a fixed order (per layer: weights, then bias).
    pub fn params(&self) -> Vec<&Vec<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Zeroed gradient buffers matching [`Network::params`].
    pub fn zero_grads(&self) -> Vec<Vec<T>> {
        self.params().iter().map(|p| vec![T::ZERO; p.len()]).collect()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.shape() != self.arch.input {
            return Err(NnError::ShapeMismatch(format!(
                "network expects {}, got {}",
                self.arch.input,
                x.shape()
            )));
        }
        Ok(())
    }

    fn run_logits(&self, x: Vec<T>, caches: Option<&mut Vec<Cache<T>>>) -> Vec<T> {
        let body = &self.layers[..self.layers.len() - 1];
        let mut h = x;
        match caches {
            Some(c) => {
                for l in body {
                    let (y, cache) = l.forward(h);
                    c.push(cache);
                    h = y;
                }
            }
            None => {
                for l in body {
                    h = l.forward(h).0;
                }
            }
        }
        h
    }

    /// Pre-softmax outputs.
    pub fn logits(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.run_logits(x.data().to_vec(), None))
    }

    /// Class probabilities.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        Ok(crate::layers::softmax(&self.logits(x)?))
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, x: &Tensor<T>) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Loss without gradients.
    pub fn loss(&self, x: &Tensor<T>, label: usize) -> Result<T> {
        self.check_label(label)?;
        Ok(cross_entropy(&self.logits(x)?, label).0)
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.n_classes {
            return Err(NnError::LabelOutOfRange {
                label,
                n_classes: self.n_classes,
            });
        }
        Ok(())
    }

    /// Forward and backward pass for one sample. Gradients are added to
    /// `grads` (layout of [`Network::zero_grads`]); returns the loss and the
    /// logits.
    pub fn accumulate_gradients(&self, x: &Tensor<T>, label: usize, grads: &mut [Vec<T>]) -> Result<(T, Vec<T>)> {
        self.check_input(x)?;
        self.check_label(label)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let logits = self.run_logits(x.data().to_vec(), Some(&mut caches));
        let (loss, mut g) = cross_entropy(&logits, label);
        let body = &self.layers[..self.layers.len() - 1];
        let mut offsets = Vec::with_capacity(body.len());
        let mut off = 0;
        for l in body {
            offsets.push(off);
            off += l.n_param_tensors();
        }
        for (i, l) in body.iter().enumerate().rev() {
            let n = l.n_param_tensors();
            g = l.backward(&caches[i], g, &mut grads[offsets[i]..offsets[i] + n]);
        }
        Ok((loss, logits))
    }

    /// Converts element type, e.g. for running a gradient check on `f64`
    /// copies of an `f32` network.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let mut out = Network::<U>::new(self.arch.clone(), 0).expect("architecture already validated");
        for (dst, src) in out.params_mut().into_iter().zip(self.params()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = U::from_f64(s.to_f64());
            }
        }
        out
    }
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Compares analytic gradients of the mean batch loss with central
/// differences of step `eps` on a random subset of parameters (1% of them,
/// at least 50, at most all). Returns the largest relative error
/// `|a - n| / (|a| + |n| + 1e-12)`.
pub fn gradient_check(net: &mut Network<f64>, batch: &[(Tensor<f64>, usize)], eps: f64, seed: u64) -> Result<f64> {
    if batch.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut grads = net.zero_grads();
    for (x, label) in batch {
        net.accumulate_gradients(x, *label, &mut grads)?;
    }
    let scale = 1.0 / batch.len() as f64;
    let mean_loss = |net: &Network<f64>| -> Result<f64> {
        let mut total = 0.0;
        for (x, label) in batch {
            total += net.loss(x, *label)?;
        }
        Ok(total * scale)
    };
    let sizes: Vec<usize> = grads.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().sum();
    let n_check = (total / 100).max(50).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, total, n_check).into_vec();
    let mut worst = 0.0f64;
    for flat in picks {
        let (mut t, mut i) = (0, flat);
        while i >= sizes[t] {
            i -= sizes[t];
            t += 1;
        }
        let orig = net.params()[t][i];
        net.params_mut()[t][i] = orig + eps;
        let up = mean_loss(net)?;
        net.params_mut()[t][i] = orig - eps;
        let down = mean_loss(net)?;
        net.params_mut()[t][i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let analytic = grads[t][i] * scale;
        let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}
