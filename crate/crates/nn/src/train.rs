use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{NnError, Result};
use crate::metrics::{Confusion, Metrics};
use crate::network::{argmax, cross_entropy, Network};
use crate::optim::{Optimizer, OptimizerKind};
use crate::tensor::Tensor;

/// Samples per gradient work unit. Fixed so that the summation order, and
/// hence the result, does not depend on the thread count.
const CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Tensor<f32>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            optimizer: OptimizerKind::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample loss seen while training this epoch.
    pub train_loss: f64,
    pub test_loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// Record with the highest accuracy; earliest wins ties.
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs
            .iter()
            .fold(None, |best: Option<&EpochRecord>, r| match best {
                Some(b) if b.accuracy >= r.accuracy => Some(b),
                _ => Some(r),
            })
    }
}

fn check_samples(net: &Network<f32>, samples: &[Sample]) -> Result<()> {
    for s in samples {
        if s.input.shape() != net.input_shape() {
            return Err(NnError::ShapeMismatch(format!(
                "sample is {}, network expects {}",
                s.input.shape(),
                net.input_shape()
            )));
        }
        if s.label >= net.n_classes() {
            return Err(NnError::LabelOutOfRange {
                label: s.label,
                n_classes: net.n_classes(),
            });
        }
    }
    Ok(())
}

/// Mean loss and confusion matrix over `samples`.
pub fn evaluate(net: &Network<f32>, samples: &[Sample]) -> Result<(f64, Confusion)> {
    if samples.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    check_samples(net, samples)?;
    let outputs: Vec<(f64, usize)> = samples
        .par_iter()
        .map(|s| {
            let logits = net.logits(&s.input)?;
            Ok((cross_entropy(&logits, s.label).0 as f64, argmax(&logits)))
        })
        .collect::<Result<_>>()?;
    let mut confusion = Confusion::new(net.n_classes());
    let mut loss = 0.0;
    for (s, (l, p)) in samples.iter().zip(outputs) {
        loss += l;
        confusion.record(s.label, p);
    }
    Ok((loss / samples.len() as f64, confusion))
}

/// Mini-batch training. Each epoch reshuffles the training set with a
/// ChaCha8 stream seeded from `cfg.seed`, averages gradients over each batch
/// (the final short batch included) and evaluates on `test`.
pub fn train(net: &mut Network<f32>, train_set: &[Sample], test: &[Sample], cfg: &TrainConfig) -> Result<History> {
    if cfg.batch_size == 0 {
        return Err(NnError::InvalidConfig("batch size must be positive".into()));
    }
    cfg.optimizer.validate()?;
    if train_set.is_empty() || test.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    check_samples(net, train_set)?;
    check_samples(net, test)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let net_ref: &Network<f32> = net;
            let parts: Vec<(f64, Vec<Vec<f32>>)> = batch
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut grads = net_ref.zero_grads();
                    let mut loss = 0.0f64;
                    for &i in chunk {
                        let s = &train_set[i];
                        loss += net_ref.accumulate_gradients(&s.input, s.label, &mut grads)?.0 as f64;
                    }
                    Ok((loss, grads))
                })
                .collect::<Result<_>>()?;
            let mut iter = parts.into_iter();
            let (mut loss, mut grads) = iter.next().expect("non-empty batch");
            for (l, g) in iter {
                loss += l;
                for (dst, src) in grads.iter_mut().zip(&g) {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += *s;
                    }
                }
            }
            if !loss.is_finite() {
                return Err(NnError::Diverged { epoch, batch: b, loss });
            }
            let scale = 1.0 / batch.len() as f32;
            for g in &mut grads {
                g.iter_mut().for_each(|v| *v *= scale);
            }
            opt.step(net.params_mut(), &grads);
            epoch_loss += loss;
        }
        let (test_loss, confusion) = evaluate(net, test)?;
        let Metrics {
            accuracy,
            precision,
            recall,
            ..
        } = confusion.metrics();
        let rec = EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            test_loss,
            accuracy,
            precision,
            recall,
        };
        log::info!(
            "epoch {epoch}: train loss {:.4}, test loss {:.4}, accuracy {:.4}",
            rec.train_loss,
            rec.test_loss,
            rec.accuracy
        );
        history.epochs.push(rec);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Architecture;
    use crate::tensor::Shape;
    use rand::Rng;

    /// Class 0: bright left half; class 1: bright right half; plus noise.
    fn two_class(n: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let data: Vec<f32> = (0..64)
                    .map(|p| {
                        let col = p % 8;
                        let on = (col < 4) == (label == 0);
                        (if on { 0.8 } else { 0.2 }) + rng.gen_range(-0.15..0.15)
                    })
                    .collect();
                Sample {
                    input: Tensor::new(Shape::new(1, 8, 8), data).unwrap(),
                    label,
                }
            })
            .collect()
    }

    fn small_net(seed: u64) -> Network<f32> {
        let arch: Architecture = "in(1,8,8) conv(4,3,3,1) relu pool(2,2) dense(2) softmax".parse().unwrap();
        Network::new(arch, seed).unwrap()
    }

    #[test]
    fn learns_a_separable_two_class_problem() {
        let mut net = small_net(1);
        let cfg = TrainConfig {
            epochs: 10,
            batch_size: 8,
            optimizer: OptimizerKind::adam(0.01),
            seed: 2,
        };
        let h = train(&mut net, &two_class(160, 3), &two_class(40, 4), &cfg).unwrap();
        assert_eq!(h.epochs.len(), 10);
        assert!(h.last().unwrap().accuracy >= 0.95, "{:?}", h.last());
    }

    #[test]
    fn zero_epochs_leave_weights_untouched() {
        let mut net = small_net(1);
        let before = net.params().into_iter().cloned().collect::<Vec<_>>();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let h = train(&mut net, &two_class(8, 0), &two_class(4, 1), &cfg).unwrap();
        assert!(h.epochs.is_empty());
        let after = net.params().into_iter().cloned().collect::<Vec<_>>();
        assert_eq!(before, after);
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let mut net = small_net(5);
            let cfg = TrainConfig {
                epochs: 2,
                batch_size: 5,
                optimizer: OptimizerKind::sgd(0.05),
                seed: 6,
            };
            let h = train(&mut net, &two_class(37, 7), &two_class(10, 8), &cfg).unwrap();
            (h, net.params().into_iter().cloned().collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn single_sgd_step_matches_manual_update() {
        let mut net = small_net(3);
        let data = two_class(1, 9);
        let mut grads = net.zero_grads();
        net.accumulate_gradients(&data[0].input, data[0].label, &mut grads).unwrap();
        let expected: Vec<Vec<f32>> = net
            .params()
            .iter()
            .zip(&grads)
            .map(|(p, g)| p.iter().zip(g).map(|(w, gv)| w - 0.1 * gv).collect())
            .collect();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 1,
            optimizer: OptimizerKind::sgd(0.1),
            seed: 0,
        };
        train(&mut net, &data, &data, &cfg).unwrap();
        let got: Vec<Vec<f32>> = net.params().into_iter().cloned().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn divergence_is_reported() {
        let arch: Architecture = "in(1,8,8) dense(2) softmax".parse().unwrap();
        let mut net = Network::new(arch, 3).unwrap();
        let mut data = two_class(4, 9);
        data[0].input.data_mut()[0] = f32::NAN;
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 4,
            optimizer: OptimizerKind::sgd(0.1),
            seed: 0,
        };
        assert!(matches!(
            train(&mut net, &data, &data, &cfg),
            Err(NnError::Diverged { epoch: 1, batch: 0, .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut net = small_net(0);
        let data = two_class(4, 0);
        let mut bad = data.clone();
        bad[1].label = 7;
        let cfg = TrainConfig::default();
        assert!(matches!(train(&mut net, &bad, &data, &cfg), Err(NnError::LabelOutOfRange { .. })));
        assert!(matches!(train(&mut net, &[], &data, &cfg), Err(NnError::EmptyDataset)));
        let zero_batch = TrainConfig {
            batch_size: 0,
            ..cfg
        };
        assert!(train(&mut net, &data, &data, &zero_batch).is_err());
    }
}
