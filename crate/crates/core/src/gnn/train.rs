use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{evaluate, loss_and_grad, GnnModel, Params, Sample};
use crate::error::{check_dim, invalid, Result, SrfError};
use crate::graph::Dataset;
use crate::matrix::Matrix;
use crate::rng::RngState;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

struct Adam {
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    fn new(p: &Params) -> Self {
        Self {
            m: p.zeros_like(),
            v: p.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Params, grads: &Params, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let ps = params.slices_mut();
        let gs = grads.slices();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the mini-batch losses seen during the epoch.
    pub train_loss: f64,
    /// Measured after the epoch's last update.
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub test_loss: Option<f64>,
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Chosen by validation accuracy when a validation split exists, by
    /// test accuracy otherwise.
    pub best_epoch: usize,
    pub best_test_acc: Option<f64>,
    pub best_train_acc: f64,
    pub final_train_acc: f64,
}

pub fn accuracy(model: &GnnModel, samples: &[Sample<'_>]) -> Result<f64> {
    let (_, correct, count) = evaluate(model, samples)?;
    Ok(if count == 0 { 0.0 } else { correct as f64 / count as f64 })
}

fn samples<'a>(ds: &'a Dataset, srf: Option<&'a [Matrix]>, idx: &[usize]) -> Vec<Sample<'a>> {
    idx.iter()
        .map(|&i| Sample {
            graph: &ds.graphs[i],
            z: srf.map(|z| &z[i]),
        })
        .collect()
}

/// Adam over shuffled mini-batches of the training split. Shuffles come from
/// `seed → "shuffle" → epoch`, so a run is a pure function of its inputs.
pub fn train(model: &mut GnnModel, ds: &Dataset, srf: Option<&[Matrix]>) -> Result<TrainReport> {
    let cfg = model.config.clone();
    cfg.validate()?;
    if ds.splits.train.is_empty() {
        return Err(invalid("dataset has no training split"));
    }
    if let Some(z) = srf {
        check_dim("embeddings per graph", ds.graphs.len(), z.len())?;
    }
    let shuffle = RngState::seed_rng(cfg.seed).split_named("shuffle");
    let train_set = samples(ds, srf, &ds.splits.train);
    let val_set = samples(ds, srf, &ds.splits.val);
    let test_set = samples(ds, srf, &ds.splits.test);
    let mut adam = Adam::new(&model.params);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        shuffle.split(epoch as u64).shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample<'_>> = chunk
                .iter()
                .map(|&i| Sample {
                    graph: train_set[i].graph,
                    z: train_set[i].z,
                })
                .collect();
            let (loss, grads) = loss_and_grad(model, &batch)?;
            if !loss.is_finite() {
                return Err(SrfError::NonFiniteLoss { epoch, loss });
            }
            adam.step(&mut model.params, &grads, cfg.lr);
            loss_sum += loss;
            batches += 1;
        }
        let train_acc = accuracy(model, &train_set)?;
        let val_acc = (!val_set.is_empty())
            .then(|| accuracy(model, &val_set))
            .transpose()?;
        let (test_loss, test_acc) = if test_set.is_empty() {
            (None, None)
        } else {
            let (l, c, n) = evaluate(model, &test_set)?;
            let n = n.max(1) as f64;
            (Some(l / n), Some(c as f64 / n))
        };
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            train_acc,
            val_acc,
            test_loss,
            test_acc,
        });
        if cfg.stop_at_train_acc.is_some_and(|t| train_acc >= t) {
            break;
        }
    }

    let key = |r: &EpochRecord| r.val_acc.or(r.test_acc).unwrap_or(r.train_acc);
    // first epoch attaining the maximum
    let best = history
        .iter()
        .fold(None::<&EpochRecord>, |b, r| match b {
            Some(b) if key(b) >= key(r) => Some(b),
            _ => Some(r),
        });
    Ok(TrainReport {
        best_epoch: best.map_or(0, |r| r.epoch),
        best_test_acc: best.and_then(|r| r.test_acc),
        best_train_acc: history.iter().map(|r| r.train_acc).fold(0.0, f64::max),
        final_train_acc: history.last().map_or(0.0, |r| r.train_acc),
        history,
    })
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: GnnModel,
}

pub fn save_checkpoint(model: &GnnModel, path: impl AsRef<Path>) -> Result<()> {
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        model: model.clone(),
    };
    crate::write_atomic(path.as_ref(), serde_json::to_string(&ck)?.as_bytes())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<GnnModel> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(invalid(format!(
            "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
            ck.version
        )));
    }
    Ok(ck.model)
}
