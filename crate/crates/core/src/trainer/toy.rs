//! Linear toy model trained with momentum gradient descent.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{loss_and_gradient, Batch, FrameRef, LossBreakdown, LossConfig};
use crate::multi_index::Posting;

use super::batch::{hierarchical_batch, BatchParams, Shot, ShotDataset};
use super::config::DataParams;
use super::norm::{batch_normalize, batch_normalize_backward};
use super::schedule::{learning_rate, Schedule};

/// Synthetic shots with one feature row per frame.
#[derive(Debug, Clone)]
pub struct ToyData {
    pub dataset: ShotDataset,
    /// Per shot, `frames × d`.
    pub features: Vec<Array2<f64>>,
}

impl ToyData {
    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, |f| f.ncols())
    }

    /// Feature rows for `(shot, frame)` members.
    pub fn gather(&self, members: &[(usize, usize)]) -> Array2<f64> {
        let d = self.feature_dim();
        let mut out = Array2::zeros((members.len(), d));
        for (row, &(s, f)) in members.iter().enumerate() {
            out.row_mut(row).assign(&self.features[s].row(f));
        }
        out
    }

    fn all_members(&self) -> Vec<(usize, usize)> {
        self.features
            .iter()
            .enumerate()
            .flat_map(|(s, f)| (0..f.nrows()).map(move |i| (s, i)))
            .collect()
    }
}

fn gaussian<R: Rng + ?Sized>(len: usize, scale: f64, rng: &mut R) -> Array1<f64> {
    Array1::from_shape_fn(len, |_| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Each shot gets a Gaussian cluster center and a random drift direction;
/// frame features are `center + drift·τ·direction + noise`, `τ` being the
/// time since the shot started. Video ids are `<prefix><k>`.
pub fn generate_toy_data<R: Rng + ?Sized>(
    params: &DataParams,
    video_prefix: &str,
    rng: &mut R,
) -> Result<ToyData> {
    params.validate()?;
    let frames = (params.shot_seconds * params.fps).round() as usize;
    let d = params.feature_dim;
    let mut shots = Vec::new();
    let mut features = Vec::new();
    for v in 0..params.videos {
        for s in 0..params.shots_per_video {
            let start = (s * frames) as f64 / params.fps;
            let center = gaussian(d, params.center_scale, rng);
            let mut direction = gaussian(d, 1.0, rng);
            let norm = direction.dot(&direction).sqrt();
            direction /= norm;
            let mut rows = Array2::zeros((frames, d));
            for f in 0..frames {
                let tau = f as f64 / params.fps;
                let row =
                    &center + &(&direction * (params.drift * tau)) + gaussian(d, params.noise, rng);
                rows.row_mut(f).assign(&row);
            }
            shots.push(Shot {
                video_id: format!("{video_prefix}{v}"),
                shot_id: s.to_string(),
                timestamps: (0..frames).map(|f| start + f as f64 / params.fps).collect(),
            });
            features.push(rows);
        }
    }
    Ok(ToyData {
        dataset: ShotDataset::new(shots, params.fps)?,
        features,
    })
}

/// `n × d` weights; logits are `features · Wᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub w: Array2<f64>,
}

impl ToyModel {
    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, scale: f64, rng: &mut R) -> Self {
        Self {
            w: Array2::from_shape_fn((n, d), |_| scale * rng.sample::<f64, _>(StandardNormal)),
        }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn logits(&self, features: &Array2<f64>) -> Array2<f64> {
        features.dot(&self.w.t())
    }

    /// Loss of one batch and its gradient with respect to `W`, through batch
    /// standardization and weight decay.
    pub fn loss_and_gradient(
        &self,
        features: &Array2<f64>,
        frames: Vec<FrameRef>,
        config: &LossConfig,
    ) -> Result<(LossBreakdown, Array2<f64>)> {
        let (x, cache) = batch_normalize(&self.logits(features))?;
        let batch = Batch::new(x, frames)?;
        let w_flat = self.w.as_slice().expect("standard layout");
        let (loss, grad_x) = loss_and_gradient(&batch, config, Some(w_flat))?;
        let grad_logits = batch_normalize_backward(&cache, &grad_x);
        let grad_w = grad_logits.t().dot(features) + &self.w * (2.0 * config.lambda5);
        Ok((loss, grad_w))
    }

    /// Hashes every frame of `data`, standardizing logits over the whole set.
    pub fn hash_all(&self, data: &ToyData) -> Result<Vec<Posting>> {
        let members = data.all_members();
        let (x, _) = batch_normalize(&self.logits(&data.gather(&members)))?;
        Ok(members
            .iter()
            .zip(x.rows())
            .map(|(&(s, f), row)| Posting {
                hash: crate::geometry::binarize(row.as_slice().expect("standard layout")),
                frame: data.dataset.frame(s, f),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub loss: LossConfig,
    pub schedule: Schedule,
    pub steps: usize,
    pub momentum: f64,
    pub batch: BatchParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub step: usize,
    pub lr: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
    pub j5: f64,
    pub total: f64,
}

impl HistoryRow {
    fn new(step: usize, lr: f64, l: &LossBreakdown) -> Self {
        Self {
            step,
            lr,
            j1: l.j1,
            j2: l.j2,
            j3: l.j3,
            j4: l.j4,
            j5: l.j5,
            total: l.total,
        }
    }
}

pub const HISTORY_HEADER: &str = "step,lr,j1,j2,j3,j4,j5,total";

pub fn history_csv(history: &[HistoryRow]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for h in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            h.step, h.lr, h.j1, h.j2, h.j3, h.j4, h.j5, h.total
        );
    }
    out
}

/// Trains `model` on hierarchical batches of `data`. The loss of step `s` is
/// recorded before the update at that step.
pub fn train_toy<R: Rng + ?Sized>(
    data: &ToyData,
    mut model: ToyModel,
    opts: &TrainOptions,
    rng: &mut R,
) -> Result<(ToyModel, Vec<HistoryRow>)> {
    opts.loss.validate()?;
    opts.schedule.validate()?;
    if opts.steps as f64 > opts.schedule.s0 {
        return Err(Error::InvalidArgument(format!(
            "{} steps exceed the schedule length {}",
            opts.steps, opts.schedule.s0
        )));
    }
    if !(0.0..1.0).contains(&opts.momentum) {
        return Err(Error::InvalidArgument(format!(
            "momentum must lie in [0, 1), got {}",
            opts.momentum
        )));
    }
    if model.w.dim() != (opts.loss.n, data.feature_dim()) {
        return Err(Error::DimensionMismatch {
            expected: opts.loss.n * data.feature_dim(),
            actual: model.w.len(),
        });
    }
    let mut velocity = Array2::<f64>::zeros(model.w.raw_dim());
    let mut history = Vec::with_capacity(opts.steps);
    for step in 0..opts.steps {
        let plan = hierarchical_batch(&data.dataset, &opts.batch, rng)?;
        let features = data.gather(&plan.members);
        // Options were validated above, so an invalid-argument error here
        // means the logits overflowed.
        let (loss, grad_w) = match model.loss_and_gradient(&features, plan.frames, &opts.loss) {
            Err(Error::InvalidArgument(_)) => return Err(Error::Diverged { step }),
            other => other?,
        };
        if !loss.total.is_finite() || grad_w.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step });
        }
        let lr = learning_rate(step as f64, &opts.schedule)?;
        velocity = &velocity * opts.momentum + &grad_w;
        model.w.scaled_add(-lr, &velocity);
        if model.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { step });
        }
        history.push(HistoryRow::new(step, lr, &loss));
    }
    Ok((model, history))
}
