//! Training configuration file (TOML). Every key is optional.
//!
//! ```toml
//! seed = 7                 # RNG seed for data, initialization and batches
//! steps = 500              # gradient steps
//! momentum = 0.9
//! init_scale = 0.3         # std of the initial weights
//!
//! [loss]
//! n = 16                   # hash bits
//! r = 1                    # Hamming radius
//! substring_count = 1
//! t0 = 0.13333333333333333 # H0 window, seconds
//! lambda4 = 2.0            # skew penalty
//! lambda5 = 1e-5           # weight decay
//! clamp_eps = 1e-7         # dot-product clamp before arccos
//! # class weights, row-major [U1(H0..H3), U2(H0..H3), U3(H0..H3)]
//! weights = [1, 0, 0, 0,  0, 5, 500, 1e5,  0, 0, 100, 2e4]
//!
//! [schedule]
//! alpha = 3e-4             # peak rate
//! beta = 3e-5              # warmup start
//! s0 = 2000                # total schedule length, > 1000
//!
//! [batch]
//! videos = 35              # drawn with replacement
//! shots_per_video = 2      # without replacement
//! anchors_per_shot = 2     # without replacement
//! extras_per_anchor = 1    # same-shot frames within t0 of each anchor
//! t0 = 0.13333333333333333
//!
//! [data]                   # training set; held-out uses heldout_videos
//! videos = 20
//! heldout_videos = 10
//! shots_per_video = 4
//! shot_seconds = 2.0
//! fps = 15.0
//! feature_dim = 8
//! center_scale = 1.0       # std of shot cluster centers
//! noise = 0.01             # per-frame feature noise std
//! drift = 0.05             # feature drift per second within a shot
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{ClassWeightTable, LossConfig, DEFAULT_T0};

use crate::pipeline::{roc_sweep, select_radius, RocPoint, DEFAULT_FP_PENALTY, DEFAULT_MIN_TP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::batch::BatchParams;
use super::schedule::Schedule;
use super::toy::{generate_toy_data, train_toy, HistoryRow, ToyModel, TrainOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataParams {
    pub videos: usize,
    pub heldout_videos: usize,
    pub shots_per_video: usize,
    pub shot_seconds: f64,
    pub fps: f64,
    pub feature_dim: usize,
    pub center_scale: f64,
    pub noise: f64,
    pub drift: f64,
}

impl Default for DataParams {
    fn default() -> Self {
        Self {
            videos: 20,
            heldout_videos: 10,
            shots_per_video: 4,
            shot_seconds: 2.0,
            fps: 15.0,
            feature_dim: 8,
            center_scale: 1.0,
            noise: 0.01,
            drift: 0.05,
        }
    }
}

impl DataParams {
    pub fn validate(&self) -> Result<()> {
        if self.videos == 0 || self.shots_per_video == 0 || self.feature_dim == 0 {
            return Err(Error::InvalidArgument(
                "data needs at least one video, shot and feature".into(),
            ));
        }
        if !(self.fps > 0.0 && self.shot_seconds * self.fps >= 2.0) {
            return Err(Error::InvalidArgument(
                "shots need at least two frames".into(),
            ));
        }
        if !(self.center_scale >= 0.0 && self.noise >= 0.0 && self.drift.is_finite()) {
            return Err(Error::InvalidArgument(
                "feature scales must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LossSection {
    n: usize,
    r: usize,
    substring_count: usize,
    t0: f64,
    lambda4: f64,
    lambda5: f64,
    clamp_eps: f64,
    weights: Vec<f64>,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            n: 16,
            r: 1,
            substring_count: 1,
            t0: DEFAULT_T0,
            lambda4: 2.0,
            lambda5: 1e-5,
            clamp_eps: crate::geometry::DOT_CLAMP_EPS,
            weights: ClassWeightTable::default().to_row_major().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub steps: usize,
    pub momentum: f64,
    pub init_scale: f64,
    loss: LossSection,
    pub schedule: Schedule,
    pub batch: BatchParams,
    pub data: DataParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            steps: 500,
            momentum: 0.9,
            init_scale: 0.3,
            loss: LossSection::default(),
            schedule: Schedule {
                alpha: 3e-4,
                beta: 3e-5,
                s0: 2000.0,
            },
            batch: BatchParams::default(),
            data: DataParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0),
            reason: e.message().to_string(),
        })?;
        config.options()?;
        config.data.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn loss_config(&self) -> Result<LossConfig> {
        let l = &self.loss;
        let config = LossConfig {
            n: l.n,
            r: l.r,
            substring_count: l.substring_count,
            t0: l.t0,
            lambda4: l.lambda4,
            lambda5: l.lambda5,
            weights: ClassWeightTable::from_row_major(&l.weights)?,
            clamp_eps: l.clamp_eps,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn options(&self) -> Result<TrainOptions> {
        self.schedule.validate()?;
        Ok(TrainOptions {
            loss: self.loss_config()?,
            schedule: self.schedule,
            steps: self.steps,
            momentum: self.momentum,
            batch: self.batch,
        })
    }
}

/// Outcome of [`TrainConfig::run`].
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub model: ToyModel,
    pub history: Vec<HistoryRow>,
    /// Held-out ROC over every radius `0..=n`.
    pub heldout: Vec<RocPoint>,
    pub selected_r: Option<u32>,
}

impl TrainConfig {
    /// Generates training and held-out data, trains from a random start and
    /// evaluates on the held-out videos. Deterministic in `seed`.
    pub fn run(&self) -> Result<ToyRun> {
        let opts = self.options()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let train = generate_toy_data(&self.data, "train", &mut rng)?;
        let heldout_params = DataParams {
            videos: self.data.heldout_videos,
            ..self.data
        };
        let heldout = generate_toy_data(&heldout_params, "heldout", &mut rng)?;
        let init = ToyModel::random(
            opts.loss.n,
            self.data.feature_dim,
            self.init_scale,
            &mut rng,
        );
        let (model, history) = train_toy(&train, init, &opts, &mut rng)?;
        let radii: Vec<u32> = (0..=opts.loss.n as u32).collect();
        let points = roc_sweep(&model.hash_all(&heldout)?, &radii, opts.loss.t0, None)?;
        let selected_r = select_radius(&points, DEFAULT_MIN_TP, DEFAULT_FP_PENALTY);
        Ok(ToyRun {
            model,
            history,
            heldout: points,
            selected_r,
        })
    }
}
