//! Pairwise hashing loss over a batch of embeddings.
//!
//! Every ordered pair of frames in a batch gets a class (same shot and close
//! in time, same shot, same video, different video) and three class weights.
//! The loss rewards close pairs for landing within Hamming radius `r`,
//! punishes the others for doing so, punishes matching substrings, and adds
//! a skew penalty and weight decay:
//!
//! ```text
//! J = -J1 - J2 - J3 + λ4·J4 + λ5·J5
//! ```

mod terms;

pub use terms::{
    binom_cdf_dp, loss_and_gradient, loss_gradient, loss_terms, pairwise_flip_probabilities,
    FlipProbabilities, LN_CDF_FLOOR,
};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default H0 time window in seconds: two frames either side at 15 fps.
pub const DEFAULT_T0: f64 = 2.0 / 15.0;

/// Slack on the `|Δt| ≤ t0` comparison so that timestamps like `k / fps`
/// don't fall on the wrong side through rounding.
const T0_SLACK: f64 = 1e-9;

/// Identity of a frame: which video, which shot in it, and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub video_id: String,
    pub shot_id: String,
    /// Seconds from the start of the video.
    pub timestamp: f64,
}

impl FrameRef {
    pub fn new(video_id: impl Into<String>, shot_id: impl Into<String>, timestamp: f64) -> Self {
        Self {
            video_id: video_id.into(),
            shot_id: shot_id.into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairClass {
    /// Same shot, `|Δt| ≤ t0`.
    H0,
    /// Same shot, `|Δt| > t0`.
    H1,
    /// Same video, different shot.
    H2,
    /// Different video.
    H3,
}

impl PairClass {
    pub const ALL: [PairClass; 4] = [PairClass::H0, PairClass::H1, PairClass::H2, PairClass::H3];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Class of the frame pair `(a, b)`. Shot ids are scoped to their video.
pub fn classify_pair(a: &FrameRef, b: &FrameRef, t0: f64) -> PairClass {
    if a.video_id != b.video_id {
        PairClass::H3
    } else if a.shot_id != b.shot_id {
        PairClass::H2
    } else if (a.timestamp - b.timestamp).abs() <= t0 + T0_SLACK {
        PairClass::H0
    } else {
        PairClass::H1
    }
}

/// Per-class weights for the three log-likelihood terms, indexed H0..H3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeightTable {
    pub u1: [f64; 4],
    pub u2: [f64; 4],
    pub u3: [f64; 4],
}

impl Default for ClassWeightTable {
    fn default() -> Self {
        Self {
            u1: [1.0, 0.0, 0.0, 0.0],
            u2: [0.0, 5.0, 5e2, 1e5],
            u3: [0.0, 0.0, 1e2, 2e4],
        }
    }
}

impl ClassWeightTable {
    /// Twelve values in row-major order: `u1[H0..H3], u2[..], u3[..]`.
    pub fn from_row_major(values: &[f64]) -> Result<Self> {
        if values.len() != 12 {
            return Err(Error::InvalidArgument(format!(
                "class weight table needs 12 values, got {}",
                values.len()
            )));
        }
        let row = |i: usize| -> [f64; 4] { values[4 * i..4 * i + 4].try_into().unwrap() };
        let table = Self {
            u1: row(0),
            u2: row(1),
            u3: row(2),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn to_row_major(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        out[..4].copy_from_slice(&self.u1);
        out[4..8].copy_from_slice(&self.u2);
        out[8..].copy_from_slice(&self.u3);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.u1.iter().chain(&self.u2).chain(&self.u3);
        if all.clone().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "class weights must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// A table with every weight zero.
    pub fn zeros() -> Self {
        Self {
            u1: [0.0; 4],
            u2: [0.0; 4],
            u3: [0.0; 4],
        }
    }
}

/// The three `b × b` class weight matrices for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrices {
    pub u1: Array2<f64>,
    pub u2: Array2<f64>,
    pub u3: Array2<f64>,
}

/// Looks up every ordered pair's class weights. Diagonals are zero: a frame
/// paired with itself carries no information.
pub fn class_weight_matrices(
    frames: &[FrameRef],
    table: &ClassWeightTable,
    t0: f64,
) -> WeightMatrices {
    let b = frames.len();
    let mut u1 = Array2::zeros((b, b));
    let mut u2 = Array2::zeros((b, b));
    let mut u3 = Array2::zeros((b, b));
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            let c = classify_pair(&frames[i], &frames[j], t0).index();
            u1[[i, j]] = table.u1[c];
            u2[[i, j]] = table.u2[c];
            u3[[i, j]] = table.u3[c];
        }
    }
    WeightMatrices { u1, u2, u3 }
}

/// Loss hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Hash length in bits.
    pub n: usize,
    /// Hamming radius.
    pub r: usize,
    /// Number of substrings the multi-index splits a hash into.
    pub substring_count: usize,
    pub t0: f64,
    pub lambda4: f64,
    pub lambda5: f64,
    pub weights: ClassWeightTable,
    /// Dot-product clamp used before `arccos`.
    pub clamp_eps: f64,
}

impl LossConfig {
    /// Defaults: `λ4 = 2`, `λ5 = 1e-5`, `t0 = 2/15`, default class weights.
    pub fn new(n: usize, r: usize, substring_count: usize) -> Result<Self> {
        let config = Self {
            n,
            r,
            substring_count,
            t0: DEFAULT_T0,
            lambda4: 2.0,
            lambda5: 1e-5,
            weights: ClassWeightTable::default(),
            clamp_eps: crate::geometry::DOT_CLAMP_EPS,
        };
        config.validate()?;
        Ok(config)
    }

    /// Substring width `n / substring_count`.
    pub fn m(&self) -> usize {
        self.n / self.substring_count
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n < 2 {
            return bad(format!("hash length must be at least 2, got {}", self.n));
        }
        if self.r >= self.n {
            return bad(format!("radius {} must be below n = {}", self.r, self.n));
        }
        if self.substring_count == 0 || !self.n.is_multiple_of(self.substring_count) {
            return bad(format!(
                "substring count {} must divide n = {}",
                self.substring_count, self.n
            ));
        }
        if !(self.lambda4 >= 0.0 && self.lambda5 >= 0.0) {
            return bad("lambda4 and lambda5 must be nonnegative".into());
        }
        if self.t0.is_nan() || self.t0 < 0.0 {
            return bad(format!("t0 must be nonnegative, got {}", self.t0));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 1.0) {
            return bad(format!(
                "clamp_eps must lie in (0, 1), got {}",
                self.clamp_eps
            ));
        }
        self.weights.validate()
    }
}

/// A batch of (batch-normalized) logits and the frames they came from.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `b × n`, one row per frame.
    pub x: Array2<f64>,
    pub frames: Vec<FrameRef>,
}

impl Batch {
    pub fn new(x: Array2<f64>, frames: Vec<FrameRef>) -> Result<Self> {
        if x.nrows() != frames.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: frames.len(),
            });
        }
        if x.nrows() < 2 {
            return Err(Error::InvalidArgument(
                "a batch needs at least 2 rows".into(),
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "batch contains non-finite logits".into(),
            ));
        }
        Ok(Self { x, frames })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }
}

/// Individual loss terms and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
    pub j5: f64,
    /// `-j1 - j2 - j3 + λ4·j4 + λ5·j5`
    pub total: f64,
}
