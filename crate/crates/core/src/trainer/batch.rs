//! Hierarchical batches.
//!
//! A batch draws videos with replacement, shots within each video without
//! replacement, anchor frames within each shot without replacement, and for
//! every anchor a few extra frames of the same shot within `t0` of it. The
//! result holds pairs of all four classes whenever the dataset allows.
//!
//! With the defaults (35 videos, 2 shots, 2 anchors, 1 extra per anchor) a
//! batch has 35·2·4 = 280 frames and every frame has a same-shot companion
//! within `t0`.

use std::collections::{BTreeMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{FrameRef, DEFAULT_T0};

/// Absorbs rounding in `k / fps` timestamps.
const T0_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub video_id: String,
    pub shot_id: String,
    /// Ascending frame times in seconds.
    pub timestamps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotDataset {
    shots: Vec<Shot>,
    fps: f64,
    /// Shot indices per video, videos in id order.
    videos: Vec<Vec<usize>>,
}

impl ShotDataset {
    pub fn new(shots: Vec<Shot>, fps: f64) -> Result<Self> {
        if fps.is_nan() || fps <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "fps must be positive, got {fps}"
            )));
        }
        let mut by_video: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        let mut seen = HashSet::new();
        for (i, shot) in shots.iter().enumerate() {
            if shot.timestamps.len() < 2 {
                return Err(Error::DegenerateInput(format!(
                    "shot {}/{} has fewer than 2 frames",
                    shot.video_id, shot.shot_id
                )));
            }
            if shot
                .timestamps
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
            {
                return Err(Error::InvalidArgument(format!(
                    "shot {}/{} timestamps are not increasing",
                    shot.video_id, shot.shot_id
                )));
            }
            if !seen.insert((shot.video_id.as_str(), shot.shot_id.as_str())) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate shot {}/{}",
                    shot.video_id, shot.shot_id
                )));
            }
            by_video.entry(&shot.video_id).or_default().push(i);
        }
        let videos = by_video.into_values().collect();
        Ok(Self { shots, fps, videos })
    }

    pub fn shots(&self) -> &[Shot] {
        &self.shots
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }

    pub fn frame(&self, shot: usize, frame: usize) -> FrameRef {
        let s = &self.shots[shot];
        FrameRef::new(s.video_id.clone(), s.shot_id.clone(), s.timestamps[frame])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchParams {
    pub videos: usize,
    pub shots_per_video: usize,
    pub anchors_per_shot: usize,
    pub extras_per_anchor: usize,
    /// Window for the extra frames.
    pub t0: f64,
}

impl Default for BatchParams {
    fn default() -> Self {
        Self {
            videos: 35,
            shots_per_video: 2,
            anchors_per_shot: 2,
            extras_per_anchor: 1,
            t0: DEFAULT_T0,
        }
    }
}

impl BatchParams {
    pub fn batch_size(&self) -> usize {
        self.videos * self.shots_per_video * self.frames_per_shot()
    }

    pub fn frames_per_shot(&self) -> usize {
        self.anchors_per_shot * (1 + self.extras_per_anchor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    pub frames: Vec<FrameRef>,
    /// `(shot index, frame index)` in the dataset for each frame.
    pub members: Vec<(usize, usize)>,
}

impl BatchPlan {
    pub fn b(&self) -> usize {
        self.frames.len()
    }
}

pub fn hierarchical_batch<R: Rng + ?Sized>(
    data: &ShotDataset,
    params: &BatchParams,
    rng: &mut R,
) -> Result<BatchPlan> {
    if params.videos == 0 || params.shots_per_video == 0 || params.anchors_per_shot == 0 {
        return Err(Error::InvalidArgument(
            "batch needs at least one video, shot and anchor".into(),
        ));
    }
    let need = params.frames_per_shot();
    let eligible: Vec<Vec<usize>> = data
        .videos
        .iter()
        .map(|shots| {
            shots
                .iter()
                .copied()
                .filter(|&s| data.shots[s].timestamps.len() >= need)
                .collect::<Vec<_>>()
        })
        .filter(|shots| shots.len() >= params.shots_per_video)
        .collect();
    if eligible.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "no video has {} shots of at least {need} frames",
            params.shots_per_video
        )));
    }

    let mut members = Vec::with_capacity(params.batch_size());
    for _ in 0..params.videos {
        let shots = eligible.choose(rng).expect("nonempty");
        for &shot in shots.choose_multiple(rng, params.shots_per_video) {
            members.extend(sample_shot(data, shot, params, rng)?);
        }
    }
    let frames = members.iter().map(|&(s, f)| data.frame(s, f)).collect();
    Ok(BatchPlan { frames, members })
}

fn sample_shot<R: Rng + ?Sized>(
    data: &ShotDataset,
    shot: usize,
    params: &BatchParams,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let times = &data.shots[shot].timestamps;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.shuffle(rng);
    let mut taken = vec![false; times.len()];
    let mut picked = Vec::with_capacity(params.frames_per_shot());
    let mut anchors = 0;
    for &anchor in &order {
        if anchors == params.anchors_per_shot {
            break;
        }
        if taken[anchor] {
            continue;
        }
        let near: Vec<usize> = (0..times.len())
            .filter(|&f| {
                f != anchor && !taken[f] && (times[f] - times[anchor]).abs() <= params.t0 + T0_SLACK
            })
            .collect();
        if near.len() < params.extras_per_anchor {
            continue;
        }
        taken[anchor] = true;
        picked.push((shot, anchor));
        for &extra in near.choose_multiple(rng, params.extras_per_anchor) {
            taken[extra] = true;
            picked.push((shot, extra));
        }
        anchors += 1;
    }
    if anchors < params.anchors_per_shot {
        let s = &data.shots[shot];
        return Err(Error::DegenerateInput(format!(
            "shot {}/{} has too few frames within t0 of each other",
            s.video_id, s.shot_id
        )));
    }
    Ok(picked)
}
