//! Turns per-frame lookups into matched time segments.
//!
//! Heuristic: for each query frame and dataset video, keep the candidates at
//! the smallest Hamming distance. Candidates are linked into runs when their
//! time offset (`dataset_time - query_time`) agrees with the run's mean offset
//! within `t0` and the query gap since the run's last frame is at most
//! `max_gap_seconds`. A run takes at most one candidate per query frame and
//! its support is the number of query frames it covers.
//!
//! Runs below `min_support` are dropped. Of the rest, a run is also dropped
//! when both its query and dataset intervals overlap those of a run with
//! more support in the same dataset video; near-static footage otherwise
//! spawns shadow runs at slightly different offsets.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::DEFAULT_T0;
use crate::multi_index::{MultiIndex, Posting};

/// Absorbs rounding in frame timestamps.
const OFFSET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub min_support: usize,
    pub max_gap_seconds: f64,
    pub t0: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            min_support: 5,
            max_gap_seconds: 1.0,
            t0: DEFAULT_T0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneMatch {
    pub query_video: String,
    pub dataset_video: String,
    pub query_interval: (f64, f64),
    pub dataset_interval: (f64, f64),
    /// Query frames in the run.
    pub support: usize,
    /// Mean of `dataset_time - query_time` over the run.
    pub offset: f64,
}

struct Candidate {
    query_index: usize,
    query_time: f64,
    dataset_time: f64,
}

struct Run {
    query_interval: (f64, f64),
    dataset_interval: (f64, f64),
    offset_sum: f64,
    support: usize,
    last_index: usize,
}

impl Run {
    fn start(c: &Candidate) -> Self {
        Self {
            query_interval: (c.query_time, c.query_time),
            dataset_interval: (c.dataset_time, c.dataset_time),
            offset_sum: c.dataset_time - c.query_time,
            support: 1,
            last_index: c.query_index,
        }
    }

    fn offset(&self) -> f64 {
        self.offset_sum / self.support as f64
    }

    fn push(&mut self, c: &Candidate) {
        self.query_interval.1 = c.query_time;
        self.dataset_interval.0 = self.dataset_interval.0.min(c.dataset_time);
        self.dataset_interval.1 = self.dataset_interval.1.max(c.dataset_time);
        self.offset_sum += c.dataset_time - c.query_time;
        self.support += 1;
        self.last_index = c.query_index;
    }
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

fn check_query(query: &[Posting]) -> Result<()> {
    let Some(first) = query.first() else {
        return Ok(());
    };
    for w in query.windows(2) {
        if w[1].frame.video_id != first.frame.video_id {
            return Err(Error::InvalidArgument(
                "query frames must come from one video".into(),
            ));
        }
        if w[1].frame.timestamp < w[0].frame.timestamp {
            return Err(Error::InvalidArgument(
                "query frames must be time-ordered".into(),
            ));
        }
    }
    Ok(())
}

/// Matches a time-ordered query video against the index.
pub fn match_scenes(
    query: &[Posting],
    index: &MultiIndex,
    r: u32,
    params: &SceneParams,
) -> Result<Vec<SceneMatch>> {
    check_query(query)?;
    let Some(first) = query.first() else {
        return Ok(Vec::new());
    };

    let mut by_video: BTreeMap<&str, Vec<Candidate>> = BTreeMap::new();
    for (qi, q) in query.iter().enumerate() {
        let found = index.lookup(&q.hash, r)?;
        let mut best: BTreeMap<&str, u32> = BTreeMap::new();
        for m in &found.matches {
            let d = best.entry(&m.posting.frame.video_id).or_insert(m.distance);
            *d = (*d).min(m.distance);
        }
        let mut picked: Vec<(&str, f64)> = found
            .matches
            .iter()
            .filter(|m| best[m.posting.frame.video_id.as_str()] == m.distance)
            .map(|m| (m.posting.frame.video_id.as_str(), m.posting.frame.timestamp))
            .collect();
        picked.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
        for (video, dataset_time) in picked {
            by_video.entry(video).or_default().push(Candidate {
                query_index: qi,
                query_time: q.frame.timestamp,
                dataset_time,
            });
        }
    }

    let mut out = Vec::new();
    for (video, candidates) in by_video {
        let mut runs: Vec<Run> = Vec::new();
        for c in &candidates {
            let offset = c.dataset_time - c.query_time;
            let best = runs
                .iter_mut()
                .filter(|run| {
                    run.last_index == c.query_index
                        || c.query_time - run.query_interval.1 <= params.max_gap_seconds
                })
                .map(|run| ((run.offset() - offset).abs(), run))
                .filter(|(diff, _)| *diff <= params.t0 + OFFSET_SLACK)
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((_, run)) if run.last_index == c.query_index => {}
                Some((_, run)) => run.push(c),
                None => runs.push(Run::start(c)),
            }
        }
        let mut strong: Vec<Run> = runs
            .into_iter()
            .filter(|run| run.support >= params.min_support)
            .collect();
        strong.sort_by(|a, b| {
            b.support
                .cmp(&a.support)
                .then(a.query_interval.0.total_cmp(&b.query_interval.0))
        });
        let mut kept: Vec<Run> = Vec::new();
        for run in strong {
            let shadowed = kept.iter().any(|k| {
                overlaps(k.query_interval, run.query_interval)
                    && overlaps(k.dataset_interval, run.dataset_interval)
            });
            if !shadowed {
                kept.push(run);
            }
        }
        out.extend(kept.into_iter().map(|run| SceneMatch {
            query_video: first.frame.video_id.clone(),
            dataset_video: video.to_string(),
            query_interval: run.query_interval,
            dataset_interval: run.dataset_interval,
            support: run.support,
            offset: run.offset(),
        }));
    }
    out.sort_by(|a, b| {
        a.dataset_video
            .cmp(&b.dataset_video)
            .then(a.query_interval.0.total_cmp(&b.query_interval.0))
            .then(a.dataset_interval.0.total_cmp(&b.dataset_interval.0))
    });
    Ok(out)
}
