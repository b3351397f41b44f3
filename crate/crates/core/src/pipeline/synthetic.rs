//! Synthetic frame embeddings for fixtures and demos.
//!
//! Each shot starts at a uniform random point of the unit sphere and drifts
//! along a slowly turning geodesic, so nearby frames hash close together and
//! distant frames do not.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{dot, l2_norm, sample_unit_vector, Embedding};
use crate::loss::FrameRef;

use super::ingest::EmbeddingRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub n: usize,
    pub fps: f64,
    /// Angle travelled per frame, radians.
    pub step_angle: f64,
    /// Per-frame change of heading, relative to the unit heading.
    pub turn: f64,
}

impl DriftParams {
    /// About 0.7 expected bit flips per frame.
    pub fn for_dim(n: usize) -> Self {
        Self {
            n,
            fps: 15.0,
            step_angle: 0.7 * std::f64::consts::PI / n as f64,
            turn: 0.3,
        }
    }
}

/// Unit vector orthogonal to `y`.
fn random_tangent<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..y.len()).map(|_| rng.sample(StandardNormal)).collect();
        let along = dot(&g, y);
        g.iter_mut().zip(y).for_each(|(gi, yi)| *gi -= along * yi);
        let norm = l2_norm(&g);
        if norm > 1e-12 {
            g.iter_mut().for_each(|gi| *gi /= norm);
            return g;
        }
    }
}

fn rotate(y: &[f64], v: &[f64], angle: f64) -> (Vec<f64>, Vec<f64>) {
    let (s, c) = angle.sin_cos();
    let y2 = y.iter().zip(v).map(|(a, b)| c * a + s * b).collect();
    let v2 = y.iter().zip(v).map(|(a, b)| -s * a + c * b).collect();
    (y2, v2)
}

/// Frames of one video; shot `i` lasts `shot_durations[i]` seconds and is
/// named by its index. Timestamps run continuously across shots.
pub fn drifting_video<R: Rng + ?Sized>(
    video_id: &str,
    shot_durations: &[f64],
    params: &DriftParams,
    rng: &mut R,
) -> Result<Vec<EmbeddingRecord>> {
    if params.n < 2 || params.fps.is_nan() || params.fps <= 0.0 {
        return Err(Error::InvalidArgument(
            "drift needs n >= 2 and a positive frame rate".into(),
        ));
    }
    let mut out = Vec::new();
    let mut frame_no = 0usize;
    for (shot, &duration) in shot_durations.iter().enumerate() {
        let frames = (duration * params.fps).round() as usize;
        let mut y = sample_unit_vector(params.n, rng);
        let mut v = random_tangent(&y, rng);
        for _ in 0..frames {
            out.push(EmbeddingRecord {
                frame: FrameRef::new(video_id, shot.to_string(), frame_no as f64 / params.fps),
                embedding: Embedding::new(y.clone())?,
                black: false,
            });
            frame_no += 1;
            let (y2, v2) = rotate(&y, &v, params.step_angle);
            let kick = random_tangent(&y2, rng);
            let mut heading: Vec<f64> = v2
                .iter()
                .zip(&kick)
                .map(|(a, b)| a + params.turn * b)
                .collect();
            let along = dot(&heading, &y2);
            heading
                .iter_mut()
                .zip(&y2)
                .for_each(|(h, yi)| *h -= along * yi);
            let norm = l2_norm(&heading);
            heading.iter_mut().for_each(|h| *h /= norm);
            y = y2;
            v = heading;
        }
    }
    Ok(out)
}

/// Rotates every embedding by `angle` radians in a random direction.
pub fn jitter<R: Rng + ?Sized>(
    records: &[EmbeddingRecord],
    angle: f64,
    rng: &mut R,
) -> Result<Vec<EmbeddingRecord>> {
    records
        .iter()
        .map(|rec| {
            let y = rec.embedding.values();
            let norm = l2_norm(y);
            let unit: Vec<f64> = y.iter().map(|v| v / norm).collect();
            let (moved, _) = rotate(&unit, &random_tangent(&unit, rng), angle);
            Ok(EmbeddingRecord {
                frame: rec.frame.clone(),
                embedding: Embedding::new(moved)?,
                black: rec.black,
            })
        })
        .collect()
}

/// Copies `records` into `video_id` with every timestamp moved by `shift`,
/// dropping frames that would land before zero.
pub fn retime(records: &[EmbeddingRecord], video_id: &str, shift: f64) -> Vec<EmbeddingRecord> {
    records
        .iter()
        .filter(|rec| rec.frame.timestamp + shift >= 0.0)
        .map(|rec| EmbeddingRecord {
            frame: FrameRef::new(
                video_id,
                rec.frame.shot_id.clone(),
                rec.frame.timestamp + shift,
            ),
            embedding: rec.embedding.clone(),
            black: rec.black,
        })
        .collect()
}
