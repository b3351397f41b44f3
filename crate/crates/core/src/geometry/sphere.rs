//! Sampling on `Sⁿ⁻¹` and the Monte Carlo Hamming-distance experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::binom::binom_pmf;
use super::hash::{binarize, hamming_words};
use super::{dot, l2_norm, UnitVector};
use crate::error::{Error, Result};

/// Trials per independently seeded Monte Carlo chunk.
///
/// Chunk `c` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
/// `c`, so the histogram depends only on `(seed, trials)` and not on how the
/// chunks are spread across threads.
pub const MC_CHUNK_TRIALS: u64 = 4096;

/// Distribution of Hamming distances over repeated trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HammingHistogram {
    counts: Vec<u64>,
    trials: u64,
}

impl HammingHistogram {
    pub fn new(n: u32) -> Self {
        Self {
            counts: vec![0; n as usize + 1],
            trials: 0,
        }
    }

    pub fn record(&mut self, distance: u32) {
        self.counts[distance as usize] += 1;
        self.trials += 1;
    }

    pub fn merge(&mut self, other: &HammingHistogram) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.trials += other.trials;
    }

    /// Hash length `n`; the histogram has `n + 1` bins.
    pub fn n(&self) -> u32 {
        (self.counts.len() - 1) as u32
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.trials as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(d, &c)| d as f64 * c as f64)
            .sum();
        total / self.trials as f64
    }

    /// Unbiased sample variance of the recorded distances.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(d, &c)| c as f64 * (d as f64 - mean).powi(2))
            .sum();
        ss / (self.trials as f64 - 1.0)
    }

    /// Half the L1 distance between the empirical frequencies and
    /// `Binomial(n, p)`.
    pub fn total_variation_to_binomial(&self, p: f64) -> Result<f64> {
        let n = self.n() as u64;
        let mut l1 = 0.0;
        for (k, f) in self.frequencies().into_iter().enumerate() {
            l1 += (f - binom_pmf(k as u64, n, p)?).abs();
        }
        Ok(0.5 * l1)
    }
}

/// A point drawn uniformly from `Sⁿ⁻¹` (normalized standard normals).
pub fn sample_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = l2_norm(&g);
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

// A uniform unit vector orthogonal to `y` (itself a unit vector).
fn sample_orthogonal<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut u: Vec<f64> = (0..y.len()).map(|_| rng.sample(StandardNormal)).collect();
        // Two Gram-Schmidt passes keep u·y at rounding level.
        for _ in 0..2 {
            let c = dot(&u, y);
            u.iter_mut().zip(y).for_each(|(a, b)| *a -= c * b);
        }
        let norm = l2_norm(&u);
        if norm > 1e-9 {
            return u.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Two unit vectors separated by exactly `theta`.
///
/// `y1` is uniform on the sphere and `y2 = cos θ · y1 + sin θ · u` with `u`
/// uniform on the great sphere orthogonal to `y1`.
pub fn sample_hypersphere_pair<R: Rng + ?Sized>(
    n: usize,
    theta: f64,
    rng: &mut R,
) -> Result<(UnitVector, UnitVector)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "hypersphere dimension must be at least 2, got {n}"
        )));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "angle {theta} is outside [0, π]"
        )));
    }
    let y1 = sample_unit_vector(n, rng);
    let u = sample_orthogonal(&y1, rng);
    let (s, c) = theta.sin_cos();
    let y2 = y1.iter().zip(&u).map(|(a, b)| c * a + s * b).collect();
    Ok((UnitVector::new_unchecked(y1), UnitVector::new_unchecked(y2)))
}

fn run_chunk(n: usize, theta: f64, trials: u64, seed: u64, chunk: u64) -> HammingHistogram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut hist = HammingHistogram::new(n as u32);
    for _ in 0..trials {
        let (y1, y2) = sample_hypersphere_pair(n, theta, &mut rng).expect("validated arguments");
        let d = hamming_words(binarize(y1.values()).words(), binarize(y2.values()).words());
        hist.record(d);
    }
    hist
}

/// Histogram of `hamming(binarize(y1), binarize(y2))` over `trials` pairs
/// at angle `theta` in `n` dimensions.
///
/// Runs on the current rayon pool; see [`MC_CHUNK_TRIALS`] for the seeding
/// rule that makes the result thread-count independent.
pub fn mc_hamming_distribution(
    n: usize,
    theta: f64,
    trials: u64,
    seed: u64,
) -> Result<HammingHistogram> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    // Validate once up front so chunks can't fail.
    sample_hypersphere_pair(n, theta, &mut ChaCha8Rng::seed_from_u64(0))?;

    let chunks = trials.div_ceil(MC_CHUNK_TRIALS);
    let parts: Vec<HammingHistogram> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = MC_CHUNK_TRIALS.min(trials - c * MC_CHUNK_TRIALS);
            run_chunk(n, theta, size, seed, c)
        })
        .collect();
    let mut total = HammingHistogram::new(n as u32);
    for h in &parts {
        total.merge(h);
    }
    Ok(total)
}
