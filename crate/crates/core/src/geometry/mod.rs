//! Hypersphere geometry and the sign-bit Hamming model.
//!
//! An embedding `x ∈ ℝⁿ` is L2-normalized onto the unit sphere and binarized
//! by sign. For two unit vectors at angle θ each sign bit differs with
//! probability θ/π, and the Hamming distance is approximated as
//! `Binomial(n, θ/π)`.

mod binom;
mod hash;
mod sphere;

pub use binom::{binom_cdf, binom_pmf, ln_choose, ln_factorial, log_binom_cdf};
pub(crate) use binom::{ln_p_q, xlny};
pub use hash::{binarize, hamming_distance, BinaryHash};
pub(crate) use hash::{hamming_words, words_for as words_for_bits};
pub use sphere::{
    mc_hamming_distribution, sample_hypersphere_pair, sample_unit_vector, HammingHistogram,
    MC_CHUNK_TRIALS,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Dot products are clamped to `[-1 + ε, 1 - ε]` before `arccos`.
///
/// The derivative of `arccos` is singular at ±1; with this ε the clamped
/// probability differs from the exact one by less than 2e-4.
pub const DOT_CLAMP_EPS: f64 = 1e-7;

/// Tolerance on the norm of a [`UnitVector`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Raw real-valued hash-layer output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "embedding needs at least 2 components, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "embedding component {i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn binarize(&self) -> BinaryHash {
        binarize(&self.values)
    }
}

/// A point on the unit hypersphere `Sⁿ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    values: Vec<f64>,
}

impl UnitVector {
    /// Wraps `values` after checking the norm is 1 within [`UNIT_NORM_TOL`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "vector norm {norm} is not 1"
            )));
        }
        Ok(Self { values })
    }

    pub(crate) fn new_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(dot(&self.values, &other.values))
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `values` to unit length.
///
/// Zero (or non-finite) norm is reported as [`Error::DegenerateInput`]
/// instead of producing NaNs.
pub fn normalize_slice(values: &[f64]) -> Result<Vec<f64>> {
    let norm = l2_norm(values);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateInput(
            "cannot normalize a zero-length vector".into(),
        ));
    }
    Ok(values.iter().map(|v| v / norm).collect())
}

/// `x / ‖x‖₂`.
pub fn l2_normalize(x: &Embedding) -> Result<UnitVector> {
    normalize_slice(x.values()).map(UnitVector::new_unchecked)
}

/// Clamps a dot product into `[-1 + ε, 1 - ε]`.
pub fn clamp_dot(u: f64) -> f64 {
    u.clamp(-1.0 + DOT_CLAMP_EPS, 1.0 - DOT_CLAMP_EPS)
}

/// `arccos(clamp(u)) / π` for a dot product `u` of two unit vectors.
pub fn flip_probability_from_dot(u: f64) -> f64 {
    flip_probability_with_eps(u, DOT_CLAMP_EPS)
}

/// As [`flip_probability_from_dot`] with an explicit clamp.
pub fn flip_probability_with_eps(u: f64, eps: f64) -> f64 {
    u.clamp(-1.0 + eps, 1.0 - eps).acos() / PI
}

/// Probability that a given sign bit differs between `y1` and `y2`.
pub fn bit_flip_probability(y1: &UnitVector, y2: &UnitVector) -> Result<f64> {
    y1.dot(y2).map(flip_probability_from_dot)
}
