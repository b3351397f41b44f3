use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Saved statistics for [`batch_normalize_backward`].
#[derive(Debug, Clone)]
pub struct NormCache {
    pub normalized: Array2<f64>,
    pub std: Array1<f64>,
}

/// Standardizes each column to mean 0 and population variance 1.
pub fn batch_normalize(x: &Array2<f64>) -> Result<(Array2<f64>, NormCache)> {
    let b = x.nrows();
    if b < 2 {
        return Err(Error::DegenerateInput(format!(
            "batch normalization needs at least 2 rows, got {b}"
        )));
    }
    let mean = x.mean_axis(Axis(0)).expect("nonempty batch");
    let centered = x - &mean;
    let var = centered
        .mapv(|v| v * v)
        .mean_axis(Axis(0))
        .expect("nonempty batch");
    if let Some(col) = var.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "column {col} has non-finite statistics"
        )));
    }
    if let Some(col) = var.iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateInput(format!("column {col} is constant")));
    }
    let std = var.mapv(f64::sqrt);
    let normalized = centered / &std;
    Ok((normalized.clone(), NormCache { normalized, std }))
}

/// Gradient with respect to the input of [`batch_normalize`], given the
/// gradient with respect to its output.
pub fn batch_normalize_backward(cache: &NormCache, grad_out: &Array2<f64>) -> Array2<f64> {
    let xhat = &cache.normalized;
    let mean_g = grad_out.mean_axis(Axis(0)).expect("nonempty batch");
    let mean_gx = (grad_out * xhat)
        .mean_axis(Axis(0))
        .expect("nonempty batch");
    (grad_out - &mean_g - &(xhat * &mean_gx)) / &cache.std
}
