use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView2, Axis};

use super::{class_weight_matrices, Batch, LossBreakdown, LossConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    flip_probability_with_eps, ln_choose, ln_p_q, log_binom_cdf, xlny, DOT_CLAMP_EPS,
};

/// `ln(1e-300)`: stand-in for `ln F` when `F` is exactly zero.
pub const LN_CDF_FLOOR: f64 = -690.775_527_898_213_7;

/// Row-normalized view of a contiguous column block of `X`.
struct Block {
    start: usize,
    y: Array2<f64>,
    norms: Vec<f64>,
    /// `Y Yᵀ`
    dots: Array2<f64>,
}

impl Block {
    fn new(x: ArrayView2<'_, f64>, start: usize, width: usize) -> Result<Self> {
        let slice = x.slice(s![.., start..start + width]);
        let mut y = slice.to_owned();
        let mut norms = Vec::with_capacity(y.nrows());
        for (i, mut row) in y.axis_iter_mut(Axis(0)).enumerate() {
            let norm = row.dot(&row).sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::DegenerateInput(format!(
                    "row {i} is zero in columns {start}..{}",
                    start + width
                )));
            }
            row /= norm;
            norms.push(norm);
        }
        let dots = y.dot(&y.t());
        Ok(Self {
            start,
            y,
            norms,
            dots,
        })
    }

    fn flip_probabilities(&self, eps: f64) -> Array2<f64> {
        self.dots.mapv(|u| flip_probability_with_eps(u, eps))
    }

    /// Adds `∂J/∂X` for this block given `coef[i][j] = ∂J/∂P_ij`.
    fn backprop(&self, coef: &Array2<f64>, eps: f64, grad: &mut Array2<f64>) {
        let b = self.y.nrows();
        // a_ij = ∂J/∂P_ij · dP/du_ij, zero where the clamp is active.
        let mut a = Array2::<f64>::zeros((b, b));
        for i in 0..b {
            for j in 0..b {
                let c = coef[[i, j]];
                let u = self.dots[[i, j]];
                if c != 0.0 && u > -1.0 + eps && u < 1.0 - eps {
                    a[[i, j]] = -c / (PI * (1.0 - u * u).sqrt());
                }
            }
        }
        let sym = &a + &a.t();
        // ∂J/∂Y = (A + Aᵀ) Y, then through y = x/‖x‖.
        let gy = sym.dot(&self.y);
        let width = self.y.ncols();
        for i in 0..b {
            let yi = self.y.row(i);
            let gi = gy.row(i);
            let radial = gi.dot(&yi);
            let inv = 1.0 / self.norms[i];
            let mut out = grad.slice_mut(s![i, self.start..self.start + width]);
            for k in 0..width {
                out[k] += (gi[k] - radial * yi[k]) * inv;
            }
        }
    }
}

/// Pairwise flip-probability matrices of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipProbabilities {
    /// From full-width rows.
    pub full: Array2<f64>,
    /// One per contiguous substring slice, each row normalized on its own.
    pub slices: Vec<Array2<f64>>,
}

fn check_slices(n: usize, substring_count: usize) -> Result<usize> {
    if substring_count == 0 || !n.is_multiple_of(substring_count) {
        return Err(Error::InvalidArgument(format!(
            "substring count {substring_count} must divide n = {n}"
        )));
    }
    Ok(n / substring_count)
}

/// `P = arccos(Y Yᵀ)/π` and the per-substring `P_l`, with dot products
/// clamped by [`DOT_CLAMP_EPS`].
pub fn pairwise_flip_probabilities(
    x: &Array2<f64>,
    substring_count: usize,
) -> Result<FlipProbabilities> {
    let width = check_slices(x.ncols(), substring_count)?;
    let full = Block::new(x.view(), 0, x.ncols())?.flip_probabilities(DOT_CLAMP_EPS);
    let slices = (0..substring_count)
        .map(|l| Ok(Block::new(x.view(), l * width, width)?.flip_probabilities(DOT_CLAMP_EPS)))
        .collect::<Result<_>>()?;
    Ok(FlipProbabilities { full, slices })
}

/// `∂F(r; n, p)/∂p = -n C(n-1, r) pʳ (1-p)ⁿ⁻¹⁻ʳ`, evaluated in log space.
pub fn binom_cdf_dp(r: u64, n: u64, p: f64) -> Result<f64> {
    if r > n {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} is outside [0, 1]"
        )));
    }
    if r == n {
        return Ok(0.0);
    }
    Ok(-log_abs_cdf_dp(r, n, p).exp())
}

fn log_abs_cdf_dp(r: u64, n: u64, p: f64) -> f64 {
    let (ln_p, ln_q) = ln_p_q(p);
    (n as f64).ln() + ln_choose(n - 1, r) + xlny(r as f64, ln_p) + xlny((n - 1 - r) as f64, ln_q)
}

/// `(ln F(r; n, p), d ln F / dp)` with the floor applied where `F = 0`.
fn ln_cdf_and_slope(r: u64, n: u64, p: f64) -> Result<(f64, f64)> {
    let ln_f = log_binom_cdf(r, n, p)?;
    if ln_f == f64::NEG_INFINITY {
        return Ok((LN_CDF_FLOOR, 0.0));
    }
    let slope = if r == n {
        0.0
    } else {
        -(log_abs_cdf_dp(r, n, p) - ln_f).exp()
    };
    Ok((ln_f, slope))
}

/// `Σ_ij U_ij ln F(r; n, g(P_ij))` where `g` is identity or `1 - P`.
///
/// When `coef` is given, adds `scale · U_ij · d ln F/dP_ij` into it.
fn weighted_log_cdf(
    weights: &Array2<f64>,
    probs: &Array2<f64>,
    r: u64,
    n: u64,
    complement: bool,
    mut coef: Option<(&mut Array2<f64>, f64)>,
) -> Result<f64> {
    let mut sum = 0.0;
    for ((idx, &w), &p) in weights.indexed_iter().zip(probs.iter()) {
        if w == 0.0 {
            continue;
        }
        let arg = if complement { 1.0 - p } else { p };
        let (ln_f, slope) = ln_cdf_and_slope(r, n, arg)?;
        sum += w * ln_f;
        if let Some((c, scale)) = coef.as_mut() {
            let d = if complement { -slope } else { slope };
            c[idx] += *scale * w * d;
        }
    }
    Ok(sum)
}

fn evaluate(
    batch: &Batch,
    config: &LossConfig,
    model_weights: Option<&[f64]>,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<Array2<f64>>)> {
    config.validate()?;
    let x = &batch.x;
    let (b, n) = x.dim();
    if n != config.n {
        return Err(Error::DimensionMismatch {
            expected: config.n,
            actual: n,
        });
    }
    let width = check_slices(n, config.substring_count)?;
    let eps = config.clamp_eps;
    let u = class_weight_matrices(&batch.frames, &config.weights, config.t0);
    let avg = 1.0 / (b * b) as f64;
    let (n64, r64, m64) = (n as u64, config.r as u64, width as u64);

    let mut grad = want_grad.then(|| Array2::<f64>::zeros((b, n)));

    let full = Block::new(x.view(), 0, n)?;
    let p = full.flip_probabilities(eps);
    let mut coef = want_grad.then(|| Array2::<f64>::zeros((b, b)));
    // J enters the total with a minus sign, hence the negative scales.
    let j1 = avg * weighted_log_cdf(&u.u1, &p, r64, n64, false, coef.as_mut().map(|c| (c, -avg)))?;
    let j2 = avg
        * weighted_log_cdf(
            &u.u2,
            &p,
            n64 - r64 - 1,
            n64,
            true,
            coef.as_mut().map(|c| (c, -avg)),
        )?;
    if let (Some(g), Some(c)) = (grad.as_mut(), coef.as_ref()) {
        full.backprop(c, eps, g);
    }

    let mut j3 = 0.0;
    for l in 0..config.substring_count {
        let block = Block::new(x.view(), l * width, width)?;
        let pl = block.flip_probabilities(eps);
        let mut coef = want_grad.then(|| Array2::<f64>::zeros((b, b)));
        j3 += avg
            * weighted_log_cdf(
                &u.u3,
                &pl,
                m64 - 1,
                m64,
                true,
                coef.as_mut().map(|c| (c, -avg)),
            )?;
        if let (Some(g), Some(c)) = (grad.as_mut(), coef.as_ref()) {
            block.backprop(c, eps, g);
        }
    }

    // Skew: S = Σᵢ (xⁱ)³ elementwise.
    let cubes = x.mapv(|v| v * v * v);
    let skew = cubes.sum_axis(Axis(0));
    let j4 = skew.dot(&skew) / (n * b) as f64;
    if let Some(g) = grad.as_mut() {
        let scale = config.lambda4 * 2.0 * 3.0 / (n * b) as f64;
        if scale != 0.0 {
            for ((i, k), v) in g.indexed_iter_mut() {
                let xv = x[[i, k]];
                *v += scale * xv * xv * skew[k];
            }
        }
    }

    let j5 = model_weights.map_or(0.0, |w| w.iter().map(|v| v * v).sum());
    let total = -j1 - j2 - j3 + config.lambda4 * j4 + config.lambda5 * j5;
    Ok((
        LossBreakdown {
            j1,
            j2,
            j3,
            j4,
            j5,
            total,
        },
        grad,
    ))
}

/// Every loss term for `batch`. `model_weights` feeds the `J5` weight decay
/// and may be omitted.
pub fn loss_terms(
    batch: &Batch,
    config: &LossConfig,
    model_weights: Option<&[f64]>,
) -> Result<LossBreakdown> {
    evaluate(batch, config, model_weights, false).map(|(l, _)| l)
}

/// `∂J/∂X`, a `b × n` matrix. `J5` does not depend on `X`.
pub fn loss_gradient(batch: &Batch, config: &LossConfig) -> Result<Array2<f64>> {
    loss_and_gradient(batch, config, None).map(|(_, g)| g)
}

/// Loss terms and `∂J/∂X` from one pass over the pairs.
pub fn loss_and_gradient(
    batch: &Batch,
    config: &LossConfig,
    model_weights: Option<&[f64]>,
) -> Result<(LossBreakdown, Array2<f64>)> {
    let (loss, grad) = evaluate(batch, config, model_weights, true)?;
    Ok((loss, grad.expect("gradient requested")))
}
