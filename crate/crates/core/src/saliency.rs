//! From gradients to prepared saliency maps.
//!
//! Saliency of a pixel is the l2 norm over color channels of the loss
//! gradient with respect to that pixel. Before the offset search, each map of
//! a pair is smoothed with a Gaussian kernel, normalized to unit mass, and
//! scaled so the two maps carry mass `lambda` and `1 - lambda`: the mixing
//! coefficient enters the pipeline as relative saliency mass, not as a direct
//! blend weight.

use rand::Rng;

use crate::error::{Result, SageError};
use crate::model::{ClassifierState, ParamGradient};
use crate::rng::SeededRng;
use crate::types::{ImageTensor, PreparedSaliency, SaliencyMap, SoftLabel, CHANNELS};

/// Per-pixel saliency of `image` under the model's loss at `label`.
///
/// Also returns the parameter gradient of the same backward pass so a
/// training loop can reuse it instead of running backpropagation twice.
pub fn compute_saliency(
    model: &ClassifierState,
    image: &ImageTensor,
    label: &SoftLabel,
) -> Result<(SaliencyMap, ParamGradient)> {
    let grads = model.loss_and_grads(image, label)?;
    let side = image.side();
    let mut data = Vec::with_capacity(side * side);
    for pixel in grads.input_grad.chunks_exact(CHANNELS) {
        let sq: f64 = pixel.iter().map(|&g| (g as f64) * (g as f64)).sum();
        data.push(sq.sqrt() as f32);
    }
    Ok((SaliencyMap::from_vec_unchecked(side, data), grads.params))
}

/// Truncated, renormalized Gaussian taps for variance `sigma2`.
///
/// The radius is `ceil(3 * sigma)`, and renormalization makes the taps sum to
/// exactly one, so convolution with reflected borders preserves total mass.
fn kernel(sigma2: f32) -> Vec<f64> {
    let sigma = (sigma2 as f64).sqrt();
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma2 as f64)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}

/// Index into a length-`n` row under half-sample symmetric reflection, where
/// position `-1` maps to `0` and position `n` maps to `n - 1`.
fn reflect(pos: i64, n: i64) -> usize {
    let period = 2 * n;
    let mut p = pos.rem_euclid(period);
    if p >= n {
        p = period - 1 - p;
    }
    p as usize
}

/// Separable Gaussian blur with reflected borders.
///
/// `sigma2 = 0` returns the map unchanged. Total mass is preserved up to
/// rounding for any variance.
pub fn gaussian_smooth(map: &SaliencyMap, sigma2: f32) -> Result<SaliencyMap> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(SageError::InvalidArgument(format!(
            "sigma2 must be finite and >= 0, got {sigma2}"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(map.clone());
    }
    let side = map.side();
    let n = side as i64;
    let taps = kernel(sigma2);
    let radius = (taps.len() / 2) as i64;
    let src = map.as_slice();

    // Horizontal pass in f64, then vertical, rounding to f32 once at the end.
    let mut mid = vec![0.0f64; side * side];
    for r in 0..side {
        let row = &src[r * side..(r + 1) * side];
        for c in 0..n {
            let mut acc = 0.0f64;
            for (t, &w) in taps.iter().enumerate() {
                let p = reflect(c + t as i64 - radius, n);
                acc += w * row[p] as f64;
            }
            mid[r * side + c as usize] = acc;
        }
    }
    let mut out = vec![0.0f32; side * side];
    for c in 0..side {
        for r in 0..n {
            let mut acc = 0.0f64;
            for (t, &w) in taps.iter().enumerate() {
                let p = reflect(r + t as i64 - radius, n);
                acc += w * mid[p * side + c];
            }
            out[r as usize * side + c] = acc.max(0.0) as f32;
        }
    }
    Ok(SaliencyMap::from_vec_unchecked(side, out))
}

/// Scales a map to unit mass. A map whose total is below `1e-12` has no
/// direction to keep, so it becomes uniform with value `1 / d^2`.
pub fn l1_normalize(map: &SaliencyMap) -> SaliencyMap {
    let side = map.side();
    let total: f64 = map.as_slice().iter().map(|&v| v as f64).sum();
    if total < 1e-12 {
        let value = 1.0 / (side * side) as f32;
        return SaliencyMap::from_vec_unchecked(side, vec![value; side * side]);
    }
    let data = map
        .as_slice()
        .iter()
        .map(|&v| (v as f64 / total) as f32)
        .collect();
    SaliencyMap::from_vec_unchecked(side, data)
}

/// A mixing coefficient drawn uniformly from `[0, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaDraw {
    pub lambda: f32,
}

/// Draws the mixing coefficient for one augmentation.
pub fn sample_lambda(rng: &mut SeededRng, u: f32) -> Result<LambdaDraw> {
    if !(0.0..=1.0).contains(&u) {
        return Err(SageError::InvalidArgument(format!(
            "u must lie in [0, 1], got {u}"
        )));
    }
    let unit: f32 = rng.random();
    Ok(LambdaDraw { lambda: unit * u })
}

/// Smooths, normalizes, and mass-scales a saliency pair.
///
/// The first output carries mass `lambda`, the second `1 - lambda`; together
/// they sum to one, which bounds the total saliency objective.
pub fn prepare_pair(
    s0: &SaliencyMap,
    s1: &SaliencyMap,
    lambda: f32,
    sigma2: f32,
) -> Result<(PreparedSaliency, PreparedSaliency)> {
    if s0.side() != s1.side() {
        return Err(SageError::DimensionMismatch {
            context: "saliency pair sides",
            left: s0.side(),
            right: s1.side(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SageError::InvalidArgument(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let prepared = |map: &SaliencyMap, mass: f32| -> Result<PreparedSaliency> {
        let normalized = l1_normalize(&gaussian_smooth(map, sigma2)?);
        let data = normalized
            .as_slice()
            .iter()
            .map(|&v| (v as f64 * mass as f64) as f32)
            .collect();
        PreparedSaliency::new(map.side(), data, mass)
    };
    Ok((prepared(s0, lambda)?, prepared(s1, 1.0 - lambda)?))
}
