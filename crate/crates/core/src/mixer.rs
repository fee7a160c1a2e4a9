//! Assembling augmented samples.
//!
//! [`sage_augment`] runs the full pipeline on one image pair: draw the mixing
//! coefficient, prepare the saliency pair, search for the best offset, build
//! the mask, blend images, and mix labels by the mask mean. [`input_mixup`]
//! and [`cutmix`] are the constant-ratio and patch-paste baselines used for
//! comparison experiments.

use rand::Rng;

use crate::error::{Result, SageError};
use crate::rearrange::{mixing_mask_at, search_offset, Translate};
use crate::rng::SeededRng;
use crate::saliency::{prepare_pair, sample_lambda};
use crate::types::{
    mask_mean, AugmentedSample, ImageTensor, MixingMask, Offset, SageConfig, SaliencyMap,
    SoftLabel,
};

/// Per-pixel, per-channel convex blend: `M * x0 + (1 - M) * x1_shifted`.
pub fn mix_images(
    x0: &ImageTensor,
    x1_shifted: &ImageTensor,
    mask: &MixingMask,
) -> Result<ImageTensor> {
    if x0.side() != x1_shifted.side() || x0.side() != mask.side() {
        return Err(SageError::DimensionMismatch {
            context: "mix_images sides",
            left: x0.side(),
            right: x1_shifted.side().max(mask.side()),
        });
    }
    let side = x0.side();
    let mut data = Vec::with_capacity(x0.as_slice().len());
    for (idx, (&a, &b)) in x0.as_slice().iter().zip(x1_shifted.as_slice()).enumerate() {
        let m = mask.as_slice()[idx / crate::types::CHANNELS];
        data.push((m * a + (1.0 - m) * b).clamp(0.0, 1.0));
    }
    Ok(ImageTensor::from_vec_unchecked(side, data))
}

/// Convex label blend `gamma * y0 + (1 - gamma) * y1`.
pub fn mix_labels(y0: &SoftLabel, y1: &SoftLabel, gamma: f32) -> Result<SoftLabel> {
    if y0.classes() != y1.classes() {
        return Err(SageError::DimensionMismatch {
            context: "mix_labels classes",
            left: y0.classes(),
            right: y1.classes(),
        });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(SageError::InvalidArgument(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let probs = y0
        .as_slice()
        .iter()
        .zip(y1.as_slice())
        .map(|(&a, &b)| gamma * a + (1.0 - gamma) * b)
        .collect();
    SoftLabel::new(probs)
}

/// The full saliency-guided augmentation of one pair.
///
/// Randomness is consumed in a fixed order: first the mixing coefficient,
/// then the offset sample of the search. Identical inputs, config, and rng
/// state therefore produce a bit-identical sample.
pub fn sage_augment(
    x0: &ImageTensor,
    y0: &SoftLabel,
    x1: &ImageTensor,
    y1: &SoftLabel,
    saliency: (&SaliencyMap, &SaliencyMap),
    config: &SageConfig,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    config.validate()?;
    let (s0, s1) = saliency;
    let sides_ok = x0.side() == x1.side() && x0.side() == s0.side() && x0.side() == s1.side();
    if !sides_ok {
        return Err(SageError::DimensionMismatch {
            context: "sage_augment sides",
            left: x0.side(),
            right: x1.side().max(s0.side()).max(s1.side()),
        });
    }

    let lambda = sample_lambda(rng, config.u)?.lambda;
    let (p0, p1) = prepare_pair(s0, s1, lambda, config.sigma2)?;
    let (tau, value) = search_offset(&p0, &p1, config.search_fraction, rng, config.zeta)?;
    let p1_shifted = p1.translate(tau)?;
    let mask = mixing_mask_at(&p0, &p1_shifted, config.zeta)?;
    let gamma = mask_mean(&mask);
    let image = mix_images(x0, &x1.translate(tau)?, &mask)?;
    let label = mix_labels(y0, y1, gamma)?;

    Ok(AugmentedSample {
        image,
        label,
        offset: tau,
        gamma,
        lambda,
        total_saliency: value,
    })
}

/// Constant-ratio blend of images and labels with coefficient `lambda`.
pub fn input_mixup(
    x0: &ImageTensor,
    y0: &SoftLabel,
    x1: &ImageTensor,
    y1: &SoftLabel,
    lambda: f32,
) -> Result<AugmentedSample> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SageError::InvalidArgument(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let mask = MixingMask::from_vec_unchecked(x0.side(), vec![lambda; x0.side() * x0.side()]);
    let image = mix_images(x0, x1, &mask)?;
    let label = mix_labels(y0, y1, lambda)?;
    Ok(AugmentedSample {
        image,
        label,
        offset: Offset::new(0, 0),
        gamma: lambda,
        lambda,
        total_saliency: 0.0,
    })
}

/// Pastes a random box of `x1` into `x0`.
///
/// The box side is `round(d * sqrt(1 - lambda))`, centered at a uniform
/// pixel (row drawn before column) and clipped at the borders; the label
/// weight is `1 - clipped_area / d^2`.
pub fn cutmix(
    x0: &ImageTensor,
    y0: &SoftLabel,
    x1: &ImageTensor,
    y1: &SoftLabel,
    lambda: f32,
    rng: &mut SeededRng,
) -> Result<AugmentedSample> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SageError::InvalidArgument(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if x0.side() != x1.side() {
        return Err(SageError::DimensionMismatch {
            context: "cutmix sides",
            left: x0.side(),
            right: x1.side(),
        });
    }
    let d = x0.side();
    let len = ((d as f64) * (1.0 - lambda as f64).sqrt()).round() as i64;
    let ci = rng.random_range(0..d) as i64;
    let cj = rng.random_range(0..d) as i64;
    let clip = |lo: i64| (lo.max(0) as usize, (lo + len).clamp(0, d as i64) as usize);
    let (i0, i1) = clip(ci - len / 2);
    let (j0, j1) = clip(cj - len / 2);
    let (i0, j0) = (i0.min(i1), j0.min(j1));

    let mut data = x0.as_slice().to_vec();
    for r in i0..i1 {
        for c in j0..j1 {
            let at = (r * d + c) * crate::types::CHANNELS;
            data[at..at + crate::types::CHANNELS]
                .copy_from_slice(&x1.as_slice()[at..at + crate::types::CHANNELS]);
        }
    }
    let area = (i1 - i0) * (j1 - j0);
    let gamma = 1.0 - area as f32 / (d * d) as f32;
    let label = mix_labels(y0, y1, gamma)?;
    Ok(AugmentedSample {
        image: ImageTensor::from_vec_unchecked(d, data),
        label,
        offset: Offset::new(0, 0),
        gamma,
        lambda,
        total_saliency: 0.0,
    })
}
