//! Domain types for the augmentation pipeline.
//!
//! Images and per-pixel planes are square `d x d` grids stored row-major;
//! image channels are interleaved, so entry `(r, c, ch)` lives at
//! `(r * d + c) * 3 + ch`. Constructors validate the type invariants and
//! return [`SageError`] on violation, so a value of one of these types is
//! always well formed.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SageError};

/// Number of color channels in an [`ImageTensor`].
pub const CHANNELS: usize = 3;

/// Smallest supported grid side.
pub const MIN_SIDE: usize = 2;

fn check_side(side: usize) -> Result<()> {
    if side < MIN_SIDE {
        return Err(SageError::InvalidArgument(format!(
            "side {side} is below the minimum of {MIN_SIDE}"
        )));
    }
    Ok(())
}

fn check_plane_len(context: &'static str, side: usize, len: usize) -> Result<()> {
    if len != side * side {
        return Err(SageError::DimensionMismatch {
            context,
            left: side * side,
            right: len,
        });
    }
    Ok(())
}

/// A square RGB image with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    side: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    /// Builds an image from raw row-major interleaved data, validating shape
    /// and value range.
    pub fn new(side: usize, data: Vec<f32>) -> Result<Self> {
        check_side(side)?;
        if data.len() != side * side * CHANNELS {
            return Err(SageError::DimensionMismatch {
                context: "image data length",
                left: side * side * CHANNELS,
                right: data.len(),
            });
        }
        for (idx, &value) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                let (row, rest) = (idx / (side * CHANNELS), idx % (side * CHANNELS));
                return Err(SageError::ValueOutOfRange {
                    row,
                    col: rest / CHANNELS,
                    channel: rest % CHANNELS,
                    value,
                });
            }
        }
        Ok(Self { side, data })
    }

    /// Image with every entry set to `value`.
    pub fn filled(side: usize, value: f32) -> Result<Self> {
        Self::new(side, vec![value; side * side * CHANNELS])
    }

    /// Builds an image by evaluating `f(row, col, channel)`.
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side * CHANNELS);
        for r in 0..side {
            for c in 0..side {
                for ch in 0..CHANNELS {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(side, data)
    }

    pub(crate) fn from_vec_unchecked(side: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), side * side * CHANNELS);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.side + col) * CHANNELS + channel]
    }

    /// Row-major interleaved entries, also the flattening fed to the model.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Validates raw image data: square, three channels, entries in `[0, 1]`.
pub fn validate_image(
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
) -> Result<ImageTensor> {
    if height != width {
        return Err(SageError::NotSquare { height, width });
    }
    if channels != CHANNELS {
        return Err(SageError::ChannelCount {
            expected: CHANNELS,
            got: channels,
        });
    }
    ImageTensor::new(height, data)
}

/// A non-negative per-pixel saliency plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    side: usize,
    data: Vec<f32>,
}

impl SaliencyMap {
    pub fn new(side: usize, data: Vec<f32>) -> Result<Self> {
        check_side(side)?;
        check_plane_len("saliency data length", side, data.len())?;
        if let Some(&bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SageError::InvalidArgument(format!(
                "saliency entries must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self { side, data })
    }

    pub fn zeros(side: usize) -> Result<Self> {
        Self::new(side, vec![0.0; side * side])
    }

    pub(crate) fn from_vec_unchecked(side: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), side * side);
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.side + col]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// A saliency plane after smoothing, normalization, and mass scaling.
///
/// `mass` records the intended total: the entries sum to it within rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSaliency {
    side: usize,
    data: Vec<f32>,
    mass: f32,
}

impl PreparedSaliency {
    pub fn new(side: usize, data: Vec<f32>, mass: f32) -> Result<Self> {
        check_side(side)?;
        check_plane_len("prepared saliency data length", side, data.len())?;
        if !(0.0..=1.0).contains(&mass) {
            return Err(SageError::InvalidArgument(format!(
                "mass {mass} is outside [0, 1]"
            )));
        }
        if let Some(&bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SageError::InvalidArgument(format!(
                "prepared saliency entries must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self { side, data, mass })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Intended sum of the entries.
    pub fn mass(&self) -> f32 {
        self.mass
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.side + col]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// A per-pixel blending mask with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMask {
    side: usize,
    data: Vec<f32>,
}

impl MixingMask {
    pub fn new(side: usize, data: Vec<f32>) -> Result<Self> {
        check_side(side)?;
        check_plane_len("mask data length", side, data.len())?;
        if let Some(&bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SageError::InvalidArgument(format!(
                "mask entries must lie in [0, 1], got {bad}"
            )));
        }
        Ok(Self { side, data })
    }

    pub(crate) fn from_vec_unchecked(side: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), side * side);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.side + col]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Mean of all `d * d` mask entries, including any zero regions.
pub fn mask_mean(mask: &MixingMask) -> f32 {
    let sum: f64 = mask.as_slice().iter().map(|&v| v as f64).sum();
    (sum / (mask.side() * mask.side()) as f64) as f32
}

/// A probability vector over classes: non-negative, sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    probs: Vec<f32>,
}

impl SoftLabel {
    pub fn new(probs: Vec<f32>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(SageError::InvalidArgument(format!(
                "label needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some(&bad) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SageError::InvalidArgument(format!(
                "label entries must be finite and non-negative, got {bad}"
            )));
        }
        let sum: f64 = probs.iter().map(|&v| v as f64).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(SageError::InvalidArgument(format!(
                "label entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f32>) -> Self {
        Self { probs }
    }

    pub fn classes(&self) -> usize {
        self.probs.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.probs
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// One-hot label for `class` out of `classes`.
pub fn one_hot(class: usize, classes: usize) -> Result<SoftLabel> {
    if classes < 2 {
        return Err(SageError::InvalidArgument(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if class >= classes {
        return Err(SageError::InvalidArgument(format!(
            "class {class} is out of range for {classes} classes"
        )));
    }
    let mut probs = vec![0.0; classes];
    probs[class] = 1.0;
    Ok(SoftLabel::from_vec_unchecked(probs))
}

/// An integer translation `(di, dj)` applied to the second image of a pair.
///
/// Positive `di` shifts content down, positive `dj` shifts it right. The
/// derived ordering is lexicographic on `(di, dj)`, which is the tie-break
/// order of the offset search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Offset {
    pub di: i32,
    pub dj: i32,
}

impl Offset {
    pub fn new(di: i32, dj: i32) -> Self {
        Self { di, dj }
    }

    /// Whether both components lie in `[-(side - 1), side - 1]`.
    pub fn in_range(self, side: usize) -> bool {
        let max = side as i32 - 1;
        self.di.abs() <= max && self.dj.abs() <= max
    }

    pub(crate) fn check(self, side: usize) -> Result<()> {
        if self.in_range(side) {
            Ok(())
        } else {
            Err(SageError::OffsetOutOfRange {
                di: self.di,
                dj: self.dj,
                side,
            })
        }
    }
}

/// Output of one augmentation: the mixed image and label plus the quantities
/// that produced them.
#[derive(Debug, Clone)]
pub struct AugmentedSample {
    pub image: ImageTensor,
    pub label: SoftLabel,
    /// Offset applied to the second image; `(0, 0)` for baselines that do not
    /// translate.
    pub offset: Offset,
    /// Label weight of the first input, the mask mean for mask-based mixing.
    pub gamma: f32,
    /// Mixing coefficient drawn for this sample.
    pub lambda: f32,
    /// Objective value of the chosen offset; zero for baselines.
    pub total_saliency: f32,
}

fn default_sigma2() -> f32 {
    1.0
}

fn default_zeta() -> f32 {
    1e-8
}

fn default_u() -> f32 {
    0.6
}

fn default_eta() -> f32 {
    0.7
}

fn default_search_fraction() -> f32 {
    0.01
}

fn default_seed() -> u64 {
    0
}

/// Hyperparameters of the augmentation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SageConfig {
    /// Variance of the Gaussian smoothing kernel.
    #[serde(default = "default_sigma2")]
    pub sigma2: f32,
    /// Stabilizer added to the mask denominator.
    #[serde(default = "default_zeta")]
    pub zeta: f32,
    /// Upper bound of the uniform mixing coefficient.
    #[serde(default = "default_u")]
    pub u: f32,
    /// Weight of the saliency-pass gradient in the combined update.
    #[serde(default = "default_eta")]
    pub eta: f32,
    /// Fraction of the offset space scored by the search.
    #[serde(default = "default_search_fraction")]
    pub search_fraction: f32,
    /// Seed for every random choice the pipeline makes.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SageConfig {
    fn default() -> Self {
        Self {
            sigma2: default_sigma2(),
            zeta: default_zeta(),
            u: default_u(),
            eta: default_eta(),
            search_fraction: default_search_fraction(),
            seed: default_seed(),
        }
    }
}

impl SageConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return Err(SageError::InvalidArgument(format!(
                "sigma2 must be finite and >= 0, got {}",
                self.sigma2
            )));
        }
        if !self.zeta.is_finite() || self.zeta <= 0.0 {
            return Err(SageError::InvalidArgument(format!(
                "zeta must be finite and > 0, got {}",
                self.zeta
            )));
        }
        if !(0.0..=1.0).contains(&self.u) {
            return Err(SageError::InvalidArgument(format!(
                "u must lie in [0, 1], got {}",
                self.u
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(SageError::InvalidArgument(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if !(self.search_fraction > 0.0 && self.search_fraction <= 1.0) {
            return Err(SageError::InvalidArgument(format!(
                "search_fraction must lie in (0, 1], got {}",
                self.search_fraction
            )));
        }
        Ok(())
    }
}
