//! Seeded toy dataset: class = quadrant + color.
//!
//! Each image is a textured background plus one Gaussian color blob. The
//! class index selects both the quadrant the blob lives in and its palette
//! color, so the class evidence is spatially localized: gradient saliency has
//! something to find, and translating an image moves its evidence around.
//!
//! The background also carries weaker distractor blobs in the same palette at
//! random positions. They make the raw amount of a color uninformative, so a
//! classifier has to find the dominant blob rather than pool color evidence
//! over the whole image.

use rand::Rng;

use crate::error::{Result, SageError};
use crate::rng::SeededRng;
use crate::types::{one_hot, ImageTensor, SoftLabel, MIN_SIDE};

/// One RGB triple per class, chosen for pairwise contrast.
const PALETTE: [[f32; 3]; 8] = [
    [1.0, 0.15, 0.15],
    [0.15, 1.0, 0.15],
    [0.2, 0.35, 1.0],
    [0.95, 0.95, 0.1],
    [0.9, 0.2, 0.9],
    [0.1, 0.9, 0.9],
    [0.95, 0.6, 0.1],
    [0.9, 0.9, 0.9],
];

/// Generator parameters for [`generate`].
#[derive(Debug, Clone)]
pub struct ToyDatasetSpec {
    pub side: usize,
    pub classes: usize,
    pub samples: usize,
    /// Peak blob intensity added on top of the background.
    pub blob_amp: f32,
    /// Gaussian radius of the blob, in pixels.
    pub blob_sigma: f32,
    /// Amplitude of the uniform per-entry background noise.
    pub noise: f32,
    /// Amplitude of the sinusoidal background texture.
    pub texture_amp: f32,
    /// Number of distractor blobs scattered over the background. Each one
    /// borrows a random class color and lands anywhere in the image, so the
    /// mere presence of a color carries no label information; only the
    /// full-strength blob in its home quadrant does.
    pub distractors: usize,
    /// Peak intensity of each distractor blob; keep below `blob_amp` so the
    /// class blob stays the dominant feature.
    pub distractor_amp: f32,
}

impl Default for ToyDatasetSpec {
    fn default() -> Self {
        Self {
            side: 16,
            classes: 4,
            samples: 2000,
            blob_amp: 0.75,
            blob_sigma: 1.6,
            noise: 0.25,
            texture_amp: 0.10,
            distractors: 6,
            distractor_amp: 0.30,
        }
    }
}

/// A labeled image set, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct ToyDataset {
    side: usize,
    classes: usize,
    images: Vec<ImageTensor>,
    labels: Vec<usize>,
}

impl ToyDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn image(&self, i: usize) -> &ImageTensor {
        &self.images[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn one_hot_label(&self, i: usize) -> SoftLabel {
        one_hot(self.labels[i], self.classes).expect("labels are validated at generation")
    }
}

/// Generates `spec.samples` images with round-robin labels (`i % classes`),
/// each drawn from stream `i` of `seed`.
pub fn generate(spec: &ToyDatasetSpec, seed: u64) -> Result<ToyDataset> {
    if spec.side < MIN_SIDE.max(4) {
        return Err(SageError::InvalidArgument(format!(
            "dataset side must be at least 4, got {}",
            spec.side
        )));
    }
    if !(2..=PALETTE.len()).contains(&spec.classes) {
        return Err(SageError::InvalidArgument(format!(
            "classes must lie in [2, {}], got {}",
            PALETTE.len(),
            spec.classes
        )));
    }
    if spec.samples == 0 {
        return Err(SageError::InvalidArgument("samples must be > 0".into()));
    }
    for (name, v) in [
        ("blob_amp", spec.blob_amp),
        ("blob_sigma", spec.blob_sigma),
        ("noise", spec.noise),
        ("texture_amp", spec.texture_amp),
        ("distractor_amp", spec.distractor_amp),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(SageError::InvalidArgument(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }

    let mut images = Vec::with_capacity(spec.samples);
    let mut labels = Vec::with_capacity(spec.samples);
    for i in 0..spec.samples {
        let class = i % spec.classes;
        let mut rng = SeededRng::split(seed, i as u64);
        images.push(render(spec, class, &mut rng));
        labels.push(class);
    }
    Ok(ToyDataset {
        side: spec.side,
        classes: spec.classes,
        images,
        labels,
    })
}

fn render(spec: &ToyDatasetSpec, class: usize, rng: &mut SeededRng) -> ImageTensor {
    let d = spec.side as f64;
    let half = d / 2.0;
    let quadrant = class % 4;
    let (qr, qc) = ((quadrant / 2) as f64, (quadrant % 2) as f64);

    // Blob center jitters inside its quadrant, kept away from the edges so
    // the blob stays mostly within its quadrant.
    let margin = (spec.blob_sigma as f64).min(half / 2.0);
    let span = (half - 2.0 * margin).max(0.0);
    let center_r = qr * half + margin + rng.random::<f64>() * span;
    let center_c = qc * half + margin + rng.random::<f64>() * span;

    let fx = rng.random_range(1..=3) as f64;
    let fy = rng.random_range(1..=3) as f64;
    let phases: [f64; 3] = [
        rng.random::<f64>() * std::f64::consts::TAU,
        rng.random::<f64>() * std::f64::consts::TAU,
        rng.random::<f64>() * std::f64::consts::TAU,
    ];
    // Distractors reuse the active class colors at random positions so color
    // presence alone never identifies the class.
    let clutter: Vec<([f32; 3], f64, f64)> = (0..spec.distractors)
        .map(|_| {
            let color = PALETTE[rng.random_range(0..spec.classes)];
            let cr = rng.random::<f64>() * (d - 1.0);
            let cc = rng.random::<f64>() * (d - 1.0);
            (color, cr, cc)
        })
        .collect();
    let color = PALETTE[class % PALETTE.len()];
    let two_sigma2 = 2.0 * (spec.blob_sigma as f64).powi(2);

    let mut data = Vec::with_capacity(spec.side * spec.side * 3);
    for r in 0..spec.side {
        for c in 0..spec.side {
            let dist2 = (r as f64 - center_r).powi(2) + (c as f64 - center_c).powi(2);
            let blob = (-dist2 / two_sigma2).exp();
            let wave = std::f64::consts::TAU * (fx * r as f64 + fy * c as f64) / d;
            for ch in 0..3 {
                let texture = spec.texture_amp as f64 * (wave + phases[ch]).sin();
                let noise = spec.noise as f64 * (2.0 * rng.random::<f64>() - 1.0);
                let mut value = 0.35
                    + texture
                    + spec.blob_amp as f64 * color[ch] as f64 * blob
                    + noise;
                for (dcolor, cr, cc) in &clutter {
                    let ddist2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                    value += spec.distractor_amp as f64
                        * dcolor[ch] as f64
                        * (-ddist2 / two_sigma2).exp();
                }
                data.push(value.clamp(0.0, 1.0) as f32);
            }
        }
    }
    ImageTensor::from_vec_unchecked(spec.side, data)
}
