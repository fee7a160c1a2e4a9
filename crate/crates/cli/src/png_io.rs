//! PNG ingestion and emission.
//!
//! Channel bytes map to reals by `v / 255` on the way in and `round(v * 255)`
//! on the way out, so an 8-bit round-trip reproduces every byte exactly.

use std::path::Path;

use image::{ImageFormat, RgbImage};

use sage_core::types::ImageTensor;

use crate::error::{at_path, CliError, Result};

/// Decodes a PNG into the engine's square RGB tensor.
pub fn read_image(path: &Path) -> Result<ImageTensor> {
    let decoded = image::open(path).map_err(|e| at_path(path, e))?;
    let rgb = decoded.to_rgb8();
    let (width, height) = rgb.dimensions();
    if width != height {
        return Err(CliError::Run(format!(
            "{}: image must be square, got {width}x{height}",
            path.display()
        )));
    }
    let data = rgb.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
    ImageTensor::new(width as usize, data).map_err(CliError::from)
}

/// Encodes a tensor as an 8-bit RGB PNG.
pub fn write_image(path: &Path, image: &ImageTensor) -> Result<()> {
    save_rgb(path, &to_rgb(image))
}

/// Writes any RGB byte canvas, square or not (used for the viz grid).
pub fn save_rgb(path: &Path, canvas: &RgbImage) -> Result<()> {
    canvas
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| at_path(path, e))
}

/// Converts a tensor to its byte image.
pub fn to_rgb(image: &ImageTensor) -> RgbImage {
    let side = image.side() as u32;
    let bytes = image
        .as_slice()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    RgbImage::from_raw(side, side, bytes).expect("tensor layout matches RGB8")
}

/// Color stops of the heatmap, dark to bright.
const STOPS: [[f32; 3]; 5] = [
    [0.0, 0.0, 0.015],
    [0.28, 0.05, 0.47],
    [0.80, 0.22, 0.31],
    [0.97, 0.58, 0.11],
    [0.99, 1.0, 0.65],
];

/// Renders scalar values as a false-color byte image.
///
/// With `normalize` the values are first divided by their maximum (when it is
/// positive), which suits saliency maps; masks should pass `false` to keep
/// the absolute `[0, 1]` scale.
pub fn heatmap(values: &[f32], side: usize, normalize: bool) -> RgbImage {
    let scale = if normalize {
        let max = values.iter().fold(0.0f32, |a, &b| a.max(b));
        if max > 0.0 {
            1.0 / max
        } else {
            1.0
        }
    } else {
        1.0
    };
    let bytes = values
        .iter()
        .flat_map(|&v| {
            let color = colormap((v * scale).clamp(0.0, 1.0));
            color.map(|c| (c * 255.0).round() as u8)
        })
        .collect();
    RgbImage::from_raw(side as u32, side as u32, bytes).expect("values form a square")
}

fn colormap(t: f32) -> [f32; 3] {
    let pos = t * (STOPS.len() - 1) as f32;
    let lo = (pos.floor() as usize).min(STOPS.len() - 2);
    let frac = pos - lo as f32;
    let mut out = [0.0f32; 3];
    for ch in 0..3 {
        out[ch] = STOPS[lo][ch] + frac * (STOPS[lo + 1][ch] - STOPS[lo][ch]);
    }
    out
}
