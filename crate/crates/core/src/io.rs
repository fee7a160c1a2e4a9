//! Binary file formats for saliency maps and model checkpoints.
//!
//! Saliency files: magic `SALM`, two little-endian u32 (height, width), then
//! `height * width` little-endian IEEE-754 f32 values, row-major.
//!
//! Checkpoints: magic `SGMD`, three little-endian u32 (side, hidden, classes),
//! then the parameters as little-endian f32 in fixed order: `w1` row-major,
//! `b1`, `w2` row-major, `b2`.
//!
//! Both formats round-trip bit-exactly: write, read, write yields identical
//! bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Result, SageError};
use crate::model::ClassifierState;
use crate::types::{MixingMask, SaliencyMap};

pub const SALM_MAGIC: [u8; 4] = *b"SALM";
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SGMD";

fn format_err(path: &Path, detail: impl Into<String>) -> SageError {
    SageError::Format {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| format_err(path, format!("truncated while reading {what}")))
}

fn read_u32(r: &mut impl Read, path: &Path, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path, what)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32s(r: &mut impl Read, count: usize, path: &Path, what: &str) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    read_exact(r, &mut bytes, path, what)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn expect_eof(r: &mut impl Read, path: &Path) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(format_err(path, "trailing bytes after expected end of file")),
    }
}

fn write_plane(w: &mut impl Write, side: usize, values: &[f32]) -> Result<()> {
    w.write_all(&SALM_MAGIC)?;
    w.write_all(&(side as u32).to_le_bytes())?;
    w.write_all(&(side as u32).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Writes a saliency map in SALM format.
pub fn save_salm(path: impl AsRef<Path>, map: &SaliencyMap) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    write_plane(&mut w, map.side(), map.as_slice())?;
    w.flush()?;
    Ok(())
}

/// Writes a mixing mask as a SALM plane (mask entries are valid map values).
pub fn save_mask_salm(path: impl AsRef<Path>, mask: &MixingMask) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    write_plane(&mut w, mask.side(), mask.as_slice())?;
    w.flush()?;
    Ok(())
}

/// Reads a SALM file into a saliency map, rejecting bad magic, non-square
/// shapes, truncation, trailing bytes, and invalid values.
pub fn load_salm(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, path, "magic bytes")?;
    if magic != SALM_MAGIC {
        return Err(format_err(path, "bad magic bytes, expected SALM"));
    }
    let height = read_u32(&mut r, path, "height")? as usize;
    let width = read_u32(&mut r, path, "width")? as usize;
    if height != width {
        return Err(format_err(
            path,
            format!("map is {height}x{width}, expected square"),
        ));
    }
    let values = read_f32s(&mut r, height * width, path, "map values")?;
    expect_eof(&mut r, path)?;
    SaliencyMap::new(height, values)
        .map_err(|e| format_err(path, format!("invalid map contents: {e}")))
}

/// Writes a model checkpoint in SGMD format.
pub fn save_checkpoint(path: impl AsRef<Path>, model: &ClassifierState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    w.write_all(&CHECKPOINT_MAGIC)?;
    for dim in [model.side(), model.hidden(), model.classes()] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    let planes: [&[f32]; 4] = [
        model.w1().to_slice().expect("weights are contiguous"),
        model.b1().to_slice().expect("biases are contiguous"),
        model.w2().to_slice().expect("weights are contiguous"),
        model.b2().to_slice().expect("biases are contiguous"),
    ];
    for plane in planes {
        for v in plane {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an SGMD checkpoint, validating magic, dimensions, length, and
/// parameter finiteness.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierState> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, path, "magic bytes")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(format_err(path, "bad magic bytes, expected SGMD"));
    }
    let side = read_u32(&mut r, path, "side")? as usize;
    let hidden = read_u32(&mut r, path, "hidden size")? as usize;
    let classes = read_u32(&mut r, path, "class count")? as usize;
    let input = side
        .checked_mul(side)
        .and_then(|v| v.checked_mul(3))
        .ok_or_else(|| format_err(path, "dimensions overflow"))?;

    let w1 = read_f32s(&mut r, hidden * input, path, "first-layer weights")?;
    let b1 = read_f32s(&mut r, hidden, path, "first-layer biases")?;
    let w2 = read_f32s(&mut r, classes * hidden, path, "second-layer weights")?;
    let b2 = read_f32s(&mut r, classes, path, "second-layer biases")?;
    expect_eof(&mut r, path)?;

    let w1 = Array2::from_shape_vec((hidden, input), w1)
        .map_err(|e| format_err(path, e.to_string()))?;
    let w2 = Array2::from_shape_vec((classes, hidden), w2)
        .map_err(|e| format_err(path, e.to_string()))?;
    ClassifierState::from_parts(side, hidden, classes, w1, Array1::from(b1), w2, Array1::from(b2))
        .map_err(|e| format_err(path, format!("invalid checkpoint contents: {e}")))
}
