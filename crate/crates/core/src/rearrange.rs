//! Translation, total saliency, and the offset search.
//!
//! A candidate rearrangement translates the second saliency map by an integer
//! offset with zero padding, builds the mixing mask, and scores the blend by
//! the total saliency it retains. The search maximizes that score over a
//! uniform subsample of the `(2d-1)^2` offset grid; ties break toward the
//! lexicographically smallest offset so sequential and parallel evaluation
//! agree bit for bit.

use rand::seq::index::sample as sample_indices;

use crate::error::{Result, SageError};
use crate::rng::SeededRng;
use crate::types::{ImageTensor, MixingMask, Offset, PreparedSaliency, SaliencyMap, CHANNELS};

fn shift_into(src: &[f32], side: usize, channels: usize, tau: Offset, dst: &mut [f32]) {
    let n = side as i64;
    for i in 0..n {
        let si = i - tau.di as i64;
        if !(0..n).contains(&si) {
            continue;
        }
        for j in 0..n {
            let sj = j - tau.dj as i64;
            if !(0..n).contains(&sj) {
                continue;
            }
            let to = ((i * n + j) as usize) * channels;
            let from = ((si * n + sj) as usize) * channels;
            dst[to..to + channels].copy_from_slice(&src[from..from + channels]);
        }
    }
}

/// Integer translation with zero padding: entry `(i, j)` of the output reads
/// `(i - tau_i, j - tau_j)` of the input, or zero outside the grid.
pub trait Translate: Sized {
    fn translate(&self, tau: Offset) -> Result<Self>;
}

impl Translate for SaliencyMap {
    fn translate(&self, tau: Offset) -> Result<Self> {
        tau.check(self.side())?;
        let mut data = vec![0.0f32; self.side() * self.side()];
        shift_into(self.as_slice(), self.side(), 1, tau, &mut data);
        Ok(SaliencyMap::from_vec_unchecked(self.side(), data))
    }
}

impl Translate for ImageTensor {
    fn translate(&self, tau: Offset) -> Result<Self> {
        tau.check(self.side())?;
        let mut data = vec![0.0f32; self.side() * self.side() * CHANNELS];
        shift_into(self.as_slice(), self.side(), CHANNELS, tau, &mut data);
        Ok(ImageTensor::from_vec_unchecked(self.side(), data))
    }
}

impl Translate for PreparedSaliency {
    /// Translating can push mass off the grid, so the result's `mass` is the
    /// recomputed sum of the surviving entries.
    fn translate(&self, tau: Offset) -> Result<Self> {
        tau.check(self.side())?;
        let mut data = vec![0.0f32; self.side() * self.side()];
        shift_into(self.as_slice(), self.side(), 1, tau, &mut data);
        let mass: f64 = data.iter().map(|&v| v as f64).sum();
        PreparedSaliency::new(self.side(), data, (mass.min(1.0)) as f32)
    }
}

/// Mixing mask of a prepared pair whose second map is already translated:
/// `M[i,j] = s0[i,j] / (s0[i,j] + s1_shifted[i,j] + zeta)`.
pub fn mixing_mask_at(
    s0: &PreparedSaliency,
    s1_shifted: &PreparedSaliency,
    zeta: f32,
) -> Result<MixingMask> {
    check_pair(s0.side(), s1_shifted.side())?;
    check_zeta(zeta)?;
    let data = s0
        .as_slice()
        .iter()
        .zip(s1_shifted.as_slice())
        .map(|(&a, &b)| mask_entry(a, b, zeta))
        .collect();
    Ok(MixingMask::from_vec_unchecked(s0.side(), data))
}

fn mask_entry(a: f32, b: f32, zeta: f32) -> f32 {
    (a as f64 / (a as f64 + b as f64 + zeta as f64)) as f32
}

/// Total saliency retained when mixing at offset `tau`: the sum of
/// `M * s0 + (1 - M) * translate(s1, tau)` over the grid.
pub fn total_saliency(
    s0: &PreparedSaliency,
    s1: &PreparedSaliency,
    tau: Offset,
    zeta: f32,
) -> Result<f32> {
    check_pair(s0.side(), s1.side())?;
    check_zeta(zeta)?;
    tau.check(s0.side())?;
    Ok(evaluate_offset(s0.as_slice(), s1.as_slice(), s0.side(), tau, zeta) as f32)
}

/// Fused per-offset objective: walks destination pixels once, reading the
/// translated second map by index arithmetic instead of materializing it.
fn evaluate_offset(s0: &[f32], s1: &[f32], side: usize, tau: Offset, zeta: f32) -> f64 {
    let n = side as i64;
    let z = zeta as f64;
    let mut acc = 0.0f64;
    for i in 0..n {
        let si = i - tau.di as i64;
        let row_in = (0..n).contains(&si);
        for j in 0..n {
            let a = s0[(i * n + j) as usize] as f64;
            let sj = j - tau.dj as i64;
            let b = if row_in && (0..n).contains(&sj) {
                s1[(si * n + sj) as usize] as f64
            } else {
                0.0
            };
            let m = a / (a + b + z);
            acc += m * a + (1.0 - m) * b;
        }
    }
    acc
}

/// The full offset grid `{-(d-1), ..., d-1}^2` in row-major order of
/// `(tau_i, tau_j)`. Callers guarantee `side >= 2`.
pub fn offset_space(side: usize) -> Vec<Offset> {
    debug_assert!(side >= 2);
    let max = side as i32 - 1;
    let mut out = Vec::with_capacity((2 * side - 1) * (2 * side - 1));
    for di in -max..=max {
        for dj in -max..=max {
            out.push(Offset::new(di, dj));
        }
    }
    out
}

/// Number of candidates a search at this fraction scores:
/// `ceil(fraction * (2 * side - 1)^2)`.
pub fn search_budget(side: usize, fraction: f32) -> usize {
    let n = (2 * side - 1) * (2 * side - 1);
    let k = (fraction as f64 * n as f64).ceil() as usize;
    k.clamp(1, n)
}

fn offset_from_index(index: usize, side: usize) -> Offset {
    let width = 2 * side - 1;
    let max = side as i32 - 1;
    Offset::new(
        (index / width) as i32 - max,
        (index % width) as i32 - max,
    )
}

struct Candidate {
    tau: Offset,
    value: f64,
}

/// `true` when `next` should replace `best`: larger value, or an equal value
/// at a lexicographically smaller offset.
fn improves(next: &Candidate, best: &Candidate) -> bool {
    next.value > best.value || (next.value == best.value && next.tau < best.tau)
}

fn check_search_args(
    s0: &PreparedSaliency,
    s1: &PreparedSaliency,
    fraction: f32,
    zeta: f32,
) -> Result<()> {
    check_pair(s0.side(), s1.side())?;
    check_zeta(zeta)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SageError::InvalidArgument(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    Ok(())
}

fn sample_candidates(
    side: usize,
    fraction: f32,
    rng: &mut SeededRng,
) -> Vec<usize> {
    let n = (2 * side - 1) * (2 * side - 1);
    let k = search_budget(side, fraction);
    sample_indices(rng, n, k).into_vec()
}

/// Maximizes total saliency over a uniform sample of the offset grid.
///
/// Scores `ceil(fraction * (2d-1)^2)` offsets drawn without replacement (the
/// whole grid at fraction 1) and returns the best offset with its value. The
/// result is a pure function of the inputs, the fraction, the seed, and zeta.
pub fn search_offset(
    s0: &PreparedSaliency,
    s1: &PreparedSaliency,
    fraction: f32,
    rng: &mut SeededRng,
    zeta: f32,
) -> Result<(Offset, f32)> {
    check_search_args(s0, s1, fraction, zeta)?;
    let side = s0.side();
    let indices = sample_candidates(side, fraction, rng);
    let best = indices
        .iter()
        .map(|&idx| {
            let tau = offset_from_index(idx, side);
            Candidate {
                tau,
                value: evaluate_offset(s0.as_slice(), s1.as_slice(), side, tau, zeta),
            }
        })
        .fold(None::<Candidate>, |best, next| match best {
            Some(b) if !improves(&next, &b) => Some(b),
            _ => Some(next),
        })
        .expect("budget is at least one");
    Ok((best.tau, best.value as f32))
}

/// [`search_offset`] with candidate evaluation fanned out across worker
/// threads. The sample, the scores, and the tie-break are identical to the
/// sequential path, so both return the same offset and value for the same
/// seed. Without the `parallel` feature this simply calls [`search_offset`].
#[cfg(feature = "parallel")]
pub fn search_offset_parallel(
    s0: &PreparedSaliency,
    s1: &PreparedSaliency,
    fraction: f32,
    rng: &mut SeededRng,
    zeta: f32,
) -> Result<(Offset, f32)> {
    use rayon::prelude::*;

    check_search_args(s0, s1, fraction, zeta)?;
    let side = s0.side();
    let indices = sample_candidates(side, fraction, rng);
    let best = indices
        .par_iter()
        .map(|&idx| {
            let tau = offset_from_index(idx, side);
            Some(Candidate {
                tau,
                value: evaluate_offset(s0.as_slice(), s1.as_slice(), side, tau, zeta),
            })
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if improves(&y, &x) { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .expect("budget is at least one");
    Ok((best.tau, best.value as f32))
}

#[cfg(not(feature = "parallel"))]
pub fn search_offset_parallel(
    s0: &PreparedSaliency,
    s1: &PreparedSaliency,
    fraction: f32,
    rng: &mut SeededRng,
    zeta: f32,
) -> Result<(Offset, f32)> {
    search_offset(s0, s1, fraction, rng, zeta)
}

/// One scored candidate of the offset search. The value is kept in f64, the
/// search's own comparison precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredOffset {
    pub tau: Offset,
    pub value: f64,
}

/// The full candidate list a [`search_offset`] call with the same rng state
/// would score, in sampling order.
///
/// Folding the list with the search's tie-break (larger value, then smaller
/// offset) reproduces the search result exactly; callers can use it to
/// inspect or display the scored rearrangements.
pub fn evaluate_candidates(
    s0: &PreparedSaliency,
    s1: &PreparedSaliency,
    fraction: f32,
    rng: &mut SeededRng,
    zeta: f32,
) -> Result<Vec<ScoredOffset>> {
    check_search_args(s0, s1, fraction, zeta)?;
    let side = s0.side();
    Ok(sample_candidates(side, fraction, rng)
        .into_iter()
        .map(|idx| {
            let tau = offset_from_index(idx, side);
            ScoredOffset {
                tau,
                value: evaluate_offset(s0.as_slice(), s1.as_slice(), side, tau, zeta),
            }
        })
        .collect())
}

fn check_pair(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(SageError::DimensionMismatch {
            context: "prepared pair sides",
            left,
            right,
        });
    }
    Ok(())
}

fn check_zeta(zeta: f32) -> Result<()> {
    if !zeta.is_finite() || zeta <= 0.0 {
        return Err(SageError::InvalidArgument(format!(
            "zeta must be finite and > 0, got {zeta}"
        )));
    }
    Ok(())
}
