//! `sage viz`: inspection grid for one augmentation.
//!
//! Layout, with `cell = side * scale` and 2 px padding between cells:
//!   row 0: input A, input B, saliency A, saliency B
//!   row 1: mixing mask, mixed output, fused saliency, input B shifted by the
//!          chosen offset
//!   row 2: candidate rearrangements of input B, one per scored offset shown
//! Canvas width is `pad + cols * (cell + pad)` with `cols = max(4, strip)`,
//! height is `pad + 3 * (cell + pad)`. The JSON sidecar lists every scored
//! candidate with its total saliency v, in sampling order, or in descending
//! v order under `--sort`.

use std::path::PathBuf;

use clap::Args;
use image::{Rgb, RgbImage};
use serde::Serialize;

use sage_core::mixer::sage_augment;
use sage_core::rearrange::{evaluate_candidates, mixing_mask_at, ScoredOffset, Translate};
use sage_core::saliency::{prepare_pair, sample_lambda};
use sage_core::types::one_hot;
use sage_core::SeededRng;

use crate::error::{at_path, CliError, Result};
use crate::png_io;
use crate::setup;

const PAD: u32 = 2;
const BACKGROUND: Rgb<u8> = Rgb([18, 18, 18]);

#[derive(Debug, Args)]
pub struct VizArgs {
    /// First input image (PNG).
    #[arg(long)]
    pub image_a: PathBuf,
    /// Second input image (PNG), same size as the first.
    #[arg(long)]
    pub image_b: PathBuf,
    /// Saliency map of the first image (SALM).
    #[arg(long, requires = "saliency_b", conflicts_with = "saliency_source")]
    pub saliency_a: Option<PathBuf>,
    /// Saliency map of the second image (SALM).
    #[arg(long, requires = "saliency_a", conflicts_with = "saliency_source")]
    pub saliency_b: Option<PathBuf>,
    /// Compute saliency from a checkpoint instead: `model:PATH`.
    #[arg(long)]
    pub saliency_source: Option<String>,
    /// Hyperparameter file (JSON with the SageConfig keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed override; wins over the config file and SAGE_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Order candidates by descending v instead of sampling order.
    #[arg(long)]
    pub sort: bool,
    /// Maximum number of candidate panels in the strip row.
    #[arg(long, default_value_t = 8)]
    pub strip: usize,
    /// Pixel scale of each tensor pixel.
    #[arg(long, default_value_t = 4)]
    pub scale: usize,
    /// Output directory for grid.png and candidates.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TauJson {
    di: i32,
    dj: i32,
}

#[derive(Serialize)]
struct CandidateJson {
    tau: TauJson,
    v: f64,
}

#[derive(Serialize)]
struct VizReport {
    chosen: CandidateJson,
    lambda: f32,
    gamma: f32,
    sorted: bool,
    candidates: Vec<CandidateJson>,
}

fn candidate_json(c: &ScoredOffset) -> CandidateJson {
    CandidateJson {
        tau: TauJson {
            di: c.tau.di,
            dj: c.tau.dj,
        },
        v: c.value,
    }
}

pub fn run(args: VizArgs) -> Result<()> {
    if args.scale == 0 || args.strip == 0 {
        return Err(CliError::Usage("--scale and --strip must be at least 1".into()));
    }
    let config = setup::load_config(args.config.as_deref(), args.seed)?;
    let source = setup::saliency_source(
        args.saliency_a.clone(),
        args.saliency_b.clone(),
        args.saliency_source.as_deref(),
    )?;
    let x0 = png_io::read_image(&args.image_a)?;
    let x1 = png_io::read_image(&args.image_b)?;
    let (s0, s1) = setup::load_saliency_pair(&source, &x0, &x1)?;

    let y0 = one_hot(0, 2)?;
    let y1 = one_hot(1, 2)?;
    let mut rng = SeededRng::new(config.seed);
    let mut replay_rng = rng.clone();
    let sample = sage_augment(&x0, &y0, &x1, &y1, (&s0, &s1), &config, &mut rng)?;

    // Replay the pipeline's draws to recover every scored candidate.
    let lambda = sample_lambda(&mut replay_rng, config.u)?.lambda;
    let (p0, p1) = prepare_pair(&s0, &s1, lambda, config.sigma2)?;
    let mut candidates =
        evaluate_candidates(&p0, &p1, config.search_fraction, &mut replay_rng, config.zeta)?;
    let chosen = candidates
        .iter()
        .copied()
        .reduce(|best, next| {
            let wins =
                next.value > best.value || (next.value == best.value && next.tau < best.tau);
            if wins {
                next
            } else {
                best
            }
        })
        .expect("search budget is at least one");
    if chosen.tau != sample.offset {
        return Err(CliError::Run(format!(
            "internal disagreement between search and replay: {:?} vs {:?}",
            sample.offset, chosen.tau
        )));
    }
    if args.sort {
        candidates.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.tau.cmp(&b.tau)));
    }

    // Panels of the fixed rows.
    let side = x0.side();
    let shifted = p1.translate(sample.offset)?;
    let mask = mixing_mask_at(&p0, &shifted, config.zeta)?;
    let fused: Vec<f32> = p0
        .as_slice()
        .iter()
        .zip(shifted.as_slice())
        .zip(mask.as_slice())
        .map(|((&a, &b), &m)| m * a + (1.0 - m) * b)
        .collect();
    let x1_shifted = x1.translate(sample.offset)?;

    let top: Vec<RgbImage> = vec![
        png_io::to_rgb(&x0),
        png_io::to_rgb(&x1),
        png_io::heatmap(s0.as_slice(), side, true),
        png_io::heatmap(s1.as_slice(), side, true),
    ];
    let middle: Vec<RgbImage> = vec![
        png_io::heatmap(mask.as_slice(), side, false),
        png_io::to_rgb(&sample.image),
        png_io::heatmap(&fused, side, true),
        png_io::to_rgb(&x1_shifted),
    ];
    let strip: Vec<RgbImage> = candidates
        .iter()
        .take(args.strip)
        .map(|c| x1.translate(c.tau).map(|img| png_io::to_rgb(&img)))
        .collect::<sage_core::Result<_>>()?;

    let canvas = assemble(&[top, middle, strip], side, args.scale);
    std::fs::create_dir_all(&args.out).map_err(|e| at_path(&args.out, e))?;
    png_io::save_rgb(&args.out.join("grid.png"), &canvas)?;

    let report = VizReport {
        chosen: candidate_json(&chosen),
        lambda: sample.lambda,
        gamma: sample.gamma,
        sorted: args.sort,
        candidates: candidates.iter().map(candidate_json).collect(),
    };
    setup::emit(
        Some(&args.out.join("candidates.json")),
        &setup::to_json_line(&report)?,
    )
}

fn assemble(rows: &[Vec<RgbImage>], side: usize, scale: usize) -> RgbImage {
    let cell = (side * scale) as u32;
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0).max(4) as u32;
    let width = PAD + cols * (cell + PAD);
    let height = PAD + rows.len() as u32 * (cell + PAD);
    let mut canvas = RgbImage::from_pixel(width, height, BACKGROUND);
    for (row_idx, row) in rows.iter().enumerate() {
        for (col_idx, panel) in row.iter().enumerate() {
            let ox = PAD + col_idx as u32 * (cell + PAD);
            let oy = PAD + row_idx as u32 * (cell + PAD);
            blit(&mut canvas, panel, ox, oy, scale as u32);
        }
    }
    canvas
}

fn blit(canvas: &mut RgbImage, panel: &RgbImage, ox: u32, oy: u32, scale: u32) {
    for (px, py, &pixel) in panel.enumerate_pixels() {
        for dy in 0..scale {
            for dx in 0..scale {
                canvas.put_pixel(ox + px * scale + dx, oy + py * scale + dy, pixel);
            }
        }
    }
}
