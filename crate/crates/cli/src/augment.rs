//! `sage augment`: run the pipeline on one image pair.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use sage_core::io::save_mask_salm;
use sage_core::mixer::sage_augment;
use sage_core::rearrange::{mixing_mask_at, Translate};
use sage_core::saliency::prepare_pair;
use sage_core::types::{one_hot, Offset};
use sage_core::SeededRng;

use crate::error::{at_path, Result};
use crate::png_io;
use crate::setup;

#[derive(Debug, Args)]
pub struct AugmentArgs {
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
    /// Compute saliency from a checkpoint instead: `model:PATH`. The label
    /// for each image is the model's own argmax prediction.
    #[arg(long)]
    pub saliency_source: Option<String>,
    /// Hyperparameter file (JSON with the SageConfig keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed override; wins over the config file and SAGE_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for augmented.png, mask.salm, and augment.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TauJson {
    di: i32,
    dj: i32,
}

impl From<Offset> for TauJson {
    fn from(tau: Offset) -> Self {
        Self {
            di: tau.di,
            dj: tau.dj,
        }
    }
}

#[derive(Serialize)]
struct AugmentReport {
    tau: TauJson,
    gamma: f32,
    lambda: f32,
    total_saliency: f32,
}

pub fn run(args: AugmentArgs) -> Result<()> {
    let config = setup::load_config(args.config.as_deref(), args.seed)?;
    let source = setup::saliency_source(
        args.saliency_a.clone(),
        args.saliency_b.clone(),
        args.saliency_source.as_deref(),
    )?;

    let x0 = png_io::read_image(&args.image_a)?;
    let x1 = png_io::read_image(&args.image_b)?;
    let (s0, s1) = setup::load_saliency_pair(&source, &x0, &x1)?;

    // The pair carries no labels here; fixed one-hots make label mixing
    // well-defined and keep the metadata deterministic.
    let y0 = one_hot(0, 2)?;
    let y1 = one_hot(1, 2)?;

    let mut rng = SeededRng::new(config.seed);
    let sample = sage_augment(&x0, &y0, &x1, &y1, (&s0, &s1), &config, &mut rng)?;

    // Rebuild the mask the sample used; the pipeline's draws are fixed, so
    // this is exact.
    let (p0, p1) = prepare_pair(&s0, &s1, sample.lambda, config.sigma2)?;
    let shifted = p1.translate(sample.offset)?;
    let mask = mixing_mask_at(&p0, &shifted, config.zeta)?;

    std::fs::create_dir_all(&args.out).map_err(|e| at_path(&args.out, e))?;
    png_io::write_image(&args.out.join("augmented.png"), &sample.image)?;
    save_mask_salm(args.out.join("mask.salm"), &mask)?;
    let report = AugmentReport {
        tau: sample.offset.into(),
        gamma: sample.gamma,
        lambda: sample.lambda,
        total_saliency: sample.total_saliency,
    };
    setup::emit(
        Some(&args.out.join("augment.json")),
        &setup::to_json_line(&report)?,
    )
}
