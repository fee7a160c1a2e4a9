//! `sage eval-robustness`: corruption scorecard for a checkpoint.

use std::path::PathBuf;

use clap::Args;

use sage_core::io::load_checkpoint;
use sage_core::model::{
    eval_robustness, FGM_EPSILON, FGSM_EPSILON, GAUSSIAN_NOISE_VARIANCE,
};

use crate::error::Result;
use crate::setup;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trained model to score (SGMD).
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset seed; the test split is the same one `train` holds out for
    /// the same value.
    #[arg(long, default_value_t = 1234)]
    pub data_seed: u64,
    /// Test set size.
    #[arg(long, default_value_t = 500)]
    pub test_size: usize,
    /// Seed of the Gaussian corruption draws; falls back to SAGE_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report file; omit to print to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let seed = setup::resolve_seed(args.seed, None)?;
    let model = load_checkpoint(&args.checkpoint)?;
    let test_set = setup::toy_test_split(
        model.side(),
        model.classes(),
        args.test_size,
        args.data_seed,
    )?;
    let report = eval_robustness(
        &model,
        &test_set,
        GAUSSIAN_NOISE_VARIANCE,
        FGSM_EPSILON,
        FGM_EPSILON,
        seed,
    )?;
    setup::emit(args.out.as_deref(), &setup::to_json_line(&report)?)
}
