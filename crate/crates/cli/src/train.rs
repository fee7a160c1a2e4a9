//! `sage train`: toy-dataset training harness.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use sage_core::io::save_checkpoint;
use sage_core::model::{train, Augmenter, TrainConfig};
use sage_core::SageConfig;

use crate::error::{at_path, Result};
use crate::setup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AugmenterArg {
    None,
    Mixup,
    Cutmix,
    Sage,
}

impl From<AugmenterArg> for Augmenter {
    fn from(arg: AugmenterArg) -> Self {
        match arg {
            AugmenterArg::None => Augmenter::None,
            AugmenterArg::Mixup => Augmenter::InputMixup,
            AugmenterArg::Cutmix => Augmenter::CutMix,
            AugmenterArg::Sage => Augmenter::Sage,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Augmentation applied during training.
    #[arg(long, value_enum, default_value = "sage")]
    pub augmenter: AugmenterArg,
    /// Number of passes over the training set.
    #[arg(long, default_value_t = 60)]
    pub epochs: usize,
    /// Model and augmentation seed; falls back to SAGE_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset seed, kept separate from --seed so different model seeds
    /// train on identical data.
    #[arg(long, default_value_t = 1234)]
    pub data_seed: u64,
    /// Gradient reuse ratio between the saliency pass and the augmented pass.
    #[arg(long)]
    pub eta: Option<f32>,
    /// Upper bound of the mixing coefficient draw.
    #[arg(long)]
    pub u: Option<f32>,
    /// Fraction of the offset grid the search scores.
    #[arg(long)]
    pub fraction: Option<f32>,
    /// Saliency smoothing variance.
    #[arg(long)]
    pub sigma2: Option<f32>,
    /// Mask denominator guard.
    #[arg(long)]
    pub zeta: Option<f32>,
    /// Hidden layer width of the classifier.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Mini-batch size.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// SGD step size.
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f32,
    /// Training set size.
    #[arg(long, default_value_t = 2000)]
    pub train_size: usize,
    /// Test set size.
    #[arg(long, default_value_t = 500)]
    pub test_size: usize,
    /// Image side length.
    #[arg(long, default_value_t = 16)]
    pub side: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Output directory for history.csv and model.sgmd.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let seed = setup::resolve_seed(args.seed, None)?;
    let mut sage = SageConfig {
        seed,
        ..SageConfig::default()
    };
    if let Some(eta) = args.eta {
        sage.eta = eta;
    }
    if let Some(u) = args.u {
        sage.u = u;
    }
    if let Some(fraction) = args.fraction {
        sage.search_fraction = fraction;
    }
    if let Some(sigma2) = args.sigma2 {
        sage.sigma2 = sigma2;
    }
    if let Some(zeta) = args.zeta {
        sage.zeta = zeta;
    }

    let (train_set, test_set) = setup::toy_splits(
        args.side,
        args.classes,
        args.train_size,
        args.test_size,
        args.data_seed,
    )?;
    let cfg = TrainConfig {
        hidden: args.hidden,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        sage,
    };
    let (model, history) = train(
        &train_set,
        &test_set,
        args.augmenter.into(),
        &cfg,
        args.epochs,
        seed,
    )?;

    let mut csv = String::from("epoch,train_loss,test_acc\n");
    for stat in &history {
        writeln!(csv, "{},{},{}", stat.epoch, stat.train_loss, stat.test_acc)
            .expect("writing to a string cannot fail");
    }

    std::fs::create_dir_all(&args.out).map_err(|e| at_path(&args.out, e))?;
    let csv_path = args.out.join("history.csv");
    std::fs::write(&csv_path, csv).map_err(|e| at_path(&csv_path, e))?;
    save_checkpoint(args.out.join("model.sgmd"), &model)?;
    Ok(())
}
