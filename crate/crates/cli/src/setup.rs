//! Shared command plumbing: seeds, config files, saliency sources, datasets.

use std::path::{Path, PathBuf};

use sage_core::dataset::{generate, ToyDataset, ToyDatasetSpec};
use sage_core::io::load_checkpoint;
use sage_core::model::ClassifierState;
use sage_core::saliency::compute_saliency;
use sage_core::types::{one_hot, ImageTensor, SaliencyMap};
use sage_core::SageConfig;

use crate::error::{at_path, CliError, Result};

/// The seed the environment supplies when neither a flag nor a config file
/// names one.
pub const SEED_ENV_VAR: &str = "SAGE_SEED";

/// Resolves the effective seed: `--seed` flag, then the config file's `seed`
/// key when one was present, then `SAGE_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config_seed: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(seed) = config_seed {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{SEED_ENV_VAR} must be an unsigned 64-bit integer, got {text:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

/// Loads a config file and resolves the seed against it.
///
/// Returns the config with its `seed` field set to the resolved value, so
/// callers can hand it straight to the engine.
pub fn load_config(path: Option<&Path>, seed_flag: Option<u64>) -> Result<SageConfig> {
    let mut config = SageConfig::default();
    let mut config_seed = None;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| at_path(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| at_path(path, format!("invalid JSON: {e}")))?;
        if value.get("seed").is_some() {
            config_seed = value.get("seed").and_then(|v| v.as_u64());
            if config_seed.is_none() {
                return Err(CliError::Usage(format!(
                    "{}: seed must be an unsigned 64-bit integer",
                    path.display()
                )));
            }
        }
        config = serde_json::from_value(value).map_err(|e| {
            CliError::Usage(format!("{}: {e}", path.display()))
        })?;
    }
    config.seed = resolve_seed(seed_flag, config_seed)?;
    config.validate().map_err(CliError::from)?;
    Ok(config)
}

/// Where a command obtains the pair of saliency maps.
pub enum SaliencySource {
    /// Two SALM files.
    Files(PathBuf, PathBuf),
    /// A model checkpoint; maps come from the gradient at the model's own
    /// predicted class.
    Model(PathBuf),
}

/// Interprets `--saliency-a/--saliency-b/--saliency-source` into a source.
pub fn saliency_source(
    file_a: Option<PathBuf>,
    file_b: Option<PathBuf>,
    source: Option<&str>,
) -> Result<SaliencySource> {
    if let Some(spec) = source {
        let path = spec.strip_prefix("model:").ok_or_else(|| {
            CliError::Usage(format!(
                "--saliency-source must look like model:PATH, got {spec:?}"
            ))
        })?;
        if path.is_empty() {
            return Err(CliError::Usage(
                "--saliency-source names an empty checkpoint path".into(),
            ));
        }
        return Ok(SaliencySource::Model(PathBuf::from(path)));
    }
    match (file_a, file_b) {
        (Some(a), Some(b)) => Ok(SaliencySource::Files(a, b)),
        _ => Err(CliError::Usage(
            "provide either --saliency-a and --saliency-b, or --saliency-source model:PATH".into(),
        )),
    }
}

/// Produces the saliency pair for two images from the chosen source.
pub fn load_saliency_pair(
    source: &SaliencySource,
    image_a: &ImageTensor,
    image_b: &ImageTensor,
) -> Result<(SaliencyMap, SaliencyMap)> {
    match source {
        SaliencySource::Files(a, b) => {
            Ok((sage_core::io::load_salm(a)?, sage_core::io::load_salm(b)?))
        }
        SaliencySource::Model(path) => {
            let model = load_checkpoint(path)?;
            Ok((
                saliency_from_model(&model, image_a)?,
                saliency_from_model(&model, image_b)?,
            ))
        }
    }
}

/// Gradient saliency at the model's own argmax prediction.
fn saliency_from_model(model: &ClassifierState, image: &ImageTensor) -> Result<SaliencyMap> {
    let probs = model.forward(image)?;
    let predicted = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let label = one_hot(predicted, model.classes())?;
    let (map, _) = compute_saliency(model, image, &label)?;
    Ok(map)
}

/// Standard toy splits: the train set draws from `data_seed`, the test set
/// from `data_seed + 1`, so the same `--data-seed` always names the same
/// experiment data regardless of model seed or augmenter.
pub fn toy_splits(
    side: usize,
    classes: usize,
    train_size: usize,
    test_size: usize,
    data_seed: u64,
) -> Result<(ToyDataset, ToyDataset)> {
    let train_spec = ToyDatasetSpec {
        side,
        classes,
        samples: train_size,
        ..ToyDatasetSpec::default()
    };
    let test_spec = ToyDatasetSpec {
        samples: test_size,
        ..train_spec.clone()
    };
    Ok((
        generate(&train_spec, data_seed)?,
        generate(&test_spec, data_seed.wrapping_add(1))?,
    ))
}

/// Test split only, matching [`toy_splits`]'s seed convention.
pub fn toy_test_split(
    side: usize,
    classes: usize,
    test_size: usize,
    data_seed: u64,
) -> Result<ToyDataset> {
    let spec = ToyDatasetSpec {
        side,
        classes,
        samples: test_size,
        ..ToyDatasetSpec::default()
    };
    generate(&spec, data_seed.wrapping_add(1)).map_err(CliError::from)
}

/// Configures the global worker pool. Without the `parallel` feature this is
/// a no-op so scripts can pass `--threads` unconditionally.
#[cfg(feature = "parallel")]
pub fn init_thread_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Run(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn init_thread_pool(_threads: usize) -> Result<()> {
    Ok(())
}

/// Serializes a value as pretty JSON with a trailing newline, the common
/// shape of every report this tool writes.
pub fn to_json_line(value: &impl serde::Serialize) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("serializing report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes a report either to the given file or to standard output.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| at_path(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
