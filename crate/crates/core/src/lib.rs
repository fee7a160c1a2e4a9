//! Saliency-guided mixup with rearrangement search.
//!
//! The pipeline mixes a pair of labeled images under a per-pixel mask derived
//! from gradient saliency. Before mixing, the second image is translated by
//! the offset that maximizes the total saliency retained by the blend, found
//! by scoring a random subsample of all integer offsets. Soft labels are mixed
//! by the mean of the mask, so the label weight tracks the pixel weight.
//!
//! Modules follow the data flow: [`types`] holds the domain objects, [`model`]
//! produces gradients, [`saliency`] turns them into prepared saliency maps,
//! [`rearrange`] searches offsets, [`mixer`] assembles augmented samples, and
//! [`dataset`] plus [`io`] support the training harness around it.

pub mod dataset;
pub mod error;
pub mod io;
pub mod mixer;
pub mod model;
pub mod rearrange;
pub mod rng;
pub mod saliency;
pub mod types;

pub use error::{Result, SageError};
pub use rng::SeededRng;
pub use types::SageConfig;
