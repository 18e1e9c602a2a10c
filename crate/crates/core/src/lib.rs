//! Material-aware binaural impulse response synthesis from annotated 3D scenes.
//!
//! The pipeline turns a semantically labeled triangle mesh into binaural
//! impulse responses (BIRs) and rendered audio:
//!
//! 1. [`geometry`] — load, close, and simplify annotated meshes.
//! 2. [`materials`] — map semantic labels to absorption/scattering coefficients.
//! 3. [`graph`] — encode the material-annotated mesh into an 8-d scene latent
//!    with a 3-layer graph convolution + top-k pooling encoder.
//! 4. [`ray`] — energy-based geometric ray tracer producing ground-truth BIRs.
//! 5. [`bir`] — BIR training codec (SD embedding), energy decay analysis, and
//!    acoustic metrics (T60, EDT, DRR, ED curves).
//! 6. [`gan`] — conditional GAN mapping a 14-d condition (scene latent +
//!    source + listener positions) to a preprocessed BIR, with a minimal
//!    reverse-mode differentiation core.
//! 7. [`render`] — convolution of dry audio with BIRs and walkthrough mixing.

pub mod bir;
pub mod dsp;
pub mod error;
pub mod gan;
pub mod geometry;
pub mod graph;
pub mod materials;
pub mod math;
pub mod ray;
pub mod render;
pub mod tensor_archive;
pub mod wav;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
