//! Compressed sensing toolkit for single-pixel cameras built on noiselet
//! sensing matrices.
//!
//! The pipeline, bottom to top:
//!
//! * [`noiselet`]: dense and fast complex noiselet transforms, and the
//!   modified integer-only transform used for pattern generation.
//! * [`haar`]: orthonormal multilevel 2D Haar analysis/synthesis (the
//!   sparsity basis) and mutual coherence.
//! * [`patterns`]: sampling plans with mirror-paired rows, binary 0/1
//!   patterns, sign/complement resolution, bit-plane packed bundles and the
//!   bundle stream format.
//! * [`spc`]: single-pixel detector simulation and restoration of `m`
//!   complex noiselet coefficients from `m + 1` binary measurements.
//! * [`recon`]: the measurement operator, a BPDN solver, the full-sampling
//!   inverse path and PSNR scoring.
//! * [`experiment`]: the command layer used by the `spc` binary (pattern
//!   streams, sampling, recovery, sweeps).
//!
//! Indexing: documentation uses 1-based noiselet row indices `1..=n` the way
//! they are usually written; slices are 0-based, so row `k` lives at index
//! `k - 1`.

pub mod error;
pub mod experiment;
pub mod haar;
pub mod image;
pub mod noiselet;
pub mod patterns;
pub mod recon;
pub mod scene;
pub mod spc;

pub use error::{Error, Result};
pub use image::Image;
pub use noiselet::{ComplexField, Direction, Geometry, IntComplexField, NoiseletOrder};
pub use patterns::{PackedBundle, PatternKind, PatternSet, PlaneDescriptor, SamplingPlan};
pub use recon::{ReconConfig, ReconResult};
pub use spc::{MeasurementMode, MeasurementRecord, SceneImage};
