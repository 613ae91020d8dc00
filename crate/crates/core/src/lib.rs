//! Full-reference video quality assessment primitives.
//!
//! This crate holds the numeric core of the stevq engine: luma plane
//! arithmetic, entropic-differencing features built on a Gaussian scale
//! mixture model of bandpass coefficients, visual information fidelity and
//! detail-loss features, an epsilon-SVR used to fuse features into quality
//! predictions, temporal pooling of per-frame scores, and the correlation
//! math used to benchmark predictors against subjective data.
//!
//! Everything here is pure computation on in-memory buffers. File formats,
//! video decoding and the command-line driver live in the companion `stevq`
//! crate. The crate is `no_std`-compatible (with `alloc`); the `std` feature
//! (default) only switches error-trait and float-math plumbing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;

pub mod dlm;
pub mod eval;
pub mod features;
pub mod filter;
pub mod gsm;
pub mod linalg;
pub mod plane;
pub mod pooling;
pub mod svr;
pub mod vif;

pub use error::Error;
pub use plane::Plane;

/// Bumped whenever extracted feature values can change; part of cache keys.
pub const FEATURE_EXTRACTOR_VERSION: u32 = 1;

pub type Result<T> = core::result::Result<T, Error>;
