//! File formats, pipeline drivers and the CLI plumbing around
//! [`stevq_core`]: raw video decoding, dataset manifests, feature caches,
//! model serialization, evaluation reports and the subcommand dispatch.

pub mod cli;
pub mod config;
pub mod error;
pub mod features_io;
pub mod manifest;
pub mod model_file;
pub mod pipeline;
pub mod report;
pub mod video;

pub use error::AppError;
