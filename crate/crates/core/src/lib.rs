//! Raimi-type unavoidable partitions on surfaces with a circle action.
//!
//! The sphere `S^{n−1}`, the rotational power surfaces `x_n = |x′|^k` and
//! circular cylinders all carry a measure-preserving rotation in the
//! `(x₁, x₂)` plane and a trivialization `Φ : C × Y → X ∖ N` that turns the
//! surface measure into a product `μ₁ × ν`. A partition of the circle lifts
//! through `Φ` to a partition of the surface, and for any finite cover the
//! [`harness`] runs the slice / pigeonhole / rotation-search pipeline and
//! certifies, by direct Monte Carlo sampling, that some rotated cover piece
//! meets every lifted class in positive measure.

pub mod config;
pub mod experiment;
pub mod geometry;
pub mod harness;
pub mod hypotheses;
pub mod lang;
pub mod measures;
pub mod partition;
pub mod stats;

use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{Experiment, ExperimentReport};

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Partition(#[from] partition::PartitionError),
    #[error(transparent)]
    Cover(#[from] lang::CoverError),
    #[error(transparent)]
    Sampling(#[from] measures::SamplingError),
    #[error(
        "the cover does not cover the surface: uncovered mass ≈ {:.2} (estimate {:.5} ± {:.5})",
        .0.mean, .0.mean, .0.std_err
    )]
    Uncovered(measures::MeasureEstimate),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}
