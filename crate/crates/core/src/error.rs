//! Error type shared by every module of the crate.

use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point left the operating box at {point:?}")]
    LeftBox { point: DVector<f64> },

    #[error("step size {step} violates the bound {bound}")]
    StepTooLarge { step: f64, bound: f64 },

    #[error("fixed-point iteration did not settle after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("no sphere crossing before t_max = {t_max}")]
    NoCrossing { t_max: f64 },

    #[error("region {{f >= level}} inside the ball is empty")]
    EmptyRegion,

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
