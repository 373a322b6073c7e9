//! Error type shared by the library.

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Error)]
#[serde(tag = "code", content = "detail", rename_all = "snake_case")]
pub enum Error {
    #[error("no admissible frame at the anchor: every candidate determinant is below threshold")]
    NoFrame,
    #[error("frame {labels:?} is singular at the anchor")]
    SingularFrame { labels: Vec<usize> },
    #[error("canonical-form identification has no solution for coordinate {label}")]
    IdentificationFailure { label: usize },
    #[error("control matrix is singular")]
    SingularMatrix,
    #[error("frequency search exhausted after {attempts} attempts for class {class_id}")]
    SearchBudgetExhausted { class_id: usize, attempts: usize },
    #[error("integration step failed at t = {t}")]
    StepFailure { t: f64 },
    #[error("trajectory left the working domain at t = {t}")]
    DomainExit { t: f64 },
    #[error("planner exceeded {cap} iterations")]
    IterationCapExceeded { cap: usize },
    #[error("box with lower corner {lower:?} admits no frame")]
    CoverageGap { lower: Vec<f64> },
    #[error("no path between the start and goal cells")]
    NoPath,
    #[error("point lies outside the working box")]
    OutsideBox,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported expression at line {line}, column {column}: {message}")]
    UnsupportedNode {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
