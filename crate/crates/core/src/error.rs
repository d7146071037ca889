use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point lies outside the cell box by {excess} (tolerance {tolerance})")]
    OutsideCell { excess: f64, tolerance: f64 },

    #[error("edge is not interesting (no strict sign change)")]
    NotInteresting,

    #[error("degenerate normal: summed gradient norm {0}")]
    DegenerateNormal(f64),

    #[error("degenerate plane fit")]
    DegenerateFit,

    #[error("grid has no interesting edges; the zero level set is empty")]
    EmptySurface,

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("mesh is not watertight: {0} boundary edges")]
    NotWatertight(usize),

    #[error("ray parity inconclusive at node {0}")]
    ParityInconclusive(usize),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("invalid shape spec: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}
