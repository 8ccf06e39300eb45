use std::path::PathBuf;

use crate::complex::Layer;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("complex must have at least one vertex")]
    NoVertices,

    #[error("simplex {simplex:?} has vertex index out of range (num_vertices = {num_vertices})")]
    IndexOutOfRange {
        simplex: Vec<usize>,
        num_vertices: usize,
    },

    #[error("simplex {0:?} is not sorted by strictly increasing vertex index")]
    UnsortedSimplex(Vec<usize>),

    #[error("duplicate simplex {0:?}")]
    DuplicateSimplex(Vec<usize>),

    #[error("triangle {triangle:?} has face {missing:?} which is not in the edge list")]
    ClosureViolation {
        triangle: [usize; 3],
        missing: [usize; 2],
    },

    #[error("expected a signal on the {expected} layer, found the {found} layer")]
    LayerMismatch { expected: Layer, found: Layer },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("duplicate index {index} in {what}")]
    DuplicateIndex { what: &'static str, index: usize },

    #[error("eigenvector {index} is ambiguous: |B1 v| = {div_norm:e}, |B2^T v| = {curl_norm:e}")]
    ClassificationAmbiguity {
        index: usize,
        div_norm: f64,
        curl_norm: f64,
    },

    #[error(
        "harmonic subspace dimension {found} disagrees with E - rank(B1) - rank(B2) = {expected}"
    )]
    HarmonicDimension { expected: usize, found: usize },

    #[error("{layer} layer is not recoverable: |(I - D_S) F_F| = {norm} (needs < 1 - {margin:e}, |S| = {samples}, |F| = {band})")]
    NotRecoverable {
        layer: Layer,
        norm: f64,
        margin: f64,
        samples: usize,
        band: usize,
    },

    #[error("linear system is numerically singular: {0}")]
    SingularSystem(&'static str),

    #[error("sample budget {budget} is smaller than the band size {band}")]
    BudgetTooSmall { budget: usize, band: usize },

    #[error("{0} metric matrix is not symmetric positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("t* = {t_star} exceeds the number of candidate cliques ({cliques})")]
    TStarTooLarge { t_star: usize, cliques: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no connected graph after {0} attempts")]
    DisconnectedAfterRetries(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by malformed caller input, as opposed to numerical outcomes.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NotRecoverable { .. }
                | Error::SingularSystem(_)
                | Error::ClassificationAmbiguity { .. }
                | Error::HarmonicDimension { .. }
                | Error::DisconnectedAfterRetries(_)
        )
    }
}
