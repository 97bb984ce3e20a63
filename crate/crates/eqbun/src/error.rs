//! Library-wide error type.
//!
//! Errors split into two classes that the CLI maps to exit codes: *refusals*
//! are structured rejections of semantically invalid or out-of-hypothesis
//! inputs (exit code 2), everything else is an operational failure (exit
//! code 1).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The vertex map is not an involution.
    #[error("involution is not self-inverse at vertex `{vertex}`")]
    NonInvolutive { vertex: String },

    /// The involution does not map some simplex to a simplex.
    #[error("involution image of simplex {simplex:?} is not a simplex of the complex")]
    NotSimplicial { simplex: Vec<String> },

    /// A simplex is neither pointwise fixed nor free; barycentric
    /// subdivision separates the two cell types.
    #[error("simplex {simplex:?} is neither pointwise fixed nor free under the involution; subdivide first")]
    MixedOrbitSimplex { simplex: Vec<String> },

    #[error("marked subcomplex is invalid: {reason}")]
    SubcomplexInvalid { reason: String },

    #[error("unsupported torus dimension {d}; supported range is 1..=4")]
    UnsupportedDimension { d: usize },

    #[error("unsupported grid resolution {m}; need an even number >= 4")]
    UnsupportedResolution { m: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("quaternionic ambient dimension {n} is odd")]
    OddAmbientQuaternionic { n: usize },

    #[error("quaternionic trivial bundles have even rank; got {rank}")]
    OddRankQuaternionic { rank: usize },

    #[error("quaternionic bundle of odd rank {rank} over a base with nonempty fixed locus")]
    OddRankOnFixedLocus { rank: usize },

    #[error("bundles live over different base complexes")]
    BaseMismatch,

    #[error("bundles carry different symmetry types")]
    SymmetryMismatch,

    #[error("projection field lost its spectral gap at level 1/2: {context}")]
    GapLost { context: String },

    #[error("section margin {margin:.3e} below threshold {threshold:.3e}")]
    MarginTooSmall { margin: f64, threshold: f64 },

    #[error("cell dimension {j} exceeds the extension bound {bound} (rank {rank})")]
    DimensionBoundViolated { j: usize, bound: usize, rank: usize },

    #[error("no missed direction found after {retries} draws (margin {margin}); refine the sample resolution")]
    NoMissedDirectionFound { retries: usize, margin: f64 },

    #[error("rank {rank} is below the threshold {threshold} required by the hypothesis")]
    RankBelowThreshold { rank: usize, threshold: usize },

    #[error("rank mismatch: {context}")]
    RankMismatch { context: String },

    #[error("stabilized isomorphism is incompatible with the boundary data (residual {residual:.3e})")]
    BoundaryIncompatible { residual: f64 },

    #[error("not a subcomplex: {reason}")]
    NotASubcomplex { reason: String },

    #[error("morphism data does not assemble: {context}")]
    Mismatch { context: String },

    #[error("input is numerically singular: {context}")]
    SingularInput { context: String },

    #[error("Hamiltonian has spectrum within {delta:.3e} of the Fermi level at sample {at}")]
    GaplessHamiltonian { delta: f64, at: String },

    #[error("symmetry constraint violated: residual {residual:.3e} at {at}")]
    SymmetryViolation { residual: f64, at: String },

    #[error("unknown gallery scenario `{name}`; known: {known}")]
    UnknownScenario { name: String, known: String },

    #[error("parse error: {0}")]
    ParseError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for structured refusals of out-of-hypothesis inputs, as opposed
    /// to operational failures.  The CLI exits with code 2 for refusals.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::NonInvolutive { .. }
                | Error::NotSimplicial { .. }
                | Error::MixedOrbitSimplex { .. }
                | Error::SubcomplexInvalid { .. }
                | Error::UnsupportedDimension { .. }
                | Error::UnsupportedResolution { .. }
                | Error::OddAmbientQuaternionic { .. }
                | Error::OddRankQuaternionic { .. }
                | Error::OddRankOnFixedLocus { .. }
                | Error::DimensionBoundViolated { .. }
                | Error::RankBelowThreshold { .. }
                | Error::RankMismatch { .. }
                | Error::BoundaryIncompatible { .. }
                | Error::GaplessHamiltonian { .. }
                | Error::SymmetryViolation { .. }
        )
    }
}
