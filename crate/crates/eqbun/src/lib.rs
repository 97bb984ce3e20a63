//! Equivariant vector bundles over finite involutive simplicial complexes.
//!
//! The library represents "real" and "quaternionic" vector bundles (complex
//! bundles with an antilinear lift of the base involution squaring to `+1`
//! or `-1`) as vertex-indexed fields of Hermitian projections inside a fixed
//! trivial ambient bundle.  On top of that representation it provides the
//! constructive pipeline:
//!
//! * [`z2complex`] — finite simplicial complexes with a simplicial involution,
//!   relative pairs, dimension profiles, products with an interval.
//! * [`symmetry`] — the two antilinear structure maps, equivariance checks
//!   and averaging, rank-parity constraints.
//! * [`bundles`] — projection fields, sampled sections, bundle morphisms and
//!   certificates.
//! * [`extension`] — rank thresholds, nonvanishing-section extension over
//!   cells, trivial-summand splitting.
//! * [`stabiso`] — conversion of stable-isomorphism witnesses into
//!   isomorphisms via a cylinder argument.
//! * [`conjugacy`] — the observable-algebra dictionary: projections,
//!   conjugators, unitarization, stable conjugacy.
//! * [`models_io`] — file formats, tight-binding Hamiltonian ingestion, the
//!   example gallery and everything the `eqbun` CLI needs.

pub mod bundles;
pub mod config;
pub mod conjugacy;
pub mod error;
pub mod extension;
pub mod linalg;
pub mod models_io;
pub mod sampling;
pub mod stabiso;
pub mod symmetry;
pub mod z2complex;

pub use config::Config;
pub use error::{Error, Result};
