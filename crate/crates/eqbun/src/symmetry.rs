//! The two antilinear symmetry types and their fiberwise structure maps.
//!
//! A "real" structure conjugates entrywise; a "quaternionic" structure
//! conjugates and twists by the block-diagonal rotation `Θ0^(n/2)`.  On
//! endomorphisms both are involutive, which is what every equivariance check
//! in the crate relies on.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::z2complex::InvolutiveComplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    Real,
    Quaternionic,
}

impl SymmetryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SymmetryKind::Real => "real",
            SymmetryKind::Quaternionic => "quaternionic",
        }
    }

    /// Rank of the smallest trivial bundle of this symmetry type.
    pub fn trivial_step(&self) -> usize {
        match self {
            SymmetryKind::Real => 1,
            SymmetryKind::Quaternionic => 2,
        }
    }
}

/// Symmetry kind together with the ambient dimension it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryType {
    pub kind: SymmetryKind,
    pub ambient_dim: usize,
}

/// `Θ0 = [[0, -1], [1, 0]]` summed `n/2` times along the diagonal.
pub fn theta0_block(n: usize) -> CMatrix {
    debug_assert!(n % 2 == 0);
    let mut j = CMatrix::zeros(n, n);
    for b in 0..n / 2 {
        j[(2 * b, 2 * b + 1)] = Complex64::new(-1.0, 0.0);
        j[(2 * b + 1, 2 * b)] = Complex64::new(1.0, 0.0);
    }
    j
}

impl SymmetryType {
    pub fn new(kind: SymmetryKind, ambient_dim: usize) -> Result<SymmetryType> {
        if kind == SymmetryKind::Quaternionic && ambient_dim % 2 != 0 {
            return Err(Error::OddAmbientQuaternionic { n: ambient_dim });
        }
        Ok(SymmetryType { kind, ambient_dim })
    }

    /// The unitary part `S` of the structure map, so that the antilinear map
    /// on vectors is `v -> S conj(v)`.
    pub fn twist(&self) -> CMatrix {
        match self.kind {
            SymmetryKind::Real => CMatrix::identity(self.ambient_dim, self.ambient_dim),
            SymmetryKind::Quaternionic => theta0_block(self.ambient_dim),
        }
    }

    /// Antilinear structure map on ambient vectors.  Squares to `+id`
    /// (real) or `-id` (quaternionic).
    pub fn vector_map(&self, v: &CVector) -> CVector {
        match self.kind {
            SymmetryKind::Real => v.map(|z| z.conj()),
            SymmetryKind::Quaternionic => theta0_block(self.ambient_dim) * v.map(|z| z.conj()),
        }
    }

    /// Conjugation `C(M) = S conj(M) S^{-1}` on endomorphisms; involutive for
    /// both kinds.
    pub fn conjugate_endo(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.ambient_dim || m.ncols() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "structure conjugation expects {0}x{0}, got {1}x{2}",
                    self.ambient_dim,
                    m.nrows(),
                    m.ncols()
                ),
            });
        }
        Ok(self.conjugate_endo_unchecked(m))
    }

    pub fn conjugate_endo_unchecked(&self, m: &CMatrix) -> CMatrix {
        let conj = m.map(|z| z.conj());
        match self.kind {
            SymmetryKind::Real => conj,
            SymmetryKind::Quaternionic => {
                let j = theta0_block(self.ambient_dim);
                &j * conj * j.transpose()
            }
        }
    }
}

/// `C(F)` for a morphism-shaped matrix between two ambient spaces:
/// `S_target conj(F) S_source^{-1}`.
pub fn conjugate_morphism(source: &SymmetryType, target: &SymmetryType, f: &CMatrix) -> CMatrix {
    let conj = f.map(|z| z.conj());
    let left = target.twist();
    let right = source.twist().transpose();
    left * conj * right
}

/// Public entry point matching the operation table: conjugate an
/// endomorphism-valued matrix by the structure map of `sym`.
pub fn structure_conjugation(sym: &SymmetryType, m: &CMatrix) -> Result<CMatrix> {
    sym.conjugate_endo(m)
}

/// Projection of a vertex-indexed endomorphism field onto the equivariant
/// subspace: `x -> (f(x) + C(f(τx))) / 2`.
pub fn equivariant_average(
    sym: &SymmetryType,
    field: &[CMatrix],
    base: &InvolutiveComplex,
) -> Result<Vec<CMatrix>> {
    if field.len() != base.vertex_count() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "field has {} entries for {} vertices",
                field.len(),
                base.vertex_count()
            ),
        });
    }
    let mut out = Vec::with_capacity(field.len());
    for v in 0..field.len() {
        let partner = sym.conjugate_endo(&field[base.tau(v)])?;
        out.push((&field[v] + partner) * Complex64::new(0.5, 0.0));
    }
    Ok(out)
}

/// Largest equivariance residual `max_v |f(v) - C(f(τv))|` of a field.
pub fn equivariance_residual(
    sym: &SymmetryType,
    field: &[CMatrix],
    base: &InvolutiveComplex,
) -> f64 {
    let mut worst = 0.0f64;
    for v in 0..field.len() {
        let expected = sym.conjugate_endo_unchecked(&field[base.tau(v)]);
        worst = worst.max((&field[v] - expected).norm());
    }
    worst
}

/// A quaternionic bundle whose base meets the fixed locus must have even
/// rank.
pub fn check_rank_parity(
    kind: SymmetryKind,
    rank: usize,
    base: &InvolutiveComplex,
) -> Result<()> {
    if kind == SymmetryKind::Quaternionic && rank % 2 != 0 && base.has_fixed_vertex() {
        return Err(Error::OddRankOnFixedLocus { rank });
    }
    Ok(())
}

/// Description of a trivial bundle: constant projection onto the leading
/// `rank` coordinates of the ambient space, equivariant under the standard
/// structure map.
#[derive(Debug, Clone)]
pub struct TrivialBundleSpec {
    pub symmetry: SymmetryType,
    pub rank: usize,
    pub base: Arc<InvolutiveComplex>,
}

impl TrivialBundleSpec {
    pub fn new(
        kind: SymmetryKind,
        rank: usize,
        ambient_dim: usize,
        base: Arc<InvolutiveComplex>,
    ) -> Result<TrivialBundleSpec> {
        if kind == SymmetryKind::Quaternionic && rank % 2 != 0 {
            return Err(Error::OddRankQuaternionic { rank });
        }
        if rank > ambient_dim {
            return Err(Error::DimensionMismatch {
                context: format!("trivial rank {rank} exceeds ambient dimension {ambient_dim}"),
            });
        }
        let symmetry = SymmetryType::new(kind, ambient_dim)?;
        Ok(TrivialBundleSpec { symmetry, rank, base })
    }
}
