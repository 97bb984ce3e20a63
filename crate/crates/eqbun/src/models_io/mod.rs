//! File formats, Hamiltonian ingestion, the example gallery and the pieces
//! the `eqbun` CLI is made of.

pub mod canonical;
pub mod gallery;
pub mod generators;
pub mod schema;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::bundles::{spectral_projection_bundle, ProjectionField};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::symmetry::{SymmetryKind, SymmetryType};
use crate::z2complex::{build_torus_with_resolution, TorusInvolution};

pub use gallery::{example_gallery, ExpectedOutcome, Scenario};

/// A translation-invariant tight-binding Hamiltonian: finitely many Fourier
/// coefficients `H_m`, evaluated as `H(z) = Σ H_m z^m` on the torus.
#[derive(Debug, Clone)]
pub struct FourierHamiltonian {
    pub dimension: usize,
    pub bands: usize,
    pub kind: SymmetryKind,
    pub coefficients: BTreeMap<Vec<i64>, CMatrix>,
}

impl FourierHamiltonian {
    /// Validates Hermiticity (`H_{-m} = H_m^*`) at construction.
    pub fn new(
        dimension: usize,
        bands: usize,
        kind: SymmetryKind,
        coefficients: BTreeMap<Vec<i64>, CMatrix>,
    ) -> Result<FourierHamiltonian> {
        for (m, matrix) in &coefficients {
            if matrix.nrows() != bands || matrix.ncols() != bands {
                return Err(Error::ParseError(format!(
                    "coefficient at {m:?} is not {bands}x{bands}"
                )));
            }
            let minus: Vec<i64> = m.iter().map(|&x| -x).collect();
            let partner = coefficients.get(&minus).ok_or_else(|| Error::SymmetryViolation {
                residual: f64::INFINITY,
                at: format!("missing coefficient at -{m:?}"),
            })?;
            let residual = (matrix - partner.adjoint()).norm();
            if residual > 1e-10 {
                return Err(Error::SymmetryViolation {
                    residual,
                    at: format!("Hermiticity pair at {m:?}"),
                });
            }
        }
        Ok(FourierHamiltonian { dimension, bands, kind, coefficients })
    }

    /// `H(z) = Σ H_m z^m` with `z^m = Π z_i^{m_i}`.
    pub fn evaluate(&self, z: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.bands, self.bands);
        for (m, matrix) in &self.coefficients {
            let mut phase = Complex64::new(1.0, 0.0);
            for (zi, &mi) in z.iter().zip(m.iter()) {
                phase *= zi.powi(mi as i32);
            }
            out += matrix * phase;
        }
        out
    }
}

/// Sample a Fourier Hamiltonian on the conjugation-equivariant torus grid
/// and build its Fermi projection.
///
/// `grid_resolution` is the number of vertices per circle (even, at least
/// four).  Checks the time-reversal constraint `C(H(z̄)) = H(z)` at every
/// vertex before handing off to the spectral projection.
pub fn ingest_hamiltonian(
    hamiltonian: &FourierHamiltonian,
    fermi_level: f64,
    grid_resolution: usize,
    config: &Config,
) -> Result<ProjectionField> {
    let base = Arc::new(build_torus_with_resolution(
        hamiltonian.dimension,
        TorusInvolution::Conjugation,
        grid_resolution,
    )?);
    let sym = SymmetryType::new(hamiltonian.kind, hamiltonian.bands)?;
    let mut field = Vec::with_capacity(base.vertex_count());
    for v in 0..base.vertex_count() {
        let coords: Vec<Complex64> = base
            .name_of(v)
            .split('-')
            .map(|c| {
                let index: f64 = c.parse().unwrap_or(0.0);
                let angle = std::f64::consts::TAU * index / grid_resolution as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        field.push(hamiltonian.evaluate(&coords));
    }
    // time-reversal constraint at the sampled vertices
    for v in 0..base.vertex_count() {
        let expected = sym.conjugate_endo(&field[base.tau(v)])?;
        let residual = (&field[v] - expected).norm();
        if residual > config.eqv_tol.max(1e-8) {
            return Err(Error::SymmetryViolation { residual, at: base.name_of(v).to_string() });
        }
    }
    spectral_projection_bundle(&field, sym, base, fermi_level, config)
}
