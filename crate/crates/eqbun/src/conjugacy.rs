//! Projections and conjugators in the observable algebra.
//!
//! The algebra is the ring of matrix-valued functions on the base
//! intertwined with the involution by the symmetry-type conjugation, with
//! the pointwise adjoint as involution.  A projection in it decomposes the
//! trivial bundle into a pair of image bundles; conjugacy of two projections
//! is equivalent to the two image pairs being isomorphic, and this module
//! moves between the two pictures.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::bundles::{same_base, BundleMorphism, ProjectionField};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{identity, min_singular_value, polar_unitary, CMatrix};
use crate::sampling::SamplePoint;
use crate::symmetry::{SymmetryKind, SymmetryType};
use crate::z2complex::InvolutiveComplex;

/// A matrix-valued vertex field subject to the symmetry constraint
/// `f(τx) = C(f(x))`.
#[derive(Debug, Clone)]
pub struct ObservableAlgebraElement {
    pub sym: SymmetryType,
    pub base: Arc<InvolutiveComplex>,
    pub values: Vec<CMatrix>,
}

impl ObservableAlgebraElement {
    pub fn new(
        kind: SymmetryKind,
        base: Arc<InvolutiveComplex>,
        values: Vec<CMatrix>,
    ) -> Result<ObservableAlgebraElement> {
        let size = values.first().map(|m| m.nrows()).unwrap_or(0);
        let sym = SymmetryType::new(kind, size)?;
        if values.len() != base.vertex_count() {
            return Err(Error::DimensionMismatch {
                context: "algebra element length != vertex count".into(),
            });
        }
        for m in &values {
            if m.nrows() != size || m.ncols() != size {
                return Err(Error::DimensionMismatch {
                    context: "algebra element values differ in size".into(),
                });
            }
        }
        Ok(ObservableAlgebraElement { sym, base, values })
    }

    pub fn matrix_size(&self) -> usize {
        self.sym.ambient_dim
    }
}

/// Residuals of the algebra membership conditions; report-only.
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraCheckReport {
    pub symmetry_residual: f64,
    pub self_adjoint_residual: f64,
    pub idempotency_residual: f64,
    pub worst_vertex: Option<String>,
}

/// Residuals of `f(τx) = C(f(x))`, self-adjointness and idempotency of a
/// vertex field, with the location of the worst symmetry violation.
pub fn algebra_check(f: &ObservableAlgebraElement) -> AlgebraCheckReport {
    let mut report = AlgebraCheckReport {
        symmetry_residual: 0.0,
        self_adjoint_residual: 0.0,
        idempotency_residual: 0.0,
        worst_vertex: None,
    };
    for v in 0..f.values.len() {
        let m = &f.values[v];
        let expected = f.sym.conjugate_endo_unchecked(&f.values[f.base.tau(v)]);
        let symmetry = (m - expected).norm();
        if symmetry >= report.symmetry_residual {
            report.symmetry_residual = symmetry;
            report.worst_vertex = Some(f.base.name_of(v).to_string());
        }
        report.self_adjoint_residual = report.self_adjoint_residual.max((m - m.adjoint()).norm());
        report.idempotency_residual = report.idempotency_residual.max((m * m - m).norm());
    }
    report
}

/// A projection in the observable algebra, certified as a projection field.
#[derive(Debug, Clone)]
pub struct AlgebraProjection {
    pub element: ObservableAlgebraElement,
    pub field: Arc<ProjectionField>,
}

impl AlgebraProjection {
    pub fn new(element: ObservableAlgebraElement, config: &Config) -> Result<AlgebraProjection> {
        let field = Arc::new(ProjectionField::new(
            element.sym,
            element.base.clone(),
            element.values.clone(),
            config,
        )?);
        Ok(AlgebraProjection { element, field })
    }

    pub fn rank(&self) -> usize {
        self.field.rank()
    }

    /// Interpolated-and-rounded value at a sample point.
    pub fn fiber(&self, point: &SamplePoint) -> CMatrix {
        self.field.fiber_projection(point).0
    }
}

/// The pair of image bundles of `p` and `1 - p`; their ranks sum to the
/// matrix size and the direct sum is the trivial bundle via the identity.
pub fn projection_to_bundles(
    p: &AlgebraProjection,
    config: &Config,
) -> Result<(Arc<ProjectionField>, Arc<ProjectionField>)> {
    let size = p.element.matrix_size();
    let complement: Vec<CMatrix> =
        p.element.values.iter().map(|m| identity(size) - m).collect();
    let perp = Arc::new(ProjectionField::new(
        p.element.sym,
        p.element.base.clone(),
        complement,
        config,
    )?);
    Ok((p.field.clone(), perp))
}

/// An invertible algebra element carrying out a conjugacy, sampled on the
/// base lattice.
#[derive(Debug, Clone)]
pub struct Conjugator {
    pub sym: SymmetryType,
    pub base: Arc<InvolutiveComplex>,
    pub values: HashMap<SamplePoint, CMatrix>,
    /// Smallest singular value over the samples.
    pub margin: f64,
}

/// Residuals of a conjugator against a pair of projections.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyReport {
    pub conjugation_residual: f64,
    pub equivariance_residual: f64,
    pub unitarity_residual: f64,
    pub margin: f64,
}

impl Conjugator {
    fn measure(
        sym: SymmetryType,
        base: Arc<InvolutiveComplex>,
        values: HashMap<SamplePoint, CMatrix>,
    ) -> Conjugator {
        let margin = values
            .values()
            .map(min_singular_value)
            .fold(f64::INFINITY, f64::min);
        Conjugator { sym, base, values, margin }
    }

    /// Max residual of `v(τx) = C(v(x))`.
    pub fn equivariance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (point, value) in &self.values {
            let image = point.map_vertices(|v| self.base.tau(v));
            match self.values.get(&image) {
                Some(at_image) => {
                    let expected = self.sym.conjugate_endo_unchecked(value);
                    worst = worst.max((at_image - expected).norm());
                }
                None => return f64::INFINITY,
            }
        }
        worst
    }
}

/// Residuals of `v p v^{-1} = q` together with equivariance and unitarity.
pub fn verify_conjugator(
    v: &Conjugator,
    p: &AlgebraProjection,
    q: &AlgebraProjection,
) -> ConjugacyReport {
    let mut conjugation = 0.0f64;
    let mut unitarity = 0.0f64;
    let size = v.sym.ambient_dim;
    for (point, value) in &v.values {
        let p_here = p.fiber(point);
        let q_here = q.fiber(point);
        if let Some(inverse) = value.clone().try_inverse() {
            conjugation = conjugation.max((value * p_here * inverse - q_here).norm());
        } else {
            conjugation = f64::INFINITY;
        }
        unitarity = unitarity.max((value * value.adjoint() - identity(size)).norm());
    }
    ConjugacyReport {
        conjugation_residual: conjugation,
        equivariance_residual: v.equivariance_residual(),
        unitarity_residual: unitarity,
        margin: v.margin,
    }
}

/// Assemble a conjugator from isomorphisms of the two image pairs:
/// `v = φ ⊕ φ⊥` as an automorphism of the trivial bundle.  Satisfies
/// `v p = q v` exactly whenever the isomorphisms intertwine exactly.
pub fn conjugator_from_isomorphisms(
    p: &AlgebraProjection,
    q: &AlgebraProjection,
    phi: &BundleMorphism,
    phi_perp: &BundleMorphism,
    config: &Config,
) -> Result<Conjugator> {
    let size = p.element.matrix_size();
    if q.element.matrix_size() != size
        || !same_base(&p.element.base, &q.element.base)
        || p.element.sym.kind != q.element.sym.kind
    {
        return Err(Error::Mismatch { context: "projections live in different algebras".into() });
    }
    let assembled = |morphism: &BundleMorphism, source: &ProjectionField, target: &ProjectionField| {
        morphism.source.ambient_dim() == size
            && morphism.target.ambient_dim() == size
            && (0..source.base().vertex_count()).all(|v| {
                (morphism.source.vertex_projection(v) - source.vertex_projection(v)).norm() < 1e-9
                    && (morphism.target.vertex_projection(v) - target.vertex_projection(v)).norm()
                        < 1e-9
            })
    };
    let (e, e_perp) = projection_to_bundles(p, config)?;
    let (f, f_perp) = projection_to_bundles(q, config)?;
    if !assembled(phi, &e, &f) || !assembled(phi_perp, &e_perp, &f_perp) {
        return Err(Error::Mismatch {
            context: "isomorphisms do not match the image bundles of the projections".into(),
        });
    }
    let mut values = HashMap::with_capacity(phi.values.len());
    for (point, phi_value) in &phi.values {
        let perp_value = phi_perp.values.get(point).ok_or_else(|| Error::Mismatch {
            context: "isomorphism sample sets differ".into(),
        })?;
        let p_here = p.fiber(point);
        let v = phi_value * &p_here + perp_value * (identity(size) - &p_here);
        values.insert(point.clone(), v);
    }
    let conjugator = Conjugator::measure(p.element.sym, p.element.base.clone(), values);
    if conjugator.margin <= config.sigma_iso {
        return Err(Error::SingularInput {
            context: format!("assembled conjugator has margin {:.3e}", conjugator.margin),
        });
    }
    Ok(conjugator)
}

/// Restrict a conjugator to the image bundles: the converse direction of
/// the dictionary, producing the isomorphism pair `E ≅ F`, `E⊥ ≅ F⊥`.
pub fn restrict_conjugator(
    v: &Conjugator,
    p: &AlgebraProjection,
    q: &AlgebraProjection,
    config: &Config,
) -> Result<(BundleMorphism, BundleMorphism)> {
    let size = v.sym.ambient_dim;
    let (e, e_perp) = projection_to_bundles(p, config)?;
    let (f, f_perp) = projection_to_bundles(q, config)?;
    let mut phi_values = HashMap::with_capacity(v.values.len());
    let mut perp_values = HashMap::with_capacity(v.values.len());
    for (point, value) in &v.values {
        let p_here = p.fiber(point);
        let q_here = q.fiber(point);
        phi_values.insert(point.clone(), &q_here * value * &p_here);
        perp_values.insert(
            point.clone(),
            (identity(size) - &q_here) * value * (identity(size) - &p_here),
        );
    }
    let phi = BundleMorphism::new(e, f, phi_values)?;
    let phi_perp = BundleMorphism::new(e_perp, f_perp, perp_values)?;
    Ok((phi, phi_perp))
}

/// Samplewise unitary polar part of a conjugator; preserves the conjugacy
/// relation and stays in the algebra (repaired by averaging when roundoff
/// pushes it out).
pub fn unitarize(v: &Conjugator, config: &Config) -> Result<Conjugator> {
    if v.margin <= 0.0 {
        return Err(Error::SingularInput { context: "conjugator has zero margin".into() });
    }
    let mut values = HashMap::with_capacity(v.values.len());
    for (point, value) in &v.values {
        let unitary = polar_unitary(value).map_err(|_| Error::SingularInput {
            context: format!("polar part undefined at {}", point.label(v.base.names())),
        })?;
        values.insert(point.clone(), unitary);
    }
    let mut out = Conjugator::measure(v.sym, v.base.clone(), values);
    if out.equivariance_residual() > config.eqv_tol / 2.0 {
        let averaged: HashMap<SamplePoint, CMatrix> = out
            .values
            .iter()
            .map(|(point, value)| {
                let image = point.map_vertices(|x| out.base.tau(x));
                let partner = out.sym.conjugate_endo_unchecked(&out.values[&image]);
                let mean = (value + partner) * Complex64::new(0.5, 0.0);
                (point.clone(), polar_unitary(&mean).unwrap_or(mean))
            })
            .collect();
        out = Conjugator::measure(out.sym, out.base, averaged);
    }
    Ok(out)
}

/// Block-diagonal stabilization `p ⊕ r`.
pub fn stabilize_projection(
    p: &AlgebraProjection,
    r: &AlgebraProjection,
    config: &Config,
) -> Result<AlgebraProjection> {
    if !same_base(&p.element.base, &r.element.base) || p.element.sym.kind != r.element.sym.kind {
        return Err(Error::Mismatch { context: "stabilization across different algebras".into() });
    }
    let (a, b) = (p.element.matrix_size(), r.element.matrix_size());
    let values: Vec<CMatrix> = p
        .element
        .values
        .iter()
        .zip(r.element.values.iter())
        .map(|(m1, m2)| {
            let mut block = CMatrix::zeros(a + b, a + b);
            block.view_mut((0, 0), (a, a)).copy_from(m1);
            block.view_mut((a, a), (b, b)).copy_from(m2);
            block
        })
        .collect();
    let element =
        ObservableAlgebraElement::new(p.element.sym.kind, p.element.base.clone(), values)?;
    AlgebraProjection::new(element, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::verify_morphism;
    use crate::models_io::generators;
    use crate::symmetry::theta0_block;
    use crate::z2complex::{build_torus, TorusInvolution};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle() -> Arc<InvolutiveComplex> {
        Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap())
    }

    #[test]
    fn constant_real_matrix_is_in_the_algebra() {
        let base = circle();
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0)]);
        let f = ObservableAlgebraElement::new(
            SymmetryKind::Real,
            base.clone(),
            vec![m; base.vertex_count()],
        )
        .unwrap();
        let report = algebra_check(&f);
        assert_eq!(report.symmetry_residual, 0.0);
    }

    #[test]
    fn constant_imaginary_matrix_fails_at_fixed_vertices() {
        let base = circle();
        let m = identity(2) * c(0.0, 1.0);
        let f = ObservableAlgebraElement::new(
            SymmetryKind::Real,
            base.clone(),
            vec![m; base.vertex_count()],
        )
        .unwrap();
        let report = algebra_check(&f);
        assert!(report.symmetry_residual > 1.0);
        // the violation is maximal at every vertex, including the fixed ones;
        // evaluating the constraint at a fixed vertex shows it directly:
        // f(v) = iI but C(f(v)) = -iI
        let fixed = base.fixed_subcomplex();
        assert!(!fixed.vertex_map.is_empty());
    }

    #[test]
    fn theta_block_commutes_with_its_own_conjugation() {
        let base = circle();
        let j = theta0_block(4);
        let f = ObservableAlgebraElement::new(
            SymmetryKind::Quaternionic,
            base.clone(),
            vec![j; base.vertex_count()],
        )
        .unwrap();
        let report = algebra_check(&f);
        assert!(report.symmetry_residual < 1e-15);
    }

    fn constant_projection(base: &Arc<InvolutiveComplex>, diag: &[f64]) -> AlgebraProjection {
        let k = diag.len();
        let mut m = CMatrix::zeros(k, k);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c(d, 0.0);
        }
        let element = ObservableAlgebraElement::new(
            SymmetryKind::Real,
            base.clone(),
            vec![m; base.vertex_count()],
        )
        .unwrap();
        AlgebraProjection::new(element, &Config::default()).unwrap()
    }

    #[test]
    fn image_bundles_of_constant_projections() {
        let base = circle();
        let config = Config::default();
        let p = constant_projection(&base, &[1.0, 0.0]);
        let (e, e_perp) = projection_to_bundles(&p, &config).unwrap();
        assert_eq!((e.rank(), e_perp.rank()), (1, 1));

        let zero = constant_projection(&base, &[0.0, 0.0]);
        let (e, e_perp) = projection_to_bundles(&zero, &config).unwrap();
        assert_eq!((e.rank(), e_perp.rank()), (0, 2));
    }

    #[test]
    fn random_projection_ranks_sum_to_the_matrix_size() {
        let base = circle();
        let config = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let field = generators::random_equivariant_bundle(
            SymmetryKind::Real,
            &base,
            2,
            4,
            0.2,
            &mut rng,
            &config,
        )
        .unwrap();
        let element = ObservableAlgebraElement::new(
            SymmetryKind::Real,
            base.clone(),
            field.vertex_projections().to_vec(),
        )
        .unwrap();
        let p = AlgebraProjection::new(element, &config).unwrap();
        let (e, e_perp) = projection_to_bundles(&p, &config).unwrap();
        // eigenvalue-count oracle at every vertex
        for v in 0..base.vertex_count() {
            let count = |f: &ProjectionField| {
                let (values, _) = crate::linalg::hermitian_eigen(f.vertex_projection(v));
                values.iter().filter(|&&l| l > 0.5).count()
            };
            assert_eq!(count(&e) + count(&e_perp), 4);
        }
    }

    #[test]
    fn identity_isomorphisms_give_the_unit_conjugator() {
        let base = circle();
        let config = Config::default();
        let p = constant_projection(&base, &[1.0, 0.0]);
        let (e, e_perp) = projection_to_bundles(&p, &config).unwrap();
        let phi = BundleMorphism::identity_on(&e);
        let phi_perp = BundleMorphism::identity_on(&e_perp);
        let v = conjugator_from_isomorphisms(&p, &p, &phi, &phi_perp, &config).unwrap();
        for value in v.values.values() {
            assert!((value - identity(2)).norm() < 1e-13);
        }
        let report = verify_conjugator(&v, &p, &p);
        assert!(report.conjugation_residual < 1e-12);
    }

    #[test]
    fn swap_isomorphisms_give_the_permutation_conjugator() {
        let base = circle();
        let config = Config::default();
        let p = constant_projection(&base, &[1.0, 0.0]);
        let q = constant_projection(&base, &[0.0, 1.0]);
        let (e, _) = projection_to_bundles(&p, &config).unwrap();
        let (f, _) = projection_to_bundles(&q, &config).unwrap();
        let swap = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let phi_values: HashMap<SamplePoint, CMatrix> = e
            .samples()
            .iter()
            .map(|pt| (pt.clone(), &f.fiber_projection(pt).0 * &swap * &e.fiber_projection(pt).0))
            .collect();
        let phi = BundleMorphism::new(e.clone(), f.clone(), phi_values).unwrap();
        let (e_perp, f_perp) = (
            projection_to_bundles(&p, &config).unwrap().1,
            projection_to_bundles(&q, &config).unwrap().1,
        );
        let perp_values: HashMap<SamplePoint, CMatrix> = e_perp
            .samples()
            .iter()
            .map(|pt| {
                (
                    pt.clone(),
                    &f_perp.fiber_projection(pt).0 * &swap * &e_perp.fiber_projection(pt).0,
                )
            })
            .collect();
        let phi_perp = BundleMorphism::new(e_perp, f_perp, perp_values).unwrap();
        let v = conjugator_from_isomorphisms(&p, &q, &phi, &phi_perp, &config).unwrap();
        // hand computation: v is exactly the permutation matrix
        for value in v.values.values() {
            assert!((value - &swap).norm() < 1e-14);
        }
        let report = verify_conjugator(&v, &p, &q);
        assert!(report.conjugation_residual < 1e-13);
    }

    #[test]
    fn unitarize_is_idempotent_on_unitaries_and_fixes_scalings() {
        let base = circle();
        let config = Config::default();
        let p = constant_projection(&base, &[1.0, 0.0]);
        let samples: Vec<SamplePoint> = p.field.samples().to_vec();
        let unit = Conjugator::measure(
            p.element.sym,
            base.clone(),
            samples.iter().map(|pt| (pt.clone(), identity(2))).collect(),
        );
        let u = unitarize(&unit, &config).unwrap();
        for value in u.values.values() {
            assert!((value - identity(2)).norm() < 1e-14);
        }
        let doubled = Conjugator::measure(
            p.element.sym,
            base.clone(),
            samples.iter().map(|pt| (pt.clone(), identity(2) * c(2.0, 0.0))).collect(),
        );
        let u = unitarize(&doubled, &config).unwrap();
        for value in u.values.values() {
            assert!((value - identity(2)).norm() < 1e-13);
        }
    }

    #[test]
    fn unitarize_random_equivariant_invertible() {
        let base = circle();
        let config = Config::default();
        let sym = SymmetryType::new(SymmetryKind::Real, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let unitary_field = generators::random_equivariant_unitary(&sym, &base, 0.4, &mut rng);
        // scale it into a merely invertible element
        let p = constant_projection(&base, &[1.0, 0.0, 0.0]);
        let values: HashMap<SamplePoint, CMatrix> = p
            .field
            .samples()
            .iter()
            .map(|pt| {
                let mut m = CMatrix::zeros(3, 3);
                for &(v, w) in &pt.parts {
                    m += &unitary_field[v] * c(w as f64 / pt.den as f64, 0.0);
                }
                (pt.clone(), m * c(1.7, 0.0))
            })
            .collect();
        let v = Conjugator::measure(sym, base.clone(), values);
        let u = unitarize(&v, &config).unwrap();
        let mut unitarity = 0.0f64;
        for value in u.values.values() {
            unitarity = unitarity.max((value * value.adjoint() - identity(3)).norm());
        }
        assert!(unitarity < 1e-12);
        assert!(u.equivariance_residual() < 1e-10);
    }

    #[test]
    fn conjugacy_round_trip_through_image_bundles() {
        // q = u p u^{-1} for a random equivariant unitary; restricting u to
        // the image bundles and reassembling gives a conjugator with the
        // same action
        let base = circle();
        let config = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let field = generators::random_equivariant_bundle(
            SymmetryKind::Real,
            &base,
            1,
            3,
            0.15,
            &mut rng,
            &config,
        )
        .unwrap();
        let p = AlgebraProjection::new(
            ObservableAlgebraElement::new(
                SymmetryKind::Real,
                base.clone(),
                field.vertex_projections().to_vec(),
            )
            .unwrap(),
            &config,
        )
        .unwrap();
        let sym = p.element.sym;
        let unitary_field = generators::random_equivariant_unitary(&sym, &base, 0.5, &mut rng);
        let q_values: Vec<CMatrix> = (0..base.vertex_count())
            .map(|v| &unitary_field[v] * &p.element.values[v] * unitary_field[v].adjoint())
            .collect();
        let q = AlgebraProjection::new(
            ObservableAlgebraElement::new(SymmetryKind::Real, base.clone(), q_values).unwrap(),
            &config,
        )
        .unwrap();
        let v_values: HashMap<SamplePoint, CMatrix> = p
            .field
            .samples()
            .iter()
            .map(|pt| {
                let mut m = CMatrix::zeros(3, 3);
                for &(vertex, w) in &pt.parts {
                    m += &unitary_field[vertex] * c(w as f64 / pt.den as f64, 0.0);
                }
                (pt.clone(), m)
            })
            .collect();
        let v = Conjugator::measure(sym, base.clone(), v_values);
        let direct = verify_conjugator(&v, &p, &q);
        assert!(direct.conjugation_residual < 2e-2); // interpolated u is only near-unitary

        let (phi, phi_perp) = restrict_conjugator(&v, &p, &q, &config).unwrap();
        assert!(verify_morphism(&phi, &config).is_isomorphism);
        assert!(verify_morphism(&phi_perp, &config).is_isomorphism);
        let rebuilt = conjugator_from_isomorphisms(&p, &q, &phi, &phi_perp, &config).unwrap();
        let report = verify_conjugator(&rebuilt, &p, &q);
        assert!(report.conjugation_residual < 1e-10);
        let u = unitarize(&rebuilt, &config).unwrap();
        let final_report = verify_conjugator(&u, &p, &q);
        assert!(final_report.unitarity_residual < 1e-12);
        assert!(final_report.conjugation_residual < report.conjugation_residual + 1e-9);
    }

    #[test]
    fn stabilization_pads_and_fills_ranks() {
        let base = circle();
        let config = Config::default();
        let p = constant_projection(&base, &[1.0, 0.0]);
        let zero = constant_projection(&base, &[0.0]);
        let padded = stabilize_projection(&p, &zero, &config).unwrap();
        assert_eq!(padded.rank(), 1);
        assert_eq!(padded.element.matrix_size(), 3);

        let complement = constant_projection(&base, &[0.0, 1.0]);
        let full = stabilize_projection(&p, &complement, &config).unwrap();
        // p ⊕ (1-p) has full rank k = 2 by eigenvalue count
        assert_eq!(full.rank(), 2);
        assert_eq!(full.element.matrix_size(), 4);
    }
}
