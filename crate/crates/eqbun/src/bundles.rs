//! Bundles as equivariant fields of Hermitian projections.
//!
//! A bundle is a vertex-indexed field `P` of Hermitian idempotents inside a
//! trivial ambient bundle.  Between vertices the field is interpolated
//! linearly in barycentric coordinates and rounded to the spectral projection
//! above 1/2; the certificate that this defines an honest bundle is the
//! measured spectral gap at 1/2 over the whole sample lattice, together with
//! rank constancy.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_complex::Complex64;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitize, identity, loewdin_orthonormalize, projection_frame,
    spectral_projection_above, CMatrix, CVector,
};
use crate::sampling::{lattice_points, SamplePoint};
use crate::symmetry::{
    check_rank_parity, conjugate_morphism, SymmetryKind, SymmetryType, TrivialBundleSpec,
};
use crate::z2complex::{CylinderPair, InvolutiveComplex, Subcomplex};

/// An equivariant vector bundle presented as a certified projection field.
#[derive(Debug, Clone)]
pub struct ProjectionField {
    sym: SymmetryType,
    base: Arc<InvolutiveComplex>,
    proj: Vec<CMatrix>,
    rank: usize,
    gap: f64,
    resolution: u32,
    samples: Arc<Vec<SamplePoint>>,
}

pub fn same_base(a: &InvolutiveComplex, b: &InvolutiveComplex) -> bool {
    std::ptr::eq(a, b) || a == b
}

impl ProjectionField {
    /// Build and certify a field from per-vertex projection matrices.
    ///
    /// Checks idempotency, self-adjointness and equivariance at the vertices,
    /// rank parity, then measures the interpolation gap and rank constancy
    /// over the sample lattice at `config.resolution`.
    pub fn new(
        sym: SymmetryType,
        base: Arc<InvolutiveComplex>,
        proj: Vec<CMatrix>,
        config: &Config,
    ) -> Result<ProjectionField> {
        let n = sym.ambient_dim;
        if proj.len() != base.vertex_count() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{} projection matrices for {} vertices",
                    proj.len(),
                    base.vertex_count()
                ),
            });
        }
        for (v, p) in proj.iter().enumerate() {
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("projection at vertex {v} is not {n}x{n}"),
                });
            }
            let idem = (p * p - p).norm();
            let herm = (p - p.adjoint()).norm();
            if idem > config.proj_tol.max(1e-7) || herm > config.proj_tol.max(1e-7) {
                return Err(Error::GapLost {
                    context: format!(
                        "vertex {} is not a projection (idempotency {idem:.3e}, self-adjointness {herm:.3e})",
                        base.name_of(v)
                    ),
                });
            }
            let expected = sym.conjugate_endo(&proj[base.tau(v)])?;
            let eqv = (p - expected).norm();
            if eqv > config.eqv_tol.max(1e-7) {
                return Err(Error::SymmetryViolation {
                    residual: eqv,
                    at: base.name_of(v).to_string(),
                });
            }
        }
        let (gap, rank, samples) = certify_gap(&sym, &base, &proj, config)?;
        check_rank_parity(sym.kind, rank, &base)?;
        Ok(ProjectionField {
            sym,
            base,
            proj,
            rank,
            gap,
            resolution: config.resolution,
            samples: Arc::new(samples),
        })
    }

    /// Repair raw per-vertex matrices into an exact equivariant projection
    /// field: values on orbit representatives are hermitized and rounded to
    /// the spectral projection above 1/2, partners are filled in through the
    /// structure map; fixed vertices are symmetrized first.
    pub fn from_raw_repaired(
        sym: SymmetryType,
        base: Arc<InvolutiveComplex>,
        raw: Vec<CMatrix>,
        config: &Config,
    ) -> Result<ProjectionField> {
        let mut proj = vec![CMatrix::zeros(0, 0); raw.len()];
        for v in 0..raw.len() {
            let partner = base.tau(v);
            if partner < v {
                continue;
            }
            let mut m = hermitize(&raw[v]);
            if partner == v {
                m = (&m + sym.conjugate_endo(&m)?) * Complex64::new(0.5, 0.0);
            }
            let (rounded, _, _) = spectral_projection_above(&m, 0.5);
            proj[v] = rounded;
            if partner != v {
                proj[partner] = sym.conjugate_endo(&proj[v])?;
            }
        }
        ProjectionField::new(sym, base, proj, config)
    }

    pub fn symmetry(&self) -> &SymmetryType {
        &self.sym
    }

    pub fn kind(&self) -> SymmetryKind {
        self.sym.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.sym.ambient_dim
    }

    pub fn base(&self) -> &Arc<InvolutiveComplex> {
        &self.base
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// The deduplicated sample lattice used for certification.
    pub fn samples(&self) -> &[SamplePoint] {
        &self.samples
    }

    pub fn vertex_projection(&self, v: usize) -> &CMatrix {
        &self.proj[v]
    }

    pub fn vertex_projections(&self) -> &[CMatrix] {
        &self.proj
    }

    /// Linear interpolation of the vertex field at a sample point.
    pub fn interpolate(&self, point: &SamplePoint) -> CMatrix {
        let mut out = CMatrix::zeros(self.sym.ambient_dim, self.sym.ambient_dim);
        for &(v, w) in &point.parts {
            out += &self.proj[v] * Complex64::new(w as f64 / point.den as f64, 0.0);
        }
        out
    }

    /// Spectral rounding of the interpolated field: the fiber projection at
    /// an arbitrary sample point, with its gap and rank.
    pub fn fiber_projection(&self, point: &SamplePoint) -> (CMatrix, f64, usize) {
        spectral_projection_above(&self.interpolate(point), 0.5)
    }

    /// Largest equivariance residual of the vertex field.
    pub fn equivariance_residual(&self) -> f64 {
        crate::symmetry::equivariance_residual(&self.sym, &self.proj, &self.base)
    }

    /// Worst per-vertex projection residuals `(idempotency, self-adjointness)`.
    pub fn projection_residuals(&self) -> (f64, f64) {
        let mut idem = 0.0f64;
        let mut herm = 0.0f64;
        for p in &self.proj {
            idem = idem.max((p * p - p).norm());
            herm = herm.max((p - p.adjoint()).norm());
        }
        (idem, herm)
    }

    /// Restrict to a subcomplex (reindexed standalone bundle).
    pub fn restrict(&self, sub: &Subcomplex, config: &Config) -> Result<ProjectionField> {
        for simplex in sub.complex.maximal_simplices() {
            let parent: Vec<usize> = {
                let mut s: Vec<usize> = simplex.iter().map(|&v| sub.vertex_map[v]).collect();
                s.sort_unstable();
                s
            };
            if !self.base.contains_simplex(&parent) {
                return Err(Error::NotASubcomplex {
                    reason: format!("simplex {:?} is not carried by the base", simplex),
                });
            }
            for &v in simplex {
                let parent_tau = self.base.tau(sub.vertex_map[v]);
                if sub.vertex_map[sub.complex.tau(v)] != parent_tau {
                    return Err(Error::NotASubcomplex {
                        reason: "involution does not restrict".into(),
                    });
                }
            }
        }
        let proj = sub.vertex_map.iter().map(|&v| self.proj[v].clone()).collect();
        ProjectionField::new(self.sym, Arc::new(sub.complex.clone()), proj, config)
    }

    /// Pull back along `Y = X × I -> X`; constant along the interval.
    pub fn pullback_to_cylinder(
        &self,
        pair: &CylinderPair,
        config: &Config,
    ) -> Result<ProjectionField> {
        if pair.base_vertex_count() != self.base.vertex_count() {
            return Err(Error::BaseMismatch);
        }
        let n = self.base.vertex_count();
        let proj = (0..2 * n).map(|y| self.proj[y % n].clone()).collect();
        ProjectionField::new(self.sym, Arc::new(pair.y.clone()), proj, config)
    }
}

fn certify_gap(
    sym: &SymmetryType,
    base: &InvolutiveComplex,
    proj: &[CMatrix],
    config: &Config,
) -> Result<(f64, usize, Vec<SamplePoint>)> {
    let mut seen: HashSet<SamplePoint> = HashSet::new();
    let mut samples = Vec::new();
    let mut gap = 0.5f64;
    let mut rank: Option<usize> = None;
    let n = sym.ambient_dim;
    for simplex in base.maximal_simplices() {
        for point in lattice_points(simplex, config.resolution) {
            if !seen.insert(point.clone()) {
                continue;
            }
            let mut interp = CMatrix::zeros(n, n);
            for &(v, w) in &point.parts {
                interp += &proj[v] * Complex64::new(w as f64 / point.den as f64, 0.0);
            }
            let (_, point_gap, point_rank) = spectral_projection_above(&interp, 0.5);
            gap = gap.min(point_gap);
            match rank {
                None => rank = Some(point_rank),
                Some(r) if r != point_rank => {
                    return Err(Error::GapLost {
                        context: format!(
                            "rank jumps from {r} to {point_rank} at sample {}",
                            point.label(base.names())
                        ),
                    });
                }
                _ => {}
            }
            samples.push(point);
        }
    }
    if gap < config.min_gap {
        return Err(Error::GapLost {
            context: format!("measured interpolation gap {gap:.3e} below {:.3e}", config.min_gap),
        });
    }
    samples.sort();
    Ok((gap, rank.unwrap_or(0), samples))
}

/// The trivial bundle of a [`TrivialBundleSpec`]: constant projection onto
/// the leading `rank` coordinates.
pub fn trivial_bundle(spec: &TrivialBundleSpec, config: &Config) -> Result<ProjectionField> {
    let n = spec.symmetry.ambient_dim;
    let mut p = CMatrix::zeros(n, n);
    for i in 0..spec.rank {
        p[(i, i)] = Complex64::new(1.0, 0.0);
    }
    let proj = vec![p; spec.base.vertex_count()];
    ProjectionField::new(spec.symmetry, spec.base.clone(), proj, config)
}

/// Block-diagonal direct sum of two fields over the same base.
pub fn direct_sum(
    e: &ProjectionField,
    f: &ProjectionField,
    config: &Config,
) -> Result<ProjectionField> {
    if !same_base(&e.base, &f.base) {
        return Err(Error::BaseMismatch);
    }
    if e.sym.kind != f.sym.kind {
        return Err(Error::SymmetryMismatch);
    }
    let n_e = e.ambient_dim();
    let n_f = f.ambient_dim();
    let sym = SymmetryType::new(e.sym.kind, n_e + n_f)?;
    let proj = (0..e.base.vertex_count())
        .map(|v| {
            let mut block = CMatrix::zeros(n_e + n_f, n_e + n_f);
            block.view_mut((0, 0), (n_e, n_e)).copy_from(&e.proj[v]);
            block.view_mut((n_e, n_e), (n_f, n_f)).copy_from(&f.proj[v]);
            block
        })
        .collect();
    ProjectionField::new(sym, e.base.clone(), proj, config)
}

/// A sampled section of a bundle.  For quaternionic bundles only the first
/// section of the pair is stored; its partner is always derived through the
/// pairing identity, so the identity holds by construction.
#[derive(Debug, Clone)]
pub struct SampledSection {
    pub values: HashMap<SamplePoint, CVector>,
    /// Minimal norm over samples.
    pub margin: f64,
    /// Quaternionic only: minimal second singular value of the pointwise
    /// pair `[s1(x), s2(x)]` over samples.
    pub pair_margin: Option<f64>,
}

impl SampledSection {
    /// Wrap raw values, measuring the margins against `field`.
    pub fn measure(
        field: &ProjectionField,
        values: HashMap<SamplePoint, CVector>,
    ) -> SampledSection {
        let mut margin = f64::INFINITY;
        let mut pair_margin = match field.kind() {
            SymmetryKind::Quaternionic => Some(f64::INFINITY),
            SymmetryKind::Real => None,
        };
        for (point, value) in &values {
            margin = margin.min(value.norm());
            if let Some(worst) = pair_margin.as_mut() {
                if let Some(partner) = derived_partner(field, &values, point) {
                    let mut pair = CMatrix::zeros(field.ambient_dim(), 2);
                    pair.set_column(0, value);
                    pair.set_column(1, &partner);
                    let sv = linalg::singular_values(&pair);
                    *worst = worst.min(sv.last().copied().unwrap_or(0.0));
                }
            }
        }
        if values.is_empty() {
            margin = 0.0;
        }
        SampledSection { values, margin, pair_margin }
    }

    /// Partner section value `s2(x)` of a quaternionic section.
    pub fn partner(&self, field: &ProjectionField, point: &SamplePoint) -> Option<CVector> {
        derived_partner(field, &self.values, point)
    }

    /// Max residual of the real equivariance identity `s(τx) = Θ(s(x))`.
    pub fn real_equivariance_residual(&self, field: &ProjectionField) -> f64 {
        let mut worst = 0.0f64;
        for (point, value) in &self.values {
            let image = point.map_vertices(|v| field.base().tau(v));
            if let Some(at_image) = self.values.get(&image) {
                worst = worst.max((at_image - field.symmetry().vector_map(value)).norm());
            } else {
                worst = f64::INFINITY;
            }
        }
        worst
    }

    /// Max distance of the stored values from the fibers of `field`.
    pub fn fiber_residual(&self, field: &ProjectionField) -> f64 {
        let mut worst = 0.0f64;
        for (point, value) in &self.values {
            let (p, _, _) = field.fiber_projection(point);
            worst = worst.max((&p * value - value).norm());
        }
        worst
    }
}

/// `s2(x) = Θ(s1(τx))` with the crate's sign convention for `Θ`.
pub fn derived_partner(
    field: &ProjectionField,
    values: &HashMap<SamplePoint, CVector>,
    point: &SamplePoint,
) -> Option<CVector> {
    let image = point.map_vertices(|v| field.base().tau(v));
    values.get(&image).map(|s| field.symmetry().vector_map(s))
}

/// A sampled fiberwise matrix intertwining two projection fields.
#[derive(Debug, Clone)]
pub struct BundleMorphism {
    pub source: Arc<ProjectionField>,
    pub target: Arc<ProjectionField>,
    pub values: HashMap<SamplePoint, CMatrix>,
}

/// Residual report of [`verify_morphism`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct MorphismReport {
    pub samples: usize,
    pub intertwining_residual: f64,
    pub equivariance_residual: f64,
    pub min_singular_value: f64,
    pub max_singular_value: f64,
    pub rank_consistent: bool,
    pub worst_intertwining_sample: Option<String>,
    pub worst_equivariance_sample: Option<String>,
    pub worst_singular_sample: Option<String>,
    pub is_isomorphism: bool,
}

impl BundleMorphism {
    pub fn new(
        source: Arc<ProjectionField>,
        target: Arc<ProjectionField>,
        values: HashMap<SamplePoint, CMatrix>,
    ) -> Result<BundleMorphism> {
        if !same_base(source.base(), target.base()) {
            return Err(Error::BaseMismatch);
        }
        if source.kind() != target.kind() {
            return Err(Error::SymmetryMismatch);
        }
        let (rows, cols) = (target.ambient_dim(), source.ambient_dim());
        for (point, m) in &values {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "morphism value at {} is {}x{}, expected {rows}x{cols}",
                        point.label(source.base().names()),
                        m.nrows(),
                        m.ncols()
                    ),
                });
            }
            let image = point.map_vertices(|v| source.base().tau(v));
            if !values.contains_key(&image) {
                return Err(Error::Mismatch {
                    context: "morphism sample set is not closed under the involution".into(),
                });
            }
        }
        Ok(BundleMorphism { source, target, values })
    }

    /// The identity automorphism: the fiber projection at every sample.
    pub fn identity_on(field: &Arc<ProjectionField>) -> BundleMorphism {
        let values = field
            .samples()
            .iter()
            .map(|point| (point.clone(), field.fiber_projection(point).0))
            .collect();
        BundleMorphism { source: field.clone(), target: field.clone(), values }
    }

    /// Samplewise composition `self ∘ other`.
    pub fn compose(&self, other: &BundleMorphism) -> Result<BundleMorphism> {
        if !same_base(self.source.base(), other.target.base())
            || self.source.ambient_dim() != other.target.ambient_dim()
        {
            return Err(Error::Mismatch { context: "composition sources do not line up".into() });
        }
        let mut values = HashMap::with_capacity(self.values.len());
        for (point, m) in &self.values {
            let first = other.values.get(point).ok_or_else(|| Error::Mismatch {
                context: format!(
                    "composition misses sample {}",
                    point.label(self.source.base().names())
                ),
            })?;
            values.insert(point.clone(), m * first);
        }
        Ok(BundleMorphism { source: other.source.clone(), target: self.target.clone(), values })
    }

    /// Block sum with another morphism over the same base (acting on the
    /// direct-sum bundles).
    pub fn block_sum(&self, other: &BundleMorphism, config: &Config) -> Result<BundleMorphism> {
        let source = direct_sum(&self.source, &other.source, config)?;
        let target = direct_sum(&self.target, &other.target, config)?;
        let mut values = HashMap::with_capacity(self.values.len());
        for (point, m) in &self.values {
            let second = other.values.get(point).ok_or_else(|| Error::Mismatch {
                context: "block sum sample sets differ".into(),
            })?;
            let mut block = CMatrix::zeros(m.nrows() + second.nrows(), m.ncols() + second.ncols());
            block.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
            block
                .view_mut((m.nrows(), m.ncols()), (second.nrows(), second.ncols()))
                .copy_from(second);
            values.insert(point.clone(), block);
        }
        Ok(BundleMorphism { source: Arc::new(source), target: Arc::new(target), values })
    }

    /// Restriction to the samples supported on the marked subcomplex of the
    /// base.
    pub fn restrict_to_marked(&self) -> BundleMorphism {
        let base = self.source.base();
        let values = self
            .values
            .iter()
            .filter(|(point, _)| base.in_marked(&point.support()))
            .map(|(point, m)| (point.clone(), m.clone()))
            .collect();
        BundleMorphism { source: self.source.clone(), target: self.target.clone(), values }
    }

    /// Fiberwise pseudo-inverse (exact inverse on fibers when the morphism is
    /// an isomorphism).
    pub fn fiber_inverse(&self, config: &Config) -> Result<BundleMorphism> {
        let mut values = HashMap::with_capacity(self.values.len());
        for (point, m) in &self.values {
            let (ps, _, ks) = self.source.fiber_projection(point);
            let (pt, _, kt) = self.target.fiber_projection(point);
            if ks != kt {
                return Err(Error::RankMismatch {
                    context: "fiber inverse of a rank-changing morphism".into(),
                });
            }
            let us = projection_frame(&ps, ks)?;
            let ut = projection_frame(&pt, kt)?;
            let small = ut.adjoint() * m * &us;
            if linalg::min_singular_value(&small) < config.sigma_iso {
                return Err(Error::SingularInput {
                    context: format!(
                        "fiber singular value below sigma_iso at {}",
                        point.label(self.source.base().names())
                    ),
                });
            }
            let inv = small.try_inverse().ok_or_else(|| Error::SingularInput {
                context: format!(
                    "morphism not invertible on the fiber at {}",
                    point.label(self.source.base().names())
                ),
            })?;
            values.insert(point.clone(), us * inv * ut.adjoint());
        }
        Ok(BundleMorphism { source: self.target.clone(), target: self.source.clone(), values })
    }

    /// Apply to a section of the source bundle.
    pub fn apply_to_section(
        &self,
        section: &SampledSection,
    ) -> Result<HashMap<SamplePoint, CVector>> {
        let mut out = HashMap::with_capacity(section.values.len());
        for (point, value) in &section.values {
            let m = self.values.get(point).ok_or_else(|| Error::Mismatch {
                context: "section sample missing from morphism".into(),
            })?;
            out.insert(point.clone(), m * value);
        }
        Ok(out)
    }
}

/// Residual-and-margin report for a sampled bundle morphism.
///
/// Recomputes the fiber projections from the vertex data, so it checks a
/// morphism independently of how it was constructed.
pub fn verify_morphism(phi: &BundleMorphism, config: &Config) -> MorphismReport {
    let source = &phi.source;
    let target = &phi.target;
    let names = source.base().names();
    let mut report = MorphismReport {
        samples: phi.values.len(),
        intertwining_residual: 0.0,
        equivariance_residual: 0.0,
        min_singular_value: f64::INFINITY,
        max_singular_value: 0.0,
        rank_consistent: true,
        worst_intertwining_sample: None,
        worst_equivariance_sample: None,
        worst_singular_sample: None,
        is_isomorphism: false,
    };
    if phi.values.is_empty() {
        report.min_singular_value = 0.0;
        return report;
    }
    for (point, m) in &phi.values {
        let (ps, _, ks) = source.fiber_projection(point);
        let (pt, _, kt) = target.fiber_projection(point);
        let intertwined = &pt * m * &ps;
        let residual = (&intertwined - m).norm();
        if residual >= report.intertwining_residual {
            report.intertwining_residual = residual;
            report.worst_intertwining_sample = Some(point.label(names));
        }

        let image = point.map_vertices(|v| source.base().tau(v));
        if let Some(at_image) = phi.values.get(&image) {
            let expected = conjugate_morphism(source.symmetry(), target.symmetry(), m);
            let eqv = (at_image - expected).norm();
            if eqv >= report.equivariance_residual {
                report.equivariance_residual = eqv;
                report.worst_equivariance_sample = Some(point.label(names));
            }
        } else {
            report.equivariance_residual = f64::INFINITY;
        }

        if ks != kt {
            report.rank_consistent = false;
            report.min_singular_value = 0.0;
            continue;
        }
        let fiber_map = match (projection_frame(&ps, ks), projection_frame(&pt, kt)) {
            (Ok(us), Ok(ut)) => ut.adjoint() * m * us,
            _ => {
                report.rank_consistent = false;
                continue;
            }
        };
        let sv = linalg::singular_values(&fiber_map);
        let smallest = sv.last().copied().unwrap_or(0.0);
        let largest = sv.first().copied().unwrap_or(0.0);
        if smallest <= report.min_singular_value {
            report.min_singular_value = smallest;
            report.worst_singular_sample = Some(point.label(names));
        }
        report.max_singular_value = report.max_singular_value.max(largest);
    }
    report.is_isomorphism = report.rank_consistent
        && report.min_singular_value > config.sigma_iso
        && report.intertwining_residual.is_finite();
    report
}

/// Orthogonal complement of a nonvanishing section (real) or of the span of
/// a pointwise-independent section pair (quaternionic).
///
/// Returns the complement bundle `E0` and the certificate
/// `E ≅ E0 ⊕ θ^c` (`c` = 1 or 2), whose trivial row is the unnormalized
/// section, so its smallest fiber singular value is of order `min(1, ε)`.
pub fn orthogonal_complement_of_section(
    field: &Arc<ProjectionField>,
    section: &SampledSection,
    config: &Config,
) -> Result<(Arc<ProjectionField>, BundleMorphism)> {
    let threshold = config.min_margin;
    if section.margin < threshold {
        return Err(Error::MarginTooSmall { margin: section.margin, threshold });
    }
    if let Some(sigma) = section.pair_margin {
        if sigma < threshold {
            return Err(Error::MarginTooSmall { margin: sigma, threshold });
        }
    }
    let n = field.ambient_dim();
    let step = field.kind().trivial_step();
    if field.rank() < step {
        return Err(Error::RankMismatch {
            context: format!("cannot split rank {} from rank {}", step, field.rank()),
        });
    }

    // complement at the vertices
    let mut proj = Vec::with_capacity(field.base().vertex_count());
    for v in 0..field.base().vertex_count() {
        let point = SamplePoint::vertex(v);
        let q = section_span_projection(field, section, &point)?;
        proj.push(field.vertex_projection(v) - q);
    }
    let e0 =
        Arc::new(ProjectionField::new(*field.symmetry(), field.base().clone(), proj, config)?);

    // certificate into E0 ⊕ θ^c
    let theta = trivial_bundle(
        &TrivialBundleSpec::new(field.kind(), step, step, field.base().clone())?,
        config,
    )?;
    let target = Arc::new(direct_sum(&e0, &theta, config)?);
    let mut values = HashMap::with_capacity(field.samples().len());
    for point in field.samples() {
        let s1 = section.values.get(point).ok_or_else(|| Error::Mismatch {
            context: format!("section misses sample {}", point.label(field.base().names())),
        })?;
        let (pe, _, _) = field.fiber_projection(point);
        let (p0, _, _) = e0.fiber_projection(point);
        let mut f = CMatrix::zeros(n + step, n);
        f.view_mut((0, 0), (n, n)).copy_from(&(&p0 * &pe));
        f.view_mut((n, 0), (1, n)).copy_from(&s1.adjoint());
        if step == 2 {
            let s2 = section.partner(field, point).ok_or_else(|| Error::Mismatch {
                context: "section sample set is not closed under the involution".into(),
            })?;
            f.view_mut((n + 1, 0), (1, n)).copy_from(&s2.adjoint());
        }
        values.insert(point.clone(), f);
    }
    let certificate = BundleMorphism::new(field.clone(), target, values)?;
    Ok((e0, certificate))
}

/// Orthogonal projection onto the span of the section (and its derived
/// partner, in the quaternionic case) at a sample point.
fn section_span_projection(
    field: &ProjectionField,
    section: &SampledSection,
    point: &SamplePoint,
) -> Result<CMatrix> {
    let s1 = section.values.get(point).ok_or_else(|| Error::Mismatch {
        context: format!("section misses sample {}", point.label(field.base().names())),
    })?;
    match field.kind() {
        SymmetryKind::Real => {
            let norm = s1.norm();
            if norm <= 0.0 {
                return Err(Error::MarginTooSmall { margin: 0.0, threshold: f64::MIN_POSITIVE });
            }
            let u = s1 / Complex64::new(norm, 0.0);
            Ok(&u * u.adjoint())
        }
        SymmetryKind::Quaternionic => {
            let s2 = section.partner(field, point).ok_or_else(|| Error::Mismatch {
                context: "section sample set is not closed under the involution".into(),
            })?;
            let mut pair = CMatrix::zeros(field.ambient_dim(), 2);
            pair.set_column(0, s1);
            pair.set_column(1, &s2);
            let u = loewdin_orthonormalize(&pair)?;
            Ok(&u * u.adjoint())
        }
    }
}

/// Fermi projection of an equivariant Hermitian vertex field: the spectral
/// projection below `fermi_level` at every vertex, certified as a bundle.
pub fn spectral_projection_bundle(
    hamiltonian: &[CMatrix],
    sym: SymmetryType,
    base: Arc<InvolutiveComplex>,
    fermi_level: f64,
    config: &Config,
) -> Result<ProjectionField> {
    if hamiltonian.len() != base.vertex_count() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian field length != vertex count".into(),
        });
    }
    let residual = crate::symmetry::equivariance_residual(&sym, hamiltonian, &base);
    if residual > config.eqv_tol.max(1e-8) {
        return Err(Error::SymmetryViolation { residual, at: "hamiltonian field".into() });
    }
    // spectral distance from the Fermi level at every interpolated sample
    let n = sym.ambient_dim;
    let mut seen: HashSet<SamplePoint> = HashSet::new();
    for simplex in base.maximal_simplices() {
        for point in lattice_points(simplex, config.resolution) {
            if !seen.insert(point.clone()) {
                continue;
            }
            let mut interp = CMatrix::zeros(n, n);
            for &(v, w) in &point.parts {
                interp += &hamiltonian[v] * Complex64::new(w as f64 / point.den as f64, 0.0);
            }
            let (values, _) = linalg::hermitian_eigen(&interp);
            let dist =
                values.iter().map(|l| (l - fermi_level).abs()).fold(f64::INFINITY, f64::min);
            if dist < config.fermi_gap {
                return Err(Error::GaplessHamiltonian {
                    delta: config.fermi_gap,
                    at: point.label(base.names()),
                });
            }
        }
    }
    let raw: Vec<CMatrix> = hamiltonian
        .iter()
        .map(|h| {
            let (above, _, _) = spectral_projection_above(h, fermi_level);
            identity(n) - above
        })
        .collect();
    ProjectionField::from_raw_repaired(sym, base, raw, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::z2complex::{build_torus, TorusInvolution};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn config() -> Config {
        Config::default()
    }

    fn point_base() -> Arc<InvolutiveComplex> {
        Arc::new(
            crate::z2complex::validate_complex(&crate::z2complex::RawComplex {
                vertices: vec!["p".into()],
                maximal_simplices: vec![vec!["p".into()]],
                involution: vec![],
                subcomplex_a: vec![],
            })
            .unwrap(),
        )
    }

    #[test]
    fn trivial_real_line_over_a_point() {
        let base = point_base();
        let spec = TrivialBundleSpec::new(SymmetryKind::Real, 1, 3, base).unwrap();
        let field = trivial_bundle(&spec, &config()).unwrap();
        assert_eq!(field.rank(), 1);
        assert!((field.gap() - 0.5).abs() < 1e-15);
        let mut e1 = CMatrix::zeros(3, 3);
        e1[(0, 0)] = c(1.0, 0.0);
        assert!((field.vertex_projection(0) - e1).norm() < 1e-15);
    }

    #[test]
    fn trivial_quaternionic_pair_is_j_invariant() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let spec = TrivialBundleSpec::new(SymmetryKind::Quaternionic, 2, 4, base).unwrap();
        let field = trivial_bundle(&spec, &config()).unwrap();
        assert_eq!(field.rank(), 2);
        // J-invariance of the image: C(P) must equal P at every vertex pair
        let sym = field.symmetry();
        for v in 0..field.base().vertex_count() {
            let p = field.vertex_projection(v);
            let conj = sym.conjugate_endo(p).unwrap();
            assert!((p - conj).norm() < 1e-14);
        }
        assert!(matches!(
            TrivialBundleSpec::new(SymmetryKind::Quaternionic, 3, 4, field.base().clone()),
            Err(Error::OddRankQuaternionic { rank: 3 })
        ));
    }

    #[test]
    fn direct_sum_of_lines_is_a_plane_up_to_permutation() {
        let base = point_base();
        let line = trivial_bundle(
            &TrivialBundleSpec::new(SymmetryKind::Real, 1, 1, base.clone()).unwrap(),
            &config(),
        )
        .unwrap();
        let sum = direct_sum(&line, &line, &config()).unwrap();
        let plane = trivial_bundle(
            &TrivialBundleSpec::new(SymmetryKind::Real, 2, 2, base).unwrap(),
            &config(),
        )
        .unwrap();
        assert_eq!(sum.rank(), 2);
        assert!((sum.vertex_projection(0) - plane.vertex_projection(0)).norm() < 1e-15);
    }

    #[test]
    fn rank_of_direct_sum_adds_by_eigenvalue_count() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let ka = rng.gen_range(0..=2);
            let kb = rng.gen_range(0..=2);
            let a = trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, ka, 2, base.clone()).unwrap(),
                &config(),
            )
            .unwrap();
            let b = trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, kb, 2, base.clone()).unwrap(),
                &config(),
            )
            .unwrap();
            let sum = direct_sum(&a, &b, &config()).unwrap();
            // independent oracle: count eigenvalues above 1/2 at each vertex
            for v in 0..base.vertex_count() {
                let (values, _) = linalg::hermitian_eigen(sum.vertex_projection(v));
                let count = values.iter().filter(|&&l| l > 0.5).count();
                assert_eq!(count, ka + kb);
            }
        }
    }

    #[test]
    fn direct_sum_with_zero_rank_preserves_the_field() {
        let base = point_base();
        let e = trivial_bundle(
            &TrivialBundleSpec::new(SymmetryKind::Real, 2, 2, base.clone()).unwrap(),
            &config(),
        )
        .unwrap();
        let zero = trivial_bundle(
            &TrivialBundleSpec::new(SymmetryKind::Real, 0, 1, base).unwrap(),
            &config(),
        )
        .unwrap();
        let sum = direct_sum(&e, &zero, &config()).unwrap();
        assert_eq!(sum.rank(), 2);
        assert_eq!(sum.gap(), 0.5);
    }

    #[test]
    fn identity_morphism_verifies_cleanly_and_scales() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let field = Arc::new(
            trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, 2, 2, base).unwrap(),
                &config(),
            )
            .unwrap(),
        );
        let id = BundleMorphism::identity_on(&field);
        let report = verify_morphism(&id, &config());
        assert!(report.intertwining_residual < 1e-14);
        assert!(report.equivariance_residual < 1e-14);
        assert!((report.min_singular_value - 1.0).abs() < 1e-12);
        assert!(report.is_isomorphism);

        let scaled = BundleMorphism {
            source: id.source.clone(),
            target: id.target.clone(),
            values: id.values.iter().map(|(k, m)| (k.clone(), m * c(10.0, 0.0))).collect(),
        };
        let report = verify_morphism(&scaled, &config());
        assert!((report.min_singular_value - 10.0).abs() < 1e-11);
        assert!(report.intertwining_residual < 1e-13);
    }

    #[test]
    fn damaged_sample_is_localized_by_the_report() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let field = Arc::new(
            trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, 1, 2, base).unwrap(),
                &config(),
            )
            .unwrap(),
        );
        let mut phi = BundleMorphism::identity_on(&field);
        let victim = field.samples()[2].clone();
        let label = victim.label(field.base().names());
        let mut damage = CMatrix::zeros(2, 2);
        damage[(1, 0)] = c(0.5, 0.0); // leaves the fiber: intertwining breaks
        *phi.values.get_mut(&victim).unwrap() += damage;
        let report = verify_morphism(&phi, &config());
        assert!(report.intertwining_residual > 0.4);
        assert_eq!(report.worst_intertwining_sample, Some(label));
    }

    #[test]
    fn complement_of_constant_section_in_the_plane() {
        let base = point_base();
        let field = Arc::new(
            trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, 2, 2, base).unwrap(),
                &config(),
            )
            .unwrap(),
        );
        let mut values = HashMap::new();
        for point in field.samples() {
            let mut e1 = CVector::zeros(2);
            e1[0] = c(1.0, 0.0);
            values.insert(point.clone(), e1);
        }
        let section = SampledSection::measure(&field, values);
        assert!((section.margin - 1.0).abs() < 1e-15);
        let (e0, cert) = orthogonal_complement_of_section(&field, &section, &config()).unwrap();
        assert_eq!(e0.rank(), 1);
        let mut e2 = CMatrix::zeros(2, 2);
        e2[(1, 1)] = c(1.0, 0.0);
        assert!((e0.vertex_projection(0) - e2).norm() < 1e-14);
        let report = verify_morphism(&cert, &config());
        assert!(report.is_isomorphism);
        assert!(report.intertwining_residual < 1e-13);
    }

    #[test]
    fn quaternionic_plane_complement_of_its_standard_pair_is_zero() {
        // s1 = e1 constant, s2 = Θ(e1) = e2: complement has rank 0
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let field = Arc::new(
            trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Quaternionic, 2, 2, base).unwrap(),
                &config(),
            )
            .unwrap(),
        );
        let mut values = HashMap::new();
        for point in field.samples() {
            let mut e1 = CVector::zeros(2);
            e1[0] = c(1.0, 0.0);
            values.insert(point.clone(), e1);
        }
        let section = SampledSection::measure(&field, values);
        let sigma = section.pair_margin.unwrap();
        assert!((sigma - 1.0).abs() < 1e-14);
        // the derived partner of constant e1 is exactly e2
        let partner = section.partner(&field, &field.samples()[0]).unwrap();
        assert!((partner[0].norm() - 0.0).abs() < 1e-15);
        assert!((partner[1] - c(1.0, 0.0)).norm() < 1e-15);
        let (e0, cert) = orthogonal_complement_of_section(&field, &section, &config()).unwrap();
        assert_eq!(e0.rank(), 0);
        let report = verify_morphism(&cert, &config());
        assert!(report.is_isomorphism);
    }

    #[test]
    fn restriction_and_cylinder_pullback_preserve_rank_and_gap() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let field = trivial_bundle(
            &TrivialBundleSpec::new(SymmetryKind::Real, 1, 2, base.clone()).unwrap(),
            &config(),
        )
        .unwrap();
        let fixed = base.fixed_subcomplex();
        let restricted = field.restrict(&fixed, &config()).unwrap();
        assert_eq!(restricted.rank(), 1);
        assert_eq!(restricted.base().vertex_count(), 2);

        let pair = base.cylinder();
        let pulled = field.pullback_to_cylinder(&pair, &config()).unwrap();
        assert_eq!(pulled.rank(), field.rank());
        assert!((pulled.gap() - field.gap()).abs() < 1e-15);
        // restricting the pullback to X × {0} gives the field back
        for v in 0..base.vertex_count() {
            assert!(
                (pulled.vertex_projection(pair.bottom(v)) - field.vertex_projection(v)).norm()
                    < 1e-15
            );
        }
    }

    #[test]
    fn fermi_projection_of_flat_two_band_model() {
        let base = point_base();
        let sym = SymmetryType::new(SymmetryKind::Real, 2).unwrap();
        let h =
            vec![CMatrix::from_diagonal(&CVector::from_vec(vec![c(-1.0, 0.0), c(1.0, 0.0)]))];
        let field = spectral_projection_bundle(&h, sym, base.clone(), 0.0, &config()).unwrap();
        assert_eq!(field.rank(), 1);
        assert!((field.vertex_projection(0)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);

        let gapless =
            vec![CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]))];
        assert!(matches!(
            spectral_projection_bundle(&gapless, sym, base, 0.0, &config()),
            Err(Error::GaplessHamiltonian { .. })
        ));
    }

    #[test]
    fn fermi_projection_of_random_equivariant_field_is_equivariant() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let sym = SymmetryType::new(SymmetryKind::Real, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        // random Hermitian field, then equivariant-averaged
        let raw: Vec<CMatrix> = (0..base.vertex_count())
            .map(|_| {
                let m = CMatrix::from_fn(3, 3, |_, _| {
                    c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2))
                });
                hermitize(&m)
                    + CMatrix::from_diagonal(&CVector::from_vec(vec![
                        c(-1.0, 0.0),
                        c(1.0, 0.0),
                        c(1.5, 0.0),
                    ]))
            })
            .collect();
        let averaged = crate::symmetry::equivariant_average(&sym, &raw, &base).unwrap();
        let field = spectral_projection_bundle(&averaged, sym, base, 0.0, &config()).unwrap();
        assert_eq!(field.rank(), 1);
        assert!(field.equivariance_residual() < 1e-10);
        let (idem, herm) = field.projection_residuals();
        assert!(idem < 1e-12 && herm < 1e-12);
    }
}
