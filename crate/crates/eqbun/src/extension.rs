//! Rank thresholds, nonvanishing-section extension over cells, and
//! trivial-summand splitting.
//!
//! The splitting peels one trivial summand at a time: first extend an
//! equivariant nonvanishing section (a pointwise-independent pair, in the
//! quaternionic case) over the fixed locus, then over free cells in order of
//! dimension — one representative per orbit, the partner forced by
//! equivariance — trivializing the bundle over each cell by a frame
//! transported from the barycenter.  Each peel ends in
//! [`orthogonal_complement_of_section`]; certificates accumulate by
//! composition.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundles::{
    derived_partner, orthogonal_complement_of_section, trivial_bundle, verify_morphism,
    BundleMorphism, MorphismReport, ProjectionField, SampledSection,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{loewdin_orthonormalize, projection_frame, real_pairing, CMatrix, CVector};
use crate::sampling::{interior_lattice_points, lattice_points, pl_evaluate, DilatedPoint, SamplePoint};
use crate::symmetry::{SymmetryKind, TrivialBundleSpec};
use crate::z2complex::DimensionProfile;

/// Rank thresholds: splitting a trivial summand is guaranteed at rank
/// `k0`, de-stabilization at rank `k1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Thresholds {
    pub k0: usize,
    pub k1: usize,
}

fn ceil_div2(a: i64) -> i64 {
    (a + 1).div_euclid(2)
}

/// Threshold formulas; `-1` sentinels of an empty cell set feed the maxima
/// unchanged, the results are clamped at zero.
pub fn thresholds(kind: SymmetryKind, profile: DimensionProfile) -> Thresholds {
    let DimensionProfile { d0, d1 } = profile;
    let (k0, k1) = match kind {
        SymmetryKind::Real => (d0.max(ceil_div2(d1 - 1)), (d0 + 1).max(ceil_div2(d1))),
        SymmetryKind::Quaternionic => (
            ceil_div2(d0 - 3).max(ceil_div2(d1 - 1)),
            ceil_div2(d0 - 2).max(ceil_div2(d1)),
        ),
    };
    Thresholds { k0: k0.max(0) as usize, k1: k1.max(0) as usize }
}

/// Ground field of a fiber, with its real dimension; carries the classical
/// cell bound `d <= c*k - 1` for nonvanishing-section extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField {
    R,
    C,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSelector {
    pub field: ScalarField,
    pub c: usize,
}

impl FieldSelector {
    pub const REAL: FieldSelector = FieldSelector { field: ScalarField::R, c: 1 };
    pub const COMPLEX: FieldSelector = FieldSelector { field: ScalarField::C, c: 2 };
    pub const QUATERNION: FieldSelector = FieldSelector { field: ScalarField::H, c: 4 };

    /// Largest cell dimension over which a nonvanishing section of an
    /// `F`-bundle of rank `rank` always extends.
    pub fn max_cell_dim(&self, rank: usize) -> i64 {
        self.c as i64 * rank as i64 - 1
    }
}

/// How cone directions are chosen and constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConeMode {
    /// Nonvanishing values in `R^k` (stored as complex with zero imaginary
    /// part).
    RealVectors,
    /// Nonvanishing values in `C^k`.
    ComplexVectors,
    /// No nonvanishing requirement; the cone apex is the mean boundary value.
    Unconstrained,
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize, complex: bool) -> CVector {
    // Box-Muller normals, normalized
    let mut v = CVector::zeros(dim);
    let mut norm2 = 0.0;
    while norm2 < 1e-12 {
        for i in 0..dim {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let radius = (-2.0 * u1.ln()).sqrt();
            let re = radius * u2.cos();
            let im = if complex { radius * u2.sin() } else { 0.0 };
            v[i] = Complex64::new(re, im);
        }
        norm2 = v.norm_squared();
    }
    v / Complex64::new(norm2.sqrt(), 0.0)
}

/// A direction is accepted when its angular distance from every normalized
/// antipodal boundary value is at least `margin`.
fn direction_admissible(candidate: &CVector, boundary: &[CVector], margin: f64) -> bool {
    let cos_margin = margin.cos();
    boundary.iter().all(|b| {
        let norm = b.norm();
        if norm <= 0.0 {
            return false;
        }
        // angle(v, -b̂) >= margin  <=>  Re<v, b̂> >= -cos(margin)
        real_pairing(candidate, b) / norm >= -cos_margin
    })
}

/// Search for a cone apex direction: the normalized mean boundary value is
/// tried first, then seeded random draws.
fn find_missed_direction(
    boundary: &[CVector],
    dim: usize,
    mode: ConeMode,
    config: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<CVector> {
    let complex = mode == ConeMode::ComplexVectors;
    let mut mean = CVector::zeros(dim);
    for b in boundary {
        mean += b;
    }
    if boundary.is_empty() {
        let mut e1 = CVector::zeros(dim);
        e1[0] = Complex64::new(1.0, 0.0);
        return Ok(e1);
    }
    mean /= Complex64::new(boundary.len() as f64, 0.0);
    if mode == ConeMode::Unconstrained {
        return Ok(mean);
    }
    let mean_norm = mean.norm();
    if mean_norm > 1e-9 {
        let candidate = &mean / Complex64::new(mean_norm, 0.0);
        if direction_admissible(&candidate, boundary, config.missed_direction_margin) {
            return Ok(candidate);
        }
    }
    for _ in 0..config.missed_direction_retries {
        let candidate = random_direction(rng, dim, complex);
        if direction_admissible(&candidate, boundary, config.missed_direction_margin) {
            return Ok(candidate);
        }
    }
    Err(Error::NoMissedDirectionFound {
        retries: config.missed_direction_retries,
        margin: config.missed_direction_margin,
    })
}

/// Fill the interior lattice of `cell` by the cone
/// `s((1-t)·center + t·x) = (1-t)·ρ·v + t·s(x)`, where `s` on the boundary
/// is evaluated piecewise-linearly from the already-present samples.
///
/// Returns the interior points that were assigned.
pub fn cone_extension_with_direction(
    cell: &[usize],
    r: u32,
    values: &mut HashMap<SamplePoint, CVector>,
    direction: &CVector,
    rho: f64,
) -> Result<Vec<SamplePoint>> {
    let apex: CVector = direction * Complex64::new(rho, 0.0);
    let dim = apex.len();
    let mut assigned = Vec::new();
    for point in interior_lattice_points(cell, r) {
        if values.contains_key(&point) {
            continue;
        }
        let dilated = DilatedPoint::from_sample(&point, cell, r).ok_or_else(|| Error::Mismatch {
            context: "interior point not supported on its cell".into(),
        })?;
        let value = match dilated.radial_from_barycenter(r) {
            None => apex.clone(),
            Some((t, boundary)) => {
                // restrict to the supporting face and evaluate the boundary
                // section there
                let face: Vec<usize> = cell
                    .iter()
                    .zip(boundary.num.iter())
                    .filter(|&(_, &n)| n > 0)
                    .map(|(&v, _)| v)
                    .collect();
                let nums: Vec<i64> = boundary.num.iter().copied().filter(|&n| n > 0).collect();
                let face_point = DilatedPoint { num: nums, den: boundary.den };
                let on_boundary = pl_evaluate(&face, r, &face_point, &mut |p| {
                    values.get(p).map(|v| CMatrix::from_columns(&[v.clone()]))
                })
                .ok_or_else(|| Error::Mismatch {
                    context: "boundary sample missing during cone extension".into(),
                })?;
                let boundary_value = CVector::from_column_slice(on_boundary.as_slice());
                &apex * Complex64::new(1.0 - t, 0.0) + boundary_value * Complex64::new(t, 0.0)
            }
        };
        debug_assert_eq!(value.len(), dim);
        values.insert(point.clone(), value);
        assigned.push(point);
    }
    Ok(assigned)
}

/// Extend over the interior of one cell, choosing a missed direction.
/// `values` holds the boundary data in the same coordinates.
fn cone_extend_cell(
    cell: &[usize],
    r: u32,
    values: &mut HashMap<SamplePoint, CVector>,
    dim: usize,
    mode: ConeMode,
    seed: Option<&CVector>,
    config: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SamplePoint>> {
    let interior: Vec<SamplePoint> = interior_lattice_points(cell, r)
        .into_iter()
        .filter(|p| !values.contains_key(p))
        .collect();
    if interior.is_empty() {
        return Ok(Vec::new());
    }
    let boundary: Vec<CVector> = lattice_points(cell, r)
        .into_iter()
        .filter(|p| p.parts.len() < cell.len())
        .map(|p| {
            values.get(&p).cloned().ok_or_else(|| Error::Mismatch {
                context: "cell boundary is not fully assigned".into(),
            })
        })
        .collect::<Result<_>>()?;
    let rho = if boundary.is_empty() {
        1.0
    } else {
        boundary.iter().map(|b| b.norm()).sum::<f64>() / boundary.len() as f64
    };
    let direction = match seed {
        Some(s) if mode != ConeMode::Unconstrained && s.norm() > 1e-9 => {
            let candidate = s / Complex64::new(s.norm(), 0.0);
            if boundary.is_empty()
                || direction_admissible(&candidate, &boundary, config.missed_direction_margin)
            {
                candidate
            } else {
                find_missed_direction(&boundary, dim, mode, config, rng)?
            }
        }
        _ => find_missed_direction(&boundary, dim, mode, config, rng)?,
    };
    cone_extension_with_direction(cell, r, values, &direction, rho)
}

/// Extend samples of a map `∂Δ^j -> C^k \ {0}` over the whole simplex.
///
/// The disk is modelled as the standard `j`-simplex with its barycentric
/// lattice at resolution `r`; `boundary` must cover every boundary lattice
/// point.  Refuses `j > 2k - 1`, where the underlying sphere is no longer
/// connected enough for the cone construction to be guaranteed.
pub fn extend_nonvanishing_over_disk(
    boundary: &HashMap<SamplePoint, CVector>,
    j: usize,
    k: usize,
    r: u32,
    config: &Config,
) -> Result<HashMap<SamplePoint, CVector>> {
    if k == 0 || j > 2 * k - 1 {
        return Err(Error::DimensionBoundViolated { j, bound: 2 * k.max(1) - 1, rank: k });
    }
    let cell: Vec<usize> = (0..=j).collect();
    let mut values = HashMap::new();
    let mut min_norm = f64::INFINITY;
    for point in lattice_points(&cell, r) {
        if point.parts.len() == cell.len() {
            continue;
        }
        let value = boundary.get(&point).ok_or_else(|| Error::Mismatch {
            context: format!("boundary lattice point {:?} missing", point),
        })?;
        if value.len() != k {
            return Err(Error::DimensionMismatch {
                context: format!("boundary value of length {}, expected {k}", value.len()),
            });
        }
        min_norm = min_norm.min(value.norm());
        values.insert(point.clone(), value.clone());
    }
    if j > 0 && min_norm < config.min_margin {
        return Err(Error::MarginTooSmall { margin: min_norm, threshold: config.min_margin });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    cone_extend_cell(&cell, r, &mut values, k, ConeMode::ComplexVectors, None, config, &mut rng)?;
    Ok(values)
}

/// Frames of the fibers over one cell: a Gram-Schmidt frame at the
/// barycenter, transported to each lattice point by project-then-
/// orthonormalize.
struct CellFrames {
    frames: HashMap<SamplePoint, CMatrix>,
}

impl CellFrames {
    fn build(field: &ProjectionField, cell: &[usize], r: u32) -> Result<CellFrames> {
        let k = field.rank();
        let barycenter = SamplePoint::new(cell.len() as u32, cell.iter().map(|&v| (v, 1)));
        let (p_bary, _, _) = field.fiber_projection(&barycenter);
        let center_frame = projection_frame(&p_bary, k)?;
        let mut frames = HashMap::new();
        for point in lattice_points(cell, r) {
            let (p, _, _) = field.fiber_projection(&point);
            let transported =
                loewdin_orthonormalize(&(&p * &center_frame)).map_err(|_| Error::GapLost {
                    context: format!(
                        "frame transport degenerates at {}",
                        point.label(field.base().names())
                    ),
                })?;
            frames.insert(point, transported);
        }
        Ok(CellFrames { frames })
    }

    fn at(&self, point: &SamplePoint) -> &CMatrix {
        &self.frames[point]
    }
}

fn cell_dim_bound(kind: SymmetryKind, fixed_cell: bool, rank: usize) -> i64 {
    match (kind, fixed_cell) {
        // real form of the fiber over the fixed locus: F = R, dimension k
        (SymmetryKind::Real, true) => FieldSelector::REAL.max_cell_dim(rank),
        // H-columns over the fixed locus: F = H of rank k/2, bound 2k - 1,
        // which coincides with the complex bound on the whole fiber
        (SymmetryKind::Quaternionic, true) => FieldSelector::QUATERNION.max_cell_dim(rank / 2),
        // free cells always extend complex-linearly
        (_, false) => FieldSelector::COMPLEX.max_cell_dim(rank),
    }
}

/// Extend a single section over one cell inside the bundle, working in
/// transported frame coordinates.
fn extend_section_over_cell(
    field: &ProjectionField,
    cell: &[usize],
    values: &mut HashMap<SamplePoint, CVector>,
    mode: ConeMode,
    seed: Option<&CVector>,
    strict_bound: bool,
    config: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SamplePoint>> {
    let r = config.resolution;
    let k = field.rank();
    let j = cell.len() - 1;
    let fixed_cell = mode == ConeMode::RealVectors;
    let bound = cell_dim_bound(field.kind(), fixed_cell, k);
    if strict_bound && (j as i64) > bound {
        return Err(Error::DimensionBoundViolated { j, bound: bound.max(0) as usize, rank: k });
    }
    let interior: Vec<SamplePoint> = interior_lattice_points(cell, r)
        .into_iter()
        .filter(|p| !values.contains_key(p))
        .collect();
    if interior.is_empty() {
        return Ok(Vec::new());
    }
    let frames = CellFrames::build(field, cell, r)?;
    // boundary in frame coordinates
    let mut coords: HashMap<SamplePoint, CVector> = HashMap::new();
    for point in lattice_points(cell, r) {
        if point.parts.len() == cell.len() {
            continue;
        }
        let s = values.get(&point).ok_or_else(|| Error::Mismatch {
            context: format!(
                "boundary sample {} not assigned before cell {:?}",
                point.label(field.base().names()),
                field.base().simplex_names(cell)
            ),
        })?;
        coords.insert(point.clone(), frames.at(&point).adjoint() * s);
    }
    let frame_seed = seed.map(|s| {
        let barycenter = SamplePoint::new(cell.len() as u32, cell.iter().map(|&v| (v, 1)));
        frames.at(&barycenter).adjoint() * s
    });
    let assigned = cone_extend_cell(
        cell,
        r,
        &mut coords,
        k,
        mode,
        frame_seed.as_ref(),
        config,
        rng,
    )
    .map_err(|e| match e {
        Error::NoMissedDirectionFound { .. } if (j as i64) > bound => {
            Error::DimensionBoundViolated { j, bound: bound.max(0) as usize, rank: k }
        }
        other => other,
    })?;
    for point in &assigned {
        values.insert(point.clone(), frames.at(point) * &coords[point]);
    }
    Ok(assigned)
}

/// Extend a quaternionic section pair over a free cell: the first section is
/// extended in the full fiber, the second in the orthogonal complement of
/// the first, and the partner cell receives the values forced by the
/// pairing identity.
fn extend_pair_over_cell(
    field: &ProjectionField,
    cell: &[usize],
    values: &mut HashMap<SamplePoint, CVector>,
    pair_seed: Option<(&CVector, &CVector)>,
    strict_bound: bool,
    config: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let r = config.resolution;
    let k = field.rank();
    let j = cell.len() - 1;
    let sym = field.symmetry();
    let tau = |p: &SamplePoint| p.map_vertices(|v| field.base().tau(v));

    let interior: Vec<SamplePoint> = interior_lattice_points(cell, r)
        .into_iter()
        .filter(|p| !values.contains_key(p))
        .collect();
    if interior.is_empty() {
        return Ok(());
    }
    // first section, extended in the whole fiber
    let assigned = extend_section_over_cell(
        field,
        cell,
        values,
        ConeMode::ComplexVectors,
        pair_seed.map(|(s1, _)| s1),
        strict_bound,
        config,
        rng,
    )?;

    // second section of the pair on the boundary: s2 = Θ(s1 ∘ τ),
    // decomposed against the first
    let points = lattice_points(cell, r);
    let mut unit_first: HashMap<SamplePoint, CVector> = HashMap::new();
    for point in &points {
        let s1 = &values[point];
        unit_first.insert(point.clone(), s1 / Complex64::new(s1.norm(), 0.0));
    }
    let mut perp: HashMap<SamplePoint, CVector> = HashMap::new();
    let mut beta: HashMap<SamplePoint, CVector> = HashMap::new();
    for point in &points {
        if point.parts.len() == cell.len() && !values.contains_key(&tau(point)) {
            continue; // interior: to be extended
        }
        let s1_at_image = values.get(&tau(point)).ok_or_else(|| Error::Mismatch {
            context: "partner boundary data missing for pair extension".into(),
        })?;
        let s2 = sym.vector_map(s1_at_image);
        let u1 = &unit_first[point];
        let overlap = u1.dotc(&s2);
        perp.insert(point.clone(), &s2 - u1 * overlap);
        beta.insert(point.clone(), CVector::from_vec(vec![overlap]));
    }

    // complement frames of rank k-1 along the cell
    let complement_bound = FieldSelector::COMPLEX.max_cell_dim(k.saturating_sub(1));
    if strict_bound && (j as i64) > complement_bound {
        return Err(Error::DimensionBoundViolated {
            j,
            bound: complement_bound.max(0) as usize,
            rank: k,
        });
    }
    let barycenter = SamplePoint::new(cell.len() as u32, cell.iter().map(|&v| (v, 1)));
    let complement_at = |point: &SamplePoint| -> CMatrix {
        let (p, _, _) = field.fiber_projection(point);
        let u1 = &unit_first[point];
        &p - u1 * u1.adjoint()
    };
    let center_frame = projection_frame(&complement_at(&barycenter), k - 1)?;
    let mut frames: HashMap<SamplePoint, CMatrix> = HashMap::new();
    for point in &points {
        let transported = loewdin_orthonormalize(&(complement_at(point) * &center_frame))
            .map_err(|_| Error::GapLost {
                context: format!(
                    "complement frame degenerates at {}",
                    point.label(field.base().names())
                ),
            })?;
        frames.insert(point.clone(), transported);
    }
    let mut perp_coords: HashMap<SamplePoint, CVector> = HashMap::new();
    for (point, value) in &perp {
        perp_coords.insert(point.clone(), frames[point].adjoint() * value);
    }
    let perp_seed = pair_seed.map(|(_, s2)| frames[&barycenter].adjoint() * s2);
    cone_extend_cell(
        cell,
        r,
        &mut perp_coords,
        k - 1,
        ConeMode::ComplexVectors,
        perp_seed.as_ref(),
        config,
        rng,
    )
    .map_err(|e| match e {
        Error::NoMissedDirectionFound { .. } if (j as i64) > complement_bound => {
            Error::DimensionBoundViolated {
                j,
                bound: complement_bound.max(0) as usize,
                rank: k,
            }
        }
        other => other,
    })?;
    cone_extend_cell(&cell.to_vec(), r, &mut beta, 1, ConeMode::Unconstrained, None, config, rng)?;

    // assemble s2 on the interior and transport the pair to the partner cell
    for point in &assigned {
        let u1 = &unit_first[point];
        let s2 = u1 * beta[point][0] + &frames[point] * &perp_coords[point];
        // pairing identity read backwards: s1(τx) = -Θ(s2(x))
        let partner_point = tau(point);
        let minus_s1_at_image = sym.vector_map(&s2);
        values.insert(partner_point, -minus_s1_at_image);
    }
    Ok(())
}

fn vertex_point(v: usize) -> SamplePoint {
    SamplePoint::vertex(v)
}

/// Rotate a vector's global phase so its largest entry is real positive.
fn phase_normalize(v: &CVector) -> CVector {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].norm() > v[best].norm() {
            best = i;
        }
    }
    if v[best].norm() <= 0.0 {
        return v.clone();
    }
    let phase = v[best] / Complex64::new(v[best].norm(), 0.0);
    v / phase
}

/// Starting directions at a vertex with no assigned neighbors: the leading
/// eigenvectors of a weighted compression of the fiber.  The first attempt
/// weights later ambient coordinates more, which favors the most stable
/// (least twisted) directions; later attempts randomize the weights.
fn fiber_start_directions(
    field: &ProjectionField,
    vertex: usize,
    count: usize,
    attempt: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<CVector> {
    let n = field.ambient_dim();
    let (p, _, _) = field.fiber_projection(&vertex_point(vertex));
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        let weight = if attempt == 0 { 1.0 + i as f64 } else { rng.gen_range(0.5..2.0) };
        g[(i, i)] = Complex64::new(weight, 0.0);
    }
    let compressed = &p * g * &p;
    let (_, vectors) = crate::linalg::hermitian_eigen(&compressed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count.min(n) {
        let column: CVector = vectors.column(n - 1 - i).into();
        out.push(phase_normalize(&column));
    }
    out
}

/// Deterministic seed for an unassigned vertex: the fiber projection of an
/// already-assigned neighbor value, when one exists.
fn neighbor_seed(
    field: &ProjectionField,
    edges: &[Vec<usize>],
    values: &HashMap<SamplePoint, CVector>,
    vertex: usize,
) -> Option<CVector> {
    let mut best: Option<(usize, CVector)> = None;
    for edge in edges {
        if edge.len() != 2 || !edge.contains(&vertex) {
            continue;
        }
        let other = if edge[0] == vertex { edge[1] } else { edge[0] };
        if let Some(value) = values.get(&vertex_point(other)) {
            if best.as_ref().map_or(true, |(b, _)| other < *b) {
                best = Some((other, value.clone()));
            }
        }
    }
    let (_, value) = best?;
    let (p, _, _) = field.fiber_projection(&vertex_point(vertex));
    let projected = &p * &value;
    if projected.norm() > 0.3 * value.norm() {
        Some(projected)
    } else {
        None
    }
}

/// Starting pair at a free vertex with no assigned neighbors.  The second
/// member is seeded by `Θ(s1)` projected back into the fiber: with that
/// relative phase the forced partner value `-Θ(s2)` is the transported `s1`
/// itself, so the choice stays coherent around free orbit loops.
fn pair_start(
    field: &ProjectionField,
    vertex: usize,
    attempt: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(CVector, CVector)> {
    let mut starts = fiber_start_directions(field, vertex, 2, attempt, rng);
    let fallback = starts.pop()?;
    let s1 = starts.pop()?;
    let (p, _, _) = field.fiber_projection(&vertex_point(vertex));
    let candidate = &p * field.symmetry().vector_map(&s1);
    let perp = &candidate - &s1 * s1.dotc(&candidate);
    let perp_norm = perp.norm();
    let s2 = if perp_norm > 0.3 { perp / Complex64::new(perp_norm, 0.0) } else { fallback };
    Some((s1, s2))
}

/// Deterministic seed pair for an unassigned free vertex in the
/// quaternionic case: both members of a neighbor's pair, projected into the
/// fiber.
fn pair_neighbor_seed(
    field: &ProjectionField,
    edges: &[Vec<usize>],
    values: &HashMap<SamplePoint, CVector>,
    vertex: usize,
) -> Option<(CVector, CVector)> {
    let s1 = neighbor_seed(field, edges, values, vertex)?;
    let mut best: Option<(usize, CVector)> = None;
    for edge in edges {
        if edge.len() != 2 || !edge.contains(&vertex) {
            continue;
        }
        let other = if edge[0] == vertex { edge[1] } else { edge[0] };
        if values.contains_key(&vertex_point(other)) {
            if let Some(s2) = derived_partner(field, values, &vertex_point(other)) {
                if best.as_ref().map_or(true, |(b, _)| other < *b) {
                    best = Some((other, s2));
                }
            }
        }
    }
    let (_, s2_neighbor) = best?;
    let (p, _, _) = field.fiber_projection(&vertex_point(vertex));
    let u1 = &s1 / Complex64::new(s1.norm(), 0.0);
    let projected = &p * s2_neighbor;
    let perp = &projected - &u1 * u1.dotc(&projected);
    if perp.norm() > 0.3 {
        Some((s1, perp))
    } else {
        None
    }
}

/// Breadth-first order on free-vertex orbit representatives, growing out of
/// the already-assigned part of the complex; deterministic via sorted sets.
fn bfs_vertex_order(
    base: &crate::z2complex::InvolutiveComplex,
    edges: &[Vec<usize>],
    values: &HashMap<SamplePoint, CVector>,
    representatives: &[usize],
) -> Vec<usize> {
    use std::collections::BTreeSet;
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for edge in edges {
        if edge.len() == 2 {
            adjacency.entry(edge[0]).or_default().push(edge[1]);
            adjacency.entry(edge[1]).or_default().push(edge[0]);
        }
    }
    let rep_of: HashMap<usize, usize> =
        representatives.iter().flat_map(|&v| [(v, v), (base.tau(v), v)]).collect();
    let mut pending: BTreeSet<usize> = representatives.iter().copied().collect();
    let mut queue: BTreeSet<usize> = BTreeSet::new();
    for &v in representatives {
        let touches_assigned = [v, base.tau(v)].iter().any(|&u| {
            adjacency
                .get(&u)
                .map_or(false, |ns| ns.iter().any(|&w| values.contains_key(&vertex_point(w))))
        });
        if touches_assigned {
            queue.insert(v);
        }
    }
    let mut order = Vec::with_capacity(representatives.len());
    while !pending.is_empty() {
        let next =
            queue.iter().copied().next().unwrap_or_else(|| *pending.iter().next().unwrap());
        pending.remove(&next);
        queue.remove(&next);
        order.push(next);
        for &touched in [next, base.tau(next)].iter() {
            if let Some(neighbors) = adjacency.get(&touched) {
                for &w in neighbors {
                    for &u in [w, base.tau(w)].iter() {
                        if let Some(&rep) = rep_of.get(&u) {
                            if pending.contains(&rep) {
                                queue.insert(rep);
                            }
                        }
                    }
                }
            }
        }
    }
    order
}

/// Extend an equivariant section given on (at least) the marked subcomplex
/// over the pointwise-fixed locus.
///
/// Works entirely inside the fixed simplices of the base, in the real form
/// of the fiber for real bundles and on the whole fiber in the quaternionic
/// case.  Cells beyond the classical bound are still attempted; only an
/// actual failure of the direction search reports the violated bound.
pub fn extend_section_fixed_locus(
    field: &ProjectionField,
    given: &HashMap<SamplePoint, CVector>,
    config: &Config,
) -> Result<HashMap<SamplePoint, CVector>> {
    let mut values = given.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let max_dim = (config.resolution as usize).saturating_sub(1).max(1);
    let cells = field.base().cells_up_to_dim(max_dim);
    let edges: Vec<Vec<usize>> =
        cells.iter().filter(|c| c.len() == 2).cloned().collect();
    let mode = match field.kind() {
        SymmetryKind::Real => ConeMode::RealVectors,
        SymmetryKind::Quaternionic => ConeMode::ComplexVectors,
    };
    let mut ordered: Vec<&Vec<usize>> =
        cells.iter().filter(|c| field.base().simplex_is_fixed(c)).collect();
    ordered.sort_by_key(|c| (c.len(), (*c).clone()));
    for cell in ordered {
        let seed = if cell.len() == 1 {
            neighbor_seed(field, &edges, &values, cell[0])
                .or_else(|| fiber_start_directions(field, cell[0], 1, 0, &mut rng).pop())
        } else {
            None
        };
        extend_section_over_cell(
            field,
            cell,
            &mut values,
            mode,
            seed.as_ref(),
            false,
            config,
            &mut rng,
        )?;
    }
    Ok(values)
}

/// Prescribed trivial embedding on the marked subcomplex: one stored section
/// per peel (the first of each pair, in the quaternionic case), covering
/// every sample of the marked lattice.
#[derive(Debug, Clone, Default)]
pub struct TrivialEmbedding {
    pub sections: Vec<HashMap<SamplePoint, CVector>>,
}

impl TrivialEmbedding {
    /// Transport sections of a bundle over a standalone subcomplex into the
    /// parent indexing, e.g. to reuse a split of `E|_A` as the prescription
    /// for a relative split over `(X, A)`.
    pub fn from_subcomplex_sections(
        sections: &[SampledSection],
        sub: &crate::z2complex::Subcomplex,
    ) -> TrivialEmbedding {
        let remap = |section: &SampledSection| -> HashMap<SamplePoint, CVector> {
            section
                .values
                .iter()
                .map(|(point, value)| {
                    (point.map_vertices(|v| sub.vertex_map[v]), value.clone())
                })
                .collect()
        };
        TrivialEmbedding { sections: sections.iter().map(remap).collect() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellLog {
    pub cell: Vec<String>,
    pub dim: usize,
    pub fixed: bool,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeelReport {
    pub round: usize,
    pub rank_before: usize,
    pub section_margin: f64,
    pub pair_margin: Option<f64>,
    pub cells: Vec<CellLog>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitReport {
    pub m: usize,
    pub rank_input: usize,
    pub rank_result: usize,
    pub gap_result: f64,
    pub threshold: Thresholds,
    pub peels: Vec<PeelReport>,
    pub certificate: MorphismReport,
}

/// Result of [`split_trivial_summand`].
pub struct SplitOutcome {
    /// The complement bundle `E0`.
    pub e0: Arc<ProjectionField>,
    /// Certificate `E ≅ E0 ⊕ θ^m`.
    pub certificate: BundleMorphism,
    /// Rank of the split trivial summand.
    pub m: usize,
    /// Ambient coordinate ranges of the trivial summands, one per peel.
    pub theta_slots: Vec<std::ops::Range<usize>>,
    /// Sections that were peeled, in peel order (first of each pair in the
    /// quaternionic case).
    pub sections: Vec<SampledSection>,
    pub report: SplitReport,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SplitOptions {
    /// Attempt the split below the rank threshold.
    pub force: bool,
    /// Number of trivial summands to peel (of rank 1 or 2 by symmetry
    /// type); defaults to the threshold count.
    pub peels: Option<usize>,
}

/// Peel trivial summands from `field`, one rank-1 (real) or rank-2
/// (quaternionic) summand at a time, extending a prescribed splitting on the
/// marked subcomplex when one is given.
pub fn split_trivial_summand(
    field: &Arc<ProjectionField>,
    given: Option<&TrivialEmbedding>,
    options: SplitOptions,
    config: &Config,
) -> Result<SplitOutcome> {
    let kind = field.kind();
    let step = kind.trivial_step();
    let k = field.rank();
    let threshold = thresholds(kind, field.base().dimensions());
    let guaranteed_peels = (k.saturating_sub(threshold.k0)) / step;
    let requested = options.peels.unwrap_or(guaranteed_peels);
    if !options.force && (k < threshold.k0 || requested > guaranteed_peels) {
        return Err(Error::RankBelowThreshold { rank: k, threshold: threshold.k0 });
    }
    if requested * step > k {
        return Err(Error::RankBelowThreshold { rank: k, threshold: requested * step });
    }
    if let Some(embedding) = given {
        if embedding.sections.len() < requested {
            return Err(Error::Mismatch {
                context: format!(
                    "prescribed splitting provides {} sections for {requested} peels",
                    embedding.sections.len()
                ),
            });
        }
        validate_embedding(field, embedding, config)?;
    }

    let relative = given.is_some();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = field.clone();
    let mut certificate: Option<BundleMorphism> = None;
    let mut theta_slots: Vec<std::ops::Range<usize>> = Vec::new();
    let mut sections = Vec::new();
    let mut peels = Vec::new();

    for round in 0..requested {
        let mut peel = None;
        let mut last_error: Option<Error> = None;
        for attempt in 0..config.extension_attempts.max(1) {
            let seed_values = given.map(|embedding| {
                orthogonalize_against(&current, &embedding.sections[round], &sections)
            });
            let result = extend_section_everywhere(
                &current,
                seed_values,
                relative,
                attempt,
                config,
                &mut rng,
            )
            .and_then(|(section, cells)| {
                if section.margin < config.min_margin {
                    return Err(Error::MarginTooSmall {
                        margin: section.margin,
                        threshold: config.min_margin,
                    });
                }
                let (e0, cert) = orthogonal_complement_of_section(&current, &section, config)?;
                Ok((section, cells, e0, cert))
            });
            match result {
                Ok(done) => {
                    peel = Some(done);
                    break;
                }
                Err(
                    e @ (Error::GapLost { .. }
                    | Error::MarginTooSmall { .. }
                    | Error::NoMissedDirectionFound { .. }
                    | Error::SingularInput { .. }),
                ) => last_error = Some(e),
                Err(e) => return Err(e),
            }
        }
        let (section, cells, e0, peel_cert) = match peel {
            Some(done) => done,
            None => return Err(last_error.expect("at least one attempt ran")),
        };
        let rank_before = current.rank();
        peels.push(PeelReport {
            round: round + 1,
            rank_before,
            section_margin: section.margin,
            pair_margin: section.pair_margin,
            cells,
        });
        sections.push(section);
        certificate = Some(match certificate {
            None => peel_cert,
            Some(total) => {
                // lift the new peel over the theta part accumulated so far
                let theta_total = Arc::new(trivial_bundle(
                    &TrivialBundleSpec::new(
                        kind,
                        theta_slots.len() * step,
                        theta_slots.len() * step,
                        field.base().clone(),
                    )?,
                    config,
                )?);
                let lifted = peel_cert.block_sum(&BundleMorphism::identity_on(&theta_total), config)?;
                lifted.compose(&total)?
            }
        });
        let n = field.ambient_dim();
        for slot in &mut theta_slots {
            slot.start += step;
            slot.end += step;
        }
        theta_slots.insert(0, n..n + step);
        current = e0;
    }

    let m = requested * step;
    let certificate = match certificate {
        Some(cert) => cert,
        None => BundleMorphism::identity_on(field),
    };
    let cert_report = verify_morphism(&certificate, config);
    let report = SplitReport {
        m,
        rank_input: k,
        rank_result: current.rank(),
        gap_result: current.gap(),
        threshold,
        peels,
        certificate: cert_report,
    };
    Ok(SplitOutcome { e0: current, certificate, m, theta_slots, sections, report })
}

/// Orthogonalize a prescribed section against the already-peeled ones, then
/// project into the current fiber; applied samplewise on the marked lattice.
fn orthogonalize_against(
    current: &ProjectionField,
    prescribed: &HashMap<SamplePoint, CVector>,
    peeled: &[SampledSection],
) -> HashMap<SamplePoint, CVector> {
    let mut out = HashMap::with_capacity(prescribed.len());
    for (point, value) in prescribed {
        let (p, _, _) = current.fiber_projection(point);
        let mut v = &p * value;
        let _ = peeled; // earlier spans are outside the current fiber already
        if v.norm() < 1e-12 {
            v = value.clone();
        }
        out.insert(point.clone(), v);
    }
    out
}

fn validate_embedding(
    field: &ProjectionField,
    embedding: &TrivialEmbedding,
    config: &Config,
) -> Result<()> {
    let base = field.base();
    let marked_samples: Vec<SamplePoint> = field
        .samples()
        .iter()
        .filter(|p| base.in_marked(&p.support()))
        .cloned()
        .collect();
    for section in &embedding.sections {
        for point in &marked_samples {
            if !section.contains_key(point) {
                return Err(Error::Mismatch {
                    context: format!(
                        "prescribed splitting misses marked sample {}",
                        point.label(base.names())
                    ),
                });
            }
        }
        for point in section.keys() {
            if !base.in_marked(&point.support()) {
                return Err(Error::Mismatch {
                    context: "prescribed splitting has samples outside the marked subcomplex"
                        .into(),
                });
            }
        }
    }
    // pointwise independence of the full prescribed frame
    for point in &marked_samples {
        let columns: Vec<CVector> = match field.kind() {
            SymmetryKind::Real => {
                embedding.sections.iter().map(|s| s[point].clone()).collect()
            }
            SymmetryKind::Quaternionic => embedding
                .sections
                .iter()
                .flat_map(|s| {
                    let s1 = s[point].clone();
                    let s2 = derived_partner(field, s, point);
                    [Some(s1), s2]
                })
                .flatten()
                .collect(),
        };
        if columns.is_empty() {
            continue;
        }
        let mut frame = CMatrix::zeros(field.ambient_dim(), columns.len());
        for (i, column) in columns.iter().enumerate() {
            frame.set_column(i, column);
        }
        let smallest = crate::linalg::min_singular_value(&frame);
        if smallest < config.min_margin {
            return Err(Error::MarginTooSmall { margin: smallest, threshold: config.min_margin });
        }
    }
    Ok(())
}

/// Run one full extension pass over the complex: fixed cells first, then
/// free-cell orbit representatives by dimension, partners filled through the
/// structure map.
fn extend_section_everywhere(
    field: &Arc<ProjectionField>,
    seed_values: Option<HashMap<SamplePoint, CVector>>,
    relative: bool,
    attempt: usize,
    config: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<(SampledSection, Vec<CellLog>)> {
    let base = field.base();
    let kind = field.kind();
    let mut values = seed_values.unwrap_or_default();
    let max_dim = (config.resolution as usize).saturating_sub(1).max(1);
    let cells = base.cells_up_to_dim(max_dim);
    let edges: Vec<Vec<usize>> = cells.iter().filter(|c| c.len() == 2).cloned().collect();
    let mut logs = Vec::new();

    let in_scope = |cell: &Vec<usize>| -> bool { !(relative && base.in_marked(cell)) };

    // fixed cells by dimension
    let fixed_mode = match kind {
        SymmetryKind::Real => ConeMode::RealVectors,
        SymmetryKind::Quaternionic => ConeMode::ComplexVectors,
    };
    let mut fixed_cells: Vec<&Vec<usize>> = cells
        .iter()
        .filter(|c| base.simplex_is_fixed(c) && in_scope(c))
        .collect();
    fixed_cells.sort_by_key(|c| (c.len(), (*c).clone()));
    for cell in fixed_cells {
        let seed = if cell.len() == 1 {
            neighbor_seed(field, &edges, &values, cell[0]).or_else(|| {
                fiber_start_directions(field, cell[0], 1, attempt, rng).pop()
            })
        } else {
            None
        };
        let assigned = extend_section_over_cell(
            field,
            cell,
            &mut values,
            fixed_mode,
            seed.as_ref(),
            false,
            config,
            rng,
        )?;
        if !assigned.is_empty() {
            let margin =
                assigned.iter().map(|p| values[p].norm()).fold(f64::INFINITY, f64::min);
            logs.push(CellLog {
                cell: base.simplex_names(cell),
                dim: cell.len() - 1,
                fixed: true,
                min_margin: margin,
            });
        }
    }

    // free orbit representatives: vertices first in breadth-first order from
    // assigned territory (so neighbor seeds keep the choices coherent), then
    // higher cells by dimension
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut representatives: Vec<&Vec<usize>> = Vec::new();
    let mut ordered: Vec<&Vec<usize>> = cells
        .iter()
        .filter(|c| !base.simplex_is_fixed(c) && in_scope(c))
        .collect();
    ordered.sort_by_key(|c| (c.len(), (*c).clone()));
    for cell in ordered {
        if seen.contains(cell.as_slice()) {
            continue;
        }
        let image = base.tau_simplex(cell);
        seen.insert((*cell).clone());
        seen.insert(image);
        representatives.push(cell);
    }
    let vertex_reps: Vec<usize> =
        representatives.iter().filter(|c| c.len() == 1).map(|c| c[0]).collect();
    let bfs = bfs_vertex_order(base, &edges, &values, &vertex_reps);
    let process = |cell: &Vec<usize>,
                   values: &mut HashMap<SamplePoint, CVector>,
                   rng: &mut ChaCha8Rng|
     -> Result<Option<CellLog>> {
        let assigned = match kind {
            SymmetryKind::Real => {
                let seed = if cell.len() == 1 {
                    neighbor_seed(field, &edges, values, cell[0]).or_else(|| {
                        fiber_start_directions(field, cell[0], 1, attempt, rng).pop()
                    })
                } else {
                    None
                };
                let assigned = extend_section_over_cell(
                    field,
                    cell,
                    values,
                    ConeMode::ComplexVectors,
                    seed.as_ref(),
                    false,
                    config,
                    rng,
                )?;
                // partner forced by equivariance: s(τx) = Θ(s(x))
                for point in &assigned {
                    let image = point.map_vertices(|v| base.tau(v));
                    let transported = field.symmetry().vector_map(&values[point]);
                    values.insert(image, transported);
                }
                assigned
            }
            SymmetryKind::Quaternionic => {
                let before: Vec<SamplePoint> = interior_lattice_points(cell, config.resolution)
                    .into_iter()
                    .filter(|p| !values.contains_key(p))
                    .collect();
                let pair_seed = if cell.len() == 1 {
                    pair_neighbor_seed(field, &edges, values, cell[0])
                        .or_else(|| pair_start(field, cell[0], attempt, rng))
                } else {
                    None
                };
                extend_pair_over_cell(
                    field,
                    cell,
                    values,
                    pair_seed.as_ref().map(|(a, b)| (a, b)),
                    false,
                    config,
                    rng,
                )?;
                before
            }
        };
        if assigned.is_empty() {
            return Ok(None);
        }
        let margin = assigned.iter().map(|p| values[p].norm()).fold(f64::INFINITY, f64::min);
        Ok(Some(CellLog {
            cell: base.simplex_names(cell),
            dim: cell.len() - 1,
            fixed: false,
            min_margin: margin,
        }))
    };
    for v in bfs {
        if let Some(log) = process(&vec![v], &mut values, rng)? {
            logs.push(log);
        }
    }
    for cell in representatives.iter().filter(|c| c.len() > 1) {
        if let Some(log) = process(cell, &mut values, rng)? {
            logs.push(log);
        }
    }

    // coverage: every certified sample must carry a value
    for point in field.samples() {
        if !values.contains_key(point) {
            return Err(Error::Mismatch {
                context: format!("section extension left {} unassigned", point.label(base.names())),
            });
        }
    }
    Ok((SampledSection::measure(field, values), logs))
}
