//! From stable isomorphism to isomorphism.
//!
//! A witness `ψ: E1 ⊕ θ^ℓ ≅ E2 ⊕ θ^ℓ` compatible with a given boundary
//! isomorphism `φ_A` is de-stabilized one trivial summand per round: the
//! round works over the cylinder `Y = X × I` rel `B = X×∂I ∪ A×I`, glues a
//! trivial embedding over `B` out of the last coordinate on the bottom and
//! its `ψ`-preimage on the top, peels it with the relative splitting, and
//! transports the complement from one end of the cylinder to the other.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::bundles::{
    same_base, verify_morphism, BundleMorphism, MorphismReport, ProjectionField,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::extension::{
    split_trivial_summand, thresholds, SplitOptions, Thresholds, TrivialEmbedding,
};
use crate::linalg::{loewdin_orthonormalize, projection_frame, CMatrix, CVector};
use crate::sampling::SamplePoint;
use crate::symmetry::SymmetryKind;
use crate::z2complex::{CylinderPair, InvolutiveComplex};

/// Witness of a stable isomorphism: `ψ` on the stabilized bundles and the
/// boundary isomorphism it restricts to over the marked subcomplex.
#[derive(Debug, Clone)]
pub struct StableIsoWitness {
    pub ell: usize,
    pub psi: BundleMorphism,
    pub phi_a: BundleMorphism,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub psi: MorphismReport,
    pub phi_a: MorphismReport,
    /// Max residual of `ψ|_A = φ_A ⊕ id` over the marked samples.
    pub boundary_residual: f64,
}

/// Structural and numerical checks of a witness against its bundles.
pub fn validate_witness(
    e1: &Arc<ProjectionField>,
    e2: &Arc<ProjectionField>,
    witness: &StableIsoWitness,
    config: &Config,
) -> Result<WitnessReport> {
    if !same_base(e1.base(), e2.base()) || !same_base(e1.base(), witness.psi.source.base()) {
        return Err(Error::BaseMismatch);
    }
    if e1.kind() != e2.kind() {
        return Err(Error::SymmetryMismatch);
    }
    if e1.rank() != e2.rank() {
        return Err(Error::RankMismatch {
            context: format!("bundle ranks {} and {}", e1.rank(), e2.rank()),
        });
    }
    if e1.kind() == SymmetryKind::Quaternionic && witness.ell % 2 != 0 {
        return Err(Error::RankMismatch {
            context: format!(
                "stabilization rank {} is odd; the smallest trivial summand has rank 2",
                witness.ell
            ),
        });
    }
    let ell = witness.ell;
    if witness.psi.source.ambient_dim() != e1.ambient_dim() + ell
        || witness.psi.target.ambient_dim() != e2.ambient_dim() + ell
        || witness.psi.source.rank() != e1.rank() + ell
    {
        return Err(Error::RankMismatch {
            context: "witness is not shaped like E ⊕ θ^ell".into(),
        });
    }
    for v in 0..e1.base().vertex_count() {
        if (witness.psi.source.vertex_projection(v) - padded_projection(e1, v, ell)).norm() > 1e-9
            || (witness.psi.target.vertex_projection(v) - padded_projection(e2, v, ell)).norm()
                > 1e-9
        {
            return Err(Error::Mismatch {
                context: "witness source/target fields differ from E ⊕ θ^ell".into(),
            });
        }
    }
    let psi_report = verify_morphism(&witness.psi, config);
    let phi_report = verify_morphism(&witness.phi_a, config);

    // boundary compatibility: ψ = φ_A ⊕ id over the marked samples
    let base = e1.base();
    let mut boundary_residual = 0.0f64;
    for (point, value) in &witness.psi.values {
        if !base.in_marked(&point.support()) {
            continue;
        }
        let phi = witness.phi_a.values.get(point).ok_or_else(|| Error::Mismatch {
            context: format!(
                "boundary isomorphism misses marked sample {}",
                point.label(base.names())
            ),
        })?;
        let (p_marked, _, _) = witness.psi.source.fiber_projection(point);
        let mut expected = CMatrix::zeros(e2.ambient_dim() + ell, e1.ambient_dim() + ell);
        expected
            .view_mut((0, 0), (e2.ambient_dim(), e1.ambient_dim()))
            .copy_from(phi);
        for i in 0..ell {
            expected[(e2.ambient_dim() + i, e1.ambient_dim() + i)] = Complex64::new(1.0, 0.0);
        }
        boundary_residual = boundary_residual.max(((value - expected) * p_marked).norm());
    }
    let tol = config.eqv_tol.max(1e-7);
    if boundary_residual > tol {
        return Err(Error::BoundaryIncompatible { residual: boundary_residual });
    }
    Ok(WitnessReport { psi: psi_report, phi_a: phi_report, boundary_residual })
}

fn padded_projection(field: &ProjectionField, v: usize, ell: usize) -> CMatrix {
    let n = field.ambient_dim();
    let mut out = CMatrix::zeros(n + ell, n + ell);
    out.view_mut((0, 0), (n, n)).copy_from(field.vertex_projection(v));
    for i in 0..ell {
        out[(n + i, n + i)] = Complex64::new(1.0, 0.0);
    }
    out
}

/// A field over a cylinder, restricted to one end (a bundle over the base).
fn end_restriction(
    field: &ProjectionField,
    pair: &CylinderPair,
    base: &Arc<InvolutiveComplex>,
    top: bool,
    config: &Config,
) -> Result<ProjectionField> {
    let n = pair.base_vertex_count();
    let proj = (0..n)
        .map(|v| {
            field
                .vertex_projection(if top { pair.top(v) } else { pair.bottom(v) })
                .clone()
        })
        .collect();
    ProjectionField::new(*field.symmetry(), base.clone(), proj, config)
}

/// Interpolation of a cylinder field at `(x, t)` for a base sample `x`,
/// following the staircase triangulation of the prism over the support
/// simplex of `x`.
fn prism_interpolation(
    field: &ProjectionField,
    pair: &CylinderPair,
    base: &InvolutiveComplex,
    point: &SamplePoint,
    t: f64,
) -> CMatrix {
    let mut support = point.support();
    support.sort_by_key(|&v| base.staircase_rank(v));
    let weights: Vec<f64> = support.iter().map(|&v| point.weight_of(v)).collect();
    let q = support.len();
    // cumulative sums from the top: R[i] = sum_{j >= i} weights[j]
    let mut upper = vec![0.0; q + 1];
    for i in (0..q).rev() {
        upper[i] = upper[i + 1] + weights[i];
    }
    let mut split = 0;
    while split + 1 < q && t < upper[split + 1] {
        split += 1;
    }
    // alpha on the bottom copy, beta on the top copy
    let beta_split = (t - upper[split + 1]).clamp(0.0, weights[split]);
    let n = field.ambient_dim();
    let mut out = CMatrix::zeros(n, n);
    for (i, &v) in support.iter().enumerate() {
        let (alpha, beta) = if i < split {
            (weights[i], 0.0)
        } else if i > split {
            (0.0, weights[i])
        } else {
            (weights[i] - beta_split, beta_split)
        };
        if alpha != 0.0 {
            out += field.vertex_projection(pair.bottom(v)) * Complex64::new(alpha, 0.0);
        }
        if beta != 0.0 {
            out += field.vertex_projection(pair.top(v)) * Complex64::new(beta, 0.0);
        }
    }
    out
}

/// Transport a bundle over a cylinder from the bottom end to the top end:
/// a composition of fiber projections along a grid in the interval
/// direction, polar-corrected on the fibers.
///
/// The result is an equivariant isomorphism `E|_{X×{0}} ≅ E|_{X×{1}}`
/// certified by [`verify_morphism`]; for a pullback bundle it is the
/// identity up to roundoff.
pub fn transport_isomorphism(
    field: &ProjectionField,
    pair: &CylinderPair,
    base: &Arc<InvolutiveComplex>,
    config: &Config,
) -> Result<BundleMorphism> {
    if pair.base_vertex_count() != base.vertex_count()
        || 2 * base.vertex_count() != field.base().vertex_count()
    {
        return Err(Error::BaseMismatch);
    }
    let bottom = Arc::new(end_restriction(field, pair, base, false, config)?);
    let top = Arc::new(end_restriction(field, pair, base, true, config)?);
    let k = bottom.rank();
    let mut values = HashMap::with_capacity(bottom.samples().len());

    for point in bottom.samples() {
        let mut steps = config.transport_steps.max(2);
        let mut refinement = 0;
        let transported = loop {
            match transport_along_path(field, pair, base, point, steps, k, config) {
                Ok(value) => break value,
                Err(e @ Error::GapLost { .. }) => {
                    refinement += 1;
                    if refinement > config.transport_refinements {
                        return Err(e);
                    }
                    steps *= 2;
                }
                Err(e) => return Err(e),
            }
        };
        values.insert(point.clone(), transported);
    }
    BundleMorphism::new(bottom, top, values)
}

fn transport_along_path(
    field: &ProjectionField,
    pair: &CylinderPair,
    base: &InvolutiveComplex,
    point: &SamplePoint,
    steps: usize,
    k: usize,
    config: &Config,
) -> Result<CMatrix> {
    let rounded = |t: f64| -> Result<CMatrix> {
        let interp = prism_interpolation(field, pair, base, point, t);
        let (proj, gap, rank) = crate::linalg::spectral_projection_above(&interp, 0.5);
        if gap < config.min_gap || rank != k {
            return Err(Error::GapLost {
                context: format!(
                    "transport path at {} loses the gap at t = {t:.4}",
                    point.label(base.names())
                ),
            });
        }
        Ok(proj)
    };
    let start = rounded(0.0)?;
    let mut total = start.clone();
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        total = rounded(t)? * total;
    }
    let end = rounded(1.0)?;
    // polar correction on the fibers
    let u0 = projection_frame(&start, k)?;
    let u1 = projection_frame(&end, k)?;
    let small = u1.adjoint() * &total * &u0;
    let smallest = crate::linalg::min_singular_value(&small);
    if smallest < 0.25 {
        return Err(Error::GapLost {
            context: format!(
                "transport composition nearly singular ({smallest:.3e}) at {}",
                point.label(base.names())
            ),
        });
    }
    let unitary = loewdin_orthonormalize(&small)?;
    Ok(u1 * unitary * u0.adjoint())
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub stabilization_before: usize,
    pub split_margin: f64,
    pub split_pair_margin: Option<f64>,
    pub transport_min_singular: f64,
    pub dropped_coordinate_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnstabilizeReport {
    pub k1: usize,
    pub rounds: Vec<RoundReport>,
    pub certificate: MorphismReport,
    /// Max residual of the result against `φ_A` over the marked samples.
    pub boundary_residual: f64,
}

pub struct UnstabilizeOutcome {
    /// Certified isomorphism `E1 ≅ E2` extending `φ_A`.
    pub isomorphism: BundleMorphism,
    pub report: UnstabilizeReport,
}

/// De-stabilize a witnessed stable isomorphism into an isomorphism, one
/// trivial summand per round.
pub fn unstabilize(
    e1: &Arc<ProjectionField>,
    e2: &Arc<ProjectionField>,
    witness: &StableIsoWitness,
    config: &Config,
) -> Result<UnstabilizeOutcome> {
    validate_witness(e1, e2, witness, config)?;
    let kind = e1.kind();
    let step = kind.trivial_step();
    let base = e1.base().clone();
    let Thresholds { k1, .. } = thresholds(kind, base.dimensions());
    if e1.rank() < k1 {
        return Err(Error::RankBelowThreshold { rank: e1.rank(), threshold: k1 });
    }

    let mut psi = witness.psi.clone();
    let mut ell = witness.ell;
    let mut rounds = Vec::new();
    while ell > 0 {
        let round_index = rounds.len() + 1;
        let round = unstabilize_round(&psi, e1, e2, ell, &base, config).map_err(|e| match e {
            Error::GapLost { context } => {
                Error::GapLost { context: format!("round {round_index}: {context}") }
            }
            other => other,
        })?;
        psi = round.0;
        rounds.push(RoundReport {
            round: round_index,
            stabilization_before: ell,
            split_margin: round.1,
            split_pair_margin: round.2,
            transport_min_singular: round.3,
            dropped_coordinate_mass: round.4,
        });
        ell -= step;
    }

    // re-home the final morphism on the original bundles
    let isomorphism = BundleMorphism::new(e1.clone(), e2.clone(), psi.values)?;
    let certificate = verify_morphism(&isomorphism, config);
    let mut boundary_residual = 0.0f64;
    for (point, value) in &witness.phi_a.values {
        if let Some(result) = isomorphism.values.get(point) {
            let (p, _, _) = e1.fiber_projection(point);
            boundary_residual = boundary_residual.max(((result - value) * p).norm());
        }
    }
    Ok(UnstabilizeOutcome {
        isomorphism,
        report: UnstabilizeReport { k1, rounds, certificate, boundary_residual },
    })
}

/// One de-stabilization round: peels the last trivial summand from
/// `E1 ⊕ θ^ell ≅ E2 ⊕ θ^ell` and returns the shortened isomorphism along
/// with (split margin, pair margin, transport min singular value, dropped
/// mass).
fn unstabilize_round(
    psi: &BundleMorphism,
    e1: &Arc<ProjectionField>,
    e2: &Arc<ProjectionField>,
    ell: usize,
    base: &Arc<InvolutiveComplex>,
    config: &Config,
) -> Result<(BundleMorphism, f64, Option<f64>, f64, f64)> {
    let kind = e1.kind();
    let step = kind.trivial_step();
    let n_source = e1.ambient_dim() + ell;
    let n_target = e2.ambient_dim() + ell;

    let pair = base.cylinder();
    let bundle_over_y = Arc::new(psi.source.pullback_to_cylinder(&pair, config)?);

    // trivial embedding over B: the last summand on the bottom and on A×I,
    // its ψ-preimage on the top
    let psi_inverse = psi.fiber_inverse(config)?;
    let section_coordinate = n_source - step;
    let mut boundary_section: HashMap<SamplePoint, CVector> = HashMap::new();
    for point in bundle_over_y.samples() {
        if !pair.y.in_marked(&point.support()) {
            continue;
        }
        let on_top = point.support().iter().all(|&v| v >= base.vertex_count());
        let value = if on_top {
            let below = point.map_vertices(|v| v - base.vertex_count());
            let inverse = psi_inverse.values.get(&below).ok_or_else(|| Error::Mismatch {
                context: "ψ-inverse misses a base sample".into(),
            })?;
            let mut e = CVector::zeros(n_target);
            e[section_coordinate] = Complex64::new(1.0, 0.0);
            inverse * e
        } else {
            let mut e = CVector::zeros(n_source);
            e[section_coordinate] = Complex64::new(1.0, 0.0);
            e
        };
        boundary_section.insert(point.clone(), value);
    }
    let embedding = TrivialEmbedding { sections: vec![boundary_section] };
    let outcome = split_trivial_summand(
        &bundle_over_y,
        Some(&embedding),
        SplitOptions { force: false, peels: Some(1) },
        config,
    )?;
    let split_margin = outcome.sections[0].margin;
    let split_pair_margin = outcome.sections[0].pair_margin;

    // transport the complement from the bottom end to the top end
    let transport = transport_isomorphism(&outcome.e0, &pair, base, config)?;
    let transport_report = verify_morphism(&transport, config);

    // compose: bottom complement = (E1 ⊕ θ^{ell-step}) padded by zeros,
    // then ψ into E2 ⊕ θ^ell, then kill the last summand
    let mut killer = CMatrix::identity(n_target, n_target);
    for i in 0..step {
        killer[(n_target - 1 - i, n_target - 1 - i)] = Complex64::new(0.0, 0.0);
    }
    let mut values = HashMap::with_capacity(transport.values.len());
    let mut dropped = 0.0f64;
    for (point, t_value) in &transport.values {
        let psi_value = psi.values.get(point).ok_or_else(|| Error::Mismatch {
            context: "ψ misses a base sample".into(),
        })?;
        let full = &killer * psi_value * t_value;
        // the shortened morphism drops the zeroed trailing coordinates
        for row in 0..step {
            for col in 0..n_source {
                dropped = dropped.max(full[(n_target - 1 - row, col)].norm());
            }
        }
        for col in 0..step {
            for row in 0..n_target {
                dropped = dropped.max(full[(row, n_source - 1 - col)].norm());
            }
        }
        let shortened = full.view((0, 0), (n_target - step, n_source - step)).into_owned();
        values.insert(point.clone(), shortened);
    }
    let source = Arc::new(shortened_padded_field(e1, ell - step, config)?);
    let target = Arc::new(shortened_padded_field(e2, ell - step, config)?);
    let next = BundleMorphism::new(source, target, values)?;
    Ok((next, split_margin, split_pair_margin, transport_report.min_singular_value, dropped))
}

fn shortened_padded_field(
    field: &ProjectionField,
    ell: usize,
    config: &Config,
) -> Result<ProjectionField> {
    if ell == 0 {
        return Ok(field.clone());
    }
    let spec = crate::symmetry::TrivialBundleSpec::new(
        field.kind(),
        ell,
        ell,
        field.base().clone(),
    )?;
    let theta = crate::bundles::trivial_bundle(&spec, config)?;
    crate::bundles::direct_sum(field, &theta, config)
}
