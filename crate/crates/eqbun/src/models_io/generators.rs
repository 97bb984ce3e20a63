//! Seeded generators for equivariant test data: smooth random fields,
//! unitaries, projections and stable-isomorphism witnesses.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundles::{
    direct_sum, spectral_projection_bundle, trivial_bundle, BundleMorphism, ProjectionField,
};
use crate::config::Config;
use crate::error::Result;
use crate::linalg::{hermitize, unitary_exp_i, CMatrix, CVector};
use crate::symmetry::{SymmetryKind, SymmetryType, TrivialBundleSpec};
use crate::z2complex::InvolutiveComplex;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, amplitude: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-amplitude..amplitude), rng.gen_range(-amplitude..amplitude))
    })
}

/// Neighbor-averaging sweeps over the vertex graph; keeps fields smooth at
/// the lattice scale so interpolation gaps stay healthy.
fn smooth_field(base: &InvolutiveComplex, field: &mut [CMatrix], sweeps: usize) {
    let n = base.vertex_count();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for cell in base.cells_up_to_dim(1) {
        if cell.len() == 2 {
            adjacency[cell[0]].push(cell[1]);
            adjacency[cell[1]].push(cell[0]);
        }
    }
    for _ in 0..sweeps {
        let snapshot: Vec<CMatrix> = field.to_vec();
        for v in 0..n {
            if adjacency[v].is_empty() {
                continue;
            }
            let mut mean = CMatrix::zeros(snapshot[v].nrows(), snapshot[v].ncols());
            for &w in &adjacency[v] {
                mean += &snapshot[w];
            }
            mean /= Complex64::new(adjacency[v].len() as f64, 0.0);
            field[v] = (&snapshot[v] + mean) * Complex64::new(0.5, 0.0);
        }
    }
}

/// Smooth random Hermitian field with `f(τx) = C(f(x))`.
pub fn random_equivariant_hermitian(
    sym: &SymmetryType,
    base: &InvolutiveComplex,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<CMatrix> {
    let mut field: Vec<CMatrix> = (0..base.vertex_count())
        .map(|_| hermitize(&random_matrix(rng, sym.ambient_dim, amplitude)))
        .collect();
    smooth_field(base, &mut field, 3);
    (0..field.len())
        .map(|v| {
            let partner = sym.conjugate_endo_unchecked(&field[base.tau(v)]);
            hermitize(&((&field[v] + partner) * Complex64::new(0.5, 0.0)))
        })
        .collect()
}

/// Smooth random Hermitian field with the opposite symmetry,
/// `f(τx) = -C(f(x))`; `exp(i·f)` is then an equivariant unitary field.
pub fn random_antiequivariant_hermitian(
    sym: &SymmetryType,
    base: &InvolutiveComplex,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<CMatrix> {
    let mut field: Vec<CMatrix> = (0..base.vertex_count())
        .map(|_| hermitize(&random_matrix(rng, sym.ambient_dim, amplitude)))
        .collect();
    smooth_field(base, &mut field, 3);
    (0..field.len())
        .map(|v| {
            let partner = sym.conjugate_endo_unchecked(&field[base.tau(v)]);
            hermitize(&((&field[v] - partner) * Complex64::new(0.5, 0.0)))
        })
        .collect()
}

/// Smooth random equivariant unitary field `u = exp(i h)`.
pub fn random_equivariant_unitary(
    sym: &SymmetryType,
    base: &InvolutiveComplex,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<CMatrix> {
    random_antiequivariant_hermitian(sym, base, amplitude, rng)
        .iter()
        .map(unitary_exp_i)
        .collect()
}

/// Variant of [`random_equivariant_unitary`] damped to the identity on the
/// marked subcomplex, through an equivariant vertex bump.
pub fn random_equivariant_unitary_trivial_on_marked(
    sym: &SymmetryType,
    base: &InvolutiveComplex,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<CMatrix> {
    let mut generator = random_antiequivariant_hermitian(sym, base, amplitude, rng);
    for (v, h) in generator.iter_mut().enumerate() {
        if base.in_marked(&[v]) {
            *h *= Complex64::new(0.0, 0.0);
        }
    }
    generator.iter().map(unitary_exp_i).collect()
}

/// Random rank-`k` bundle: the Fermi projection of a gapped smooth random
/// equivariant Hamiltonian (flat bands plus a small fluctuation).
pub fn random_equivariant_bundle(
    kind: SymmetryKind,
    base: &Arc<InvolutiveComplex>,
    rank: usize,
    ambient: usize,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
    config: &Config,
) -> Result<ProjectionField> {
    let sym = SymmetryType::new(kind, ambient)?;
    let mut flat = CMatrix::zeros(ambient, ambient);
    for i in 0..ambient {
        // paired energies keep the flat part inside the algebra for the
        // quaternionic conjugation
        let level = match kind {
            SymmetryKind::Real => i,
            SymmetryKind::Quaternionic => i / 2,
        };
        let below = match kind {
            SymmetryKind::Real => i < rank,
            SymmetryKind::Quaternionic => 2 * (i / 2) + 1 < rank.max(1),
        };
        let sign = if below { -1.0 } else { 1.0 };
        flat[(i, i)] = Complex64::new(sign * (1.0 + 0.1 * level as f64), 0.0);
    }
    if kind == SymmetryKind::Quaternionic && rank % 2 != 0 {
        // odd quaternionic ranks need a free base; flat paired bands cannot
        // produce them, so flip one paired level below the gap
        flat[(rank - 1, rank - 1)] = Complex64::new(-1.0, 0.0);
        flat[(rank, rank)] = Complex64::new(1.0, 0.0);
    }
    let fluctuation = random_equivariant_hermitian(&sym, base, amplitude, rng);
    let hamiltonian: Vec<CMatrix> = fluctuation.iter().map(|f| &flat + f).collect();
    spectral_projection_bundle(&hamiltonian, sym, base.clone(), 0.0, config)
}

/// A stably-isomorphic pair with an explicit witness: `E2 = E1` as a field,
/// and `ψ` a smooth scrambling automorphism of `E1 ⊕ θ^ell` that restricts
/// to the identity over the marked subcomplex (so `φ_A = id`).
pub struct WitnessedPair {
    pub e1: Arc<ProjectionField>,
    pub e2: Arc<ProjectionField>,
    pub ell: usize,
    pub psi: BundleMorphism,
    pub phi_a: BundleMorphism,
}

pub fn stably_isomorphic_pair(
    kind: SymmetryKind,
    base: &Arc<InvolutiveComplex>,
    rank: usize,
    ambient: usize,
    ell: usize,
    seed: u64,
    config: &Config,
) -> Result<WitnessedPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e1 = Arc::new(random_equivariant_bundle(
        kind,
        base,
        rank,
        ambient,
        0.15,
        &mut rng,
        config,
    )?);
    let e2 = e1.clone();
    let theta = trivial_bundle(&TrivialBundleSpec::new(kind, ell, ell, base.clone())?, config)?;
    let stabilized = Arc::new(direct_sum(&e1, &theta, config)?);
    let sym = *stabilized.symmetry();
    let unitary =
        random_equivariant_unitary_trivial_on_marked(&sym, base, 0.6, &mut rng);
    let mut values = HashMap::with_capacity(stabilized.samples().len());
    for point in stabilized.samples() {
        let (p, _, _) = stabilized.fiber_projection(point);
        let mut u = CMatrix::zeros(sym.ambient_dim, sym.ambient_dim);
        for &(v, w) in &point.parts {
            u += &unitary[v] * Complex64::new(w as f64 / point.den as f64, 0.0);
        }
        values.insert(point.clone(), &p * u * &p);
    }
    let psi = BundleMorphism::new(stabilized.clone(), stabilized.clone(), values)?;
    let phi_a = BundleMorphism::identity_on(&e1).restrict_to_marked();
    Ok(WitnessedPair { e1, e2, ell, psi, phi_a })
}

/// Helper for sections constant equal to an ambient basis vector.
pub fn constant_section_values(
    field: &ProjectionField,
    coordinate: usize,
) -> HashMap<crate::sampling::SamplePoint, CVector> {
    let mut e = CVector::zeros(field.ambient_dim());
    e[coordinate] = Complex64::new(1.0, 0.0);
    field.samples().iter().map(|p| (p.clone(), e.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::verify_morphism;
    use crate::symmetry::equivariance_residual;
    use crate::z2complex::{build_torus, TorusInvolution};

    #[test]
    fn random_unitary_is_unitary_and_equivariant() {
        let base = build_torus(2, TorusInvolution::Conjugation).unwrap();
        let sym = SymmetryType::new(SymmetryKind::Real, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_equivariant_unitary(&sym, &base, 0.5, &mut rng);
        for m in &u {
            assert!((m * m.adjoint() - CMatrix::identity(3, 3)).norm() < 1e-12);
        }
        assert!(equivariance_residual(&sym, &u, &base) < 1e-12);
    }

    #[test]
    fn random_bundles_have_requested_rank_for_both_kinds() {
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let config = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let real =
            random_equivariant_bundle(SymmetryKind::Real, &base, 2, 3, 0.15, &mut rng, &config)
                .unwrap();
        assert_eq!(real.rank(), 2);
        assert!(real.gap() > 0.05);
        let quat = random_equivariant_bundle(
            SymmetryKind::Quaternionic,
            &base,
            2,
            4,
            0.1,
            &mut rng,
            &config,
        )
        .unwrap();
        assert_eq!(quat.rank(), 2);
    }

    #[test]
    fn witnessed_pair_scramble_is_an_isomorphism_trivial_on_marked() {
        let torus = build_torus(2, TorusInvolution::Conjugation).unwrap();
        // mark the subcircle with second coordinate zero
        let marked: Vec<Vec<usize>> = torus
            .maximal_simplices()
            .iter()
            .map(|s| {
                s.iter()
                    .copied()
                    .filter(|&v| torus.name_of(v).ends_with("-0"))
                    .collect::<Vec<usize>>()
            })
            .filter(|s: &Vec<usize>| !s.is_empty())
            .collect();
        let base = Arc::new(
            crate::z2complex::InvolutiveComplex::from_parts(
                torus.names().to_vec(),
                torus.tau_table().to_vec(),
                torus.maximal_simplices().to_vec(),
                marked,
            )
            .unwrap(),
        );
        let config = Config::default();
        let pair =
            stably_isomorphic_pair(SymmetryKind::Real, &base, 1, 2, 1, 7, &config).unwrap();
        let report = verify_morphism(&pair.psi, &config);
        assert!(report.is_isomorphism, "min sv {}", report.min_singular_value);
        assert!(report.equivariance_residual < 1e-10);
        // scramble restricts to the identity over the marked circle
        let on_marked = pair.psi.restrict_to_marked();
        for (point, value) in &on_marked.values {
            let (p, _, _) = pair.psi.source.fiber_projection(point);
            assert!((value - p).norm() < 1e-10);
        }
    }
}
