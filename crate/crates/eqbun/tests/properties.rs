//! Property tests for the structural invariants: cylinder dimension shifts,
//! subdivision stability, involutivity of the structure maps, averaging,
//! and sampling exactness.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use eqbun::bundles::{
    orthogonal_complement_of_section, trivial_bundle, verify_morphism, SampledSection,
};
use eqbun::linalg::{CMatrix, CVector};
use eqbun::sampling::{lattice_points, pl_evaluate, DilatedPoint, SamplePoint};
use eqbun::symmetry::{
    equivariant_average, equivariance_residual, SymmetryKind, SymmetryType, TrivialBundleSpec,
};
use eqbun::z2complex::InvolutiveComplex;
use eqbun::Config;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random valid involutive complexes: a few fixed vertices, a few free
/// orbit pairs, random small simplices closed under the involution, and a
/// random invariant marked part.
fn complex_strategy() -> impl Strategy<Value = InvolutiveComplex> {
    (0usize..3, 1usize..4, proptest::collection::vec(proptest::collection::vec(0usize..8, 1..4), 1..8), any::<u64>())
        .prop_filter_map("valid complex", |(fixed, pairs, raw_simplices, marked_bits)| {
            let n = fixed + 2 * pairs;
            let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let tau: Vec<usize> = (0..n)
                .map(|v| {
                    if v < fixed {
                        v
                    } else if (v - fixed) % 2 == 0 {
                        v + 1
                    } else {
                        v - 1
                    }
                })
                .collect();
            let mut simplices: BTreeSet<Vec<usize>> = BTreeSet::new();
            for raw in raw_simplices {
                let mut simplex: Vec<usize> = raw.into_iter().map(|v| v % n).collect();
                simplex.sort_unstable();
                simplex.dedup();
                // keep the cell dichotomy: all fixed, or no vertex together
                // with its image
                let all_fixed = simplex.iter().all(|&v| tau[v] == v);
                let free_ok = simplex
                    .iter()
                    .all(|&v| tau[v] == v || simplex.binary_search(&tau[v]).is_err());
                if !(all_fixed || free_ok) {
                    continue;
                }
                let image: Vec<usize> = {
                    let mut image: Vec<usize> = simplex.iter().map(|&v| tau[v]).collect();
                    image.sort_unstable();
                    image
                };
                simplices.insert(simplex);
                simplices.insert(image);
            }
            let maximal: Vec<Vec<usize>> = simplices.into_iter().collect();
            let mut marked = Vec::new();
            for (i, simplex) in maximal.iter().enumerate() {
                if (marked_bits >> (i % 64)) & 1 == 1 {
                    let image: Vec<usize> = {
                        let mut image: Vec<usize> =
                            simplex.iter().map(|&v| tau[v]).collect();
                        image.sort_unstable();
                        image
                    };
                    marked.push(simplex.clone());
                    marked.push(image);
                }
            }
            InvolutiveComplex::from_parts(names, tau, maximal, marked).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cylinder_adds_one_to_nonnegative_profile_entries(complex in complex_strategy()) {
        let profile = complex.dimensions();
        let pair = complex.cylinder();
        let shifted = pair.y.dimensions();
        if profile.d0 >= 0 {
            prop_assert_eq!(shifted.d0, profile.d0 + 1);
        } else {
            prop_assert_eq!(shifted.d0, -1);
        }
        if profile.d1 >= 0 {
            prop_assert_eq!(shifted.d1, profile.d1 + 1);
        } else {
            prop_assert_eq!(shifted.d1, -1);
        }
    }

    #[test]
    fn fixed_subcomplex_is_idempotent(complex in complex_strategy()) {
        let fixed = complex.fixed_subcomplex();
        let again = fixed.complex.fixed_subcomplex();
        prop_assert_eq!(&again.complex, &fixed.complex);
        for v in 0..fixed.complex.vertex_count() {
            prop_assert_eq!(fixed.complex.tau(v), v);
        }
    }

    #[test]
    fn barycentric_subdivision_preserves_the_profile(complex in complex_strategy()) {
        let subdivided = complex.barycentric_subdivision();
        prop_assert_eq!(subdivided.dimensions(), complex.dimensions());
    }

    #[test]
    fn structure_conjugation_is_involutive(
        entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        quaternionic in any::<bool>(),
    ) {
        let kind = if quaternionic { SymmetryKind::Quaternionic } else { SymmetryKind::Real };
        let sym = SymmetryType::new(kind, 4).unwrap();
        let m = CMatrix::from_fn(4, 4, |i, j| {
            let (re, im) = entries[4 * i + j];
            c(re, im)
        });
        let twice = sym.conjugate_endo(&sym.conjugate_endo(&m).unwrap()).unwrap();
        let scale = m.norm().max(1e-3);
        prop_assert!((twice - &m).norm() / scale < 1e-14);
    }

    #[test]
    fn averaged_fields_are_equivariant_and_stay_put(
        complex in complex_strategy(),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let sym = SymmetryType::new(SymmetryKind::Real, 2).unwrap();
        let field: Vec<CMatrix> = (0..complex.vertex_count())
            .map(|_| CMatrix::from_fn(2, 2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let averaged = equivariant_average(&sym, &field, &complex).unwrap();
        prop_assert!(equivariance_residual(&sym, &averaged, &complex) < 1e-12);
        let twice = equivariant_average(&sym, &averaged, &complex).unwrap();
        for (a, b) in averaged.iter().zip(twice.iter()) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn pl_evaluation_reproduces_affine_data(
        numerators in proptest::collection::vec(0i64..12, 3),
        coefficients in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let total: i64 = numerators.iter().sum();
        prop_assume!(total > 0);
        // affine function on the 2-simplex, dilated coordinates scaled so
        // the weights sum to r * den
        let r = 3u32;
        let den = total;
        let num: Vec<i64> = numerators.iter().map(|&x| x * r as i64).collect();
        let point = DilatedPoint { num, den };
        let simplex = vec![0usize, 1, 2];
        let got = pl_evaluate(&simplex, r, &point, &mut |p: &SamplePoint| {
            let mut value = 0.0;
            for &(v, w) in &p.parts {
                value += coefficients[v] * w as f64 / p.den as f64;
            }
            Some(CMatrix::from_element(1, 1, c(value, 0.0)))
        })
        .unwrap();
        let expected: f64 = (0..3)
            .map(|i| coefficients[i] * numerators[i] as f64 / total as f64)
            .sum();
        prop_assert!((got[(0, 0)].re - expected).abs() < 1e-10);
    }

    #[test]
    fn pullback_to_cylinder_preserves_rank_and_gap(
        complex in complex_strategy(),
        rank in 0usize..3,
    ) {
        let base = Arc::new(complex);
        let config = Config::default();
        let spec = TrivialBundleSpec::new(SymmetryKind::Real, rank, 3, base.clone()).unwrap();
        let field = trivial_bundle(&spec, &config).unwrap();
        let pair = base.cylinder();
        let pulled = field.pullback_to_cylinder(&pair, &config).unwrap();
        prop_assert_eq!(pulled.rank(), field.rank());
        prop_assert!((pulled.gap() - field.gap()).abs() < 1e-15);
    }

    #[test]
    fn complement_certificate_margin_scales_with_the_section(
        eps in 0.01f64..2.0,
    ) {
        // constant section of length eps in the trivial plane over a point:
        // the certificate's smallest fiber singular value is at least
        // min(1, eps) / 2
        let base = Arc::new(
            eqbun::z2complex::validate_complex(&eqbun::z2complex::RawComplex {
                vertices: vec!["p".into()],
                maximal_simplices: vec![vec!["p".into()]],
                involution: vec![],
                subcomplex_a: vec![],
            })
            .unwrap(),
        );
        let config = Config::default();
        let field = Arc::new(
            trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, 2, 2, base).unwrap(),
                &config,
            )
            .unwrap(),
        );
        let values = field
            .samples()
            .iter()
            .map(|p| {
                let mut v = CVector::zeros(2);
                v[0] = c(eps, 0.0);
                (p.clone(), v)
            })
            .collect();
        let section = SampledSection::measure(&field, values);
        let (e0, certificate) =
            orthogonal_complement_of_section(&field, &section, &config).unwrap();
        prop_assert_eq!(e0.rank() + 1, field.rank());
        let report = verify_morphism(&certificate, &config);
        prop_assert!(report.min_singular_value >= 0.5 * eps.min(1.0));
    }
}
