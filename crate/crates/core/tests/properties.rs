//! Invariants checked on randomly generated inputs.

use num_complex::Complex64;
use proptest::prelude::*;

use upccd::circuit::{exact_expand, small_angle_expand, upccd_state, UpccdTerm};
use upccd::exactref::singlet_sector_ground_state;
use upccd::integrals::{parse_fcidump, rotate_orbitals, synthetic_integrals, write_fcidump, OrbitalRotation};
use upccd::linalg::{ground_state, EigenConfig};
use upccd::pairspace::doci_matrix;
use upccd::qpe::{qpe_distribution, EvolutionSpec};

fn rotation(norb: usize, params: &[f64]) -> OrbitalRotation {
    let mut rot = OrbitalRotation::identity(norb);
    let n = rot.parameter_pairs().len();
    rot.set_params(&params[..n]);
    rot
}

fn max_eri_difference(a: &upccd::integrals::IntegralSet, b: &upccd::integrals::IntegralSet) -> f64 {
    let n = a.norb;
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in 0..n {
            worst = worst.max((a.h[(p, q)] - b.h[(p, q)]).abs());
            for r in 0..n {
                for s in 0..n {
                    worst = worst.max((a.eri(p, q, r, s) - b.eri(p, q, r, s)).abs());
                }
            }
        }
    }
    worst
}

/// Three distinct occupied-virtual pairs for two pairs in five orbitals.
fn three_terms() -> impl Strategy<Value = Vec<UpccdTerm>> {
    let pairs: Vec<(usize, usize)> = (0..2).flat_map(|i| (2..5).map(move |a| (i, a))).collect();
    (proptest::sample::subsequence(pairs, 3), proptest::collection::vec(-1.0f64..1.0, 3))
        .prop_map(|(ps, th)| ps.into_iter().zip(th).map(|((i, a), theta)| UpccdTerm { i, a, theta }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fcidump_round_trip_is_bit_exact(norb in 1usize..=6, half in 0usize..=3, seed in any::<u64>()) {
        let nelec = (2 * half).min(2 * norb);
        let ints = synthetic_integrals(norb, nelec, seed).unwrap();
        let again = parse_fcidump(&write_fcidump(&ints)).unwrap();
        prop_assert_eq!(again.norb, norb);
        prop_assert_eq!(again.nelec, nelec);
        prop_assert_eq!(again.e_core, ints.e_core);
        prop_assert_eq!(max_eri_difference(&ints, &again), 0.0);
    }

    #[test]
    fn exact_energy_is_rotation_invariant(
        seed in any::<u64>(),
        params in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let ints = synthetic_integrals(4, 4, seed).unwrap();
        let rotated = rotate_orbitals(&ints, &rotation(4, &params)).unwrap();
        let (_, a) = singlet_sector_ground_state(&ints).unwrap();
        let (_, b) = singlet_sector_ground_state(&rotated).unwrap();
        prop_assert!((a.energy - b.energy).abs() < 1e-9, "{} vs {}", a.energy, b.energy);
    }

    #[test]
    fn rotation_then_inverse_restores_integrals(
        seed in any::<u64>(),
        params in proptest::collection::vec(-1.0f64..1.0, 10),
    ) {
        let ints = synthetic_integrals(5, 4, seed).unwrap();
        let forward = rotation(5, &params);
        let back: Vec<f64> = forward.params().iter().map(|x| -x).collect();
        let restored = rotate_orbitals(&rotate_orbitals(&ints, &forward).unwrap(), &rotation(5, &back)).unwrap();
        prop_assert!(max_eri_difference(&ints, &restored) < 1e-10);
    }

    #[test]
    fn doci_lies_between_exact_and_reference(seed in any::<u64>(), norb in 2usize..=5) {
        let ints = synthetic_integrals(norb, 2, seed).unwrap();
        let doci = doci_matrix(&ints).unwrap();
        let e_doci = ground_state(&doci, &EigenConfig::default()).unwrap().energy;
        let (_, exact) = singlet_sector_ground_state(&ints).unwrap();
        prop_assert!(exact.energy <= e_doci + 1e-10);
        prop_assert!(e_doci <= doci.diagonal()[0] + 1e-10);
    }

    #[test]
    fn small_angle_error_is_third_order(terms in three_terms(), scale in 1e-3f64..0.1) {
        let scaled: Vec<UpccdTerm> = terms.iter().map(|t| UpccdTerm { theta: t.theta * scale, ..*t }).collect();
        let exact = exact_expand(&scaled, 5, 2).unwrap().to_pair_state();
        let approx = small_angle_expand(&scaled, 5, 2).unwrap().to_pair_state().normalized();
        let dist: f64 = exact.coefficients.iter().zip(&approx.coefficients).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let total: f64 = scaled.iter().map(|t| t.theta.abs()).sum();
        prop_assert!(dist <= total.powi(3), "{dist} > {}", total.powi(3));
    }

    #[test]
    fn upccd_states_are_normalized(terms in three_terms()) {
        let s = upccd_state(&terms, 5, 2).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qpe_distribution_is_a_probability(seed in any::<u64>(), bits in 2usize..=7) {
        let ints = synthetic_integrals(3, 2, seed).unwrap();
        let spec = EvolutionSpec::pair_space(&ints, 1).unwrap();
        let psi: Vec<Complex64> = (0..spec.dim()).map(|k| Complex64::new(1.0 + k as f64, 0.5)).collect();
        let p = qpe_distribution(&psi, &spec, bits).unwrap();
        prop_assert_eq!(p.len(), 1 << bits);
        prop_assert!(p.iter().all(|&x| x >= -1e-15));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
