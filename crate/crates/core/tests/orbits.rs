mod common;

use common::rng;
use nalgebra::DVector;
use proptest::prelude::*;
use spincm_core::liealg::{adjoint_star, AlgebraVector, GroupElement};
use spincm_core::orbits::{
    constraint_residual_max, embed_rank1, factor_rank1, k_spectrum, local_spins, normalize_gauge, random_special_orthogonal,
    sample_constrained, sample_k_orbit, KOrbitPoint, OrbitSpecification, RankOneOrbitPoint,
};
use spincm_core::sampling::{random_sl, random_xis};
use spincm_core::LieContext;

#[test]
fn rank_one_constructor_checks_constraint() {
    let a = DVector::from_vec(vec![1.0, 2.0, 0.0]);
    let b = DVector::from_vec(vec![0.5, 0.25, 3.0]);
    assert!(RankOneOrbitPoint::new(1.0, a.clone(), b.clone()).is_ok());
    assert!(RankOneOrbitPoint::new(1.5, a, b).is_err());
}

#[test]
fn zero_xi_is_rejected() {
    assert!(OrbitSpecification::RankOne { xi: 0.0 }.validate(3).is_err());
    assert!(OrbitSpecification::KOrbit { spectrum: vec![1.0] }.validate(3).is_ok());
    assert!(OrbitSpecification::KOrbit { spectrum: vec![1.0, 2.0] }.validate(3).is_err());
    assert!(sample_constrained(3, &[1.0, 0.0], &mut rng(0)).is_err());
}

#[test]
fn rank_one_casimir_closed_form() {
    for n in 2..=5 {
        let ctx = LieContext::new(n).unwrap();
        let spins = sample_constrained(n, &random_xis(3, (0.5, 2.0), &mut rng(n as u64)), &mut rng(40 + n as u64)).unwrap();
        for s in &spins {
            let expected = s.xi * s.xi * (1.0 - 1.0 / n as f64);
            let x = embed_rank1(s).unwrap();
            assert!(x.trace().abs() < 1e-13);
            assert!((ctx.casimir(2, &x).unwrap() - expected).abs() < 1e-12 * expected.max(1.0));
        }
    }
}

#[test]
fn factor_rank1_recovers_the_matrix() {
    let spins = sample_constrained(4, &[1.3, -0.7], &mut rng(9)).unwrap();
    for s in &spins {
        let back = factor_rank1(&s.matrix(), s.xi).unwrap();
        assert!((back.matrix() - s.matrix()).amax() < 1e-12);
        assert!((back.a.norm() - back.b.norm()).abs() < 1e-12);
    }
}

#[test]
fn local_spin_identity_off_diagonal() {
    for (n, sites, seed) in [(2, 2, 1), (3, 2, 2), (4, 3, 3), (5, 4, 4)] {
        let xis = random_xis(sites, (0.5, 2.0), &mut rng(seed));
        let spins = sample_constrained(n, &xis, &mut rng(seed + 100)).unwrap();
        let g = local_spins(&spins, 1e-10).unwrap();
        let total: f64 = xis.iter().sum();
        let mu = spins.iter().skip(1).fold(spins[0].matrix(), |acc, s| acc + s.matrix());
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let lhs = (&g[i] * &g[j]).trace();
                    let rhs = mu[(i, j)] * mu[(j, i)] - total * total / ((n * n * sites) as f64);
                    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(rhs.abs()).max(1.0), "N={n} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn k_orbit_points_keep_their_spectrum() {
    for n in 2..=5 {
        let spectrum: Vec<f64> = (0..n / 2).map(|j| 0.4 + 0.7 * j as f64).collect();
        let pt = sample_k_orbit(n, &spectrum, &mut rng(n as u64)).unwrap();
        assert!((pt.matrix.transpose() + &pt.matrix).amax() < 1e-15);
        let mut expected = spectrum.clone();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (s, e) in k_spectrum(&pt.matrix).iter().zip(&expected) {
            assert!((s - e).abs() < 1e-12);
        }
        let k = random_special_orthogonal(n, &mut rng(70 + n as u64));
        assert!((k.determinant() - 1.0).abs() < 1e-12);
        let rotated = KOrbitPoint::from_matrix(&k * &pt.matrix * k.transpose()).unwrap();
        for (s, e) in rotated.spectrum.iter().zip(&expected) {
            assert!((s - e).abs() < 1e-12);
        }
        let back = KOrbitPoint::from_coordinates(n, &pt.coordinates(), pt.spectrum.clone());
        assert_eq!(back.matrix, pt.matrix);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampler_satisfies_both_constraint_families(seed in any::<u64>(), n in 2usize..=5, sites in 1usize..=4) {
        let mut r = rng(seed);
        let xis = random_xis(sites, (0.5, 2.0), &mut r);
        let spins = sample_constrained(n, &xis, &mut r).unwrap();
        let scale = spins.iter().map(|s| s.a.amax() * s.b.amax()).fold(1.0, f64::max);
        prop_assert!(constraint_residual_max(&spins) < 1e-12 * scale);
        for s in &spins {
            prop_assert!((s.a.norm() - s.b.norm()).abs() < 1e-12 * s.a.norm());
        }
    }

    #[test]
    fn orbit_casimir_invariant_under_gauge_and_rotation(seed in any::<u64>(), n in 2usize..=5, lambda in 0.2f64..5.0) {
        let ctx = LieContext::new(n).unwrap();
        let mut r = rng(seed);
        let s = sample_constrained(n, &[1.7], &mut r).unwrap().remove(0);
        let expected = s.xi * s.xi * (1.0 - 1.0 / n as f64);
        let moved = s.gauge_move(lambda);
        prop_assert!((moved.matrix() - s.matrix()).amax() < 1e-12 * lambda.max(1.0 / lambda));
        prop_assert_eq!(normalize_gauge(&moved).unwrap().a.len(), n);
        let g = GroupElement::new(random_sl(n, 0.3, &mut r)).unwrap();
        let x = adjoint_star(&g, &AlgebraVector(s.matrix())).unwrap();
        prop_assert!((ctx.casimir(2, &x).unwrap() - expected).abs() < 1e-11 * expected.max(1.0));
    }
}
