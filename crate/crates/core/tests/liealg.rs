mod common;

use common::{rng, traceless};
use nalgebra::DMatrix;
use proptest::prelude::*;
use spincm_core::liealg::{adjoint_star, cartan_involution_alg, project_k, AlgebraVector, GroupElement};
use spincm_core::sampling::random_sl;
use spincm_core::LieContext;

#[test]
fn root_vectors_are_dual_pairs() {
    for n in 2..=5 {
        let ctx = LieContext::new(n).unwrap();
        assert_eq!(ctx.roots().len(), n * (n - 1));
        assert_eq!(ctx.positive_roots().count(), n * (n - 1) / 2);
        for &r in ctx.roots() {
            let pair = ctx.killing_form(&ctx.root_vector(r), &ctx.root_vector(r.negate())).unwrap();
            assert!((pair - 1.0).abs() < 1e-15, "N={n} {r:?}: {pair}");
            let same = ctx.killing_form(&ctx.root_vector(r), &ctx.root_vector(r)).unwrap();
            assert_eq!(same, 0.0);
        }
    }
}

#[test]
fn root_coordinates_round_trip() {
    let ctx = LieContext::new(4).unwrap();
    let y = AlgebraVector(traceless(4, &mut rng(3)));
    let rebuilt = ctx.from_components(&ctx.cartan_component(&y), |r| ctx.root_coordinate(&y, r));
    assert!((rebuilt.0 - &y.0).amax() < 1e-14);
    for &r in ctx.roots() {
        let via_pairing = ctx.killing_form(&y, &ctx.root_vector(r.negate())).unwrap();
        assert!((via_pairing - ctx.root_coordinate(&y, r)).abs() < 1e-12);
    }
}

#[test]
fn casimir_matches_eigenvalue_power_sums() {
    let mut r = rng(11);
    for n in 2..=5 {
        let ctx = LieContext::new(n).unwrap();
        let s = traceless(n, &mut r);
        let x = AlgebraVector(&s + s.transpose());
        let eig = x.0.clone().symmetric_eigen().eigenvalues;
        for d in 2..=n {
            let oracle: f64 = eig.iter().map(|l| l.powi(d as i32)).sum();
            let c = ctx.casimir(d, &x).unwrap();
            assert!((c - oracle).abs() < 1e-11 * oracle.abs().max(1.0), "N={n} d={d}");
        }
        assert!(ctx.casimir(1, &x).is_err());
        assert!(ctx.casimir(n + 1, &x).is_err());
    }
}

#[test]
fn gradient_reproduces_directional_derivative() {
    let mut r = rng(5);
    let h = 1e-5;
    for n in 2..=5 {
        let ctx = LieContext::new(n).unwrap();
        let x = AlgebraVector(traceless(n, &mut r));
        let y = AlgebraVector(traceless(n, &mut r));
        for d in 2..=n {
            let grad = ctx.gradient_invariant(d, &x).unwrap();
            assert!(grad.trace().abs() < 1e-13);
            let plus = AlgebraVector(&x.0 + &y.0 * h);
            let minus = AlgebraVector(&x.0 - &y.0 * h);
            let fd = (ctx.casimir(d, &plus).unwrap() - ctx.casimir(d, &minus).unwrap()) / (2.0 * h);
            let pairing = ctx.killing_form(&grad, &y).unwrap();
            assert!((fd - pairing).abs() < 1e-6 * fd.abs().max(1.0), "N={n} d={d}: {fd} vs {pairing}");
        }
    }
    let ctx = LieContext::new(3).unwrap();
    let x = AlgebraVector(traceless(3, &mut r));
    let g2 = ctx.gradient_invariant(2, &x).unwrap();
    assert!((g2.0 * ctx.killing_scale() / 2.0 - &x.0).amax() < 1e-14);
}

#[test]
fn cartan_involution_and_k_projection() {
    let x = AlgebraVector(traceless(4, &mut rng(8)));
    let theta2 = cartan_involution_alg(&cartan_involution_alg(&x));
    assert_eq!(theta2, x);
    let k = project_k(&x);
    assert_eq!(project_k(&k), k);
    assert!((k.0.transpose() + &k.0).amax() < 1e-15);
}

#[test]
fn killing_form_negative_definite_on_antisymmetric() {
    for n in 2..=5 {
        let ctx = LieContext::new(n).unwrap();
        let basis: Vec<AlgebraVector<f64>> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = 1.0;
                m[(j, i)] = -1.0;
                AlgebraVector(m)
            })
            .collect();
        let gram = DMatrix::from_fn(basis.len(), basis.len(), |a, b| ctx.killing_form(&basis[a], &basis[b]).unwrap());
        assert!(gram.symmetric_eigen().eigenvalues.iter().all(|l| *l < 0.0));
    }
}

#[test]
fn group_elements_require_unit_determinant() {
    let mut r = rng(2);
    let g = random_sl(3, 0.5, &mut r);
    assert!(GroupElement::new(g.clone()).is_ok());
    assert!(GroupElement::new(g * 2.0).is_err());
    let inv = GroupElement::new(random_sl(3, 0.5, &mut r)).unwrap();
    let prod = inv.mul(&inv.inverse().unwrap());
    assert!((prod.0 - DMatrix::identity(3, 3)).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn casimirs_are_conjugation_invariant(seed in any::<u64>(), n in 2usize..=5) {
        let ctx = LieContext::new(n).unwrap();
        let mut r = rng(seed);
        let x = AlgebraVector(traceless(n, &mut r));
        let g = GroupElement::new(random_sl(n, 0.4, &mut r)).unwrap();
        let y = adjoint_star(&g, &x).unwrap();
        for d in 2..=n {
            let (a, b) = (ctx.casimir(d, &x).unwrap(), ctx.casimir(d, &y).unwrap());
            prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn casimir_gradient_commutes_with_its_point(seed in any::<u64>(), n in 2usize..=5) {
        let ctx = LieContext::new(n).unwrap();
        let x = AlgebraVector(traceless(n, &mut rng(seed)));
        for d in 2..=n {
            let g = ctx.gradient_invariant(d, &x).unwrap();
            let scale = g.0.amax().max(1.0) * x.0.amax().max(1.0);
            prop_assert!(g.bracket(&x).0.amax() < 1e-12 * scale);
        }
    }

    #[test]
    fn killing_form_is_symmetric_and_invariant(seed in any::<u64>(), n in 2usize..=4) {
        let ctx = LieContext::new(n).unwrap();
        let mut r = rng(seed);
        let (x, y, z) = (AlgebraVector(traceless(n, &mut r)), AlgebraVector(traceless(n, &mut r)), AlgebraVector(traceless(n, &mut r)));
        let xy = ctx.killing_form(&x, &y).unwrap();
        prop_assert!((xy - ctx.killing_form(&y, &x).unwrap()).abs() < 1e-12 * xy.abs().max(1.0));
        let lhs = ctx.killing_form(&x.bracket(&y), &z).unwrap();
        let rhs = ctx.killing_form(&x, &y.bracket(&z)).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0));
    }
}
