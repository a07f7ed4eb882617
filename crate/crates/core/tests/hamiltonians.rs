mod common;

use common::{rel, state};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spincm_core::dynamics::extended::embed_extended;
use spincm_core::dynamics::{ChainKind, HamiltonianId, RadialState};
use spincm_core::openchain::{self, OpenRadialState};
use spincm_core::orbits::{KOrbitPoint, RankOneOrbitPoint};
use spincm_core::periodic::{self, PeriodicRadialState};
use spincm_core::verify::suites::{open_dk_residual, periodic_dk_residual};
use spincm_core::LieContext;

fn periodic_state(n: usize, sites: usize, seed: u64) -> (LieContext, PeriodicRadialState<f64>) {
    match state(ChainKind::Periodic, n, sites, seed) {
        (ctx, RadialState::Periodic(s)) => (ctx, s),
        _ => unreachable!(),
    }
}

fn open_state(n: usize, sites: usize, seed: u64) -> (LieContext, OpenRadialState<f64>) {
    match state(ChainKind::Open, n, sites, seed) {
        (ctx, RadialState::Open(s)) => (ctx, s),
        _ => unreachable!(),
    }
}

fn all_hamiltonians(ctx: &LieContext, s: &RadialState<f64>) -> Vec<f64> {
    s.hamiltonian_family().iter().map(|h| s.hamiltonian(ctx, *h).unwrap()).collect()
}

fn assert_same(a: &[f64], b: &[f64], tol: f64) {
    for (x, y) in a.iter().zip(b) {
        assert!(rel(*x, *y) < tol, "{x} vs {y}");
    }
}

#[test]
fn reconstruction_reproduces_the_moment_map() {
    for kind in [ChainKind::Periodic, ChainKind::Open] {
        for (n, sites) in [(2, 1), (3, 2), (4, 3)] {
            let (ctx, s) = state(kind, n, sites, 31 + n as u64);
            let es = embed_extended(&ctx, &s).unwrap();
            let expected = match &s {
                RadialState::Periodic(p) => p.spin_matrices(),
                RadialState::Open(o) => o.spin_matrices(),
            };
            for (got, want) in es.spin_moments().unwrap().iter().zip(&expected) {
                assert!((got - want).amax() < 1e-10 * want.amax().max(1.0), "{kind:?} N={n}");
            }
            if let RadialState::Open(o) = &s {
                let (l, r) = es.boundary_moments().unwrap();
                assert!((l - &o.mu_left.matrix).amax() < 1e-10);
                assert!((r - &o.mu_right.matrix).amax() < 1e-10);
            }
        }
    }
}

#[test]
fn free_particle_limit() {
    let ctx = LieContext::new(3).unwrap();
    let e = |i: usize| DVector::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 });
    let spins = vec![RankOneOrbitPoint::new_unchecked(1.5, e(0), e(0) * 1.5)];
    let p = DVector::from_vec(vec![0.4, -0.1, -0.3]);
    let q = DVector::from_vec(vec![1.0, 0.0, -1.0]);
    let s = OpenRadialState { mu_left: KOrbitPoint::zero(3), spins, mu_right: KOrbitPoint::zero(3), p: p.clone(), q };
    let h2: f64 = openchain::h2_open_closed(&ctx, &s).unwrap();
    assert!((h2 - 0.5 * ctx.cartan_pairing(&p, &p)).abs() < 1e-14);
    let c2: f64 = openchain::hamiltonian_open(&ctx, &s, 1, 2).unwrap();
    assert!((c2 - p.dot(&p)).abs() < 1e-14);
}

#[test]
fn two_particle_sutherland_potential() {
    let ctx = LieContext::new(2).unwrap();
    let (_, s) = periodic_state(2, 1, 17);
    let mu = s.total_spin();
    let x = s.q[0] - s.q[1];
    let oracle = 0.5 * s.p.dot(&s.p) - mu[(0, 1)] * mu[(1, 0)] / (4.0 * (x / 2.0).sinh().powi(2));
    let closed = periodic::h2_closed_form_rescaled(&ctx, &s).unwrap();
    assert!((closed - oracle).abs() < 1e-13 * oracle.abs().max(1.0));
    let full = periodic::h2_closed_form(&ctx, &s).unwrap();
    assert!((full - ctx.killing_scale() * closed).abs() < 1e-12 * full.abs().max(1.0));
}

#[test]
fn closed_form_h2_matches_last_site() {
    for (n, sites) in [(2, 2), (3, 3), (5, 2)] {
        let (ctx, s) = periodic_state(n, sites, 3 + n as u64);
        let a = periodic::h2_closed_form(&ctx, &s).unwrap();
        let b = periodic::h2(&ctx, &s, sites).unwrap();
        assert!(rel(a, b) < 1e-11, "periodic N={n}: {a} vs {b}");
        let (ctx, s) = open_state(n, sites, 5 + n as u64);
        let a = openchain::h2_open_closed(&ctx, &s).unwrap();
        let b = openchain::h2_open(&ctx, &s, sites).unwrap();
        assert!(rel(a, b) < 1e-11, "open N={n}: {a} vs {b}");
    }
}

#[test]
fn degenerate_q_is_rejected() {
    let (ctx, mut s) = periodic_state(3, 2, 1);
    s.q = DVector::from_vec(vec![0.5, 0.5, -1.0]);
    assert!(periodic::hamiltonian(&ctx, &s, 1, 2).is_err());
    assert!(periodic::kzb_d(&ctx, &s, 2).is_err());
}

#[test]
fn felder_r_matrix_forms_agree() {
    let (ctx, s) = periodic_state(4, 3, 21);
    for k in 1..=3 {
        for l in 1..=3 {
            if k != l {
                let a = periodic::felder_r(&ctx, &s, k, l).unwrap();
                let b = periodic::felder_r_positive(&ctx, &s, k, l).unwrap();
                assert!(rel(a, b) < 1e-12);
            }
        }
    }
}

#[test]
fn theta_twisted_r_matrix_symmetry() {
    let (ctx, s) = open_state(4, 3, 22);
    for k in 1..=3 {
        for l in 1..=3 {
            if k != l {
                let a = openchain::theta_twist_r(&ctx, &s, k, l).unwrap();
                let b = openchain::theta_twist_r(&ctx, &s, l, k).unwrap();
                assert!(rel(a, b) < 1e-12);
            }
        }
    }
}

fn permute_periodic(s: &PeriodicRadialState<f64>, perm: &[usize]) -> PeriodicRadialState<f64> {
    let pv = |v: &DVector<f64>| DVector::from_fn(v.len(), |i, _| v[perm[i]]);
    let spins = s.spins.iter().map(|sp| RankOneOrbitPoint::new_unchecked(sp.xi, pv(&sp.a), pv(&sp.b))).collect();
    PeriodicRadialState::new_unchecked(spins, pv(&s.p), pv(&s.q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kzb_identity(seed in any::<u64>(), n in 2usize..=5, sites in 2usize..=4) {
        let (ctx, s) = periodic_state(n, sites, seed);
        for k in 2..=sites {
            prop_assert!(periodic_dk_residual(&ctx, &s, k).unwrap() < 1e-10);
        }
    }

    #[test]
    fn boundary_kzb_identity(seed in any::<u64>(), n in 2usize..=5, sites in 1usize..=4) {
        let (ctx, s) = open_state(n, sites, seed);
        for k in 1..=sites {
            prop_assert!(open_dk_residual(&ctx, &s, k).unwrap() < 1e-10);
        }
    }

    #[test]
    fn hamiltonians_are_spin_gauge_invariant(seed in any::<u64>(), n in 2usize..=4, lambda in 0.3f64..3.0) {
        let (ctx, s) = periodic_state(n, 2, seed);
        let before = all_hamiltonians(&ctx, &RadialState::Periodic(s.clone()));
        let mut moved = s.clone();
        moved.spins = s.spins.iter().map(|sp| sp.gauge_move(lambda)).collect();
        assert_same(&before, &all_hamiltonians(&ctx, &RadialState::Periodic(moved)), 1e-12);
        let h = DVector::from_fn(n, |i, _| 0.5 + 0.3 * i as f64 * lambda);
        let mut scaled = s.clone();
        scaled.spins = s
            .spins
            .iter()
            .map(|sp| RankOneOrbitPoint::new_unchecked(sp.xi, sp.a.component_mul(&h), sp.b.component_div(&h)))
            .collect();
        assert_same(&before, &all_hamiltonians(&ctx, &RadialState::Periodic(scaled)), 1e-12);
    }

    #[test]
    fn hamiltonians_are_weyl_equivariant(seed in any::<u64>(), n in 2usize..=4) {
        let (ctx, s) = periodic_state(n, 2, seed);
        let before = all_hamiltonians(&ctx, &RadialState::Periodic(s.clone()));
        let perm: Vec<usize> = (0..n).rev().collect();
        let after = all_hamiltonians(&ctx, &RadialState::Periodic(permute_periodic(&s, &perm)));
        assert_same(&before, &after, 1e-11);
    }

    #[test]
    fn open_hamiltonians_are_sign_invariant(seed in any::<u64>(), n in 2usize..=4, mask in 0u32..16) {
        let (ctx, s) = open_state(n, 2, seed);
        let before = all_hamiltonians(&ctx, &RadialState::Open(s.clone()));
        let mut signs: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        if signs.iter().product::<f64>() < 0.0 {
            signs[n - 1] = -signs[n - 1];
        }
        let m = DMatrix::from_diagonal(&DVector::from_vec(signs.clone()));
        let sv = DVector::from_vec(signs);
        let mut t = s.clone();
        t.spins = s.spins.iter().map(|sp| RankOneOrbitPoint::new_unchecked(sp.xi, sp.a.component_mul(&sv), sp.b.component_mul(&sv))).collect();
        t.mu_left = KOrbitPoint::from_matrix(&m * &s.mu_left.matrix * &m).unwrap();
        t.mu_right = KOrbitPoint::from_matrix(&m * &s.mu_right.matrix * &m).unwrap();
        assert_same(&before, &all_hamiltonians(&ctx, &RadialState::Open(t)), 1e-12);
    }
}

#[test]
fn hamiltonian_ids_cover_every_site_and_degree() {
    let (_, s) = state(ChainKind::Open, 3, 2, 0);
    let fam = s.hamiltonian_family();
    assert_eq!(fam.len(), 3 * 2);
    assert!(fam.contains(&HamiltonianId { site: 0, degree: 3 }));
    let (_, s) = state(ChainKind::Periodic, 4, 2, 0);
    assert_eq!(s.hamiltonian_family().len(), 2 * 3);
}
