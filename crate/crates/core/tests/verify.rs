mod common;

use common::{rng, state};
use nalgebra::{DMatrix, DVector};
use spincm_core::dynamics::{gradient, ChainKind, DarbouxChart, GradientMode, HamiltonianId};
use spincm_core::liealg::GroupElement;
use spincm_core::sampling::random_sl;
use spincm_core::verify::probes::{expected_dim_s, k_orbit_dim};
use spincm_core::verify::suites::random_pair_state;
use spincm_core::verify::{
    dimension_probe, liouville_count_probe, numerical_rank, psi_equivariance_check, psi_leaf_residual, psi_map, run_suite,
    starred_moment, Bound, ChainSpec, Observation, Report, Suite, SuiteOptions,
};
use spincm_core::{Error, LieContext};

#[test]
fn numerical_rank_of_simple_rows() {
    let e = |i: usize| DVector::from_fn(4, |j, _| if i == j { 1.0 } else { 0.0 });
    assert_eq!(numerical_rank(&[e(0), e(1), &e(0) * 3.0 + e(1)]).unwrap().rank, 2);
    assert_eq!(numerical_rank(&[e(0) * 1e-14, e(2)]).unwrap().rank, 1);
    assert_eq!(numerical_rank(&[]).unwrap().rank, 0);
    let near = &e(0) + &e(1) * 1e-8;
    assert!(matches!(numerical_rank(&[e(0), near]), Err(Error::RankAmbiguous(_))));
    assert!(numerical_rank(&[DVector::from_element(2, f64::NAN)]).is_err());
}

#[test]
fn duplicated_hamiltonian_does_not_raise_rank() {
    let (ctx, s) = state(ChainKind::Periodic, 3, 2, 2);
    let chart = DarbouxChart::for_state(&s);
    let z = chart.pack(&s).unwrap();
    let mut rows: Vec<DVector<f64>> = s
        .hamiltonian_family()
        .iter()
        .map(|h| gradient(h, &ctx, &chart, z.as_slice(), GradientMode::Analytic).unwrap())
        .collect();
    let base = numerical_rank(&rows).unwrap().rank;
    let dup = gradient(&HamiltonianId { site: 1, degree: 2 }, &ctx, &chart, z.as_slice(), GradientMode::Analytic).unwrap();
    rows.push(dup * 2.5);
    assert_eq!(numerical_rank(&rows).unwrap().rank, base);
    assert_eq!(base, liouville_count_probe(&ctx, &s).unwrap().rank);
}

#[test]
fn liouville_count_for_rank_one_chains() {
    for (n, sites) in [(2, 1), (2, 2), (3, 2), (4, 3)] {
        for seed in 0..5 {
            let (ctx, s) = state(ChainKind::Periodic, n, sites, seed);
            assert_eq!(liouville_count_probe(&ctx, &s).unwrap().rank, sites * (n - 1), "N={n} n={sites}");
        }
    }
}

#[test]
fn dimension_counts_match_orbit_data() {
    for (n, sites) in [(2, 2), (3, 2)] {
        for seed in 0..3 {
            let (ctx, s) = state(ChainKind::Periodic, n, sites, seed);
            let p = dimension_probe(&ctx, &s, None).unwrap();
            assert_eq!(p.dim_s, 2 * sites * (n - 1));
            assert_eq!(p.dim_s, expected_dim_s(&s));
            assert_eq!(p.dim_b, sites * (n - 1));
            assert_eq!(p.dim_s, p.dim_p + p.dim_b);
        }
    }
    let (ctx, s) = state(ChainKind::Open, 3, 1, 1);
    let p = dimension_probe(&ctx, &s, None).unwrap();
    assert_eq!(p.dim_s, expected_dim_s(&s));
    assert_eq!(p.dim_b, 2 * 2);
}

#[test]
fn k_orbit_dimensions() {
    assert_eq!(k_orbit_dim(3, &[0.0]), 0);
    assert_eq!(k_orbit_dim(3, &[1.0]), 2);
    assert_eq!(k_orbit_dim(4, &[1.0, 2.0]), 4);
    assert_eq!(k_orbit_dim(4, &[1.0, 1.0]), 2);
    assert_eq!(k_orbit_dim(4, &[1.0, 0.0]), 4);
    assert_eq!(k_orbit_dim(5, &[2.0, 1.0]), 8);
}

#[test]
fn psi_with_identity_first_link() {
    let mut es = random_pair_state(3, &mut rng(4));
    es.g[0] = GroupElement::identity(3);
    let out = psi_map(&es).unwrap();
    assert_eq!(out.x[0].0, -&es.x[0].0);
    assert!((&out.x[1].0 - &es.x[1].0).amax() < 1e-14);
    assert_eq!(out.g[0].0, DMatrix::identity(3, 3));
    assert!((&out.g[1].0 - &es.g[1].0).amax() < 1e-14);
}

#[test]
fn psi_is_equivariant_and_swaps_leaves() {
    for n in 2..=4 {
        let ctx = LieContext::new(n).unwrap();
        for seed in 0..20 {
            let mut r = rng(seed);
            let es = random_pair_state(n, &mut r);
            let (h1, h2) = (random_sl(n, 0.3, &mut r), random_sl(n, 0.3, &mut r));
            assert!(psi_equivariance_check(&es, &h1, &h2).unwrap() < 1e-12);
            assert!(psi_leaf_residual(&ctx, &es).unwrap() < 1e-10);
            let (m1, _) = starred_moment(&es).unwrap();
            assert!((m1 - (&es.x[0].0 + &es.x[1].0)).amax() == 0.0);
        }
    }
}

#[test]
fn zero_tolerance_override_is_strict() {
    let obs = vec![Observation::below("case", 0.0, 1.0), Observation::below("case", 1e-15, 1.0)];
    let loose = Report::from_observations("x", 2, 1.0, obs.clone(), None);
    assert!(loose.pass);
    let strict = Report::from_observations("x", 2, 1.0, obs, Some(0.0));
    assert!(!strict.pass);
    assert_eq!(strict.tolerance, 0.0);
    let exact = Report::from_observations("x", 1, 0.0, vec![Observation::new("e", 0.0, Bound::Exact)], None);
    assert!(exact.pass);
    let empty = Report::from_observations("x", 0, 1.0, Vec::new(), None);
    assert!(!empty.pass);
    let nan = Report::from_observations("x", 1, 1.0, vec![Observation::below("n", f64::NAN, 1.0)], None);
    assert!(!nan.pass);
}

#[test]
fn suite_with_tol_zero_fails_with_nonzero_residual() {
    let opts = SuiteOptions { trials: Some(3), tol: Some(0.0), chains: Some(vec![ChainSpec::periodic(3, 2)]), ..Default::default() };
    let r = run_suite(Suite::Dk, &opts).unwrap();
    assert!(!r.pass);
    assert!(r.max_residual > 0.0);
}

#[test]
fn suites_are_deterministic() {
    for suite in [Suite::Dk, Suite::Commute, Suite::Psi] {
        let opts = SuiteOptions { seed: 42, trials: Some(4), ..Default::default() };
        let a = run_suite(suite, &opts).unwrap().to_json().unwrap();
        let b = run_suite(suite, &opts).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{suite}");
        let other = SuiteOptions { seed: 43, ..opts };
        assert_ne!(a, run_suite(suite, &other).unwrap().to_json().unwrap(), "{suite}");
    }
}

#[test]
fn suite_names_round_trip() {
    for s in Suite::INDIVIDUAL {
        assert_eq!(s.name().parse::<Suite>().unwrap(), s);
    }
    assert!("bogus".parse::<Suite>().is_err());
    assert!(ChainSpec::open(1, 1).validate().is_err());
}

#[test]
fn default_suites_pass() {
    for suite in [Suite::Dk, Suite::Psi, Suite::Liouville] {
        let r = run_suite(suite, &SuiteOptions { trials: Some(10), ..Default::default() }).unwrap();
        assert!(r.pass, "{suite}: {:?}", r.failures().collect::<Vec<_>>());
    }
}
