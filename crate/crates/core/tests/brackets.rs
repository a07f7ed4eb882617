mod common;

use common::state;
use nalgebra::DVector;
use proptest::prelude::*;
use spincm_core::dynamics::gradient::{BoundaryEntry, Coordinate, SpinEntry};
use spincm_core::dynamics::{gradient, poisson_bracket, ChainKind, DarbouxChart, GradientMode, Observable};
use spincm_core::{LieContext, Real, Result};

struct Product<A, B>(A, B);

impl<A: Observable, B: Observable> Observable for Product<A, B> {
    fn eval<T: Real>(&self, ctx: &LieContext, chart: &DarbouxChart, z: &[T]) -> Result<T> {
        Ok(self.0.eval(ctx, chart, z)? * self.1.eval(ctx, chart, z)?)
    }
}

fn setup(kind: ChainKind, n: usize, sites: usize, seed: u64) -> (LieContext, DarbouxChart, Vec<f64>) {
    let (ctx, s) = state(kind, n, sites, seed);
    let chart = DarbouxChart::for_state(&s);
    let z = chart.pack(&s).unwrap().as_slice().to_vec();
    (ctx, chart, z)
}

fn bracket<F: Observable, G: Observable>(f: &F, g: &G, ctx: &LieContext, chart: &DarbouxChart, z: &[f64]) -> f64 {
    poisson_bracket(f, g, ctx, chart, z, GradientMode::Autodiff).unwrap()
}

#[test]
fn canonical_coordinate_brackets() {
    let (ctx, chart, z) = setup(ChainKind::Periodic, 3, 2, 1);
    let n = 3.0;
    for (a, qi) in chart.q_range().enumerate() {
        for (b, pj) in chart.p_range().enumerate() {
            let expected = if a == b { 1.0 - 1.0 / n } else { -1.0 / n };
            assert!((bracket(&Coordinate(qi), &Coordinate(pj), &ctx, &chart, &z) - expected).abs() < 1e-15);
        }
    }
    for k in 1..=2 {
        for (ai, bj) in chart.a_range(k).zip(chart.b_range(k)) {
            assert_eq!(bracket(&Coordinate(ai), &Coordinate(bj), &ctx, &chart, &z), 1.0);
        }
    }
}

#[test]
fn spin_entries_satisfy_lie_poisson_relations() {
    for kind in [ChainKind::Periodic, ChainKind::Open] {
        let (ctx, chart, z) = setup(kind, 3, 2, 4);
        let mu = chart.unpack(&z).unwrap();
        let spins = match &mu {
            spincm_core::dynamics::RadialState::Periodic(s) => s.spin_matrices(),
            spincm_core::dynamics::RadialState::Open(s) => s.spin_matrices(),
        };
        let m = &spins[0];
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let got = bracket(&SpinEntry { site: 1, i, j }, &SpinEntry { site: 1, i: k, j: l }, &ctx, &chart, &z);
                        let expected = d(j, k) * m[(i, l)] - d(l, i) * m[(k, j)];
                        assert!((got - expected).abs() < 1e-12, "({i}{j}),({k}{l}): {got} vs {expected}");
                        let other = bracket(&SpinEntry { site: 1, i, j }, &SpinEntry { site: 2, i: k, j: l }, &ctx, &chart, &z);
                        assert_eq!(other, 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn boundary_entries_close_under_the_bracket() {
    let (ctx, chart, z) = setup(ChainKind::Open, 3, 1, 6);
    let e = |i, j| BoundaryEntry { right: false, i, j };
    let b01_12 = bracket(&e(0, 1), &e(1, 2), &ctx, &chart, &z);
    let m02 = e(0, 2).eval(&ctx, &chart, &z).unwrap();
    assert!((b01_12.abs() - 0.5 * m02.abs()).abs() < 1e-14);
    let cross = bracket(&e(0, 1), &BoundaryEntry { right: true, i: 0, j: 1 }, &ctx, &chart, &z);
    assert_eq!(cross, 0.0);
}

#[test]
fn poisson_tensor_satisfies_jacobi() {
    for kind in [ChainKind::Periodic, ChainKind::Open] {
        let (_, chart, z) = setup(kind, 4, 2, 8);
        let m = z.len();
        let j0 = chart.poisson_tensor(&z);
        assert!((&j0 + j0.transpose()).amax() == 0.0);
        let h = 1e-6;
        let dj: Vec<_> = (0..m)
            .map(|l| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[l] += h;
                zm[l] -= h;
                (chart.poisson_tensor(&zp) - chart.poisson_tensor(&zm)) / (2.0 * h)
            })
            .collect();
        let mut worst = 0f64;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut s = 0.0;
                    for l in 0..m {
                        s += j0[(a, l)] * dj[l][(b, c)] + j0[(b, l)] * dj[l][(c, a)] + j0[(c, l)] * dj[l][(a, b)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        assert!(worst < 1e-5, "{kind:?}: {worst}");
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for kind in [ChainKind::Periodic, ChainKind::Open] {
        let (ctx, s) = state(kind, 3, 2, 12);
        let chart = DarbouxChart::for_state(&s);
        let z = chart.pack(&s).unwrap();
        for h in s.hamiltonian_family() {
            let ga = gradient(&h, &ctx, &chart, z.as_slice(), GradientMode::Analytic).unwrap();
            let gd = gradient(&h, &ctx, &chart, z.as_slice(), GradientMode::Autodiff).unwrap();
            let gf = gradient(&h, &ctx, &chart, z.as_slice(), GradientMode::central_difference()).unwrap();
            let scale = ga.amax().max(1.0);
            assert!((&ga - &gd).amax() < 1e-11 * scale, "{kind:?} {h:?}");
            assert!((&ga - &gf).amax() < 1e-5 * scale, "{kind:?} {h:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bracket_is_antisymmetric_and_leibniz(seed in any::<u64>(), open in any::<bool>(), i in 0usize..40, j in 0usize..40, k in 0usize..40) {
        let kind = if open { ChainKind::Open } else { ChainKind::Periodic };
        let (ctx, chart, z) = setup(kind, 3, 2, seed);
        let m = z.len();
        let (f, g, h) = (Coordinate(i % m), SpinEntry { site: 1, i: j % 3, j: (j / 3) % 3 }, Coordinate(k % m));
        let fg = bracket(&f, &g, &ctx, &chart, &z);
        let gf = bracket(&g, &f, &ctx, &chart, &z);
        prop_assert!((fg + gf).abs() < 1e-14);
        let lhs = bracket(&f, &Product(g, h), &ctx, &chart, &z);
        let rhs = fg * h.eval(&ctx, &chart, &z).unwrap() + g.eval(&ctx, &chart, &z).unwrap() * bracket(&f, &h, &ctx, &chart, &z);
        prop_assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn hamiltonian_family_commutes(seed in any::<u64>(), open in any::<bool>(), n in 2usize..=4, sites in 1usize..=3) {
        let kind = if open { ChainKind::Open } else { ChainKind::Periodic };
        let (ctx, s) = state(kind, n, sites, seed);
        let chart = DarbouxChart::for_state(&s);
        let z = chart.pack(&s).unwrap();
        let family = s.hamiltonian_family();
        let grads: Vec<DVector<f64>> = family
            .iter()
            .map(|h| gradient(h, &ctx, &chart, z.as_slice(), GradientMode::Analytic).unwrap())
            .collect();
        for a in 0..grads.len() {
            for b in a + 1..grads.len() {
                let scale = grads[a].amax().max(1.0) * grads[b].amax().max(1.0);
                let v = chart.bracket(z.as_slice(), &grads[a], &grads[b]);
                prop_assert!(v.abs() < 1e-11 * scale, "{:?} {:?}: {}", family[a], family[b], v);
            }
        }
    }
}
