#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::Rng;
use spincm_core::dynamics::{ChainKind, RadialState};
use spincm_core::sampling::{random_state, SampleParams};
use spincm_core::LieContext;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

pub fn traceless(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = gaussian(n, rng);
    let t = m.trace() / n as f64;
    for i in 0..n {
        m[(i, i)] -= t;
    }
    m
}

pub fn state(kind: ChainKind, n: usize, sites: usize, seed: u64) -> (LieContext, RadialState<f64>) {
    let ctx = LieContext::new(n).unwrap();
    let s = random_state(&ctx, kind, sites, &SampleParams::default(), &mut rng(seed)).unwrap();
    (ctx, s)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
