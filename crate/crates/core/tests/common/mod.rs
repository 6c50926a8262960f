#![allow(dead_code)]

use qlan_core::hermlin::{c, identity, real};
use qlan_core::{CMatrix, DensityMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let g = random_matrix(rng, d);
    (&g + g.adjoint()) * real(0.5)
}

pub fn random_traceless(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let h = random_hermitian(rng, d);
    let tr = qlan_core::hermlin::trace(&h);
    h - identity(d) * (tr / real(d as f64))
}

/// Full-rank state with smallest eigenvalue at least `floor`.
pub fn random_state(rng: &mut ChaCha8Rng, d: usize, floor: f64) -> DensityMatrix {
    let g = random_matrix(rng, d);
    let m = &g * g.adjoint();
    let tr = qlan_core::hermlin::trace(&m).re;
    let w = 1.0 - floor * d as f64;
    DensityMatrix::normalized(m * real(w / tr) + identity(d) * real(floor)).unwrap()
}

pub fn random_probs(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let w = 1.0 - floor * k as f64;
    raw.iter().map(|x| floor + w * x / s).collect()
}
