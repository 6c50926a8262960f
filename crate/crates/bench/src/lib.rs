//! Deterministic inputs for the kernel benchmarks in `benches/`.

use qlan_core::classical::ClassicalExperiment;
use qlan_core::hermlin::c;
use qlan_core::CMatrix;

/// Dense Hermitian matrix with entries from a fixed trigonometric pattern.
pub fn hermitian(d: usize) -> CMatrix {
    let mut h = CMatrix::from_fn(d, d, |i, j| {
        let x = (i * 7 + j * 3 + 1) as f64;
        c(x.sin(), (0.5 * x).cos())
    });
    h = (&h + h.adjoint()) * c(0.5, 0.0);
    h
}

/// Experiment with `m` parameters over `k` outcomes and strictly positive rows.
pub fn experiment(m: usize, k: usize) -> ClassicalExperiment {
    let rows = (0..m)
        .map(|i| {
            let w: Vec<f64> = (0..k).map(|j| 1.0 + ((i * k + j) as f64 * 0.37).sin().abs()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    ClassicalExperiment::from_rows(rows).expect("rows are normalized")
}
