//! Complex Hermitian linear algebra on small dense matrices.
//!
//! Everything downstream is a basis-free function of the spectral projectors of
//! a faithful density matrix, so this module carries the one piece of real
//! numerics the rest of the crate leans on: a cyclic Jacobi eigensolver for
//! Hermitian matrices, plus the spectral calculus built on it (`ρ^z`, `log ρ`,
//! `exp(iH)`) and the real inner product `(A, B)_ρ = Tr(ρ A∘B)`.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Off-diagonal Frobenius norm, relative to the full norm, at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Eigenvalues closer than this are one cluster.
pub const CLUSTER_TOL: f64 = 1e-12;
/// Hermiticity required of eigensolver input (scaled by the largest entry).
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let mut m = zeros(values.len());
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = real(*v);
    }
    m
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, n, |i, j| real(rows[i][j]))
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(0.0), c(0.0, -1.0), c(0.0, 1.0), real(0.0)])
}

pub fn sigma_z() -> CMatrix {
    diag_real(&[1.0, -1.0])
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Jordan product `(AB + BA) / 2`.
pub fn jordan(a: &CMatrix, b: &CMatrix) -> CMatrix {
    (a * b + b * a) * real(0.5)
}

/// Hilbert–Schmidt inner product `Tr(A* B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// Largest entry of `A - A*`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && hermitian_deviation(a) <= tol * max_abs(a).max(1.0)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * real(0.5)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest singular value, through the eigenvalues of `A* A`.
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    let g = hermitian_part(&(a.adjoint() * a));
    let sd = eig_hermitian(&g)?;
    Ok(sd.eigenvalues.first().copied().unwrap_or(0.0).max(0.0).sqrt())
}

fn check_square(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn check_same_dim(a: &CMatrix, dim: usize) -> Result<()> {
    check_square(a)?;
    if a.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: a.nrows() });
    }
    Ok(())
}

/// Eigensystem of a Hermitian matrix: eigenvalues descending, eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U · diag(f(λ)) · U*`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(*lambda);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(real)
    }

    /// Index ranges of eigenvalue clusters (consecutive values within `tol`).
    pub fn clusters(&self, tol: f64) -> Vec<Range<usize>> {
        cluster_ranges(&self.eigenvalues, tol)
    }

    /// Orthogonal projector onto the span of eigenvectors `range`.
    pub fn projector(&self, range: Range<usize>) -> CMatrix {
        let cols = self.eigenvectors.columns(range.start, range.len());
        cols * cols.adjoint()
    }

    /// Express `A` in the eigenbasis: `U* A U`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.eigenvectors * a * self.eigenvectors.adjoint()
    }

    /// Cluster index of every eigenvalue.
    pub fn cluster_labels(&self, tol: f64) -> Vec<usize> {
        let mut labels = vec![0; self.dim()];
        for (c, r) in self.clusters(tol).into_iter().enumerate() {
            for i in r {
                labels[i] = c;
            }
        }
        labels
    }
}

fn cluster_ranges(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i - 1] - values[i]).abs() > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Cyclic complex Jacobi eigensolver.
///
/// Eigenpairs are returned with eigenvalues in descending order. Inside a
/// cluster of near-equal eigenvalues the vectors are re-orthonormalized, and
/// every eigenvector has its first significant component made real positive
/// so repeated calls are bit-for-bit deterministic.
pub fn eig_hermitian(h: &CMatrix) -> Result<SpectralDecomposition> {
    check_square(h)?;
    check_finite(h)?;
    let scale = max_abs(h).max(1.0);
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.nrows();
    let mut a = hermitian_part(h);
    let mut v = identity(n);
    let fro = hs_norm(&a);

    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = n <= 1;
    let mut sweeps = 0;
    while !converged {
        if off_norm(&a) <= JACOBI_TOL * fro || off_norm(&a) == 0.0 {
            converged = true;
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 || mag < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // J = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane.
                let j_pp = real(cs);
                let j_pq = real(sn);
                let j_qp = phase.conj() * (-sn);
                let j_qq = phase.conj() * cs;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * j_pp + akq * j_qp;
                    a[(k, q)] = akp * j_pq + akq * j_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                a[(p, q)] = real(0.0);
                a[(q, p)] = real(0.0);
                a[(p, p)] = real(a[(p, p)].re);
                a[(q, q)] = real(a[(q, q)].re);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * j_pp + vkq * j_qp;
                    v[(k, q)] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps, off_norm: off_norm(&a) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::from_fn(n, n, |r, col| v[(r, order[col])]);

    for range in cluster_ranges(&eigenvalues, CLUSTER_TOL) {
        if range.len() > 1 {
            gram_schmidt_columns(&mut vectors, range.clone());
            sort_cluster(&mut vectors, range);
        }
    }
    for j in 0..n {
        fix_phase(&mut vectors, j);
    }

    Ok(SpectralDecomposition { eigenvalues, eigenvectors: vectors })
}

fn gram_schmidt_columns(m: &mut CMatrix, range: Range<usize>) {
    for j in range.clone() {
        for k in range.start..j {
            let proj: C64 = (0..m.nrows()).map(|r| m[(r, k)].conj() * m[(r, j)]).sum();
            for r in 0..m.nrows() {
                let mk = m[(r, k)];
                m[(r, j)] -= mk * proj;
            }
        }
        let norm = (0..m.nrows()).map(|r| m[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..m.nrows() {
            m[(r, j)] /= norm;
        }
    }
}

fn first_significant(m: &CMatrix, col: usize) -> usize {
    (0..m.nrows())
        .find(|&r| m[(r, col)].norm() > 1e-8)
        .unwrap_or(0)
}

fn sort_cluster(m: &mut CMatrix, range: Range<usize>) {
    let mut cols: Vec<usize> = range.clone().collect();
    cols.sort_by_key(|&c| first_significant(m, c));
    let snapshot = m.clone();
    for (dst, src) in range.zip(cols) {
        m.set_column(dst, &snapshot.column(src));
    }
}

fn fix_phase(m: &mut CMatrix, col: usize) {
    let r = first_significant(m, col);
    let z = m[(r, col)];
    if z.norm() == 0.0 {
        return;
    }
    let rot = z.conj() / z.norm();
    for i in 0..m.nrows() {
        m[(i, col)] *= rot;
    }
}

/// `exp(i·s·H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &CMatrix, s: f64) -> Result<CMatrix> {
    let sd = eig_hermitian(h)?;
    Ok(sd.map(|lambda| C64::from_polar(1.0, s * lambda)))
}

/// `exp(H)` for Hermitian `H`.
pub fn exp_hermitian(h: &CMatrix) -> Result<CMatrix> {
    let sd = eig_hermitian(h)?;
    Ok(sd.map(|lambda| real(lambda.exp())))
}

/// A strictly positive, unit-trace Hermitian matrix together with its eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    spectrum: SpectralDecomposition,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let dev = hermitian_deviation(&matrix);
        if dev > DENSITY_HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let matrix = hermitian_part(&matrix);
        let spectrum = eig_hermitian(&matrix)?;
        let min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
        if min <= 0.0 {
            return Err(Error::NotFaithful(min));
        }
        Ok(Self { matrix, spectrum })
    }

    /// Divide by the trace before validating. For states assembled from
    /// products or mixtures where rounding drifts the trace.
    pub fn normalized(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let tr = trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(hermitian_part(&matrix) / real(tr))
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(diag_real(probs))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new(identity(dim) / real(dim as f64)).expect("maximally mixed state is valid")
    }

    /// Qubit state `(1 + r·σ) / 2`.
    pub fn bloch(rx: f64, ry: f64, rz: f64) -> Result<Self> {
        let m = (identity(2) + sigma_x() * real(rx) + sigma_y() * real(ry) + sigma_z() * real(rz))
            * real(0.5);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.spectrum.eigenvalues.last().expect("non-empty spectrum")
    }

    /// `ρ^z` on the principal branch.
    pub fn power(&self, z: C64) -> CMatrix {
        self.spectrum.map(|lambda| (z * lambda.ln()).exp())
    }

    /// `ρ^{it}`, unitary.
    pub fn unitary_power(&self, t: f64) -> CMatrix {
        self.spectrum.map(|lambda| C64::from_polar(1.0, t * lambda.ln()))
    }

    pub fn log(&self) -> CMatrix {
        self.spectrum.map(|lambda| real(lambda.ln()))
    }

    /// `φ(A) = Tr(ρA)`.
    pub fn expect(&self, a: &CMatrix) -> C64 {
        // Tr(ρA) without forming the product.
        let n = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                s += self.matrix[(i, k)] * a[(k, i)];
            }
        }
        s
    }

    /// `(A, B)_ρ = Tr(ρ A∘B)` for Hermitian `A`, `B`; unchecked.
    pub fn inner_unchecked(&self, a: &CMatrix, b: &CMatrix) -> f64 {
        self.expect(&(a * b)).re
    }

    pub fn inner(&self, a: &CMatrix, b: &CMatrix) -> Result<f64> {
        check_same_dim(a, self.dim())?;
        check_same_dim(b, self.dim())?;
        for m in [a, b] {
            if !is_hermitian(m, HERMITIAN_TOL) {
                return Err(Error::NotHermitian(hermitian_deviation(m)));
            }
        }
        Ok(self.inner_unchecked(a, b))
    }

    pub fn cluster_ranges(&self) -> Vec<Range<usize>> {
        self.spectrum.clusters(CLUSTER_TOL)
    }
}

pub fn matrix_power(rho: &DensityMatrix, z: C64) -> CMatrix {
    rho.power(z)
}

pub fn matrix_log(rho: &DensityMatrix) -> CMatrix {
    rho.log()
}

pub fn rho_inner(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> Result<f64> {
    rho.inner(a, b)
}

/// Residual of `A` after orthogonal projection onto the real span of an
/// orthonormal (in `(·,·)_ρ`) family.
pub fn rho_projection_residual(rho: &DensityMatrix, basis: &[CMatrix], a: &CMatrix) -> f64 {
    let mut r = a.clone();
    for b in basis {
        let coef = rho.inner_unchecked(b, &r);
        r -= b * real(coef);
    }
    rho.inner_unchecked(&r, &r).max(0.0).sqrt()
}
