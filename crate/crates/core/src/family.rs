//! Differentiable families `θ ↦ ρ_θ` of faithful states.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hermlin::{
    check_same_dim, commutator, diag_real, exp_i_hermitian, hermitian_deviation, real,
    sigma_x, sigma_y, sigma_z, trace, CMatrix, DensityMatrix, C64, HERMITIAN_TOL,
};

/// Central finite-difference step used when a family has no analytic derivative.
pub const FD_STEP: f64 = 1e-5;
/// Step for the second directional difference.
pub const FD_STEP2: f64 = 1e-4;

pub trait QuantumFamily: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn param_dim(&self) -> usize;

    /// Base point of the local analysis.
    fn theta0(&self) -> Vec<f64> {
        vec![0.0; self.param_dim()]
    }

    fn rho(&self, theta: &[f64]) -> Result<DensityMatrix>;

    /// `∂ρ/∂θ_k`.
    fn drho(&self, theta: &[f64], k: usize) -> Result<CMatrix> {
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[k] += FD_STEP;
        minus[k] -= FD_STEP;
        let d = self.rho(&plus)?.matrix() - self.rho(&minus)?.matrix();
        Ok(d / real(2.0 * FD_STEP))
    }

    /// `d²/ds² ρ_{θ+su}` at `s = 0`.
    fn drho2_dir(&self, theta: &[f64], u: &[f64]) -> Result<CMatrix> {
        let shift = |s: f64| -> Vec<f64> { theta.iter().zip(u).map(|(a, b)| a + s * b).collect() };
        let d = self.rho(&shift(FD_STEP2))?.matrix() + self.rho(&shift(-FD_STEP2))?.matrix()
            - self.rho(theta)?.matrix() * real(2.0);
        Ok(d / real(FD_STEP2 * FD_STEP2))
    }
}

fn check_theta(theta: &[f64], m: usize) -> Result<()> {
    if theta.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: theta.len() });
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Qubit family `θ = (rx, ry, a) ↦ (1 + rx σx + ry σy + (r + a) σz) / 2` at `θ0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitFamily {
    pub r: f64,
}

impl QubitFamily {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::OutOfRange(format!("r = {r} must lie in (0, 1)")));
        }
        Ok(Self { r })
    }
}

impl QuantumFamily for QubitFamily {
    fn name(&self) -> String {
        format!("qubit(r={})", self.r)
    }

    fn dim(&self) -> usize {
        2
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn rho(&self, theta: &[f64]) -> Result<DensityMatrix> {
        check_theta(theta, 3)?;
        DensityMatrix::bloch(theta[0], theta[1], self.r + theta[2])
    }

    fn drho(&self, theta: &[f64], k: usize) -> Result<CMatrix> {
        check_theta(theta, 3)?;
        let p = [sigma_x, sigma_y, sigma_z]
            .get(k)
            .ok_or_else(|| Error::OutOfRange(format!("parameter index {k}")))?;
        Ok(p() * real(0.5))
    }

    fn drho2_dir(&self, theta: &[f64], _u: &[f64]) -> Result<CMatrix> {
        check_theta(theta, 3)?;
        Ok(CMatrix::zeros(2, 2))
    }
}

/// Unitary orbit `θ ↦ e^{iΣθ_k H_k} ρ e^{-iΣθ_k H_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationFamily {
    rho: DensityMatrix,
    generators: Vec<CMatrix>,
}

impl RotationFamily {
    pub fn new(rho: DensityMatrix, generators: Vec<CMatrix>) -> Result<Self> {
        for h in &generators {
            check_same_dim(h, rho.dim())?;
            let dev = hermitian_deviation(h);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(Self { rho, generators })
    }

    /// Qubit `ρ = (1 + rσz)/2` rotated by `e^{iθ σy/2}`.
    pub fn qubit(r: f64) -> Result<Self> {
        Self::new(DensityMatrix::bloch(0.0, 0.0, r)?, vec![sigma_y() * real(0.5)])
    }

    pub fn base(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    fn combined(&self, theta: &[f64]) -> CMatrix {
        let d = self.rho.dim();
        self.generators
            .iter()
            .zip(theta)
            .fold(CMatrix::zeros(d, d), |acc, (h, t)| acc + h * real(*t))
    }
}

impl QuantumFamily for RotationFamily {
    fn name(&self) -> String {
        format!("rotation(d={}, m={})", self.rho.dim(), self.generators.len())
    }

    fn dim(&self) -> usize {
        self.rho.dim()
    }

    fn param_dim(&self) -> usize {
        self.generators.len()
    }

    fn rho(&self, theta: &[f64]) -> Result<DensityMatrix> {
        check_theta(theta, self.param_dim())?;
        let u = exp_i_hermitian(&self.combined(theta), 1.0)?;
        DensityMatrix::normalized(&u * self.rho.matrix() * u.adjoint())
    }

    fn drho(&self, theta: &[f64], k: usize) -> Result<CMatrix> {
        let rho = self.rho(theta)?;
        let h = self.generators.get(k).ok_or_else(|| Error::OutOfRange(format!("parameter index {k}")))?;
        Ok(commutator(h, rho.matrix()) * C64::i())
    }

    fn drho2_dir(&self, theta: &[f64], u: &[f64]) -> Result<CMatrix> {
        // Exact only at θ = 0, where the orbit through ρ is e^{isH(u)} ρ e^{-isH(u)}.
        if theta.iter().any(|t| *t != 0.0) {
            let shift = |s: f64| -> Vec<f64> { theta.iter().zip(u).map(|(a, b)| a + s * b).collect() };
            let d = self.rho(&shift(FD_STEP2))?.matrix() + self.rho(&shift(-FD_STEP2))?.matrix()
                - self.rho(theta)?.matrix() * real(2.0);
            return Ok(d / real(FD_STEP2 * FD_STEP2));
        }
        let h = self.combined(u);
        Ok(-commutator(&h, &commutator(&h, self.rho.matrix())))
    }
}

/// Commutative family `p(θ) = p + Σ θ_k d_k` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFamily {
    probs: Vec<f64>,
    derivatives: Vec<Vec<f64>>,
}

impl DiagonalFamily {
    /// Each derivative row must sum to zero.
    pub fn new(probs: Vec<f64>, derivatives: Vec<Vec<f64>>) -> Result<Self> {
        DensityMatrix::from_diagonal(&probs)?;
        for d in &derivatives {
            if d.len() != probs.len() {
                return Err(Error::DimensionMismatch { expected: probs.len(), got: d.len() });
            }
            let s: f64 = d.iter().sum();
            if s.abs() > 1e-12 {
                return Err(Error::InvalidExperiment(format!("derivative row sums to {s}")));
            }
        }
        Ok(Self { probs, derivatives })
    }

    pub fn probs_at(&self, theta: &[f64]) -> Vec<f64> {
        let mut p = self.probs.clone();
        for (d, t) in self.derivatives.iter().zip(theta) {
            for (pi, di) in p.iter_mut().zip(d) {
                *pi += t * di;
            }
        }
        p
    }

    pub fn derivatives(&self) -> &[Vec<f64>] {
        &self.derivatives
    }
}

impl QuantumFamily for DiagonalFamily {
    fn name(&self) -> String {
        format!("diagonal(d={}, m={})", self.probs.len(), self.derivatives.len())
    }

    fn dim(&self) -> usize {
        self.probs.len()
    }

    fn param_dim(&self) -> usize {
        self.derivatives.len()
    }

    fn rho(&self, theta: &[f64]) -> Result<DensityMatrix> {
        check_theta(theta, self.param_dim())?;
        DensityMatrix::from_diagonal(&self.probs_at(theta))
    }

    fn drho(&self, _theta: &[f64], k: usize) -> Result<CMatrix> {
        let d = self.derivatives.get(k).ok_or_else(|| Error::OutOfRange(format!("parameter index {k}")))?;
        Ok(diag_real(d))
    }

    fn drho2_dir(&self, _theta: &[f64], _u: &[f64]) -> Result<CMatrix> {
        Ok(CMatrix::zeros(self.dim(), self.dim()))
    }
}

/// Affine family `ρ_θ = ρ0 + Σ θ_k D_k` with traceless Hermitian `D_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserFamily {
    rho0: DensityMatrix,
    directions: Vec<CMatrix>,
}

impl UserFamily {
    pub fn new(rho0: DensityMatrix, directions: Vec<CMatrix>) -> Result<Self> {
        for d in &directions {
            check_same_dim(d, rho0.dim())?;
            let dev = hermitian_deviation(d);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
            let tr = trace(d);
            if tr.norm() > 1e-12 {
                return Err(Error::InvalidTrace(tr.re));
            }
        }
        Ok(Self { rho0, directions })
    }
}

impl QuantumFamily for UserFamily {
    fn name(&self) -> String {
        format!("user(d={}, m={})", self.rho0.dim(), self.directions.len())
    }

    fn dim(&self) -> usize {
        self.rho0.dim()
    }

    fn param_dim(&self) -> usize {
        self.directions.len()
    }

    fn rho(&self, theta: &[f64]) -> Result<DensityMatrix> {
        check_theta(theta, self.param_dim())?;
        let m = self
            .directions
            .iter()
            .zip(theta)
            .fold(self.rho0.matrix().clone(), |acc, (d, t)| acc + d * real(*t));
        DensityMatrix::new(m)
    }

    fn drho(&self, _theta: &[f64], k: usize) -> Result<CMatrix> {
        self.directions
            .get(k)
            .cloned()
            .ok_or_else(|| Error::OutOfRange(format!("parameter index {k}")))
    }

    fn drho2_dir(&self, _theta: &[f64], _u: &[f64]) -> Result<CMatrix> {
        Ok(CMatrix::zeros(self.dim(), self.dim()))
    }
}

/// `ρ̃_a = e^{iΣa_k H_k} τ_{θ0+a} e^{-iΣa_k H_k}` where `τ_θ` places the
/// eigenvalues of `ρ_θ` on the fixed eigenprojectors of `ρ_{θ0}`.
/// Parametrized by the offset `a`, so its own base point is `a = 0`.
pub struct SimplifiedFamily {
    base: Arc<dyn QuantumFamily>,
    theta0: Vec<f64>,
    rho0: DensityMatrix,
    generators: Vec<CMatrix>,
}

impl SimplifiedFamily {
    pub fn new(base: Arc<dyn QuantumFamily>, generators: Vec<CMatrix>) -> Result<Self> {
        let theta0 = base.theta0();
        let rho0 = base.rho(&theta0)?;
        if generators.len() != base.param_dim() {
            return Err(Error::DimensionMismatch { expected: base.param_dim(), got: generators.len() });
        }
        Ok(Self { base, theta0, rho0, generators })
    }

    /// `τ_{θ0+a}`.
    pub fn tau(&self, a: &[f64]) -> Result<CMatrix> {
        let theta: Vec<f64> = self.theta0.iter().zip(a).map(|(x, y)| x + y).collect();
        let lambdas = self.base.rho(&theta)?.eigenvalues().to_vec();
        let sd = self.rho0.spectrum();
        let u = &sd.eigenvectors;
        Ok(u * diag_real(&lambdas) * u.adjoint())
    }
}

impl QuantumFamily for SimplifiedFamily {
    fn name(&self) -> String {
        format!("simplified[{}]", self.base.name())
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }

    fn rho(&self, a: &[f64]) -> Result<DensityMatrix> {
        check_theta(a, self.param_dim())?;
        let d = self.dim();
        let h = self
            .generators
            .iter()
            .zip(a)
            .fold(CMatrix::zeros(d, d), |acc, (g, x)| acc + g * real(*x));
        let u = exp_i_hermitian(&h, 1.0)?;
        DensityMatrix::normalized(&u * self.tau(a)? * u.adjoint())
    }
}

/// Smallest `n` on a doubling ladder such that every `ρ_{θ0+u/√n}` has minimal
/// eigenvalue above `threshold`.
pub fn faithful_threshold(family: &dyn QuantumFamily, us: &[Vec<f64>], threshold: f64) -> Result<u64> {
    let theta0 = family.theta0();
    let ok = |n: u64| -> bool {
        us.iter().all(|u| {
            let theta: Vec<f64> = theta0.iter().zip(u).map(|(a, b)| a + b / (n as f64).sqrt()).collect();
            family.rho(&theta).map(|r| r.min_eigenvalue() > threshold).unwrap_or(false)
        })
    };
    let mut n = 1u64;
    while !ok(n) {
        n = n.checked_mul(2).ok_or_else(|| Error::OutOfRange("no faithful scale found".into()))?;
        if n > 1 << 40 {
            return Err(Error::OutOfRange("no faithful scale found".into()));
        }
    }
    Ok(n)
}
