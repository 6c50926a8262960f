//! Gaussian side of the local limit: the real symplectic space of Hermitian
//! matrices with `σ(A, B) = (i/2) Tr(ρ[A, B])` and `α(A, B) = (A, B)_ρ`,
//! Weyl words, quasi-free states, limit cocycles and logarithmic derivatives.
//!
//! Weyl words collapse with `W(X) W(Y) = W(X + Y) e^{iσ(X, Y)}`. With `σ` as
//! above this is the ordering that reproduces the i.i.d. cocycle expectations.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::QuantumFamily;
use crate::hermlin::{
    c, check_same_dim, commutator, hermitian_deviation, real, CMatrix, DensityMatrix, C64,
    HERMITIAN_TOL,
};
use crate::quantum::modular_orbit;

/// Imaginary part tolerated in `Tr(ρ[A, B])` before it is reported as a fault.
pub const FORM_IMAG_TOL: f64 = 1e-12;
/// Relative residual below which a candidate adds no new direction.
pub const SPAN_REL_TOL: f64 = 1e-8;
/// Membership residual for logarithmic derivatives in `K`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// `(M_d(C)^sa, σ, α)` at a faithful state.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    rho: DensityMatrix,
}

impl SymplecticSpace {
    pub fn new(rho: DensityMatrix) -> Self {
        Self { rho }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `σ(A, B) = (i/2) Tr(ρ[A, B])`.
    pub fn sigma(&self, a: &CMatrix, b: &CMatrix) -> Result<f64> {
        let v = self.rho.expect(&commutator(a, b)) * c(0.0, 0.5);
        let scale = 1.0 + v.re.abs();
        if v.im.abs() > FORM_IMAG_TOL * scale {
            return Err(Error::Numerical(format!("symplectic form has imaginary part {:.3e}", v.im)));
        }
        Ok(v.re)
    }

    /// `α(A, B) = (A, B)_ρ`.
    pub fn alpha(&self, a: &CMatrix, b: &CMatrix) -> f64 {
        self.rho.inner_unchecked(a, b)
    }

    /// `d²` Hermitian matrices orthonormal in `(·,·)_ρ`.
    pub fn orthobasis(&self) -> Vec<CMatrix> {
        orthonormalize(&self.rho, &hermitian_units(self.dim()), SPAN_REL_TOL)
    }
}

/// Hermitian matrix units `E_ii`, `E_ij + E_ji`, `i(E_ij − E_ji)`.
pub fn hermitian_units(d: usize) -> Vec<CMatrix> {
    indexed_units(d).into_iter().map(|(_, m)| m).collect()
}

/// Matrix units tagged with the index pair they occupy.
fn indexed_units(d: usize) -> Vec<((usize, usize), CMatrix)> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(i, i)] = real(1.0);
        out.push(((i, i), e));
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut x = CMatrix::zeros(d, d);
            x[(i, j)] = real(1.0);
            x[(j, i)] = real(1.0);
            out.push(((i, j), x));
            let mut y = CMatrix::zeros(d, d);
            y[(i, j)] = c(0.0, 1.0);
            y[(j, i)] = c(0.0, -1.0);
            out.push(((i, j), y));
        }
    }
    out
}

/// Pivoted modified Gram–Schmidt in `(·,·)_ρ` with re-orthogonalization.
/// At each step the candidate with the largest remaining residual is taken.
pub fn orthonormalize(rho: &DensityMatrix, candidates: &[CMatrix], rel_tol: f64) -> Vec<CMatrix> {
    let norms: Vec<f64> = candidates.iter().map(|a| rho.inner_unchecked(a, a).max(0.0).sqrt()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut work: Vec<CMatrix> = candidates.to_vec();
    let mut basis: Vec<CMatrix> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, w) in work.iter().enumerate() {
            let n = rho.inner_unchecked(w, w).max(0.0).sqrt();
            if n > rel_tol * norms[i].max(1e-300) && n > 1e-12 * scale && best.is_none_or(|(_, b)| n > b) {
                best = Some((i, n));
            }
        }
        let Some((i, _)) = best else { break };
        let mut q = work.swap_remove(i);
        for _ in 0..2 {
            for b in &basis {
                let coef = rho.inner_unchecked(b, &q);
                q -= b * real(coef);
            }
        }
        let n = rho.inner_unchecked(&q, &q).max(0.0).sqrt();
        if n == 0.0 {
            break;
        }
        let q = q / real(n);
        for w in work.iter_mut() {
            let coef = rho.inner_unchecked(&q, w);
            *w -= &q * real(coef);
        }
        basis.push(q);
        if basis.len() == rho.dim() * rho.dim() {
            break;
        }
    }
    basis
}

/// `H_ρ ⊕ H_ρ^⊥`: Hermitians commuting with `ρ` and their `(·,·)_ρ` complement.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutantSplit {
    pub basis_hrho: Vec<CMatrix>,
    pub basis_perp: Vec<CMatrix>,
}

impl CommutantSplit {
    pub fn dims(&self) -> (usize, usize) {
        (self.basis_hrho.len(), self.basis_perp.len())
    }
}

pub fn split_commutant(rho: &DensityMatrix) -> CommutantSplit {
    let d = rho.dim();
    let sd = rho.spectrum();
    let labels = sd.cluster_labels(crate::hermlin::CLUSTER_TOL);
    let u = &sd.eigenvectors;
    let lam = &sd.eigenvalues;
    let mut inside = Vec::new();
    let mut perp = Vec::new();
    for ((i, j), x) in indexed_units(d) {
        let m = u * &x * u.adjoint();
        if labels[i] == labels[j] {
            inside.push(m);
        } else {
            perp.push(m / real((lam[i] + lam[j]).sqrt()));
        }
    }
    CommutantSplit { basis_hrho: orthonormalize(rho, &inside, SPAN_REL_TOL), basis_perp: perp }
}

/// `prefactor · W(A_1) ⋯ W(A_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylWord {
    pub vectors: Vec<CMatrix>,
    pub prefactor: C64,
}

impl Default for WeylWord {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for WeylWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.6e}{:+.6e}i)·W^{}", self.prefactor.re, self.prefactor.im, self.vectors.len())
    }
}

impl WeylWord {
    pub fn identity() -> Self {
        Self { vectors: Vec::new(), prefactor: real(1.0) }
    }

    pub fn single(a: CMatrix) -> Self {
        Self { vectors: vec![a], prefactor: real(1.0) }
    }

    pub fn new(vectors: Vec<CMatrix>, prefactor: C64) -> Result<Self> {
        if !(prefactor.re.is_finite() && prefactor.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        for v in &vectors {
            let dev = hermitian_deviation(v);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(Self { vectors, prefactor })
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self {
            vectors: self.vectors.iter().chain(&other.vectors).cloned().collect(),
            prefactor: self.prefactor * other.prefactor,
        }
    }

    /// `(c W(A_1)⋯W(A_s))* = c̄ W(−A_s)⋯W(−A_1)`.
    pub fn adjoint(&self) -> Self {
        Self { vectors: self.vectors.iter().rev().map(|v| -v).collect(), prefactor: self.prefactor.conj() }
    }
}

/// Collapses a word to `phase · W(Σ A_j)`.
pub fn weyl_collapse(word: &WeylWord, s: &SymplecticSpace) -> Result<(CMatrix, C64)> {
    let d = s.dim();
    let mut sum = CMatrix::zeros(d, d);
    let mut angle = 0.0;
    for v in &word.vectors {
        check_same_dim(v, d)?;
        angle += s.sigma(&sum, v)?;
        sum += v;
    }
    Ok((sum, word.prefactor * C64::from_polar(1.0, angle)))
}

/// `φ(word)` for the quasi-free state, optionally shifted by `𝓛`:
/// `phase · exp(−½α(S, S) + i(S, 𝓛)_ρ)`.
pub fn quasifree_eval(s: &SymplecticSpace, word: &WeylWord, shift: Option<&CMatrix>) -> Result<C64> {
    let (sum, phase) = weyl_collapse(word, s)?;
    let lin = match shift {
        Some(l) => {
            check_same_dim(l, s.dim())?;
            s.alpha(&sum, l)
        }
        None => 0.0,
    };
    Ok(phase * C64::from_polar((-0.5 * s.alpha(&sum, &sum)).exp(), lin))
}

/// First- and second-order data of a family at its base point.
pub struct FamilyJet {
    family: Arc<dyn QuantumFamily>,
    theta0: Vec<f64>,
    space: SymplecticSpace,
    drho: Vec<CMatrix>,
    generators: Vec<CMatrix>,
    l: Vec<CMatrix>,
    ell: Vec<CMatrix>,
    sld: Vec<CMatrix>,
}

impl fmt::Debug for FamilyJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyJet")
            .field("family", &self.family.name())
            .field("theta0", &self.theta0)
            .finish_non_exhaustive()
    }
}

impl FamilyJet {
    pub fn new(family: Arc<dyn QuantumFamily>) -> Result<Self> {
        let theta0 = family.theta0();
        let rho = family.rho(&theta0)?;
        let m = family.param_dim();
        let drho = (0..m).map(|k| family.drho(&theta0, k).map(|d| crate::hermlin::hermitian_part(&d))).collect::<Result<Vec<_>>>()?;
        let mut generators = Vec::with_capacity(m);
        let mut l = Vec::with_capacity(m);
        let mut ell = Vec::with_capacity(m);
        let mut sld = Vec::with_capacity(m);
        for d in &drho {
            let parts = first_order(&rho, d);
            generators.push(parts.generator);
            l.push(parts.l);
            ell.push(parts.ell);
            sld.push(parts.sld);
        }
        Ok(Self { family, theta0, space: SymplecticSpace::new(rho), drho, generators, l, ell, sld })
    }

    pub fn family(&self) -> &Arc<dyn QuantumFamily> {
        &self.family
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn rho(&self) -> &DensityMatrix {
        self.space.rho()
    }

    pub fn param_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn drho(&self) -> &[CMatrix] {
        &self.drho
    }

    /// `H_k` with `∂P_j = i[H_k, P_j]`, normalized to vanish on eigenclusters.
    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn l_k(&self) -> &[CMatrix] {
        &self.l
    }

    pub fn ell_k(&self) -> &[CMatrix] {
        &self.ell
    }

    pub fn sld_k(&self) -> &[CMatrix] {
        &self.sld
    }

    fn combine(&self, parts: &[CMatrix], u: &[f64]) -> Result<CMatrix> {
        if u.len() != parts.len() {
            return Err(Error::DimensionMismatch { expected: parts.len(), got: u.len() });
        }
        let d = self.space.dim();
        Ok(parts.iter().zip(u).fold(CMatrix::zeros(d, d), |acc, (p, x)| acc + p * real(*x)))
    }

    pub fn generator(&self, u: &[f64]) -> Result<CMatrix> {
        self.combine(&self.generators, u)
    }

    pub fn l(&self, u: &[f64]) -> Result<CMatrix> {
        self.combine(&self.l, u)
    }

    pub fn ell(&self, u: &[f64]) -> Result<CMatrix> {
        self.combine(&self.ell, u)
    }

    /// `𝓛(u) = l(u) + ℓ(u)`.
    pub fn sld(&self, u: &[f64]) -> Result<CMatrix> {
        self.combine(&self.sld, u)
    }

    pub fn drho_dir(&self, u: &[f64]) -> Result<CMatrix> {
        self.combine(&self.drho, u)
    }

    /// `h(u) = d²/ds² log τ_{θ0+su}` at `s = 0`, by second-order eigenvalue perturbation.
    pub fn h(&self, u: &[f64]) -> Result<CMatrix> {
        let d1 = self.drho_dir(u)?;
        let d2 = crate::hermlin::hermitian_part(&self.family.drho2_dir(&self.theta0, u)?);
        let rho = self.rho();
        let sd = rho.spectrum();
        let a = sd.to_eigenbasis(&d1);
        let b = sd.to_eigenbasis(&d2);
        let lam = &sd.eigenvalues;
        let dim = rho.dim();
        let mut h = CMatrix::zeros(dim, dim);
        for range in rho.cluster_ranges() {
            let lc = lam[range.start];
            let k = range.len();
            let mut first = CMatrix::zeros(k, k);
            let mut second = CMatrix::zeros(k, k);
            for (p, i) in range.clone().enumerate() {
                for (q, j) in range.clone().enumerate() {
                    first[(p, q)] = a[(i, j)];
                    let mut s = b[(i, j)];
                    for m in 0..dim {
                        if !range.contains(&m) {
                            s += a[(i, m)] * a[(m, j)] * real(2.0 / (lc - lam[m]));
                        }
                    }
                    second[(p, q)] = s;
                }
            }
            let first = first / real(lc);
            let block = second / real(lc) - &first * &first;
            h.view_mut((range.start, range.start), (k, k)).copy_from(&block);
        }
        Ok(sd.from_eigenbasis(&h))
    }
}

struct FirstOrder {
    generator: CMatrix,
    l: CMatrix,
    ell: CMatrix,
    sld: CMatrix,
}

/// Splits `dρ` into its eigencluster-diagonal part (scores `l`) and the
/// rotation part `i[H, ρ]` (with SLD `ℓ`), solving for `H` entrywise.
fn first_order(rho: &DensityMatrix, drho: &CMatrix) -> FirstOrder {
    let sd = rho.spectrum();
    let labels = sd.cluster_labels(crate::hermlin::CLUSTER_TOL);
    let lam = &sd.eigenvalues;
    let a = sd.to_eigenbasis(drho);
    let d = rho.dim();
    let mut gen = CMatrix::zeros(d, d);
    let mut l = CMatrix::zeros(d, d);
    let mut ell = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if labels[i] == labels[j] {
                l[(i, j)] = a[(i, j)] / real(lam[i]);
            } else {
                gen[(i, j)] = a[(i, j)] / c(0.0, lam[j] - lam[i]);
                ell[(i, j)] = a[(i, j)] * real(2.0 / (lam[i] + lam[j]));
            }
        }
    }
    let l = sd.from_eigenbasis(&l);
    let ell = sd.from_eigenbasis(&ell);
    FirstOrder { generator: sd.from_eigenbasis(&gen), sld: &l + &ell, l, ell }
}

/// `V_{u,t} = W(H(u) − σ_t(H(u))) e^{½φ([H(u), σ_t(H(u))])} W(t·l(u)) e^{(it/2)φ(h(u))}`.
pub fn limit_cocycle(jet: &FamilyJet, u: &[f64], t: f64) -> Result<WeylWord> {
    if t == 0.0 || u.iter().all(|x| *x == 0.0) {
        return Ok(WeylWord::identity());
    }
    let rho = jet.rho();
    let h = jet.generator(u)?;
    let sh = modular_orbit(rho, &h, t)?;
    let z = rho.expect(&commutator(&h, &sh));
    let scale = 1.0 + z.im.abs();
    if z.re.abs() > 1e-10 * scale {
        return Err(Error::Numerical(format!("cocycle prefactor is not unimodular (Re = {:.3e})", z.re)));
    }
    let second = rho.expect(&jet.h(u)?).re;
    let prefactor = C64::from_polar(1.0, 0.5 * z.im) * C64::from_polar(1.0, 0.5 * t * second);
    WeylWord::new(vec![crate::hermlin::hermitian_part(&(&h - &sh)), jet.l(u)? * real(t)], prefactor)
}

/// `d(d−1)+2` Chebyshev points on `[−3, 3]`.
pub fn default_k_grid(d: usize) -> Vec<f64> {
    let n = d * (d - 1) + 2;
    (0..n)
        .map(|k| 3.0 * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect()
}

/// Orthonormal basis of `K = Lin{l_k} ⊕ Lin{H_k − σ_t(H_k)}`.
pub fn k_subspace(jet: &FamilyJet, t_grid: &[f64]) -> Result<Vec<CMatrix>> {
    let rho = jet.rho();
    let mut candidates: Vec<CMatrix> = jet.l_k().to_vec();
    for h in jet.generators() {
        for &t in t_grid {
            candidates.push(crate::hermlin::hermitian_part(&(h - modular_orbit(rho, h, t)?)));
        }
    }
    Ok(orthonormalize(rho, &candidates, SPAN_REL_TOL))
}

/// Log-ratios closer than this are one modular frequency.
pub const FREQUENCY_TOL: f64 = 1e-9;

/// `K` from the spectral decomposition of the modular group.
///
/// `H − σ_t(H)` runs over `Σ_ω (1 − e^{itω}) H_ω + h.c.`, so its span over all
/// `t` is spanned by `H_ω + H_ω*` and `i(H_ω − H_ω*)`, one pair per frequency
/// `ω = log λ_i − log λ_j > 0`. Unlike a finite `t` grid this stays well
/// conditioned when two frequencies nearly coincide.
pub fn k_subspace_spectral(jet: &FamilyJet) -> Result<Vec<CMatrix>> {
    let rho = jet.rho();
    let sd = rho.spectrum();
    let labels = sd.cluster_labels(crate::hermlin::CLUSTER_TOL);
    let lam = &sd.eigenvalues;
    let d = rho.dim();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if labels[i] != labels[j] && lam[i] > lam[j] {
                pairs.push(((lam[i] / lam[j]).ln(), i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (w, i, j) in pairs {
        if w - last > FREQUENCY_TOL * w.max(1.0) || groups.is_empty() {
            groups.push(Vec::new());
        }
        last = w;
        groups.last_mut().expect("group pushed above").push((i, j));
    }
    let mut candidates: Vec<CMatrix> = jet.l_k().to_vec();
    for h in jet.generators() {
        let a = sd.to_eigenbasis(h);
        for g in &groups {
            let mut m = CMatrix::zeros(d, d);
            for &(i, j) in g {
                m[(i, j)] = a[(i, j)];
            }
            let m = sd.from_eigenbasis(&m);
            candidates.push(&m + m.adjoint());
            candidates.push((&m - m.adjoint()) * C64::i());
        }
    }
    Ok(orthonormalize(rho, &candidates, SPAN_REL_TOL))
}

/// Solves `𝓛 ∘ ρ = dρ` in the eigenbasis: `𝓛_ij = 2 dρ_ij / (λ_i + λ_j)`.
pub fn sld_matrix(rho: &DensityMatrix, drho: &CMatrix) -> Result<CMatrix> {
    check_same_dim(drho, rho.dim())?;
    let sd = rho.spectrum();
    let lam = &sd.eigenvalues;
    let mut a = sd.to_eigenbasis(drho);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            a[(i, j)] *= 2.0 / (lam[i] + lam[j]);
        }
    }
    Ok(sd.from_eigenbasis(&a))
}

/// SLDs `𝓛_k` of a family at its base point.
pub fn sld(family: &dyn QuantumFamily) -> Result<Vec<CMatrix>> {
    let theta0 = family.theta0();
    let rho = family.rho(&theta0)?;
    (0..family.param_dim())
        .map(|k| sld_matrix(&rho, &crate::hermlin::hermitian_part(&family.drho(&theta0, k)?)))
        .collect()
}

/// `Tr(ρ L²)`.
pub fn quantum_fisher(rho: &DensityMatrix, l: &CMatrix) -> f64 {
    rho.inner_unchecked(l, l)
}

/// Fisher information of the Gaussian shift seen through the field `B(A)`:
/// `(A, 𝓛)_ρ² / (A, A)_ρ`, where `(A, 𝓛)_ρ = Tr(A dρ)`.
pub fn field_information(rho: &DensityMatrix, drho: &CMatrix, a: &CMatrix) -> f64 {
    let num = crate::hermlin::trace(&(a * drho)).re;
    num * num / rho.inner_unchecked(a, a)
}

/// Operator-monotone `F` with `F(1) = 1`, selecting a quantum logarithmic derivative.
#[derive(Clone)]
pub enum MonotoneFunction {
    /// `(1 + t)/2`
    Sld,
    /// `(t − 1)/log t`
    Bkm,
    /// `((1 + √t)/2)²`
    WignerYanase,
    /// `2t/(1 + t)`
    Harmonic,
    Custom(String, Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for MonotoneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl MonotoneFunction {
    pub fn name(&self) -> String {
        match self {
            Self::Sld => "sld".into(),
            Self::Bkm => "bkm".into(),
            Self::WignerYanase => "wigner-yanase".into(),
            Self::Harmonic => "harmonic".into(),
            Self::Custom(name, _) => name.clone(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sld" => Ok(Self::Sld),
            "bkm" => Ok(Self::Bkm),
            "wigner-yanase" => Ok(Self::WignerYanase),
            "harmonic" => Ok(Self::Harmonic),
            other => Err(Error::InvalidMonotoneFunction(format!("unknown form `{other}`"))),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Sld => 0.5 * (1.0 + t),
            Self::Bkm => {
                if (t - 1.0).abs() < 1e-8 {
                    // series of (t−1)/log t around 1
                    let x = t - 1.0;
                    1.0 + x / 2.0 - x * x / 12.0
                } else {
                    (t - 1.0) / t.ln()
                }
            }
            Self::WignerYanase => (0.5 * (1.0 + t.sqrt())).powi(2),
            Self::Harmonic => 2.0 * t / (1.0 + t),
            Self::Custom(_, f) => f(t),
        }
    }
}

/// `𝓛^F`: entries `dρ_ij / (λ_j F(λ_i/λ_j))` in the eigenbasis of `ρ`.
pub fn log_derivative_f(rho: &DensityMatrix, drho: &CMatrix, f: &MonotoneFunction) -> Result<CMatrix> {
    check_same_dim(drho, rho.dim())?;
    let one = f.eval(1.0);
    if (one - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMonotoneFunction(format!("F(1) = {one}")));
    }
    let sd = rho.spectrum();
    let lam = &sd.eigenvalues;
    let mut a = sd.to_eigenbasis(drho);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            let v = f.eval(lam[i] / lam[j]);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidMonotoneFunction(format!("F({}) = {v}", lam[i] / lam[j])));
            }
            a[(i, j)] /= lam[j] * v;
        }
    }
    Ok(sd.from_eigenbasis(&a))
}

/// Hermitian versions `i^r [… [H, log ρ], …, log ρ]` of the multiple commutators.
pub fn multiple_commutators(rho: &DensityMatrix, h: &CMatrix, max_r: usize) -> Vec<CMatrix> {
    let log = rho.log();
    let mut cur = h.clone();
    let mut out = Vec::with_capacity(max_r);
    for r in 1..=max_r {
        cur = commutator(&cur, &log);
        out.push(&cur * C64::i().powu(r as u32));
    }
    out
}
