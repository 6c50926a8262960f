//! Quantum statistical experiments on `M_d(C)`.
//!
//! States are faithful density matrices indexed by labels with a distinguished
//! base point. Words in the free group over the cocycle symbols `u_t(θ)` are
//! evaluated through the Connes cocycles `ρ_θ^{it} ρ^{-it}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermlin::{
    check_same_dim, hermitian_deviation, hs_inner, hs_norm, identity, kron, real, trace, CMatrix,
    DensityMatrix, C64,
};

/// States with a smaller eigenvalue are rejected.
pub const FAITHFUL_TOL: f64 = 1e-10;
/// Letters with `|t|` below this are the identity.
pub const ZERO_TIME: f64 = 1e-15;
/// Hilbert–Schmidt residual below which a matrix lies in a span.
pub const SPAN_TOL: f64 = 1e-8;
/// Default `t` grid for sufficiency and minimality.
pub const DEFAULT_T_GRID: [f64; 8] = [-2.3, -1.7, -1.0, -0.5, 0.5, 1.0, 1.7, 2.3];

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumExperiment {
    labels: Vec<String>,
    states: Vec<DensityMatrix>,
    base: usize,
}

impl QuantumExperiment {
    pub fn new(labels: Vec<String>, states: Vec<DensityMatrix>, base: usize) -> Result<Self> {
        if labels.is_empty() || labels.len() != states.len() {
            return Err(Error::InvalidExperiment(format!("{} labels for {} states", labels.len(), states.len())));
        }
        if base >= labels.len() {
            return Err(Error::OutOfRange(format!("base index {base}")));
        }
        let d = states[0].dim();
        for (label, s) in labels.iter().zip(&states) {
            if s.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
            }
            if s.min_eigenvalue() <= FAITHFUL_TOL {
                return Err(Error::InvalidExperiment(format!(
                    "state `{label}` has eigenvalue {:.3e}",
                    s.min_eigenvalue()
                )));
            }
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidExperiment(format!("duplicate label `{a}`")));
            }
        }
        Ok(Self { labels, states, base })
    }

    /// Labels `θ0, θ1, …` with base `θ0`.
    pub fn from_states(states: Vec<DensityMatrix>) -> Result<Self> {
        let labels = (0..states.len()).map(|i| format!("θ{i}")).collect();
        Self::new(labels, states, 0)
    }

    /// Diagonal experiment from probability rows.
    pub fn diagonal(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_states(rows.iter().map(|r| DensityMatrix::from_diagonal(r)).collect::<Result<_>>()?)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn state(&self, theta: usize) -> Result<&DensityMatrix> {
        self.states.get(theta).ok_or_else(|| Error::UnknownLabel(format!("#{theta}")))
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn base_state(&self) -> &DensityMatrix {
        &self.states[self.base]
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn num_params(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `ρ_θ ↦ U ρ_θ U*`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        check_same_dim(u, self.dim())?;
        let states = self
            .states
            .iter()
            .map(|s| DensityMatrix::normalized(u * s.matrix() * u.adjoint()))
            .collect::<Result<_>>()?;
        Self::new(self.labels.clone(), states, self.base)
    }

    /// `ρ_θ ↦ ρ_θ ⊗ τ` with a fixed ancilla state.
    pub fn with_ancilla(&self, ancilla: &DensityMatrix) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|s| DensityMatrix::normalized(kron(s.matrix(), ancilla.matrix())))
            .collect::<Result<_>>()?;
        Self::new(self.labels.clone(), states, self.base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Letter {
    pub theta: usize,
    pub t: f64,
    pub inverse: bool,
}

/// Element of the free group over the symbols `u_t(θ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    /// Drops letters with `θ = base` or `|t| < 1e-15`. No other reduction.
    pub fn new(letters: impl IntoIterator<Item = Letter>, base: usize) -> Self {
        Self {
            letters: letters
                .into_iter()
                .filter(|l| l.theta != base && l.t.abs() >= ZERO_TIME)
                .collect(),
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn letter(theta: usize, t: f64, base: usize) -> Self {
        Self::new([Letter { theta, t, inverse: false }], base)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| Letter { inverse: !l.inverse, ..*l })
                .collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self { letters: self.letters.iter().chain(&other.letters).copied().collect() }
    }

    /// Image under `u_t(θ) ↦ u_s(θ)⁻¹ u_{t+s}(θ)`, extended letterwise.
    pub fn modular_shift(&self, s: f64, base: usize) -> Self {
        let mut out = Vec::with_capacity(2 * self.letters.len());
        for l in &self.letters {
            let a = Letter { theta: l.theta, t: s, inverse: true };
            let b = Letter { theta: l.theta, t: l.t + s, inverse: false };
            if l.inverse {
                out.push(Letter { inverse: true, ..b });
                out.push(Letter { inverse: false, ..a });
            } else {
                out.push(a);
                out.push(b);
            }
        }
        Self::new(out, base)
    }
}

/// `σ_t(A) = ρ^{it} A ρ^{-it}`.
pub fn modular_orbit(rho: &DensityMatrix, a: &CMatrix, t: f64) -> Result<CMatrix> {
    check_same_dim(a, rho.dim())?;
    let u = rho.unitary_power(t);
    Ok(&u * a * u.adjoint())
}

/// `[Dφ1, Dφ2]_t = ρ1^{it} ρ2^{-it}`.
pub fn relative_cocycle(rho1: &DensityMatrix, rho2: &DensityMatrix, t: f64) -> Result<CMatrix> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { expected: rho1.dim(), got: rho2.dim() });
    }
    Ok(rho1.unitary_power(t) * rho2.unitary_power(-t))
}

/// `[Dφ_θ, Dφ]_t` against the base state.
pub fn connes_cocycle(e: &QuantumExperiment, theta: usize, t: f64) -> Result<CMatrix> {
    relative_cocycle(e.state(theta)?, e.base_state(), t)
}

/// Ordered product of the word's cocycles.
pub fn word_product(e: &QuantumExperiment, g: &GroupWord) -> Result<CMatrix> {
    let mut acc = identity(e.dim());
    for l in &g.letters {
        let u = connes_cocycle(e, l.theta, l.t)?;
        acc = if l.inverse { acc * u.adjoint() } else { acc * u };
    }
    Ok(acc)
}

/// `ω_E(g) = Tr(ρ_{θ0} π(g))`.
pub fn canonical_state(e: &QuantumExperiment, g: &GroupWord) -> Result<C64> {
    if g.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(e.base_state().expect(&word_product(e, g)?))
}

/// `ω_θ(g) = Tr(ρ_θ π(g))`.
pub fn state_at_theta(e: &QuantumExperiment, theta: usize, g: &GroupWord) -> Result<C64> {
    let rho = e.state(theta)?;
    if g.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(rho.expect(&word_product(e, g)?))
}

/// `Tr(ρ_θ^{1-p} ρ^p)` for `p ∈ (0, 1)`.
pub fn quantum_hellinger(rho_theta: &DensityMatrix, rho: &DensityMatrix, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(format!("p = {p} must lie in (0, 1)")));
    }
    if rho.dim() != rho_theta.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: rho_theta.dim() });
    }
    let a = rho_theta.power(real(1.0 - p));
    let b = rho.power(real(p));
    Ok(trace(&(a * b)).re)
}

/// Relative quasi-entropy `S_p = (1 - Tr(ρ_θ^{1-p} ρ^p)) / (p(1-p))`.
pub fn quasi_entropy(rho_theta: &DensityMatrix, rho: &DensityMatrix, p: f64) -> Result<f64> {
    Ok((1.0 - quantum_hellinger(rho_theta, rho, p)?) / (p * (1.0 - p)))
}

/// `Tr(√ρ √ρ_θ)`.
pub fn transition_probability(rho_theta: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    quantum_hellinger(rho_theta, rho, 0.5)
}

/// Block direct sum `λρ1_θ ⊕ (1-λ)ρ2_θ`.
pub fn mix_experiments(e1: &QuantumExperiment, e2: &QuantumExperiment, lambda: f64) -> Result<QuantumExperiment> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::OutOfRange(format!("λ = {lambda} must lie in (0, 1)")));
    }
    if e1.labels != e2.labels || e1.base != e2.base {
        return Err(Error::MismatchedParameters);
    }
    let (d1, d2) = (e1.dim(), e2.dim());
    let states = e1
        .states
        .iter()
        .zip(&e2.states)
        .map(|(a, b)| {
            let mut m = CMatrix::zeros(d1 + d2, d1 + d2);
            m.view_mut((0, 0), (d1, d1)).copy_from(&(a.matrix() * real(lambda)));
            m.view_mut((d1, d1), (d2, d2)).copy_from(&(b.matrix() * real(1.0 - lambda)));
            DensityMatrix::normalized(m)
        })
        .collect::<Result<_>>()?;
    QuantumExperiment::new(e1.labels.clone(), states, e1.base)
}

/// Orthonormal (Hilbert–Schmidt) basis grown by Gram–Schmidt.
#[derive(Debug, Clone, Default)]
struct HsSpan {
    basis: Vec<CMatrix>,
}

impl HsSpan {
    fn residual_matrix(&self, a: &CMatrix) -> CMatrix {
        let mut r = a.clone();
        // Two passes keep the basis orthonormal to machine precision.
        for _ in 0..2 {
            for q in &self.basis {
                let c = hs_inner(q, &r);
                r -= q * c;
            }
        }
        r
    }

    fn residual(&self, a: &CMatrix) -> f64 {
        hs_norm(&self.residual_matrix(a))
    }

    /// Adds the normalized residual when it exceeds `tol` relative to `‖a‖`.
    fn push(&mut self, a: &CMatrix, tol: f64) -> bool {
        let scale = hs_norm(a);
        if scale == 0.0 {
            return false;
        }
        let r = self.residual_matrix(a);
        let n = hs_norm(&r);
        if n <= tol * scale.max(1.0) {
            return false;
        }
        self.basis.push(r / real(n));
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub sufficient: bool,
    pub max_residual: f64,
    pub t_grid: Vec<f64>,
}

/// Checks that every cocycle on `Θ × t_grid` lies in the span of `basis`,
/// after validating that the span is a unital *-subalgebra.
pub fn is_sufficient_subalgebra(e: &QuantumExperiment, basis: &[CMatrix], t_grid: &[f64]) -> Result<SufficiencyReport> {
    let d = e.dim();
    let mut span = HsSpan::default();
    for b in basis {
        check_same_dim(b, d)?;
        span.push(b, 1e-12);
    }
    if span.residual(&identity(d)) > SPAN_TOL {
        return Err(Error::InvalidBasis("span does not contain the unit".into()));
    }
    for b in &span.basis {
        if span.residual(&b.adjoint()) > SPAN_TOL {
            return Err(Error::InvalidBasis("span is not closed under adjoints".into()));
        }
        for c in &span.basis {
            if span.residual(&(b * c)) > SPAN_TOL {
                return Err(Error::InvalidBasis("span is not closed under multiplication".into()));
            }
        }
    }
    let mut max_residual: f64 = 0.0;
    for theta in 0..e.num_params() {
        for &t in t_grid {
            max_residual = max_residual.max(span.residual(&connes_cocycle(e, theta, t)?));
        }
    }
    Ok(SufficiencyReport { sufficient: max_residual < SPAN_TOL, max_residual, t_grid: t_grid.to_vec() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalBasis {
    /// Orthonormal in the Hilbert–Schmidt inner product.
    pub basis: Vec<CMatrix>,
    pub rounds: usize,
    pub t_grid: Vec<f64>,
}

impl MinimalBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Algebra generated by the unit and the cocycles on `Θ × t_grid`.
pub fn minimal_sufficient_basis(e: &QuantumExperiment, t_grid: &[f64]) -> Result<MinimalBasis> {
    if t_grid.is_empty() {
        return Err(Error::OutOfRange("empty t grid".into()));
    }
    let d = e.dim();
    let tol = 1e-9;
    let mut span = HsSpan::default();
    span.push(&identity(d), tol);
    for theta in 0..e.num_params() {
        for &t in t_grid {
            let u = connes_cocycle(e, theta, t)?;
            span.push(&u, tol);
            span.push(&u.adjoint(), tol);
        }
    }
    let cap = d * d + 5;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let current = span.basis.clone();
        let mut grew = false;
        for a in &current {
            grew |= span.push(&a.adjoint(), tol);
            for b in &current {
                grew |= span.push(&(a * b), tol);
            }
        }
        if !grew || span.basis.len() >= d * d || rounds >= cap {
            break;
        }
    }
    Ok(MinimalBasis { basis: span.basis, rounds, t_grid: t_grid.to_vec() })
}

/// One block `p A p ≅ M_left ⊗ M_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub projector: CMatrix,
    pub left_dim: usize,
    pub right_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub factorizes: bool,
    pub residual: f64,
}

/// Orthonormal basis of the range of a projector (Gram–Schmidt on its columns),
/// as the columns of a `d × rank` matrix.
fn range_basis(p: &CMatrix) -> CMatrix {
    let d = p.nrows();
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    for j in 0..d {
        let mut v = p.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / real(n));
        }
    }
    CMatrix::from_columns(&cols)
}

/// `Tr_R` and `Tr_L` of a `(l·r) × (l·r)` matrix, left-major ordering.
fn partial_traces(m: &CMatrix, l: usize, r: usize) -> (CMatrix, CMatrix) {
    let mut left = CMatrix::zeros(l, l);
    let mut right = CMatrix::zeros(r, r);
    for a in 0..l {
        for b in 0..l {
            for k in 0..r {
                left[(a, b)] += m[(a * r + k, b * r + k)];
            }
        }
    }
    for a in 0..r {
        for b in 0..r {
            for k in 0..l {
                right[(a, b)] += m[(k * r + a, k * r + b)];
            }
        }
    }
    (left, right)
}

/// Tests whether every `ρ_θ` has the form `⊕_i φ_θ(p_i) ρ^L_{θ,i} ⊗ ρ^R_i` with
/// `ρ^R_i` independent of `θ`. Each block is identified with `C^left ⊗ C^right`
/// through the Gram–Schmidt basis of its projector's columns.
pub fn factorization_check(e: &QuantumExperiment, blocks: &[Block]) -> Result<FactorizationReport> {
    let d = e.dim();
    let mut total = CMatrix::zeros(d, d);
    let mut ranges: Vec<CMatrix> = Vec::with_capacity(blocks.len());
    for (i, b) in blocks.iter().enumerate() {
        check_same_dim(&b.projector, d)?;
        let p = &b.projector;
        if hermitian_deviation(p) > 1e-10 || hs_norm(&(p * p - p)) > 1e-10 {
            return Err(Error::InvalidBlocks(format!("block {i} is not an orthogonal projector")));
        }
        let v = range_basis(p);
        if v.ncols() != b.left_dim * b.right_dim || b.left_dim == 0 || b.right_dim == 0 {
            return Err(Error::InvalidBlocks(format!(
                "block {i} has rank {} but dimensions {}×{}",
                v.ncols(),
                b.left_dim,
                b.right_dim
            )));
        }
        for (j, other) in blocks[..i].iter().enumerate() {
            if hs_norm(&(p * &other.projector)) > 1e-10 {
                return Err(Error::InvalidBlocks(format!("blocks {j} and {i} overlap")));
            }
        }
        total += p;
        ranges.push(v);
    }
    if hs_norm(&(total - identity(d))) > 1e-10 {
        return Err(Error::InvalidBlocks("projectors do not sum to the identity".into()));
    }

    let mut residual: f64 = 0.0;
    for rho in &e.states {
        let m = rho.matrix();
        // Coherences between blocks violate the direct-sum form.
        for (i, bi) in blocks.iter().enumerate() {
            for bj in &blocks[i + 1..] {
                residual = residual.max(hs_norm(&(&bi.projector * m * &bj.projector)));
            }
        }
    }
    for (b, v) in blocks.iter().zip(&ranges) {
        let mut reference: Option<CMatrix> = None;
        for rho in &e.states {
            let c = v.adjoint() * rho.matrix() * v;
            let weight = trace(&c).re;
            let c = c / real(weight);
            let (l, r) = partial_traces(&c, b.left_dim, b.right_dim);
            residual = residual.max(hs_norm(&(&c - kron(&l, &r))));
            match &reference {
                None => reference = Some(r),
                Some(r0) => residual = residual.max(hs_norm(&(r - r0))),
            }
        }
    }
    Ok(FactorizationReport { factorizes: residual < SPAN_TOL, residual })
}

/// `max_g |ω_E(g) - ω_F(g)|` over the given words. A zero value is necessary
/// for equivalence; it is never a proof of it.
pub fn equivalence_probe(e: &QuantumExperiment, f: &QuantumExperiment, words: &[GroupWord]) -> Result<f64> {
    if e.labels != f.labels || e.base != f.base {
        return Err(Error::MismatchedParameters);
    }
    let mut worst: f64 = 0.0;
    for g in words {
        worst = worst.max((canonical_state(e, g)? - canonical_state(f, g)?).norm());
    }
    Ok(worst)
}

/// Gram matrix `[ω(g_i⁻¹ g_j)]`.
pub fn canonical_gram(e: &QuantumExperiment, words: &[GroupWord]) -> Result<CMatrix> {
    let k = words.len();
    let mut g = CMatrix::zeros(k, k);
    for i in 0..k {
        let inv = words[i].inverse();
        for j in 0..k {
            g[(i, j)] = canonical_state(e, &inv.concat(&words[j]))?;
        }
    }
    Ok(g)
}
