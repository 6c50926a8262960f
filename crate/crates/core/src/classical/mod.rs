//! Classical experiments on finite sample spaces.
//!
//! An experiment is a table of probability rows, one per parameter label. The
//! main objects are its canonical measure on the simplex of likelihood-ratio
//! vectors, the Hellinger transform that characterizes it, closed-form limits
//! (Poisson, Gaussian shift) and the Le Cam deficiency solved as a linear
//! program.

pub mod simplex;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::convergence::{fit_loglog_slope, GAP_FLOOR};
use crate::error::{Error, Result};
use simplex::LinearProgram;

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// Truncation target for Poisson experiments.
pub const POISSON_TAIL: f64 = 1e-12;
/// `|Ω1|·|Ω2|` above which the deficiency LP is refused.
pub const MAX_KERNEL_ENTRIES: usize = 10_000;

/// `(P_θ : θ ∈ Θ)` on `Ω = {0, …, k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalExperiment {
    labels: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl ClassicalExperiment {
    /// Any finite experiment: rows nonnegative and summing to one.
    pub fn new(labels: Vec<String>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if labels.is_empty() || labels.len() != probs.len() {
            return Err(Error::InvalidExperiment(format!(
                "{} labels for {} rows",
                labels.len(),
                probs.len()
            )));
        }
        let k = probs[0].len();
        if k == 0 {
            return Err(Error::InvalidExperiment("empty sample space".into()));
        }
        for (label, row) in labels.iter().zip(&probs) {
            if row.len() != k {
                return Err(Error::InvalidExperiment(format!("row `{label}` has {} outcomes, expected {k}", row.len())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidExperiment(format!("row `{label}` has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidExperiment(format!("row `{label}` sums to {s}")));
            }
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidExperiment(format!("duplicate label `{a}`")));
            }
        }
        Ok(Self { labels, probs })
    }

    /// Experiment whose laws are mutually absolutely continuous: every outcome
    /// has positive probability under all parameters or under none.
    pub fn new_equivalent(labels: Vec<String>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let e = Self::new(labels, probs)?;
        e.require_mutual_continuity()?;
        Ok(e)
    }

    /// Labels `θ0, θ1, …`.
    pub fn from_rows(probs: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| format!("θ{i}")).collect();
        Self::new(labels, probs)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn num_params(&self) -> usize {
        self.labels.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.probs[0].len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn is_mutually_continuous(&self) -> bool {
        (0..self.num_outcomes()).all(|w| {
            let positive = self.probs.iter().filter(|row| row[w] > 0.0).count();
            positive == 0 || positive == self.num_params()
        })
    }

    pub fn require_mutual_continuity(&self) -> Result<()> {
        if self.is_mutually_continuous() {
            Ok(())
        } else {
            Err(Error::InvalidExperiment("laws are not mutually absolutely continuous".into()))
        }
    }

    /// Independent product on `Ω1 × Ω2` (outcome `(a, b)` at index `a·|Ω2| + b`).
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.labels != other.labels {
            return Err(Error::MismatchedParameters);
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect())
            .collect();
        Self::new(self.labels.clone(), probs)
    }

    /// Push every row through a stochastic matrix (`|Ω| × |Ω'|`).
    pub fn garble(&self, kernel: &[Vec<f64>]) -> Result<Self> {
        if kernel.len() != self.num_outcomes() {
            return Err(Error::DimensionMismatch { expected: self.num_outcomes(), got: kernel.len() });
        }
        let width = kernel[0].len();
        for row in kernel {
            let s: f64 = row.iter().sum();
            if row.len() != width || row.iter().any(|v| *v < 0.0) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidExperiment("kernel is not stochastic".into()));
            }
        }
        let probs = self
            .probs
            .iter()
            .map(|p| {
                (0..width)
                    .map(|j| p.iter().zip(kernel).map(|(pi, k)| pi * k[j]).sum())
                    .collect()
            })
            .collect();
        Self::new(self.labels.clone(), probs)
    }

    /// CSV with a header `label,o0,o1,…` and one row per parameter.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for w in 0..self.num_outcomes() {
            let _ = write!(out, ",o{w}");
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.probs) {
            out.push_str(label);
            for p in row {
                let _ = write!(out, ",{p:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidExperiment("empty CSV".into()))?;
        let width = header.split(',').count() - 1;
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let label = fields.next().unwrap_or_default().trim().to_string();
            let row = fields
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidExperiment(format!("line {}: {e}", n + 2)))?;
            if row.len() != width {
                return Err(Error::InvalidExperiment(format!("line {}: expected {width} values", n + 2)));
            }
            labels.push(label);
            probs.push(row);
        }
        Self::new(labels, probs)
    }
}

/// A point `z` of the simplex `S_Θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidSimplexPoint("empty".into()));
        }
        if z.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSimplexPoint("negative or non-finite coordinate".into()));
        }
        let s: f64 = z.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidSimplexPoint(format!("coordinates sum to {s}")));
        }
        Ok(Self(z))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn vertex(k: usize, m: usize) -> Self {
        let mut z = vec![0.0; m];
        z[k] = 1.0;
        Self(z)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_z(z: &SimplexPoint, m: usize) -> Result<()> {
    if z.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: z.len() });
    }
    Ok(())
}

/// `∏ x_θ^{z_θ}` with `0^0 = 1`.
fn weighted_product(xs: impl Iterator<Item = f64>, z: &[f64]) -> f64 {
    xs.zip(z)
        .map(|(x, zi)| if *zi == 0.0 { 1.0 } else { x.powf(*zi) })
        .product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub v: Vec<f64>,
    pub mass: f64,
}

/// Law of the normalized likelihood vector `v(ω) = (P_θ(ω)/μ(ω))_θ` under `μ = Σ_θ P_θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalMeasure {
    pub atoms: Vec<Atom>,
}

impl CanonicalMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `∫ ∏ v_θ^{z_θ} σ(dv)`.
    pub fn hellinger_transform(&self, z: &SimplexPoint) -> Result<f64> {
        if let Some(a) = self.atoms.first() {
            check_z(z, a.v.len())?;
        }
        Ok(self
            .atoms
            .iter()
            .map(|a| a.mass * weighted_product(a.v.iter().copied(), z.coords()))
            .sum())
    }

    /// `Q^θ(dv) = v_θ σ(dv)`, as masses per atom.
    pub fn marginal(&self, theta: usize) -> Vec<f64> {
        self.atoms.iter().map(|a| a.v[theta] * a.mass).collect()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                (a.mass - b.mass).abs() <= tol
                    && a.v.iter().zip(&b.v).all(|(x, y)| (x - y).abs() <= tol)
            })
    }
}

pub fn canonical_measure(e: &ClassicalExperiment) -> Result<CanonicalMeasure> {
    let m = e.num_params();
    let mut atoms: Vec<Atom> = (0..e.num_outcomes())
        .filter_map(|w| {
            let mu: f64 = e.probs.iter().map(|row| row[w]).sum();
            (mu > 0.0).then(|| Atom { v: e.probs.iter().map(|row| row[w] / mu).collect(), mass: mu })
        })
        .collect();
    if atoms.is_empty() {
        return Err(Error::InvalidExperiment("experiment has empty support".into()));
    }
    atoms.sort_by(|a, b| {
        a.v.iter()
            .zip(&b.v)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match merged.last_mut() {
            Some(last)
                if last.v.iter().zip(&atom.v).all(|(x, y)| (x - y).abs() <= ATOM_MERGE_TOL) =>
            {
                last.mass += atom.mass;
            }
            _ => merged.push(atom),
        }
    }
    debug_assert!((merged.iter().map(|a| a.mass).sum::<f64>() - m as f64).abs() < 1e-10);
    Ok(CanonicalMeasure { atoms: merged })
}

/// `η(z) = Σ_ω ∏_θ P_θ(ω)^{z_θ}`.
pub fn hellinger_transform(e: &ClassicalExperiment, z: &SimplexPoint) -> Result<f64> {
    check_z(z, e.num_params())?;
    Ok((0..e.num_outcomes())
        .map(|w| weighted_product(e.probs.iter().map(|row| row[w]), z.coords()))
        .sum())
}

/// `Σ_ω (√p1 - √p2)² = 2(1 - η(½, ½))`. Supports need not coincide.
pub fn hellinger_distance(p1: &[f64], p2: &[f64]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch { expected: p1.len(), got: p2.len() });
    }
    Ok(p1.iter().zip(p2).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum())
}

/// `η` of the `n`-fold product, by multiplicativity.
pub fn iid_hellinger(e: &ClassicalExperiment, n: u64, z: &SimplexPoint) -> Result<f64> {
    let eta = hellinger_transform(e, z)?;
    Ok((n as f64 * eta.ln()).exp())
}

/// Rows `Binomial(n, θ_i / n)` on `{0, …, n}`.
pub fn binomial_experiment(n: u64, thetas: &[f64]) -> Result<ClassicalExperiment> {
    let labels = thetas.iter().map(|t| format!("{t}")).collect();
    let mut probs = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let p = theta / n as f64;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange(format!("θ = {theta} must lie in (0, n = {n})")));
        }
        let mut row: Vec<f64> = (0..=n)
            .map(|k| (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp())
            .collect();
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
        probs.push(row);
    }
    ClassicalExperiment::new(labels, probs)
}

/// `(∏ (θ_i/n)^{z_i} + ∏ (1 - θ_i/n)^{z_i})^n`.
pub fn binomial_hellinger(n: u64, thetas: &[f64], z: &SimplexPoint) -> Result<f64> {
    check_z(z, thetas.len())?;
    let nf = n as f64;
    if thetas.iter().any(|t| !(*t > 0.0 && *t < nf)) {
        return Err(Error::OutOfRange(format!("θ must lie in (0, {n})")));
    }
    let success = weighted_product(thetas.iter().map(|t| t / nf), z.coords());
    let failure = weighted_product(thetas.iter().map(|t| 1.0 - t / nf), z.coords());
    Ok((nf * (success + failure).ln()).exp())
}

/// Poisson rows truncated at `K` with the tail `≥ K` lumped into the last outcome.
/// Returns the experiment and `K`.
pub fn poisson_experiment(thetas: &[f64]) -> Result<(ClassicalExperiment, usize)> {
    if thetas.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::OutOfRange("Poisson means must be positive".into()));
    }
    let pmf = |theta: f64, k: usize| -> f64 {
        let mut p = (-theta).exp();
        for j in 1..=k {
            p *= theta / j as f64;
        }
        p
    };
    let tail = |theta: f64, k: usize| -> f64 {
        let mut s = 0.0;
        let mut p = pmf(theta, k);
        let mut j = k;
        while p > 1e-300 && (j < k + 10_000) {
            s += p;
            j += 1;
            p *= theta / j as f64;
            if j as f64 > theta && p < s * 1e-18 {
                break;
            }
        }
        s
    };
    let mut k = 1;
    while thetas.iter().any(|&t| tail(t, k) >= POISSON_TAIL) {
        k += 1;
    }
    let probs = thetas
        .iter()
        .map(|&t| {
            let mut row: Vec<f64> = (0..k).map(|j| pmf(t, j)).collect();
            row.push(tail(t, k));
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    let labels = thetas.iter().map(|t| format!("{t}")).collect();
    Ok((ClassicalExperiment::new(labels, probs)?, k))
}

/// `exp(∏ θ_i^{z_i} - Σ θ_i z_i)`.
pub fn poisson_limit_hellinger(thetas: &[f64], z: &SimplexPoint) -> Result<f64> {
    check_z(z, thetas.len())?;
    if thetas.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::OutOfRange("Poisson means must be positive".into()));
    }
    let prod = weighted_product(thetas.iter().copied(), z.coords());
    let lin: f64 = thetas.iter().zip(z.coords()).map(|(t, zi)| t * zi).sum();
    Ok((prod - lin).exp())
}

/// Symmetric positive-semidefinite Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix(DMatrix<f64>);

impl FisherMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::InvalidExperiment(format!("Fisher matrix asymmetric by {asym:.3e}")));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min = sym.clone().symmetric_eigenvalues().min();
        if min < -1e-10 {
            return Err(Error::InvalidExperiment(format!("Fisher matrix has eigenvalue {min:.3e}")));
        }
        Ok(Self(sym))
    }

    pub fn scalar(i: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, i))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn quad(&self, a: &[f64], b: &[f64]) -> f64 {
        let av = DVector::from_column_slice(a);
        let bv = DVector::from_column_slice(b);
        av.dot(&(&self.0 * bv))
    }

    fn require_invertible(&self) -> Result<()> {
        if self.0.clone().cholesky().is_none() {
            return Err(Error::Singular("Fisher matrix is not positive definite".into()));
        }
        Ok(())
    }
}

fn check_shifts(shifts: &[Vec<f64>], fisher: &FisherMatrix) -> Result<()> {
    for s in shifts {
        if s.len() != fisher.dim() {
            return Err(Error::DimensionMismatch { expected: fisher.dim(), got: s.len() });
        }
    }
    Ok(())
}

/// Hellinger transform of `(N(u_i, I⁻¹))_i`:
/// `exp(-½[Σ z_i u_iᵀ I u_i - ūᵀ I ū])`, `ū = Σ z_i u_i`.
pub fn gaussian_shift_hellinger(shifts: &[Vec<f64>], fisher: &FisherMatrix, z: &SimplexPoint) -> Result<f64> {
    check_z(z, shifts.len())?;
    check_shifts(shifts, fisher)?;
    fisher.require_invertible()?;
    let m = fisher.dim();
    let mut bar = vec![0.0; m];
    let mut weighted = 0.0;
    for (u, zi) in shifts.iter().zip(z.coords()) {
        weighted += zi * fisher.quad(u, u);
        for (b, x) in bar.iter_mut().zip(u) {
            *b += zi * x;
        }
    }
    Ok((-0.5 * (weighted - fisher.quad(&bar, &bar))).exp())
}

/// `E_{θ0}[∏_j (dP_{θ_j}/dP_{θ0})^{i t_j}]` for letters `(θ_j, t_j)`.
pub fn likelihood_ratio_characteristic(
    e: &ClassicalExperiment,
    base: usize,
    letters: &[(usize, f64)],
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for w in 0..e.num_outcomes() {
        let p0 = e.probs[base][w];
        if p0 == 0.0 {
            continue;
        }
        let mut phase = 0.0;
        for &(theta, t) in letters {
            let p = *e
                .probs
                .get(theta)
                .ok_or_else(|| Error::UnknownLabel(format!("#{theta}")))?
                .get(w)
                .unwrap_or(&0.0);
            if p == 0.0 {
                return Err(Error::InvalidExperiment("likelihood ratio vanishes on the base support".into()));
            }
            phase += t * (p / p0).ln();
        }
        acc += Complex64::from_polar(p0, phase);
    }
    Ok(acc)
}

/// Characteristic function of the log-likelihood ratios of the Gaussian shift
/// `N(u, I⁻¹)` under `u = 0`: `E_0[exp(i Σ_j t_j log dP_{u_j}/dP_0)]`.
pub fn gaussian_shift_lr_characteristic(
    shifts: &[Vec<f64>],
    fisher: &FisherMatrix,
    ts: &[f64],
) -> Result<Complex64> {
    check_shifts(shifts, fisher)?;
    if shifts.len() != ts.len() {
        return Err(Error::DimensionMismatch { expected: shifts.len(), got: ts.len() });
    }
    // log LR_u = uᵀ I X - ½ uᵀ I u with X ~ N(0, I⁻¹), so Cov(log LR_u, log LR_v) = uᵀ I v.
    let mut mean = 0.0;
    let mut var = 0.0;
    for (j, (uj, tj)) in shifts.iter().zip(ts).enumerate() {
        mean -= 0.5 * tj * fisher.quad(uj, uj);
        for (uk, tk) in shifts.iter().zip(ts).skip(j) {
            let c = tj * tk * fisher.quad(uj, uk);
            var += if std::ptr::eq(uj, uk) { c } else { 2.0 * c };
        }
    }
    Ok(Complex64::from_polar((-0.5 * var).exp(), mean))
}

/// Local exponential family `p_θ(ω) ∝ q(ω) exp(θ·T(ω))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFamily {
    base: Vec<f64>,
    stats: Vec<Vec<f64>>,
}

impl ExponentialFamily {
    /// `base` is a positive weight per outcome; `stats[k][ω]` the k-th statistic.
    pub fn new(base: Vec<f64>, stats: Vec<Vec<f64>>) -> Result<Self> {
        if base.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidExperiment("base weights must be positive".into()));
        }
        if stats.iter().any(|s| s.len() != base.len()) {
            return Err(Error::DimensionMismatch { expected: base.len(), got: stats.len() });
        }
        Ok(Self { base, stats })
    }

    pub fn param_dim(&self) -> usize {
        self.stats.len()
    }

    pub fn probs(&self, theta: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = self
            .base
            .iter()
            .enumerate()
            .map(|(o, q)| q * theta.iter().zip(&self.stats).map(|(t, s)| t * s[o]).sum::<f64>().exp())
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// `Cov_θ(T)`.
    pub fn fisher(&self, theta: &[f64]) -> Result<FisherMatrix> {
        let p = self.probs(theta);
        let m = self.param_dim();
        let means: Vec<f64> = self.stats.iter().map(|s| s.iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
        let cov = DMatrix::from_fn(m, m, |a, b| {
            p.iter()
                .enumerate()
                .map(|(o, po)| po * (self.stats[a][o] - means[a]) * (self.stats[b][o] - means[b]))
                .sum()
        });
        FisherMatrix::new(cov)
    }

    /// Rows `p_{θ0 + u_i/√n}`.
    pub fn local_experiment(&self, theta0: &[f64], shifts: &[Vec<f64>], n: u64) -> Result<ClassicalExperiment> {
        let scale = 1.0 / (n as f64).sqrt();
        let rows = shifts
            .iter()
            .map(|u| {
                let theta: Vec<f64> = theta0.iter().zip(u).map(|(a, b)| a + b * scale).collect();
                let mut row = self.probs(&theta);
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                row
            })
            .collect();
        ClassicalExperiment::from_rows(rows)
    }

    /// `η` of the `n`-sample local experiment.
    pub fn local_iid_hellinger(&self, theta0: &[f64], shifts: &[Vec<f64>], n: u64, z: &SimplexPoint) -> Result<f64> {
        iid_hellinger(&self.local_experiment(theta0, shifts, n)?, n, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub z_index: usize,
    pub value: f64,
    pub limit: f64,
    pub gap: f64,
}

/// `|η_n(z) - η_∞(z)|` over a schedule and a grid of simplex points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub schedule: Vec<u64>,
    pub z_grid: Vec<SimplexPoint>,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted log-log slope per grid point, when at least two gaps sit above the floor.
    pub slopes: Vec<Option<f64>>,
}

impl ConvergenceTable {
    pub fn gaps_at(&self, z_index: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.z_index == z_index).map(|r| r.gap).collect()
    }
}

pub fn weak_convergence_report<F, G>(
    schedule: &[u64],
    finite: F,
    limit: G,
    z_grid: &[SimplexPoint],
) -> Result<ConvergenceTable>
where
    F: Fn(u64, &SimplexPoint) -> Result<f64>,
    G: Fn(&SimplexPoint) -> Result<f64>,
{
    let limits = z_grid.iter().map(&limit).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(schedule.len() * z_grid.len());
    for &n in schedule {
        for (zi, z) in z_grid.iter().enumerate() {
            let value = finite(n, z)?;
            rows.push(ConvergenceRow { n, z_index: zi, value, limit: limits[zi], gap: (value - limits[zi]).abs() });
        }
    }
    let ns: Vec<f64> = schedule.iter().map(|n| *n as f64).collect();
    let mut table = ConvergenceTable { schedule: schedule.to_vec(), z_grid: z_grid.to_vec(), rows, slopes: vec![] };
    table.slopes = (0..z_grid.len()).map(|zi| fit_loglog_slope(&ns, &table.gaps_at(zi), GAP_FLOOR)).collect();
    Ok(table)
}

/// Optimal randomization: deficiency value and witnessing kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deficiency {
    pub delta: f64,
    /// Stochastic `|Ω1| × |Ω2|` matrix.
    pub kernel: Vec<Vec<f64>>,
}

/// `δ(E1, E2) = min_M max_θ ½‖P1_θ M - P2_θ‖₁` over stochastic `M`.
///
/// Variables are the kernel entries, one slack per `(θ, ω2)` bounding the
/// absolute deviation, and the epigraph variable `t`.
pub fn deficiency_lp(e1: &ClassicalExperiment, e2: &ClassicalExperiment) -> Result<Deficiency> {
    if e1.labels != e2.labels {
        return Err(Error::MismatchedParameters);
    }
    let (n1, n2, m) = (e1.num_outcomes(), e2.num_outcomes(), e1.num_params());
    if n1 * n2 > MAX_KERNEL_ENTRIES {
        return Err(Error::TooLarge(format!("kernel has {} entries (limit {MAX_KERNEL_ENTRIES})", n1 * n2)));
    }
    let kernel_var = |i: usize, j: usize| i * n2 + j;
    let slack_var = |th: usize, j: usize| n1 * n2 + th * n2 + j;
    let t_var = n1 * n2 + m * n2;
    let nv = t_var + 1;

    let mut lp = LinearProgram::new(nv);
    lp.objective[t_var] = 1.0;
    for i in 0..n1 {
        let mut row = vec![0.0; nv];
        for j in 0..n2 {
            row[kernel_var(i, j)] = 1.0;
        }
        lp.add_eq(row, 1.0);
    }
    for th in 0..m {
        for j in 0..n2 {
            let mut upper = vec![0.0; nv];
            for i in 0..n1 {
                upper[kernel_var(i, j)] = e1.probs[th][i];
            }
            let mut lower: Vec<f64> = upper.iter().map(|v| -v).collect();
            upper[slack_var(th, j)] = -1.0;
            lower[slack_var(th, j)] = -1.0;
            lp.add_le(upper, e2.probs[th][j]);
            lp.add_le(lower, -e2.probs[th][j]);
        }
        let mut budget = vec![0.0; nv];
        for j in 0..n2 {
            budget[slack_var(th, j)] = 0.5;
        }
        budget[t_var] = -1.0;
        lp.add_le(budget, 0.0);
    }
    let sol = lp.solve().map_err(|e| match e {
        Error::Lp(msg) => Error::Lp(format!("deficiency program: {msg} (solver fault)")),
        other => other,
    })?;
    let kernel: Vec<Vec<f64>> = (0..n1)
        .map(|i| {
            let mut row: Vec<f64> = (0..n2).map(|j| sol.x[kernel_var(i, j)].max(0.0)).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    // Report the objective recomputed from the kernel itself.
    let delta = kernel_deficiency(e1, e2, &kernel);
    Ok(Deficiency { delta, kernel })
}

/// `max_θ ½‖P1_θ M - P2_θ‖₁` for a given kernel.
pub fn kernel_deficiency(e1: &ClassicalExperiment, e2: &ClassicalExperiment, kernel: &[Vec<f64>]) -> f64 {
    e1.probs
        .iter()
        .zip(&e2.probs)
        .map(|(p1, p2)| {
            0.5 * p2
                .iter()
                .enumerate()
                .map(|(j, q)| (p1.iter().zip(kernel).map(|(a, k)| a * k[j]).sum::<f64>() - q).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn le_cam_distance(e1: &ClassicalExperiment, e2: &ClassicalExperiment) -> Result<f64> {
    Ok(deficiency_lp(e1, e2)?.delta.max(deficiency_lp(e2, e1)?.delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp2(p1: &[f64], p2: &[f64]) -> ClassicalExperiment {
        ClassicalExperiment::from_rows(vec![p1.to_vec(), p2.to_vec()]).unwrap()
    }

    #[test]
    fn canonical_measure_identical_laws() {
        let cm = canonical_measure(&exp2(&[0.5, 0.5], &[0.5, 0.5])).unwrap();
        assert_eq!(cm.atoms.len(), 1);
        assert!((cm.atoms[0].v[0] - 0.5).abs() < 1e-15);
        assert!((cm.atoms[0].mass - 2.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_measure_disjoint_supports() {
        let cm = canonical_measure(&exp2(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert_eq!(cm.atoms.len(), 2);
        assert_eq!(cm.atoms[0].v, vec![0.0, 1.0]);
        assert_eq!(cm.atoms[1].v, vec![1.0, 0.0]);
        assert!(cm.atoms.iter().all(|a| (a.mass - 1.0).abs() < 1e-15));
    }

    #[test]
    fn canonical_measure_direct_arithmetic() {
        let cm = canonical_measure(&exp2(&[0.5, 0.5], &[0.7, 0.3])).unwrap();
        // sorted by v_θ0: (5/12, 7/12) first.
        assert!((cm.atoms[0].v[0] - 5.0 / 12.0).abs() < 1e-15);
        assert!((cm.atoms[0].mass - 1.2).abs() < 1e-15);
        assert!((cm.atoms[1].v[0] - 5.0 / 8.0).abs() < 1e-15);
        assert!((cm.atoms[1].mass - 0.8).abs() < 1e-15);
        assert!((cm.total_mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hellinger_examples() {
        let z = SimplexPoint::uniform(2);
        let e = exp2(&[0.5, 0.5], &[0.7, 0.3]);
        let eta = hellinger_transform(&e, &z).unwrap();
        assert!((eta - (0.35f64.sqrt() + 0.15f64.sqrt())).abs() < 1e-15);
        let same = exp2(&[0.2, 0.8], &[0.2, 0.8]);
        assert!((hellinger_transform(&same, &SimplexPoint::new(vec![0.3, 0.7]).unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hellinger_distance_examples() {
        assert_eq!(hellinger_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((hellinger_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        let h = hellinger_distance(&[0.5, 0.5], &[0.7, 0.3]).unwrap();
        let eta = 0.35f64.sqrt() + 0.15f64.sqrt();
        assert!((h - 2.0 * (1.0 - eta)).abs() < 1e-12);
    }

    #[test]
    fn binomial_rows() {
        let e = binomial_experiment(1, &[0.5]).unwrap();
        assert_eq!(e.row(0), &[0.5, 0.5]);
        let e = binomial_experiment(2, &[1.0]).unwrap();
        for (a, b) in e.row(0).iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(binomial_experiment(2, &[2.0]).is_err());
    }

    #[test]
    fn binomial_closed_form_matches_table() {
        let z = SimplexPoint::uniform(2);
        let closed = binomial_hellinger(4, &[1.0, 2.0], &z).unwrap();
        let expected = ((0.25f64 * 0.5).sqrt() + (0.75f64 * 0.5).sqrt()).powi(4);
        assert!((closed - expected).abs() < 1e-14);
        let table = hellinger_transform(&binomial_experiment(4, &[1.0, 2.0]).unwrap(), &z).unwrap();
        assert!((table - closed).abs() < 1e-13);
    }

    #[test]
    fn poisson_limit_examples() {
        let z = SimplexPoint::uniform(2);
        assert!((poisson_limit_hellinger(&[1.5, 1.5], &z).unwrap() - 1.0).abs() < 1e-15);
        let v = poisson_limit_hellinger(&[1.0, 2.0], &z).unwrap();
        assert!((v - (2f64.sqrt() - 1.5).exp()).abs() < 1e-15);
        assert!((v - 0.91779).abs() < 1e-5);
        let (e, k) = poisson_experiment(&[1.0, 2.0]).unwrap();
        assert!(k < 60);
        assert!((hellinger_transform(&e, &z).unwrap() - v).abs() < 1e-6);
    }

    #[test]
    fn gaussian_shift_examples() {
        let fisher = FisherMatrix::scalar(2.5).unwrap();
        let shifts = vec![vec![0.0], vec![1.3]];
        assert!((gaussian_shift_hellinger(&shifts, &fisher, &SimplexPoint::vertex(1, 2)).unwrap() - 1.0).abs() < 1e-15);
        let same = vec![vec![0.4], vec![0.4]];
        assert!((gaussian_shift_hellinger(&same, &fisher, &SimplexPoint::uniform(2)).unwrap() - 1.0).abs() < 1e-15);
        let v = gaussian_shift_hellinger(&shifts, &fisher, &SimplexPoint::uniform(2)).unwrap();
        assert!((v - (-2.5 * 1.3 * 1.3 / 8.0f64).exp()).abs() < 1e-15);
        let singular = FisherMatrix::scalar(0.0).unwrap();
        assert!(matches!(
            gaussian_shift_hellinger(&shifts, &singular, &SimplexPoint::uniform(2)),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn gaussian_affinity_matches_quadrature() {
        // ∫ sqrt(φ(x; 0, 1/I) φ(x; u, 1/I)) dx by the midpoint rule.
        let (i, u) = (1.7, 0.9);
        let sd = (1.0 / i as f64).sqrt();
        let dens = |x: f64, m: f64| (-(x - m).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        let h = 1e-4;
        let mut s = 0.0;
        let mut x = -12.0;
        while x < 12.0 {
            s += (dens(x + h / 2.0, 0.0) * dens(x + h / 2.0, u)).sqrt() * h;
            x += h;
        }
        let closed = gaussian_shift_hellinger(&[vec![0.0], vec![u]], &FisherMatrix::scalar(i).unwrap(), &SimplexPoint::uniform(2)).unwrap();
        assert!((s - closed).abs() < 1e-9);
    }

    #[test]
    fn deficiency_examples() {
        let e1 = exp2(&[0.9, 0.1], &[0.1, 0.9]);
        let e2 = exp2(&[1.0, 0.0], &[0.0, 1.0]);
        assert!(deficiency_lp(&e1, &e1).unwrap().delta <= 1e-9);
        let d = deficiency_lp(&e1, &e2).unwrap();
        assert!((d.delta - 0.1).abs() < 1e-9, "{}", d.delta);
        assert!(deficiency_lp(&e2, &e1).unwrap().delta <= 1e-9);
        assert!((le_cam_distance(&e1, &e2).unwrap() - 0.1).abs() < 1e-9);
        assert!((le_cam_distance(&e2, &e1).unwrap() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn deficiency_of_garbling_is_zero() {
        let e1 = ClassicalExperiment::from_rows(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
        let kernel = vec![vec![0.5, 0.5], vec![0.1, 0.9], vec![1.0, 0.0]];
        let e2 = e1.garble(&kernel).unwrap();
        assert!(deficiency_lp(&e1, &e2).unwrap().delta <= 1e-7);
    }

    #[test]
    fn deficiency_requires_same_parameters() {
        let e1 = exp2(&[0.5, 0.5], &[0.1, 0.9]);
        let e2 = ClassicalExperiment::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(deficiency_lp(&e1, &e2), Err(Error::MismatchedParameters));
    }

    #[test]
    fn deficiency_size_guard() {
        let row = vec![1.0 / 101.0; 101];
        let e = ClassicalExperiment::from_rows(vec![row.clone(), row]).unwrap();
        assert!(matches!(deficiency_lp(&e, &e), Err(Error::TooLarge(_))));
    }

    #[test]
    fn mutual_continuity_restriction() {
        assert!(ClassicalExperiment::new_equivalent(vec!["a".into(), "b".into()], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(ClassicalExperiment::new_equivalent(vec!["a".into(), "b".into()], vec![vec![0.5, 0.5, 0.0], vec![0.1, 0.9, 0.0]]).is_ok());
        assert!(ClassicalExperiment::from_rows(vec![vec![0.5, 0.6]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let e = ClassicalExperiment::new(vec!["lo".into(), "hi".into()], vec![vec![0.25, 0.75], vec![0.6, 0.4]]).unwrap();
        assert_eq!(ClassicalExperiment::from_csv(&e.to_csv()).unwrap(), e);
    }

    #[test]
    fn weak_convergence_constant_sequence() {
        let z = vec![SimplexPoint::uniform(2)];
        let t = weak_convergence_report(&[10, 100], |_, _| Ok(0.5), |_| Ok(0.5), &z).unwrap();
        assert!(t.rows.iter().all(|r| r.gap == 0.0));
        assert_eq!(t.slopes, vec![None]);
    }

    #[test]
    fn gaussian_lr_characteristic_single_letter() {
        let fisher = FisherMatrix::scalar(2.0).unwrap();
        let u = vec![vec![0.7]];
        let t = 1.3;
        let v = gaussian_shift_lr_characteristic(&u, &fisher, &[t]).unwrap();
        let q = 2.0 * 0.49;
        let expected = Complex64::from_polar((-0.5 * t * t * q).exp(), -0.5 * t * q);
        assert!((v - expected).norm() < 1e-15);
    }
}
