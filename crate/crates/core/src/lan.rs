//! Local asymptotic normality of i.i.d. quantum models.
//!
//! For a word of cocycle letters `(u_j, t_j)` the i.i.d. expectation
//! `φ^{⊗n}(v_1^{⊗n} ⋯ v_k^{⊗n})` collapses to `Tr(ρ v_1 ⋯ v_k)^n`, with
//! `v_j = ρ_{θ0+u_j/√n}^{it_j} ρ^{-it_j}`. It is compared against the quasi-free
//! evaluation of the product of limit cocycles.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ccr::{k_subspace, default_k_grid, limit_cocycle, quasifree_eval, FamilyJet, WeylWord};
use crate::classical::FisherMatrix;
use crate::convergence::{fit_loglog_slope, strictly_decreasing, GAP_FLOOR};
use crate::error::{Error, Result};
use crate::family::{faithful_threshold, QuantumFamily, QubitFamily, SimplifiedFamily};
use crate::hermlin::{identity, kron, real, sigma_x, sigma_y, CMatrix, DensityMatrix, C64};

/// Minimal eigenvalue required of every local state.
pub const FAITHFUL_THRESHOLD: f64 = 1e-8;
/// Largest `d^n` the tensor oracle accepts.
pub const ORACLE_MAX_DIM: usize = 64;
/// Per-unit-`n` rounding floor of the collapsed power `z^n`.
pub const NOISE_PER_N: f64 = 1e-15;

/// A family with its jet at the base point.
pub struct LocalFamily {
    jet: FamilyJet,
}

impl LocalFamily {
    pub fn new(family: Arc<dyn QuantumFamily>) -> Result<Self> {
        Ok(Self { jet: FamilyJet::new(family)? })
    }

    pub fn qubit(r: f64) -> Result<Self> {
        Self::new(Arc::new(QubitFamily::new(r)?))
    }

    pub fn jet(&self) -> &FamilyJet {
        &self.jet
    }

    pub fn family(&self) -> &Arc<dyn QuantumFamily> {
        self.jet.family()
    }

    pub fn param_dim(&self) -> usize {
        self.jet.param_dim()
    }

    pub fn dim(&self) -> usize {
        self.jet.rho().dim()
    }

    /// `ρ_{θ0 + u/√n}`.
    pub fn local_state(&self, u: &[f64], n: u64) -> Result<DensityMatrix> {
        if u.len() != self.param_dim() {
            return Err(Error::DimensionMismatch { expected: self.param_dim(), got: u.len() });
        }
        let s = 1.0 / (n as f64).sqrt();
        let theta: Vec<f64> = self.jet.theta0().iter().zip(u).map(|(a, b)| a + b * s).collect();
        self.family().rho(&theta)
    }

    /// Smallest `n` (on a doubling ladder) keeping every local state of the
    /// word faithful.
    pub fn n_min(&self, w: &CocycleWordSpec, base_u: Option<&[f64]>) -> Result<u64> {
        let mut us: Vec<Vec<f64>> = w.letters.iter().map(|l| l.u.clone()).collect();
        if let Some(b) = base_u {
            us.push(b.to_vec());
        }
        faithful_threshold(self.family().as_ref(), &us, FAITHFUL_THRESHOLD)
    }

    /// `ρ̃_a = e^{iH(a)} τ_{θ0+a} e^{-iH(a)}` as a local family.
    pub fn simplified(&self) -> Result<LocalFamily> {
        let s = SimplifiedFamily::new(self.family().clone(), self.jet.generators().to_vec())?;
        LocalFamily::new(Arc::new(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleLetter {
    pub u: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub adjoint: bool,
}

/// Product of cocycle letters, evaluated left to right.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CocycleWordSpec {
    pub letters: Vec<CocycleLetter>,
}

impl CocycleWordSpec {
    pub fn new(letters: Vec<CocycleLetter>) -> Result<Self> {
        for l in &letters {
            if !l.t.is_finite() || l.u.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { letters })
    }

    pub fn single(u: Vec<f64>, t: f64) -> Self {
        Self { letters: vec![CocycleLetter { u, t, adjoint: false }] }
    }

    /// Adjoint of the whole product: reversed order, flags flipped.
    pub fn adjoint(&self) -> Self {
        Self {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| CocycleLetter { adjoint: !l.adjoint, ..l.clone() })
                .collect(),
        }
    }

    fn check(&self, m: usize) -> Result<()> {
        for l in &self.letters {
            if l.u.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: l.u.len() });
            }
        }
        Ok(())
    }
}

fn single_factor(lf: &LocalFamily, letter: &CocycleLetter, n: u64) -> Result<CMatrix> {
    let rho_n = lf.local_state(&letter.u, n)?;
    let v = rho_n.unitary_power(letter.t) * lf.jet.rho().unitary_power(-letter.t);
    Ok(if letter.adjoint { v.adjoint() } else { v })
}

fn base_state(lf: &LocalFamily, n: u64, base_u: Option<&[f64]>) -> Result<DensityMatrix> {
    match base_u {
        Some(b) => lf.local_state(b, n),
        None => Ok(lf.jet.rho().clone()),
    }
}

/// `Tr(ρ_base · v_1 ⋯ v_k)` for one copy.
pub fn single_copy_value(lf: &LocalFamily, w: &CocycleWordSpec, n: u64, base_u: Option<&[f64]>) -> Result<C64> {
    w.check(lf.param_dim())?;
    let mut acc = identity(lf.dim());
    for l in &w.letters {
        acc *= single_factor(lf, l, n)?;
    }
    Ok(base_state(lf, n, base_u)?.expect(&acc))
}

/// `E^(n) = Tr(ρ_base · v_1 ⋯ v_k)^n`, evaluated as `exp(n ln|z|) e^{i n arg z}`.
pub fn finite_n_expectation(lf: &LocalFamily, w: &CocycleWordSpec, n: u64, base_u: Option<&[f64]>) -> Result<C64> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be positive".into()));
    }
    let n_min = lf.n_min(w, base_u)?;
    if n < n_min {
        return Err(Error::OutOfRange(format!("n = {n} is below the faithfulness threshold {n_min}")));
    }
    let z = single_copy_value(lf, w, n, base_u)?;
    Ok(power_n(z, n))
}

fn power_n(z: C64, n: u64) -> C64 {
    if z.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let nf = n as f64;
    C64::from_polar((nf * z.norm().ln()).exp(), nf * z.arg())
}

fn kron_power(a: &CMatrix, n: u32) -> CMatrix {
    (1..n).fold(a.clone(), |acc, _| kron(&acc, a))
}

/// Same quantity computed on `(C^d)^{⊗n}` with explicit Kronecker powers and
/// spectral calculus in dimension `d^n`.
pub fn tensor_oracle(lf: &LocalFamily, w: &CocycleWordSpec, n: u32, base_u: Option<&[f64]>) -> Result<C64> {
    w.check(lf.param_dim())?;
    let d = lf.dim();
    let big = d.checked_pow(n).filter(|v| *v <= ORACLE_MAX_DIM);
    let Some(big) = big else {
        return Err(Error::TooLarge(format!("{d}^{n} exceeds {ORACLE_MAX_DIM}")));
    };
    let n64 = n as u64;
    let rho_big = DensityMatrix::normalized(kron_power(lf.jet.rho().matrix(), n))?;
    let mut acc = identity(big);
    for l in &w.letters {
        let local = DensityMatrix::normalized(kron_power(lf.local_state(&l.u, n64)?.matrix(), n))?;
        let v = local.unitary_power(l.t) * rho_big.unitary_power(-l.t);
        acc = if l.adjoint { acc * v.adjoint() } else { acc * v };
    }
    let base = match base_u {
        Some(b) => DensityMatrix::normalized(kron_power(lf.local_state(b, n64)?.matrix(), n))?,
        None => rho_big,
    };
    Ok(base.expect(&acc))
}

/// Concatenated limit cocycles of the word.
pub fn limit_word(lf: &LocalFamily, w: &CocycleWordSpec) -> Result<WeylWord> {
    w.check(lf.param_dim())?;
    let mut word = WeylWord::identity();
    for l in &w.letters {
        let v = limit_cocycle(&lf.jet, &l.u, l.t)?;
        word = word.concat(&if l.adjoint { v.adjoint() } else { v });
    }
    Ok(word)
}

/// `φ^{base_u}(V_1 ⋯ V_k)` in the quasi-free limit state.
pub fn limit_expectation(lf: &LocalFamily, w: &CocycleWordSpec, base_u: Option<&[f64]>) -> Result<C64> {
    let word = limit_word(lf, w)?;
    let shift = base_u.map(|b| lf.jet.sld(b)).transpose()?;
    quasifree_eval(lf.jet.space(), &word, shift.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub burn_in: u64,
    pub threshold: f64,
    pub noise_per_n: f64,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self { burn_in: 10_000, threshold: 1e-3, noise_per_n: NOISE_PER_N }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub re: f64,
    pub im: f64,
    pub gap: f64,
    /// `n · arg z`, continuous in `n`.
    pub phase: f64,
    /// Gap sits above the rounding floor `max(1e-13, n·noise_per_n)`.
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub word: CocycleWordSpec,
    pub base_u: Option<Vec<f64>>,
    pub n_min: u64,
    pub limit_re: f64,
    pub limit_im: f64,
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<f64>,
    pub settings: ReportSettings,
    pub monotone: bool,
    pub final_gap_ok: bool,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    pub fn gap_at(&self, n: u64) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.gap)
    }

    /// `n,re,im,gap` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im,gap\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.n, r.re, r.im, r.gap);
        }
        out
    }
}

/// Gaps `|E^(n) − limit|` along a strictly increasing schedule.
///
/// Passes when resolved gaps past the burn-in strictly decrease and the last
/// gap is below the threshold.
pub fn lan_report(
    lf: &LocalFamily,
    w: &CocycleWordSpec,
    schedule: &[u64],
    base_u: Option<&[f64]>,
    settings: &ReportSettings,
) -> Result<ConvergenceReport> {
    if schedule.is_empty() || schedule.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::OutOfRange("schedule must be nonempty and strictly increasing".into()));
    }
    let limit = limit_expectation(lf, w, base_u)?;
    let n_min = lf.n_min(w, base_u)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        if n < n_min {
            return Err(Error::OutOfRange(format!("n = {n} is below the faithfulness threshold {n_min}")));
        }
        let z = single_copy_value(lf, w, n, base_u)?;
        let e = power_n(z, n);
        let gap = (e - limit).norm();
        let floor = GAP_FLOOR.max(n as f64 * settings.noise_per_n);
        rows.push(ConvergenceRow { n, re: e.re, im: e.im, gap, phase: n as f64 * z.arg(), resolved: gap > floor });
    }
    let tail: Vec<f64> = rows.iter().filter(|r| r.n >= settings.burn_in && r.resolved).map(|r| r.gap).collect();
    let monotone = strictly_decreasing(&tail);
    let final_gap_ok = rows.last().is_some_and(|r| r.gap < settings.threshold);
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fit_gaps: Vec<f64> = rows.iter().map(|r| if r.resolved { r.gap } else { 0.0 }).collect();
    let slope = fit_loglog_slope(&ns, &fit_gaps, GAP_FLOOR);
    Ok(ConvergenceReport {
        family: lf.family().name(),
        word: w.clone(),
        base_u: base_u.map(|b| b.to_vec()),
        n_min,
        limit_re: limit.re,
        limit_im: limit.im,
        rows,
        slope,
        settings: settings.clone(),
        monotone,
        final_gap_ok,
        pass: monotone && final_gap_ok,
    })
}

/// `|E^(n)_ρ − E^(n)_ρ̃|` for the same word.
pub fn simplified_gap(lf: &LocalFamily, simplified: &LocalFamily, w: &CocycleWordSpec, n: u64) -> Result<f64> {
    Ok((finite_n_expectation(lf, w, n, None)? - finite_n_expectation(simplified, w, n, None)?).norm())
}

/// `[(l_j, l_k)_ρ]`, the Fisher information of the eigenvalue family.
pub fn classical_fisher(jet: &FamilyJet) -> Result<FisherMatrix> {
    let l = jet.l_k();
    let rho = jet.rho();
    FisherMatrix::new(nalgebra::DMatrix::from_fn(l.len(), l.len(), |i, j| rho.inner_unchecked(&l[i], &l[j])))
}

/// `[(𝓛_j, 𝓛_k)_ρ]`.
pub fn quantum_fisher_matrix(jet: &FamilyJet) -> nalgebra::DMatrix<f64> {
    let l = jet.sld_k();
    let rho = jet.rho();
    nalgebra::DMatrix::from_fn(l.len(), l.len(), |i, j| rho.inner_unchecked(&l[i], &l[j]))
}

/// Closed forms for the qubit family at `(1 + rσz)/2` and local parameter `(rx, ry, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitClosedForms {
    pub r: f64,
    pub u: [f64; 3],
    /// `1/(1 − r²)`
    pub fisher_classical: f64,
    /// Classical limit component `N(I_c·a, I_c)`.
    pub classical_mean: f64,
    pub classical_variance: f64,
    /// `(rx/√(2r), ry/√(2r))`
    pub wigner_center: [f64; 2],
    /// `σ(σy, σx)`
    pub sigma_yx: f64,
}

pub fn qubit_closed_forms(r: f64, u: [f64; 3]) -> Result<QubitClosedForms> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("r = {r} must lie in (0, 1)")));
    }
    let ic = 1.0 / (1.0 - r * r);
    let s = (2.0 * r).sqrt();
    Ok(QubitClosedForms {
        r,
        u,
        fisher_classical: ic,
        classical_mean: ic * u[2],
        classical_variance: ic,
        wigner_center: [u[0] / s, u[1] / s],
        sigma_yx: r,
    })
}

/// The same quantities produced by the generic pipeline (jet, symplectic
/// form, `K`, shifted state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitPipeline {
    pub fisher_classical: f64,
    /// `−φ(h_aa)`.
    pub fisher_from_h: f64,
    pub classical_mean: f64,
    pub wigner_center: [f64; 2],
    pub sigma_yx: f64,
    pub k_dim: usize,
    /// `‖l_a − (P₊/(1+r) − P₋/(1−r))‖`.
    pub l_a_residual: f64,
}

pub fn qubit_pipeline(r: f64, u: [f64; 3]) -> Result<QubitPipeline> {
    let lf = LocalFamily::qubit(r)?;
    let jet = lf.jet();
    let rho = jet.rho();
    let l_a = &jet.l_k()[2];
    let fisher_classical = rho.inner_unchecked(l_a, l_a);
    let fisher_from_h = -rho.expect(&jet.h(&[0.0, 0.0, 1.0])?).re;
    let sld = jet.sld(&u)?;
    // Means of the fields under the shifted state: (A, 𝓛(u))_ρ.
    let mean = |a: &CMatrix| rho.inner_unchecked(a, &sld);
    let s = (2.0 * r).sqrt();
    let expected_l = crate::hermlin::diag_real(&[1.0 / (1.0 + r), -1.0 / (1.0 - r)]);
    Ok(QubitPipeline {
        fisher_classical,
        fisher_from_h,
        classical_mean: mean(l_a),
        wigner_center: [mean(&sigma_x()) / s, mean(&sigma_y()) / s],
        sigma_yx: jet.space().sigma(&sigma_y(), &sigma_x())?,
        k_dim: k_subspace(jet, &default_k_grid(2))?.len(),
        l_a_residual: crate::hermlin::hs_norm(&(l_a - expected_l)),
    })
}

/// `exp(−½ i Σ t_j u_jᵀIu_j − ½ Σ t_j t_k u_jᵀIu_k)` for a word over a
/// commutative family; adjoint letters enter with `−t`.
pub fn classical_limit_characteristic(jet: &FamilyJet, w: &CocycleWordSpec) -> Result<C64> {
    let fisher = classical_fisher(jet)?;
    let shifts: Vec<Vec<f64>> = w.letters.iter().map(|l| l.u.clone()).collect();
    let ts: Vec<f64> = w.letters.iter().map(|l| if l.adjoint { -l.t } else { l.t }).collect();
    crate::classical::gaussian_shift_lr_characteristic(&shifts, &fisher, &ts)
}

/// Mean `(A, 𝓛(u))_ρ` and variance `(A, A)_ρ` of the field `B(A)` under the
/// shifted state, read off the characteristic function `s ↦ φ^u(W(sA))`.
pub fn field_moments(jet: &FamilyJet, u: &[f64], a: &CMatrix, h: f64) -> Result<(f64, f64)> {
    let shift = jet.sld(u)?;
    let f = |s: f64| quasifree_eval(jet.space(), &WeylWord::single(a * real(s)), Some(&shift));
    let (p, m, z) = (f(h)?, f(-h)?, f(0.0)?);
    let first = (p - m) / real(2.0 * h);
    let second = (p + m - z * real(2.0)) / real(h * h);
    let mean = (first * C64::new(0.0, -1.0)).re;
    let var = -second.re - mean * mean;
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{DiagonalFamily, RotationFamily};

    fn words() -> Vec<CocycleWordSpec> {
        let a = CocycleLetter { u: vec![0.3, 0.2, 0.4], t: 1.0, adjoint: false };
        let b = CocycleLetter { u: vec![-0.2, 0.5, 0.1], t: -0.7, adjoint: false };
        let c = CocycleLetter { u: vec![-0.2, 0.5, 0.1], t: 0.6, adjoint: true };
        vec![
            CocycleWordSpec::new(vec![a.clone()]).unwrap(),
            CocycleWordSpec::new(vec![a.clone(), b]).unwrap(),
            CocycleWordSpec::new(vec![a, c]).unwrap(),
        ]
    }

    #[test]
    fn trivial_words() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        let zero_u = CocycleWordSpec::single(vec![0.0; 3], 1.3);
        let zero_t = CocycleWordSpec::single(vec![0.3, 0.1, 0.2], 0.0);
        for n in [1, 10, 1000] {
            assert!((finite_n_expectation(&lf, &zero_u, n, None).unwrap() - 1.0).norm() < 1e-12);
            assert!((finite_n_expectation(&lf, &zero_t, n, None).unwrap() - 1.0).norm() < 1e-12);
        }
        assert_eq!(limit_expectation(&lf, &CocycleWordSpec::default(), None).unwrap(), real(1.0));
    }

    #[test]
    fn collapse_matches_oracle() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        for w in words() {
            for n in 1..=3u32 {
                let a = finite_n_expectation(&lf, &w, n as u64, None).unwrap();
                let b = tensor_oracle(&lf, &w, n, None).unwrap();
                assert!((a - b).norm() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
        let rot = LocalFamily::new(Arc::new(RotationFamily::qubit(0.5).unwrap())).unwrap();
        let w = CocycleWordSpec::single(vec![0.7], 1.3);
        let a = finite_n_expectation(&rot, &w, 2, None).unwrap();
        assert!((a - tensor_oracle(&rot, &w, 2, None).unwrap()).norm() < 1e-12);
        assert!(matches!(tensor_oracle(&rot, &w, 7, None), Err(Error::TooLarge(_))));
    }

    #[test]
    fn qubit_words_converge() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        let schedule = crate::convergence::decade_schedule(2, 8);
        for w in words() {
            let rep = lan_report(&lf, &w, &schedule, None, &ReportSettings::default()).unwrap();
            assert!(rep.pass, "{:?}", rep.gaps());
            let slope = rep.slope.unwrap();
            assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
            assert!(rep.gap_at(100_000_000).unwrap() < 1e-4);
        }
    }

    #[test]
    fn shifted_base_converges() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        let b = [0.1, -0.3, 0.2];
        let schedule = crate::convergence::decade_schedule(4, 8);
        for w in words() {
            let rep = lan_report(&lf, &w, &schedule, Some(&b), &ReportSettings::default()).unwrap();
            assert!(rep.pass, "{:?}", rep.gaps());
        }
    }

    #[test]
    fn adjoint_is_conjugate_of_reversed_word() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        for w in words() {
            for n in [5u64, 1000] {
                let a = single_copy_value(&lf, &w.adjoint(), n, None).unwrap();
                let b = single_copy_value(&lf, &w, n, None).unwrap();
                assert!((a - b.conj()).norm() < 1e-12);
            }
            let a = limit_expectation(&lf, &w.adjoint(), None).unwrap();
            let b = limit_expectation(&lf, &w, None).unwrap();
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_limit_is_classical() {
        let fam = DiagonalFamily::new(vec![0.5, 0.3, 0.2], vec![vec![0.1, -0.05, -0.05], vec![0.0, 0.2, -0.2]]).unwrap();
        let lf = LocalFamily::new(Arc::new(fam)).unwrap();
        let w = CocycleWordSpec::new(vec![
            CocycleLetter { u: vec![0.4, -0.3], t: 0.9, adjoint: false },
            CocycleLetter { u: vec![-0.1, 0.6], t: -1.2, adjoint: true },
        ])
        .unwrap();
        let q = limit_expectation(&lf, &w, None).unwrap();
        let c = classical_limit_characteristic(lf.jet(), &w).unwrap();
        assert!((q - c).norm() < 1e-12);
        let single = CocycleWordSpec::single(vec![0.4, -0.3], 0.9);
        let jet = lf.jet();
        let u = [0.4, -0.3];
        let l = jet.l(&u).unwrap();
        let h = jet.rho().expect(&jet.h(&u).unwrap()).re;
        let expected = C64::from_polar((-0.5 * 0.81 * jet.rho().inner_unchecked(&l, &l)).exp(), 0.45 * h);
        assert!((limit_expectation(&lf, &single, None).unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn simplified_family_agrees() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        let s = lf.simplified().unwrap();
        let origin = s.local_state(&[0.0; 3], 1).unwrap();
        assert!(crate::hermlin::hs_norm(&(origin.matrix() - lf.jet().rho().matrix())) < 1e-14);
        for w in words() {
            assert!(simplified_gap(&lf, &s, &w, 1_000_000).unwrap() < 1e-3);
        }
        let rot = LocalFamily::new(Arc::new(RotationFamily::qubit(0.5).unwrap())).unwrap();
        let rs = rot.simplified().unwrap();
        let a = rot.local_state(&[0.8], 4).unwrap();
        let b = rs.local_state(&[0.8], 4).unwrap();
        assert!(crate::hermlin::hs_norm(&(a.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn qubit_closed_forms_match_pipeline() {
        let cf = qubit_closed_forms(0.5, [0.2, 0.0, 0.3]).unwrap();
        assert!((cf.fisher_classical - 4.0 / 3.0).abs() < 1e-15);
        assert!((cf.wigner_center[0] - 0.2).abs() < 1e-15 && cf.wigner_center[1] == 0.0);
        let p = qubit_pipeline(0.5, [0.2, 0.0, 0.3]).unwrap();
        assert!((p.fisher_classical - cf.fisher_classical).abs() < 1e-12);
        assert!((p.fisher_from_h - cf.fisher_classical).abs() < 1e-12);
        assert!((p.classical_mean - cf.classical_mean).abs() < 1e-12);
        assert!((p.wigner_center[0] - 0.2).abs() < 1e-12 && p.wigner_center[1].abs() < 1e-12);
        assert!((p.sigma_yx - 0.5).abs() < 1e-12);
        assert_eq!(p.k_dim, 3);
        assert!(p.l_a_residual < 1e-12);
    }

    #[test]
    fn field_moments_from_characteristic_function() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        let jet = lf.jet();
        let u = [0.2, -0.1, 0.3];
        let a = sigma_x() * real(0.4) + jet.l_k()[2].clone();
        let (mean, var) = field_moments(jet, &u, &a, 1e-4).unwrap();
        let sld = jet.sld(&u).unwrap();
        assert!((mean - jet.rho().inner_unchecked(&a, &sld)).abs() < 1e-7);
        assert!((var - jet.rho().inner_unchecked(&a, &a)).abs() < 1e-6);
    }

    #[test]
    fn report_rejects_bad_schedule() {
        let lf = LocalFamily::qubit(0.5).unwrap();
        let w = CocycleWordSpec::single(vec![0.1, 0.0, 0.0], 1.0);
        assert!(lan_report(&lf, &w, &[100, 100], None, &ReportSettings::default()).is_err());
        assert!(finite_n_expectation(&lf, &CocycleWordSpec::single(vec![0.0, 0.0, 1.0], 1.0), 2, None).is_err());
    }
}
