mod common;

use std::sync::Arc;

use common::{random_hermitian, random_state, random_traceless, rng};
use proptest::prelude::*;
use qlan_core::ccr::{
    default_k_grid, k_subspace, k_subspace_spectral, limit_cocycle, log_derivative_f, multiple_commutators, quasifree_eval,
    split_commutant, weyl_collapse, FamilyJet, MonotoneFunction, SymplecticSpace, WeylWord,
};
use qlan_core::family::UserFamily;
use qlan_core::hermlin::{commutator, real, rho_projection_residual, trace};
use qlan_core::{CMatrix, DensityMatrix};
use rand_chacha::ChaCha8Rng;

fn random_jet(r: &mut ChaCha8Rng, d: usize, m: usize) -> FamilyJet {
    let rho = random_state(r, d, 0.05);
    let dirs = (0..m).map(|_| random_traceless(r, d) * real(0.05)).collect();
    FamilyJet::new(Arc::new(UserFamily::new(rho, dirs).unwrap())).unwrap()
}

fn relative_residual(rho: &DensityMatrix, k: &[CMatrix], a: &CMatrix) -> f64 {
    rho_projection_residual(rho, k, a) / rho.inner_unchecked(a, a).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symplectic_form_is_antisymmetric(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let s = SymplecticSpace::new(random_state(&mut r, d, 0.05));
        let a = random_hermitian(&mut r, d);
        let b = random_hermitian(&mut r, d);
        prop_assert!((s.sigma(&a, &b).unwrap() + s.sigma(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(s.sigma(&a, &a).unwrap().abs() < 1e-12);
        prop_assert!(s.alpha(&a, &a) >= -1e-12);
    }

    #[test]
    fn collapse_is_association_free(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let s = SymplecticSpace::new(random_state(&mut r, d, 0.05));
        let a = WeylWord::single(random_hermitian(&mut r, d));
        let b = WeylWord::single(random_hermitian(&mut r, d));
        let c = WeylWord::single(random_hermitian(&mut r, d));
        let left = a.concat(&b).concat(&c);
        let right = a.concat(&b.concat(&c));
        let (sl, pl) = weyl_collapse(&left, &s).unwrap();
        let (sr, pr) = weyl_collapse(&right, &s).unwrap();
        prop_assert!(qlan_core::hermlin::hs_norm(&(sl - &sr)) < 1e-12);
        prop_assert!((pl - pr).norm() < 1e-12);
        let pre = WeylWord::new(vec![sr], pr).unwrap();
        let direct = quasifree_eval(&s, &left, None).unwrap();
        prop_assert!((quasifree_eval(&s, &pre, None).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn quasifree_factorizes_over_commutant(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d, 0.05);
        let split = split_commutant(&rho);
        let (n1, n2) = split.dims();
        prop_assert_eq!(n1 + n2, d * d);
        let pick = |basis: &[CMatrix], r: &mut ChaCha8Rng| {
            basis.iter().fold(CMatrix::zeros(d, d), |acc, b| acc + b * real(rand::Rng::gen_range(r, -1.0..1.0)))
        };
        let b1 = pick(&split.basis_hrho, &mut r);
        let b2 = pick(&split.basis_perp, &mut r);
        let s = SymplecticSpace::new(rho);
        let joint = quasifree_eval(&s, &WeylWord::single(&b1 + &b2), None).unwrap();
        let prod = quasifree_eval(&s, &WeylWord::single(b1), None).unwrap()
            * quasifree_eval(&s, &WeylWord::single(b2), None).unwrap();
        prop_assert!((joint - prod).norm() < 1e-12);
    }

    #[test]
    fn jet_invariants(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let jet = random_jet(&mut r, d, 2);
        let u = [rand::Rng::gen_range(&mut r, -1.0..1.0), rand::Rng::gen_range(&mut r, -1.0..1.0)];
        let rho = jet.rho();
        for a in [jet.generator(&u).unwrap(), jet.l(&u).unwrap(), jet.ell(&u).unwrap()] {
            prop_assert!(rho.expect(&a).norm() < 1e-10);
        }
        let l = jet.l(&u).unwrap();
        let fisher = rho.expect(&(&l * &l)).re;
        prop_assert!((rho.expect(&jet.h(&u).unwrap()).re + fisher).abs() < 1e-8);
        let d1 = jet.drho_dir(&u).unwrap();
        let h = jet.generator(&u).unwrap();
        // ∂ρ splits into the rotation i[H, ρ] and the eigenvalue part ρ∘l.
        let rebuilt = commutator(&h, rho.matrix()) * qlan_core::C64::i()
            + qlan_core::hermlin::jordan(rho.matrix(), &l);
        prop_assert!(qlan_core::hermlin::hs_norm(&(rebuilt - d1)) < 1e-10);
    }

    #[test]
    fn limit_prefactors_are_unimodular(seed in any::<u64>(), t in -3.0f64..3.0) {
        let mut r = rng(seed);
        let jet = random_jet(&mut r, 3, 2);
        let w = limit_cocycle(&jet, &[0.7, -0.4], 0.0).unwrap();
        prop_assert!((w.prefactor.norm() - 1.0).abs() < 1e-12);
        let h = jet.generator(&[0.7, -0.4]).unwrap();
        let sh = qlan_core::quantum::modular_orbit(jet.rho(), &h, t).unwrap();
        let phase = (trace(&(jet.rho().matrix() * commutator(&h, &sh))) * real(0.5)).exp();
        prop_assert!((phase.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_lie_in_k(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let jet = random_jet(&mut r, d, 1);
        let rho = jet.rho();
        let k = k_subspace_spectral(&jet).unwrap();
        let drho = &jet.drho()[0];
        prop_assert!(relative_residual(rho, &k, &jet.sld_k()[0]) < 1e-8);
        for f in [MonotoneFunction::Bkm, MonotoneFunction::WignerYanase, MonotoneFunction::Harmonic] {
            prop_assert!(relative_residual(rho, &k, &log_derivative_f(rho, drho, &f).unwrap()) < 1e-8);
        }
        for cr in multiple_commutators(rho, &jet.generators()[0], 3) {
            let n = rho.inner_unchecked(&cr, &cr).sqrt();
            if n > 1e-12 {
                prop_assert!(relative_residual(rho, &k, &cr) < 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampled_and_spectral_k_agree_when_frequencies_separate(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let jet = random_jet(&mut r, d, 2);
        let lam = jet.rho().eigenvalues();
        let mut w: Vec<f64> = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                w.push((lam[i] / lam[j]).ln());
            }
        }
        w.sort_by(f64::total_cmp);
        prop_assume!(w.windows(2).all(|p| p[1] - p[0] > 0.1));
        let sampled = k_subspace(&jet, &default_k_grid(d)).unwrap();
        let spectral = k_subspace_spectral(&jet).unwrap();
        prop_assert_eq!(sampled.len(), spectral.len());
        for a in &sampled {
            prop_assert!(rho_projection_residual(jet.rho(), &spectral, a) < 1e-8);
        }
    }
}

#[test]
fn spectral_k_resolves_close_frequencies() {
    // log-ratios 0.6959 and 0.7007 nearly coincide
    let mut r = rng(5471315973998461768);
    let jet = random_jet(&mut r, 4, 1);
    assert_eq!(k_subspace_spectral(&jet).unwrap().len(), 13);
}

#[test]
fn generic_hermitian_is_outside_small_k() {
    let mut r = rng(11);
    let jet = random_jet(&mut r, 4, 1);
    let k = k_subspace(&jet, &default_k_grid(4)).unwrap();
    assert!(k.len() < 15);
    let a = random_hermitian(&mut r, 4);
    assert!(relative_residual(jet.rho(), &k, &a) > 1e-3);
}
