//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::{random_hermitian, random_probs, random_state, random_traceless, rng};
use qlan_core::ccr::{
    default_k_grid, field_information, k_subspace, log_derivative_f, quantum_fisher, MonotoneFunction,
};
use qlan_core::classical::{
    binomial_hellinger, deficiency_lp, gaussian_shift_hellinger, kernel_deficiency, likelihood_ratio_characteristic,
    poisson_limit_hellinger, ClassicalExperiment, ExponentialFamily, SimplexPoint,
};
use qlan_core::convergence::{decade_schedule, strictly_decreasing};
use qlan_core::family::{QuantumFamily, RotationFamily, UserFamily};
use qlan_core::hermlin::{c, diag_real, eig_hermitian, hs_norm, real, sigma_y, trace};
use qlan_core::lan::{
    finite_n_expectation, lan_report, limit_expectation, qubit_pipeline, simplified_gap, tensor_oracle,
    CocycleLetter, CocycleWordSpec, LocalFamily, ReportSettings,
};
use qlan_core::quantum::{
    canonical_gram, canonical_state, mix_experiments, modular_orbit, relative_cocycle, GroupWord, Letter,
    QuantumExperiment,
};
use qlan_core::{CMatrix, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_word(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CocycleWordSpec {
    let k = rng.gen_range(1..=3);
    let letters = (0..k)
        .map(|_| CocycleLetter {
            u: (0..m).map(|_| rng.gen_range(-scale..scale)).collect(),
            t: rng.gen_range(-2.0..2.0),
            adjoint: rng.gen_bool(0.3),
        })
        .collect();
    CocycleWordSpec::new(letters).unwrap()
}

/// Even draws are unitary orbits, odd draws affine families.
fn random_local_family(rng: &mut ChaCha8Rng, d: usize, i: usize) -> LocalFamily {
    let rho = random_state(rng, d, 0.1);
    let fam: Arc<dyn QuantumFamily> = if i.is_multiple_of(2) {
        let gens = (0..2).map(|_| random_hermitian(rng, d)).collect();
        Arc::new(RotationFamily::new(rho, gens).unwrap())
    } else {
        let dirs = (0..2)
            .map(|_| {
                let t = random_traceless(rng, d);
                let n = hs_norm(&t);
                t * real(0.02 / n)
            })
            .collect();
        Arc::new(UserFamily::new(rho, dirs).unwrap())
    };
    LocalFamily::new(fam).unwrap()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (d, pairs, ns) in [(2usize, 50usize, vec![1u32, 2, 3]), (3, 10, vec![2])] {
        for i in 0..pairs {
            let lf = random_local_family(&mut r, d, i);
            let w = random_word(&mut r, 2, 1.0);
            for &n in &ns {
                let a = finite_n_expectation(&lf, &w, n as u64, None).unwrap();
                let b = tensor_oracle(&lf, &w, n, None).unwrap();
                worst = worst.max((a - b).norm());
                cases += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-12 && secs < 5.0, format!("{cases} cases, max diff {worst:.2e}, {secs:.2}s"))
}

fn acceptance_words() -> Vec<CocycleWordSpec> {
    let a = CocycleLetter { u: vec![0.3, 0.2, 0.4], t: 1.0, adjoint: false };
    let b = CocycleLetter { u: vec![-0.2, 0.5, 0.1], t: -0.7, adjoint: false };
    let c = CocycleLetter { u: vec![-0.2, 0.5, 0.1], t: 0.6, adjoint: true };
    vec![
        CocycleWordSpec::new(vec![a.clone()]).unwrap(),
        CocycleWordSpec::new(vec![a.clone(), b]).unwrap(),
        CocycleWordSpec::new(vec![a, c]).unwrap(),
    ]
}

fn ac2() -> Outcome {
    let lf = LocalFamily::qubit(0.5).unwrap();
    let schedule = decade_schedule(2, 8);
    let mut pass = true;
    let mut parts = Vec::new();
    for w in acceptance_words() {
        let start = Instant::now();
        let rep = lan_report(&lf, &w, &schedule, None, &ReportSettings::default()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let tail: Vec<f64> = rep.rows.iter().filter(|r| r.n >= 10_000).map(|r| r.gap).collect();
        let slope = rep.slope.unwrap_or(f64::NAN);
        let last = rep.gap_at(100_000_000).unwrap();
        let ok = strictly_decreasing(&tail) && last < 1e-3 && (-0.65..=-0.35).contains(&slope) && secs < 1.0;
        pass &= ok;
        parts.push(format!("gap(1e8)={last:.2e} slope={slope:.3} {:.3}s", secs));
    }
    outcome(pass, parts.join("; "))
}

fn ac3() -> Outcome {
    let r = 0.5;
    let lf = LocalFamily::new(Arc::new(RotationFamily::qubit(r).unwrap())).unwrap();
    let lam = [(1.0 + r) / 2.0, (1.0 - r) / 2.0];
    let rho = diag_real(&lam);
    let h = sigma_y() * real(0.5);
    let mut worst: f64 = 0.0;
    for u in [-1.0, -0.5, 0.25, 0.7, 1.2] {
        for t in [-2.0, -0.8, 0.3, 1.0, 2.5] {
            let rit = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                2,
                lam.iter().map(|l| C64::from_polar(1.0, t * l.ln())),
            ));
            let sh = &rit * &h * rit.adjoint();
            let diff = &h - &sh;
            let norm2 = trace(&(&rho * &diff * &diff)).re;
            let comm = trace(&(&rho * (&h * &sh - &sh * &h)));
            let expected = real((-0.5 * u * u * norm2).exp()) * (comm * real(0.5 * u * u)).exp();
            let got = limit_expectation(&lf, &CocycleWordSpec::single(vec![u], t), None).unwrap();
            worst = worst.max((got - expected).norm());
        }
    }
    outcome(worst < 1e-10, format!("25 grid points, max diff {worst:.2e}"))
}

fn ac4() -> Outcome {
    let z = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
    let thetas = [1.0, 2.0];
    let limit = poisson_limit_hellinger(&thetas, &z).unwrap();
    let schedule = decade_schedule(1, 4);
    let gaps: Vec<f64> =
        schedule.iter().map(|&n| (binomial_hellinger(n, &thetas, &z).unwrap() - limit).abs()).collect();
    let poisson_ok = gaps[gaps.len() - 1] < 1e-3 && strictly_decreasing(&gaps);

    let ef = ExponentialFamily::new(vec![1.0, 2.0, 1.5], vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let theta0 = [0.2, -0.1];
    let shifts = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.5, 1.0]];
    let z3 = SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap();
    let fisher = ef.fisher(&theta0).unwrap();
    let gauss = gaussian_shift_hellinger(&shifts, &fisher, &z3).unwrap();
    let gap6 = (ef.local_iid_hellinger(&theta0, &shifts, 1_000_000, &z3).unwrap() - gauss).abs();
    outcome(
        poisson_ok && gap6 < 1e-3,
        format!("poisson gap(1e4)={:.2e} monotone={}; gaussian gap(1e6)={gap6:.2e}", gaps[gaps.len() - 1], strictly_decreasing(&gaps)),
    )
}

fn ac5() -> Outcome {
    let e = ClassicalExperiment::from_rows(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5], vec![0.1, 0.6, 0.3]]).unwrap();
    let self_delta = deficiency_lp(&e, &e).unwrap().delta;
    let kernel = vec![vec![0.7, 0.3], vec![0.2, 0.8], vec![0.5, 0.5]];
    let garbled = e.garble(&kernel).unwrap();
    let garbled_delta = deficiency_lp(&e, &garbled).unwrap().delta;
    let e1 = ClassicalExperiment::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
    let e2 = ClassicalExperiment::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let binary = deficiency_lp(&e1, &e2).unwrap().delta;
    let steps = 1000;
    let mut grid = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
            grid = grid.min(kernel_deficiency(&e1, &e2, &[vec![a, 1.0 - a], vec![b, 1.0 - b]]));
        }
    }
    outcome(
        self_delta <= 1e-9 && garbled_delta <= 1e-7 && (binary - 0.1).abs() <= 1e-6 && (grid - binary).abs() <= 1e-4,
        format!("δ(E,E)={self_delta:.1e} δ(E,EM)={garbled_delta:.1e} binary={binary:.6} grid={grid:.6}"),
    )
}

fn ac6() -> Outcome {
    let mut worst_ic: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    let mut dims = Vec::new();
    for r in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let p = qubit_pipeline(r, [0.2, -0.1, 0.3]).unwrap();
        let ic = 1.0 / (1.0 - r * r);
        worst_ic = worst_ic.max((p.fisher_classical - ic).abs()).max((p.fisher_from_h - ic).abs());
        worst_sigma = worst_sigma.max((p.sigma_yx - r).abs());
        dims.push(p.k_dim);
    }
    outcome(
        worst_ic < 1e-9 && worst_sigma < 1e-12 && dims.iter().all(|d| *d == 3),
        format!("I_c err {worst_ic:.1e}, σ err {worst_sigma:.1e}, K dims {dims:?}"),
    )
}

fn ac7() -> Outcome {
    let mut r = rng(7);
    let mut worst = [0.0f64; 3];
    for i in 0..100 {
        let d = 2 + i % 3;
        let base = random_state(&mut r, d, 0.05);
        let th = random_state(&mut r, d, 0.05);
        let th2 = random_state(&mut r, d, 0.05);
        let s = r.gen_range(-3.0..3.0);
        let t = r.gen_range(-3.0..3.0);
        let u = |t: f64| relative_cocycle(&th, &base, t).unwrap();
        let cond = u(s) * modular_orbit(&base, &u(t), s).unwrap() - u(s + t);
        worst[0] = worst[0].max(hs_norm(&cond));
        let a = random_hermitian(&mut r, d);
        let lhs = u(t) * modular_orbit(&base, &a, t).unwrap() * u(t).adjoint();
        worst[1] = worst[1].max(hs_norm(&(lhs - modular_orbit(&th, &a, t).unwrap())));
        let chain = relative_cocycle(&th2, &th, t).unwrap()
            - relative_cocycle(&th2, &base, t).unwrap() * relative_cocycle(&base, &th, t).unwrap();
        worst[2] = worst[2].max(hs_norm(&chain));
    }
    outcome(
        worst.iter().all(|w| *w < 1e-10),
        format!("cocycle {:.1e}, intertwining {:.1e}, chain {:.1e}", worst[0], worst[1], worst[2]),
    )
}

fn random_group_word(r: &mut ChaCha8Rng, m: usize) -> GroupWord {
    let k = r.gen_range(1..=4);
    GroupWord::new(
        (0..k).map(|_| Letter { theta: r.gen_range(1..m), t: r.gen_range(-2.0..2.0), inverse: r.gen_bool(0.3) }),
        0,
    )
}

fn random_experiment(r: &mut ChaCha8Rng, d: usize, m: usize) -> QuantumExperiment {
    QuantumExperiment::from_states((0..m).map(|_| random_state(r, d, 0.05)).collect()).unwrap()
}

fn ac8() -> Outcome {
    let mut r = rng(8);
    let e = random_experiment(&mut r, 3, 3);
    let unit = canonical_state(&e, &GroupWord::identity()).unwrap();
    let words: Vec<GroupWord> = (0..20).map(|_| random_group_word(&mut r, 3)).collect();
    let gram = canonical_gram(&e, &words).unwrap();
    let min_eig = eig_hermitian(&qlan_core::hermlin::hermitian_part(&gram)).unwrap().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let mut modular: f64 = 0.0;
    for g in &words {
        for s in [-1.3, 0.4, 2.1] {
            let shifted = canonical_state(&e, &g.modular_shift(s, 0)).unwrap();
            modular = modular.max((shifted - canonical_state(&e, g).unwrap()).norm());
        }
    }
    let f = random_experiment(&mut r, 2, 3);
    let lambda = 0.35;
    let mix = mix_experiments(&e, &f, lambda).unwrap();
    let mut linear: f64 = 0.0;
    for g in &words {
        let expected = canonical_state(&e, g).unwrap() * real(lambda) + canonical_state(&f, g).unwrap() * real(1.0 - lambda);
        linear = linear.max((canonical_state(&mix, g).unwrap() - expected).norm());
    }
    outcome(
        unit == c(1.0, 0.0) && min_eig >= -1e-10 && modular < 1e-10 && linear < 1e-12,
        format!("ω(e)={unit}, min eig {min_eig:.2e}, modular {modular:.1e}, mixture {linear:.1e}"),
    )
}

fn ac9() -> Outcome {
    let mut r = rng(9);
    let rows: Vec<Vec<f64>> = (0..4).map(|_| random_probs(&mut r, 5, 0.02)).collect();
    let q = QuantumExperiment::diagonal(&rows).unwrap();
    let cl = ClassicalExperiment::from_rows(rows).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = random_group_word(&mut r, 4);
        let letters: Vec<(usize, f64)> = g.letters().iter().map(|l| (l.theta, if l.inverse { -l.t } else { l.t })).collect();
        let a = canonical_state(&q, &g).unwrap();
        let b = likelihood_ratio_characteristic(&cl, 0, &letters).unwrap();
        worst = worst.max((a - b).norm());
    }
    outcome(worst < 1e-12, format!("20 words, max diff {worst:.2e}"))
}

fn ac10() -> Outcome {
    let mut r = rng(10);
    // One parameter on C^4 keeps K a proper subspace of the traceless matrices.
    let rho = random_state(&mut r, 4, 0.05);
    let dirs = vec![random_traceless(&mut r, 4) * real(0.05)];
    let lf = LocalFamily::new(Arc::new(UserFamily::new(rho, dirs).unwrap())).unwrap();
    let jet = lf.jet();
    let rho = jet.rho();
    let k = k_subspace(jet, &default_k_grid(4)).unwrap();
    let resid = |a: &CMatrix| {
        qlan_core::hermlin::rho_projection_residual(rho, &k, a) / rho.inner_unchecked(a, a).sqrt()
    };
    let p1: f64 = r.gen_range(-1.0..1.0);
    let p2: f64 = r.gen_range(-1.0..1.0);
    let power_mean = |p: f64| -> MonotoneFunction {
        MonotoneFunction::Custom(format!("power-mean({p:.3})"), Arc::new(move |t: f64| ((1.0 + t.powf(p)) / 2.0).powf(1.0 / p)))
    };
    let forms = [MonotoneFunction::Bkm, power_mean(p1), power_mean(p2)];
    let mut worst_member: f64 = 0.0;
    for kk in 0..jet.param_dim() {
        worst_member = worst_member.max(resid(&jet.sld_k()[kk]));
        for f in &forms {
            worst_member = worst_member.max(resid(&log_derivative_f(rho, &jet.drho()[kk], f).unwrap()));
        }
    }
    let u = [0.8];
    let drho = jet.drho_dir(&u).unwrap();
    let sld = jet.sld(&u).unwrap();
    let at_sld = field_information(rho, &drho, &(&sld * real(-2.5)));
    let qfi = quantum_fisher(rho, &sld);
    let mut best: f64 = 0.0;
    for _ in 0..100 {
        let a = k.iter().fold(CMatrix::zeros(4, 4), |acc, b| acc + b * real(r.gen_range(-1.0..1.0)));
        best = best.max(field_information(rho, &drho, &a));
    }
    let attained = best <= at_sld * (1.0 + 1e-6) && ((at_sld - qfi) / qfi).abs() < 1e-6;
    outcome(
        worst_member < 1e-8 && attained,
        format!("K dim {} of 15, membership {worst_member:.1e}, sup random {best:.6} ≤ I(𝓛) {at_sld:.6} = Tr ρ𝓛² {qfi:.6}", k.len()),
    )
}

fn ac11() -> Outcome {
    let lf = LocalFamily::qubit(0.5).unwrap();
    let s = lf.simplified().unwrap();
    let gaps: Vec<f64> = acceptance_words().iter().map(|w| simplified_gap(&lf, &s, w, 1_000_000).unwrap()).collect();
    outcome(gaps.iter().all(|g| *g < 1e-3), format!("gaps at 1e6 {:?}", gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>()))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 11] = [
        ("AC1", "collapse identity vs tensor oracle", ac1),
        ("AC2", "qubit LAN convergence", ac2),
        ("AC3", "rotation family closed form", ac3),
        ("AC4", "classical LAN and Poisson limit", ac4),
        ("AC5", "deficiency LP", ac5),
        ("AC6", "qubit closed forms", ac6),
        ("AC7", "cocycle algebra", ac7),
        ("AC8", "canonical state properties", ac8),
        ("AC9", "commutative consistency", ac9),
        ("AC10", "derivative memberships and field information", ac10),
        ("AC11", "simplified family agreement", ac11),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        let tag = if res.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {}", res.detail);
        if !res.pass {
            failed += 1;
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
