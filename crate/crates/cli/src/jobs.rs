//! Family/experiment registry and one executor per command.

use std::collections::BTreeMap;
use std::sync::Arc;

use qlan_core::classical::{
    canonical_measure, deficiency_lp, hellinger_transform, ClassicalExperiment, SimplexPoint,
};
use qlan_core::family::{DiagonalFamily, QuantumFamily, QubitFamily, RotationFamily, UserFamily};
use qlan_core::hermlin::{c, hs_norm, identity};
use qlan_core::lan::{
    lan_report, qubit_closed_forms, qubit_pipeline, simplified_gap, CocycleLetter, CocycleWordSpec, LocalFamily,
    ReportSettings,
};
use qlan_core::quantum::{
    canonical_state, connes_cocycle, equivalence_probe, is_sufficient_subalgebra, minimal_sufficient_basis,
    modular_orbit, GroupWord, Letter, QuantumExperiment, DEFAULT_T_GRID,
};
use qlan_core::{CMatrix, DensityMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentSpec, FamilySpec, LetterSpec, MatrixSpec, RunConfig, Schedule, Tolerances};
use crate::error::CliError;
use crate::output::{num, Csv};

pub fn matrix(spec: &MatrixSpec) -> Result<CMatrix, String> {
    let n = spec.len();
    if n == 0 {
        return Err("empty matrix".into());
    }
    if let Some(row) = spec.iter().find(|r| r.len() != n) {
        return Err(format!("matrix is not square: {n} rows but a row of length {}", row.len()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(spec[i][j][0], spec[i][j][1])))
}

fn matrices(specs: &[MatrixSpec]) -> Result<Vec<CMatrix>, String> {
    specs.iter().map(matrix).collect()
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("θ{i}")).collect()
}

/// Families and experiments built from the config.
#[derive(Default)]
pub struct Registry {
    pub families: BTreeMap<String, Arc<dyn QuantumFamily>>,
    pub classical: BTreeMap<String, ClassicalExperiment>,
    pub quantum: BTreeMap<String, QuantumExperiment>,
}

impl Registry {
    pub fn build(cfg: &RunConfig, source: &str, path: &str) -> Result<Self, CliError> {
        let anchor = |name: &str, msg: String| {
            let line = crate::config::line_of(source, name).unwrap_or(1);
            CliError::Config(format!("{path}:{line}: `{name}`: {msg}"))
        };
        let mut reg = Registry::default();
        for (name, spec) in &cfg.families {
            let fam = build_family(spec).map_err(|m| anchor(name, m))?;
            reg.families.insert(name.clone(), fam);
        }
        for (name, spec) in &cfg.experiments {
            match spec {
                ExperimentSpec::Classical { labels, rows } => {
                    let labels = labels.clone().unwrap_or_else(|| default_labels(rows.len()));
                    let e = ClassicalExperiment::new(labels, rows.clone()).map_err(|e| anchor(name, e.to_string()))?;
                    reg.classical.insert(name.clone(), e);
                }
                ExperimentSpec::Quantum { labels, states, base } => {
                    let states = matrices(states)
                        .map_err(|m| anchor(name, m))?
                        .into_iter()
                        .map(DensityMatrix::new)
                        .collect::<qlan_core::Result<Vec<_>>>()
                        .map_err(|e| anchor(name, e.to_string()))?;
                    let labels = labels.clone().unwrap_or_else(|| default_labels(states.len()));
                    let e = QuantumExperiment::new(labels, states, *base).map_err(|e| anchor(name, e.to_string()))?;
                    reg.quantum.insert(name.clone(), e);
                }
            }
        }
        Ok(reg)
    }
}

fn build_family(spec: &FamilySpec) -> Result<Arc<dyn QuantumFamily>, String> {
    let s = |e: qlan_core::Error| e.to_string();
    Ok(match spec {
        FamilySpec::Qubit { r } => Arc::new(QubitFamily::new(*r).map_err(s)?),
        FamilySpec::Diagonal { probabilities, derivatives } => {
            Arc::new(DiagonalFamily::new(probabilities.clone(), derivatives.clone()).map_err(s)?)
        }
        FamilySpec::Rotation { rho, generators } => {
            let rho = DensityMatrix::new(matrix(rho)?).map_err(s)?;
            Arc::new(RotationFamily::new(rho, matrices(generators)?).map_err(s)?)
        }
        FamilySpec::User { rho, directions } => {
            let rho = DensityMatrix::new(matrix(rho)?).map_err(s)?;
            Arc::new(UserFamily::new(rho, matrices(directions)?).map_err(s)?)
        }
    })
}

/// What a job produced: a pass flag, a one-line summary, and its two artifacts.
#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub name: String,
    pub command: &'static str,
    pub pass: bool,
    pub summary: String,
    pub csv: Csv,
    pub json: Value,
}

pub struct JobContext<'a> {
    pub registry: &'a Registry,
    pub tolerances: &'a Tolerances,
    pub seed: u64,
}

type JobResult = qlan_core::Result<(bool, String, Csv, Value)>;

pub fn run_job(name: &str, command: &Command, ctx: &JobContext) -> Result<JobOutcome, CliError> {
    let res = match command {
        Command::Hellinger { experiment, z } => hellinger(&ctx.registry.classical[experiment], z, ctx.tolerances),
        Command::CanonicalMeasure { experiment } => measure(&ctx.registry.classical[experiment]),
        Command::Deficiency { from, to, expect } => deficiency(
            &ctx.registry.classical[from],
            &ctx.registry.classical[to],
            *expect,
            ctx.tolerances,
        ),
        Command::Cocycle { experiment, theta, t } => cocycle(&ctx.registry.quantum[experiment], theta, t, ctx.tolerances),
        Command::CanonicalState { experiment, words, random_words, compare } => canonical(
            &ctx.registry.quantum[experiment],
            words,
            *random_words,
            compare.as_ref().map(|c| &ctx.registry.quantum[c]),
            ctx,
        ),
        Command::SuffCheck { experiment, basis, t_grid } => {
            suff_check(&ctx.registry.quantum[experiment], basis.as_deref(), t_grid.as_deref())
        }
        Command::LanVerify { family, word, schedule, base_u, simplified } => lan_verify(
            &ctx.registry.families[family],
            word,
            schedule,
            base_u.as_deref(),
            *simplified,
            ctx.tolerances,
        ),
        Command::QubitDemo { r, u } => qubit_demo(*r, *u, ctx.tolerances),
    };
    let (pass, summary, csv, result) =
        res.map_err(|source| CliError::Numerical { job: name.to_string(), source })?;
    let json = json!({
        "job": name,
        "command": command.name(),
        "pass": pass,
        "parameters": command,
        "tolerances": ctx.tolerances,
        "result": result,
    });
    Ok(JobOutcome { name: name.to_string(), command: command.name(), pass, summary, csv, json })
}

fn hellinger(e: &ClassicalExperiment, zs: &[Vec<f64>], tol: &Tolerances) -> JobResult {
    let m = e.num_params();
    let cm = canonical_measure(e)?;
    let mut header = vec!["z_index".to_string()];
    header.extend((0..m).map(|i| format!("z{i}")));
    header.push("eta".into());
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut values = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, z) in zs.iter().enumerate() {
        let zp = SimplexPoint::new(z.clone())?;
        let eta = hellinger_transform(e, &zp)?;
        worst = worst.max((cm.hellinger_transform(&zp)? - eta).abs());
        let mut row = vec![i.to_string()];
        row.extend(z.iter().map(|x| num(*x)));
        row.push(num(eta));
        csv.row(&row);
        values.push(eta);
    }
    let pass = worst <= tol.hellinger;
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    let summary = format!("eta = [{}]", shown.join(", "));
    Ok((pass, summary, csv, json!({ "eta": values, "measure_discrepancy": worst })))
}

fn measure(e: &ClassicalExperiment) -> JobResult {
    let cm = canonical_measure(e)?;
    let m = e.num_params();
    let mut header = vec!["atom".to_string()];
    header.extend((0..m).map(|i| format!("v{i}")));
    header.push("mass".into());
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, a) in cm.atoms.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(a.v.iter().map(|x| num(*x)));
        row.push(num(a.mass));
        csv.row(&row);
    }
    let mass = cm.total_mass();
    let pass = (mass - m as f64).abs() <= 1e-10;
    let summary = format!("{} atoms, total mass {mass:.6}", cm.atoms.len());
    Ok((pass, summary, csv, json!({ "measure": cm, "total_mass": mass })))
}

fn deficiency(e1: &ClassicalExperiment, e2: &ClassicalExperiment, expect: Option<f64>, tol: &Tolerances) -> JobResult {
    let d = deficiency_lp(e1, e2)?;
    let mut csv = Csv::new(&["row", "col", "kernel"]);
    for (i, row) in d.kernel.iter().enumerate() {
        for (j, k) in row.iter().enumerate() {
            csv.row(&[i.to_string(), j.to_string(), num(*k)]);
        }
    }
    let pass = expect.is_none_or(|x| (d.delta - x).abs() <= tol.deficiency);
    let summary = format!("{:.6}", d.delta);
    Ok((pass, summary, csv, json!({ "delta": d.delta, "kernel": d.kernel, "expected": expect })))
}

fn cocycle(e: &QuantumExperiment, theta: &str, ts: &[f64], tol: &Tolerances) -> JobResult {
    let th = e.index_of(theta)?;
    let d = e.dim();
    let mut csv = Csv::new(&["t", "row", "col", "re", "im"]);
    let mut unitarity: f64 = 0.0;
    let mut identity_residual: f64 = 0.0;
    for (k, &t) in ts.iter().enumerate() {
        let u = connes_cocycle(e, th, t)?;
        unitarity = unitarity.max(hs_norm(&(u.adjoint() * &u - identity(d))));
        if let Some(&s) = ts.get(k + 1) {
            // u_t σ_t(u_s) = u_{t+s}
            let lhs = &u * modular_orbit(e.base_state(), &connes_cocycle(e, th, s)?, t)?;
            identity_residual = identity_residual.max(hs_norm(&(lhs - connes_cocycle(e, th, t + s)?)));
        }
        for i in 0..d {
            for j in 0..d {
                csv.row(&[num(t), i.to_string(), j.to_string(), num(u[(i, j)].re), num(u[(i, j)].im)]);
            }
        }
    }
    let pass = unitarity <= tol.cocycle && identity_residual <= tol.cocycle;
    let summary = format!("{} times, unitarity {unitarity:.2e}, cocycle identity {identity_residual:.2e}", ts.len());
    Ok((pass, summary, csv, json!({ "unitarity_residual": unitarity, "cocycle_identity_residual": identity_residual })))
}

fn word_from_spec(e: &QuantumExperiment, letters: &[LetterSpec]) -> qlan_core::Result<GroupWord> {
    let letters = letters
        .iter()
        .map(|l| Ok(Letter { theta: e.index_of(&l.theta)?, t: l.t, inverse: l.inverse }))
        .collect::<qlan_core::Result<Vec<_>>>()?;
    Ok(GroupWord::new(letters, e.base()))
}

/// Words drawn from the run seed; only these depend on `--seed`.
pub fn random_words(e: &QuantumExperiment, count: usize, seed: u64) -> Vec<GroupWord> {
    let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
    let m = e.num_params();
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=4);
            let letters: Vec<Letter> = (0..k)
                .map(|_| Letter { theta: rng.gen_range(0..m), t: rng.gen_range(-2.0..2.0), inverse: rng.gen_bool(0.3) })
                .collect();
            GroupWord::new(letters, e.base())
        })
        .collect()
}

fn describe(e: &QuantumExperiment, g: &GroupWord) -> Value {
    Value::Array(
        g.letters()
            .iter()
            .map(|l| json!({ "theta": e.labels()[l.theta], "t": l.t, "inverse": l.inverse }))
            .collect(),
    )
}

fn canonical(
    e: &QuantumExperiment,
    specs: &[Vec<LetterSpec>],
    extra: usize,
    compare: Option<&QuantumExperiment>,
    ctx: &JobContext,
) -> JobResult {
    let mut words = specs.iter().map(|w| word_from_spec(e, w)).collect::<qlan_core::Result<Vec<_>>>()?;
    words.extend(random_words(e, extra, ctx.seed));
    let mut csv = Csv::new(&["word", "re", "im"]);
    let mut values = Vec::new();
    let mut pass = true;
    for (i, g) in words.iter().enumerate() {
        let v = canonical_state(e, g)?;
        pass &= v.norm() <= 1.0 + 1e-10;
        csv.row(&[i.to_string(), num(v.re), num(v.im)]);
        values.push(json!({ "word": describe(e, g), "re": v.re, "im": v.im }));
    }
    let mut summary: Vec<String> = words
        .iter()
        .zip(&values)
        .take(4)
        .map(|(_, v)| format!("{:.6}{:+.6}i", v["re"].as_f64().unwrap_or(f64::NAN), v["im"].as_f64().unwrap_or(f64::NAN)))
        .collect();
    if words.len() > 4 {
        summary.push(format!("… ({} words)", words.len()));
    }
    let mut summary = summary.join(", ");
    let mut probe = Value::Null;
    if let Some(f) = compare {
        let p = equivalence_probe(e, f, &words)?;
        let ok = p <= ctx.tolerances.probe;
        pass &= ok;
        summary = if ok {
            format!("{summary}; no discrepancy detected on {} words", words.len())
        } else {
            format!("{summary}; discrepancy {p:.3e} on {} words", words.len())
        };
        probe = json!(p);
    }
    Ok((pass, summary, csv, json!({ "values": values, "probe": probe })))
}

fn suff_check(e: &QuantumExperiment, basis: Option<&[MatrixSpec]>, t_grid: Option<&[f64]>) -> JobResult {
    let grid = t_grid.map_or_else(|| DEFAULT_T_GRID.to_vec(), <[f64]>::to_vec);
    let (basis, rounds) = match basis {
        Some(b) => (matrices(b).map_err(qlan_core::Error::InvalidBasis)?, None),
        None => {
            let mb = minimal_sufficient_basis(e, &grid)?;
            (mb.basis, Some(mb.rounds))
        }
    };
    let report = is_sufficient_subalgebra(e, &basis, &grid)?;
    let mut csv = Csv::new(&["element", "row", "col", "re", "im"]);
    for (k, b) in basis.iter().enumerate() {
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                csv.row(&[k.to_string(), i.to_string(), j.to_string(), num(b[(i, j)].re), num(b[(i, j)].im)]);
            }
        }
    }
    let verdict = if report.sufficient { "sufficient" } else { "not sufficient" };
    let summary = format!(
        "{verdict} on the t grid (dimension {}, residual {:.2e}; finite grid, not a continuum statement)",
        basis.len(),
        report.max_residual
    );
    Ok((report.sufficient, summary, csv, json!({ "report": report, "dimension": basis.len(), "closure_rounds": rounds })))
}

fn lan_verify(
    family: &Arc<dyn QuantumFamily>,
    word: &[crate::config::LanLetterSpec],
    schedule: &Schedule,
    base_u: Option<&[f64]>,
    simplified: bool,
    tol: &Tolerances,
) -> JobResult {
    let lf = LocalFamily::new(family.clone())?;
    let w = CocycleWordSpec::new(
        word.iter().map(|l| CocycleLetter { u: l.u.clone(), t: l.t, adjoint: l.adjoint }).collect(),
    )?;
    let ns = match schedule {
        Schedule::Decades { from, to } => {
            if from > to || *to > 18 {
                return Err(qlan_core::Error::OutOfRange(format!("decade range {from}..{to}")));
            }
            qlan_core::convergence::decade_schedule(*from, *to)
        }
        Schedule::Explicit(v) => v.clone(),
    };
    let settings = ReportSettings { burn_in: tol.lan_burn_in, threshold: tol.lan_threshold, noise_per_n: tol.lan_noise_per_n };
    let report = lan_report(&lf, &w, &ns, base_u, &settings)?;
    let mut pass = report.pass;
    let mut simplified_gap_value = None;
    if simplified {
        let n = *ns.last().expect("schedule is nonempty");
        let g = simplified_gap(&lf, &lf.simplified()?, &w, n)?;
        pass &= g <= tol.simplified;
        simplified_gap_value = Some(g);
    }
    let last = report.rows.last().expect("schedule is nonempty");
    let slope = report.slope.map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
    let mut summary = format!("gap({}) = {:.3e}, slope {slope}, monotone {}", last.n, last.gap, report.monotone);
    if let Some(g) = simplified_gap_value {
        summary.push_str(&format!(", simplified gap {g:.3e}"));
    }
    let csv = Csv::from_text(report.to_csv());
    Ok((pass, summary, csv, json!({ "report": report, "simplified_gap": simplified_gap_value })))
}

fn qubit_demo(r: f64, u: [f64; 3], tol: &Tolerances) -> JobResult {
    let cf = qubit_closed_forms(r, u)?;
    let p = qubit_pipeline(r, u)?;
    let rows = [
        ("I_c", cf.fisher_classical, p.fisher_classical),
        ("minus_phi_h", cf.fisher_classical, p.fisher_from_h),
        ("classical_mean", cf.classical_mean, p.classical_mean),
        ("wigner_center_x", cf.wigner_center[0], p.wigner_center[0]),
        ("wigner_center_y", cf.wigner_center[1], p.wigner_center[1]),
        ("sigma_yx", cf.sigma_yx, p.sigma_yx),
    ];
    let mut csv = Csv::new(&["quantity", "closed_form", "pipeline"]);
    let mut worst: f64 = 0.0;
    for (name, a, b) in rows {
        csv.row(&[name.to_string(), num(a), num(b)]);
        worst = worst.max((a - b).abs());
    }
    let pass = worst <= tol.closed_form && p.k_dim == 3 && p.l_a_residual <= tol.closed_form;
    let summary = format!("I_c = {:.6}, K dimension {}, max deviation {worst:.2e}", cf.fisher_classical, p.k_dim);
    Ok((pass, summary, csv, json!({ "I_c": cf.fisher_classical, "closed_forms": cf, "pipeline": p })))
}
