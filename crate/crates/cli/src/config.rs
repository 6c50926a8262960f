//! Run configuration: a single JSON document.
//!
//! Complex matrices are written row-major as `[[[re, im], …], …]`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub families: BTreeMap<String, FamilySpec>,
    #[serde(default)]
    pub experiments: BTreeMap<String, ExperimentSpec>,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Qubit { r: f64 },
    Diagonal { probabilities: Vec<f64>, derivatives: Vec<Vec<f64>> },
    Rotation { rho: MatrixSpec, generators: Vec<MatrixSpec> },
    User { rho: MatrixSpec, directions: Vec<MatrixSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    Classical {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        rows: Vec<Vec<f64>>,
    },
    Quantum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        states: Vec<MatrixSpec>,
        #[serde(default)]
        base: usize,
    },
}

/// One letter `u_t(θ)` (or its inverse) of a canonical-state word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterSpec {
    pub theta: String,
    pub t: f64,
    #[serde(default)]
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanLetterSpec {
    pub u: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub adjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    /// `10^from, …, 10^to`.
    Decades { from: u32, to: u32 },
    Explicit(Vec<u64>),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Decades { from: 2, to: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Hellinger {
        experiment: String,
        z: Vec<Vec<f64>>,
    },
    CanonicalMeasure {
        experiment: String,
    },
    Deficiency {
        from: String,
        to: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<f64>,
    },
    Cocycle {
        experiment: String,
        theta: String,
        t: Vec<f64>,
    },
    CanonicalState {
        experiment: String,
        #[serde(default)]
        words: Vec<Vec<LetterSpec>>,
        /// Extra words drawn from `--seed`.
        #[serde(default)]
        random_words: usize,
        /// Second experiment probed for equivalence on the same words.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        compare: Option<String>,
    },
    SuffCheck {
        experiment: String,
        /// Basis of the candidate subalgebra; the minimal one is built when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<MatrixSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_grid: Option<Vec<f64>>,
    },
    LanVerify {
        family: String,
        word: Vec<LanLetterSpec>,
        #[serde(default)]
        schedule: Schedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base_u: Option<Vec<f64>>,
        /// Also compare against the simplified family at the last schedule point.
        #[serde(default)]
        simplified: bool,
    },
    QubitDemo {
        r: f64,
        #[serde(default)]
        u: [f64; 3],
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Hellinger { .. } => "hellinger",
            Command::CanonicalMeasure { .. } => "canonical-measure",
            Command::Deficiency { .. } => "deficiency",
            Command::Cocycle { .. } => "cocycle",
            Command::CanonicalState { .. } => "canonical-state",
            Command::SuffCheck { .. } => "suff-check",
            Command::LanVerify { .. } => "lan-verify",
            Command::QubitDemo { .. } => "qubit-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Final-gap threshold of `lan-verify`.
    pub lan_threshold: f64,
    pub lan_burn_in: u64,
    pub lan_noise_per_n: f64,
    /// Simplified-family gap at the last schedule point.
    pub simplified: f64,
    /// `deficiency` against its `expect` value.
    pub deficiency: f64,
    /// Agreement of the two Hellinger evaluations.
    pub hellinger: f64,
    /// Unitarity and cocycle-identity residuals.
    pub cocycle: f64,
    /// `canonical-state` equivalence probe.
    pub probe: f64,
    /// Closed forms against the generic pipeline.
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lan_threshold: 1e-3,
            lan_burn_in: 10_000,
            lan_noise_per_n: 1e-15,
            simplified: 1e-3,
            deficiency: 1e-6,
            hellinger: 1e-12,
            cocycle: 1e-10,
            probe: 1e-10,
            closed_form: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lan_threshold: self.lan_threshold * s,
            lan_burn_in: self.lan_burn_in,
            lan_noise_per_n: self.lan_noise_per_n * s,
            simplified: self.simplified * s,
            deficiency: self.deficiency * s,
            hellinger: self.hellinger * s,
            cocycle: self.cocycle * s,
            probe: self.probe * s,
            closed_form: self.closed_form * s,
        }
    }

    fn check(&self) -> Result<(), String> {
        let all = [
            ("lan_threshold", self.lan_threshold),
            ("lan_noise_per_n", self.lan_noise_per_n),
            ("simplified", self.simplified),
            ("deficiency", self.deficiency),
            ("hellinger", self.hellinger),
            ("cocycle", self.cocycle),
            ("probe", self.probe),
            ("closed_form", self.closed_form),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerance `{name}` must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { directory: PathBuf::from("qlan-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

/// 1-based line of the first occurrence of `"needle"` in the source.
pub fn line_of(source: &str, needle: &str) -> Option<usize> {
    let quoted = format!("\"{needle}\"");
    source.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

fn valid_job_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl RunConfig {
    /// Parses and checks name resolution. Errors carry `path:line:col`.
    pub fn parse(source: &str, path: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(source)
            .map_err(|e| CliError::Config(format!("{path}:{}:{}: {e}", e.line(), e.column())))?;
        cfg.validate(source, path)?;
        Ok(cfg)
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Job names, defaulted to `NN-command` by position.
    pub fn job_names(&self) -> Vec<String> {
        self.jobs
            .iter()
            .enumerate()
            .map(|(i, j)| j.name.clone().unwrap_or_else(|| format!("{:02}-{}", i + 1, j.command.name())))
            .collect()
    }

    fn validate(&self, source: &str, path: &str) -> Result<(), CliError> {
        let anchor = |needle: &str, msg: String| {
            let line = line_of(source, needle).unwrap_or(1);
            CliError::Config(format!("{path}:{line}: {msg}"))
        };
        self.tolerances.check().map_err(|m| anchor("tolerances", m))?;
        let names = self.job_names();
        for (i, name) in names.iter().enumerate() {
            if !valid_job_name(name) {
                return Err(anchor(name, format!("job name `{name}` may only use letters, digits, '-' and '_'")));
            }
            if names[..i].contains(name) {
                return Err(anchor(name, format!("duplicate job name `{name}`")));
            }
        }
        let family = |n: &str| {
            if self.families.contains_key(n) {
                Ok(())
            } else {
                Err(anchor(n, format!("unknown family `{n}`")))
            }
        };
        let experiment = |n: &str, quantum: bool| match self.experiments.get(n) {
            Some(ExperimentSpec::Quantum { .. }) if quantum => Ok(()),
            Some(ExperimentSpec::Classical { .. }) if !quantum => Ok(()),
            Some(_) => Err(anchor(
                n,
                format!("experiment `{n}` must be {}", if quantum { "quantum" } else { "classical" }),
            )),
            None => Err(anchor(n, format!("unknown experiment `{n}`"))),
        };
        for job in &self.jobs {
            match &job.command {
                Command::Hellinger { experiment: e, .. } | Command::CanonicalMeasure { experiment: e } => {
                    experiment(e, false)?
                }
                Command::Deficiency { from, to, .. } => {
                    experiment(from, false)?;
                    experiment(to, false)?;
                }
                Command::Cocycle { experiment: e, .. } | Command::SuffCheck { experiment: e, .. } => {
                    experiment(e, true)?
                }
                Command::CanonicalState { experiment: e, compare, .. } => {
                    experiment(e, true)?;
                    if let Some(c) = compare {
                        experiment(c, true)?;
                    }
                }
                Command::LanVerify { family: f, .. } => family(f)?,
                Command::QubitDemo { .. } => {}
            }
        }
        Ok(())
    }
}
