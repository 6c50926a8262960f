//! Batch execution: jobs in declared order, optionally on several threads.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{Format, RunConfig};
use crate::error::{exit, CliError};
use crate::jobs::{run_job, JobContext, JobOutcome, Registry};
use crate::output::write_atomic;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub tolerance_scale: f64,
    pub seed: u64,
    /// Restrict to jobs of one command.
    pub only: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { out: None, threads: 1, tolerance_scale: 1.0, seed: 0, only: None }
    }
}

pub struct RunSummary {
    pub results: Vec<Result<JobOutcome, CliError>>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.is_err()) {
            exit::NUMERICAL
        } else if self.results.iter().any(|r| matches!(r, Ok(o) if !o.pass)) {
            exit::ACCEPTANCE_FAIL
        } else {
            exit::PASS
        }
    }
}

fn emit(o: &JobOutcome, dir: &std::path::Path, formats: &[Format]) -> Result<(), CliError> {
    for f in formats {
        match f {
            Format::Csv => write_atomic(dir, &format!("{}.csv", o.name), o.csv.as_str().as_bytes())?,
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&o.json).expect("job JSON serializes");
                text.push('\n');
                write_atomic(dir, &format!("{}.json", o.name), text.as_bytes())?
            }
        }
    }
    Ok(())
}

/// Runs the selected jobs. Artifacts of finished jobs are written even when
/// other jobs fail.
pub fn run(cfg: &RunConfig, registry: &Registry, opts: &RunOptions) -> RunSummary {
    let tolerances = cfg.tolerances.scaled(opts.tolerance_scale);
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let names = cfg.job_names();
    let selected: Vec<usize> = (0..cfg.jobs.len())
        .filter(|&i| opts.only.as_deref().is_none_or(|c| cfg.jobs[i].command.name() == c))
        .collect();
    let ctx = JobContext { registry, tolerances: &tolerances, seed: opts.seed };
    let slots: Vec<Mutex<Option<Result<JobOutcome, CliError>>>> = selected.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(&i) = selected.get(k) else { break };
        let res = run_job(&names[i], &cfg.jobs[i].command, &ctx)
            .and_then(|o| emit(&o, &dir, &cfg.output.formats).map(|_| o));
        *slots[k].lock().expect("slot lock") = Some(res);
    };
    let threads = opts.threads.clamp(1, selected.len().max(1));
    if threads == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(work);
            }
        });
    }
    RunSummary {
        results: slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every selected job ran"))
            .collect(),
    }
}
