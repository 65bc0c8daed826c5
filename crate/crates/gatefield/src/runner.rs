//! Run orchestration: configuration → model/target/engine → persisted run
//! directory, plus the register-size sweep with its iteration-scaling fit.
//!
//! The sweep runs one optimization per requested qubit count, optionally on
//! parallel worker threads. Runs are completely independent (immutable model
//! per worker, per-run output directories), so the combined table is
//! assembled deterministically in input order after all workers finish.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::analysis::{fit_scaling_law, ScalingFit, ScalingPoint};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::krotov::{run_optimization_diagnostic, IterationRecord, OptimizationOutcome};
use crate::persist::{fmt_f64, write_run_dir};

/// Fidelity levels reported in the sweep's combined table.
pub const FIDELITY_MILESTONES: [f64; 4] = [-1.0, -2.0, -3.0, -4.0];

/// One finished optimization plus its provenance.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub outcome: OptimizationOutcome,
    pub wall_clock: Duration,
}

/// Validate, build model and target, and run the optimization described by
/// `config`.
pub fn run_from_config(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let model = config.build_model()?;
    let target = config.build_target()?;
    let started = Instant::now();
    let outcome = run_optimization_diagnostic(&model, &target, &config.krotov_config())?;
    Ok(RunResult {
        config: config.clone(),
        outcome,
        wall_clock: started.elapsed(),
    })
}

/// Persist one run into `dir` (created if needed).
pub fn persist_run(dir: &Path, result: &RunResult) -> Result<()> {
    write_run_dir(dir, &result.config, &result.outcome, result.wall_clock)
}

/// First iteration whose fidelity reached `milestone`, if any.
pub fn milestone_iteration(records: &[IterationRecord], milestone: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.fidelity <= milestone)
        .map(|r| r.iteration)
}

/// All sweep runs plus the scaling fit over runs that reached their fidelity
/// target (kept as a message when the fit is not possible, e.g. a
/// single-point sweep).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<RunResult>,
    pub fit: std::result::Result<ScalingFit, String>,
}

/// Run one optimization per entry of `qubit_list` (sharing every other
/// config key), on up to `threads` worker threads.
pub fn sweep_qubits(base: &RunConfig, qubit_list: &[u32], threads: usize) -> Result<SweepResult> {
    if qubit_list.is_empty() {
        return Err(Error::config("qubits", "sweep list is empty"));
    }
    for (i, q) in qubit_list.iter().enumerate() {
        if qubit_list[..i].contains(q) {
            return Err(Error::config(
                "qubits",
                format!("sweep list repeats Q={q}; output directories would collide"),
            ));
        }
    }
    let configs: Vec<RunConfig> = qubit_list.iter().map(|&q| base.with_qubits(q)).collect();
    for config in &configs {
        config.validate()?;
    }

    let workers = threads.max(1).min(configs.len());
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunResult>>>> =
        configs.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= configs.len() {
                    break;
                }
                let result = run_from_config(&configs[index]);
                *slots[index].lock().expect("slot poisoned") = Some(result);
            });
        }
    });

    let mut runs = Vec::with_capacity(configs.len());
    for slot in slots {
        runs.push(
            slot.into_inner()
                .expect("slot poisoned")
                .expect("worker filled every claimed slot")?,
        );
    }
    let fit = fit_from_runs(&runs);
    Ok(SweepResult { runs, fit })
}

fn fit_from_runs(runs: &[RunResult]) -> std::result::Result<ScalingFit, String> {
    let mut points = Vec::new();
    for run in runs {
        let target = run.config.fidelity_target;
        match milestone_iteration(&run.outcome.records, target) {
            Some(iteration) if iteration > 0 => points.push(ScalingPoint {
                levels: run.config.subspace_dim() as f64,
                fidelity_magnitude: target.abs(),
                iterations: iteration as f64,
            }),
            _ => {}
        }
    }
    if points.len() < 2 {
        return Err(format!(
            "scaling fit needs at least 2 runs that reached their fidelity target, got {}",
            points.len()
        ));
    }
    fit_scaling_law(&points).map_err(|e| e.to_string())
}

/// Combined sweep table: register size, level count, iterations to each
/// fidelity milestone (`-` when never reached), final intensity.
pub fn sweep_table(runs: &[RunResult]) -> String {
    let mut out = String::from("qubits\tlevels");
    for milestone in FIDELITY_MILESTONES {
        out.push_str(&format!("\titerations_to_{milestone}"));
    }
    out.push_str("\tfinal_intensity\n");
    for run in runs {
        out.push_str(&format!("{}\t{}", run.config.qubits, run.config.subspace_dim()));
        for milestone in FIDELITY_MILESTONES {
            match milestone_iteration(&run.outcome.records, milestone) {
                Some(iteration) => out.push_str(&format!("\t{iteration}")),
                None => out.push_str("\t-"),
            }
        }
        let intensity = run
            .outcome
            .records
            .last()
            .expect("at least the guess record")
            .intensity;
        out.push('\t');
        out.push_str(&fmt_f64(intensity));
        out.push('\n');
    }
    out
}

fn scaling_fit_text(fit: &std::result::Result<ScalingFit, String>) -> String {
    match fit {
        Ok(fit) => format!(
            "a = {}\nb = {}\nresidual = {}\npoints = {}\n",
            fmt_f64(fit.a),
            fmt_f64(fit.b),
            fmt_f64(fit.residual),
            fit.points.len()
        ),
        Err(message) => format!("fit error: {message}\n"),
    }
}

/// Persist a sweep: one `q<N>/` run directory per register size plus the
/// combined table and the scaling fit (or its error).
pub fn write_sweep_dir(dir: &Path, sweep: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for run in &sweep.runs {
        persist_run(&dir.join(format!("q{}", run.config.qubits)), run)?;
    }
    std::fs::write(dir.join("sweep.tsv"), sweep_table(&sweep.runs))?;
    std::fs::write(dir.join("scaling_fit.txt"), scaling_fit_text(&sweep.fit))?;
    Ok(())
}
