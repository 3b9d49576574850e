//! Thread-per-task executor used as a cross-check for the simulator.
//!
//! Each task runs on its own OS thread with sleeps realized as real pauses.
//! Emit order depends on the host scheduler. Emitted values and terminal
//! statuses do not, and [`reconcile`] compares exactly those.

use std::collections::BTreeMap;
use std::io;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::interp::{EmitRecord, StepContext, StepOutcome, TaskCursor, Tick};
use crate::trace::{RunMode, RunResult, TaskOutcome, TaskStatus};
use crate::workload::{bind_env, validate_workload, ValidationError, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParallelConfig {
    /// Wall-clock length of one simulated sleep tick.
    pub tick: Duration,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            tick: Duration::from_millis(1),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParallelError {
    #[error("invalid workload: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidWorkload(Vec<ValidationError>),
    #[error("failed to launch worker for task {task}: {source}")]
    Spawn {
        task: String,
        #[source]
        source: io::Error,
    },
    #[error("worker for task {0} panicked")]
    WorkerPanicked(String),
}

/// Runs every task at once on its own thread.
///
/// Emit ticks are task-local: they count the task's own compute and sleep
/// ticks from 0, as [`run_to_completion`](crate::interp::run_to_completion)
/// does.
pub fn run_parallel(w: &Workload, config: ParallelConfig) -> Result<RunResult, ParallelError> {
    let errors = validate_workload(w);
    if !errors.is_empty() {
        return Err(ParallelError::InvalidWorkload(errors));
    }
    let sink: Mutex<Vec<EmitRecord>> = Mutex::new(Vec::new());
    let started = Instant::now();

    let statuses = thread::scope(|scope| {
        let mut handles = Vec::with_capacity(w.tasks.len());
        for spec in w.tasks_by_rank() {
            let program = w.program(&spec.program).expect("validated program");
            let env = bind_env(spec, w.shared.as_ref()).expect("validated data source");
            let sink = &sink;
            let handle = thread::Builder::new()
                .name(spec.name.clone())
                .spawn_scoped(scope, move || {
                    let mut cursor = TaskCursor::new(program, env);
                    let mut local: Tick = 0;
                    loop {
                        let pc = cursor.pc();
                        let outcome = cursor.step(StepContext {
                            task: &spec.name,
                            tick: local,
                        });
                        local += outcome.cost();
                        match outcome {
                            StepOutcome::Advanced => {}
                            StepOutcome::Emitted(rec) => {
                                sink.lock().expect("emit sink poisoned").push(rec)
                            }
                            StepOutcome::Slept(n) => {
                                local = local.saturating_add(n);
                                thread::sleep(scaled(config.tick, n));
                            }
                            StepOutcome::Finished => return TaskStatus::Finished,
                            StepOutcome::Failed(fault) => return TaskStatus::Failed { pc, fault },
                        }
                    }
                })
                .map_err(|source| ParallelError::Spawn {
                    task: spec.name.clone(),
                    source,
                })?;
            handles.push((spec, handle));
        }
        handles
            .into_iter()
            .map(|(spec, handle)| {
                let status = handle
                    .join()
                    .map_err(|_| ParallelError::WorkerPanicked(spec.name.clone()))?;
                Ok(TaskOutcome {
                    task: spec.name.clone(),
                    rank: spec.rank,
                    status,
                    at: None,
                })
            })
            .collect::<Result<Vec<_>, ParallelError>>()
    })?;

    Ok(RunResult {
        mode: RunMode::Parallel,
        emits: sink.into_inner().expect("emit sink poisoned"),
        outcomes: statuses,
        trace: None,
        wall_time: Some(started.elapsed()),
    })
}

fn scaled(tick: Duration, n: Tick) -> Duration {
    let n = u32::try_from(n).unwrap_or(u32::MAX);
    tick.saturating_mul(n)
}

/// An emit's identity with order and time removed.
pub type EmitKey = (String, String, i64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusMismatch {
    pub task: String,
    pub left: Option<TaskStatus>,
    pub right: Option<TaskStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub equal: bool,
    /// Emits present in the left result but not the right, with multiplicity.
    pub missing: Vec<EmitKey>,
    /// Emits present in the right result but not the left.
    pub extra: Vec<EmitKey>,
    pub status_mismatches: Vec<StatusMismatch>,
}

fn multiset(emits: &[EmitRecord]) -> BTreeMap<EmitKey, usize> {
    let mut counts = BTreeMap::new();
    for e in emits {
        *counts.entry(e.key()).or_default() += 1;
    }
    counts
}

fn difference(a: &BTreeMap<EmitKey, usize>, b: &BTreeMap<EmitKey, usize>) -> Vec<EmitKey> {
    a.iter()
        .flat_map(|(k, &n)| {
            let surplus = n.saturating_sub(b.get(k).copied().unwrap_or(0));
            std::iter::repeat_n(k.clone(), surplus)
        })
        .collect()
}

/// Compares emitted values as multisets, and terminal statuses per task.
/// Order and ticks are ignored.
pub fn reconcile(left: &RunResult, right: &RunResult) -> EquivalenceReport {
    let (a, b) = (multiset(&left.emits), multiset(&right.emits));
    let missing = difference(&a, &b);
    let extra = difference(&b, &a);

    let statuses = |r: &RunResult| -> BTreeMap<String, TaskStatus> {
        r.outcomes
            .iter()
            .map(|o| (o.task.clone(), o.status.clone()))
            .collect()
    };
    let (ls, rs) = (statuses(left), statuses(right));
    let mut names: Vec<&String> = ls.keys().chain(rs.keys()).collect();
    names.sort();
    names.dedup();
    let status_mismatches: Vec<StatusMismatch> = names
        .into_iter()
        .filter(|n| ls.get(*n) != rs.get(*n))
        .map(|n| StatusMismatch {
            task: n.clone(),
            left: ls.get(n).cloned(),
            right: rs.get(n).cloned(),
        })
        .collect();

    EquivalenceReport {
        equal: missing.is_empty() && extra.is_empty() && status_mismatches.is_empty(),
        missing,
        extra,
        status_mismatches,
    }
}
