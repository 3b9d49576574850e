//! Performance figures derived from traces.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::interp::Tick;
use crate::trace::{Action, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Tick at which the last task reached a terminal state.
    pub makespan: Tick,
    /// Ticks spent executing compute and emit instructions.
    pub compute_ticks: Tick,
    /// `makespan - compute_ticks`; there is one processor.
    pub idle_ticks: Tick,
    pub context_switches: u64,
    /// Terminal tick per task. Every task arrives at tick 0.
    pub per_task_turnaround: BTreeMap<String, Tick>,
    pub utilization: f64,
}

impl RunMetrics {
    pub(crate) fn from_parts(
        makespan: Tick,
        compute_ticks: Tick,
        context_switches: u64,
        per_task_turnaround: BTreeMap<String, Tick>,
    ) -> Self {
        // A run that never used the processor also never left it idle.
        let utilization = if makespan == 0 {
            1.0
        } else {
            compute_ticks as f64 / makespan as f64
        };
        Self {
            makespan,
            compute_ticks,
            idle_ticks: makespan - compute_ticks,
            context_switches,
            per_task_turnaround,
            utilization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("trace is incomplete: task {0} never reached a terminal state")]
    Incomplete(String),
    #[error("concurrent makespan is zero")]
    ZeroMakespan,
}

/// Replays a complete trace.
///
/// A context switch is counted wherever two consecutive instruction-executing
/// events (compute, emit, sleep, fail) belong to different tasks. Every
/// dispatch executes at least one instruction, so this equals the number of
/// adjacent dispatch pairs naming different tasks. Idle gaps do not reset
/// the comparison.
pub fn compute_metrics(trace: &Trace) -> Result<RunMetrics, MetricsError> {
    let mut terminal: BTreeMap<String, Tick> = BTreeMap::new();
    let mut compute_ticks = 0;
    let mut switches = 0;
    let mut last: Option<&str> = None;

    for ev in &trace.events {
        if matches!(ev.action, Action::Compute | Action::Emit(_)) {
            compute_ticks += 1;
        }
        let Some(task) = ev.task.as_deref() else {
            continue;
        };
        if ev.action.is_execution() {
            if last.is_some_and(|prev| prev != task) {
                switches += 1;
            }
            last = Some(task);
        }
        if ev.action.is_terminal() {
            terminal.insert(task.to_string(), ev.tick);
        }
    }

    if let Some(missing) = trace.tasks.iter().find(|t| !terminal.contains_key(*t)) {
        return Err(MetricsError::Incomplete(missing.clone()));
    }
    let makespan = terminal.values().copied().max().unwrap_or(0);
    Ok(RunMetrics::from_parts(
        makespan,
        compute_ticks,
        switches,
        terminal,
    ))
}

/// Ratio of sequential to concurrent makespan, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Speedup {
    pub sequential: Tick,
    pub concurrent: Tick,
}

impl Speedup {
    pub fn as_f64(self) -> f64 {
        self.sequential as f64 / self.concurrent as f64
    }

    /// Value in hundredths, rounded half up.
    pub fn hundredths(self) -> u128 {
        let (n, d) = (u128::from(self.sequential), u128::from(self.concurrent));
        (n * 200 + d) / (2 * d)
    }
}

impl fmt::Display for Speedup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hundredths();
        write!(f, "{}.{:02}", h / 100, h % 100)
    }
}

pub fn speedup(seq: &RunMetrics, conc: &RunMetrics) -> Result<Speedup, MetricsError> {
    if conc.makespan == 0 {
        return Err(MetricsError::ZeroMakespan);
    }
    Ok(Speedup {
        sequential: seq.makespan,
        concurrent: conc.makespan,
    })
}
