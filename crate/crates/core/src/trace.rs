//! Schedule events, traces, and run results.

use std::fmt;
use std::time::Duration;

use crate::interp::{EmitRecord, Fault, Tick};
use crate::sched::SchedulerConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Compute,
    Emit(EmitRecord),
    Sleep {
        until: Tick,
    },
    Wake,
    Finish,
    Fail {
        pc: usize,
        fault: Fault,
    },
    /// Processor has nothing ready until `until`.
    Idle {
        until: Tick,
    },
}

impl Action {
    /// True for actions that execute an instruction on the processor.
    pub fn is_execution(&self) -> bool {
        matches!(
            self,
            Action::Compute | Action::Emit(_) | Action::Sleep { .. } | Action::Fail { .. }
        )
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Action::Finish | Action::Fail { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Compute => f.write_str("compute"),
            Action::Emit(rec) => write!(f, "emit var={} value={}", rec.var, rec.value),
            Action::Sleep { until } => write!(f, "sleep until={until}"),
            Action::Wake => f.write_str("wake"),
            Action::Finish => f.write_str("finish"),
            Action::Fail { pc, fault } => write!(f, "fail pc={pc} reason=\"{fault}\""),
            Action::Idle { until } => write!(f, "idle until={until}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEvent {
    pub tick: Tick,
    /// `None` only for idle events.
    pub task: Option<String>,
    pub action: Action,
}

impl ScheduleEvent {
    pub fn task(tick: Tick, task: &str, action: Action) -> Self {
        Self {
            tick,
            task: Some(task.to_string()),
            action,
        }
    }

    pub fn idle(tick: Tick, until: Tick) -> Self {
        Self {
            tick,
            task: None,
            action: Action::Idle { until },
        }
    }
}

impl fmt::Display for ScheduleEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tick={} task={} action={}",
            self.tick,
            self.task.as_deref().unwrap_or("-"),
            self.action
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunMode {
    Sequential,
    Concurrent,
    Parallel,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Sequential => "sequential",
            RunMode::Concurrent => "concurrent",
            RunMode::Parallel => "parallel",
        })
    }
}

/// Complete record of a simulated run. Every metric is derivable from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<ScheduleEvent>,
    pub mode: RunMode,
    /// Scheduler configuration for concurrent runs.
    pub config: Option<SchedulerConfig>,
    /// Hex digest of the canonical workload text.
    pub workload_digest: String,
    /// Task names in rank order.
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TaskStatus {
    Finished,
    Failed { pc: usize, fault: Fault },
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskStatus::Finished => f.write_str("finished"),
            TaskStatus::Failed { pc, fault } => write!(f, "failed at pc={pc}: {fault}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskOutcome {
    pub task: String,
    pub rank: usize,
    pub status: TaskStatus,
    /// Simulated tick of the terminal event; absent for parallel runs.
    pub at: Option<Tick>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub mode: RunMode,
    /// In trace order for simulated runs, arrival order for parallel runs.
    pub emits: Vec<EmitRecord>,
    /// One entry per task, in rank order.
    pub outcomes: Vec<TaskOutcome>,
    pub trace: Option<Trace>,
    /// Informational only; set for parallel runs.
    pub wall_time: Option<Duration>,
}

impl RunResult {
    pub fn failed(&self) -> impl Iterator<Item = &TaskOutcome> {
        self.outcomes
            .iter()
            .filter(|o| matches!(o.status, TaskStatus::Failed { .. }))
    }

    pub fn all_finished(&self) -> bool {
        self.failed().next().is_none()
    }

    pub fn status_of(&self, task: &str) -> Option<&TaskStatus> {
        self.outcomes
            .iter()
            .find(|o| o.task == task)
            .map(|o| &o.status)
    }
}
