//! Deterministic single-processor scheduling.
//!
//! [`SchedState`] interleaves tasks round-robin on one simulated processor.
//! A dispatched task runs until it has used `quantum` compute ticks, sleeps,
//! finishes, or fails. Sleeping tasks leave the processor; when nothing is
//! ready, time jumps to the earliest wake tick. A task whose last instruction
//! is a sleep finishes at its wake tick without being dispatched again.
//!
//! Tasks that wake at the same tick rejoin the back of the ready queue in
//! rank order, ahead of a task whose quantum expired on that tick.
//!
//! [`run_sequential`] is the baseline: each task runs start to finish in rank
//! order, and its sleeps hold the processor.

use std::collections::VecDeque;
use std::num::NonZeroU64;

use thiserror::Error;

use crate::interp::{EmitRecord, Fault, StepContext, StepOutcome, TaskCursor, Tick};
use crate::metrics::RunMetrics;
use crate::text::workload_digest;
use crate::trace::{Action, RunMode, RunResult, ScheduleEvent, TaskOutcome, TaskStatus, Trace};
use crate::workload::{bind_env, validate_workload, TaskSpec, ValidationError, Workload};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Policy {
    #[default]
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchedulerConfig {
    /// Compute ticks a task may use per dispatch.
    pub quantum: NonZeroU64,
    pub policy: Policy,
}

impl SchedulerConfig {
    /// A quantum large enough that tasks only yield by sleeping.
    pub const UNBOUNDED: NonZeroU64 = NonZeroU64::MAX;

    /// `None` if `quantum` is zero.
    pub fn with_quantum(quantum: u64) -> Option<Self> {
        NonZeroU64::new(quantum).map(|quantum| Self {
            quantum,
            policy: Policy::RoundRobin,
        })
    }

    pub fn run_to_sleep() -> Self {
        Self {
            quantum: Self::UNBOUNDED,
            policy: Policy::RoundRobin,
        }
    }
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            quantum: NonZeroU64::MIN,
            policy: Policy::RoundRobin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedError {
    #[error("invalid workload: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidWorkload(Vec<ValidationError>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskStatusKind {
    Ready,
    Running,
    Sleeping { wake: Tick },
    Finished { at: Tick },
    Failed { at: Tick, pc: usize, fault: Fault },
}

impl TaskStatusKind {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Self::Finished { .. } | Self::Failed { .. })
    }
}

/// Runtime state of one task: its spec, position, environment, and status.
#[derive(Debug, Clone)]
pub struct TaskState<'w> {
    pub spec: &'w TaskSpec,
    cursor: TaskCursor<'w>,
    status: TaskStatusKind,
}

impl<'w> TaskState<'w> {
    pub fn status(&self) -> &TaskStatusKind {
        &self.status
    }

    pub fn pc(&self) -> usize {
        self.cursor.pc()
    }

    pub fn env(&self) -> &crate::interp::Env {
        self.cursor.env()
    }

    fn outcome(&self) -> TaskOutcome {
        let (status, at) = match &self.status {
            TaskStatusKind::Finished { at } => (TaskStatus::Finished, *at),
            TaskStatusKind::Failed { at, pc, fault } => (
                TaskStatus::Failed {
                    pc: *pc,
                    fault: fault.clone(),
                },
                *at,
            ),
            other => unreachable!("outcome of non-terminal task: {other:?}"),
        };
        TaskOutcome {
            task: self.spec.name.clone(),
            rank: self.spec.rank,
            status,
            at: Some(at),
        }
    }
}

/// Counters kept while stepping, for comparison with trace replay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Online {
    compute_ticks: Tick,
    idle_ticks: Tick,
    context_switches: u64,
    last_executed: Option<usize>,
}

/// A simulated run in progress.
#[derive(Debug, Clone)]
pub struct SchedState<'w> {
    config: SchedulerConfig,
    tasks: Vec<TaskState<'w>>,
    ready: VecDeque<usize>,
    /// Dispatched task and compute ticks used in the current turn.
    current: Option<(usize, u64)>,
    now: Tick,
    pending: VecDeque<ScheduleEvent>,
    trace: Vec<ScheduleEvent>,
    emits: Vec<EmitRecord>,
    online: Online,
    digest: String,
}

fn checked_tasks(w: &Workload) -> Result<Vec<TaskState<'_>>, SchedError> {
    let errors = validate_workload(w);
    if !errors.is_empty() {
        return Err(SchedError::InvalidWorkload(errors));
    }
    Ok(w.tasks_by_rank()
        .into_iter()
        .map(|spec| {
            let program = w.program(&spec.program).expect("validated program");
            let env = bind_env(spec, w.shared.as_ref()).expect("validated data source");
            TaskState {
                spec,
                cursor: TaskCursor::new(program, env),
                status: TaskStatusKind::Ready,
            }
        })
        .collect())
}

/// All tasks ready at tick 0, queued by rank.
pub fn init_run(w: &Workload, config: SchedulerConfig) -> Result<SchedState<'_>, SchedError> {
    let tasks = checked_tasks(w)?;
    Ok(SchedState {
        config,
        ready: (0..tasks.len()).collect(),
        tasks,
        current: None,
        now: 0,
        pending: VecDeque::new(),
        trace: Vec::new(),
        emits: Vec::new(),
        online: Online::default(),
        digest: workload_digest(w),
    })
}

impl<'w> SchedState<'w> {
    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn tasks(&self) -> &[TaskState<'w>] {
        &self.tasks
    }

    /// Names of ready tasks in queue order.
    pub fn ready_queue(&self) -> Vec<&str> {
        self.ready
            .iter()
            .map(|&i| self.tasks[i].spec.name.as_str())
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.pending.is_empty() && self.tasks.iter().all(|t| t.status.is_terminal())
    }

    pub fn events(&self) -> &[ScheduleEvent] {
        &self.trace
    }

    /// Advances the simulation by one event. Returns `None` once every task
    /// is terminal and all events have been delivered.
    pub fn step(&mut self) -> Option<ScheduleEvent> {
        if self.pending.is_empty() {
            self.advance();
        }
        let event = self.pending.pop_front()?;
        self.trace.push(event.clone());
        Some(event)
    }

    fn advance(&mut self) {
        if self.current.is_none() {
            match self.ready.pop_front() {
                Some(i) => {
                    self.tasks[i].status = TaskStatusKind::Running;
                    self.current = Some((i, 0));
                }
                None => {
                    let Some(wake) = self.earliest_wake() else {
                        return;
                    };
                    self.pending.push_back(ScheduleEvent::idle(self.now, wake));
                    self.online.idle_ticks += wake - self.now;
                    self.now = wake;
                    self.process_wakes();
                    return;
                }
            }
        }
        let (i, used) = self.current.expect("dispatched task");
        self.execute(i, used);
    }

    fn execute(&mut self, i: usize, used: u64) {
        let start = self.now;
        let name = self.tasks[i].spec.name.clone();
        let pc = self.tasks[i].cursor.pc();
        let outcome = self.tasks[i].cursor.step(StepContext {
            task: &name,
            tick: start,
        });

        if self.online.last_executed.is_some_and(|last| last != i) {
            self.online.context_switches += 1;
        }
        self.online.last_executed = Some(i);
        self.online.compute_ticks += outcome.cost();
        self.now += outcome.cost();
        let used = used + outcome.cost();

        let turn_over = match outcome {
            StepOutcome::Advanced => {
                self.pending
                    .push_back(ScheduleEvent::task(start, &name, Action::Compute));
                false
            }
            StepOutcome::Emitted(rec) => {
                self.emits.push(rec.clone());
                self.pending
                    .push_back(ScheduleEvent::task(start, &name, Action::Emit(rec)));
                false
            }
            StepOutcome::Slept(n) => {
                let wake = start.saturating_add(n);
                self.pending.push_back(ScheduleEvent::task(
                    start,
                    &name,
                    Action::Sleep { until: wake },
                ));
                self.tasks[i].status = TaskStatusKind::Sleeping { wake };
                true
            }
            StepOutcome::Failed(fault) => {
                self.pending.push_back(ScheduleEvent::task(
                    start,
                    &name,
                    Action::Fail {
                        pc,
                        fault: fault.clone(),
                    },
                ));
                self.tasks[i].status = TaskStatusKind::Failed {
                    at: start,
                    pc,
                    fault,
                };
                true
            }
            StepOutcome::Finished => unreachable!("finished tasks are never dispatched"),
        };

        let finished = !turn_over && self.tasks[i].cursor.is_done();
        if finished {
            self.pending
                .push_back(ScheduleEvent::task(self.now, &name, Action::Finish));
            self.tasks[i].status = TaskStatusKind::Finished { at: self.now };
        }
        self.process_wakes();

        if turn_over || finished {
            self.current = None;
        } else if used >= self.config.quantum.get() {
            self.tasks[i].status = TaskStatusKind::Ready;
            self.ready.push_back(i);
            self.current = None;
        } else {
            self.current = Some((i, used));
        }
    }

    fn earliest_wake(&self) -> Option<Tick> {
        self.tasks
            .iter()
            .filter_map(|t| match t.status {
                TaskStatusKind::Sleeping { wake } => Some(wake),
                _ => None,
            })
            .min()
    }

    /// Moves every task whose wake tick has arrived back to the ready queue
    /// (or to finished, if it has nothing left to run), in rank order.
    fn process_wakes(&mut self) {
        let now = self.now;
        for idx in 0..self.tasks.len() {
            let task = &mut self.tasks[idx];
            let TaskStatusKind::Sleeping { wake } = task.status else {
                continue;
            };
            if wake > now {
                continue;
            }
            debug_assert_eq!(wake, now, "wake tick skipped");
            let name = task.spec.name.as_str();
            if task.cursor.is_done() {
                task.status = TaskStatusKind::Finished { at: now };
                self.pending
                    .push_back(ScheduleEvent::task(now, name, Action::Finish));
            } else {
                task.status = TaskStatusKind::Ready;
                self.pending
                    .push_back(ScheduleEvent::task(now, name, Action::Wake));
                self.ready.push_back(idx);
            }
        }
    }

    /// Metrics accumulated while stepping. Only meaningful once complete.
    pub fn online_metrics(&self) -> RunMetrics {
        let per_task_turnaround = self
            .tasks
            .iter()
            .filter_map(|t| match t.status {
                TaskStatusKind::Finished { at } | TaskStatusKind::Failed { at, .. } => {
                    Some((t.spec.name.clone(), at))
                }
                _ => None,
            })
            .collect();
        debug_assert_eq!(self.online.idle_ticks, self.now - self.online.compute_ticks);
        RunMetrics::from_parts(
            self.now,
            self.online.compute_ticks,
            self.online.context_switches,
            per_task_turnaround,
        )
    }

    /// Consumes a completed run. Panics if tasks are still live.
    pub fn into_result(self) -> RunResult {
        assert!(self.is_complete(), "run is not complete");
        let trace = Trace {
            events: self.trace,
            mode: RunMode::Concurrent,
            config: Some(self.config),
            workload_digest: self.digest,
            tasks: self.tasks.iter().map(|t| t.spec.name.clone()).collect(),
        };
        RunResult {
            mode: RunMode::Concurrent,
            emits: self.emits,
            outcomes: self.tasks.iter().map(TaskState::outcome).collect(),
            trace: Some(trace),
            wall_time: None,
        }
    }
}

/// Drives a round-robin run to completion.
pub fn run_concurrent(w: &Workload, config: SchedulerConfig) -> Result<RunResult, SchedError> {
    let mut state = init_run(w, config)?;
    while state.step().is_some() {}
    Ok(state.into_result())
}

/// Runs tasks one after another in rank order. A sleeping task keeps the
/// processor, so every sleep adds its full length to the makespan.
pub fn run_sequential(w: &Workload) -> Result<RunResult, SchedError> {
    let mut tasks = checked_tasks(w)?;
    let mut now: Tick = 0;
    let mut events = Vec::new();
    let mut emits = Vec::new();

    for task in &mut tasks {
        let name = task.spec.name.clone();
        task.status = loop {
            let pc = task.cursor.pc();
            let start = now;
            let outcome = task.cursor.step(StepContext {
                task: &name,
                tick: start,
            });
            now += outcome.cost();
            match outcome {
                StepOutcome::Advanced => {
                    events.push(ScheduleEvent::task(start, &name, Action::Compute));
                }
                StepOutcome::Emitted(rec) => {
                    emits.push(rec.clone());
                    events.push(ScheduleEvent::task(start, &name, Action::Emit(rec)));
                }
                StepOutcome::Slept(n) => {
                    let wake = start.saturating_add(n);
                    events.push(ScheduleEvent::task(
                        start,
                        &name,
                        Action::Sleep { until: wake },
                    ));
                    if n > 0 {
                        events.push(ScheduleEvent::idle(start, wake));
                    }
                    now = wake;
                    if !task.cursor.is_done() {
                        events.push(ScheduleEvent::task(now, &name, Action::Wake));
                    }
                }
                StepOutcome::Finished => {
                    events.push(ScheduleEvent::task(now, &name, Action::Finish));
                    break TaskStatusKind::Finished { at: now };
                }
                StepOutcome::Failed(fault) => {
                    events.push(ScheduleEvent::task(
                        start,
                        &name,
                        Action::Fail {
                            pc,
                            fault: fault.clone(),
                        },
                    ));
                    break TaskStatusKind::Failed {
                        at: start,
                        pc,
                        fault,
                    };
                }
            }
        };
    }

    let trace = Trace {
        events,
        mode: RunMode::Sequential,
        config: None,
        workload_digest: workload_digest(w),
        tasks: tasks.iter().map(|t| t.spec.name.clone()).collect(),
    };
    Ok(RunResult {
        mode: RunMode::Sequential,
        emits,
        outcomes: tasks.iter().map(TaskState::outcome).collect(),
        trace: Some(trace),
        wall_time: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::run_to_completion;
    use crate::text::parse_workload;

    const PROGRAM1: &str = include_str!("../examples/program1.fw");

    fn program1() -> Workload {
        parse_workload(PROGRAM1).unwrap()
    }

    fn q(n: u64) -> SchedulerConfig {
        SchedulerConfig::with_quantum(n).unwrap()
    }

    fn emit_pairs(r: &RunResult) -> Vec<(String, i64)> {
        r.emits
            .iter()
            .map(|e| (e.task_name.clone(), e.value))
            .collect()
    }

    fn expected_program1() -> Vec<(String, i64)> {
        [("task1", 2), ("task2", 10), ("task3", 20), ("task4", 6)]
            .iter()
            .map(|&(t, v)| (t.to_string(), v))
            .collect()
    }

    #[test]
    fn init_queues_by_rank() {
        let w = program1();
        let s = init_run(&w, q(1)).unwrap();
        assert_eq!(s.ready_queue(), ["task1", "task2", "task3", "task4"]);
        assert!(s
            .tasks()
            .iter()
            .all(|t| t.pc() == 0 && *t.status() == TaskStatusKind::Ready));
        assert_eq!(s.now(), 0);
    }

    #[test]
    fn init_rejects_zero_tasks() {
        let mut w = program1();
        w.tasks.clear();
        assert!(matches!(
            init_run(&w, q(1)),
            Err(SchedError::InvalidWorkload(_))
        ));
    }

    #[test]
    fn init_orders_by_rank_not_list_position() {
        let mut w = program1();
        w.tasks.reverse();
        let s = init_run(&w, q(1)).unwrap();
        assert_eq!(s.ready_queue(), ["task1", "task2", "task3", "task4"]);
    }

    #[test]
    fn first_step_computes_task1() {
        let w = program1();
        let mut s = init_run(&w, q(1)).unwrap();
        let ev = s.step().unwrap();
        assert_eq!(ev, ScheduleEvent::task(0, "task1", Action::Compute));
        assert_eq!(s.tasks()[0].env().get("sum"), Some(2));
    }

    #[test]
    fn idle_jump_when_all_sleep() {
        let w = program1();
        let mut s = init_run(&w, q(1)).unwrap();
        // 4 computes, 4 emits, 4 sleeps
        for _ in 0..12 {
            s.step().unwrap();
        }
        assert!(s
            .tasks()
            .iter()
            .all(|t| *t.status() == TaskStatusKind::Sleeping { wake: 208 }));
        assert_eq!(s.step().unwrap(), ScheduleEvent::idle(8, 208));
        assert_eq!(s.now(), 208);
    }

    #[test]
    fn step_after_completion_is_none() {
        let w = parse_workload("program p\nemit a\nend\ntask t p a=0\n").unwrap();
        let mut s = init_run(&w, q(1)).unwrap();
        while s.step().is_some() {}
        assert!(s.is_complete());
        assert_eq!(s.step(), None);
    }

    #[test]
    fn program1_quantum_1() {
        let r = run_concurrent(&program1(), q(1)).unwrap();
        assert_eq!(emit_pairs(&r), expected_program1());
        let ticks: Vec<Tick> = r.emits.iter().map(|e| e.tick).collect();
        assert_eq!(ticks, [4, 5, 6, 7]);
        assert!(r.outcomes.iter().all(|o| o.at == Some(208)));
        assert!(r.all_finished());
    }

    #[test]
    fn program1_run_to_sleep() {
        for config in [q(10), SchedulerConfig::run_to_sleep()] {
            let r = run_concurrent(&program1(), config).unwrap();
            assert_eq!(emit_pairs(&r), expected_program1());
            let ends: Vec<_> = r.outcomes.iter().map(|o| o.at.unwrap()).collect();
            // task k emits at 2k+1 and sleeps at 2k+2
            assert_eq!(ends, [202, 204, 206, 208]);
        }
    }

    #[test]
    fn single_emit_task() {
        let w = parse_workload("program p\nemit a\nend\ntask t p a=0\n").unwrap();
        let r = run_concurrent(&w, q(1)).unwrap();
        assert_eq!(emit_pairs(&r), [("t".to_string(), 0)]);
        assert_eq!(r.outcomes[0].at, Some(1));
    }

    #[test]
    fn sequential_program1() {
        let w = program1();
        let r = run_sequential(&w).unwrap();
        assert_eq!(emit_pairs(&r), expected_program1());
        let ends: Vec<_> = r.outcomes.iter().map(|o| o.at.unwrap()).collect();
        assert_eq!(ends, [202, 404, 606, 808]);

        // per-task emits are run_to_completion's, shifted by the task's start
        let mut start = 0;
        for (spec, outcome) in w.tasks.iter().zip(&r.outcomes) {
            let env = bind_env(spec, None).unwrap();
            let done = run_to_completion(w.program("main").unwrap(), env, &spec.name).unwrap();
            let mine: Vec<_> = r
                .emits
                .iter()
                .filter(|e| e.task_name == spec.name)
                .cloned()
                .collect();
            let shifted: Vec<_> = done
                .emits
                .into_iter()
                .map(|mut e| {
                    e.tick += start;
                    e
                })
                .collect();
            assert_eq!(mine, shifted);
            start = outcome.at.unwrap();
        }
    }

    #[test]
    fn sequential_no_sleep() {
        let w = parse_workload("program p\nx = add a a\nemit x\nend\ntask t p a=2\n").unwrap();
        let r = run_sequential(&w).unwrap();
        assert_eq!(r.outcomes[0].at, Some(2));
    }

    const DIVZERO: &str = "\
program main
x = div a b
emit x
end
task task1 main a=4 b=2
task task2 main a=1 b=0
task task3 main a=9 b=3
task task4 main a=8 b=-4
";

    #[test]
    fn failure_is_isolated() {
        let w = parse_workload(DIVZERO).unwrap();
        for r in [
            run_sequential(&w).unwrap(),
            run_concurrent(&w, q(1)).unwrap(),
        ] {
            assert_eq!(
                r.status_of("task2"),
                Some(&TaskStatus::Failed {
                    pc: 0,
                    fault: Fault::DivideByZero
                })
            );
            let values: Vec<_> = emit_pairs(&r);
            assert_eq!(
                values,
                [
                    ("task1".to_string(), 2),
                    ("task3".to_string(), 3),
                    ("task4".to_string(), -2)
                ]
            );
            assert_eq!(r.failed().count(), 1);
        }
    }

    #[test]
    fn mid_body_sleep_rejoins_queue() {
        let text = "\
program p
x = add a 1
sleep 1
emit x
end
task t0 p a=0
task t1 p a=10
";
        let w = parse_workload(text).unwrap();
        let r = run_concurrent(&w, q(1)).unwrap();
        let lines: Vec<String> = r
            .trace
            .unwrap()
            .events
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(
            lines,
            [
                "tick=0 task=t0 action=compute",
                "tick=1 task=t1 action=compute",
                "tick=2 task=t0 action=sleep until=3",
                "tick=2 task=t1 action=sleep until=3",
                "tick=2 task=- action=idle until=3",
                "tick=3 task=t0 action=wake",
                "tick=3 task=t1 action=wake",
                "tick=3 task=t0 action=emit var=x value=1",
                "tick=4 task=t0 action=finish",
                "tick=4 task=t1 action=emit var=x value=11",
                "tick=5 task=t1 action=finish",
            ]
        );
    }

    #[test]
    fn sleep_zero_yields() {
        let text = "\
program p
emit a
sleep 0
emit a
end
task t0 p a=0
task t1 p a=1
";
        let w = parse_workload(text).unwrap();
        let r = run_concurrent(&w, SchedulerConfig::run_to_sleep()).unwrap();
        let order: Vec<_> = emit_pairs(&r).into_iter().map(|(t, _)| t).collect();
        assert_eq!(order, ["t0", "t1", "t0", "t1"]);
        assert!(r.outcomes.iter().all(|o| o.at.is_some()));
    }
}
