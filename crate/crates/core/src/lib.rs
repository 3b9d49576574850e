//! Deterministic single-processor runtime for program/data taxonomy
//! workloads.
//!
//! A [`Workload`] names one or more straight-line programs, the data they
//! read, and the tasks that run them. [`classify`] places it on the
//! SPSD/MPSD/SPMD/MPMD grid by counting distinct programs and datasets.
//! Three executors run it:
//!
//! - [`run_concurrent`]: round-robin context switching on one simulated
//!   processor. Sleeping tasks yield the processor to others.
//! - [`run_sequential`]: the same processor, one task after another, with
//!   sleeps holding the processor.
//! - [`run_parallel`]: one OS thread per task, as a cross-check.
//!
//! Simulated runs produce a [`Trace`] from which [`compute_metrics`] derives
//! makespan, idle time, context switches and utilization.
//!
//! ```
//! use flynnsim::{parse_workload, run_concurrent, SchedulerConfig, format_emit_line};
//!
//! let w = parse_workload("program main\nsum = add a b\nemit sum\nsleep 200\nend\ntask task1 main a=1 b=1\n").unwrap();
//! let r = run_concurrent(&w, SchedulerConfig::default()).unwrap();
//! assert_eq!(format_emit_line(&r.emits[0]), "the sum is 2 produced by task1 thread\n");
//! ```

pub mod cli;
pub mod interp;
pub mod metrics;
pub mod parallel;
pub mod sched;
pub mod text;
pub mod trace;
pub mod workload;

pub use cli::{format_emit_line, render_metrics, render_trace};
pub use interp::{
    exec_instruction, run_to_completion, Completion, EmitRecord, Env, Fault, StepOutcome, Tick,
};
pub use metrics::{compute_metrics, speedup, MetricsError, RunMetrics, Speedup};
pub use parallel::{reconcile, run_parallel, EquivalenceReport, ParallelConfig, ParallelError};
pub use sched::{
    init_run, run_concurrent, run_sequential, SchedError, SchedState, SchedulerConfig,
};
pub use text::{parse_workload, to_text, ParseError};
pub use trace::{Action, RunMode, RunResult, ScheduleEvent, TaskOutcome, TaskStatus, Trace};
pub use workload::{
    bind_env, classify, validate_workload, DataBinding, ExecutionModel, Instruction, Opcode,
    Operand, ProgramDef, TaskSpec, ValidationError, Workload,
};
