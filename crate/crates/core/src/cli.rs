//! Command-line driver and output rendering.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::num::NonZeroU64;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::interp::EmitRecord;
use crate::metrics::{compute_metrics, RunMetrics};
use crate::parallel::{run_parallel, ParallelConfig};
use crate::sched::{run_concurrent, run_sequential, Policy, SchedulerConfig};
use crate::text::parse_workload;
use crate::trace::{RunResult, TaskStatus, Trace};
use crate::workload::{classify, validate_workload, Workload};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TASK_FAILED: i32 = 3;

/// `the <var> is <value> produced by <task> thread`, newline-terminated.
pub fn format_emit_line(e: &EmitRecord) -> String {
    format!(
        "the {} is {} produced by {} thread\n",
        e.var, e.value, e.task_name
    )
}

/// One line per event.
pub fn render_trace(t: &Trace) -> String {
    t.events.iter().fold(String::new(), |mut out, ev| {
        writeln!(out, "{ev}").unwrap();
        out
    })
}

pub fn render_metrics(m: &RunMetrics) -> String {
    format!(
        "makespan={}\ncompute_ticks={}\nidle_ticks={}\ncontext_switches={}\nutilization={:.4}\n",
        m.makespan, m.compute_ticks, m.idle_ticks, m.context_switches, m.utilization
    )
}

#[derive(Debug, Parser)]
#[command(
    name = "flynnsim",
    version,
    about = "Run program/data taxonomy workloads on a simulated single processor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a workload and print its emit lines.
    Run(RunArgs),
    /// Print the workload's quadrant (SPSD, MPSD, SPMD or MPMD).
    Classify { file: PathBuf },
    /// Parse and validate a workload.
    Check { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Round-robin interleaving on one simulated processor.
    Sim,
    /// Tasks one after another; sleeps hold the processor.
    Seq,
    /// One OS thread per task.
    Threads,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Sim)]
    mode: Mode,
    /// Compute ticks per dispatch, or `inf` to run each task until it sleeps.
    #[arg(long, default_value = "1", value_parser = parse_quantum)]
    quantum: NonZeroU64,
    /// Print the schedule trace after the emit lines.
    #[arg(long)]
    trace: bool,
    /// Print run metrics after the emit lines (and trace).
    #[arg(long)]
    metrics: bool,
    /// Milliseconds per sleep tick in threads mode.
    #[arg(long, default_value_t = 1)]
    tick_ms: u64,
}

fn parse_quantum(s: &str) -> Result<NonZeroU64, String> {
    if s == "inf" {
        return Ok(SchedulerConfig::UNBOUNDED);
    }
    s.parse::<NonZeroU64>()
        .map_err(|_| format!("expected a positive integer or `inf`, got `{s}`"))
}

/// Parses and validates a workload file; diagnostics go to `err`.
fn load(path: &Path, err: &mut dyn Write) -> Option<Workload> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    let workload = match parse_workload(&text) {
        Ok(w) => w,
        Err(errors) => {
            for e in errors {
                let _ = writeln!(err, "{}:{}: {}", path.display(), e.line, e.kind);
            }
            return None;
        }
    };
    let errors = validate_workload(&workload);
    if !errors.is_empty() {
        for e in errors {
            let _ = writeln!(err, "{}: {e}", path.display());
        }
        return None;
    }
    Some(workload)
}

/// Runs the selected mode and writes its output. Returns the exit code.
fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<i32> {
    let Some(workload) = load(&args.file, err) else {
        return Ok(EXIT_INPUT);
    };
    let result: RunResult = match args.mode {
        Mode::Sim => {
            let config = SchedulerConfig {
                quantum: args.quantum,
                policy: Policy::RoundRobin,
            };
            run_concurrent(&workload, config).expect("validated workload")
        }
        Mode::Seq => run_sequential(&workload).expect("validated workload"),
        Mode::Threads => {
            let config = ParallelConfig {
                tick: Duration::from_millis(args.tick_ms),
            };
            match run_parallel(&workload, config) {
                Ok(r) => r,
                Err(e) => {
                    writeln!(err, "error: {e}")?;
                    return Ok(EXIT_INPUT);
                }
            }
        }
    };

    for e in &result.emits {
        out.write_all(format_emit_line(e).as_bytes())?;
    }
    match (&result.trace, args.trace || args.metrics) {
        (Some(trace), _) => {
            if args.trace {
                out.write_all(render_trace(trace).as_bytes())?;
            }
            if args.metrics {
                let m = compute_metrics(trace).expect("completed run");
                out.write_all(render_metrics(&m).as_bytes())?;
            }
        }
        (None, true) => writeln!(err, "note: threads mode records no trace or metrics")?,
        (None, false) => {}
    }

    for o in result.failed() {
        if let TaskStatus::Failed { pc, fault } = &o.status {
            writeln!(err, "task {} failed at pc={pc}: {fault}", o.task)?;
        }
    }
    Ok(if result.all_finished() {
        EXIT_OK
    } else {
        EXIT_TASK_FAILED
    })
}

/// Entry point shared by the binary and tests. `args` includes the program
/// name.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let status = match &cli.command {
        Command::Run(args) => cmd_run(args, out, err),
        Command::Classify { file } => match load(file, err) {
            Some(w) => {
                let model = classify(&w).expect("validated workload");
                writeln!(out, "{model}").map(|_| EXIT_OK)
            }
            None => Ok(EXIT_INPUT),
        },
        Command::Check { file } => match load(file, err) {
            Some(_) => writeln!(out, "ok").map(|_| EXIT_OK),
            None => Ok(EXIT_INPUT),
        },
    };
    status.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INPUT
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::SchedulerConfig;
    use crate::trace::RunMode;

    fn rec(task: &str, var: &str, value: i64) -> EmitRecord {
        EmitRecord {
            task_name: task.into(),
            var: var.into(),
            value,
            tick: 0,
        }
    }

    #[test]
    fn emit_lines() {
        assert_eq!(
            format_emit_line(&rec("task1", "sum", 2)),
            "the sum is 2 produced by task1 thread\n"
        );
        assert_eq!(
            format_emit_line(&rec("task3", "sum", 20)),
            "the sum is 20 produced by task3 thread\n"
        );
        assert_eq!(
            format_emit_line(&rec("t", "x", 0)),
            "the x is 0 produced by t thread\n"
        );
        assert_eq!(
            format_emit_line(&rec("t", "x", -17)),
            "the x is -17 produced by t thread\n"
        );
    }

    #[test]
    fn program1_trace_lines() {
        let w = parse_workload(include_str!("../examples/program1.fw")).unwrap();
        let r = run_concurrent(&w, SchedulerConfig::default()).unwrap();
        let text = render_trace(r.trace.as_ref().unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tick=0 task=task1 action=compute");
        assert!(lines.contains(&"tick=8 task=- action=idle until=208"));
        assert!(text.ends_with("tick=208 task=task4 action=finish\n"));
    }

    #[test]
    fn empty_trace_renders_nothing() {
        let t = Trace {
            events: vec![],
            mode: RunMode::Concurrent,
            config: None,
            workload_digest: String::new(),
            tasks: vec![],
        };
        assert_eq!(render_trace(&t), "");
    }

    #[test]
    fn metrics_lines() {
        let w = parse_workload(include_str!("../examples/program1.fw")).unwrap();
        let conc = run_concurrent(&w, SchedulerConfig::default()).unwrap();
        let text = render_metrics(&compute_metrics(conc.trace.as_ref().unwrap()).unwrap());
        assert_eq!(
            text,
            "makespan=208\ncompute_ticks=8\nidle_ticks=200\ncontext_switches=11\nutilization=0.0385\n"
        );
        let seq = run_sequential(&w).unwrap();
        let text = render_metrics(&compute_metrics(seq.trace.as_ref().unwrap()).unwrap());
        assert!(text.contains("makespan=808\n"));

        let busy = RunMetrics {
            makespan: 3,
            compute_ticks: 3,
            idle_ticks: 0,
            context_switches: 0,
            per_task_turnaround: Default::default(),
            utilization: 1.0,
        };
        assert!(render_metrics(&busy).contains("utilization=1.0000\n"));
    }

    #[test]
    fn quantum_values() {
        assert_eq!(parse_quantum("3").unwrap().get(), 3);
        assert_eq!(parse_quantum("inf").unwrap(), SchedulerConfig::UNBOUNDED);
        assert!(parse_quantum("0").is_err());
        assert!(parse_quantum("-1").is_err());
    }

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(
            std::iter::once("flynnsim").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&[]).0, EXIT_USAGE);
        assert_eq!(run(&["run"]).0, EXIT_USAGE);
        assert_eq!(run(&["run", "x.fw", "--mode", "warp"]).0, EXIT_USAGE);
        assert_eq!(run(&["run", "x.fw", "--quantum", "0"]).0, EXIT_USAGE);
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("classify"));
    }

    #[test]
    fn missing_file_exits_1() {
        let (code, out, err) = run(&["run", "definitely-missing.fw"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(out.is_empty());
        assert!(err.contains("definitely-missing.fw"));
    }
}
