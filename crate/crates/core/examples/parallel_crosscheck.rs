//! Runs every task on its own thread and reconciles the result with the
//! simulator. Emit order may differ between runs; values never do.
//!
//! ```bash
//! cargo run -p flynnsim --example parallel_crosscheck
//! ```

use std::time::Duration;

use flynnsim::{
    format_emit_line, parse_workload, reconcile, run_concurrent, run_parallel, ParallelConfig,
    SchedulerConfig,
};

fn main() {
    let w = parse_workload(include_str!("program1.fw")).unwrap();
    let sim = run_concurrent(&w, SchedulerConfig::default()).unwrap();
    let par = run_parallel(
        &w,
        ParallelConfig {
            tick: Duration::from_millis(1),
        },
    )
    .unwrap();

    println!("threads ({:.1?}):", par.wall_time.unwrap());
    for e in &par.emits {
        print!("  {}", format_emit_line(e));
    }
    let report = reconcile(&sim, &par);
    println!("equivalent to simulator: {}", report.equal);
}
