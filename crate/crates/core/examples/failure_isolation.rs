//! A task that divides by zero fails alone; the rest still run.
//!
//! ```bash
//! cargo run -p flynnsim --example failure_isolation
//! ```

use flynnsim::{format_emit_line, parse_workload, run_concurrent, run_sequential, SchedulerConfig};

fn main() {
    let w = parse_workload(include_str!("divzero.fw")).unwrap();
    for result in [
        run_sequential(&w).unwrap(),
        run_concurrent(&w, SchedulerConfig::default()).unwrap(),
    ] {
        println!("{}:", result.mode);
        for e in &result.emits {
            print!("  {}", format_emit_line(e));
        }
        for o in &result.outcomes {
            println!("  {} {} at tick {}", o.task, o.status, o.at.unwrap());
        }
    }
}
