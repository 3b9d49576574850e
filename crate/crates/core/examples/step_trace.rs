//! Drives the scheduler one event at a time and checks that replaying the
//! trace gives the same metrics as the counters kept while stepping.
//!
//! ```bash
//! cargo run -p flynnsim --example step_trace
//! ```

use flynnsim::{compute_metrics, init_run, parse_workload, SchedulerConfig};

fn main() {
    let w = parse_workload(include_str!("mpmd.fw")).unwrap();
    let mut state = init_run(&w, SchedulerConfig::with_quantum(2).unwrap()).unwrap();
    println!("ready: {:?}", state.ready_queue());

    while let Some(event) = state.step() {
        println!("{event}");
    }

    let online = state.online_metrics();
    let result = state.into_result();
    let trace = result.trace.as_ref().unwrap();
    let replayed = compute_metrics(trace).unwrap();
    assert_eq!(online, replayed);
    println!(
        "digest {} replay ok: makespan={} idle={}",
        trace.workload_digest, replayed.makespan, replayed.idle_ticks
    );
}
