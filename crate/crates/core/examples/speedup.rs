//! Sequential baseline against round-robin interleaving, across quanta.
//!
//! ```bash
//! cargo run -p flynnsim --example speedup
//! ```

use flynnsim::{
    compute_metrics, parse_workload, render_metrics, run_concurrent, run_sequential, speedup,
    SchedulerConfig,
};

fn main() {
    let w = parse_workload(include_str!("program1.fw")).unwrap();
    let seq = compute_metrics(run_sequential(&w).unwrap().trace.as_ref().unwrap()).unwrap();
    println!("sequential:\n{}", render_metrics(&seq));

    for quantum in [1, 2, 3, u64::MAX] {
        let config = SchedulerConfig::with_quantum(quantum).unwrap();
        let conc =
            compute_metrics(run_concurrent(&w, config).unwrap().trace.as_ref().unwrap()).unwrap();
        let label = if quantum == u64::MAX {
            "inf".to_string()
        } else {
            quantum.to_string()
        };
        println!(
            "quantum={label:<4} makespan={:<4} switches={:<3} speedup={}",
            conc.makespan,
            conc.context_switches,
            speedup(&seq, &conc).unwrap()
        );
    }
}
