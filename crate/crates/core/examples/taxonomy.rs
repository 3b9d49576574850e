//! Classifies the bundled fixtures onto the program/data grid.
//!
//! ```bash
//! cargo run -p flynnsim --example taxonomy
//! ```

use flynnsim::{classify, parse_workload};

const FIXTURES: [(&str, &str); 4] = [
    ("spsd.fw", include_str!("spsd.fw")),
    ("mpsd.fw", include_str!("mpsd.fw")),
    ("program1.fw", include_str!("program1.fw")),
    ("mpmd.fw", include_str!("mpmd.fw")),
];

fn main() {
    for (name, text) in FIXTURES {
        let w = parse_workload(text).expect("bundled fixture parses");
        let programs: std::collections::BTreeSet<_> = w.tasks.iter().map(|t| &t.program).collect();
        println!(
            "{name:<12} {} ({} program(s), {} task(s))",
            classify(&w).expect("bundled fixture is valid"),
            programs.len(),
            w.tasks.len()
        );
    }
}
