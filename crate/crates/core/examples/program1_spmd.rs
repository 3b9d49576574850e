//! One program, four tasks, four datasets, interleaved on one simulated
//! processor.
//!
//! ```bash
//! cargo run -p flynnsim --example program1_spmd
//! ```

use flynnsim::{
    classify, format_emit_line, run_concurrent, DataBinding, Instruction, Opcode, Operand,
    ProgramDef, SchedulerConfig, TaskSpec, Workload,
};

fn main() {
    let main = ProgramDef::new(
        "main",
        vec![
            Instruction::compute("sum", Opcode::Add, Operand::var("a"), Operand::var("b")),
            Instruction::emit("sum"),
            Instruction::sleep(200),
        ],
    );
    let tasks = [(1, 1), (5, 5), (10, 10), (1, 5)]
        .into_iter()
        .enumerate()
        .map(|(rank, (a, b))| {
            let data = DataBinding::from([("a", a), ("b", b)]);
            TaskSpec::new(format!("task{}", rank + 1), rank, "main", Some(data))
        })
        .collect();
    let workload = Workload {
        programs: vec![main],
        shared: None,
        tasks,
    };

    println!("model: {}", classify(&workload).expect("valid workload"));
    let result = run_concurrent(&workload, SchedulerConfig::default()).expect("valid workload");
    for emit in &result.emits {
        print!("{}", format_emit_line(emit));
    }
}
