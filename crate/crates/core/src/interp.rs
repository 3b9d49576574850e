//! Straight-line interpreter for a single task.

use std::collections::BTreeMap;
use std::fmt;

use crate::workload::{DataBinding, Instruction, Opcode, Operand, ProgramDef};

/// Simulated time unit.
pub type Tick = u64;

/// Task-private variable environment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env(BTreeMap<String, i64>);

impl Env {
    pub fn from_binding(binding: &DataBinding) -> Self {
        Env(binding.0.clone())
    }

    pub fn get(&self, var: &str) -> Option<i64> {
        self.0.get(var).copied()
    }

    pub fn set(&mut self, var: &str, value: i64) {
        self.0.insert(var.to_string(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// A value published by an `emit` instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmitRecord {
    pub task_name: String,
    pub var: String,
    pub value: i64,
    pub tick: Tick,
}

impl EmitRecord {
    /// The order- and time-independent identity of the record.
    pub fn key(&self) -> (String, String, i64) {
        (self.task_name.clone(), self.var.clone(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Fault {
    DivideByZero,
    Overflow,
    UnboundVariable(String),
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::DivideByZero => f.write_str("divide by zero"),
            Fault::Overflow => f.write_str("overflow"),
            Fault::UnboundVariable(v) => write!(f, "unbound variable {v}"),
        }
    }
}

impl std::error::Error for Fault {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    /// A compute instruction updated the environment. Costs 1 tick.
    Advanced,
    /// Costs 1 tick.
    Emitted(EmitRecord),
    /// The task blocks for the given number of ticks. Costs 0 ticks.
    Slept(Tick),
    /// No instructions left.
    Finished,
    Failed(Fault),
}

impl StepOutcome {
    /// Processor ticks consumed by the step.
    pub fn cost(&self) -> Tick {
        match self {
            StepOutcome::Advanced | StepOutcome::Emitted(_) => 1,
            _ => 0,
        }
    }
}

/// Where an instruction executes: which task, and at what simulated time.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub task: &'a str,
    pub tick: Tick,
}

fn operand(env: &Env, op: &Operand) -> Result<i64, Fault> {
    match op {
        Operand::Lit(n) => Ok(*n),
        Operand::Var(v) => env.get(v).ok_or_else(|| Fault::UnboundVariable(v.clone())),
    }
}

/// Checked 64-bit arithmetic; division truncates toward zero.
pub fn apply(op: Opcode, lhs: i64, rhs: i64) -> Result<i64, Fault> {
    match op {
        Opcode::Add => lhs.checked_add(rhs).ok_or(Fault::Overflow),
        Opcode::Sub => lhs.checked_sub(rhs).ok_or(Fault::Overflow),
        Opcode::Mul => lhs.checked_mul(rhs).ok_or(Fault::Overflow),
        Opcode::Div if rhs == 0 => Err(Fault::DivideByZero),
        Opcode::Div => lhs.checked_div(rhs).ok_or(Fault::Overflow),
    }
}

/// Executes one instruction. On failure the environment is left untouched.
pub fn exec_instruction(instr: &Instruction, env: &mut Env, ctx: StepContext<'_>) -> StepOutcome {
    match instr {
        Instruction::Compute { dest, op, lhs, rhs } => {
            let result = operand(env, lhs)
                .and_then(|l| operand(env, rhs).map(|r| (l, r)))
                .and_then(|(l, r)| apply(*op, l, r));
            match result {
                Ok(v) => {
                    env.set(dest, v);
                    StepOutcome::Advanced
                }
                Err(fault) => StepOutcome::Failed(fault),
            }
        }
        Instruction::Emit { src } => match env.get(src) {
            Some(value) => StepOutcome::Emitted(EmitRecord {
                task_name: ctx.task.to_string(),
                var: src.clone(),
                value,
                tick: ctx.tick,
            }),
            None => StepOutcome::Failed(Fault::UnboundVariable(src.clone())),
        },
        Instruction::Sleep { ticks } => StepOutcome::Slept(*ticks),
    }
}

/// Execution position of one task inside its program.
#[derive(Debug, Clone)]
pub struct TaskCursor<'p> {
    program: &'p ProgramDef,
    env: Env,
    pc: usize,
}

impl<'p> TaskCursor<'p> {
    pub fn new(program: &'p ProgramDef, env: Env) -> Self {
        Self {
            program,
            env,
            pc: 0,
        }
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn is_done(&self) -> bool {
        self.pc >= self.program.body.len()
    }

    /// Runs the instruction at `pc`. The counter advances unless the step
    /// failed, so a failure reports the faulting instruction's index.
    pub fn step(&mut self, ctx: StepContext<'_>) -> StepOutcome {
        let Some(instr) = self.program.body.get(self.pc) else {
            return StepOutcome::Finished;
        };
        let outcome = exec_instruction(instr, &mut self.env, ctx);
        if !matches!(outcome, StepOutcome::Failed(_)) {
            self.pc += 1;
        }
        outcome
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub emits: Vec<EmitRecord>,
    pub compute_ticks: Tick,
    pub sleep_ticks: Tick,
}

/// A task stopped at `pc`. `partial` holds what ran before the fault.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("task failed at pc={pc}: {fault}")]
pub struct TaskFailure {
    pub pc: usize,
    pub fault: Fault,
    pub partial: Completion,
}

/// Runs a whole program with no interleaving. Emit ticks are local to the
/// task, starting at 0 and advancing by compute cost plus sleeps.
pub fn run_to_completion(
    program: &ProgramDef,
    env: Env,
    task: &str,
) -> Result<Completion, TaskFailure> {
    let mut cursor = TaskCursor::new(program, env);
    let mut done = Completion {
        emits: Vec::new(),
        compute_ticks: 0,
        sleep_ticks: 0,
    };
    let mut now: Tick = 0;
    loop {
        let pc = cursor.pc();
        let outcome = cursor.step(StepContext { task, tick: now });
        now += outcome.cost();
        done.compute_ticks += outcome.cost();
        match outcome {
            StepOutcome::Advanced => {}
            StepOutcome::Emitted(rec) => done.emits.push(rec),
            StepOutcome::Slept(n) => {
                done.sleep_ticks += n;
                now = now.saturating_add(n);
            }
            StepOutcome::Finished => return Ok(done),
            StepOutcome::Failed(fault) => {
                return Err(TaskFailure {
                    pc,
                    fault,
                    partial: done,
                })
            }
        }
    }
}
