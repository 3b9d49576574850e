#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use flynnsim::{DataBinding, Instruction, Opcode, Operand, ProgramDef, TaskSpec, Workload};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

pub fn load_fixture(name: &str) -> Workload {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    flynnsim::parse_workload(&text).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_tasks: usize,
    pub max_programs: usize,
    pub max_instructions: usize,
    pub value_range: (i64, i64),
    pub max_sleep: u64,
    pub allow_sleep: bool,
}

impl Default for GenLimits {
    fn default() -> Self {
        Self {
            max_tasks: 8,
            max_programs: 4,
            max_instructions: 6,
            value_range: (-100, 100),
            max_sleep: 50,
            allow_sleep: true,
        }
    }
}

const INPUTS: [&str; 2] = ["a", "b"];
const LOCALS: [&str; 3] = ["x", "y", "z"];

fn literal(rng: &mut StdRng, lim: &GenLimits) -> i64 {
    rng.random_range(lim.value_range.0..=lim.value_range.1)
}

fn operand(rng: &mut StdRng, lim: &GenLimits, defined: &[&'static str]) -> Operand {
    if rng.random_bool(0.25) {
        Operand::Lit(literal(rng, lim))
    } else {
        Operand::var(defined[rng.random_range(0..defined.len())])
    }
}

/// A straight-line body that only reads inputs or earlier results, with at
/// least one emit.
fn program(rng: &mut StdRng, lim: &GenLimits, name: String) -> ProgramDef {
    let len = rng.random_range(1..=lim.max_instructions);
    let mut defined: Vec<&'static str> = INPUTS.to_vec();
    let mut body = Vec::with_capacity(len);
    for _ in 0..len {
        let roll = rng.random_range(0..10);
        let instr = if roll < 5 {
            let dest = LOCALS[rng.random_range(0..LOCALS.len())];
            let op = Opcode::ALL[rng.random_range(0..4)];
            let lhs = operand(rng, lim, &defined);
            let rhs = operand(rng, lim, &defined);
            if !defined.contains(&dest) {
                defined.push(dest);
            }
            Instruction::compute(dest, op, lhs, rhs)
        } else if roll < 8 || !lim.allow_sleep {
            Instruction::emit(defined[rng.random_range(0..defined.len())])
        } else {
            Instruction::sleep(rng.random_range(0..=lim.max_sleep))
        };
        body.push(instr);
    }
    if !body.iter().any(|i| matches!(i, Instruction::Emit { .. })) {
        // nothing reads the last instruction's result, so it can be replaced
        let emit = Instruction::emit(INPUTS[rng.random_range(0..2)]);
        if body.len() < lim.max_instructions {
            body.push(emit);
        } else {
            *body.last_mut().unwrap() = emit;
        }
    }
    ProgramDef::new(name, body)
}

fn binding(rng: &mut StdRng, lim: &GenLimits) -> DataBinding {
    INPUTS.iter().map(|&k| (k, literal(rng, lim))).collect()
}

pub fn random_workload(seed: u64, lim: &GenLimits) -> Workload {
    let mut rng = StdRng::seed_from_u64(seed);
    let programs: Vec<ProgramDef> = (0..rng.random_range(1..=lim.max_programs))
        .map(|i| program(&mut rng, lim, format!("prog{i}")))
        .collect();
    let shared = rng.random_bool(0.5).then(|| binding(&mut rng, lim));
    let tasks = (0..rng.random_range(1..=lim.max_tasks))
        .map(|rank| {
            let program = programs[rng.random_range(0..programs.len())].name.clone();
            let own = if shared.is_none() || rng.random_bool(0.5) {
                Some(binding(&mut rng, lim))
            } else {
                None
            };
            TaskSpec::new(format!("task{}", rank + 1), rank, program, own)
        })
        .collect();
    let w = Workload {
        programs,
        shared,
        tasks,
    };
    assert!(
        flynnsim::validate_workload(&w).is_empty(),
        "generator produced invalid workload"
    );
    w
}

/// What the reference scheduler observed for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefStatus {
    Finished(u64),
    Failed(u64, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefRun {
    /// (task, var, value, tick) in emission order.
    pub emits: Vec<(String, String, i64, u64)>,
    pub statuses: Vec<RefStatus>,
    pub makespan: u64,
}

#[derive(Clone)]
enum RefState {
    Ready,
    Sleeping(u64),
    Done(RefStatus),
}

fn eval(op: Opcode, l: i64, r: i64) -> Option<i64> {
    match op {
        Opcode::Add => l.checked_add(r),
        Opcode::Sub => l.checked_sub(r),
        Opcode::Mul => l.checked_mul(r),
        Opcode::Div => {
            if r == 0 {
                None
            } else {
                // truncation toward zero, spelled out
                let q = l.unsigned_abs().checked_div(r.unsigned_abs())? as i128;
                let q = if (l < 0) != (r < 0) { -q } else { q };
                i64::try_from(q).ok()
            }
        }
    }
}

/// Tick-by-tick round-robin reference, written independently of the
/// library's event-driven scheduler. Time advances one tick per loop
/// iteration while the processor is idle.
pub fn reference_round_robin(w: &Workload, quantum: u64) -> RefRun {
    let mut order: Vec<&TaskSpec> = w.tasks.iter().collect();
    order.sort_by_key(|t| t.rank);
    let bodies: Vec<&[Instruction]> = order
        .iter()
        .map(|t| {
            w.programs
                .iter()
                .find(|p| p.name == t.program)
                .unwrap()
                .body
                .as_slice()
        })
        .collect();
    let mut envs: Vec<BTreeMap<String, i64>> = order
        .iter()
        .map(|t| t.own_data.as_ref().or(w.shared.as_ref()).unwrap().0.clone())
        .collect();
    let n = order.len();
    let mut pcs = vec![0usize; n];
    let mut states = vec![RefState::Ready; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut running: Option<(usize, u64)> = None;
    let mut now = 0u64;
    let mut emits = Vec::new();

    let wake_all =
        |now: u64, states: &mut Vec<RefState>, pcs: &[usize], queue: &mut VecDeque<usize>| {
            for i in 0..n {
                if let RefState::Sleeping(w) = states[i] {
                    if w <= now {
                        if pcs[i] == bodies[i].len() {
                            states[i] = RefState::Done(RefStatus::Finished(now));
                        } else {
                            states[i] = RefState::Ready;
                            queue.push_back(i);
                        }
                    }
                }
            }
        };

    while !states.iter().all(|s| matches!(s, RefState::Done(_))) {
        let (i, used) = match running.take() {
            Some(r) => r,
            None => match queue.pop_front() {
                Some(i) => (i, 0),
                None => {
                    now += 1;
                    wake_all(now, &mut states, &pcs, &mut queue);
                    continue;
                }
            },
        };
        let env = &mut envs[i];
        let value = |o: &Operand| match o {
            Operand::Lit(v) => *v,
            Operand::Var(v) => env[v],
        };
        let mut keep = true;
        let mut spent = 0;
        match &bodies[i][pcs[i]] {
            Instruction::Compute { dest, op, lhs, rhs } => {
                match eval(*op, value(lhs), value(rhs)) {
                    Some(v) => {
                        env.insert(dest.clone(), v);
                        pcs[i] += 1;
                        spent = 1;
                    }
                    None => {
                        states[i] = RefState::Done(RefStatus::Failed(now, pcs[i]));
                        keep = false;
                    }
                }
            }
            Instruction::Emit { src } => {
                emits.push((order[i].name.clone(), src.clone(), env[src], now));
                pcs[i] += 1;
                spent = 1;
            }
            Instruction::Sleep { ticks } => {
                states[i] = RefState::Sleeping(now + ticks);
                pcs[i] += 1;
                keep = false;
            }
        }
        now += spent;
        if keep && pcs[i] == bodies[i].len() {
            states[i] = RefState::Done(RefStatus::Finished(now));
            keep = false;
        }
        wake_all(now, &mut states, &pcs, &mut queue);
        if keep {
            if used + spent >= quantum {
                queue.push_back(i);
            } else {
                running = Some((i, used + spent));
            }
        }
    }

    let statuses: Vec<RefStatus> = states
        .into_iter()
        .map(|s| match s {
            RefState::Done(st) => st,
            _ => unreachable!(),
        })
        .collect();
    let makespan = statuses
        .iter()
        .map(|s| match s {
            RefStatus::Finished(t) | RefStatus::Failed(t, _) => *t,
        })
        .max()
        .unwrap_or(0);
    RefRun {
        emits,
        statuses,
        makespan,
    }
}
