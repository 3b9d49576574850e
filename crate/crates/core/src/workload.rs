//! Workload model: programs, data bindings, tasks, and the program/data
//! quadrant a workload falls into.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::interp::Env;

/// Binary integer operation of a compute instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
}

impl Opcode {
    pub const ALL: [Opcode; 4] = [Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::Div];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.mnemonic() == s)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Right-hand side argument of a compute instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(String),
    Lit(i64),
}

impl Operand {
    pub fn var(name: impl Into<String>) -> Self {
        Operand::Var(name.into())
    }

    fn read_var(&self) -> Option<&str> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Lit(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => f.write_str(v),
            Operand::Lit(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// `dest = op lhs rhs`; costs one tick.
    Compute {
        dest: String,
        op: Opcode,
        lhs: Operand,
        rhs: Operand,
    },
    /// Publishes the current value of a variable; costs one tick.
    Emit { src: String },
    /// Blocks the task for `ticks` simulated ticks without using the processor.
    Sleep { ticks: u64 },
}

impl Instruction {
    pub fn compute(dest: impl Into<String>, op: Opcode, lhs: Operand, rhs: Operand) -> Self {
        Instruction::Compute {
            dest: dest.into(),
            op,
            lhs,
            rhs,
        }
    }

    pub fn emit(src: impl Into<String>) -> Self {
        Instruction::Emit { src: src.into() }
    }

    pub fn sleep(ticks: u64) -> Self {
        Instruction::Sleep { ticks }
    }

    /// Variables this instruction reads, in operand order.
    pub fn reads(&self) -> Vec<&str> {
        match self {
            Instruction::Compute { lhs, rhs, .. } => {
                lhs.read_var().into_iter().chain(rhs.read_var()).collect()
            }
            Instruction::Emit { src } => vec![src.as_str()],
            Instruction::Sleep { .. } => Vec::new(),
        }
    }

    pub fn writes(&self) -> Option<&str> {
        match self {
            Instruction::Compute { dest, .. } => Some(dest),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Compute { dest, op, lhs, rhs } => write!(f, "{dest} = {op} {lhs} {rhs}"),
            Instruction::Emit { src } => write!(f, "emit {src}"),
            Instruction::Sleep { ticks } => write!(f, "sleep {ticks}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramDef {
    pub name: String,
    pub body: Vec<Instruction>,
}

impl ProgramDef {
    pub fn new(name: impl Into<String>, body: Vec<Instruction>) -> Self {
        Self {
            name: name.into(),
            body,
        }
    }
}

/// Named integer inputs. Two bindings are the same dataset iff their maps
/// are equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataBinding(pub BTreeMap<String, i64>);

impl DataBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<i64> {
        self.0.get(key).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>> FromIterator<(K, i64)> for DataBinding {
    fn from_iter<I: IntoIterator<Item = (K, i64)>>(iter: I) -> Self {
        DataBinding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl<K: Into<String>, const N: usize> From<[(K, i64); N]> for DataBinding {
    fn from(pairs: [(K, i64); N]) -> Self {
        pairs.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub name: String,
    /// 0-based creation index; the scheduler orders ready tasks by it.
    pub rank: usize,
    pub program: String,
    pub own_data: Option<DataBinding>,
}

impl TaskSpec {
    pub fn new(
        name: impl Into<String>,
        rank: usize,
        program: impl Into<String>,
        own_data: Option<DataBinding>,
    ) -> Self {
        Self {
            name: name.into(),
            rank,
            program: program.into(),
            own_data,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Workload {
    pub programs: Vec<ProgramDef>,
    pub shared: Option<DataBinding>,
    pub tasks: Vec<TaskSpec>,
}

impl Workload {
    pub fn program(&self, name: &str) -> Option<&ProgramDef> {
        self.programs.iter().find(|p| p.name == name)
    }

    /// Tasks sorted by rank.
    pub fn tasks_by_rank(&self) -> Vec<&TaskSpec> {
        let mut tasks: Vec<&TaskSpec> = self.tasks.iter().collect();
        tasks.sort_by_key(|t| t.rank);
        tasks
    }
}

/// One quadrant of the program/data taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionModel {
    /// Single program, single data.
    Spsd,
    /// Multiple programs, single data.
    Mpsd,
    /// Single program, multiple data.
    Spmd,
    /// Multiple programs, multiple data.
    Mpmd,
}

impl ExecutionModel {
    pub fn from_counts(programs: usize, datasets: usize) -> Self {
        match (programs > 1, datasets > 1) {
            (false, false) => ExecutionModel::Spsd,
            (true, false) => ExecutionModel::Mpsd,
            (false, true) => ExecutionModel::Spmd,
            (true, true) => ExecutionModel::Mpmd,
        }
    }
}

impl fmt::Display for ExecutionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecutionModel::Spsd => "SPSD",
            ExecutionModel::Mpsd => "MPSD",
            ExecutionModel::Spmd => "SPMD",
            ExecutionModel::Mpmd => "MPMD",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("no tasks")]
    NoTasks,
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("duplicate program name {0}")]
    DuplicateProgram(String),
    #[error("duplicate task name {0}")]
    DuplicateTask(String),
    #[error("duplicate rank {rank} (task {task})")]
    DuplicateRank { task: String, rank: usize },
    #[error("empty body in program {0}")]
    EmptyBody(String),
    #[error("task {task} references unknown program {program}")]
    UnknownProgram { task: String, program: String },
    #[error("task {0} has no own data and no shared data is declared")]
    MissingData(String),
    #[error("unbound variable {var} in program {program}")]
    UnboundVariable { program: String, var: String },
}

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Collects every violation in `w`; an empty list means the workload is valid.
pub fn validate_workload(w: &Workload) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    let bad_ident = |s: &str, errors: &mut Vec<ValidationError>| {
        if !is_identifier(s) {
            errors.push(ValidationError::InvalidIdentifier(s.to_string()));
        }
    };

    if w.tasks.is_empty() {
        errors.push(ValidationError::NoTasks);
    }

    let mut program_names = HashSet::new();
    for p in &w.programs {
        bad_ident(&p.name, &mut errors);
        if !program_names.insert(p.name.as_str()) {
            errors.push(ValidationError::DuplicateProgram(p.name.clone()));
        }
        if p.body.is_empty() {
            errors.push(ValidationError::EmptyBody(p.name.clone()));
        }
        for instr in &p.body {
            for v in instr.reads().into_iter().chain(instr.writes()) {
                bad_ident(v, &mut errors);
            }
        }
    }

    if let Some(shared) = &w.shared {
        for k in shared.keys() {
            bad_ident(k, &mut errors);
        }
    }

    let mut task_names = HashSet::new();
    let mut ranks = HashSet::new();
    // (program, var) pairs already reported, so a program shared by many
    // tasks reports each unbound variable once.
    let mut unbound_seen = BTreeSet::new();
    for t in &w.tasks {
        bad_ident(&t.name, &mut errors);
        if !task_names.insert(t.name.as_str()) {
            errors.push(ValidationError::DuplicateTask(t.name.clone()));
        }
        if !ranks.insert(t.rank) {
            errors.push(ValidationError::DuplicateRank {
                task: t.name.clone(),
                rank: t.rank,
            });
        }
        if let Some(own) = &t.own_data {
            for k in own.keys() {
                bad_ident(k, &mut errors);
            }
        }
        let Some(program) = w.program(&t.program) else {
            errors.push(ValidationError::UnknownProgram {
                task: t.name.clone(),
                program: t.program.clone(),
            });
            continue;
        };
        let Some(data) = t.own_data.as_ref().or(w.shared.as_ref()) else {
            errors.push(ValidationError::MissingData(t.name.clone()));
            continue;
        };
        for var in unbound_reads(program, data) {
            if unbound_seen.insert((program.name.clone(), var.clone())) {
                errors.push(ValidationError::UnboundVariable {
                    program: program.name.clone(),
                    var,
                });
            }
        }
    }
    errors
}

fn unbound_reads(program: &ProgramDef, data: &DataBinding) -> Vec<String> {
    let mut defined: HashSet<&str> = data.keys().collect();
    let mut unbound = Vec::new();
    for instr in &program.body {
        for v in instr.reads() {
            if !defined.contains(v) && !unbound.iter().any(|u| u == v) {
                unbound.push(v.to_string());
            }
        }
        if let Some(dest) = instr.writes() {
            defined.insert(dest);
        }
    }
    unbound
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot classify an invalid workload ({} error(s))", .0.len())]
pub struct ClassifyError(pub Vec<ValidationError>);

/// Places a valid workload on the program/data quadrant.
///
/// Counts distinct program names referenced by tasks and distinct datasets
/// in use. Equal `own_data` maps count once; the shared binding counts once
/// if any task falls back to it.
pub fn classify(w: &Workload) -> Result<ExecutionModel, ClassifyError> {
    let errors = validate_workload(w);
    if !errors.is_empty() {
        return Err(ClassifyError(errors));
    }
    let programs: BTreeSet<&str> = w.tasks.iter().map(|t| t.program.as_str()).collect();
    let datasets: BTreeSet<&DataBinding> = w
        .tasks
        .iter()
        .filter_map(|t| t.own_data.as_ref().or(w.shared.as_ref()))
        .collect();
    Ok(ExecutionModel::from_counts(programs.len(), datasets.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("task {0} has neither own data nor shared data")]
pub struct MissingDataError(pub String);

/// Initial environment of a task: its own data if present, else a copy of
/// the shared binding. The two are never merged.
pub fn bind_env(t: &TaskSpec, shared: Option<&DataBinding>) -> Result<Env, MissingDataError> {
    t.own_data
        .as_ref()
        .or(shared)
        .map(Env::from_binding)
        .ok_or_else(|| MissingDataError(t.name.clone()))
}
