//! Line-oriented workload format.
//!
//! ```text
//! # comment
//! program main
//! sum = add a b
//! emit sum
//! sleep 200
//! end
//! shared k=1 j=-2
//! task task1 main a=1 b=1
//! ```
//!
//! Blank lines and anything after `#` are ignored. Tasks take their rank from
//! the order of `task` lines. A `task` line without bindings reads the shared
//! binding.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::workload::{
    is_identifier, DataBinding, Instruction, Opcode, Operand, ProgramDef, TaskSpec, Workload,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("no tasks")]
    NoTasks,
    #[error("unknown opcode `{0}`")]
    UnknownOpcode(String),
    #[error("malformed binding `{0}`")]
    MalformedBinding(String),
    #[error("duplicate key `{0}` in binding")]
    DuplicateKey(String),
    #[error("missing `end` for program {0}")]
    MissingEnd(String),
    #[error("`end` outside of a program block")]
    StrayEnd,
    #[error("duplicate program name {0}")]
    DuplicateProgram(String),
    #[error("duplicate task name {0}")]
    DuplicateTask(String),
    #[error("more than one `shared` line")]
    DuplicateShared,
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("invalid operand `{0}`")]
    InvalidOperand(String),
    #[error("invalid sleep duration `{0}`")]
    InvalidSleep(String),
    #[error("unrecognized line `{0}`")]
    Unrecognized(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    pub kind: ParseErrorKind,
}

struct OpenProgram {
    line: usize,
    name: String,
    body: Vec<Instruction>,
}

#[derive(Default)]
struct Parser {
    workload: Workload,
    errors: Vec<ParseError>,
    open: Option<OpenProgram>,
    program_names: HashSet<String>,
    task_names: HashSet<String>,
    shared_seen: bool,
}

impl Parser {
    fn error(&mut self, line: usize, kind: ParseErrorKind) {
        self.errors.push(ParseError { line, kind });
    }

    fn ident(&mut self, line: usize, s: &str) -> String {
        if !is_identifier(s) {
            self.error(line, ParseErrorKind::InvalidIdentifier(s.to_string()));
        }
        s.to_string()
    }

    fn close(&mut self) {
        if let Some(open) = self.open.take() {
            self.workload
                .programs
                .push(ProgramDef::new(open.name, open.body));
        }
    }

    fn line(&mut self, n: usize, tokens: &[&str]) {
        if self.open.is_some() {
            let is_assignment = tokens.get(1) == Some(&"=");
            match tokens[0] {
                "end" if tokens.len() == 1 => return self.close(),
                "program" | "task" | "shared" if !is_assignment => {
                    let open = self.open.as_ref().expect("open block");
                    let (line, name) = (open.line, open.name.clone());
                    self.error(line, ParseErrorKind::MissingEnd(name));
                    self.close();
                }
                _ => {
                    if let Some(instr) = self.instruction(n, tokens) {
                        self.open.as_mut().expect("open block").body.push(instr);
                    }
                    return;
                }
            }
        }

        match tokens {
            ["program", name] => {
                let name = self.ident(n, name);
                if !self.program_names.insert(name.clone()) {
                    self.error(n, ParseErrorKind::DuplicateProgram(name.clone()));
                }
                self.open = Some(OpenProgram {
                    line: n,
                    name,
                    body: Vec::new(),
                });
            }
            ["shared", pairs @ ..] => {
                if std::mem::replace(&mut self.shared_seen, true) {
                    self.error(n, ParseErrorKind::DuplicateShared);
                }
                let binding = self.binding(n, pairs);
                self.workload.shared.get_or_insert(binding);
            }
            ["task", name, program, pairs @ ..] => {
                let name = self.ident(n, name);
                let program = self.ident(n, program);
                if !self.task_names.insert(name.clone()) {
                    self.error(n, ParseErrorKind::DuplicateTask(name.clone()));
                }
                let own = (!pairs.is_empty()).then(|| self.binding(n, pairs));
                let rank = self.workload.tasks.len();
                self.workload
                    .tasks
                    .push(TaskSpec::new(name, rank, program, own));
            }
            ["end"] => self.error(n, ParseErrorKind::StrayEnd),
            _ => self.error(n, ParseErrorKind::Unrecognized(tokens.join(" "))),
        }
    }

    fn binding(&mut self, n: usize, pairs: &[&str]) -> DataBinding {
        let mut binding = DataBinding::new();
        for pair in pairs {
            let parsed = pair
                .split_once('=')
                .filter(|(k, _)| is_identifier(k))
                .and_then(|(k, v)| v.parse::<i64>().ok().map(|v| (k, v)));
            match parsed {
                Some((k, v)) => {
                    if binding.0.insert(k.to_string(), v).is_some() {
                        self.error(n, ParseErrorKind::DuplicateKey(k.to_string()));
                    }
                }
                None => self.error(n, ParseErrorKind::MalformedBinding(pair.to_string())),
            }
        }
        binding
    }

    fn operand(&mut self, n: usize, s: &str) -> Option<Operand> {
        if s.starts_with(|c: char| c.is_ascii_alphabetic()) && is_identifier(s) {
            Some(Operand::Var(s.to_string()))
        } else if let Ok(v) = s.parse::<i64>() {
            Some(Operand::Lit(v))
        } else {
            self.error(n, ParseErrorKind::InvalidOperand(s.to_string()));
            None
        }
    }

    fn instruction(&mut self, n: usize, tokens: &[&str]) -> Option<Instruction> {
        match tokens {
            ["emit", var] => Some(Instruction::emit(self.ident(n, var))),
            ["sleep", ticks] => match ticks.parse::<u64>() {
                Ok(t) => Some(Instruction::sleep(t)),
                Err(_) => {
                    self.error(n, ParseErrorKind::InvalidSleep(ticks.to_string()));
                    None
                }
            },
            [dest, "=", op, lhs, rhs] => {
                let dest = self.ident(n, dest);
                let Some(op) = Opcode::from_mnemonic(op) else {
                    self.error(n, ParseErrorKind::UnknownOpcode(op.to_string()));
                    return None;
                };
                let lhs = self.operand(n, lhs);
                let rhs = self.operand(n, rhs);
                Some(Instruction::compute(dest, op, lhs?, rhs?))
            }
            _ => {
                self.error(n, ParseErrorKind::Unrecognized(tokens.join(" ")));
                None
            }
        }
    }
}

/// Parses workload text, reporting every syntax error found.
///
/// Semantic checks beyond duplicate names and the presence of tasks are
/// left to [`validate_workload`](crate::workload::validate_workload).
pub fn parse_workload(text: &str) -> Result<Workload, Vec<ParseError>> {
    let mut p = Parser::default();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        last_line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(before, _)| before);
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if !tokens.is_empty() {
            p.line(i + 1, &tokens);
        }
    }
    if let Some(open) = &p.open {
        let (line, name) = (open.line, open.name.clone());
        p.error(line, ParseErrorKind::MissingEnd(name));
        p.close();
    }
    if p.workload.tasks.is_empty() {
        p.error(last_line.max(1), ParseErrorKind::NoTasks);
    }
    if p.errors.is_empty() {
        Ok(p.workload)
    } else {
        p.errors.sort_by_key(|e| e.line);
        Err(p.errors)
    }
}

struct Pairs<'a>(&'a DataBinding);

impl fmt::Display for Pairs<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Canonical text for a workload. Tasks are written in rank order.
pub fn to_text(w: &Workload) -> String {
    let mut out = String::new();
    for p in &w.programs {
        writeln!(out, "program {}", p.name).unwrap();
        for instr in &p.body {
            writeln!(out, "{instr}").unwrap();
        }
        out.push_str("end\n\n");
    }
    if let Some(shared) = &w.shared {
        writeln!(out, "shared{}", Pairs(shared)).unwrap();
    }
    for t in w.tasks_by_rank() {
        write!(out, "task {} {}", t.name, t.program).unwrap();
        if let Some(own) = &t.own_data {
            write!(out, "{}", Pairs(own)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// First 16 hex digits of the SHA-256 of the canonical text.
pub fn workload_digest(w: &Workload) -> String {
    let hash = Sha256::digest(to_text(w).as_bytes());
    hash.iter().take(8).fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}
