//! Interactive execution of a decision-tree program.
//!
//! A [`Session`] runs until it needs something from the person answering
//! (a choice or free text) or has something to show them, and reports that as
//! a [`SessionEvent`]. The only state carried between instructions is the
//! last answer given.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstream::F16;
use crate::ir::{Constant, InvalidProgram, Opcode, Operand, Program, Quadruple};

/// Label of the implicit catch-all answer offered on every choice prompt.
pub const OTHER: &str = "Other";

/// Reference number to display text, as printed beside the QR code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceTable {
    entries: BTreeMap<u32, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reference table line {line}: {message}")]
pub struct RefTableError {
    pub line: usize,
    pub message: String,
}

impl ReferenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `n=text` lines. Blank lines and lines starting with `#` are
    /// skipped; everything after the first `=` is the text, verbatim.
    pub fn parse(text: &str) -> Result<Self, RefTableError> {
        let mut table = ReferenceTable::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| RefTableError {
                line: i + 1,
                message,
            };
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `number=text`".into()))?;
            let key: u32 = key
                .trim()
                .parse()
                .map_err(|_| err(format!("bad reference number `{}`", key.trim())))?;
            if table.entries.insert(key, value.to_string()).is_some() {
                return Err(err(format!("duplicate reference {key}")));
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, reference: u32, text: impl Into<String>) -> Option<String> {
        self.entries.insert(reference, text.into())
    }

    pub fn get(&self, reference: u32) -> Option<&str> {
        self.entries.get(&reference).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.entries.iter().map(|(k, v)| (*k, v.as_str()))
    }
}

impl FromIterator<(u32, String)> for ReferenceTable {
    fn from_iter<I: IntoIterator<Item = (u32, String)>>(iter: I) -> Self {
        ReferenceTable {
            entries: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Running,
    AwaitingChoice,
    AwaitingText,
    Terminated,
    Failed,
}

impl SessionState {
    pub fn is_awaiting(self) -> bool {
        matches!(
            self,
            SessionState::AwaitingChoice | SessionState::AwaitingText
        )
    }

    pub fn is_finished(self) -> bool {
        matches!(self, SessionState::Terminated | SessionState::Failed)
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SessionState::Running => "running",
            SessionState::AwaitingChoice => "awaiting a choice",
            SessionState::AwaitingText => "awaiting text",
            SessionState::Terminated => "terminated",
            SessionState::Failed => "failed",
        };
        f.write_str(s)
    }
}

/// What the session asks of, or tells, the person running it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionEvent {
    /// Pick one of `options`, or "Other" (`other` is always true).
    PromptChoice {
        message: String,
        options: Vec<String>,
        other: bool,
    },
    PromptText {
        message: String,
    },
    Output {
        message: String,
        terminal: bool,
    },
    Terminated,
    Failed {
        reason: String,
    },
}

impl SessionEvent {
    pub fn is_final(&self) -> bool {
        matches!(
            self,
            SessionEvent::Terminated
                | SessionEvent::Failed { .. }
                | SessionEvent::Output { terminal: true, .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error(transparent)]
    InvalidProgram(#[from] InvalidProgram),
    #[error("session is {0}, not running")]
    NotRunning(SessionState),
    #[error("session is {0}, not waiting for an answer")]
    NotAwaiting(SessionState),
}

#[derive(Debug, Clone)]
pub struct Session {
    program: Program,
    pc: usize,
    last_value: Option<String>,
    refs: Option<ReferenceTable>,
    state: SessionState,
    executed: usize,
}

/// Why execution stopped inside `run`.
type Halt = Result<SessionEvent, String>;

impl Session {
    pub fn new(program: Program, refs: Option<ReferenceTable>) -> Result<Self, VmError> {
        program.check()?;
        Ok(Session {
            program,
            pc: 1,
            last_value: None,
            refs,
            state: SessionState::Running,
            executed: 0,
        })
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// Index of the next instruction to execute (1-based).
    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn last_value(&self) -> Option<&str> {
        self.last_value.as_deref()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Instructions executed since the session was created.
    pub fn instructions_executed(&self) -> usize {
        self.executed
    }

    /// Runs from the current instruction until the next event.
    pub fn advance(&mut self) -> Result<SessionEvent, VmError> {
        if self.state != SessionState::Running {
            return Err(VmError::NotRunning(self.state));
        }
        Ok(match self.run() {
            Ok(event) => event,
            Err(reason) => {
                self.state = SessionState::Failed;
                SessionEvent::Failed { reason }
            }
        })
    }

    /// Records `answer` as the last entered value, steps past the input
    /// instruction and continues as [`Session::advance`].
    pub fn submit_answer(&mut self, answer: &str) -> Result<SessionEvent, VmError> {
        if !self.state.is_awaiting() {
            return Err(VmError::NotAwaiting(self.state));
        }
        self.last_value = Some(answer.to_string());
        self.pc += 1;
        self.state = SessionState::Running;
        self.advance()
    }

    fn resolve(&self, constant: &Constant) -> Result<String, String> {
        match constant {
            Constant::Text(text) => Ok(text.clone()),
            Constant::Reference(n) => self
                .refs
                .as_ref()
                .and_then(|t| t.get(*n))
                .map(str::to_string)
                .ok_or_else(|| format!("unresolved reference {n}")),
        }
    }

    fn constant_of(quad: &Quadruple) -> &Constant {
        quad.constant
            .as_ref()
            .expect("validated program: constant present")
    }

    fn run(&mut self) -> Halt {
        loop {
            let Some(quad) = self.program.get(self.pc).cloned() else {
                self.state = SessionState::Terminated;
                return Ok(SessionEvent::Terminated);
            };
            self.executed += 1;
            let target = quad.target.unwrap_or(0);
            match quad.opcode {
                Opcode::Input => {
                    let message = self.resolve(Self::constant_of(&quad))?;
                    let options = self
                        .program
                        .instructions()
                        .iter()
                        .skip(self.pc)
                        .take_while(|q| q.opcode == Opcode::If)
                        .map(|q| self.resolve(Self::constant_of(q)))
                        .collect::<Result<Vec<_>, _>>()?;
                    if options.is_empty() {
                        self.state = SessionState::AwaitingText;
                        return Ok(SessionEvent::PromptText { message });
                    }
                    self.state = SessionState::AwaitingChoice;
                    return Ok(SessionEvent::PromptChoice {
                        message,
                        options,
                        other: true,
                    });
                }
                Opcode::Inputs => {
                    let message = self.resolve(Self::constant_of(&quad))?;
                    self.state = SessionState::AwaitingText;
                    return Ok(SessionEvent::PromptText { message });
                }
                Opcode::Print => {
                    let message = self.resolve(Self::constant_of(&quad))?;
                    self.pc += 1;
                    return Ok(SessionEvent::Output {
                        message,
                        terminal: false,
                    });
                }
                Opcode::PrintEx => {
                    let message = self.resolve(Self::constant_of(&quad))?;
                    self.state = SessionState::Terminated;
                    if message.is_empty() {
                        return Ok(SessionEvent::Terminated);
                    }
                    return Ok(SessionEvent::Output {
                        message,
                        terminal: true,
                    });
                }
                Opcode::Goto => self.pc = target,
                Opcode::If => {
                    let expected = self.resolve(Self::constant_of(&quad))?;
                    self.pc = if self.last_value.as_deref() == Some(expected.as_str()) {
                        target
                    } else {
                        self.pc + 1
                    };
                }
                Opcode::Ifc => {
                    let rel_op = quad.rel_op.expect("validated program: rel_op present");
                    let operand = quad.operand.expect("validated program: operand present");
                    let holds = rel_op.holds(self.compare_last(operand)?);
                    self.pc = if holds { target } else { self.pc + 1 };
                }
            }
        }
    }

    /// Converts the last answer to the operand's type and compares.
    fn compare_last(&self, operand: Operand) -> Result<Option<std::cmp::Ordering>, String> {
        let entered = self
            .last_value
            .as_deref()
            .ok_or_else(|| "conversion error: no value has been entered".to_string())?;
        let text = entered.trim();
        match operand {
            Operand::Int(rhs) => {
                let lhs: i64 = text
                    .parse()
                    .map_err(|_| format!("conversion error: {entered:?} is not an integer"))?;
                Ok(Some(lhs.cmp(&i64::from(rhs))))
            }
            Operand::Float(rhs) => {
                let lhs: f64 = text
                    .parse()
                    .map_err(|_| format!("conversion error: {entered:?} is not a number"))?;
                Ok(F16::from_f64(lhs).partial_cmp_value(rhs))
            }
        }
    }
}
