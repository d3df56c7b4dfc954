//! Three-address code shared by the compiler, the codec and the VM.
//!
//! A [`Program`] is a 1-based list of [`Quadruple`]s. Jumps name absolute
//! instruction numbers and may only go forward; `len + 1` is a valid target
//! meaning "past the end", which terminates execution.

mod tac;

pub use self::tac::{format_tac, parse_tac, TacError};

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::bitstream::F16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Opcode {
    Input,
    Inputs,
    Print,
    PrintEx,
    Goto,
    If,
    Ifc,
}

impl Opcode {
    pub const ALL: [Opcode; 7] = [
        Opcode::Input,
        Opcode::Inputs,
        Opcode::Print,
        Opcode::PrintEx,
        Opcode::Goto,
        Opcode::If,
        Opcode::Ifc,
    ];

    /// 3-bit instruction code. `0b111` is reserved.
    pub fn code(self) -> u8 {
        match self {
            Opcode::Input => 0b000,
            Opcode::Inputs => 0b001,
            Opcode::Print => 0b010,
            Opcode::PrintEx => 0b011,
            Opcode::Goto => 0b100,
            Opcode::If => 0b101,
            Opcode::Ifc => 0b110,
        }
    }

    pub fn from_code(code: u8) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| op.code() == code)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Input => "input",
            Opcode::Inputs => "inputs",
            Opcode::Print => "print",
            Opcode::PrintEx => "printex",
            Opcode::Goto => "goto",
            Opcode::If => "if",
            Opcode::Ifc => "ifc",
        }
    }

    pub fn from_mnemonic(word: &str) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| op.mnemonic() == word)
    }

    pub fn takes_constant(self) -> bool {
        matches!(
            self,
            Opcode::Input | Opcode::Inputs | Opcode::Print | Opcode::PrintEx | Opcode::If
        )
    }

    pub fn takes_target(self) -> bool {
        matches!(self, Opcode::Goto | Opcode::If | Opcode::Ifc)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// A string stored in the program, or a number standing for text printed
/// next to the QR code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constant {
    Text(String),
    Reference(u32),
}

impl Constant {
    pub fn text(s: impl Into<String>) -> Self {
        Constant::Text(s.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [
        RelOp::Eq,
        RelOp::Ne,
        RelOp::Le,
        RelOp::Ge,
        RelOp::Lt,
        RelOp::Gt,
    ];

    pub fn code(self) -> u8 {
        match self {
            RelOp::Eq => 0b000,
            RelOp::Ne => 0b001,
            RelOp::Le => 0b010,
            RelOp::Ge => 0b011,
            RelOp::Lt => 0b100,
            RelOp::Gt => 0b101,
        }
    }

    pub fn from_code(code: u8) -> Option<RelOp> {
        RelOp::ALL.into_iter().find(|op| op.code() == code)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
            RelOp::Lt => "<",
            RelOp::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<RelOp> {
        RelOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Applies the operator to `lhs.partial_cmp(rhs)`. An unordered pair
    /// (NaN involved) only satisfies `!=`.
    pub fn holds(self, ordering: Option<Ordering>) -> bool {
        match ordering {
            None => self == RelOp::Ne,
            Some(ord) => match self {
                RelOp::Eq => ord == Ordering::Equal,
                RelOp::Ne => ord != Ordering::Equal,
                RelOp::Le => ord != Ordering::Greater,
                RelOp::Ge => ord != Ordering::Less,
                RelOp::Lt => ord == Ordering::Less,
                RelOp::Gt => ord == Ordering::Greater,
            },
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Int(i32),
    Float(F16),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Int(v) => write!(f, "{v}"),
            Operand::Float(v) => write!(f, "{v}"),
        }
    }
}

/// One three-address instruction. Which optional fields are present is
/// dictated by the opcode; the constructors always produce a well-formed
/// record and [`validate`] reports any that are not.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quadruple {
    pub opcode: Opcode,
    pub constant: Option<Constant>,
    pub rel_op: Option<RelOp>,
    pub operand: Option<Operand>,
    pub target: Option<usize>,
}

impl Quadruple {
    fn bare(opcode: Opcode) -> Self {
        Quadruple {
            opcode,
            constant: None,
            rel_op: None,
            operand: None,
            target: None,
        }
    }

    pub fn input(constant: Constant) -> Self {
        Quadruple {
            constant: Some(constant),
            ..Self::bare(Opcode::Input)
        }
    }

    pub fn inputs(constant: Constant) -> Self {
        Quadruple {
            constant: Some(constant),
            ..Self::bare(Opcode::Inputs)
        }
    }

    pub fn print(constant: Constant) -> Self {
        Quadruple {
            constant: Some(constant),
            ..Self::bare(Opcode::Print)
        }
    }

    pub fn printex(constant: Constant) -> Self {
        Quadruple {
            constant: Some(constant),
            ..Self::bare(Opcode::PrintEx)
        }
    }

    pub fn goto(target: usize) -> Self {
        Quadruple {
            target: Some(target),
            ..Self::bare(Opcode::Goto)
        }
    }

    pub fn if_match(constant: Constant, target: usize) -> Self {
        Quadruple {
            constant: Some(constant),
            target: Some(target),
            ..Self::bare(Opcode::If)
        }
    }

    pub fn ifc(rel_op: RelOp, operand: Operand, target: usize) -> Self {
        Quadruple {
            rel_op: Some(rel_op),
            operand: Some(operand),
            target: Some(target),
            ..Self::bare(Opcode::Ifc)
        }
    }
}

/// Ordered instruction list, addressed from 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Program {
    instructions: Vec<Quadruple>,
}

impl Program {
    pub fn new(instructions: Vec<Quadruple>) -> Self {
        Program { instructions }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Instruction number `index` (1-based).
    pub fn get(&self, index: usize) -> Option<&Quadruple> {
        index.checked_sub(1).and_then(|i| self.instructions.get(i))
    }

    pub fn instructions(&self) -> &[Quadruple] {
        &self.instructions
    }

    pub fn push(&mut self, quad: Quadruple) -> usize {
        self.instructions.push(quad);
        self.instructions.len()
    }

    /// `(index, quadruple)` pairs with 1-based indices.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Quadruple)> {
        self.instructions
            .iter()
            .enumerate()
            .map(|(i, q)| (i + 1, q))
    }

    pub fn into_instructions(self) -> Vec<Quadruple> {
        self.instructions
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    /// `Ok` when [`validate`] reports nothing.
    pub fn check(&self) -> Result<(), InvalidProgram> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(InvalidProgram(violations))
        }
    }
}

impl FromIterator<Quadruple> for Program {
    fn from_iter<I: IntoIterator<Item = Quadruple>>(iter: I) -> Self {
        Program::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    MissingTarget,
    MissingConstant,
    MissingRelOp,
    MissingOperand,
    UnexpectedField(&'static str),
    BackwardJump { target: usize },
    TargetOutOfRange { target: usize },
    NonAsciiText { character: char },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) ", self.index)?;
        match &self.kind {
            ViolationKind::MissingTarget => f.write_str("missing target"),
            ViolationKind::MissingConstant => f.write_str("missing constant"),
            ViolationKind::MissingRelOp => f.write_str("missing relational operator"),
            ViolationKind::MissingOperand => f.write_str("missing operand"),
            ViolationKind::UnexpectedField(name) => write!(f, "unexpected {name}"),
            ViolationKind::BackwardJump { target } => write!(f, "backward jump to ({target})"),
            ViolationKind::TargetOutOfRange { target } => {
                write!(f, "jump target ({target}) out of range")
            }
            ViolationKind::NonAsciiText { character } => {
                write!(f, "character {character:?} is not 7-bit")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid program: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidProgram(pub Vec<Violation>);

/// Lists every structural problem in `program`; an empty list means valid.
pub fn validate(program: &Program) -> Vec<Violation> {
    let mut out = Vec::new();
    let end = program.len() + 1;
    for (index, quad) in program.iter() {
        let mut report = |kind| out.push(Violation { index, kind });
        let op = quad.opcode;

        match (&quad.constant, op.takes_constant()) {
            (None, true) => report(ViolationKind::MissingConstant),
            (Some(_), false) => report(ViolationKind::UnexpectedField("constant")),
            (Some(Constant::Text(text)), true) => {
                if let Some(character) = text.chars().find(|c| !c.is_ascii()) {
                    report(ViolationKind::NonAsciiText { character });
                }
            }
            _ => {}
        }
        let is_ifc = op == Opcode::Ifc;
        match (quad.rel_op.is_some(), is_ifc) {
            (false, true) => report(ViolationKind::MissingRelOp),
            (true, false) => report(ViolationKind::UnexpectedField("relational operator")),
            _ => {}
        }
        match (quad.operand.is_some(), is_ifc) {
            (false, true) => report(ViolationKind::MissingOperand),
            (true, false) => report(ViolationKind::UnexpectedField("operand")),
            _ => {}
        }
        match (quad.target, op.takes_target()) {
            (None, true) => report(ViolationKind::MissingTarget),
            (Some(_), false) => report(ViolationKind::UnexpectedField("target")),
            (Some(target), true) if target <= index => {
                report(ViolationKind::BackwardJump { target })
            }
            (Some(target), true) if target > end => {
                report(ViolationKind::TargetOutOfRange { target })
            }
            _ => {}
        }
    }
    out
}
