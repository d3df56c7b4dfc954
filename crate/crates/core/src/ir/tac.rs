//! Text form of three-address code.
//!
//! ```text
//! (1) input "Which kind of technology has communication problems?"
//! (2) if "Ethernet" (6)
//! (11) ifc <= 100 (13)
//! (14) printex ""
//! ```
//!
//! One instruction per line, numbered consecutively from 1. Targets are
//! written `(n)`. References are bare unsigned integers. Strings are
//! double-quoted; `"` and `\` are backslash-escaped, as are `\n`, `\r`, `\t`
//! and other control characters (`\xHH`). `#` starts a comment outside a
//! string and blank lines are ignored. An `ifc` operand containing `.` or an
//! exponent (or spelled `inf`/`nan`) is a half-precision float, otherwise a
//! 32-bit integer.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Constant, Opcode, Operand, Program, Quadruple, RelOp};
use crate::bitstream::F16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TacError {
    pub line: usize,
    pub message: String,
}

pub fn format_tac(program: &Program) -> String {
    let mut out = String::new();
    for (index, quad) in program.iter() {
        out.push_str(&format_quadruple(index, quad));
        out.push('\n');
    }
    out
}

pub(crate) fn format_quadruple(index: usize, quad: &Quadruple) -> String {
    let mut line = format!("({index}) {}", quad.opcode);
    if let Some(rel_op) = quad.rel_op {
        let _ = write!(line, " {rel_op}");
    }
    if let Some(operand) = quad.operand {
        let _ = write!(line, " {operand}");
    }
    if let Some(constant) = &quad.constant {
        line.push(' ');
        line.push_str(&format_constant(constant));
    }
    if let Some(target) = quad.target {
        let _ = write!(line, " ({target})");
    }
    line
}

pub(crate) fn format_constant(constant: &Constant) -> String {
    match constant {
        Constant::Reference(n) => n.to_string(),
        Constant::Text(s) => quote(s),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_ascii_control() => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Label(usize),
    Str(String),
    Word(String),
}

fn lex_line(line: &str) -> Result<Vec<Tok>, String> {
    let mut toks = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => break,
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string".into()),
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, 'x')) => {
                                let hex: String = (0..2)
                                    .filter_map(|_| chars.next())
                                    .map(|(_, c)| c)
                                    .collect();
                                let code = u8::from_str_radix(&hex, 16)
                                    .map_err(|_| format!("bad escape \\x{hex}"))?;
                                s.push(char::from(code));
                            }
                            Some((_, other)) => return Err(format!("unknown escape \\{other}")),
                            None => return Err("unterminated string".into()),
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
                toks.push(Tok::Str(s));
            }
            '(' => {
                chars.next();
                let mut digits = String::new();
                while let Some(&(_, d)) = chars.peek() {
                    if d == ')' {
                        break;
                    }
                    digits.push(d);
                    chars.next();
                }
                if chars.next().is_none() {
                    return Err(format!("unclosed label at column {}", start + 1));
                }
                let n = digits
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad label ({digits})"))?;
                toks.push(Tok::Label(n));
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '"' || c == '(' || c == '#' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                toks.push(Tok::Word(word));
            }
        }
    }
    Ok(toks)
}

fn parse_constant(tok: Option<Tok>) -> Result<Constant, String> {
    match tok {
        Some(Tok::Str(s)) => Ok(Constant::Text(s)),
        Some(Tok::Word(w)) => w
            .parse::<u32>()
            .map(Constant::Reference)
            .map_err(|_| format!("expected string or reference, found `{w}`")),
        Some(Tok::Label(n)) => Err(format!("expected string or reference, found ({n})")),
        None => Err("missing constant".into()),
    }
}

fn parse_target(tok: Option<Tok>) -> Result<usize, String> {
    match tok {
        Some(Tok::Label(n)) => Ok(n),
        Some(other) => Err(format!("expected jump target, found {other:?}")),
        None => Err("missing jump target".into()),
    }
}

/// Parses a numeric `ifc` operand; see the module docs for the int/float rule.
pub fn parse_operand(word: &str) -> Result<Operand, String> {
    let lower = word.to_ascii_lowercase();
    let is_float = lower.contains(['.', 'e'])
        || matches!(
            lower.trim_start_matches(['-', '+']),
            "inf" | "infinity" | "nan"
        );
    if is_float {
        let value: f64 = lower
            .parse()
            .map_err(|_| format!("bad float operand `{word}`"))?;
        Ok(Operand::Float(F16::from_f64(value)))
    } else {
        word.parse::<i32>()
            .map(Operand::Int)
            .map_err(|_| format!("bad integer operand `{word}`"))
    }
}

fn parse_line(toks: Vec<Tok>) -> Result<(usize, Quadruple), String> {
    let mut it = toks.into_iter();
    let index = match it.next() {
        Some(Tok::Label(n)) => n,
        _ => return Err("expected instruction number `(n)`".into()),
    };
    let opcode = match it.next() {
        Some(Tok::Word(w)) => {
            Opcode::from_mnemonic(&w).ok_or_else(|| format!("unknown instruction `{w}`"))?
        }
        _ => return Err("expected instruction".into()),
    };
    let quad = match opcode {
        Opcode::Input => Quadruple::input(parse_constant(it.next())?),
        Opcode::Inputs => Quadruple::inputs(parse_constant(it.next())?),
        Opcode::Print => Quadruple::print(parse_constant(it.next())?),
        Opcode::PrintEx => Quadruple::printex(parse_constant(it.next())?),
        Opcode::Goto => Quadruple::goto(parse_target(it.next())?),
        Opcode::If => {
            let constant = parse_constant(it.next())?;
            Quadruple::if_match(constant, parse_target(it.next())?)
        }
        Opcode::Ifc => {
            let rel_op = match it.next() {
                Some(Tok::Word(w)) => RelOp::from_symbol(&w)
                    .ok_or_else(|| format!("unknown relational operator `{w}`"))?,
                _ => return Err("expected relational operator".into()),
            };
            let operand = match it.next() {
                Some(Tok::Word(w)) => parse_operand(&w)?,
                _ => return Err("expected numeric operand".into()),
            };
            Quadruple::ifc(rel_op, operand, parse_target(it.next())?)
        }
    };
    if let Some(extra) = it.next() {
        return Err(format!("unexpected trailing {extra:?}"));
    }
    Ok((index, quad))
}

/// Inverse of [`format_tac`]. Instruction numbers must run 1, 2, 3, ...
pub fn parse_tac(text: &str) -> Result<Program, TacError> {
    let mut program = Program::default();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let err = |message: String| TacError {
            line: line_no,
            message,
        };
        let toks = lex_line(line).map_err(err)?;
        if toks.is_empty() {
            continue;
        }
        let (index, quad) = parse_line(toks).map_err(err)?;
        let expected = program.len() + 1;
        if index != expected {
            return Err(err(format!(
                "instruction numbered ({index}), expected ({expected})"
            )));
        }
        program.push(quad);
    }
    Ok(program)
}
