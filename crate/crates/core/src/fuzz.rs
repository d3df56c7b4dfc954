//! Random programs and sources for property tests and fuzzing.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::bitstream::F16;
use crate::frontend::{Condition, IfClause, SourceAst, Stmt};
use crate::ir::{Constant, Opcode, Operand, Program, Quadruple, RelOp};

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub max_len: usize,
    pub max_text: usize,
    /// Largest reference number generated.
    pub max_ref: u32,
    /// Probability that a constant is a reference rather than text.
    pub ref_ratio: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_len: 40,
            max_text: 24,
            max_ref: 40,
            ref_ratio: 0.2,
        }
    }
}

fn random_text<R: Rng + ?Sized>(rng: &mut R, max: usize, printable: bool) -> String {
    let len = rng.random_range(0..=max);
    (0..len)
        .map(|_| {
            if printable {
                char::from(rng.random_range(0x20u8..0x7F))
            } else {
                char::from(rng.random_range(0u8..0x80))
            }
        })
        .collect()
}

fn random_constant<R: Rng + ?Sized>(rng: &mut R, cfg: &FuzzConfig, printable: bool) -> Constant {
    if rng.random_bool(cfg.ref_ratio) {
        Constant::Reference(rng.random_range(0..=cfg.max_ref))
    } else {
        Constant::Text(random_text(rng, cfg.max_text, printable))
    }
}

/// An int drawn so both operand widths show up often.
pub fn random_int<R: Rng + ?Sized>(rng: &mut R) -> i32 {
    match rng.random_range(0..4) {
        0 => rng.random_range(-128..128),
        1 => rng.random_range(i32::from(i16::MIN)..=i32::from(i16::MAX)),
        2 => *[i32::MIN, i32::MAX, -32769, 32768, -32768, 32767, 0]
            .choose(rng)
            .expect("non-empty"),
        _ => rng.random(),
    }
}

/// Any half-precision value; NaNs are the canonical one.
pub fn random_half<R: Rng + ?Sized>(rng: &mut R) -> F16 {
    let h = F16::from_bits(rng.random());
    if h.is_nan() {
        F16::NAN
    } else {
        h
    }
}

fn random_operand<R: Rng + ?Sized>(rng: &mut R) -> Operand {
    if rng.random_bool(0.5) {
        Operand::Int(random_int(rng))
    } else {
        Operand::Float(random_half(rng))
    }
}

/// A random program that passes validation.
///
/// It never ends in a `goto` to the instruction after it: on a byte boundary
/// that instruction is indistinguishable from padding, and the decoder drops
/// it.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, cfg: &FuzzConfig) -> Program {
    let len = rng.random_range(1..=cfg.max_len.max(1));
    let mut code = Vec::with_capacity(len);
    for index in 1..=len {
        let opcode = *Opcode::ALL.choose(rng).expect("non-empty");
        let target = rng.random_range(index + 1..=len + 1);
        let quad = match opcode {
            Opcode::Input => Quadruple::input(random_constant(rng, cfg, false)),
            Opcode::Inputs => Quadruple::inputs(random_constant(rng, cfg, false)),
            Opcode::Print => Quadruple::print(random_constant(rng, cfg, false)),
            Opcode::PrintEx => Quadruple::printex(random_constant(rng, cfg, false)),
            Opcode::Goto if index == len => Quadruple::printex(Constant::text("")),
            Opcode::Goto => Quadruple::goto(target),
            Opcode::If => Quadruple::if_match(random_constant(rng, cfg, false), target),
            Opcode::Ifc => {
                let op = *RelOp::ALL.choose(rng).expect("non-empty");
                Quadruple::ifc(op, random_operand(rng), target)
            }
        };
        code.push(quad);
    }
    Program::new(code)
}

/// A random syntax tree with at most `depth` levels of nesting.
pub fn random_source_ast<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &FuzzConfig,
    depth: usize,
) -> SourceAst {
    let statements = random_block(rng, cfg, depth, 1);
    SourceAst { statements }
}

fn random_block<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &FuzzConfig,
    depth: usize,
    min: usize,
) -> Vec<Stmt> {
    let n = rng.random_range(min..=min.max(5));
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let kind = if depth == 0 {
            rng.random_range(0..4)
        } else {
            rng.random_range(0..6)
        };
        let constant = random_constant(rng, cfg, true);
        out.push(match kind {
            0 => Stmt::Input {
                direct: rng.random(),
                constant,
            },
            1 | 2 => Stmt::Output {
                terminal: false,
                constant,
            },
            3 => Stmt::Output {
                terminal: true,
                constant,
            },
            _ => {
                let condition = if rng.random_bool(0.5) {
                    Condition::StringEq(constant)
                } else {
                    let op = *RelOp::ALL.choose(rng).expect("non-empty");
                    let operand = match random_operand(rng) {
                        Operand::Float(f) if f.is_nan() || f.to_f32().is_infinite() => {
                            Operand::Float(F16::ZERO)
                        }
                        other => other,
                    };
                    Condition::Compare(op, operand)
                };
                Stmt::If(IfClause {
                    condition,
                    body: random_block(rng, cfg, depth - 1, 1),
                })
            }
        });
    }
    out
}

/// Renders a syntax tree as source text that compiles back to the same tree.
pub fn render_source(ast: &SourceAst) -> String {
    let mut out = String::new();
    render_block(&ast.statements, 0, &mut out);
    out
}

fn render_block(stmts: &[Stmt], level: usize, out: &mut String) {
    let pad = "    ".repeat(level);
    for stmt in stmts {
        out.push_str(&pad);
        match stmt {
            Stmt::Input { direct, constant } => {
                out.push_str(if *direct { "inputs " } else { "input " });
                out.push_str(&render_constant(constant));
            }
            Stmt::Output { terminal, constant } => {
                out.push_str(if *terminal { "printex " } else { "print " });
                out.push_str(&render_constant(constant));
            }
            Stmt::If(clause) => {
                out.push_str("if ");
                match &clause.condition {
                    Condition::StringEq(c) => out.push_str(&render_constant(c)),
                    Condition::Compare(op, Operand::Int(v)) => {
                        out.push_str(&format!("{} {v}", op.symbol()))
                    }
                    Condition::Compare(op, Operand::Float(v)) => {
                        out.push_str(&format!("{} {v}", op.symbol()))
                    }
                }
                out.push_str(":\n");
                render_block(&clause.body, level + 1, out);
                continue;
            }
        }
        out.push('\n');
    }
}

fn render_constant(c: &Constant) -> String {
    match c {
        Constant::Reference(n) => n.to_string(),
        Constant::Text(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('"');
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{compile_source, lower, parse, tokenize};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn generated_programs_validate() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let p = random_program(&mut rng, &FuzzConfig::default());
            assert!(p.validate().is_empty(), "{p:?}");
            assert_ne!(
                p.instructions().last().map(|q| q.opcode),
                Some(Opcode::Goto)
            );
        }
    }

    #[test]
    fn rendered_sources_parse_back() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let ast = random_source_ast(&mut rng, &FuzzConfig::default(), 3);
            let text = render_source(&ast);
            let tokens = tokenize(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(parse(&tokens).unwrap(), ast, "{text}");
            assert_eq!(compile_source(&text).unwrap(), lower(&ast));
        }
    }
}
