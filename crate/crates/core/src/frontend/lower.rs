use super::parser::{Condition, IfClause, SourceAst, Stmt};
use crate::ir::{Constant, Program, Quadruple};

/// Lowers the syntax tree to three-address code.
///
/// A run of consecutive `if` clauses becomes one conditional jump per clause,
/// then a `goto` to the continuation (the "Other" path), then the clause
/// bodies in order. A body that can run off its end is followed by a `goto`
/// to the continuation. If control can reach the end of the program, a
/// `printex ""` is appended so termination is explicit.
pub fn lower(ast: &SourceAst) -> Program {
    let mut l = Lowerer { code: Vec::new() };
    if l.block(&ast.statements) {
        l.emit(Quadruple::printex(Constant::text("")));
    }
    Program::new(l.code)
}

struct Lowerer {
    code: Vec<Quadruple>,
}

impl Lowerer {
    fn next_index(&self) -> usize {
        self.code.len() + 1
    }

    fn emit(&mut self, quad: Quadruple) -> usize {
        self.code.push(quad);
        self.code.len()
    }

    fn patch(&mut self, index: usize, target: usize) {
        self.code[index - 1].target = Some(target);
    }

    /// Emits `stmts`; returns whether control can fall off the end.
    fn block(&mut self, stmts: &[Stmt]) -> bool {
        let mut falls_through = true;
        let mut i = 0;
        while i < stmts.len() {
            match &stmts[i] {
                Stmt::Input { direct, constant } => {
                    let c = constant.clone();
                    self.emit(if *direct {
                        Quadruple::inputs(c)
                    } else {
                        Quadruple::input(c)
                    });
                    falls_through = true;
                    i += 1;
                }
                Stmt::Output { terminal, constant } => {
                    let c = constant.clone();
                    self.emit(if *terminal {
                        Quadruple::printex(c)
                    } else {
                        Quadruple::print(c)
                    });
                    falls_through = !terminal;
                    i += 1;
                }
                Stmt::If(_) => {
                    let run: Vec<&IfClause> = stmts[i..]
                        .iter()
                        .map_while(|s| match s {
                            Stmt::If(clause) => Some(clause),
                            _ => None,
                        })
                        .collect();
                    i += run.len();
                    self.chain(&run);
                    // the fall-through ("Other") path always reaches the continuation
                    falls_through = true;
                }
            }
        }
        falls_through
    }

    fn chain(&mut self, clauses: &[&IfClause]) {
        // Targets are placeholders until the bodies are laid out.
        let jumps: Vec<usize> = clauses
            .iter()
            .map(|clause| {
                self.emit(match &clause.condition {
                    Condition::StringEq(c) => Quadruple::if_match(c.clone(), 0),
                    Condition::Compare(op, operand) => Quadruple::ifc(*op, *operand, 0),
                })
            })
            .collect();
        let mut exits = vec![self.emit(Quadruple::goto(0))];

        for (clause, jump) in clauses.iter().zip(jumps) {
            let start = self.next_index();
            self.patch(jump, start);
            if self.block(&clause.body) {
                exits.push(self.emit(Quadruple::goto(0)));
            }
        }

        let continuation = self.next_index();
        for exit in exits {
            self.patch(exit, continuation);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::compile_source;
    use super::*;
    use crate::ir::format_tac;

    #[test]
    fn single_printex_has_no_terminator() {
        let p = compile_source("printex \"x\"").unwrap();
        assert_eq!(
            p,
            Program::new(vec![Quadruple::printex(Constant::text("x"))])
        );
    }

    #[test]
    fn input_gets_terminator() {
        let p = compile_source("input \"q\"").unwrap();
        assert_eq!(
            p,
            Program::new(vec![
                Quadruple::input(Constant::text("q")),
                Quadruple::printex(Constant::text("")),
            ])
        );
    }

    #[test]
    fn chain_layout() {
        let p = compile_source(
            "input \"q\"\nif \"a\":\n    print \"A\"\nif \"b\":\n    printex \"B\"\nprint \"after\"\n",
        )
        .unwrap();
        assert_eq!(
            format_tac(&p),
            "(1) input \"q\"\n\
             (2) if \"a\" (5)\n\
             (3) if \"b\" (7)\n\
             (4) goto (8)\n\
             (5) print \"A\"\n\
             (6) goto (8)\n\
             (7) printex \"B\"\n\
             (8) print \"after\"\n\
             (9) printex \"\"\n"
        );
    }

    #[test]
    fn nested_chain_exits_through_outer_goto() {
        let p = compile_source(
            "input \"q\"\nif \"a\":\n    input \"r\"\n    if \"x\":\n        print \"X\"\nif \"b\":\n    printex \"B\"\n",
        )
        .unwrap();
        assert!(p.validate().is_empty());
        assert_eq!(
            format_tac(&p),
            "(1) input \"q\"\n\
             (2) if \"a\" (5)\n\
             (3) if \"b\" (11)\n\
             (4) goto (12)\n\
             (5) input \"r\"\n\
             (6) if \"x\" (8)\n\
             (7) goto (10)\n\
             (8) print \"X\"\n\
             (9) goto (10)\n\
             (10) goto (12)\n\
             (11) printex \"B\"\n\
             (12) printex \"\"\n"
        );
    }
}
