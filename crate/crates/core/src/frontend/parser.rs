use super::lexer::{Token, TokenKind};
use crate::ir::{Constant, Operand, RelOp};

#[derive(Debug, Clone, PartialEq)]
pub struct SourceAst {
    pub statements: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// `input` (direct = false) or `inputs` (direct = true).
    Input {
        direct: bool,
        constant: Constant,
    },
    /// `print` (terminal = false) or `printex` (terminal = true).
    Output {
        terminal: bool,
        constant: Constant,
    },
    If(IfClause),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfClause {
    pub condition: Condition,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// Last answer equals this constant.
    StringEq(Constant),
    /// Last answer, converted to a number, compared with the operand.
    Compare(RelOp, Operand),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Line of the last token of the previous statement.
    last_line: usize,
}

/// Builds the syntax tree. An empty token list yields an empty tree; callers
/// decide whether that is an error.
pub fn parse(tokens: &[Token]) -> Result<SourceAst, SyntaxError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        last_line: 0,
    };
    let mut statements = Vec::new();
    while p.peek().is_some() {
        statements.push(p.statement()?);
    }
    Ok(SourceAst { statements })
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn error_at(&self, tok: Option<&Token>, message: String) -> SyntaxError {
        let (line, column) = match tok {
            Some(t) => (t.line, t.column),
            None => self
                .tokens
                .last()
                .map_or((1, 1), |t| (t.line, t.column + 1)),
        };
        SyntaxError {
            line,
            column,
            message,
        }
    }

    fn unexpected(&self, tok: Option<&Token>, wanted: &str) -> SyntaxError {
        let found = tok.map_or("end of input".to_string(), |t| t.kind.to_string());
        self.error_at(tok, format!("expected {wanted}, found {found}"))
    }

    fn statement(&mut self) -> Result<Stmt, SyntaxError> {
        let tok = self
            .next()
            .ok_or_else(|| self.unexpected(None, "a statement"))?;
        if tok.line == self.last_line {
            return Err(self.error_at(Some(tok), "a statement must start on a new line".into()));
        }
        let stmt = match tok.kind {
            TokenKind::Input | TokenKind::Inputs => Stmt::Input {
                direct: tok.kind == TokenKind::Inputs,
                constant: self.constant()?,
            },
            TokenKind::Print | TokenKind::PrintEx => Stmt::Output {
                terminal: tok.kind == TokenKind::PrintEx,
                constant: self.constant()?,
            },
            TokenKind::If => Stmt::If(self.if_clause(tok)?),
            _ => return Err(self.unexpected(Some(tok), "a statement")),
        };
        if let Some(prev) = self.tokens[..self.pos]
            .iter()
            .rev()
            .find(|t| !matches!(t.kind, TokenKind::Indent | TokenKind::Dedent))
        {
            self.last_line = prev.line;
        }
        Ok(stmt)
    }

    fn constant(&mut self) -> Result<Constant, SyntaxError> {
        let tok = self.next();
        match tok.map(|t| &t.kind) {
            Some(TokenKind::Str(s)) => Ok(Constant::Text(s.clone())),
            Some(TokenKind::Ref(n)) => Ok(Constant::Reference(*n)),
            _ => Err(self.unexpected(tok, "a string or reference")),
        }
    }

    fn if_clause(&mut self, if_tok: &Token) -> Result<IfClause, SyntaxError> {
        let tok = self.next();
        let condition = match tok.map(|t| &t.kind) {
            Some(TokenKind::Str(s)) => Condition::StringEq(Constant::Text(s.clone())),
            Some(TokenKind::Ref(n)) => Condition::StringEq(Constant::Reference(*n)),
            Some(TokenKind::RelOp(op)) => {
                let num = self.next();
                let operand = match num.map(|t| &t.kind) {
                    Some(TokenKind::Int(v)) => Operand::Int(*v),
                    Some(TokenKind::Float(v)) => Operand::Float(*v),
                    _ => return Err(self.unexpected(num, "a number")),
                };
                Condition::Compare(*op, operand)
            }
            _ => return Err(self.unexpected(tok, "a string or comparison after `if`")),
        };
        let colon = self.next();
        if !matches!(colon.map(|t| &t.kind), Some(TokenKind::Colon)) {
            return Err(self.unexpected(colon, "`:`"));
        }
        let indent = self.peek();
        if !matches!(indent.map(|t| &t.kind), Some(TokenKind::Indent)) {
            return Err(self.error_at(
                indent,
                format!(
                    "empty block: `if` on line {} needs an indented body",
                    if_tok.line
                ),
            ));
        }
        self.pos += 1;
        let mut body = Vec::new();
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Dedent) => {
                    self.pos += 1;
                    break;
                }
                None => break,
                _ => body.push(self.statement()?),
            }
        }
        Ok(IfClause { condition, body })
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize;
    use super::*;

    fn parse_src(src: &str) -> Result<SourceAst, SyntaxError> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn single_statement() {
        let ast = parse_src("printex \"done\"").unwrap();
        assert_eq!(
            ast.statements,
            vec![Stmt::Output {
                terminal: true,
                constant: Constant::text("done")
            }]
        );
    }

    #[test]
    fn empty_block_rejected() {
        let e = parse_src("if \"x\":").unwrap_err();
        assert!(e.message.contains("empty block"), "{e}");
        let e = parse_src("if \"x\":\nprint \"y\"").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn nested_chain() {
        let ast = parse_src(
            "input \"q\"\nif \"a\":\n  printex \"A\"\nif >= 2:\n  print 4\n  printex 5\n",
        )
        .unwrap();
        assert_eq!(ast.statements.len(), 3);
        match &ast.statements[2] {
            Stmt::If(clause) => {
                assert_eq!(
                    clause.condition,
                    Condition::Compare(RelOp::Ge, Operand::Int(2))
                );
                assert_eq!(clause.body.len(), 2);
            }
            other => panic!("expected if, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_src("print").unwrap_err();
        assert!(e.message.contains("expected a string or reference"), "{e}");
        let e = parse_src("input \"a\" print \"b\"").unwrap_err();
        assert_eq!((e.line, e.column), (1, 11));
        let e = parse_src("if \"a\" print").unwrap_err();
        assert!(e.message.contains("`:`"));
        let e = parse_src("if < \"a\":\n  print 1").unwrap_err();
        assert!(e.message.contains("a number"));
        let e = parse_src("input 1.5").unwrap_err();
        assert!(e.message.contains("string or reference"));
        let e = parse_src("print \"a\"\n  print \"b\"").unwrap_err();
        assert!(e.message.contains("indent"), "{e}");
    }
}
