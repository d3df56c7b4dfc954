//! Compiler for the decision-tree source language.
//!
//! ```text
//! input "Which kind of technology has communication problems?"
//! if "Ethernet":
//!     input "Is link status active?"
//!     if "No":
//!         printex "Change Ethernet cable"
//!     inputs "What is the speed in Mbps?"
//!     if <= 100:
//!         printex "Change Ethernet cable category"
//!     printex ""
//! ```
//!
//! Statements are `input`, `inputs`, `print` and `printex` followed by a
//! string or a reference number, and `if` clauses whose condition is a
//! string (or reference) to match, or a relational operator and a number.
//! Bodies are indented with spaces. Consecutive `if` clauses form one
//! decision; an answer matching none of them falls through to whatever
//! follows the run.

mod lexer;
mod lower;
mod parser;

pub use self::lexer::{tokenize, LexError, Token, TokenKind};
pub use self::lower::lower;
pub use self::parser::{parse, Condition, IfClause, SourceAst, Stmt, SyntaxError};

use crate::ir::Program;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("empty program")]
    EmptyProgram,
}

impl CompileError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CompileError::Lex(e) => Some(e.line),
            CompileError::Syntax(e) => Some(e.line),
            CompileError::EmptyProgram => None,
        }
    }
}

/// Tokenizes, parses and lowers `source`.
pub fn compile_source(source: &str) -> Result<Program, CompileError> {
    let tokens = tokenize(source)?;
    let ast = parse(&tokens)?;
    if ast.statements.is_empty() {
        return Err(CompileError::EmptyProgram);
    }
    Ok(lower(&ast))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sources() {
        assert_eq!(compile_source(""), Err(CompileError::EmptyProgram));
        assert_eq!(
            compile_source("# nothing here\n\n"),
            Err(CompileError::EmptyProgram)
        );
    }

    #[test]
    fn errors_report_lines() {
        let e = compile_source("print \"a\"\nif \"b\":\n\tprint \"c\"").unwrap_err();
        assert!(matches!(e, CompileError::Lex(_)));
        assert_eq!(e.line(), Some(3));
        let e = compile_source("print \"a\"\nprint").unwrap_err();
        assert!(matches!(e, CompileError::Syntax(_)));
        assert_eq!(e.line(), Some(2));
    }
}
