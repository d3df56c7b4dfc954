use std::fmt;

use crate::bitstream::F16;
use crate::ir::RelOp;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Input,
    Inputs,
    Print,
    PrintEx,
    If,
    Str(String),
    /// Unsigned integer in constant position.
    Ref(u32),
    /// Integer following a relational operator.
    Int(i32),
    Float(F16),
    RelOp(RelOp),
    Colon,
    Indent,
    Dedent,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Input => f.write_str("`input`"),
            TokenKind::Inputs => f.write_str("`inputs`"),
            TokenKind::Print => f.write_str("`print`"),
            TokenKind::PrintEx => f.write_str("`printex`"),
            TokenKind::If => f.write_str("`if`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Ref(n) => write!(f, "reference {n}"),
            TokenKind::Int(n) => write!(f, "integer {n}"),
            TokenKind::Float(v) => write!(f, "number {v}"),
            TokenKind::RelOp(op) => write!(f, "`{op}`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Indent => f.write_str("indent"),
            TokenKind::Dedent => f.write_str("dedent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Splits source text into tokens. Leading spaces become `Indent`/`Dedent`
/// pairs; lines that are blank or hold only a comment do not affect
/// indentation.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut indents = vec![0usize];

    for (line_idx, raw) in source.lines().enumerate() {
        let line = line_idx + 1;
        let err = |column: usize, message: String| LexError {
            line,
            column,
            message,
        };

        let body = raw.trim_start_matches([' ', '\t']);
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let lead = &raw[..raw.len() - body.len()];
        if let Some(pos) = lead.find('\t') {
            return Err(err(pos + 1, "tab character in indentation".into()));
        }
        let depth = lead.len();
        let top = *indents.last().expect("indent stack never empty");
        if depth > top {
            indents.push(depth);
            tokens.push(Token {
                kind: TokenKind::Indent,
                line,
                column: depth + 1,
            });
        } else if depth < top {
            while *indents.last().expect("indent stack never empty") > depth {
                indents.pop();
                tokens.push(Token {
                    kind: TokenKind::Dedent,
                    line,
                    column: depth + 1,
                });
            }
            if *indents.last().expect("indent stack never empty") != depth {
                return Err(err(
                    depth + 1,
                    "dedent does not match any enclosing indentation level".into(),
                ));
            }
        }

        lex_line(raw, depth, line, &mut tokens)?;
    }

    let (line, column) = (source.lines().count() + 1, 1);
    for _ in 1..indents.len() {
        tokens.push(Token {
            kind: TokenKind::Dedent,
            line,
            column,
        });
    }
    Ok(tokens)
}

fn lex_line(raw: &str, start: usize, line: usize, tokens: &mut Vec<Token>) -> Result<(), LexError> {
    let bytes = raw.as_bytes();
    let mut i = start;
    let err = |i: usize, message: String| LexError {
        line,
        column: i + 1,
        message,
    };

    while i < bytes.len() {
        let c = bytes[i];
        let column = i + 1;
        let mut push = |kind| tokens.push(Token { kind, line, column });
        match c {
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => break,
            b':' => {
                push(TokenKind::Colon);
                i += 1;
            }
            b'"' => {
                let (text, next) = lex_string(raw, i).map_err(|(at, m)| err(at, m))?;
                push(TokenKind::Str(text));
                i = next;
            }
            b'=' | b'!' | b'<' | b'>' => {
                let two = raw.get(i..i + 2).unwrap_or("");
                let one = &raw[i..i + 1];
                let (op, width) = match RelOp::from_symbol(two) {
                    Some(op) => (op, 2),
                    None => match RelOp::from_symbol(one) {
                        Some(op) => (op, 1),
                        None => return Err(err(i, format!("unknown operator `{two}`"))),
                    },
                };
                push(TokenKind::RelOp(op));
                i += width;
            }
            b'0'..=b'9' | b'-' | b'+' | b'.' => {
                let end = raw[i..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || matches!(ch, '.' | '-' | '+')))
                    .map_or(raw.len(), |n| i + n);
                let text = &raw[i..end];
                let after_relop = matches!(
                    tokens.last(),
                    Some(Token {
                        kind: TokenKind::RelOp(_),
                        ..
                    })
                );
                let kind = lex_number(text, after_relop).map_err(|m| err(i, m))?;
                tokens.push(Token { kind, line, column });
                i = end;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let end = raw[i..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .map_or(raw.len(), |n| i + n);
                let kind = match &raw[i..end] {
                    "input" => TokenKind::Input,
                    "inputs" => TokenKind::Inputs,
                    "print" => TokenKind::Print,
                    "printex" => TokenKind::PrintEx,
                    "if" => TokenKind::If,
                    word => return Err(err(i, format!("unknown word `{word}`"))),
                };
                push(kind);
                i = end;
            }
            _ => {
                let ch = raw[i..].chars().next().unwrap_or('?');
                return Err(err(i, format!("unexpected character {ch:?}")));
            }
        }
    }
    Ok(())
}

fn lex_number(text: &str, after_relop: bool) -> Result<TokenKind, String> {
    let is_float = text.contains(['.', 'e', 'E']);
    if is_float {
        let value: f64 = text
            .parse()
            .map_err(|_| format!("malformed number `{text}`"))?;
        return Ok(TokenKind::Float(F16::from_f64(value)));
    }
    if !after_relop && text.bytes().all(|b| b.is_ascii_digit()) {
        return text
            .parse()
            .map(TokenKind::Ref)
            .map_err(|_| format!("reference `{text}` is too large"));
    }
    text.parse()
        .map(TokenKind::Int)
        .map_err(|_| format!("malformed or out-of-range integer `{text}`"))
}

/// Lexes a string literal starting at the opening quote. Returns the text and
/// the byte index after the closing quote.
fn lex_string(raw: &str, open: usize) -> Result<(String, usize), (usize, String)> {
    let mut out = String::new();
    let mut chars = raw[open + 1..]
        .char_indices()
        .map(|(k, c)| (open + 1 + k, c));
    while let Some((at, c)) = chars.next() {
        match c {
            '"' => return Ok((out, at + 1)),
            '\\' => {
                let (at, esc) = chars
                    .next()
                    .ok_or((at, "unterminated string".to_string()))?;
                out.push(match esc {
                    '"' => '"',
                    '\\' => '\\',
                    'n' => '\n',
                    't' => '\t',
                    'r' => '\r',
                    other => return Err((at, format!("unknown escape `\\{other}`"))),
                });
            }
            c if !c.is_ascii() => {
                return Err((at, format!("character {c:?} is not 7-bit ASCII")));
            }
            c => out.push(c),
        }
    }
    Err((open, "unterminated string".to_string()))
}
