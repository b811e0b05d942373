//! Tokenizer for `.hdcc` description files.

use std::fmt;

use thiserror::Error;

/// Source location of a lexeme. `line` and `col` are 1-based; `col` counts
/// characters, `offset`/`len` count bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    DirectiveName,
    Ident,
    Int,
    Bool,
    Str,
    LParen,
    RParen,
    Comma,
    Semicolon,
    Comment,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::DirectiveName => "directive name",
            TokenKind::Ident => "identifier",
            TokenKind::Int => "integer",
            TokenKind::Bool => "boolean",
            TokenKind::Str => "string",
            TokenKind::LParen => "'('",
            TokenKind::RParen => "')'",
            TokenKind::Comma => "','",
            TokenKind::Semicolon => "';'",
            TokenKind::Comment => "comment",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn line(&self) -> usize {
        self.span.line
    }

    pub fn col(&self) -> usize {
        self.span.col
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. Whitespace is skipped; `//` comments are kept
/// as [`TokenKind::Comment`] tokens so that the token stream plus the skipped
/// whitespace reproduces the input exactly.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = match c {
            '/' if cur.peek_second() == Some('/') => {
                cur.eat_while(|c| c != '\n' && c != '\r');
                TokenKind::Comment
            }
            '(' => {
                cur.bump();
                TokenKind::LParen
            }
            ')' => {
                cur.bump();
                TokenKind::RParen
            }
            ',' => {
                cur.bump();
                TokenKind::Comma
            }
            ';' => {
                cur.bump();
                TokenKind::Semicolon
            }
            '.' => {
                cur.bump();
                if !cur.peek().is_some_and(is_ident_start) {
                    return Err(LexError {
                        message: "expected a directive name after '.'".into(),
                        line,
                        col,
                    });
                }
                cur.eat_while(is_ident_continue);
                TokenKind::DirectiveName
            }
            '"' => {
                cur.bump();
                loop {
                    match cur.peek() {
                        Some('"') => {
                            cur.bump();
                            break;
                        }
                        Some('\n') | None => {
                            return Err(LexError {
                                message: "unterminated string literal".into(),
                                line,
                                col,
                            })
                        }
                        Some(_) => {
                            cur.bump();
                        }
                    }
                }
                TokenKind::Str
            }
            c if c.is_ascii_digit() => {
                cur.eat_while(|c| c.is_ascii_digit());
                if cur.peek().is_some_and(is_ident_continue) {
                    return Err(LexError {
                        message: "malformed integer literal".into(),
                        line,
                        col,
                    });
                }
                if source[start..cur.pos].parse::<u64>().is_err() {
                    return Err(LexError {
                        message: "integer literal out of range".into(),
                        line,
                        col,
                    });
                }
                TokenKind::Int
            }
            c if is_ident_start(c) => {
                cur.eat_while(is_ident_continue);
                let word = &source[start..cur.pos];
                if word.eq_ignore_ascii_case("true") || word.eq_ignore_ascii_case("false") {
                    TokenKind::Bool
                } else {
                    TokenKind::Ident
                }
            }
            other => {
                return Err(LexError {
                    message: format!("unexpected character {other:?}"),
                    line,
                    col,
                })
            }
        };
        tokens.push(Token {
            kind,
            lexeme: source[start..cur.pos].to_string(),
            span: Span {
                line,
                col,
                offset: start,
                len: cur.pos - start,
            },
        });
    }
    Ok(tokens)
}
