//! Recursive-descent parser from tokens to directives.
//!
//! Grammar (keywords and directive names are case-insensitive):
//!
//! ```text
//! file      := directive*
//! directive := DIRECTIVE_NAME args ';'
//! group     := '(' IDENT IDENT INT ')' | IDENT IDENT INT
//! expr      := MULTIBUNDLE '(' expr ')' | MULTISET '(' expr ')'
//!            | BATCHBIND '(' expr ',' expr ')' | BIND '(' expr ',' expr ')'
//!            | BUNDLE '(' expr ',' expr ')' | HASHTABLE '(' IDENT ',' IDENT ')'
//!            | NGRAM '(' IDENT ',' INT ')' | PERMUTE '(' expr ',' INT ')'
//!            | IDENT
//! ```
//!
//! On a malformed directive the parser records the error and resynchronises
//! at the next `;` or directive name, so one pass reports every bad directive.

use std::fmt;

use thiserror::Error;

use super::ast::{Directive, DirectiveArgs, DirectiveName, EmbeddingDecl, EncodingExpr, ExprKind};
use super::lexer::{Span, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub message: String,
    pub expected: Vec<String>,
    pub span: Span,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        if !self.expected.is_empty() && !self.message.starts_with("expected") {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

struct Parser<'t> {
    tokens: Vec<&'t Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos).copied()
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn nth_kind(&self, n: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + n).map(|t| t.kind)
    }

    fn last_consumed(&self) -> Option<&'t Token> {
        self.pos.checked_sub(1).and_then(|i| self.tokens.get(i).copied())
    }

    fn bump(&mut self) -> &'t Token {
        let t = self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn error_here(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let message = message.into();
        let expected = expected.iter().map(|s| s.to_string()).collect();
        match self.peek() {
            Some(tok) => ParseError {
                message: format!("{message}, found {:?}", tok.lexeme),
                expected,
                span: tok.span,
            },
            None => ParseError {
                message: format!("{message}, found end of file"),
                expected,
                span: self.last_consumed().map(|t| t.span).unwrap_or_default(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<&'t Token> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.bump()),
            _ => Err(self.error_here(format!("expected {what}"), &[what])),
        }
    }

    fn expect_int(&mut self) -> PResult<(u64, Span)> {
        let tok = self.expect(TokenKind::Int, "integer")?;
        // the lexer guarantees the literal fits in u64
        Ok((tok.lexeme.parse().unwrap_or(u64::MAX), tok.span))
    }

    /// Skips to just after the next `;`, or to the next directive name.
    fn recover(&mut self) {
        while let Some(kind) = self.peek_kind() {
            match kind {
                TokenKind::Semicolon => {
                    self.bump();
                    return;
                }
                TokenKind::DirectiveName => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn directive(&mut self) -> PResult<Directive> {
        let head = match self.peek() {
            Some(t) if t.kind == TokenKind::DirectiveName => self.bump(),
            _ => return Err(self.error_here("expected a directive", &["directive name"])),
        };
        let name = DirectiveName::lookup(&head.lexeme[1..]).ok_or_else(|| ParseError {
            message: format!("unknown directive {}", head.lexeme),
            expected: vec![],
            span: head.span,
        })?;

        let args = match name {
            DirectiveName::Name => match self.peek() {
                Some(t) if t.kind == TokenKind::Ident => {
                    self.bump();
                    DirectiveArgs::Word(t.lexeme.clone(), t.span)
                }
                Some(t) if t.kind == TokenKind::Str => {
                    self.bump();
                    DirectiveArgs::Word(t.lexeme[1..t.lexeme.len() - 1].to_string(), t.span)
                }
                _ => return Err(self.error_here("expected a name", &["identifier", "string"])),
            },
            DirectiveName::Type => {
                let t = self.expect(TokenKind::Ident, "identifier")?;
                DirectiveArgs::Word(t.lexeme.clone(), t.span)
            }
            DirectiveName::Debug => {
                let t = self.expect(TokenKind::Bool, "boolean")?;
                DirectiveArgs::Bool(t.lexeme.eq_ignore_ascii_case("true"), t.span)
            }
            DirectiveName::WeightEmbed => DirectiveArgs::Embeddings(vec![self.embedding_group()?]),
            DirectiveName::Embedding => {
                let mut groups = vec![self.embedding_group()?];
                loop {
                    if self.peek_kind() == Some(TokenKind::Comma) {
                        self.bump();
                        groups.push(self.embedding_group()?);
                    } else if matches!(self.peek_kind(), Some(TokenKind::LParen | TokenKind::Ident)) {
                        groups.push(self.embedding_group()?);
                    } else {
                        break;
                    }
                }
                DirectiveArgs::Embeddings(groups)
            }
            DirectiveName::Encoding => DirectiveArgs::Encoding(self.expr()?),
            DirectiveName::InputDim
            | DirectiveName::Classes
            | DirectiveName::Dimensions
            | DirectiveName::TrainSize
            | DirectiveName::TestSize
            | DirectiveName::NumThreads
            | DirectiveName::VectorSize
            | DirectiveName::Seed => {
                let (v, span) = self.expect_int()?;
                DirectiveArgs::Int(v, span)
            }
        };

        if self.peek_kind() != Some(TokenKind::Semicolon) {
            let last = self.last_consumed().expect("directive consumed at least its name");
            let found = match self.peek() {
                Some(t) => format!("found {:?}", t.lexeme),
                None => "found end of file".to_string(),
            };
            return Err(ParseError {
                message: format!("missing ';' after {} directive, {found}", name),
                expected: vec!["';'".into()],
                span: last.span,
            });
        }
        self.bump();
        Ok(Directive {
            name,
            args,
            span: head.span,
        })
    }

    fn embedding_group(&mut self) -> PResult<EmbeddingDecl> {
        let parenthesised = self.peek_kind() == Some(TokenKind::LParen);
        if parenthesised {
            self.bump();
        }
        let name = self.expect(TokenKind::Ident, "identifier")?;
        let kind = self.expect(TokenKind::Ident, "embedding kind")?;
        let (items, _) = self.expect_int()?;
        if parenthesised {
            self.expect(TokenKind::RParen, "')'")?;
        }
        Ok(EmbeddingDecl {
            name: name.lexeme.clone(),
            kind: kind.lexeme.clone(),
            items,
            span: name.span,
            kind_span: kind.span,
        })
    }

    fn expr(&mut self) -> PResult<EncodingExpr> {
        let head = match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => self.bump(),
            _ => return Err(self.error_here("expected an encoding expression", &["identifier"])),
        };
        if self.peek_kind() != Some(TokenKind::LParen) {
            return Ok(EncodingExpr::new(ExprKind::Ref(head.lexeme.clone()), head.span));
        }
        let combinator = head.lexeme.to_ascii_uppercase();
        let known = [
            "MULTIBUNDLE",
            "MULTISET",
            "BATCHBIND",
            "BIND",
            "BUNDLE",
            "HASHTABLE",
            "NGRAM",
            "PERMUTE",
        ];
        if !known.contains(&combinator.as_str()) {
            return Err(ParseError {
                message: format!("unknown encoding combinator {}", head.lexeme),
                expected: known.iter().map(|s| s.to_string()).collect(),
                span: head.span,
            });
        }
        self.bump(); // '('
        let kind = match combinator.as_str() {
            "MULTIBUNDLE" | "MULTISET" => ExprKind::MultiBundle(Box::new(self.expr()?)),
            "BATCHBIND" | "BIND" | "BUNDLE" => {
                let lhs = Box::new(self.expr()?);
                self.expect(TokenKind::Comma, "','")?;
                let rhs = Box::new(self.expr()?);
                match combinator.as_str() {
                    "BATCHBIND" => ExprKind::BatchBind(lhs, rhs),
                    "BIND" => ExprKind::Bind(lhs, rhs),
                    _ => ExprKind::Bundle(lhs, rhs),
                }
            }
            "HASHTABLE" => {
                let keys = self.expect(TokenKind::Ident, "identifier")?;
                self.expect(TokenKind::Comma, "','")?;
                let values = self.expect(TokenKind::Ident, "identifier")?;
                ExprKind::HashTable(keys.lexeme.clone(), values.lexeme.clone())
            }
            "NGRAM" => {
                let sym = self.expect(TokenKind::Ident, "identifier")?;
                if self.nth_kind(0) == Some(TokenKind::LParen) {
                    return Err(self.error_here("NGRAM takes an embedding name", &["','"]));
                }
                self.expect(TokenKind::Comma, "','")?;
                let (n, _) = self.expect_int()?;
                ExprKind::Ngram(sym.lexeme.clone(), n)
            }
            "PERMUTE" => {
                let inner = Box::new(self.expr()?);
                self.expect(TokenKind::Comma, "','")?;
                let (k, _) = self.expect_int()?;
                ExprKind::Permute(inner, k)
            }
            _ => unreachable!(),
        };
        self.expect(TokenKind::RParen, "')'")?;
        Ok(EncodingExpr::new(kind, head.span))
    }
}

/// Parses a token list into directives. Comment tokens are ignored. Every
/// malformed directive contributes one error.
pub fn parse(tokens: &[Token]) -> Result<Vec<Directive>, Vec<ParseError>> {
    let mut p = Parser {
        tokens: tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect(),
        pos: 0,
    };
    let mut directives = Vec::new();
    let mut errors = Vec::new();
    while p.peek().is_some() {
        match p.directive() {
            Ok(d) => directives.push(d),
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(directives)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;

    fn parse_src(src: &str) -> Result<Vec<Directive>, Vec<ParseError>> {
        parse(&tokenize(src).unwrap())
    }

    fn encoding_of(src: &str) -> EncodingExpr {
        match &parse_src(src).unwrap()[0].args {
            DirectiveArgs::Encoding(e) => e.clone(),
            other => panic!("not an encoding: {other:?}"),
        }
    }

    fn r(name: &str) -> Box<EncodingExpr> {
        Box::new(EncodingExpr::new(ExprKind::Ref(name.into()), Span::default()))
    }

    #[test]
    fn ngram_encoding() {
        let e = encoding_of(".ENCODING NGRAM(SYMBOLS,3);");
        assert_eq!(e.kind, ExprKind::Ngram("SYMBOLS".into(), 3));
    }

    #[test]
    fn nested_permute() {
        let e = encoding_of(".ENCODING PERMUTE(MULTIBUNDLE(BATCHBIND(CHANNELS,SIGNALS)),1);");
        let expected = ExprKind::Permute(
            Box::new(EncodingExpr::new(
                ExprKind::MultiBundle(Box::new(EncodingExpr::new(
                    ExprKind::BatchBind(r("CHANNELS"), r("SIGNALS")),
                    Span::default(),
                ))),
                Span::default(),
            )),
            1,
        );
        assert_eq!(e.kind, expected);
    }

    #[test]
    fn missing_int_argument() {
        let errs = parse_src(".CLASSES;").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].expected, vec!["integer".to_string()]);
        assert_eq!(errs[0].span.col, 9);
    }

    #[test]
    fn missing_semicolon_reported_at_last_token() {
        let errs = parse_src(".CLASSES 27\n.DIMENSIONS 64;").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].span.line, errs[0].span.col), (1, 10));
        assert!(errs[0].message.contains("missing ';'"));
    }

    #[test]
    fn missing_semicolon_at_eof() {
        let errs = parse_src(".ENCODING MULTISET(X)").unwrap_err();
        assert_eq!(errs[0].span.col, 21);
    }

    #[test]
    fn multiset_alias_and_case_insensitivity() {
        let a = encoding_of(".encoding multiset(batchBind(ID,VALUE));");
        let b = encoding_of(".ENCODING MULTIBUNDLE(BATCHBIND(ID,VALUE));");
        assert_eq!(a, b);
    }

    #[test]
    fn identifiers_are_case_sensitive() {
        let e = encoding_of(".ENCODING MULTIBUNDLE(id);");
        assert_eq!(e.kind, ExprKind::MultiBundle(r("id")));
    }

    #[test]
    fn embedding_groups() {
        let ds = parse_src(".WEIGHT_EMBED (VALUE LEVEL 100);\n.EMBEDDING (ID RANDOM 617), (P RANDOM 4) Q LEVEL 3;").unwrap();
        match &ds[1].args {
            DirectiveArgs::Embeddings(g) => {
                let names: Vec<_> = g.iter().map(|e| e.name.as_str()).collect();
                assert_eq!(names, ["ID", "P", "Q"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collects_errors_across_directives() {
        let errs = parse_src(".CLASSES;\n.BOGUS 3;\n.DIMENSIONS 8;\n.NAME;").unwrap_err();
        assert_eq!(errs.len(), 3);
        assert!(errs[1].message.contains("unknown directive .BOGUS"));
        assert_eq!(errs[1].span.line, 2);
    }

    #[test]
    fn unknown_combinator() {
        let errs = parse_src(".ENCODING FOO(A);").unwrap_err();
        assert!(errs[0].message.contains("unknown encoding combinator"));
    }

    #[test]
    fn comments_are_skipped() {
        let ds = parse_src("// header\n.NAME X; // trailing\n// .CLASSES 3;\n").unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn quoted_name() {
        let ds = parse_src(".NAME \"voice\";").unwrap();
        assert!(matches!(&ds[0].args, DirectiveArgs::Word(w, _) if w == "voice"));
    }
}
