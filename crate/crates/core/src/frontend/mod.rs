//! `.hdcc` description language: tokenizer, parser, semantic validation and
//! a canonical pretty-printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod validate;

use std::fmt::{self, Write as _};

pub use ast::{
    Directive, DirectiveArgs, DirectiveName, EmbeddingKind, EmbeddingSpec, EncodingExpr, ExecType,
    ExprKind, ProgramDescription,
};
pub use lexer::{tokenize, LexError, Span, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use validate::{validate, SemanticError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Lex,
    Parse,
    Semantic,
    Type,
}

/// A user-facing error with an optional source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub line: Option<usize>,
    pub col: Option<usize>,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>, span: Option<Span>) -> Self {
        Self {
            kind,
            message: message.into(),
            line: span.map(|s| s.line),
            col: span.map(|s| s.col),
        }
    }

    /// Renders as `file:line:col: error: message`.
    pub fn render(&self, file: &str) -> String {
        match (self.line, self.col) {
            (Some(l), Some(c)) => format!("{file}:{l}:{c}: error: {}", self.message),
            _ => format!("{file}: error: {}", self.message),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.col) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl From<LexError> for Diagnostic {
    fn from(e: LexError) -> Self {
        Self {
            kind: DiagnosticKind::Lex,
            message: e.message,
            line: Some(e.line),
            col: Some(e.col),
        }
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        let mut message = e.message;
        if !e.expected.is_empty() && !message.starts_with("expected") {
            message = format!("{message} (expected {})", e.expected.join(" or "));
        }
        Diagnostic::new(DiagnosticKind::Parse, message, Some(e.span))
    }
}

impl From<SemanticError> for Diagnostic {
    fn from(e: SemanticError) -> Self {
        Diagnostic::new(DiagnosticKind::Semantic, e.message, e.span)
    }
}

/// Tokenize, parse and validate in one step.
pub fn parse_description(source: &str) -> Result<ProgramDescription, Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|e| vec![e.into()])?;
    let directives = parse(&tokens).map_err(|es| es.into_iter().map(Into::into).collect::<Vec<_>>())?;
    validate(&directives).map_err(|es| es.into_iter().map(Into::into).collect())
}

/// Prints a description in canonical form; every optional directive is
/// written out explicitly so re-parsing yields an equal description.
pub fn to_source(desc: &ProgramDescription) -> String {
    let mut out = String::new();
    let w = &desc.weight_embed;
    // writing to a String cannot fail
    let _ = writeln!(out, ".NAME {};", desc.name);
    let _ = writeln!(out, ".WEIGHT_EMBED ({} {} {});", w.name, w.kind.as_str(), w.items);
    if !desc.embeddings.is_empty() {
        let groups: Vec<String> = desc
            .embeddings
            .iter()
            .map(|e| format!("({} {} {})", e.name, e.kind.as_str(), e.items))
            .collect();
        let _ = writeln!(out, ".EMBEDDING {};", groups.join(", "));
    }
    let _ = writeln!(out, ".INPUT_DIM {};", desc.input_dim);
    let _ = writeln!(out, ".ENCODING {};", desc.encoding);
    let _ = writeln!(out, ".CLASSES {};", desc.classes);
    let exec = match desc.exec_type {
        ExecType::Sequential => "SEQUENTIAL",
        ExecType::Parallel => "PARALLEL",
    };
    let _ = writeln!(out, ".TYPE {exec};");
    let _ = writeln!(out, ".DIMENSIONS {};", desc.dimensions);
    let _ = writeln!(out, ".TRAIN_SIZE {};", desc.train_size);
    let _ = writeln!(out, ".TEST_SIZE {};", desc.test_size);
    let _ = writeln!(out, ".NUM_THREADS {};", desc.num_threads);
    let _ = writeln!(out, ".VECTOR_SIZE {};", desc.vector_size_bytes);
    let _ = writeln!(out, ".DEBUG {};", if desc.debug { "TRUE" } else { "FALSE" });
    let _ = writeln!(out, ".SEED {};", desc.seed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_render_with_location() {
        let errs = parse_description(".NAME X;\n.CLASSES;").unwrap_err();
        assert_eq!(errs[0].render("a.hdcc"), "a.hdcc:2:9: error: expected integer, found \";\"");
    }

    #[test]
    fn lex_errors_short_circuit() {
        let errs = parse_description(".NAME X;\n$").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, DiagnosticKind::Lex);
    }
}
