use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::ast::{
    Directive, DirectiveArgs, DirectiveName, EmbeddingDecl, EmbeddingKind, EmbeddingSpec,
    EncodingExpr, ExecType, ProgramDescription,
};
use super::lexer::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SemanticError {
    pub message: String,
    /// Missing-directive errors have no location.
    pub span: Option<Span>,
}

impl SemanticError {
    fn at(span: Span, message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            span: Some(span),
        }
    }
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(span) => write!(f, "{span}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn is_c_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn embedding_spec(decl: &EmbeddingDecl, errors: &mut Vec<SemanticError>) -> Option<EmbeddingSpec> {
    let kind = if decl.kind.eq_ignore_ascii_case("random") {
        EmbeddingKind::Random
    } else if decl.kind.eq_ignore_ascii_case("level") {
        EmbeddingKind::Level
    } else {
        errors.push(SemanticError::at(
            decl.kind_span,
            format!("unknown embedding kind {} (expected RANDOM or LEVEL)", decl.kind),
        ));
        return None;
    };
    if decl.items == 0 {
        errors.push(SemanticError::at(
            decl.span,
            format!("embedding {} must have at least one item", decl.name),
        ));
        return None;
    }
    if kind == EmbeddingKind::Level && decl.items < 2 {
        errors.push(SemanticError::at(
            decl.span,
            format!("LEVEL embedding {} needs at least 2 items", decl.name),
        ));
        return None;
    }
    Some(EmbeddingSpec {
        name: decl.name.clone(),
        kind,
        items: decl.items as usize,
    })
}

/// Checks a parsed directive list and builds the description, applying
/// defaults for optional directives. All violations are collected.
pub fn validate(directives: &[Directive]) -> Result<ProgramDescription, Vec<SemanticError>> {
    let mut errors = Vec::new();
    let mut seen: HashMap<DirectiveName, &Directive> = HashMap::new();
    for d in directives {
        if let Some(first) = seen.get(&d.name) {
            errors.push(SemanticError::at(
                d.span,
                format!("duplicate directive .{} (first given at {})", d.name, first.span),
            ));
        } else {
            seen.insert(d.name, d);
        }
    }
    for required in DirectiveName::REQUIRED {
        if !seen.contains_key(&required) {
            errors.push(SemanticError {
                message: format!("required directive absent: {required}"),
                span: None,
            });
        }
    }

    let int_arg = |name: DirectiveName, min: u64, errors: &mut Vec<SemanticError>| -> Option<usize> {
        let d = seen.get(&name)?;
        match d.args {
            DirectiveArgs::Int(v, span) if v < min => {
                errors.push(SemanticError::at(span, format!(".{name} must be at least {min}")));
                None
            }
            DirectiveArgs::Int(v, _) => Some(v as usize),
            _ => None,
        }
    };

    let name = seen.get(&DirectiveName::Name).and_then(|d| match &d.args {
        DirectiveArgs::Word(w, span) => {
            if is_c_identifier(w) {
                Some(w.clone())
            } else {
                errors.push(SemanticError::at(*span, format!("program name {w:?} is not a valid identifier")));
                None
            }
        }
        _ => None,
    });

    let input_dim = int_arg(DirectiveName::InputDim, 1, &mut errors);
    let classes = int_arg(DirectiveName::Classes, 2, &mut errors);
    let dimensions = int_arg(DirectiveName::Dimensions, 1, &mut errors);
    let train_size = int_arg(DirectiveName::TrainSize, 1, &mut errors);
    let test_size = int_arg(DirectiveName::TestSize, 1, &mut errors);
    let num_threads = int_arg(DirectiveName::NumThreads, 1, &mut errors);

    let vector_size = seen.get(&DirectiveName::VectorSize).and_then(|d| match d.args {
        DirectiveArgs::Int(v, span) => {
            if v == 0 || v % 4 != 0 || !v.is_power_of_two() {
                errors.push(SemanticError::at(
                    span,
                    format!(".VECTOR_SIZE must be a power of two and a multiple of 4 bytes, got {v}"),
                ));
                None
            } else {
                Some(v as usize)
            }
        }
        _ => None,
    });

    let exec_type = seen.get(&DirectiveName::Type).and_then(|d| match &d.args {
        DirectiveArgs::Word(w, span) => {
            if w.eq_ignore_ascii_case("sequential") {
                Some(ExecType::Sequential)
            } else if w.eq_ignore_ascii_case("parallel") {
                Some(ExecType::Parallel)
            } else {
                errors.push(SemanticError::at(
                    *span,
                    format!("unknown execution type {w} (expected SEQUENTIAL or PARALLEL)"),
                ));
                None
            }
        }
        _ => None,
    });

    let debug = seen.get(&DirectiveName::Debug).and_then(|d| match d.args {
        DirectiveArgs::Bool(b, _) => Some(b),
        _ => None,
    });
    let seed = seen.get(&DirectiveName::Seed).and_then(|d| match d.args {
        DirectiveArgs::Int(v, _) => Some(v),
        _ => None,
    });

    // Embeddings: the weight embedding, then declaration order.
    let mut decls: Vec<&EmbeddingDecl> = Vec::new();
    if let Some(d) = seen.get(&DirectiveName::WeightEmbed) {
        if let DirectiveArgs::Embeddings(g) = &d.args {
            decls.extend(g.iter());
        }
    }
    let weight_count = decls.len();
    if let Some(d) = seen.get(&DirectiveName::Embedding) {
        if let DirectiveArgs::Embeddings(g) = &d.args {
            decls.extend(g.iter());
        }
    }
    let mut names: HashMap<&str, Span> = HashMap::new();
    let mut specs: Vec<Option<EmbeddingSpec>> = Vec::new();
    for decl in &decls {
        if let Some(first) = names.get(decl.name.as_str()) {
            errors.push(SemanticError::at(
                decl.span,
                format!("embedding {} already declared at {first}", decl.name),
            ));
        } else {
            names.insert(&decl.name, decl.span);
        }
        specs.push(embedding_spec(decl, &mut errors));
    }

    let encoding: Option<&EncodingExpr> = seen.get(&DirectiveName::Encoding).and_then(|d| match &d.args {
        DirectiveArgs::Encoding(e) => Some(e),
        _ => None,
    });
    if let Some(expr) = encoding {
        let weight_name = decls.first().filter(|_| weight_count > 0).map(|d| d.name.as_str());
        for (name, span) in expr.references() {
            let Some(idx) = decls.iter().position(|d| d.name == name) else {
                errors.push(SemanticError::at(span, format!("unresolved embedding {name}")));
                continue;
            };
            // Non-weight embeddings are indexed by feature position.
            if Some(name) != weight_name {
                if let (Some(spec), Some(dim)) = (&specs[idx], input_dim) {
                    if spec.items < dim {
                        errors.push(SemanticError::at(
                            span,
                            format!(
                                "embedding {name} is indexed by feature position and needs at least {dim} items (has {})",
                                spec.items
                            ),
                        ));
                    }
                }
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    let mut specs = specs.into_iter().map(|s| s.expect("no errors recorded"));
    let weight_embed = specs.next().expect("WEIGHT_EMBED present");
    Ok(ProgramDescription {
        name: name.expect("NAME present"),
        weight_embed,
        embeddings: specs.collect(),
        input_dim: input_dim.expect("INPUT_DIM present"),
        encoding: encoding.expect("ENCODING present").clone(),
        classes: classes.expect("CLASSES present"),
        exec_type: exec_type.unwrap_or_default(),
        dimensions: dimensions.expect("DIMENSIONS present"),
        train_size: train_size.expect("TRAIN_SIZE present"),
        test_size: test_size.expect("TEST_SIZE present"),
        num_threads: num_threads.unwrap_or(1),
        vector_size_bytes: vector_size.unwrap_or(ProgramDescription::DEFAULT_VECTOR_SIZE),
        debug: debug.unwrap_or(false),
        seed: seed.unwrap_or(ProgramDescription::DEFAULT_SEED),
    })
}
