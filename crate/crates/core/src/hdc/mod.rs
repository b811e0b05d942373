//! Reference semantics: basis generation, MAP operations, encoding,
//! training and inference. The emitted C reproduces these bit for bit.

pub mod embedding;
pub mod encode;
pub mod functions;
pub mod memory;
pub mod model;
pub mod ops;
pub mod rng;

use thiserror::Error;

pub use embedding::{level_embedding, random_embedding, EmbeddingTable};
pub use encode::{Encoder, Tables};
pub use functions::{argmax, linear, map_range, ValueRange};
pub use memory::AssociativeMemory;
pub use model::Model;
pub use ops::{bind, bundle, cosine, dot, hard_quantize, hash_table, multiset, ngram, permute, Hypervector};
pub use rng::Rng;

use crate::frontend::EmbeddingKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HdcError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("{keys} keys but {values} values")]
    CountMismatch { keys: usize, values: usize },
    #[error("n-gram window {n} does not fit a sequence of {len}")]
    NgramWindow { n: usize, len: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("feature {position}: index {index} outside [-1, {items})")]
    IndexError { position: usize, index: i64, items: usize },
    #[error("sample kind does not match a {0} weight embedding")]
    SampleKind(&'static str),
    #[error("invalid value range [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },
    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
}

/// One input row: reals for a LEVEL weight embedding, integer indices for a
/// RANDOM one (`-1` marks an absent feature).
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Real(Vec<f64>),
    Indices(Vec<i64>),
}

impl Sample {
    pub fn len(&self) -> usize {
        match self {
            Sample::Real(v) => v.len(),
            Sample::Indices(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Weight-table row for feature `position`, or `None` when the feature is
/// absent (sentinel or past the end of the sample).
pub fn weight_row(
    table: &EmbeddingTable,
    sample: &Sample,
    position: usize,
    range: ValueRange,
) -> Result<Option<usize>, HdcError> {
    match (table.spec.kind, sample) {
        (EmbeddingKind::Level, Sample::Real(v)) => {
            Ok(v.get(position).map(|&x| map_range(x, range, table.items())))
        }
        (EmbeddingKind::Random, Sample::Indices(v)) => match v.get(position) {
            None | Some(-1) => Ok(None),
            Some(&i) if i < -1 || i >= table.items() as i64 => Err(HdcError::IndexError {
                position,
                index: i,
                items: table.items(),
            }),
            Some(&i) => Ok(Some(i as usize)),
        },
        (kind, _) => Err(HdcError::SampleKind(kind.as_str())),
    }
}

/// Hypervectors selected by each present feature, in feature order.
pub fn forward(table: &EmbeddingTable, sample: &Sample, range: ValueRange) -> Result<Vec<Hypervector>, HdcError> {
    let mut out = Vec::with_capacity(sample.len());
    for position in 0..sample.len() {
        if let Some(r) = weight_row(table, sample, position, range)? {
            out.push(Hypervector::from_slice(table.row(r)));
        }
    }
    Ok(out)
}
