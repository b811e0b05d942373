use std::fmt;

use super::lexer::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DirectiveName {
    Name,
    WeightEmbed,
    Embedding,
    InputDim,
    Encoding,
    Classes,
    Type,
    Dimensions,
    TrainSize,
    TestSize,
    NumThreads,
    VectorSize,
    Debug,
    Seed,
}

impl DirectiveName {
    pub const REQUIRED: [DirectiveName; 8] = [
        DirectiveName::Name,
        DirectiveName::WeightEmbed,
        DirectiveName::InputDim,
        DirectiveName::Encoding,
        DirectiveName::Classes,
        DirectiveName::Dimensions,
        DirectiveName::TrainSize,
        DirectiveName::TestSize,
    ];

    /// Case-insensitive lookup of a directive lexeme without its leading dot.
    /// `EMBEDDINGS` is accepted as a spelling of `EMBEDDING`.
    pub fn lookup(word: &str) -> Option<Self> {
        let upper = word.to_ascii_uppercase();
        Some(match upper.as_str() {
            "NAME" => Self::Name,
            "WEIGHT_EMBED" => Self::WeightEmbed,
            "EMBEDDING" | "EMBEDDINGS" => Self::Embedding,
            "INPUT_DIM" => Self::InputDim,
            "ENCODING" => Self::Encoding,
            "CLASSES" => Self::Classes,
            "TYPE" => Self::Type,
            "DIMENSIONS" => Self::Dimensions,
            "TRAIN_SIZE" => Self::TrainSize,
            "TEST_SIZE" => Self::TestSize,
            "NUM_THREADS" => Self::NumThreads,
            "VECTOR_SIZE" => Self::VectorSize,
            "DEBUG" => Self::Debug,
            "SEED" => Self::Seed,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Name => "NAME",
            Self::WeightEmbed => "WEIGHT_EMBED",
            Self::Embedding => "EMBEDDING",
            Self::InputDim => "INPUT_DIM",
            Self::Encoding => "ENCODING",
            Self::Classes => "CLASSES",
            Self::Type => "TYPE",
            Self::Dimensions => "DIMENSIONS",
            Self::TrainSize => "TRAIN_SIZE",
            Self::TestSize => "TEST_SIZE",
            Self::NumThreads => "NUM_THREADS",
            Self::VectorSize => "VECTOR_SIZE",
            Self::Debug => "DEBUG",
            Self::Seed => "SEED",
        }
    }
}

impl fmt::Display for DirectiveName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An embedding declaration as written; the kind keyword is checked during
/// validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingDecl {
    pub name: String,
    pub kind: String,
    pub items: u64,
    pub span: Span,
    pub kind_span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectiveArgs {
    /// `.NAME`, `.TYPE`: a bare identifier or quoted string.
    Word(String, Span),
    Int(u64, Span),
    Bool(bool, Span),
    Embeddings(Vec<EmbeddingDecl>),
    Encoding(EncodingExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub name: DirectiveName,
    pub args: DirectiveArgs,
    /// Span of the directive-name token.
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingKind {
    Random,
    Level,
}

impl EmbeddingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingKind::Random => "RANDOM",
            EmbeddingKind::Level => "LEVEL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmbeddingSpec {
    pub name: String,
    pub kind: EmbeddingKind,
    pub items: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExecType {
    #[default]
    Sequential,
    Parallel,
}

/// A node of the encoding expression tree. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct EncodingExpr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for EncodingExpr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for EncodingExpr {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Ref(String),
    Bind(Box<EncodingExpr>, Box<EncodingExpr>),
    Bundle(Box<EncodingExpr>, Box<EncodingExpr>),
    BatchBind(Box<EncodingExpr>, Box<EncodingExpr>),
    MultiBundle(Box<EncodingExpr>),
    Ngram(String, u64),
    Permute(Box<EncodingExpr>, u64),
    HashTable(String, String),
}

impl EncodingExpr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Every embedding name referenced by this expression, with the span of
    /// the node that references it, in left-to-right order.
    pub fn references(&self) -> Vec<(&str, Span)> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<(&'a str, Span)>) {
        match &self.kind {
            ExprKind::Ref(name) | ExprKind::Ngram(name, _) => out.push((name, self.span)),
            ExprKind::HashTable(k, v) => {
                out.push((k, self.span));
                out.push((v, self.span));
            }
            ExprKind::Bind(a, b) | ExprKind::Bundle(a, b) | ExprKind::BatchBind(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            ExprKind::MultiBundle(x) | ExprKind::Permute(x, _) => x.collect_refs(out),
        }
    }
}

impl fmt::Display for EncodingExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Ref(name) => f.write_str(name),
            ExprKind::Bind(a, b) => write!(f, "BIND({a},{b})"),
            ExprKind::Bundle(a, b) => write!(f, "BUNDLE({a},{b})"),
            ExprKind::BatchBind(a, b) => write!(f, "BATCHBIND({a},{b})"),
            ExprKind::MultiBundle(x) => write!(f, "MULTIBUNDLE({x})"),
            ExprKind::Ngram(name, n) => write!(f, "NGRAM({name},{n})"),
            ExprKind::Permute(x, k) => write!(f, "PERMUTE({x},{k})"),
            ExprKind::HashTable(k, v) => write!(f, "HASHTABLE({k},{v})"),
        }
    }
}

/// A validated description with all defaults applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramDescription {
    pub name: String,
    pub weight_embed: EmbeddingSpec,
    pub embeddings: Vec<EmbeddingSpec>,
    pub input_dim: usize,
    pub encoding: EncodingExpr,
    pub classes: usize,
    pub exec_type: ExecType,
    pub dimensions: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub num_threads: usize,
    pub vector_size_bytes: usize,
    pub debug: bool,
    pub seed: u64,
}

impl ProgramDescription {
    pub const DEFAULT_SEED: u64 = 42;
    pub const DEFAULT_VECTOR_SIZE: usize = 128;

    /// All embeddings in stream order: the weight embedding first, then the
    /// `.EMBEDDING` declarations in the order they were written.
    pub fn all_embeddings(&self) -> impl Iterator<Item = &EmbeddingSpec> {
        std::iter::once(&self.weight_embed).chain(self.embeddings.iter())
    }

    pub fn embedding(&self, name: &str) -> Option<&EmbeddingSpec> {
        self.all_embeddings().find(|e| e.name == name)
    }

    pub fn is_weight(&self, name: &str) -> bool {
        self.weight_embed.name == name
    }

    /// Worker count actually used: 1 for sequential descriptions.
    pub fn effective_threads(&self) -> usize {
        match self.exec_type {
            ExecType::Sequential => 1,
            ExecType::Parallel => self.num_threads.max(1),
        }
    }

    /// Name of the emitted binary and source files.
    pub fn binary_name(&self) -> String {
        self.name.to_ascii_lowercase()
    }
}
