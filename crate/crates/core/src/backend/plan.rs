use thiserror::Error;

use crate::frontend::{EmbeddingKind, ExecType, ProgramDescription};
use crate::ir::{EncodingIR, NodeId, Op};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("VECTOR_SIZE {0} must be a power of two and a multiple of 4")]
    Config(usize),
    #[error("IR is not fused: node %{0} ({1}) has no kernel")]
    NotFused(NodeId, &'static str),
    #[error("node %{0}: FusedNgram needs an embedding operand")]
    NgramOperand(NodeId),
    #[error("embedding {0} has no table")]
    MissingTable(String),
    #[error(transparent)]
    Template(#[from] super::TemplateError),
}

/// How a feature-stream load picks its row for feature `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadKind {
    /// Weight LEVEL table: row `map_range(x[f])`.
    Level,
    /// Weight RANDOM table: row `x[f]`, absent for `-1`.
    Index,
    /// Any other table: row `f`.
    Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kernel {
    Load { table: usize, items: usize, kind: LoadKind },
    BatchBind(NodeId, NodeId),
    PermuteStream(NodeId, usize),
    FusedBindBundle(NodeId, NodeId),
    FusedNgram(NodeId, usize),
    MultiBundleStream(NodeId),
    MultiBundleMaterialized(NodeId),
    Bind(NodeId, NodeId),
    Bundle(NodeId, NodeId),
    PermuteSingle(NodeId, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodegenPlan {
    /// 32-bit elements per SIMD vector.
    pub lanes: usize,
    pub num_batches: usize,
    pub padded_dims: usize,
    pub exec_type: ExecType,
    pub threads: usize,
    /// One kernel per IR node, operands first.
    pub schedule: Vec<Kernel>,
    pub output: NodeId,
}

pub fn lanes_for(vector_size_bytes: usize) -> Result<usize, BackendError> {
    if vector_size_bytes < 4 || vector_size_bytes % 4 != 0 || !vector_size_bytes.is_power_of_two() {
        return Err(BackendError::Config(vector_size_bytes));
    }
    Ok(vector_size_bytes / 4)
}

/// Assigns a kernel to every node of a fused IR.
pub fn plan(ir: &EncodingIR, desc: &ProgramDescription) -> Result<CodegenPlan, BackendError> {
    let lanes = lanes_for(desc.vector_size_bytes)?;
    let padded_dims = desc.dimensions.div_ceil(lanes) * lanes;
    let mut schedule = Vec::with_capacity(ir.nodes().len());
    for (id, node) in ir.nodes().iter().enumerate() {
        let is_load = |x: NodeId| matches!(ir.node(x).op, Op::LoadEmbedding(_));
        let kernel = match node.op {
            Op::LoadEmbedding(ref name) => {
                let table = desc
                    .all_embeddings()
                    .position(|e| &e.name == name)
                    .ok_or_else(|| BackendError::MissingTable(name.clone()))?;
                let spec = desc.embedding(name).expect("position found");
                let kind = match (desc.is_weight(name), spec.kind) {
                    (true, EmbeddingKind::Level) => LoadKind::Level,
                    (true, EmbeddingKind::Random) => LoadKind::Index,
                    (false, _) => LoadKind::Position,
                };
                Kernel::Load {
                    table,
                    items: spec.items,
                    kind,
                }
            }
            Op::BatchBind(a, b) => Kernel::BatchBind(a, b),
            Op::Permute(x, k) if node.shape == crate::ir::ShapeType::FeatureStream => Kernel::PermuteStream(x, k),
            Op::Permute(x, k) => Kernel::PermuteSingle(x, k),
            Op::FusedBindBundle(a, b) => Kernel::FusedBindBundle(a, b),
            Op::FusedNgram(x, n) if is_load(x) => Kernel::FusedNgram(x, n),
            Op::FusedNgram(..) => return Err(BackendError::NgramOperand(id)),
            Op::MultiBundle(x) if matches!(ir.node(x).op, Op::BatchBind(..)) => {
                return Err(BackendError::NotFused(id, "MultiBundle"))
            }
            Op::MultiBundle(x) if is_load(x) => Kernel::MultiBundleStream(x),
            Op::MultiBundle(x) => Kernel::MultiBundleMaterialized(x),
            Op::BindEW(a, b) => Kernel::Bind(a, b),
            Op::BundleEW(a, b) => Kernel::Bundle(a, b),
            Op::Ngram(..) => return Err(BackendError::NotFused(id, "Ngram")),
        };
        schedule.push(kernel);
    }
    Ok(CodegenPlan {
        lanes,
        num_batches: padded_dims / lanes,
        padded_dims,
        exec_type: desc.exec_type,
        threads: desc.effective_threads(),
        schedule,
        output: ir.output(),
    })
}
