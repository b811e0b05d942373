//! Buffer-liveness model of an encoding evaluation, in hypervector elements.
//!
//! Feature-stream values are either streamed (one feature's hypervector at a
//! time) or materialized (all `input_dim` of them). Single hypervectors live
//! in accumulators of `dimensions` elements.

use crate::frontend::ProgramDescription;

use super::{EncodingIR, NodeId, Op, ShapeType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BufferClass {
    /// One hypervector of `dimensions` elements.
    ConstantAccumulator,
    /// A per-feature value of `dimensions` elements, recomputed per feature.
    StreamingTemporary,
    /// `input_dim × dimensions` elements.
    Materialized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryPlan {
    pub buffers: Vec<BufferClass>,
    pub peak_elements: usize,
}

impl MemoryPlan {
    pub fn buffer_elements(&self, id: NodeId, desc: &ProgramDescription) -> usize {
        match self.buffers[id] {
            BufferClass::Materialized => desc.input_dim * desc.dimensions,
            _ => desc.dimensions,
        }
    }
}

struct Planner<'a> {
    ir: &'a EncodingIR,
    d: usize,
    rows: usize,
    buffers: Vec<Option<BufferClass>>,
}

/// Peak live elements while computing a value, and elements it holds after.
type Cost = (usize, usize);

impl Planner<'_> {
    fn mark(&mut self, id: NodeId, class: BufferClass) {
        let slot = &mut self.buffers[id];
        *slot = Some(slot.map_or(class, |c| c.max(class)));
    }

    /// Peak while evaluating `a` then `b`, before any result exists.
    fn pair(a: Cost, b: Cost) -> usize {
        a.0.max(a.1 + b.0)
    }

    /// Binary node writing a fresh `out`-element result.
    fn binary(a: Cost, b: Cost, out: usize) -> Cost {
        (Self::pair(a, b).max(a.1 + b.1 + out), out)
    }

    /// Per-feature evaluation of a feature stream.
    fn stream(&mut self, id: NodeId) -> Cost {
        self.mark(id, BufferClass::StreamingTemporary);
        let d = self.d;
        match self.ir.node(id).op {
            Op::LoadEmbedding(_) => (d, d),
            Op::BatchBind(a, b) => {
                let (ca, cb) = (self.stream(a), self.stream(b));
                Self::binary(ca, cb, d)
            }
            Op::Permute(x, _) => {
                let c = self.stream(x);
                (c.0.max(c.1 + d), d)
            }
            ref op => unreachable!("{} is not a feature stream", op.name()),
        }
    }

    /// Whole-stream evaluation of a feature stream.
    fn materialize(&mut self, id: NodeId) -> Cost {
        self.mark(id, BufferClass::Materialized);
        let m = self.rows * self.d;
        match self.ir.node(id).op {
            Op::LoadEmbedding(_) => (m, m),
            Op::BatchBind(a, b) => {
                let (ca, cb) = (self.materialize(a), self.materialize(b));
                Self::binary(ca, cb, m)
            }
            Op::Permute(x, _) => {
                let c = self.materialize(x);
                (c.0.max(c.1 + m), m)
            }
            ref op => unreachable!("{} is not a feature stream", op.name()),
        }
    }

    fn single(&mut self, id: NodeId) -> Cost {
        self.mark(id, BufferClass::ConstantAccumulator);
        let d = self.d;
        match self.ir.node(id).op {
            Op::FusedBindBundle(a, b) => {
                // products go straight into the accumulator
                let (ca, cb) = (self.stream(a), self.stream(b));
                (d + Self::pair(ca, cb), d)
            }
            Op::FusedNgram(x, _) => {
                // accumulator, window term and one rotated operand
                let c = self.stream(x);
                (2 * d + c.0, d)
            }
            Op::MultiBundle(x) if matches!(self.ir.node(x).op, Op::LoadEmbedding(_)) => {
                let c = self.stream(x);
                (d + c.0, d)
            }
            // Accumulators are allocated before their operand is evaluated,
            // as in the fused kernels.
            Op::MultiBundle(x) => {
                let c = self.materialize(x);
                (d + c.0, d)
            }
            Op::Ngram(x, n) => {
                let c = self.materialize(x);
                (d + c.0.max(c.1 + n * self.rows * d), d)
            }
            Op::BindEW(a, b) | Op::BundleEW(a, b) => {
                let (ca, cb) = (self.single(a), self.single(b));
                Self::binary(ca, cb, d)
            }
            Op::Permute(x, _) => {
                let c = self.single(x);
                (c.0.max(c.1 + d), d)
            }
            ref op => unreachable!("{} is not a single hypervector", op.name()),
        }
    }
}

/// Buffer classes and peak element count for evaluating one sample.
pub fn plan_memory(ir: &EncodingIR, desc: &ProgramDescription) -> MemoryPlan {
    let mut p = Planner {
        ir,
        d: desc.dimensions,
        rows: desc.input_dim,
        buffers: vec![None; ir.nodes().len()],
    };
    debug_assert_eq!(ir.node(ir.output()).shape, ShapeType::SingleHV);
    let (peak, _) = p.single(ir.output());
    MemoryPlan {
        buffers: p
            .buffers
            .into_iter()
            .map(|b| b.unwrap_or(BufferClass::StreamingTemporary))
            .collect(),
        peak_elements: peak,
    }
}
