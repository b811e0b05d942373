//! Shape-typed encoding IR.
//!
//! Nodes are stored in topological order (operands before users) and the
//! output is always the last node. Embedding loads are shared.

mod dump;
mod fuse;
mod memory;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::frontend::{EncodingExpr, ExprKind, ProgramDescription, Span};

pub use dump::dump;
pub use fuse::fuse;
pub use memory::{plan_memory, BufferClass, MemoryPlan};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeType {
    /// One hypervector per input feature position.
    FeatureStream,
    /// A single hypervector.
    SingleHV,
}

impl fmt::Display for ShapeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeType::FeatureStream => "FeatureStream",
            ShapeType::SingleHV => "SingleHV",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    LoadEmbedding(String),
    BindEW(NodeId, NodeId),
    BundleEW(NodeId, NodeId),
    BatchBind(NodeId, NodeId),
    MultiBundle(NodeId),
    Ngram(NodeId, usize),
    Permute(NodeId, usize),
    FusedBindBundle(NodeId, NodeId),
    FusedNgram(NodeId, usize),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::LoadEmbedding(_) => "LoadEmbedding",
            Op::BindEW(..) => "BindEW",
            Op::BundleEW(..) => "BundleEW",
            Op::BatchBind(..) => "BatchBind",
            Op::MultiBundle(_) => "MultiBundle",
            Op::Ngram(..) => "Ngram",
            Op::Permute(..) => "Permute",
            Op::FusedBindBundle(..) => "FusedBindBundle",
            Op::FusedNgram(..) => "FusedNgram",
        }
    }

    pub fn operands(&self) -> Vec<NodeId> {
        match *self {
            Op::LoadEmbedding(_) => vec![],
            Op::BindEW(a, b) | Op::BundleEW(a, b) | Op::BatchBind(a, b) | Op::FusedBindBundle(a, b) => {
                vec![a, b]
            }
            Op::MultiBundle(x) | Op::Ngram(x, _) | Op::Permute(x, _) | Op::FusedNgram(x, _) => vec![x],
        }
    }

    pub fn is_fused(&self) -> bool {
        matches!(self, Op::FusedBindBundle(..) | Op::FusedNgram(..))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub op: Op,
    pub shape: ShapeType,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodingIR {
    nodes: Vec<Node>,
    input_dim: usize,
}

impl EncodingIR {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn output(&self) -> NodeId {
        self.nodes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn is_fused(&self) -> bool {
        !self
            .nodes
            .iter()
            .any(|n| matches!(n.op, Op::Ngram(..)) || self.is_fusible_bundle(&n.op))
    }

    fn is_fusible_bundle(&self, op: &Op) -> bool {
        matches!(op, Op::MultiBundle(x) if matches!(self.nodes[*x].op, Op::BatchBind(..)))
    }

    /// Names of the embeddings loaded by this IR, in node order.
    pub fn loaded_embeddings(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().filter_map(|n| match &n.op {
            Op::LoadEmbedding(name) => Some(name.as_str()),
            _ => None,
        })
    }

    /// Builds an IR from nodes already in topological order, inferring and
    /// checking shapes. Used by rewrites and by tests that construct IRs.
    pub fn from_ops(ops: Vec<Op>, input_dim: usize) -> Result<Self, String> {
        let mut nodes: Vec<Node> = Vec::with_capacity(ops.len());
        for (id, op) in ops.into_iter().enumerate() {
            if op.operands().iter().any(|&o| o >= id) {
                return Err(format!("%{id} uses an operand that is not defined before it"));
            }
            let shape_of = |i: NodeId| nodes[i].shape;
            let fs = ShapeType::FeatureStream;
            let shv = ShapeType::SingleHV;
            let (want, shape) = match &op {
                Op::LoadEmbedding(_) => (vec![], fs),
                Op::BatchBind(a, b) => (vec![(*a, fs), (*b, fs)], fs),
                Op::FusedBindBundle(a, b) => (vec![(*a, fs), (*b, fs)], shv),
                Op::BindEW(a, b) | Op::BundleEW(a, b) => (vec![(*a, shv), (*b, shv)], shv),
                Op::MultiBundle(x) | Op::Ngram(x, _) | Op::FusedNgram(x, _) => (vec![(*x, fs)], shv),
                Op::Permute(x, _) => (vec![], shape_of(*x)),
            };
            for (o, expected) in want {
                if shape_of(o) != expected {
                    return Err(format!(
                        "%{id} = {} expects {expected} operand, %{o} is {}",
                        op.name(),
                        shape_of(o)
                    ));
                }
            }
            nodes.push(Node { op, shape });
        }
        match nodes.last() {
            None => Err("empty IR".into()),
            Some(n) if n.shape != ShapeType::SingleHV => {
                Err(format!("output is {}, expected SingleHV", n.shape))
            }
            _ => Ok(Self { nodes, input_dim }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{node} expects a {expected} operand, found {actual}")]
    Operand {
        node: &'static str,
        expected: ShapeType,
        actual: ShapeType,
        span: Span,
    },
    #[error("encoding output {node} has type {actual}, expected SingleHV")]
    Output {
        node: &'static str,
        actual: ShapeType,
        span: Span,
    },
    #[error("NGRAM window {n} must be between 1 and INPUT_DIM ({input_dim})")]
    NgramWindow { n: u64, input_dim: usize, span: Span },
    #[error("unresolved embedding {name}")]
    Unresolved { name: String, span: Span },
}

impl TypeError {
    pub fn span(&self) -> Span {
        match self {
            TypeError::Operand { span, .. }
            | TypeError::Output { span, .. }
            | TypeError::NgramWindow { span, .. }
            | TypeError::Unresolved { span, .. } => *span,
        }
    }
}

struct Lowering<'a> {
    desc: &'a ProgramDescription,
    nodes: Vec<Node>,
    loads: HashMap<String, NodeId>,
}

impl Lowering<'_> {
    fn push(&mut self, op: Op, shape: ShapeType) -> NodeId {
        self.nodes.push(Node { op, shape });
        self.nodes.len() - 1
    }

    fn load(&mut self, name: &str, span: Span) -> Result<NodeId, TypeError> {
        if let Some(&id) = self.loads.get(name) {
            return Ok(id);
        }
        if self.desc.embedding(name).is_none() {
            return Err(TypeError::Unresolved {
                name: name.to_string(),
                span,
            });
        }
        let id = self.push(Op::LoadEmbedding(name.to_string()), ShapeType::FeatureStream);
        self.loads.insert(name.to_string(), id);
        Ok(id)
    }

    fn expect(&self, id: NodeId, node: &'static str, expected: ShapeType, span: Span) -> Result<(), TypeError> {
        let actual = self.nodes[id].shape;
        if actual != expected {
            return Err(TypeError::Operand {
                node,
                expected,
                actual,
                span,
            });
        }
        Ok(())
    }

    fn binary(
        &mut self,
        a: &EncodingExpr,
        b: &EncodingExpr,
        shape: ShapeType,
        make: fn(NodeId, NodeId) -> Op,
    ) -> Result<NodeId, TypeError> {
        let ia = self.expr(a)?;
        let ib = self.expr(b)?;
        let op = make(ia, ib);
        let operand = if matches!(op, Op::BatchBind(..)) {
            ShapeType::FeatureStream
        } else {
            ShapeType::SingleHV
        };
        self.expect(ia, op.name(), operand, a.span)?;
        self.expect(ib, op.name(), operand, b.span)?;
        Ok(self.push(op, shape))
    }

    fn expr(&mut self, e: &EncodingExpr) -> Result<NodeId, TypeError> {
        use ShapeType::*;
        match &e.kind {
            ExprKind::Ref(name) => self.load(name, e.span),
            ExprKind::Bind(a, b) => self.binary(a, b, SingleHV, Op::BindEW),
            ExprKind::Bundle(a, b) => self.binary(a, b, SingleHV, Op::BundleEW),
            ExprKind::BatchBind(a, b) => self.binary(a, b, FeatureStream, Op::BatchBind),
            ExprKind::MultiBundle(x) => {
                let ix = self.expr(x)?;
                self.expect(ix, "MultiBundle", FeatureStream, x.span)?;
                Ok(self.push(Op::MultiBundle(ix), SingleHV))
            }
            ExprKind::HashTable(k, v) => {
                let ik = self.load(k, e.span)?;
                let iv = self.load(v, e.span)?;
                let bb = self.push(Op::BatchBind(ik, iv), FeatureStream);
                Ok(self.push(Op::MultiBundle(bb), SingleHV))
            }
            ExprKind::Ngram(name, n) => {
                if *n < 1 || *n > self.desc.input_dim as u64 {
                    return Err(TypeError::NgramWindow {
                        n: *n,
                        input_dim: self.desc.input_dim,
                        span: e.span,
                    });
                }
                let ix = self.load(name, e.span)?;
                Ok(self.push(Op::Ngram(ix, *n as usize), SingleHV))
            }
            ExprKind::Permute(x, k) => {
                let ix = self.expr(x)?;
                let shape = self.nodes[ix].shape;
                Ok(self.push(Op::Permute(ix, *k as usize), shape))
            }
        }
    }
}

/// Lowers the encoding of `desc` into a type-checked IR. `HASHTABLE(k,v)`
/// becomes `MultiBundle(BatchBind(k,v))`.
pub fn lower(desc: &ProgramDescription) -> Result<EncodingIR, TypeError> {
    let mut l = Lowering {
        desc,
        nodes: Vec::new(),
        loads: HashMap::new(),
    };
    let out = l.expr(&desc.encoding)?;
    let node = &l.nodes[out];
    if node.shape != ShapeType::SingleHV {
        return Err(TypeError::Output {
            node: node.op.name(),
            actual: node.shape,
            span: desc.encoding.span,
        });
    }
    Ok(EncodingIR {
        nodes: l.nodes,
        input_dim: desc.input_dim,
    })
}
