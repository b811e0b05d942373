use std::collections::HashMap;

use super::{EncodingIR, Node, NodeId, Op};

/// Rewrites `MultiBundle(BatchBind(a, b))` to `FusedBindBundle(a, b)` and
/// every `Ngram` to `FusedNgram`, bottom-up. Nodes are renumbered in post
/// order from the output so the result stays topologically sorted.
pub fn fuse(ir: &EncodingIR) -> EncodingIR {
    let mut b = Rebuild {
        src: ir,
        nodes: Vec::new(),
        memo: HashMap::new(),
    };
    b.visit(ir.output());
    EncodingIR {
        nodes: b.nodes,
        input_dim: ir.input_dim,
    }
}

struct Rebuild<'a> {
    src: &'a EncodingIR,
    nodes: Vec<Node>,
    memo: HashMap<NodeId, NodeId>,
}

impl Rebuild<'_> {
    fn visit(&mut self, id: NodeId) -> NodeId {
        if let Some(&new) = self.memo.get(&id) {
            return new;
        }
        let node = self.src.node(id);
        let op = match node.op {
            Op::LoadEmbedding(ref name) => Op::LoadEmbedding(name.clone()),
            Op::MultiBundle(x) => match self.src.node(x).op {
                Op::BatchBind(a, b) => {
                    let (a, b) = (self.visit(a), self.visit(b));
                    Op::FusedBindBundle(a, b)
                }
                _ => Op::MultiBundle(self.visit(x)),
            },
            Op::Ngram(x, n) | Op::FusedNgram(x, n) => Op::FusedNgram(self.visit(x), n),
            Op::BindEW(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::BindEW(a, b)
            }
            Op::BundleEW(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::BundleEW(a, b)
            }
            Op::BatchBind(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::BatchBind(a, b)
            }
            Op::FusedBindBundle(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::FusedBindBundle(a, b)
            }
            Op::Permute(x, k) => Op::Permute(self.visit(x), k),
        };
        self.nodes.push(Node { op, shape: node.shape });
        let new = self.nodes.len() - 1;
        self.memo.insert(id, new);
        new
    }
}
