use std::fmt::Write as _;

use super::{EncodingIR, Op};

/// One line per node in index order: `%id = OP(args) : ShapeType`.
pub fn dump(ir: &EncodingIR) -> String {
    let mut out = String::new();
    for (id, node) in ir.nodes().iter().enumerate() {
        let args = match &node.op {
            Op::LoadEmbedding(name) => name.clone(),
            Op::BindEW(a, b) | Op::BundleEW(a, b) | Op::BatchBind(a, b) | Op::FusedBindBundle(a, b) => {
                format!("%{a}, %{b}")
            }
            Op::MultiBundle(x) => format!("%{x}"),
            Op::Ngram(x, k) | Op::Permute(x, k) | Op::FusedNgram(x, k) => format!("%{x}, {k}"),
        };
        let _ = writeln!(out, "%{id} = {}({args}) : {}", node.op.name(), node.shape);
    }
    out
}
