//! Interpreter for the encoding IR.
//!
//! The weight embedding is indexed by the sample (a level per real value or
//! an explicit index). Every other embedding is indexed by feature position.
//! A feature-stream element is absent when its weight feature is absent, and
//! combinators propagate absence: `BatchBind` is present only when both sides
//! are, `MultiBundle` sums the present elements and `Ngram` slides over them.

use std::borrow::Cow;
use std::collections::{HashMap, VecDeque};

use crate::frontend::ProgramDescription;
use crate::ir::{EncodingIR, NodeId, Op};

use super::{ops, weight_row, EmbeddingTable, HdcError, Hypervector, Sample, ValueRange};

/// Every embedding of a description, generated from its seed. Table `i` is
/// drawn from stream `i`: the weight embedding first, then declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    tables: Vec<EmbeddingTable>,
    index: HashMap<String, usize>,
    weight: String,
}

impl Tables {
    pub fn generate(desc: &ProgramDescription) -> Self {
        Self::with_seed(desc, desc.seed)
    }

    pub fn with_seed(desc: &ProgramDescription, seed: u64) -> Self {
        let tables: Vec<_> = desc
            .all_embeddings()
            .enumerate()
            .map(|(stream, spec)| EmbeddingTable::generate(spec, desc.dimensions, seed, stream as u64))
            .collect();
        let index = tables
            .iter()
            .enumerate()
            .map(|(i, t)| (t.spec.name.clone(), i))
            .collect();
        Self {
            tables,
            index,
            weight: desc.weight_embed.name.clone(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&EmbeddingTable> {
        self.index.get(name).map(|&i| &self.tables[i])
    }

    pub fn weight(&self) -> &EmbeddingTable {
        &self.tables[self.index[&self.weight]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &EmbeddingTable> {
        self.tables.iter()
    }
}

type Elem<'t> = Option<Cow<'t, [i32]>>;

pub struct Encoder<'a> {
    ir: &'a EncodingIR,
    tables: &'a Tables,
    range: ValueRange,
    dims: usize,
}

impl<'a> Encoder<'a> {
    pub fn new(ir: &'a EncodingIR, tables: &'a Tables, range: ValueRange) -> Self {
        let dims = tables.weight().dims;
        Self { ir, tables, range, dims }
    }

    /// Unquantized encoding of one sample.
    pub fn encode(&self, sample: &Sample) -> Result<Hypervector, HdcError> {
        if sample.len() != self.ir.input_dim() {
            return Err(HdcError::DimensionMismatch {
                expected: self.ir.input_dim(),
                got: sample.len(),
            });
        }
        Ok(self.single(self.ir.output(), sample)?.into())
    }

    fn table(&self, name: &str) -> &'a EmbeddingTable {
        self.tables.get(name).expect("IR references a generated table")
    }

    /// Element `f` of a feature stream, computed on its own.
    fn element(&self, id: NodeId, f: usize, sample: &Sample) -> Result<Elem<'a>, HdcError> {
        Ok(match &self.ir.node(id).op {
            Op::LoadEmbedding(name) => {
                let t = self.table(name);
                if t.spec.name == self.tables.weight {
                    weight_row(t, sample, f, self.range)?.map(|r| Cow::Borrowed(t.row(r)))
                } else {
                    Some(Cow::Borrowed(t.row(f)))
                }
            }
            Op::BatchBind(a, b) => {
                let ea = self.element(*a, f, sample)?;
                let eb = self.element(*b, f, sample)?;
                match (ea, eb) {
                    (Some(x), Some(y)) => Some(Cow::Owned(x.iter().zip(y.iter()).map(|(p, q)| p * q).collect())),
                    _ => None,
                }
            }
            Op::Permute(x, k) => self
                .element(*x, f, sample)?
                .map(|v| Cow::Owned(ops::permute(&v, *k).into_inner())),
            op => unreachable!("{} is not a feature stream", op.name()),
        })
    }

    /// Every element of a feature stream, each computed from its operands'
    /// fully materialized streams.
    fn materialize(&self, id: NodeId, sample: &Sample) -> Result<Vec<Elem<'a>>, HdcError> {
        let rows = self.ir.input_dim();
        Ok(match &self.ir.node(id).op {
            Op::LoadEmbedding(_) => (0..rows)
                .map(|f| self.element(id, f, sample))
                .collect::<Result<_, _>>()?,
            Op::BatchBind(a, b) => {
                let ma = self.materialize(*a, sample)?;
                let mb = self.materialize(*b, sample)?;
                ma.into_iter()
                    .zip(mb)
                    .map(|pair| match pair {
                        (Some(x), Some(y)) => Some(Cow::Owned(ops::bind(&x, &y).unwrap().into_inner())),
                        _ => None,
                    })
                    .collect()
            }
            Op::Permute(x, k) => self
                .materialize(*x, sample)?
                .into_iter()
                .map(|e| e.map(|v| Cow::Owned(ops::permute(&v, *k).into_inner())))
                .collect(),
            op => unreachable!("{} is not a feature stream", op.name()),
        })
    }

    fn single(&self, id: NodeId, sample: &Sample) -> Result<Vec<i32>, HdcError> {
        let d = self.dims;
        let rows = self.ir.input_dim();
        match &self.ir.node(id).op {
            Op::FusedBindBundle(a, b) => {
                let mut acc = vec![0i32; d];
                for f in 0..rows {
                    let ea = self.element(*a, f, sample)?;
                    let Some(ea) = ea else { continue };
                    if let Some(eb) = self.element(*b, f, sample)? {
                        acc.iter_mut()
                            .zip(ea.iter().zip(eb.iter()))
                            .for_each(|(s, (x, y))| *s += x * y);
                    }
                }
                Ok(acc)
            }
            Op::FusedNgram(x, n) => {
                let n = *n;
                let mut acc = vec![0i32; d];
                let mut window: VecDeque<Cow<[i32]>> = VecDeque::with_capacity(n + 1);
                for f in 0..rows {
                    if let Some(v) = self.element(*x, f, sample)? {
                        window.push_back(v);
                        if window.len() > n {
                            window.pop_front();
                        }
                        if window.len() == n {
                            add_window(&mut acc, &window);
                        }
                    }
                }
                Ok(acc)
            }
            Op::MultiBundle(x) if matches!(self.ir.node(*x).op, Op::LoadEmbedding(_)) => {
                let mut acc = vec![0i32; d];
                for f in 0..rows {
                    if let Some(v) = self.element(*x, f, sample)? {
                        acc.iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
                    }
                }
                Ok(acc)
            }
            Op::MultiBundle(x) => {
                let present: Vec<_> = self.materialize(*x, sample)?.into_iter().flatten().collect();
                if present.is_empty() {
                    return Ok(vec![0; d]);
                }
                Ok(ops::multiset(&present)?.into_inner())
            }
            Op::Ngram(x, n) => {
                let present: Vec<_> = self.materialize(*x, sample)?.into_iter().flatten().collect();
                if present.len() < *n {
                    return Ok(vec![0; d]);
                }
                Ok(ops::ngram(&present, *n)?.into_inner())
            }
            Op::BindEW(a, b) => Ok(ops::bind(&self.single(*a, sample)?, &self.single(*b, sample)?)?.into_inner()),
            Op::BundleEW(a, b) => Ok(ops::bundle(&self.single(*a, sample)?, &self.single(*b, sample)?)?.into_inner()),
            Op::Permute(x, k) => Ok(ops::permute(&self.single(*x, sample)?, *k).into_inner()),
            op => unreachable!("{} is not a single hypervector", op.name()),
        }
    }
}

/// Adds `⊗_j ρ^{n-j-1}(w_j)` for a full window, reading rotated elements by
/// index instead of building rotated copies.
fn add_window(acc: &mut [i32], window: &VecDeque<Cow<[i32]>>) {
    let d = acc.len();
    let n = window.len();
    for (k, s) in acc.iter_mut().enumerate() {
        let mut prod = 1i32;
        for (j, w) in window.iter().enumerate() {
            let r = (n - j - 1) % d;
            prod *= w[(k + d - r) % d];
        }
        *s += prod;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_description;
    use crate::ir::{fuse, lower};

    fn setup(weight: &str, encoding: &str) -> (ProgramDescription, EncodingIR, Tables) {
        let src = format!(
            ".NAME T; .WEIGHT_EMBED {weight}; .EMBEDDING (ID RANDOM 6);
             .INPUT_DIM 6; .ENCODING {encoding}; .CLASSES 2; .DIMENSIONS 64;
             .TRAIN_SIZE 1; .TEST_SIZE 1;"
        );
        let desc = parse_description(&src).unwrap();
        let ir = lower(&desc).unwrap();
        let tables = Tables::generate(&desc);
        (desc, ir, tables)
    }

    #[test]
    fn fused_bind_bundle_matches_brute_force() {
        let (_, ir, t) = setup("(VALUE LEVEL 10)", "MULTIBUNDLE(BATCHBIND(ID,VALUE))");
        let sample = Sample::Real(vec![-1.0; 6]);
        let fused = fuse(&ir);
        let got = Encoder::new(&fused, &t, ValueRange::DEFAULT).encode(&sample).unwrap();
        let value = t.get("VALUE").unwrap();
        let id = t.get("ID").unwrap();
        let bound: Vec<_> = (0..6).map(|f| ops::bind(id.row(f), value.row(0)).unwrap()).collect();
        assert_eq!(got, ops::multiset(&bound).unwrap());
        assert_eq!(Encoder::new(&ir, &t, ValueRange::DEFAULT).encode(&sample).unwrap(), got);
    }

    #[test]
    fn ngram_composition() {
        let (_, ir, t) = setup("(SYM RANDOM 5)", "NGRAM(SYM,3)");
        let sample = Sample::Indices(vec![4, 0, 2, -1, -1, -1]);
        let expect = ops::ngram(
            &super::super::forward(t.weight(), &sample, ValueRange::DEFAULT).unwrap(),
            3,
        )
        .unwrap();
        for ir in [ir.clone(), fuse(&ir)] {
            assert_eq!(Encoder::new(&ir, &t, ValueRange::DEFAULT).encode(&sample).unwrap(), expect);
        }
    }

    #[test]
    fn short_ngram_is_zero() {
        let (_, ir, t) = setup("(SYM RANDOM 5)", "NGRAM(SYM,3)");
        let sample = Sample::Indices(vec![1, -1, 2, -1, -1, -1]);
        for ir in [ir.clone(), fuse(&ir)] {
            let e = Encoder::new(&ir, &t, ValueRange::DEFAULT).encode(&sample).unwrap();
            assert!(e.iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn permute_zero_is_identity() {
        let (_, a, t) = setup("(VALUE LEVEL 10)", "MULTIBUNDLE(BATCHBIND(ID,VALUE))");
        let (_, b, _) = setup("(VALUE LEVEL 10)", "PERMUTE(MULTIBUNDLE(BATCHBIND(ID,VALUE)),0)");
        let s = Sample::Real(vec![0.3, -0.2, 0.9, 1.0, -1.0, 0.0]);
        let r = ValueRange::DEFAULT;
        assert_eq!(
            Encoder::new(&a, &t, r).encode(&s).unwrap(),
            Encoder::new(&b, &t, r).encode(&s).unwrap()
        );
    }

    #[test]
    fn sentinel_skips_bound_pairs() {
        let (_, ir, t) = setup("(SYM RANDOM 5)", "HASHTABLE(ID,SYM)");
        let s = Sample::Indices(vec![1, -1, 3, -1, -1, -1]);
        let id = t.get("ID").unwrap();
        let sym = t.get("SYM").unwrap();
        let expect = ops::hash_table(&[id.row(0), id.row(2)], &[sym.row(1), sym.row(3)]).unwrap();
        assert_eq!(Encoder::new(&fuse(&ir), &t, ValueRange::DEFAULT).encode(&s).unwrap(), expect);
    }

    #[test]
    fn stream_ids_follow_declaration_order() {
        let (desc, _, t) = setup("(VALUE LEVEL 10)", "MULTIBUNDLE(BATCHBIND(ID,VALUE))");
        assert_eq!(t.get("VALUE").unwrap().stream, 0);
        assert_eq!(t.get("ID").unwrap().stream, 1);
        assert_eq!(Tables::generate(&desc), t);
    }
}
