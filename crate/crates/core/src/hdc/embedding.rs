use crate::frontend::{EmbeddingKind, EmbeddingSpec};

use super::Rng;

/// Basis hypervectors of one embedding, `items` rows of `dims` bipolar values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingTable {
    pub spec: EmbeddingSpec,
    pub dims: usize,
    /// Stream id the rows were generated from (declaration order).
    pub stream: u64,
    rows: Vec<i32>,
}

impl EmbeddingTable {
    pub fn items(&self) -> usize {
        self.spec.items
    }

    pub fn row(&self, i: usize) -> &[i32] {
        &self.rows[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i32]> {
        self.rows.chunks_exact(self.dims)
    }

    /// Builds the table named by `spec` from stream `stream` of `seed`.
    pub fn generate(spec: &EmbeddingSpec, dims: usize, seed: u64, stream: u64) -> Self {
        let mut rng = Rng::for_stream(seed, stream);
        let mut table = match spec.kind {
            EmbeddingKind::Random => random_embedding(spec.items, dims, &mut rng),
            EmbeddingKind::Level => level_embedding(spec.items, dims, &mut rng),
        };
        table.spec = spec.clone();
        table.stream = stream;
        table
    }
}

fn anonymous(kind: EmbeddingKind, items: usize, dims: usize, rows: Vec<i32>) -> EmbeddingTable {
    EmbeddingTable {
        spec: EmbeddingSpec {
            name: String::new(),
            kind,
            items,
        },
        dims,
        stream: 0,
        rows,
    }
}

/// `items` independent uniformly random bipolar rows, one draw per element.
pub fn random_embedding(items: usize, dims: usize, rng: &mut Rng) -> EmbeddingTable {
    let rows = (0..items * dims).map(|_| rng.next_bipolar()).collect();
    anonymous(EmbeddingKind::Random, items, dims, rows)
}

/// Number of leading elements row `i` takes from the target vector:
/// `round(i * dims / (items - 1))`, halves rounded up.
pub fn level_prefix(i: usize, items: usize, dims: usize) -> usize {
    let span = (items - 1) as u128;
    ((2 * i as u128 * dims as u128 + span) / (2 * span)) as usize
}

/// Linearly correlated rows between a random base (row 0) and a random
/// target (last row). Row `i` copies its first `level_prefix(i)` elements
/// from the target and the rest from the base.
pub fn level_embedding(items: usize, dims: usize, rng: &mut Rng) -> EmbeddingTable {
    assert!(items >= 2, "level embeddings need at least two items");
    let base = random_embedding(1, dims, rng).rows;
    let target = random_embedding(1, dims, rng).rows;
    level_from_endpoints(items, &base, &target)
}

pub(crate) fn level_from_endpoints(items: usize, base: &[i32], target: &[i32]) -> EmbeddingTable {
    let dims = base.len();
    let mut rows = Vec::with_capacity(items * dims);
    for i in 0..items {
        let cut = level_prefix(i, items, dims);
        rows.extend_from_slice(&target[..cut]);
        rows.extend_from_slice(&base[cut..]);
    }
    anonymous(EmbeddingKind::Level, items, dims, rows)
}
