use super::HdcError;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Class prototypes accumulated from quantized encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociativeMemory {
    classes: usize,
    dims: usize,
    counts: Vec<i64>,
    samples_per_class: Vec<u64>,
    norms: Option<Vec<f64>>,
    norm_rows: Option<Vec<f64>>,
}

impl AssociativeMemory {
    pub fn new(classes: usize, dims: usize) -> Self {
        Self {
            classes,
            dims,
            counts: vec![0; classes * dims],
            samples_per_class: vec![0; classes],
            norms: None,
            norm_rows: None,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn counts(&self, class: usize) -> &[i64] {
        &self.counts[class * self.dims..(class + 1) * self.dims]
    }

    pub fn samples_per_class(&self) -> &[u64] {
        &self.samples_per_class
    }

    pub fn is_normalized(&self) -> bool {
        self.norms.is_some()
    }

    /// Adds a quantized encoding to the prototype of `label`.
    pub fn update(&mut self, enc: &[i32], label: usize) -> Result<(), HdcError> {
        if label >= self.classes {
            return Err(HdcError::LabelOutOfRange {
                label,
                classes: self.classes,
            });
        }
        if enc.len() != self.dims {
            return Err(HdcError::DimensionMismatch {
                expected: self.dims,
                got: enc.len(),
            });
        }
        let row = &mut self.counts[label * self.dims..(label + 1) * self.dims];
        row.iter_mut().zip(enc).for_each(|(c, &e)| *c += e as i64);
        self.samples_per_class[label] += 1;
        self.norms = None;
        self.norm_rows = None;
        Ok(())
    }

    /// Element-wise sum of a partial memory produced by another worker.
    pub fn merge(&mut self, other: &AssociativeMemory) {
        assert_eq!((self.classes, self.dims), (other.classes, other.dims));
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.samples_per_class
            .iter_mut()
            .zip(&other.samples_per_class)
            .for_each(|(a, b)| *a += b);
        self.norms = None;
        self.norm_rows = None;
    }

    /// Scales every prototype to unit L2 norm; all-zero rows stay zero.
    /// The squared norm is summed exactly in integers before the square root.
    pub fn normalize(&mut self) {
        let norms: Vec<f64> = self
            .counts
            .chunks_exact(self.dims)
            .map(|row| {
                let sumsq: i64 = row.iter().map(|&c| c * c).sum();
                (sumsq as f64).sqrt()
            })
            .collect();
        let mut rows = Vec::with_capacity(self.counts.len());
        for (row, &norm) in self.counts.chunks_exact(self.dims).zip(&norms) {
            if norm == 0.0 {
                rows.extend(std::iter::repeat(0.0).take(self.dims));
            } else {
                rows.extend(row.iter().map(|&c| c as f64 / norm));
            }
        }
        self.norms = Some(norms);
        self.norm_rows = Some(rows);
    }

    pub fn norm_row(&self, class: usize) -> Option<&[f64]> {
        self.norm_rows
            .as_deref()
            .map(|r| &r[class * self.dims..(class + 1) * self.dims])
    }

    /// Similarity of `enc` to each normalized prototype. Each score is the
    /// exact integer dot product with the raw counts divided once by the row
    /// norm, which equals the dot product with the normalized row.
    pub fn scores(&self, enc: &[i32]) -> Vec<f64> {
        let norms = self.norms.as_ref().expect("normalize() must run before inference");
        self.counts
            .chunks_exact(self.dims)
            .zip(norms)
            .map(|(row, &norm)| {
                if norm == 0.0 {
                    0.0
                } else {
                    let dot: i64 = row.iter().zip(enc).map(|(&c, &e)| c * e as i64).sum();
                    dot as f64 / norm
                }
            })
            .collect()
    }

    /// Most similar class; ties go to the lowest index.
    pub fn infer(&self, enc: &[i32]) -> usize {
        argmax_ties_low(&self.scores(enc))
    }

    /// FNV-1a over the little-endian bytes of every count, row-major.
    pub fn digest(&self) -> u64 {
        self.counts.iter().fold(FNV_OFFSET, |h, c| {
            c.to_le_bytes()
                .iter()
                .fold(h, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
        })
    }
}

fn argmax_ties_low(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
