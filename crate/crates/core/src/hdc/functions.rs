//! Scalar helpers used around the encoding pipeline.

use super::HdcError;

/// Closed value range that raw features are scaled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub const DEFAULT: ValueRange = ValueRange { min: -1.0, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Result<Self, HdcError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(HdcError::InvalidRange { min, max });
        }
        Ok(Self { min, max })
    }
}

impl Default for ValueRange {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Level index for `x`: `(x - min) / (max - min) * (levels - 1)` rounded half
/// away from zero and clamped to `[0, levels)`. The operation order matches
/// the emitted C so both produce the same index for the same double.
pub fn map_range(x: f64, range: ValueRange, levels: usize) -> usize {
    let scaled = (x - range.min) / (range.max - range.min) * (levels - 1) as f64;
    let r = scaled.round();
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= (levels - 1) as f64 {
        levels - 1
    } else {
        r as usize
    }
}

/// Index of the largest element; the first one wins ties.
pub fn argmax(v: &[f64]) -> Result<usize, HdcError> {
    if v.is_empty() {
        return Err(HdcError::EmptySequence);
    }
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    Ok(best)
}

/// `y = x A^T + b` for a row-major `a` of shape `(b.len(), x.len())`.
pub fn linear(x: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>, HdcError> {
    if a.len() != x.len() * b.len() {
        return Err(HdcError::ShapeMismatch {
            detail: format!(
                "matrix has {} elements, expected {}x{}",
                a.len(),
                b.len(),
                x.len()
            ),
        });
    }
    if x.is_empty() {
        return Ok(b.to_vec());
    }
    Ok(a
        .chunks_exact(x.len())
        .zip(b)
        .map(|(row, bias)| row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + bias)
        .collect())
}
