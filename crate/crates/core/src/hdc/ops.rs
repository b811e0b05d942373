//! MAP-model operations on integer hypervectors.
//!
//! Bind is element-wise multiplication, bundle is element-wise addition and
//! permute is a right cyclic rotation. Values are bipolar after
//! [`hard_quantize`] and unbounded sums otherwise.

use std::ops::{Deref, DerefMut};

use super::HdcError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypervector(pub Vec<i32>);

impl Hypervector {
    pub fn zeros(dims: usize) -> Self {
        Self(vec![0; dims])
    }

    pub fn from_slice(v: &[i32]) -> Self {
        Self(v.to_vec())
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn is_bipolar(&self) -> bool {
        self.0.iter().all(|&x| x == 1 || x == -1)
    }

    pub fn into_inner(self) -> Vec<i32> {
        self.0
    }
}

impl Deref for Hypervector {
    type Target = [i32];
    fn deref(&self) -> &[i32] {
        &self.0
    }
}

impl DerefMut for Hypervector {
    fn deref_mut(&mut self) -> &mut [i32] {
        &mut self.0
    }
}

impl AsRef<[i32]> for Hypervector {
    fn as_ref(&self) -> &[i32] {
        &self.0
    }
}

impl From<Vec<i32>> for Hypervector {
    fn from(v: Vec<i32>) -> Self {
        Self(v)
    }
}

fn same_dims(a: &[i32], b: &[i32]) -> Result<(), HdcError> {
    if a.len() != b.len() {
        return Err(HdcError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

pub fn bind(a: &[i32], b: &[i32]) -> Result<Hypervector, HdcError> {
    same_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>().into())
}

pub fn bundle(a: &[i32], b: &[i32]) -> Result<Hypervector, HdcError> {
    same_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>().into())
}

/// Right rotation by `k`: `out[(j + k) % d] = a[j]`.
pub fn permute(a: &[i32], k: usize) -> Hypervector {
    let mut out = a.to_vec();
    if !out.is_empty() {
        out.rotate_right(k % a.len());
    }
    out.into()
}

pub fn multiset<V: AsRef<[i32]>>(vs: &[V]) -> Result<Hypervector, HdcError> {
    let first = vs.first().ok_or(HdcError::EmptySequence)?.as_ref();
    let mut acc = first.to_vec();
    for v in &vs[1..] {
        let v = v.as_ref();
        same_dims(&acc, v)?;
        acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
    }
    Ok(acc.into())
}

/// Bundle of key/value bindings.
pub fn hash_table<V: AsRef<[i32]>>(keys: &[V], values: &[V]) -> Result<Hypervector, HdcError> {
    if keys.len() != values.len() {
        return Err(HdcError::CountMismatch {
            keys: keys.len(),
            values: values.len(),
        });
    }
    let bound = keys
        .iter()
        .zip(values)
        .map(|(k, v)| bind(k.as_ref(), v.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    multiset(&bound)
}

/// Sum over every window of `n` consecutive hypervectors of the binding of
/// the window's members, the `j`-th member rotated by `n - j - 1`.
pub fn ngram<V: AsRef<[i32]>>(vs: &[V], n: usize) -> Result<Hypervector, HdcError> {
    if n == 0 || n > vs.len() {
        return Err(HdcError::NgramWindow { n, len: vs.len() });
    }
    let windows = (0..=vs.len() - n)
        .map(|i| {
            let mut term = permute(vs[i].as_ref(), n - 1);
            for j in 1..n {
                term = bind(&term, &permute(vs[i + j].as_ref(), n - j - 1))?;
            }
            Ok(term)
        })
        .collect::<Result<Vec<_>, HdcError>>()?;
    multiset(&windows)
}

/// +1 where the element is strictly positive, -1 otherwise (0 maps to -1).
pub fn hard_quantize(a: &[i32]) -> Hypervector {
    a.iter().map(|&x| if x > 0 { 1 } else { -1 }).collect::<Vec<_>>().into()
}

pub fn dot(a: &[i32], b: &[i32]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x as i64 * y as i64).sum()
}

pub fn cosine(a: &[i32], b: &[i32]) -> f64 {
    let na = dot(a, a) as f64;
    let nb = dot(b, b) as f64;
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) as f64 / (na.sqrt() * nb.sqrt())
}
