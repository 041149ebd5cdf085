//! Dense vector helpers and sorted index sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted set of distinct indices into a vector of length `n`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        IndexSet((0..n).collect())
    }

    /// Builds a set from arbitrary indices, sorting and deduplicating them.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet(indices)
    }

    /// Wraps an already strictly increasing list.
    pub fn from_sorted(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("index list is not strictly increasing"));
        }
        Ok(IndexSet(indices))
    }

    /// Collects the indices of a membership mask.
    pub fn from_mask(mask: &[bool]) -> Self {
        IndexSet(
            mask.iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn to_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for i in self.iter() {
            mask[i] = true;
        }
        mask
    }

    /// Indices of `[0, n)` not in the set.
    pub fn complement(&self, n: usize) -> IndexSet {
        let mask = self.to_mask(n);
        IndexSet((0..n).filter(|&i| !mask[i]).collect())
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        out.push(x);
                        a.next();
                    } else if y < x {
                        out.push(y);
                        b.next();
                    } else {
                        out.push(x);
                        a.next();
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    out.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    out.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        IndexSet(out)
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IndexSet::from_unsorted(iter.into_iter().collect())
    }
}

/// Euclidean norm of `v` restricted to the indices in `s`.
pub fn masked_norm(v: &[f64], s: &IndexSet) -> Result<f64> {
    if let Some(max) = s.max_index() {
        if max >= v.len() {
            return Err(Error::contract(format!(
                "index {max} out of range for vector of length {}",
                v.len()
            )));
        }
    }
    Ok(s.iter().map(|i| v[i] * v[i]).sum::<f64>().sqrt())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// True when both values are nonzero and share a sign.
#[inline]
pub fn same_nonzero_sign(x: f64, y: f64) -> bool {
    let s = sign(x);
    s != 0 && s == sign(y)
}

pub fn count_below(v: &[f64], delta: f64) -> usize {
    v.iter().filter(|x| x.abs() < delta).count()
}
