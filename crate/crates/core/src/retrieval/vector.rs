use serde::{Deserialize, Serialize};

/// Sparse vector with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unsorted (column, value) pairs, summing duplicates.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<u32> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        Self {
            dim,
            indices,
            values,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> bool {
        l2_normalize(&mut self.values)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }
}

/// A query projected into an index's vector space.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryVector {
    Dense(Vec<f64>),
    Sparse(SparseVector),
}

impl QueryVector {
    pub fn dim(&self) -> usize {
        match self {
            QueryVector::Dense(v) => v.len(),
            QueryVector::Sparse(s) => s.dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            QueryVector::Dense(v) => v.iter().all(|&x| x == 0.0),
            QueryVector::Sparse(s) => s.is_zero(),
        }
    }

    pub(crate) fn kind(&self) -> &'static str {
        match self {
            QueryVector::Dense(_) => "dense",
            QueryVector::Sparse(_) => "sparse",
        }
    }
}

/// Scales `v` to unit L2 norm in place. Returns `false`, leaving `v`
/// untouched, when it is the zero vector.
pub fn l2_normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}
