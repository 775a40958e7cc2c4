//! Dense row-major feature storage.
//!
//! One matrix type serves raw attributes, propagated representations, and
//! centroid blocks. Row-major layout keeps per-node rows contiguous, which is
//! what every downstream consumer (propagation, distance kernels, CSV
//! serialization) iterates over.

use crate::error::{Error, Result};

/// Dense `rows × dim` matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, dim: usize) -> Self {
        FeatureMatrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Builds from a flat row-major buffer; fails if the length is not
    /// `rows * dim`.
    pub fn from_vec(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::Dimension(format!(
                "flat buffer has {} entries, expected {rows}x{dim}={}",
                data.len(),
                rows * dim
            )));
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    /// Builds from row slices; fails on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            rows: rows.len(),
            dim,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the flat row-major buffer.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    /// Fails if any entry is NaN or infinite. Called after file ingest and
    /// after every numerically risky transform.
    pub fn assert_finite(&self, context: &str) -> Result<()> {
        for (pos, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "{context}: non-finite value {v} at row {}, col {}",
                    pos / self.dim.max(1),
                    pos % self.dim.max(1)
                )));
            }
        }
        Ok(())
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: idx.len(),
            dim: self.dim,
            data,
        }
    }

    /// Vertical concatenation; all blocks must share `dim`.
    pub fn vstack(blocks: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let dim = blocks.first().map_or(0, |b| b.dim);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.dim != dim {
                return Err(Error::Dimension(format!(
                    "vstack blocks disagree on dim: {} vs {dim}",
                    b.dim
                )));
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    /// Squared Euclidean distance between row `i` of `self` and a raw slice.
    pub fn sq_dist_row(&self, i: usize, other: &[f64]) -> f64 {
        sq_dist(self.row(i), other)
    }

    /// Frobenius norm squared.
    pub fn frob_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Squared Euclidean distance between two equal-length slices.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
