//! Dense row-major `f32` matrices with an id manifest aligned to rows.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("expected {expected} values for {rows}x{dim}, got {got}")]
    Shape { rows: usize, dim: usize, expected: usize, got: usize },
    #[error("manifest has {ids} ids but the matrix has {rows} rows")]
    Manifest { ids: usize, rows: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    Dim { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
    ids: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, data: Vec<f32>, ids: Vec<String>) -> Result<Self, MatrixError> {
        let rows = ids.len();
        if dim == 0 || data.len() != rows * dim {
            return Err(MatrixError::Shape { rows, dim, expected: rows * dim, got: data.len() });
        }
        Ok(Self { dim, data, ids })
    }

    /// Matrix whose manifest is the row numbers `0..rows`.
    pub fn with_row_ids(dim: usize, data: Vec<f32>) -> Result<Self, MatrixError> {
        let rows = data.len().checked_div(dim).unwrap_or(0);
        let ids = (0..rows).map(|i| alloc::format!("{i}")).collect();
        Self::new(dim, data, ids)
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, MatrixError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(MatrixError::Dim { left: dim, right: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::with_row_ids(dim, data)
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn into_parts(self) -> (usize, Vec<f32>, Vec<String>) {
        (self.dim, self.data, self.ids)
    }

    pub fn check_finite(&self) -> Result<(), MatrixError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(MatrixError::NonFinite { row: i / self.dim, col: i % self.dim }),
            None => Ok(()),
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scale(&mut self, factor: f32) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}
