//! Dot-product scoring of question rows against answer rows.
//!
//! Every score goes through [`dot`], whose summation order depends only on
//! the vector length. Tiling, blocking and thread layout therefore never
//! change a score bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{EmbeddingMatrix, MatrixError};

const LANES: usize = 16;

/// Inner product with sixteen running partial sums combined pairwise.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let (a_main, a_tail) = a.split_at(a.len() - a.len() % LANES);
    let (b_main, b_tail) = b.split_at(a_main.len());
    for (x, y) in a_main.chunks_exact(LANES).zip(b_main.chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    for (l, (x, y)) in a_tail.iter().zip(b_tail).enumerate() {
        acc[l] += x * y;
    }
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] += acc[l + width];
        }
    }
    acc[0]
}

/// Materialized `q × a` score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl ScoreMatrix {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Rows of answers scored per tile; 256 rows of 512 floats fit in L2.
pub const ANSWER_TILE: usize = 256;

/// Scores `questions` (a slice of whole rows) against every answer row into
/// `out`, laid out row-major `questions.len()/dim × answers.rows()`.
pub fn score_block(questions: &[f32], answers: &EmbeddingMatrix, out: &mut [f32]) {
    let dim = answers.dim();
    let n_answers = answers.rows();
    let n_questions = questions.len() / dim;
    debug_assert_eq!(out.len(), n_questions * n_answers);
    for tile_start in (0..n_answers).step_by(ANSWER_TILE) {
        let tile_end = (tile_start + ANSWER_TILE).min(n_answers);
        for (qi, q) in questions.chunks_exact(dim).enumerate() {
            let row = &mut out[qi * n_answers..(qi + 1) * n_answers];
            for (j, s) in row[tile_start..tile_end].iter_mut().enumerate() {
                *s = dot(q, answers.row(tile_start + j));
            }
        }
    }
}

/// `S = Q·Aᵀ`, fully materialized.
pub fn score_all(questions: &EmbeddingMatrix, answers: &EmbeddingMatrix) -> Result<ScoreMatrix, MatrixError> {
    if questions.dim() != answers.dim() {
        return Err(MatrixError::Dim { left: questions.dim(), right: answers.dim() });
    }
    let mut data = vec![0.0; questions.rows() * answers.rows()];
    score_block(questions.data(), answers, &mut data);
    Ok(ScoreMatrix { rows: questions.rows(), cols: answers.rows(), data })
}
