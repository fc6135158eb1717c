//! Inverted-file index for approximate maximum inner-product search.
//!
//! Rows are partitioned by Lloyd's k-means (Euclidean, k-means++ seeding
//! from a ChaCha8 stream). A query visits the `probes`
//! lists whose centroids are nearest to it and scores only their members.
//! Probing every list is an exhaustive search.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::EmbeddingMatrix;
use crate::metrics::rank_order;
use crate::score::dot;

pub const DEFAULT_LISTS: usize = 256;
pub const DEFAULT_PROBES: usize = 16;
pub const DEFAULT_MAX_ITERS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IvfError {
    #[error("need 1 <= k <= rows, got k={k} for {rows} rows")]
    ClusterCount { k: usize, rows: usize },
    #[error("query has dimension {got}, index has {expected}")]
    Dim { expected: usize, got: usize },
    #[error("index covers {indexed} rows but the matrix has {rows}")]
    RowCount { indexed: usize, rows: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IvfConfig {
    pub lists: usize,
    pub probes: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for IvfConfig {
    fn default() -> Self {
        Self { lists: DEFAULT_LISTS, probes: DEFAULT_PROBES, max_iters: DEFAULT_MAX_ITERS, seed: crate::encode::DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvfIndex {
    pub dim: usize,
    pub centroids: Vec<f32>,
    /// Half squared norm of each centroid, used to rank centroids by distance.
    half_norms: Vec<f32>,
    /// Row ids per centroid, ascending.
    pub lists: Vec<Vec<u32>>,
    pub default_probes: usize,
    pub iterations: usize,
}

fn half_norm(c: &[f32]) -> f32 {
    0.5 * dot(c, c)
}

/// Nearest centroid by Euclidean distance; ties go to the lower index.
fn nearest(row: &[f32], centroids: &[f32], half_norms: &[f32], dim: usize) -> usize {
    let mut best = 0;
    let mut best_score = f32::NEG_INFINITY;
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let s = dot(row, centroid) - half_norms[c];
        if s > best_score {
            best = c;
            best_score = s;
        }
    }
    best
}

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) as f64 * (x - y) as f64).sum()
}

/// k-means++ seeding: each next centroid is a row drawn with probability
/// proportional to its squared distance from the nearest centroid so far.
fn kmeans_plus_plus(answers: &EmbeddingMatrix, k: usize, seed: u64) -> Vec<f32> {
    let rows = answers.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; rows];
    let mut first = rng.random_range(0..rows);
    let mut centroids = Vec::with_capacity(k * answers.dim());
    let mut nearest = vec![f64::INFINITY; rows];
    for _ in 0..k {
        chosen[first] = true;
        let c = answers.row(first);
        centroids.extend_from_slice(c);
        for (r, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(answers.row(r), c));
        }
        let total: f64 = nearest.iter().sum();
        first = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (r, &d) in nearest.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(r);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // only duplicates of chosen rows remain
            chosen.iter().position(|c| !c).unwrap_or(0)
        };
    }
    centroids
}

impl IvfIndex {
    pub fn build(answers: &EmbeddingMatrix, config: &IvfConfig) -> Result<Self, IvfError> {
        let (rows, dim, k) = (answers.rows(), answers.dim(), config.lists);
        if k == 0 || k > rows {
            return Err(IvfError::ClusterCount { k, rows });
        }
        let mut centroids = kmeans_plus_plus(answers, k, config.seed);
        let mut half_norms: Vec<f32> = centroids.chunks_exact(dim).map(half_norm).collect();
        let mut assignment = vec![usize::MAX; rows];
        let mut iterations = 0;
        for _ in 0..config.max_iters.max(1) {
            iterations += 1;
            let mut changed = false;
            for (r, row) in answers.iter_rows().enumerate() {
                let c = nearest(row, &centroids, &half_norms, dim);
                if assignment[r] != c {
                    assignment[r] = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let mut sums = vec![0.0f64; k * dim];
            let mut counts = vec![0usize; k];
            for (r, row) in answers.iter_rows().enumerate() {
                let c = assignment[r];
                counts[c] += 1;
                for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row) {
                    *s += x as f64;
                }
            }
            for c in 0..k {
                if counts[c] == 0 {
                    continue;
                }
                let n = counts[c] as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *dst = (s / n) as f32;
                }
                half_norms[c] = half_norm(&centroids[c * dim..(c + 1) * dim]);
            }
        }
        let mut lists = vec![Vec::new(); k];
        for (r, &c) in assignment.iter().enumerate() {
            lists[c].push(r as u32);
        }
        Ok(Self { dim, centroids, half_norms, lists, default_probes: config.probes.clamp(1, k), iterations })
    }

    pub fn n_lists(&self) -> usize {
        self.lists.len()
    }

    pub fn n_rows(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// Lists to visit for `query`, nearest centroid first.
    pub fn probe_order(&self, query: &[f32], probes: usize) -> Result<Vec<usize>, IvfError> {
        if query.len() != self.dim {
            return Err(IvfError::Dim { expected: self.dim, got: query.len() });
        }
        let scores: Vec<f32> = self.centroids.chunks_exact(self.dim).zip(&self.half_norms).map(|(c, h)| dot(query, c) - h).collect();
        Ok(crate::metrics::top_n(&scores, None, probes.min(self.n_lists())).into_iter().map(|c| c as usize).collect())
    }

    /// Marks every row that the probed lists contain.
    pub fn reached(&self, query: &[f32], probes: usize, rows: usize) -> Result<Vec<bool>, IvfError> {
        let mut mask = vec![false; rows];
        for c in self.probe_order(query, probes)? {
            for &r in &self.lists[c] {
                mask[r as usize] = true;
            }
        }
        Ok(mask)
    }

    /// Top `top_n` rows by dot product among the probed lists, descending,
    /// ties by ascending row id.
    pub fn search(&self, answers: &EmbeddingMatrix, query: &[f32], top_n: usize, probes: usize) -> Result<Vec<(u32, f32)>, IvfError> {
        if self.n_rows() != answers.rows() {
            return Err(IvfError::RowCount { indexed: self.n_rows(), rows: answers.rows() });
        }
        if top_n == 0 {
            return Ok(Vec::new());
        }
        let mut hits: Vec<(u32, f32)> = Vec::new();
        for c in self.probe_order(query, probes)? {
            hits.extend(self.lists[c].iter().map(|&r| (r, dot(query, answers.row(r as usize)))));
        }
        hits.sort_unstable_by(|a, b| rank_order(a.1, a.0, b.1, b.0));
        hits.truncate(top_n);
        Ok(hits)
    }
}
