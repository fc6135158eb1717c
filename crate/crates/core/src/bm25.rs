//! Okapi BM25 over paragraphs.
//!
//! `score(q, p) = Σ_{t ∈ q} idf(t) · tf(t,p)·(k1 + 1) / (tf(t,p) + k1·(1 − b + b·|p| / avglen))`
//! with `idf(t) = ln((N − df + 0.5) / (df + 0.5) + 1)`. Query terms count with
//! multiplicity.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::rank_order;
use crate::text::tokenize;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Bm25Error {
    #[error("cannot index zero paragraphs")]
    Empty,
    #[error("k1 must be positive, got {0}")]
    K1(f64),
    #[error("b must lie in [0, 1], got {0}")]
    B(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub paragraph: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub k1: f64,
    pub b: f64,
    pub lengths: Vec<u32>,
    pub avg_length: f64,
    /// Term → postings sorted by paragraph.
    pub postings: BTreeMap<String, Vec<Posting>>,
}

impl Bm25Index {
    pub fn build<'a, I>(paragraphs: I, k1: f64, b: f64) -> Result<Self, Bm25Error>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(Bm25Error::K1(k1));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Bm25Error::B(b));
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut lengths = Vec::new();
        for (p, text) in paragraphs.into_iter().enumerate() {
            let tokens = tokenize(text);
            lengths.push(tokens.len() as u32);
            let mut counts: hashbrown::HashMap<String, u32> = hashbrown::HashMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { paragraph: p as u32, tf });
            }
        }
        if lengths.is_empty() {
            return Err(Bm25Error::Empty);
        }
        let avg_length = lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64;
        Ok(Self { k1, b, lengths, avg_length, postings })
    }

    pub fn n_paragraphs(&self) -> usize {
        self.lengths.len()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn idf(&self, df: usize) -> f64 {
        let n = self.n_paragraphs() as f64;
        let df = df as f64;
        libm::log((n - df + 0.5) / (df + 0.5) + 1.0)
    }

    /// Contribution of one query term occurrence with frequency `tf` in `paragraph`.
    pub fn term_score(&self, idf: f64, tf: u32, paragraph: usize) -> f64 {
        let tf = tf as f64;
        let norm = 1.0 - self.b + self.b * self.lengths[paragraph] as f64 / self.avg_length;
        idf * tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }

    /// Score of every paragraph (zero where no query term occurs) and
    /// whether any query term matched it.
    pub fn score_all(&self, query: &str) -> (Vec<f64>, Vec<bool>) {
        let mut scores = vec![0.0; self.n_paragraphs()];
        let mut matched = vec![false; self.n_paragraphs()];
        for term in tokenize(query) {
            let list = self.postings(&term);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(list.len());
            for posting in list {
                let p = posting.paragraph as usize;
                scores[p] += self.term_score(idf, posting.tf, p);
                matched[p] = true;
            }
        }
        (scores, matched)
    }

    /// Matching paragraphs by descending score, ties by ascending id.
    pub fn search(&self, query: &str, top_n: usize) -> Vec<(u32, f64)> {
        let (scores, matched) = self.score_all(query);
        let mut hits: Vec<(u32, f64)> = matched.iter().enumerate().filter(|(_, &m)| m).map(|(p, _)| (p as u32, scores[p])).collect();
        hits.sort_unstable_by(|a, b| rank_order(a.1, a.0, b.1, b.0));
        hits.truncate(top_n);
        hits
    }
}
