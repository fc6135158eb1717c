//! Hashing TF-IDF dual encoder.
//!
//! Features are lowercased unigrams and adjacent-token bigrams. Each feature
//! is keyed by a seeded 64-bit xxHash; the key picks one of `dim` buckets and
//! a second hash of the key picks the sign. A text's vector is the signed sum
//! of `tf × idf` per bucket, L2-normalized.
//!
//! Answers mix sentence and context: `α·h(sentence) + (1 − α)·h(context)`,
//! normalized again. Questions use `h(question)` alone.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh64::{xxh64, Xxh64};

use crate::matrix::EmbeddingMatrix;
use crate::task::{AnswerIndex, QuestionSet};
use crate::text::raw_tokens;

pub const DEFAULT_DIM: usize = 512;
pub const DEFAULT_ALPHA: f32 = 0.75;
pub const DEFAULT_SEED: u64 = 0x5EED_2019;

const SIGN_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("cannot fit idf weights on zero documents")]
    NoDocuments,
    #[error("empty text")]
    EmptyText,
    #[error("text has no alphanumeric tokens")]
    NoTokens,
    #[error("hashed features cancel to a zero vector")]
    ZeroVector,
    #[error("candidate {candidate}: {source}")]
    Candidate { candidate: u32, source: alloc::boxed::Box<EncodeError> },
    #[error("question {question}: {source}")]
    Question { question: usize, source: alloc::boxed::Box<EncodeError> },
    #[error("invalid encoder config: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    /// Weight of the sentence against its context in answer encodings.
    pub alpha: f32,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM, alpha: DEFAULT_ALPHA, seed: DEFAULT_SEED }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncodeError> {
        if self.dim == 0 {
            return Err(EncodeError::Config("dim must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(EncodeError::Config("alpha must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn lower_bytes(token: &str, buf: &mut Vec<u8>) {
    buf.clear();
    if token.is_ascii() {
        buf.extend(token.bytes().map(|b| b.to_ascii_lowercase()));
    } else {
        let mut tmp = [0u8; 4];
        for c in token.chars().flat_map(char::to_lowercase) {
            buf.extend_from_slice(c.encode_utf8(&mut tmp).as_bytes());
        }
    }
}

/// Feature keys of `text` in order of appearance, with repeats.
pub fn feature_keys(text: &str, seed: u64) -> Vec<u64> {
    let mut keys = Vec::new();
    let mut prev: Vec<u8> = Vec::new();
    let mut cur: Vec<u8> = Vec::new();
    for (i, token) in raw_tokens(text).enumerate() {
        lower_bytes(token, &mut cur);
        keys.push(xxh64(&cur, seed));
        if i > 0 {
            let mut h = Xxh64::new(seed);
            h.update(&prev);
            h.update(&[0x1f]);
            h.update(&cur);
            keys.push(h.digest());
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    keys
}

/// Bucket and sign of a feature key.
#[inline]
pub fn bucket_and_sign(key: u64, dim: usize, seed: u64) -> (usize, f32) {
    let bucket = ((key as u128 * dim as u128) >> 64) as usize;
    let sign = if xxh64(&key.to_le_bytes(), seed ^ SIGN_SALT) & 1 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

/// Document frequencies of hashed features over candidate documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdfTable {
    n_docs: u64,
    df: HashMap<u64, u32>,
}

impl IdfTable {
    pub fn from_document_frequencies(n_docs: u64, df: HashMap<u64, u32>) -> Result<Self, EncodeError> {
        if n_docs == 0 {
            return Err(EncodeError::NoDocuments);
        }
        Ok(Self { n_docs, df })
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn document_frequency(&self, key: u64) -> u32 {
        self.df.get(&key).copied().unwrap_or(0)
    }

    /// `ln((N + 1) / (df + 1)) + 1`.
    pub fn weight(&self, key: u64) -> f32 {
        let df = self.document_frequency(key) as f64;
        (libm::log((self.n_docs as f64 + 1.0) / (df + 1.0)) + 1.0) as f32
    }

    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }
}

/// Fits idf over the answer index, one document per candidate made of its
/// sentence and its enclosing paragraph. Questions never contribute.
pub fn fit_idf(index: &AnswerIndex, seed: u64) -> Result<IdfTable, EncodeError> {
    if index.is_empty() {
        return Err(EncodeError::NoDocuments);
    }
    let mut df: HashMap<u64, u32> = HashMap::new();
    for p in 0..index.paragraphs.len() {
        let sentences = index.sentences(p);
        if sentences.is_empty() {
            continue;
        }
        let context: HashSet<u64> = feature_keys(&index.paragraphs[p].context, seed).into_iter().collect();
        for &k in &context {
            *df.entry(k).or_insert(0) += sentences.len() as u32;
        }
        for c in sentences {
            let extra: HashSet<u64> = feature_keys(&c.sentence, seed).into_iter().filter(|k| !context.contains(k)).collect();
            for k in extra {
                *df.entry(k).or_insert(0) += 1;
            }
        }
    }
    IdfTable::from_document_frequencies(index.len() as u64, df)
}

fn normalize(v: &mut [f32]) -> bool {
    let norm = libm::sqrt(v.iter().map(|&x| x as f64 * x as f64).sum::<f64>());
    if norm == 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / norm) as f32;
    }
    true
}

#[derive(Debug, Clone)]
pub struct HashingEncoder {
    config: EncoderConfig,
    idf: IdfTable,
}

impl HashingEncoder {
    pub fn new(config: EncoderConfig, idf: IdfTable) -> Result<Self, EncodeError> {
        config.validate()?;
        Ok(Self { config, idf })
    }

    /// Fits idf on `index` and builds the encoder.
    pub fn fit(config: EncoderConfig, index: &AnswerIndex) -> Result<Self, EncodeError> {
        config.validate()?;
        let idf = fit_idf(index, config.seed)?;
        Self::new(config, idf)
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    /// Normalized hashed tf-idf vector; `None` when `text` has no tokens.
    pub fn hashed(&self, text: &str) -> Result<Option<Vec<f32>>, EncodeError> {
        let keys = feature_keys(text, self.config.seed);
        if keys.is_empty() {
            return Ok(None);
        }
        let mut v = vec![0.0f32; self.config.dim];
        for key in keys {
            let (bucket, sign) = bucket_and_sign(key, self.config.dim, self.config.seed);
            v[bucket] += sign * self.idf.weight(key);
        }
        if !normalize(&mut v) {
            return Err(EncodeError::ZeroVector);
        }
        Ok(Some(v))
    }

    /// Context half of an answer encoding, shared by all sentences of a paragraph.
    pub fn context_vector(&self, context: &str) -> Result<Option<Vec<f32>>, EncodeError> {
        self.hashed(context)
    }

    pub fn answer_with_context(&self, sentence: &str, context: Option<&[f32]>) -> Result<Vec<f32>, EncodeError> {
        if sentence.is_empty() {
            return Err(EncodeError::EmptyText);
        }
        let mut v = self.hashed(sentence)?.ok_or(EncodeError::NoTokens)?;
        let alpha = self.config.alpha;
        if alpha < 1.0 {
            for x in v.iter_mut() {
                *x *= alpha;
            }
            if let Some(c) = context {
                for (x, y) in v.iter_mut().zip(c) {
                    *x += (1.0 - alpha) * y;
                }
            }
            if !normalize(&mut v) {
                return Err(EncodeError::ZeroVector);
            }
        }
        Ok(v)
    }

    pub fn encode_answer(&self, sentence: &str, context: &str) -> Result<Vec<f32>, EncodeError> {
        let ctx = if self.config.alpha < 1.0 { self.context_vector(context)? } else { None };
        self.answer_with_context(sentence, ctx.as_deref())
    }

    pub fn encode_question(&self, question: &str) -> Result<Vec<f32>, EncodeError> {
        if question.is_empty() {
            return Err(EncodeError::EmptyText);
        }
        self.hashed(question)?.ok_or(EncodeError::NoTokens)
    }

    /// Encodes a contiguous run of paragraphs, appending candidate rows in order.
    pub fn encode_paragraphs(
        &self,
        index: &AnswerIndex,
        paragraphs: core::ops::Range<usize>,
        out: &mut Vec<f32>,
    ) -> Result<(), EncodeError> {
        for p in paragraphs {
            let sentences = index.sentences(p);
            let ctx =
                if self.config.alpha < 1.0 && !sentences.is_empty() { self.context_vector(&index.paragraphs[p].context)? } else { None };
            for c in sentences {
                let v = self
                    .answer_with_context(&c.sentence, ctx.as_deref())
                    .map_err(|e| EncodeError::Candidate { candidate: c.candidate_id, source: alloc::boxed::Box::new(e) })?;
                out.extend_from_slice(&v);
            }
        }
        Ok(())
    }

    /// Answer matrix for the whole index; manifest ids are candidate ids.
    pub fn encode_index(&self, index: &AnswerIndex) -> Result<EmbeddingMatrix, EncodeError> {
        let mut data = Vec::with_capacity(index.len() * self.config.dim);
        self.encode_paragraphs(index, 0..index.paragraphs.len(), &mut data)?;
        Ok(EmbeddingMatrix::with_row_ids(self.config.dim, data).expect("rows match candidates"))
    }

    /// Question matrix; manifest ids are the source question ids.
    pub fn encode_questions(&self, questions: &QuestionSet) -> Result<EmbeddingMatrix, EncodeError> {
        let mut data = Vec::with_capacity(questions.len() * self.config.dim);
        for (i, q) in questions.questions.iter().enumerate() {
            let v = self.encode_question(&q.text).map_err(|e| EncodeError::Question { question: i, source: alloc::boxed::Box::new(e) })?;
            data.extend_from_slice(&v);
        }
        let ids = questions.questions.iter().map(|q| q.question_id.clone()).collect();
        Ok(EmbeddingMatrix::new(self.config.dim, data, ids).expect("rows match questions"))
    }
}
