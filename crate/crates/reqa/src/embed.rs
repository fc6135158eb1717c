//! Answer and question encodings for a task, plus the sidecar that ties a
//! vector file to the task and encoder that produced it.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use reqa_core::encode::{EncodeError, EncoderConfig, HashingEncoder};
use reqa_core::task::Task;
use reqa_core::EmbeddingMatrix;
use serde::{Deserialize, Serialize};

use crate::artifacts::{read_json, sha256_hex, write_json};
use crate::config::EncoderKind;
use crate::error::{Error, Result};
use crate::vectors::{encode_vectors, read_matrix, write_matrix};

const PARAGRAPH_CHUNK: usize = 64;
const QUESTION_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorRole {
    Answers,
    Questions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderDescriptor {
    pub kind: EncoderKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl EncoderDescriptor {
    pub fn hashing(config: &EncoderConfig) -> Self {
        Self { kind: EncoderKind::HashTfidf, dim: config.dim, alpha: Some(config.alpha), seed: Some(config.seed) }
    }
}

/// Written next to each vector file as `<stem>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorMeta {
    pub task_fingerprint: String,
    pub role: VectorRole,
    pub encoder: EncoderDescriptor,
    pub rows: usize,
    pub sha256: String,
}

pub fn meta_path(vectors: &Path) -> PathBuf {
    vectors.with_extension("meta.json")
}

/// Matched answer and question encodings of one task.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub answers: EmbeddingMatrix,
    pub questions: EmbeddingMatrix,
    pub encoder: EncoderDescriptor,
}

/// Encodes with the hashing TF-IDF encoder. Work is split into fixed chunks
/// and concatenated in order, so the result does not depend on thread count.
pub fn encode_hashing(task: &Task, config: EncoderConfig) -> Result<Encoded> {
    let encoder = HashingEncoder::fit(config, &task.index)?;
    let index = &task.index;
    let n_paragraphs = index.paragraphs.len();
    let chunks: Vec<Vec<f32>> = (0..n_paragraphs.div_ceil(PARAGRAPH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * PARAGRAPH_CHUNK..((c + 1) * PARAGRAPH_CHUNK).min(n_paragraphs);
            let mut out = Vec::new();
            encoder.encode_paragraphs(index, range, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_, EncodeError>>()?;
    let answer_ids = index.candidates.iter().map(|c| c.candidate_id.to_string()).collect();
    let answers = EmbeddingMatrix::new(config.dim, chunks.concat(), answer_ids)?;

    let questions = &task.questions.questions;
    let chunks: Vec<Vec<f32>> = questions
        .par_chunks(QUESTION_CHUNK)
        .enumerate()
        .map(|(c, qs)| {
            let mut out = Vec::with_capacity(qs.len() * config.dim);
            for (k, q) in qs.iter().enumerate() {
                let v = encoder
                    .encode_question(&q.text)
                    .map_err(|e| EncodeError::Question { question: c * QUESTION_CHUNK + k, source: Box::new(e) })?;
                out.extend_from_slice(&v);
            }
            Ok(out)
        })
        .collect::<Result<_, EncodeError>>()?;
    let question_ids = questions.iter().map(|q| q.question_id.clone()).collect();
    let questions = EmbeddingMatrix::new(config.dim, chunks.concat(), question_ids)?;
    Ok(Encoded { answers, questions, encoder: EncoderDescriptor::hashing(&config) })
}

/// Checks that a matrix's manifest lines up with the task rows it encodes.
pub fn check_alignment(task: &Task, role: VectorRole, m: &EmbeddingMatrix) -> Result<()> {
    let what = format!("{role:?} vectors").to_lowercase();
    let expected: Vec<String> = match role {
        VectorRole::Answers => task.index.candidates.iter().map(|c| c.candidate_id.to_string()).collect(),
        VectorRole::Questions => task.questions.questions.iter().map(|q| q.question_id.clone()).collect(),
    };
    if m.rows() != expected.len() {
        return Err(Error::RowCount { what, rows: m.rows(), expected: expected.len() });
    }
    if let Some(row) = (0..expected.len()).find(|&i| m.ids()[i] != expected[i]) {
        return Err(Error::Alignment { what, row, expected: expected[row].clone(), found: m.ids()[row].clone() });
    }
    Ok(())
}

/// Loads externally produced vectors and validates them against the task.
pub fn load_external(task: &Task, answers: &Path, questions: &Path) -> Result<Encoded> {
    let a = read_matrix(answers)?;
    let q = read_matrix(questions)?;
    check_alignment(task, VectorRole::Answers, &a)?;
    check_alignment(task, VectorRole::Questions, &q)?;
    if a.dim() != q.dim() {
        return Err(reqa_core::matrix::MatrixError::Dim { left: q.dim(), right: a.dim() }.into());
    }
    let encoder = EncoderDescriptor { kind: EncoderKind::External, dim: a.dim(), alpha: None, seed: None };
    Ok(Encoded { answers: a, questions: q, encoder })
}

/// Writes `answers.rqav` and `questions.rqav` (with manifests and sidecars) into `dir`.
pub fn write_encoded(dir: &Path, task_fingerprint: &str, encoded: &Encoded) -> Result<(PathBuf, PathBuf)> {
    let mut paths = Vec::new();
    for (role, m, name) in
        [(VectorRole::Answers, &encoded.answers, "answers.rqav"), (VectorRole::Questions, &encoded.questions, "questions.rqav")]
    {
        let path = dir.join(name);
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
        write_matrix(&path, m)?;
        let meta = VectorMeta {
            task_fingerprint: task_fingerprint.to_string(),
            role,
            encoder: encoded.encoder.clone(),
            rows: m.rows(),
            sha256: sha256_hex(&encode_vectors(m)),
        };
        write_json(&meta_path(&path), &meta)?;
        paths.push(path);
    }
    let q = paths.pop().expect("two paths");
    Ok((paths.pop().expect("two paths"), q))
}

/// Reads a vector pair for evaluation. Sidecars, when present, must name
/// this task and agree on the encoder; vectors without sidecars are accepted
/// as external after alignment checks.
pub fn read_encoded(task: &Task, task_fingerprint: &str, answers: &Path, questions: &Path) -> Result<Encoded> {
    let mut loaded = load_external(task, answers, questions)?;
    let metas = [(answers, &loaded.answers, VectorRole::Answers), (questions, &loaded.questions, VectorRole::Questions)]
        .into_iter()
        .map(|(path, m, role)| {
            let mp = meta_path(path);
            if !mp.exists() {
                return Ok(None);
            }
            let meta: VectorMeta = read_json(&mp)?;
            let what = path.display().to_string();
            if meta.task_fingerprint != task_fingerprint {
                return Err(Error::Fingerprint { what, expected: task_fingerprint.into(), found: meta.task_fingerprint });
            }
            let found = sha256_hex(&encode_vectors(m));
            if meta.sha256 != found || meta.role != role {
                return Err(Error::Fingerprint { what: format!("{what} content"), expected: meta.sha256, found });
            }
            Ok(Some(meta))
        })
        .collect::<Result<Vec<_>>>()?;
    match (&metas[0], &metas[1]) {
        (Some(a), Some(q)) if a.encoder != q.encoder => {
            return Err(Error::Config(format!(
                "answer and question vectors come from different encoders: {:?} vs {:?}",
                a.encoder, q.encoder
            )))
        }
        (Some(a), Some(_)) => loaded.encoder = a.encoder.clone(),
        (None, None) => {}
        _ => return Err(Error::Config("only one of the two vector files has a .meta.json sidecar".into())),
    }
    Ok(loaded)
}
