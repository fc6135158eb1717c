//! Dataset characterization: counts, token lengths, query coverage and the
//! question-type distribution.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::{QuestionType, Task};
use crate::text::{token_count, tokenize};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("task has no questions or no candidates")]
    EmptyTask,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: libm::sqrt(var) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub source_name: String,
    pub questions: usize,
    pub candidate_sentences: usize,
    pub candidate_paragraphs: usize,
    /// Tokens per question.
    pub question_length: MeanStd,
    /// Tokens per candidate sentence.
    pub answer_length: MeanStd,
    /// Percentage of question token types present in the gold sentence.
    pub query_coverage: MeanStd,
    /// Percentage of questions per type.
    pub question_types: BTreeMap<QuestionType, f64>,
}

/// Percentage of the distinct tokens of `question` that also occur in `answer`.
pub fn query_coverage(question: &[String], answer: &HashSet<String>) -> f64 {
    let types: HashSet<&String> = question.iter().collect();
    if types.is_empty() {
        return 0.0;
    }
    let shared = types.iter().filter(|t| answer.contains(t.as_str())).count();
    100.0 * shared as f64 / types.len() as f64
}

pub fn compute_stats(task: &Task) -> Result<DatasetStats, StatsError> {
    let questions = &task.questions.questions;
    if questions.is_empty() || task.index.is_empty() {
        return Err(StatsError::EmptyTask);
    }
    let question_lengths: Vec<f64> = questions.iter().map(|q| token_count(&q.text) as f64).collect();
    let answer_lengths: Vec<f64> = task.index.candidates.iter().map(|c| token_count(&c.sentence) as f64).collect();

    let mut sentence_types: BTreeMap<u32, HashSet<String>> = BTreeMap::new();
    let mut coverage = Vec::with_capacity(questions.len());
    for (i, q) in questions.iter().enumerate() {
        let q_tokens = tokenize(&q.text);
        let gold = &task.gold.get(i).candidates;
        let mut total = 0.0;
        for &c in gold {
            let types =
                sentence_types.entry(c).or_insert_with(|| tokenize(&task.index.candidates[c as usize].sentence).into_iter().collect());
            total += query_coverage(&q_tokens, types);
        }
        coverage.push(if gold.is_empty() { 0.0 } else { total / gold.len() as f64 });
    }

    let mut counts: BTreeMap<QuestionType, usize> = BTreeMap::new();
    for q in questions {
        *counts.entry(q.question_type).or_insert(0) += 1;
    }
    let n = questions.len() as f64;
    let question_types = QuestionType::ALL.iter().map(|t| (*t, 100.0 * counts.get(t).copied().unwrap_or(0) as f64 / n)).collect();

    Ok(DatasetStats {
        source_name: task.source_name.clone(),
        questions: questions.len(),
        candidate_sentences: task.index.len(),
        candidate_paragraphs: task.index.paragraphs.len(),
        question_length: MeanStd::of(&question_lengths),
        answer_length: MeanStd::of(&answer_lengths),
        query_coverage: MeanStd::of(&coverage),
        question_types,
    })
}
