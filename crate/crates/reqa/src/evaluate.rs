//! Scoring and ranking drivers for dense and BM25 retrieval.

use rayon::prelude::*;
use reqa_core::bm25::Bm25Index;
use reqa_core::ivf::IvfIndex;
use reqa_core::metrics::{paragraph_gold_ranks, rank_gold, EvalReport, Granularity, QuestionOutcome};
use reqa_core::score::{dot, score_block};
use reqa_core::task::Task;
use reqa_core::EmbeddingMatrix;

use crate::error::{Error, Result};

/// Questions scored together; one block's score rows stay in memory at once.
pub const QUESTION_BLOCK: usize = 32;

#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Exact,
    Ivf { index: &'a IvfIndex, probes: usize },
}

/// Per-question gold ranks at both granularities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseOutcomes {
    pub sentence: Vec<QuestionOutcome>,
    pub paragraph: Vec<QuestionOutcome>,
}

/// Ranks every question against the whole answer pool (or the part an IVF
/// probe reaches). Blocks are processed in parallel and concatenated in
/// block order.
pub fn dense_outcomes(task: &Task, questions: &EmbeddingMatrix, answers: &EmbeddingMatrix, backend: Backend<'_>) -> Result<DenseOutcomes> {
    let n_answers = answers.rows();
    if questions.dim() != answers.dim() {
        return Err(reqa_core::matrix::MatrixError::Dim { left: questions.dim(), right: answers.dim() }.into());
    }
    if questions.rows() != task.questions.len() || n_answers != task.index.len() {
        return Err(Error::RowCount { what: "score matrix".into(), rows: questions.rows(), expected: task.questions.len() });
    }
    if let Backend::Ivf { index, .. } = backend {
        if index.n_rows() != n_answers {
            return Err(reqa_core::ivf::IvfError::RowCount { indexed: index.n_rows(), rows: n_answers }.into());
        }
    }
    let paragraph_of = task.index.paragraph_of();
    let n_paragraphs = task.index.paragraphs.len();
    let dim = questions.dim();

    let blocks: Vec<DenseOutcomes> = questions
        .data()
        .par_chunks(QUESTION_BLOCK * dim)
        .enumerate()
        .map(|(b, block)| {
            let first = b * QUESTION_BLOCK;
            let rows = block.len() / dim;
            let mut scores = vec![0.0f32; rows * n_answers];
            let mut masks: Vec<Option<Vec<bool>>> = vec![None; rows];
            match backend {
                Backend::Exact => score_block(block, answers, &mut scores),
                Backend::Ivf { index, probes } => {
                    for (k, q) in block.chunks_exact(dim).enumerate() {
                        let row = &mut scores[k * n_answers..(k + 1) * n_answers];
                        let mut mask = vec![false; n_answers];
                        for c in index.probe_order(q, probes)? {
                            for &j in &index.lists[c] {
                                row[j as usize] = dot(q, answers.row(j as usize));
                                mask[j as usize] = true;
                            }
                        }
                        masks[k] = Some(mask);
                    }
                }
            }
            let mut out = DenseOutcomes::default();
            let mut best = Vec::new();
            for k in 0..rows {
                let row = &scores[k * n_answers..(k + 1) * n_answers];
                let reached = masks[k].as_deref();
                let gold = task.gold.get(first + k);
                out.sentence.push(rank_gold(row, reached, &gold.candidates)?);
                out.paragraph.push(paragraph_gold_ranks(row, reached, &paragraph_of, n_paragraphs, &gold.paragraphs, &mut best)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut all = DenseOutcomes::default();
    for b in blocks {
        all.sentence.extend(b.sentence);
        all.paragraph.extend(b.paragraph);
    }
    Ok(all)
}

/// Sentence- and paragraph-level reports for a dense run.
pub fn dense_reports(task: &Task, outcomes: &DenseOutcomes, cutoffs: &[usize]) -> Result<[EvalReport; 2]> {
    let types = task.questions.types();
    Ok([
        EvalReport::build(Granularity::Sentence, &outcomes.sentence, &types, task.index.len(), cutoffs)?,
        EvalReport::build(Granularity::Paragraph, &outcomes.paragraph, &types, task.index.paragraphs.len(), cutoffs)?,
    ])
}

/// Paragraph ranks from BM25. Paragraphs sharing no term with the question
/// are not retrieved at all.
pub fn bm25_outcomes(task: &Task, index: &Bm25Index) -> Result<Vec<QuestionOutcome>> {
    if index.n_paragraphs() != task.index.paragraphs.len() {
        return Err(Error::RowCount { what: "bm25 index".into(), rows: index.n_paragraphs(), expected: task.index.paragraphs.len() });
    }
    task.questions
        .questions
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let (scores, matched) = index.score_all(&q.text);
            Ok(rank_gold(&scores, Some(&matched), &task.gold.get(i).paragraphs)?)
        })
        .collect()
}

pub fn bm25_report(task: &Task, index: &Bm25Index, cutoffs: &[usize]) -> Result<EvalReport> {
    let outcomes = bm25_outcomes(task, index)?;
    Ok(EvalReport::build(Granularity::Paragraph, &outcomes, &task.questions.types(), task.index.paragraphs.len(), cutoffs)?)
}

/// BM25 index over the task's paragraph contexts.
pub fn build_bm25(task: &Task, k1: f64, b: f64) -> Result<Bm25Index> {
    Ok(Bm25Index::build(task.index.paragraphs.iter().map(|p| p.context.as_str()), k1, b)?)
}

/// Runs `f` on a pool of `threads` workers (0 means one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
