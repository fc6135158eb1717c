//! Ranks and ranking metrics.
//!
//! Candidates are totally ordered by score (descending) with ties broken by
//! ascending candidate id, so every candidate has a distinct integer rank:
//! `rank(j) = 1 + #{k : s_k > s_j} + #{k : s_k = s_j, k < j}`.
//!
//! A rank of `None` means the candidate was never reached (an approximate
//! search that did not probe it); it contributes nothing to any metric.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::QuestionType;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty gold set")]
    EmptyGold,
    #[error("gold id {id} outside a pool of {pool}")]
    GoldOutOfRange { id: u32, pool: usize },
    #[error("no questions to evaluate")]
    NoQuestions,
    #[error("candidate {0} has no paragraph mapping")]
    UnmappedCandidate(u32),
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("{outcomes} outcomes but {types} question types")]
    Misaligned { outcomes: usize, types: usize },
}

/// `true` when `(sa, a)` ranks strictly ahead of `(sb, b)`.
#[inline]
pub fn ranks_ahead<T: PartialOrd>(sa: T, a: u32, sb: T, b: u32) -> bool {
    sa > sb || (sa == sb && a < b)
}

/// Ordering consistent with [`ranks_ahead`]: `Less` means ranked earlier.
pub fn rank_order<T: PartialOrd>(sa: T, a: u32, sb: T, b: u32) -> Ordering {
    sb.partial_cmp(&sa).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

/// 1-based rank of candidate `j` among every candidate with `reached[k]`.
/// `reached = None` means all candidates were scored.
pub fn rank_of<T: PartialOrd + Copy>(scores: &[T], reached: Option<&[bool]>, j: usize) -> Option<usize> {
    if reached.is_some_and(|r| !r[j]) {
        return None;
    }
    let sj = scores[j];
    let ahead = match reached {
        None => scores.iter().enumerate().filter(|&(k, &s)| ranks_ahead(s, k as u32, sj, j as u32)).count(),
        Some(r) => scores.iter().zip(r).enumerate().filter(|&(k, (&s, &hit))| hit && ranks_ahead(s, k as u32, sj, j as u32)).count(),
    };
    Some(ahead + 1)
}

/// Ranks of every gold item for one question.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuestionOutcome {
    pub gold_ranks: Vec<Option<usize>>,
}

impl QuestionOutcome {
    /// Rank of the first correct answer.
    pub fn first(&self) -> Option<usize> {
        self.gold_ranks.iter().flatten().copied().min()
    }

    fn hits_within(&self, n: usize) -> usize {
        self.gold_ranks.iter().flatten().filter(|&&r| r <= n).count()
    }
}

/// Ranks of a question's gold candidates against one score row.
pub fn rank_gold<T: PartialOrd + Copy>(scores: &[T], reached: Option<&[bool]>, gold: &[u32]) -> Result<QuestionOutcome, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    let gold_ranks = gold
        .iter()
        .map(|&g| {
            if g as usize >= scores.len() {
                return Err(MetricError::GoldOutOfRange { id: g, pool: scores.len() });
            }
            Ok(rank_of(scores, reached, g as usize))
        })
        .collect::<Result<_, _>>()?;
    Ok(QuestionOutcome { gold_ranks })
}

/// Paragraph-level gold ranks straight from a sentence score row.
///
/// Equivalent to ordering sentences, replacing each by its paragraph and
/// keeping first occurrences: a paragraph's position is decided by its
/// best-ranked reached sentence. `best` is scratch space, resized as needed.
pub fn paragraph_gold_ranks<T: PartialOrd + Copy>(
    scores: &[T],
    reached: Option<&[bool]>,
    paragraph_of: &[u32],
    n_paragraphs: usize,
    gold_paragraphs: &[u32],
    best: &mut Vec<Option<(T, u32)>>,
) -> Result<QuestionOutcome, MetricError> {
    if gold_paragraphs.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    best.clear();
    best.resize(n_paragraphs, None);
    for (j, &s) in scores.iter().enumerate() {
        if reached.is_some_and(|r| !r[j]) {
            continue;
        }
        let p = *paragraph_of.get(j).ok_or(MetricError::UnmappedCandidate(j as u32))? as usize;
        let slot = best.get_mut(p).ok_or(MetricError::UnmappedCandidate(j as u32))?;
        match slot {
            Some((bs, bj)) if !ranks_ahead(s, j as u32, *bs, *bj) => {}
            _ => *slot = Some((s, j as u32)),
        }
    }
    let gold_ranks = gold_paragraphs
        .iter()
        .map(|&g| {
            let Some((gs, gj)) = *best.get(g as usize).ok_or(MetricError::GoldOutOfRange { id: g, pool: n_paragraphs })? else {
                return Ok(None);
            };
            let ahead = best.iter().flatten().filter(|&&(s, j)| ranks_ahead(s, j, gs, gj)).count();
            Ok(Some(ahead + 1))
        })
        .collect::<Result<_, _>>()?;
    Ok(QuestionOutcome { gold_ranks })
}

/// Ids of the `n` best reached candidates, in rank order.
pub fn top_n<T: PartialOrd + Copy>(scores: &[T], reached: Option<&[bool]>, n: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..scores.len() as u32).filter(|&j| reached.is_none_or(|r| r[j as usize])).collect();
    let cmp = |a: &u32, b: &u32| rank_order(scores[*a as usize], *a, scores[*b as usize], *b);
    if n < ids.len() {
        if n == 0 {
            return Vec::new();
        }
        ids.select_nth_unstable_by(n - 1, cmp);
        ids.truncate(n);
    }
    ids.sort_unstable_by(cmp);
    ids
}

/// Maps a ranked sentence list to a ranked paragraph list, keeping the first
/// (best) occurrence of each paragraph.
pub fn paragraph_ranking(ranked_sentences: &[u32], paragraph_of: &[u32]) -> Result<Vec<u32>, MetricError> {
    let mut seen = hashbrown::HashSet::new();
    let mut out = Vec::new();
    for &s in ranked_sentences {
        let p = *paragraph_of.get(s as usize).ok_or(MetricError::UnmappedCandidate(s))?;
        if seen.insert(p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Gold ranks read off an explicit ranking; gold items missing from it are unreached.
pub fn outcome_from_ranking(ranking: &[u32], gold: &[u32]) -> Result<QuestionOutcome, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    let gold_ranks = gold.iter().map(|g| ranking.iter().position(|r| r == g).map(|p| p + 1)).collect();
    Ok(QuestionOutcome { gold_ranks })
}

/// Mean reciprocal rank of the first correct answer.
pub fn mrr(first_ranks: &[Option<usize>]) -> Result<f64, MetricError> {
    if first_ranks.is_empty() {
        return Err(MetricError::NoQuestions);
    }
    let total: f64 = first_ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum();
    Ok(total / first_ranks.len() as f64)
}

/// Recall at a cutoff, literal and any-hit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recall {
    /// Mean over questions of `|top-N ∩ gold| / |gold|`.
    pub literal: f64,
    /// Fraction of questions with at least one gold item in the top N.
    pub any_hit: f64,
    /// Cutoff actually used after clamping to the pool size.
    pub cutoff: usize,
}

pub fn recall_at_n(outcomes: &[QuestionOutcome], n: usize, pool: usize) -> Result<Recall, MetricError> {
    if n == 0 {
        return Err(MetricError::ZeroCutoff);
    }
    if outcomes.is_empty() {
        return Err(MetricError::NoQuestions);
    }
    let cutoff = n.min(pool.max(1));
    let (mut literal, mut any_hit) = (0.0f64, 0.0f64);
    for o in outcomes {
        let hits = o.hits_within(cutoff);
        literal += hits as f64 / o.gold_ranks.len() as f64;
        any_hit += f64::from(u8::from(hits > 0));
    }
    let q = outcomes.len() as f64;
    Ok(Recall { literal: literal / q, any_hit: any_hit / q, cutoff })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Sentence,
    Paragraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mrr: f64,
    pub r_at: BTreeMap<usize, f64>,
    pub r_at_any_hit: BTreeMap<usize, f64>,
    pub n_questions: usize,
}

impl Metrics {
    pub fn compute(outcomes: &[QuestionOutcome], pool: usize, cutoffs: &[usize]) -> Result<(Self, BTreeMap<usize, usize>), MetricError> {
        let firsts: Vec<Option<usize>> = outcomes.iter().map(QuestionOutcome::first).collect();
        let mut r_at = BTreeMap::new();
        let mut r_at_any_hit = BTreeMap::new();
        let mut clamped = BTreeMap::new();
        for &n in cutoffs {
            let r = recall_at_n(outcomes, n, pool)?;
            r_at.insert(n, r.literal);
            r_at_any_hit.insert(n, r.any_hit);
            if r.cutoff != n {
                clamped.insert(n, r.cutoff);
            }
        }
        Ok((Metrics { mrr: mrr(&firsts)?, r_at, r_at_any_hit, n_questions: outcomes.len() }, clamped))
    }
}

pub const DEFAULT_CUTOFFS: [usize; 3] = [1, 5, 10];

/// Metrics for one granularity, overall and per question type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub granularity: Granularity,
    pub mrr: f64,
    pub r_at: BTreeMap<usize, f64>,
    pub r_at_any_hit: BTreeMap<usize, f64>,
    pub by_type: BTreeMap<QuestionType, Metrics>,
    pub n_questions: usize,
    pub n_candidates: usize,
    /// Requested cutoff → cutoff used, for cutoffs beyond the pool size.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clamped: BTreeMap<usize, usize>,
}

impl EvalReport {
    pub fn build(
        granularity: Granularity,
        outcomes: &[QuestionOutcome],
        types: &[QuestionType],
        pool: usize,
        cutoffs: &[usize],
    ) -> Result<Self, MetricError> {
        if outcomes.len() != types.len() {
            return Err(MetricError::Misaligned { outcomes: outcomes.len(), types: types.len() });
        }
        let (overall, clamped) = Metrics::compute(outcomes, pool, cutoffs)?;
        let mut grouped: BTreeMap<QuestionType, Vec<QuestionOutcome>> = BTreeMap::new();
        for (o, t) in outcomes.iter().zip(types) {
            grouped.entry(*t).or_default().push(o.clone());
        }
        let by_type =
            grouped.into_iter().map(|(t, os)| Metrics::compute(&os, pool, cutoffs).map(|(m, _)| (t, m))).collect::<Result<_, _>>()?;
        Ok(EvalReport {
            granularity,
            mrr: overall.mrr,
            r_at: overall.r_at,
            r_at_any_hit: overall.r_at_any_hit,
            by_type,
            n_questions: outcomes.len(),
            n_candidates: pool,
            clamped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn outcome(ranks: &[usize]) -> QuestionOutcome {
        QuestionOutcome { gold_ranks: ranks.iter().map(|&r| Some(r)).collect() }
    }

    #[test]
    fn tie_broken_by_id() {
        assert_eq!(rank_gold(&[5.0, 5.0, 3.0], None, &[1]).unwrap().first(), Some(2));
        assert_eq!(rank_gold(&[5.0, 5.0, 3.0], None, &[0]).unwrap().first(), Some(1));
        assert_eq!(rank_gold(&[1.0, 9.0, 3.0], None, &[1]).unwrap().first(), Some(1));
    }

    #[test]
    fn empty_gold_is_an_error() {
        assert_eq!(rank_gold(&[1.0], None, &[]), Err(MetricError::EmptyGold));
        assert_eq!(rank_gold(&[1.0], None, &[4]), Err(MetricError::GoldOutOfRange { id: 4, pool: 1 }));
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mrr(&[Some(1), Some(1)]).unwrap(), 1.0);
        assert_eq!(mrr(&[Some(1), Some(2)]).unwrap(), 0.75);
        assert!((mrr(&[Some(1), Some(2), Some(4)]).unwrap() - 1.75 / 3.0).abs() < 1e-15);
        assert_eq!(mrr(&[None, Some(1)]).unwrap(), 0.5);
        assert_eq!(mrr(&[]), Err(MetricError::NoQuestions));
    }

    #[test]
    fn recall_examples() {
        let r = recall_at_n(&[outcome(&[1])], 1, 10).unwrap();
        assert_eq!((r.literal, r.any_hit), (1.0, 1.0));
        let r = recall_at_n(&[outcome(&[3, 8])], 5, 10).unwrap();
        assert_eq!((r.literal, r.any_hit), (0.5, 1.0));
        let r = recall_at_n(&[outcome(&[2])], 50, 3).unwrap();
        assert_eq!(r.cutoff, 3);
        assert_eq!(recall_at_n(&[outcome(&[2])], 0, 3), Err(MetricError::ZeroCutoff));
    }

    #[test]
    fn paragraph_dedup() {
        // sentences 0..4 belong to paragraphs [0,0,1,1]; ranking 1,0,3,2
        let ranking = paragraph_ranking(&[1, 0, 3, 2], &[0, 0, 1, 1]).unwrap();
        assert_eq!(ranking, [0, 1]);
        assert_eq!(paragraph_ranking(&[7], &[0]), Err(MetricError::UnmappedCandidate(7)));
    }

    #[test]
    fn gold_sentence_third_but_paragraph_first() {
        // paragraph 0 holds the top two sentences and the gold sentence 2
        let scores = [0.9, 0.8, 0.7, 0.6];
        let para = [0, 0, 0, 1];
        assert_eq!(rank_gold(&scores, None, &[2]).unwrap().first(), Some(3));
        let mut scratch = Vec::new();
        let p = paragraph_gold_ranks(&scores, None, &para, 2, &[0], &mut scratch).unwrap();
        assert_eq!(p.first(), Some(1));
    }

    #[test]
    fn unreached_candidates_have_no_rank() {
        let scores = [0.1, 0.9, 0.5];
        let reached = [true, false, true];
        assert_eq!(rank_of(&scores, Some(&reached), 1), None);
        assert_eq!(rank_of(&scores, Some(&reached), 2), Some(1));
        assert_eq!(top_n(&scores, Some(&reached), 5), [2, 0]);
        assert_eq!(top_n(&scores, None, 2), [1, 2]);
        assert!(top_n(&scores, None, 0).is_empty());
    }

    #[test]
    fn report_by_type() {
        let outcomes = vec![outcome(&[1]), outcome(&[2]), outcome(&[20])];
        let types = [QuestionType::What, QuestionType::Who, QuestionType::What];
        let report = EvalReport::build(Granularity::Sentence, &outcomes, &types, 100, &DEFAULT_CUTOFFS).unwrap();
        assert_eq!(report.r_at[&1], 1.0 / 3.0);
        assert_eq!(report.by_type[&QuestionType::Who].mrr, 0.5);
        assert_eq!(report.by_type[&QuestionType::What].n_questions, 2);
        assert!(report.clamped.is_empty());
    }
}
