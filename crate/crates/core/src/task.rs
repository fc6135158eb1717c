//! Task construction: the answer index (every sentence of every paragraph is a
//! candidate), the question set, and the gold map.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, ParagraphId};
use crate::segment::{SentenceSpan, SentenceSplitter};
use crate::text::raw_tokens;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskError {
    #[error("question {question_id}: answer at offset {offset} cannot be mapped to a sentence of paragraph {paragraph}")]
    UnmappableAnswer { question_id: String, paragraph: ParagraphId, offset: usize },
    #[error("corpus has no paragraphs")]
    EmptyCorpus,
}

/// One sentence of the answer index. `candidate_id` is its row in the answer
/// embedding matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: u32,
    pub sentence: String,
    /// Dense index into [`AnswerIndex::paragraphs`].
    pub paragraph: u32,
    pub paragraph_id: ParagraphId,
    pub sentence_index: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphEntry {
    pub paragraph_id: ParagraphId,
    pub context: String,
    pub first_candidate: u32,
    pub sentence_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnswerIndex {
    pub candidates: Vec<Candidate>,
    pub paragraphs: Vec<ParagraphEntry>,
}

impl AnswerIndex {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The enclosing paragraph text of a candidate.
    pub fn context(&self, candidate: &Candidate) -> &str {
        &self.paragraphs[candidate.paragraph as usize].context
    }

    pub fn sentences(&self, paragraph: usize) -> &[Candidate] {
        let p = &self.paragraphs[paragraph];
        let from = p.first_candidate as usize;
        &self.candidates[from..from + p.sentence_count as usize]
    }

    /// Paragraph index of every candidate, by candidate id.
    pub fn paragraph_of(&self) -> Vec<u32> {
        self.candidates.iter().map(|c| c.paragraph).collect()
    }
}

/// Splits every paragraph of `corpus` and lists the sentences in
/// (article, paragraph, sentence) order.
pub fn build_answer_index(corpus: &Corpus, splitter: &impl SentenceSplitter) -> AnswerIndex {
    let mut index = AnswerIndex::default();
    for (p, paragraph) in corpus.paragraphs().enumerate() {
        let spans = splitter.split(&paragraph.context);
        let first = index.candidates.len() as u32;
        index.paragraphs.push(ParagraphEntry {
            paragraph_id: paragraph.paragraph_id,
            context: paragraph.context.clone(),
            first_candidate: first,
            sentence_count: spans.len() as u32,
        });
        for (s, SentenceSpan { start, end, text }) in spans.into_iter().enumerate() {
            index.candidates.push(Candidate {
                candidate_id: index.candidates.len() as u32,
                sentence: text,
                paragraph: p as u32,
                paragraph_id: paragraph.paragraph_id,
                sentence_index: s as u32,
                start,
                end,
            });
        }
    }
    index
}

/// Question categories, keyed on the leading wh- word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    What,
    Who,
    How,
    When,
    Which,
    Where,
    Why,
    Other,
}

impl QuestionType {
    pub const ALL: [QuestionType; 8] = [
        QuestionType::What,
        QuestionType::Who,
        QuestionType::How,
        QuestionType::When,
        QuestionType::Which,
        QuestionType::Where,
        QuestionType::Why,
        QuestionType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::Who => "who",
            QuestionType::How => "how",
            QuestionType::When => "when",
            QuestionType::Which => "which",
            QuestionType::Where => "where",
            QuestionType::Why => "why",
            QuestionType::Other => "other",
        }
    }

    fn from_word(word: &str) -> Option<Self> {
        Self::ALL[..7].iter().copied().find(|t| word.eq_ignore_ascii_case(t.as_str()))
    }
}

/// Prepositions that may precede "what"/"which".
pub const LEADING_PREPOSITIONS: &[&str] = &["at", "by", "in", "on", "with", "to", "for", "from", "of", "about", "during", "after", "under"];

/// Assigns the type whose word the question starts with. A single leading
/// preposition is skipped when it is followed by "what" or "which".
pub fn classify_question(text: &str) -> QuestionType {
    let mut words = raw_tokens(text);
    let Some(first) = words.next() else {
        return QuestionType::Other;
    };
    if let Some(t) = QuestionType::from_word(first) {
        return t;
    }
    if LEADING_PREPOSITIONS.iter().any(|p| first.eq_ignore_ascii_case(p)) {
        if let Some(t @ (QuestionType::What | QuestionType::Which)) = words.next().and_then(QuestionType::from_word) {
            return t;
        }
    }
    QuestionType::Other
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    /// Identifier from the source data; not necessarily unique.
    pub question_id: String,
    pub text: String,
    pub question_type: QuestionType,
    /// Paragraph the question was written against.
    pub paragraph: u32,
}

/// Questions in corpus order; position is the row in the question matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuestionSet {
    pub questions: Vec<Question>,
}

impl QuestionSet {
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn types(&self) -> Vec<QuestionType> {
        self.questions.iter().map(|q| q.question_type).collect()
    }
}

pub fn build_question_set(corpus: &Corpus) -> QuestionSet {
    let mut questions = Vec::new();
    for (p, paragraph) in corpus.paragraphs().enumerate() {
        for q in &paragraph.qas {
            questions.push(Question {
                question_id: q.question_id.clone(),
                text: q.question_text.clone(),
                question_type: classify_question(&q.question_text),
                paragraph: p as u32,
            });
        }
    }
    QuestionSet { questions }
}

/// Correct candidates and paragraphs of one question; both sorted and non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Gold {
    pub candidates: Vec<u32>,
    pub paragraphs: Vec<u32>,
}

/// Gold sets indexed by question row.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldMap {
    pub entries: Vec<Gold>,
}

impl GoldMap {
    pub fn get(&self, question: usize) -> &Gold {
        &self.entries[question]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Key used to merge the same question asked against different contexts:
/// lowercased, whitespace collapsed, trailing punctuation removed.
pub fn normalize_question(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out.trim_end_matches(|c: char| !c.is_alphanumeric()).to_string()
}

/// Gold sentences are those holding the start of any answer span; questions
/// with the same normalized text then share the union of their gold sets.
pub fn build_gold_map(corpus: &Corpus, index: &AnswerIndex) -> Result<GoldMap, TaskError> {
    let mut entries = Vec::new();
    let mut by_text: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (p, paragraph) in corpus.paragraphs().enumerate() {
        let sentences = index.sentences(p);
        let len = paragraph.context.chars().count();
        for q in &paragraph.qas {
            let mut gold = Vec::with_capacity(q.answers.len());
            for answer in &q.answers {
                if answer.start >= len || sentences.is_empty() {
                    return Err(TaskError::UnmappableAnswer {
                        question_id: q.question_id.clone(),
                        paragraph: paragraph.paragraph_id,
                        offset: answer.start,
                    });
                }
                let s = sentences.partition_point(|c| c.end <= answer.start).min(sentences.len() - 1);
                gold.push(sentences[s].candidate_id);
            }
            gold.sort_unstable();
            gold.dedup();
            by_text.entry(normalize_question(&q.question_text)).or_default().push(entries.len());
            entries.push(gold);
        }
    }

    let mut merged: Vec<Vec<u32>> = entries.clone();
    for group in by_text.values().filter(|g| g.len() > 1) {
        let mut union: Vec<u32> = group.iter().flat_map(|&i| entries[i].iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        for &i in group {
            merged[i] = union.clone();
        }
    }

    let entries = merged
        .into_iter()
        .map(|candidates| {
            let mut paragraphs: Vec<u32> = candidates.iter().map(|&c| index.candidates[c as usize].paragraph).collect();
            paragraphs.sort_unstable();
            paragraphs.dedup();
            Gold { candidates, paragraphs }
        })
        .collect();
    Ok(GoldMap { entries })
}

/// The complete retrieval task built from one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub source_name: String,
    pub index: AnswerIndex,
    pub questions: QuestionSet,
    pub gold: GoldMap,
}

impl Task {
    pub fn build(corpus: &Corpus, splitter: &impl SentenceSplitter) -> Result<Self, TaskError> {
        if corpus.paragraphs().next().is_none() {
            return Err(TaskError::EmptyCorpus);
        }
        let index = build_answer_index(corpus, splitter);
        let questions = build_question_set(corpus);
        let gold = build_gold_map(corpus, &index)?;
        Ok(Task { source_name: corpus.source_name.clone(), index, questions, gold })
    }
}
