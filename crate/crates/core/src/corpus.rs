//! The canonical corpus model: articles → paragraphs → questions with
//! character-offset answer spans, plus the simplified Natural Questions filter.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("article {article} has no paragraphs")]
    EmptyArticle { article: usize },
    #[error("paragraph {0} has an empty or whitespace-only context")]
    BlankContext(ParagraphId),
    #[error("question {question_id}: question text is empty")]
    EmptyQuestion { question_id: String },
    #[error("question {question_id}: no answers")]
    NoAnswers { question_id: String },
    #[error("question {question_id}: answer span [{start}, {end}) lies outside a context of {len} characters")]
    SpanOutOfRange { question_id: String, start: usize, end: usize, len: usize },
    #[error("question {question_id}: answer text {expected:?} does not match context text {found:?} at offset {start}")]
    SpanMismatch { question_id: String, start: usize, expected: String, found: String },
    #[error("question {question_id}: empty answer text")]
    EmptyAnswer { question_id: String },
    #[error("nq record {record}: span [{start}, {end}) lies outside a context of {len} characters")]
    NqSpanOutOfRange { record: usize, start: usize, end: usize, len: usize },
}

/// Stable paragraph identifier: (article index, paragraph index within the article).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParagraphId {
    pub article: u32,
    pub paragraph: u32,
}

impl core::fmt::Display for ParagraphId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.article, self.paragraph)
    }
}

/// One annotated answer; `start` counts Unicode scalar values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub start: usize,
    pub text: String,
}

impl AnswerSpan {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub question_text: String,
    pub answers: Vec<AnswerSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub paragraph_id: ParagraphId,
    pub context: String,
    pub qas: Vec<QuestionRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub source_name: String,
    pub articles: Vec<Article>,
}

/// Structural counts of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub articles: usize,
    pub paragraphs: usize,
    pub questions: usize,
}

impl Corpus {
    /// Builds a corpus, assigning paragraph ids from positions and validating
    /// every invariant.
    pub fn new(source_name: impl Into<String>, mut articles: Vec<Article>) -> Result<Self, CorpusError> {
        for (a, article) in articles.iter_mut().enumerate() {
            for (p, paragraph) in article.paragraphs.iter_mut().enumerate() {
                paragraph.paragraph_id = ParagraphId { article: a as u32, paragraph: p as u32 };
            }
        }
        let corpus = Corpus { source_name: source_name.into(), articles };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for (a, article) in self.articles.iter().enumerate() {
            if article.paragraphs.is_empty() {
                return Err(CorpusError::EmptyArticle { article: a });
            }
            for paragraph in &article.paragraphs {
                paragraph.validate()?;
            }
        }
        Ok(())
    }

    pub fn paragraphs(&self) -> impl Iterator<Item = &Paragraph> {
        self.articles.iter().flat_map(|a| a.paragraphs.iter())
    }

    pub fn questions(&self) -> impl Iterator<Item = (&Paragraph, &QuestionRecord)> {
        self.paragraphs().flat_map(|p| p.qas.iter().map(move |q| (p, q)))
    }

    pub fn counts(&self) -> CorpusCounts {
        CorpusCounts { articles: self.articles.len(), paragraphs: self.paragraphs().count(), questions: self.questions().count() }
    }
}

impl Paragraph {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.context.trim().is_empty() {
            return Err(CorpusError::BlankContext(self.paragraph_id));
        }
        let len = self.context.chars().count();
        for q in &self.qas {
            if q.question_text.trim().is_empty() {
                return Err(CorpusError::EmptyQuestion { question_id: q.question_id.clone() });
            }
            if q.answers.is_empty() {
                return Err(CorpusError::NoAnswers { question_id: q.question_id.clone() });
            }
            for answer in &q.answers {
                check_span(&self.context, len, answer).map_err(|e| match e {
                    SpanCheck::Empty => CorpusError::EmptyAnswer { question_id: q.question_id.clone() },
                    SpanCheck::OutOfRange { end } => {
                        CorpusError::SpanOutOfRange { question_id: q.question_id.clone(), start: answer.start, end, len }
                    }
                    SpanCheck::Mismatch(found) => CorpusError::SpanMismatch {
                        question_id: q.question_id.clone(),
                        start: answer.start,
                        expected: answer.text.clone(),
                        found,
                    },
                })?;
            }
        }
        Ok(())
    }
}

enum SpanCheck {
    Empty,
    OutOfRange { end: usize },
    Mismatch(String),
}

fn check_span(context: &str, context_len: usize, answer: &AnswerSpan) -> Result<(), SpanCheck> {
    let n = answer.char_len();
    if n == 0 {
        return Err(SpanCheck::Empty);
    }
    let end = answer.start + n;
    if end > context_len {
        return Err(SpanCheck::OutOfRange { end });
    }
    let found = char_slice(context, answer.start, end);
    if found != answer.text {
        return Err(SpanCheck::Mismatch(found.to_string()));
    }
    Ok(())
}

/// Substring of `s` between character offsets `start` and `end`.
///
/// Offsets past the end are clamped.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(core::iter::once(s.len()));
    let b0 = indices.by_ref().nth(start).unwrap_or(s.len());
    let b1 = if end > start { indices.nth(end - start - 1).unwrap_or(s.len()) } else { b0 };
    &s[b0..b1]
}

/// Enclosing block of a simplified Natural Questions record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockType {
    Paragraph,
    List,
    Table,
}

/// Short-answer span in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NqSpan {
    pub start: usize,
    pub length: usize,
}

/// One pre-simplified Natural Questions example: a question, the text of the
/// block holding its annotation, and the short-answer spans in that text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NqRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub question: String,
    pub context: String,
    #[serde(default)]
    pub block_type: Option<BlockType>,
    #[serde(default)]
    pub spans: Vec<NqSpan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NqFilterSummary {
    pub records_in: usize,
    pub retained: usize,
    pub dropped_no_span: usize,
    pub dropped_multi_span: usize,
    pub dropped_non_paragraph: usize,
    pub rejected_missing_block_type: usize,
}

impl NqFilterSummary {
    pub fn dropped(&self) -> usize {
        self.dropped_no_span + self.dropped_multi_span + self.dropped_non_paragraph + self.rejected_missing_block_type
    }
}

/// Keeps records with exactly one short-answer span inside a paragraph block.
///
/// Every retained record becomes its own paragraph with a single question,
/// all under one article named after `source_name`. Records without an id get
/// `nq-<position>`.
pub fn filter_nq_records<I>(source_name: &str, records: I) -> Result<(Corpus, NqFilterSummary), CorpusError>
where
    I: IntoIterator<Item = NqRecord>,
{
    let mut summary = NqFilterSummary::default();
    let mut paragraphs = Vec::new();
    for (pos, record) in records.into_iter().enumerate() {
        summary.records_in += 1;
        let Some(block) = record.block_type else {
            summary.rejected_missing_block_type += 1;
            continue;
        };
        let len = record.context.chars().count();
        for span in &record.spans {
            let end = span.start + span.length;
            if span.length == 0 || end > len {
                return Err(CorpusError::NqSpanOutOfRange { record: pos, start: span.start, end, len });
            }
        }
        match (record.spans.len(), block) {
            (0, _) => summary.dropped_no_span += 1,
            (1, BlockType::Paragraph) => {
                let span = record.spans[0];
                let text = char_slice(&record.context, span.start, span.start + span.length).to_string();
                let question_id = record.id.unwrap_or_else(|| format!("nq-{pos}"));
                summary.retained += 1;
                paragraphs.push(Paragraph {
                    paragraph_id: ParagraphId { article: 0, paragraph: 0 },
                    context: record.context,
                    qas: alloc::vec![QuestionRecord {
                        question_id,
                        question_text: record.question,
                        answers: alloc::vec![AnswerSpan { start: span.start, text }],
                    }],
                });
            }
            (1, _) => summary.dropped_non_paragraph += 1,
            _ => summary.dropped_multi_span += 1,
        }
    }
    let articles = if paragraphs.is_empty() { Vec::new() } else { alloc::vec![Article { title: source_name.to_string(), paragraphs }] };
    Ok((Corpus::new(source_name, articles)?, summary))
}
