//! Core algorithms for turning span-annotated reading-comprehension data into
//! corpus-wide answer-retrieval tasks and scoring retrieval systems on them.
//!
//! This crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, JSON, threads or the command line lives in the `reqa` crate.
//!
//! The pipeline, bottom-up:
//!
//! - [`corpus`]: the canonical article → paragraph → question model and the
//!   simplified Natural Questions filter.
//! - [`segment`]: rule-based sentence splitting with character offsets.
//! - [`task`]: the answer index (one candidate per sentence), the question
//!   set and the gold map with duplicate-question merging.
//! - [`encode`]: the hashing TF-IDF dual encoder.
//! - [`matrix`], [`score`]: dense embedding matrices and blocked dot-product
//!   scoring.
//! - [`ivf`]: inverted-file approximate nearest-neighbour search.
//! - [`bm25`]: Okapi BM25 paragraph retrieval.
//! - [`metrics`]: ranks, MRR, R@N and paragraph-level evaluation.
//! - [`stats`]: dataset characterization.
#![no_std]

extern crate alloc;

pub mod bm25;
pub mod corpus;
pub mod encode;
pub mod ivf;
pub mod matrix;
pub mod metrics;
pub mod score;
pub mod segment;
pub mod stats;
pub mod task;
pub mod text;

pub use corpus::{AnswerSpan, Article, Corpus, CorpusError, Paragraph, ParagraphId, QuestionRecord};
pub use matrix::EmbeddingMatrix;
pub use segment::{RuleSplitter, SentenceSpan, SentenceSplitter};
pub use task::{AnswerIndex, Candidate, GoldMap, QuestionSet, QuestionType, Task};
