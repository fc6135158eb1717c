//! Rule-based sentence splitting with character offsets.
//!
//! A boundary candidate is a run of `.`, `!` or `?` (plus any closing quotes
//! or brackets) followed by whitespace and then an uppercase letter, a digit
//! or an opening quote/bracket. Periods after known abbreviations, single
//! letter initials and dotted acronyms ("U.S.") are not boundaries. A piece
//! without any alphanumeric character is never emitted on its own; it stays
//! attached to a neighbouring sentence.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A sentence inside a context, `[start, end)` in characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

pub trait SentenceSplitter {
    fn split(&self, context: &str) -> Vec<SentenceSpan>;
}

/// Lowercased, without the trailing period.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "gen", "col", "capt", "lt", "sgt", "cpl", "adm", "rev", "gov", "sen",
    "rep", "pres", "hon", "fr", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "e.g", "i.e", "etc",
    "vs", "no", "nos", "vol", "vols", "fig", "figs", "approx", "ca", "cf", "inc", "ltd", "co", "corp", "dept", "est", "ave", "blvd", "rd",
    "univ", "op", "pp", "ed", "eds", "al",
];

const TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}', '\u{bb}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201c}', '\u{2018}', '\u{ab}'];

#[derive(Debug, Clone)]
pub struct RuleSplitter {
    abbreviations: Vec<&'static str>,
}

impl Default for RuleSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS)
    }
}

impl RuleSplitter {
    pub fn with_abbreviations(list: &[&'static str]) -> Self {
        let mut abbreviations = list.to_vec();
        abbreviations.sort_unstable();
        abbreviations.dedup();
        Self { abbreviations }
    }

    fn suppresses(&self, chars: &[char], period: usize) -> bool {
        let mut from = period;
        while from > 0 && !chars[from - 1].is_whitespace() {
            from -= 1;
        }
        while from < period && OPENERS.contains(&chars[from]) {
            from += 1;
        }
        let word = &chars[from..period];
        if word.is_empty() {
            return false;
        }
        if word.len() == 1 && word[0].is_alphabetic() {
            return true;
        }
        if word.contains(&'.') {
            return word.split(|&c| c == '.').all(|seg| !seg.is_empty() && seg.len() <= 2 && seg.iter().all(|c| c.is_alphabetic()))
                || self.is_listed(word);
        }
        self.is_listed(word)
    }

    fn is_listed(&self, word: &[char]) -> bool {
        let mut lower = String::with_capacity(word.len());
        for c in word {
            lower.extend(c.to_lowercase());
        }
        self.abbreviations.binary_search(&lower.as_str()).is_ok()
    }
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_numeric() || OPENERS.contains(&c)
}

fn has_alphanumeric(chars: &[char]) -> bool {
    chars.iter().any(|c| c.is_alphanumeric())
}

fn span(chars: &[char], start: usize, end: usize) -> SentenceSpan {
    SentenceSpan { start, end, text: chars[start..end].iter().collect() }
}

impl SentenceSplitter for RuleSplitter {
    fn split(&self, context: &str) -> Vec<SentenceSpan> {
        let chars: Vec<char> = context.chars().collect();
        let n = chars.len();
        let Some(mut start) = chars.iter().position(|c| !c.is_whitespace()) else {
            return alloc::vec![span(&chars, 0, n)];
        };
        let last = chars.iter().rposition(|c| !c.is_whitespace()).map_or(n, |i| i + 1);
        let mut out: Vec<SentenceSpan> = Vec::new();
        let mut p = start;
        while p < last {
            if !TERMINALS.contains(&chars[p]) {
                p += 1;
                continue;
            }
            let mut end = p + 1;
            while end < n && TERMINALS.contains(&chars[end]) {
                end += 1;
            }
            while end < n && CLOSERS.contains(&chars[end]) {
                end += 1;
            }
            if end >= last || !chars[end].is_whitespace() {
                p = end;
                continue;
            }
            let mut next = end;
            while next < n && chars[next].is_whitespace() {
                next += 1;
            }
            let is_boundary = starts_sentence(chars[next])
                && !(end == p + 1 && chars[p] == '.' && self.suppresses(&chars, p))
                && has_alphanumeric(&chars[start..end]);
            if is_boundary {
                out.push(span(&chars, start, end));
                start = next;
            }
            p = next;
        }
        match out.last_mut() {
            Some(prev) if !has_alphanumeric(&chars[start..last]) => *prev = span(&chars, prev.start, last),
            _ => out.push(span(&chars, start, last)),
        }
        out
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SegmentError {
    #[error("answer offset {offset} is outside a context of {len} characters")]
    OutOfRange { offset: usize, len: usize },
    #[error("no sentences to search")]
    NoSentences,
}

/// Index of the sentence holding character `answer_start`.
///
/// An offset that falls between sentences resolves to the following sentence;
/// one in trailing whitespace resolves to the last sentence.
pub fn locate_answer_sentence(spans: &[SentenceSpan], context_len: usize, answer_start: usize) -> Result<usize, SegmentError> {
    if answer_start >= context_len {
        return Err(SegmentError::OutOfRange { offset: answer_start, len: context_len });
    }
    if spans.is_empty() {
        return Err(SegmentError::NoSentences);
    }
    let idx = spans.partition_point(|s| s.end <= answer_start);
    Ok(idx.min(spans.len() - 1))
}
