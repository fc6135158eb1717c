//! Shared tokenization: lowercase, split on anything that is not alphanumeric.

use alloc::string::String;
use alloc::vec::Vec;

/// Iterates over the alphanumeric runs of `text`, borrowed and not yet lowercased.
pub fn raw_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

fn lowercase(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        out.extend(c.to_lowercase());
    }
    out
}

/// Lowercased alphanumeric tokens of `text`, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    raw_tokens(text).map(lowercase).collect()
}

/// Number of tokens [`tokenize`] would produce, without allocating them.
pub fn token_count(text: &str) -> usize {
    raw_tokens(text).count()
}

pub fn has_token(text: &str) -> bool {
    raw_tokens(text).next().is_some()
}
