//! Shared text normalization for every n-gram metric and the HAP scanner.

use alloc::string::String;
use alloc::vec::Vec;
use unicode_normalization::UnicodeNormalization;

fn nfkc_lower(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.nfkc() {
        out.extend(c.to_lowercase());
    }
    out
}

/// NFKC-normalizes, lowercases, and splits on every run of non-alphanumeric
/// characters. Empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    nfkc_lower(text).split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(String::from).collect()
}

/// A token together with the byte span of the source text it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpannedToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Like [`tokenize`] but keeps byte offsets into the original text.
///
/// The original is segmented first; each segment is then normalized and split
/// again, so characters that NFKC expands into several tokens all share the
/// segment's span.
pub fn tokenize_spans(text: &str) -> Vec<SpannedToken> {
    let mut out = Vec::new();
    let mut seg_start: Option<usize> = None;
    let flush = |start: usize, end: usize, out: &mut Vec<SpannedToken>| {
        for piece in nfkc_lower(&text[start..end]).split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            out.push(SpannedToken { text: piece.into(), start, end });
        }
    };
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            seg_start.get_or_insert(i);
        } else if let Some(s) = seg_start.take() {
            flush(s, i, &mut out);
        }
    }
    if let Some(s) = seg_start {
        flush(s, text.len(), &mut out);
    }
    out
}

/// Normalization used by exact match: NFKC, lowercase, trimmed, inner
/// whitespace collapsed, terminal `.,!?` removed.
pub fn normalize_answer(text: &str) -> String {
    let lowered = nfkc_lower(text);
    let mut collapsed = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !collapsed.is_empty() {
            collapsed.push(' ');
        }
        collapsed.push_str(word);
    }
    let trimmed = collapsed.trim_end_matches(['.', ',', '!', '?']).trim_end();
    String::from(trimmed)
}
