use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SafetyError;
use crate::hash::sha256_hex;
use crate::text::{tokenize, tokenize_spans};

/// A HAP term list, one lowercase term or phrase per line, `#` comments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    phrases: Vec<Vec<String>>,
    id: String,
}

impl Lexicon {
    pub fn parse(text: &str) -> Self {
        let mut phrases: Vec<Vec<String>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(tokenize)
            .filter(|p| !p.is_empty())
            .collect();
        phrases.sort();
        phrases.dedup();
        Lexicon { phrases, id: sha256_hex(text.as_bytes()) }
    }

    /// Content hash of the lexicon source.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapConfig {
    pub density_multiplier: f64,
}

impl Default for HapConfig {
    fn default() -> Self {
        HapConfig { density_multiplier: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HapHit {
    pub term: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapReport {
    pub score: f64,
    pub hits: Vec<HapHit>,
    pub lexicon_id: String,
}

/// Whole-token, case-insensitive lexicon matching. The longest phrase wins at
/// each position and matches do not overlap. Score is
/// `min(1, hits / max(1, tokens) * multiplier)`.
pub fn scan_hap(text: &str, lexicon: Option<&Lexicon>, config: &HapConfig) -> Result<HapReport, SafetyError> {
    let lexicon = lexicon.ok_or(SafetyError::LexiconMissing)?;
    let tokens = tokenize_spans(text);
    let mut hits = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let matched = lexicon
            .phrases
            .iter()
            .filter(|p| p.len() <= tokens.len() - i && p.iter().zip(&tokens[i..]).all(|(a, b)| *a == b.text))
            .max_by_key(|p| p.len());
        match matched {
            Some(p) => {
                hits.push(HapHit { term: p.join(" "), start: tokens[i].start, end: tokens[i + p.len() - 1].end });
                i += p.len();
            }
            None => i += 1,
        }
    }
    let density = hits.len() as f64 / tokens.len().max(1) as f64;
    let score = (density * config.density_multiplier).min(1.0);
    Ok(HapReport { score, hits, lexicon_id: lexicon.id.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(s: &str) -> Lexicon {
        Lexicon::parse(s)
    }

    #[test]
    fn empty_lexicon_scores_zero() {
        let r = scan_hap("anything at all", Some(&lex("# nothing\n")), &HapConfig::default()).unwrap();
        assert_eq!(r.score, 0.0);
        assert!(r.hits.is_empty());
    }

    #[test]
    fn one_hit_in_ten_tokens_saturates() {
        let text = "one two three four five six seven eight nine darn";
        let r = scan_hap(text, Some(&lex("darn\n")), &HapConfig::default()).unwrap();
        assert_eq!(r.hits.len(), 1);
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn density_below_cap() {
        let text = (0..39).map(|_| "ok ").collect::<String>() + "Darn";
        let r = scan_hap(&text, Some(&lex("darn")), &HapConfig::default()).unwrap();
        assert!((r.score - 0.25).abs() < 1e-15);
    }

    #[test]
    fn no_hits() {
        let r = scan_hap("kind words only", Some(&lex("darn\nheck")), &HapConfig::default()).unwrap();
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn phrases_and_whole_tokens() {
        let l = lex("go away\nheck");
        let text = "Please GO AWAY, checkers heck!";
        let r = scan_hap(text, Some(&l), &HapConfig::default()).unwrap();
        let terms: Vec<_> = r.hits.iter().map(|h| h.term.as_str()).collect();
        assert_eq!(terms, ["go away", "heck"]);
        assert_eq!(&text[r.hits[0].start..r.hits[0].end], "GO AWAY");
    }

    #[test]
    fn missing_lexicon() {
        assert_eq!(scan_hap("x", None, &HapConfig::default()), Err(SafetyError::LexiconMissing));
    }

    #[test]
    fn lexicon_identity_is_content_hash() {
        assert_eq!(lex("a\nb").id(), lex("a\nb").id());
        assert_ne!(lex("a\nb").id(), lex("a\nc").id());
    }
}
