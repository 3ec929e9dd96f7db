//! PII and hate/abuse/profanity (HAP) screening.

mod hap;
mod pii;

pub use hap::{scan_hap, HapConfig, HapHit, HapReport, Lexicon};
pub use pii::{redact, scan_pii, PiiFinding, PiiKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SafetyError {
    #[error("no HAP lexicon loaded")]
    LexiconMissing,
    #[error("finding span {start}..{end} is out of range or overlaps another")]
    SpanOutOfRange { start: usize, end: usize },
}
