use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::SafetyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiiKind {
    Email,
    Phone,
    SsnLike,
    CreditCard,
    IpAddress,
}

impl PiiKind {
    pub fn placeholder(self) -> &'static str {
        match self {
            PiiKind::Email => "[EMAIL]",
            PiiKind::Phone => "[PHONE]",
            PiiKind::SsnLike => "[SSN_LIKE]",
            PiiKind::CreditCard => "[CREDIT_CARD]",
            PiiKind::IpAddress => "[IP_ADDRESS]",
        }
    }
}

impl fmt::Display for PiiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PiiKind::Email => "email",
            PiiKind::Phone => "phone",
            PiiKind::SsnLike => "ssn_like",
            PiiKind::CreditCard => "credit_card",
            PiiKind::IpAddress => "ip_address",
        };
        f.write_str(s)
    }
}

/// A detected PII span. `start..end` are byte offsets into the scanned text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiFinding {
    pub kind: PiiKind,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub redaction: String,
}

/// Rule-based PII detection. Overlaps are resolved longest-first (earlier
/// start on ties) and the result is sorted by start offset.
pub fn scan_pii(text: &str) -> Vec<PiiFinding> {
    let bytes = text.as_bytes();
    let mut raw: Vec<(PiiKind, usize, usize)> = Vec::new();
    raw.extend(scan_emails(bytes));
    raw.extend(scan_numeric(bytes));

    raw.sort_by(|a, b| (b.2 - b.1).cmp(&(a.2 - a.1)).then(a.1.cmp(&b.1)));
    let mut kept: Vec<(PiiKind, usize, usize)> = Vec::new();
    for cand in raw {
        if kept.iter().all(|k| cand.2 <= k.1 || cand.1 >= k.2) {
            kept.push(cand);
        }
    }
    kept.sort_by_key(|k| k.1);
    kept.into_iter()
        .map(|(kind, start, end)| PiiFinding {
            kind,
            start,
            end,
            surface: text[start..end].into(),
            redaction: kind.placeholder().into(),
        })
        .collect()
}

/// Replaces every finding's span with its `[KIND]` placeholder.
pub fn redact(text: &str, findings: &[PiiFinding]) -> Result<String, SafetyError> {
    let mut sorted: Vec<&PiiFinding> = findings.iter().collect();
    sorted.sort_by_key(|f| f.start);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for f in sorted {
        let bad = f.start >= f.end
            || f.end > text.len()
            || f.start < cursor
            || !text.is_char_boundary(f.start)
            || !text.is_char_boundary(f.end);
        if bad {
            return Err(SafetyError::SpanOutOfRange { start: f.start, end: f.end });
        }
        out.push_str(&text[cursor..f.start]);
        out.push_str(f.kind.placeholder());
        cursor = f.end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

fn is_local_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'%' | b'+' | b'-')
}

fn is_domain_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'.' | b'-')
}

fn scan_emails(bytes: &[u8]) -> Vec<(PiiKind, usize, usize)> {
    let mut out = Vec::new();
    for (at, _) in bytes.iter().enumerate().filter(|(_, b)| **b == b'@') {
        let mut start = at;
        while start > 0 && is_local_char(bytes[start - 1]) {
            start -= 1;
        }
        while start < at && matches!(bytes[start], b'.' | b'-' | b'+') {
            start += 1;
        }
        if start == at {
            continue;
        }
        let mut end = at + 1;
        while end < bytes.len() && is_domain_char(bytes[end]) {
            end += 1;
        }
        while end > at + 1 && matches!(bytes[end - 1], b'.' | b'-') {
            end -= 1;
        }
        let domain = &bytes[at + 1..end];
        let labels: Vec<&[u8]> = domain.split(|b| *b == b'.').collect();
        let valid = labels.len() >= 2
            && labels.iter().all(|l| !l.is_empty() && l[0] != b'-' && l[l.len() - 1] != b'-')
            && labels.last().is_some_and(|t| t.len() >= 2 && t.iter().all(u8::is_ascii_alphabetic));
        if valid {
            out.push((PiiKind::Email, start, end));
        }
    }
    out
}

/// Maximal ASCII digit runs as `(start, end)`.
fn digit_groups(bytes: &[u8]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let s = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            groups.push((s, i));
        } else {
            i += 1;
        }
    }
    groups
}

struct Groups<'a> {
    bytes: &'a [u8],
    spans: Vec<(usize, usize)>,
}

impl<'a> Groups<'a> {
    fn len_of(&self, g: usize) -> usize {
        self.spans[g].1 - self.spans[g].0
    }

    fn sep(&self, g: usize) -> &'a [u8] {
        &self.bytes[self.spans[g].1..self.spans[g + 1].0]
    }

    fn digits(&self, from: usize, to: usize) -> impl Iterator<Item = u8> + '_ {
        (from..=to).flat_map(move |g| self.bytes[self.spans[g].0..self.spans[g].1].iter().map(|b| b - b'0'))
    }

    fn value(&self, g: usize) -> u32 {
        self.digits(g, g).fold(0u32, |acc, d| acc.saturating_mul(10).saturating_add(u32::from(d)))
    }

    fn before(&self, pos: usize) -> Option<u8> {
        pos.checked_sub(1).map(|p| self.bytes[p])
    }

    fn after(&self, pos: usize) -> Option<u8> {
        self.bytes.get(pos).copied()
    }

    /// True when `pos` is followed by `sep_chars` then a digit, i.e. the
    /// number continues.
    fn continues(&self, pos: usize, sep_chars: &[u8]) -> bool {
        match self.after(pos) {
            Some(b) if b.is_ascii_alphanumeric() => true,
            Some(b) if sep_chars.contains(&b) => self.after(pos + 1).is_some_and(|n| n.is_ascii_digit()),
            _ => false,
        }
    }

    fn clean_left(&self, pos: usize, sep_chars: &[u8]) -> bool {
        match self.before(pos) {
            None => true,
            Some(b) if b.is_ascii_alphanumeric() || b == b'_' => false,
            Some(b) if sep_chars.contains(&b) => !pos.checked_sub(2).is_some_and(|p| self.bytes[p].is_ascii_digit()),
            _ => true,
        }
    }
}

fn luhn_valid(digits: &[u8]) -> bool {
    let mut sum = 0u32;
    for (i, d) in digits.iter().rev().enumerate() {
        let mut v = u32::from(*d);
        if i % 2 == 1 {
            v *= 2;
            if v > 9 {
                v -= 9;
            }
        }
        sum += v;
    }
    sum.is_multiple_of(10)
}

fn scan_numeric(bytes: &[u8]) -> Vec<(PiiKind, usize, usize)> {
    let g = Groups { bytes, spans: digit_groups(bytes) };
    let mut out = Vec::new();
    for i in 0..g.spans.len() {
        let candidates = [match_ipv4(&g, i), match_ssn(&g, i), match_card(&g, i), match_phone(&g, i)];
        if let Some(best) =
            candidates.into_iter().flatten().max_by(|a, b| (a.2 - a.1).cmp(&(b.2 - b.1)).then(b.1.cmp(&a.1)))
        {
            out.push(best);
        }
    }
    out
}

fn match_ipv4(g: &Groups<'_>, i: usize) -> Option<(PiiKind, usize, usize)> {
    if i + 3 >= g.spans.len() {
        return None;
    }
    let octets_ok = (i..i + 4).all(|k| (1..=3).contains(&g.len_of(k)) && g.value(k) <= 255);
    let seps_ok = (i..i + 3).all(|k| g.sep(k) == b".");
    let (start, end) = (g.spans[i].0, g.spans[i + 3].1);
    (octets_ok && seps_ok && g.clean_left(start, b".") && !g.continues(end, b".")).then_some((
        PiiKind::IpAddress,
        start,
        end,
    ))
}

fn match_ssn(g: &Groups<'_>, i: usize) -> Option<(PiiKind, usize, usize)> {
    if i + 2 >= g.spans.len() {
        return None;
    }
    let shape = g.len_of(i) == 3 && g.len_of(i + 1) == 2 && g.len_of(i + 2) == 4;
    let seps = g.sep(i) == b"-" && g.sep(i + 1) == b"-";
    let (start, end) = (g.spans[i].0, g.spans[i + 2].1);
    (shape && seps && g.clean_left(start, b"-") && !g.continues(end, b"-")).then_some((PiiKind::SsnLike, start, end))
}

fn match_card(g: &Groups<'_>, i: usize) -> Option<(PiiKind, usize, usize)> {
    let start = g.spans[i].0;
    if !g.clean_left(start, b" -") {
        return None;
    }
    let max_last = (i + 7).min(g.spans.len() - 1);
    for last in (i..=max_last).rev() {
        let seps_uniform = (i..last).all(|k| {
            let s = g.sep(k);
            (s == b" " || s == b"-") && s == g.sep(i)
        });
        if !seps_uniform {
            continue;
        }
        if last > i && (i..=last).any(|k| g.len_of(k) < 3) {
            continue;
        }
        let digits: Vec<u8> = g.digits(i, last).collect();
        let end = g.spans[last].1;
        if (13..=19).contains(&digits.len())
            && luhn_valid(&digits)
            && !g.after(end).is_some_and(|b| b.is_ascii_alphanumeric())
        {
            return Some((PiiKind::CreditCard, start, end));
        }
    }
    None
}

fn phone_sep(s: &[u8]) -> bool {
    matches!(s, b" " | b"-" | b"." | b") " | b")" | b" (" | b"(" | b") -")
}

fn match_phone(g: &Groups<'_>, i: usize) -> Option<(PiiKind, usize, usize)> {
    let start = g.spans[i].0;
    let n = g.spans.len();

    // international: "+" then 8..=15 digits
    if g.before(start) == Some(b'+') && g.clean_left(start - 1, b"") {
        let max_last = (i + 5).min(n - 1);
        for last in (i..=max_last).rev() {
            if !(i..last).all(|k| phone_sep(g.sep(k))) {
                continue;
            }
            let count = g.digits(i, last).count();
            let end = g.spans[last].1;
            if (8..=15).contains(&count) && !g.continues(end, b"-. ") {
                return Some((PiiKind::Phone, start - 1, end));
            }
        }
    }

    // North American grouped: [1-](ddd) ddd-dddd, ddd-ddd-dddd, ddd.ddd.dddd, ddd ddd dddd
    let area_first = |a: usize| -> Option<(usize, usize)> {
        if a + 2 >= n || g.len_of(a) != 3 || g.len_of(a + 1) != 3 || g.len_of(a + 2) != 4 {
            return None;
        }
        let paren = g.before(g.spans[a].0) == Some(b'(') && matches!(g.sep(a), b")" | b") " | b")-");
        let plain = matches!(g.sep(a), b"-" | b"." | b" ") && g.sep(a) == g.sep(a + 1);
        let tail_ok = matches!(g.sep(a + 1), b"-" | b"." | b" ");
        if !(paren && tail_ok || plain) {
            return None;
        }
        let s = if paren { g.spans[a].0 - 1 } else { g.spans[a].0 };
        Some((s, g.spans[a + 2].1))
    };
    let mut best = None;
    if g.len_of(i) == 1 && g.value(i) == 1 && i + 1 < n && matches!(g.sep(i), b"-" | b" " | b"." | b" (" | b"(") {
        if let Some((_, e)) = area_first(i + 1) {
            best = Some((start, e));
        }
    }
    if best.is_none() {
        best = area_first(i);
    }
    let (s, e) = best?;
    (g.clean_left(s, b"-.") && !g.continues(e, b"-.")).then_some((PiiKind::Phone, s, e))
}
