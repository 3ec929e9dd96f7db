use super::{MetricError, MetricId, MetricValue};
use crate::text::tokenize;

const VOWELS: &str = "aeiouyàáâäæèéêëìíîïòóôöœùúûüÿ";

/// Vowel-group syllable estimate with a silent trailing "e"; at least 1.
pub(crate) fn syllables(word: &str) -> usize {
    if !word.chars().any(char::is_alphabetic) {
        return 1;
    }
    let mut count = 0;
    let mut in_group = false;
    for c in word.chars() {
        let v = VOWELS.contains(c);
        if v && !in_group {
            count += 1;
        }
        in_group = v;
    }
    if count > 1 && word.ends_with('e') && !word.ends_with("le") {
        count -= 1;
    }
    count.max(1)
}

/// Counts segments between `.`, `!` and `?` runs that contain a word; at
/// least 1.
fn sentence_count(text: &str) -> usize {
    text.split(['.', '!', '?']).filter(|s| s.chars().any(char::is_alphanumeric)).count().max(1)
}

/// Maps a Flesch Reading Ease score onto the 1..=7 scale (7 = easiest).
pub fn readability_grade(fre: f64) -> u8 {
    match fre {
        f if f >= 90.0 => 7,
        f if f >= 80.0 => 6,
        f if f >= 70.0 => 5,
        f if f >= 60.0 => 4,
        f if f >= 50.0 => 3,
        f if f >= 30.0 => 2,
        _ => 1,
    }
}

/// Flesch Reading Ease bucketed into a 7-point grade. `value` is the grade
/// normalized to `(grade - 1) / 6`.
pub fn readability(text: &str) -> Result<MetricValue, MetricError> {
    let words = tokenize(text);
    if words.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let n_words = words.len() as f64;
    let n_sent = sentence_count(text) as f64;
    let n_syll = words.iter().map(|w| syllables(w)).sum::<usize>() as f64;
    let fre = 206.835 - 1.015 * (n_words / n_sent) - 84.6 * (n_syll / n_words);
    let grade = readability_grade(fre);
    let mut v = MetricValue::new(MetricId::Readability, f64::from(grade - 1) / 6.0)
        .with_detail("flesch_reading_ease", fre)
        .with_detail("words", n_words)
        .with_detail("sentences", n_sent)
        .with_detail("syllables", n_syll);
    v.grade = Some(grade);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllable_heuristic() {
        assert_eq!(syllables("the"), 1);
        assert_eq!(syllables("cat"), 1);
        assert_eq!(syllables("make"), 1);
        assert_eq!(syllables("table"), 2);
        assert_eq!(syllables("readability"), 5);
        assert_eq!(syllables("42"), 1);
    }

    #[test]
    fn grade_boundaries() {
        assert_eq!(readability_grade(90.0), 7);
        assert_eq!(readability_grade(89.999), 6);
        assert_eq!(readability_grade(50.0), 3);
        assert_eq!(readability_grade(30.0), 2);
        assert_eq!(readability_grade(29.9), 1);
        assert_eq!(readability_grade(-40.0), 1);
    }

    #[test]
    fn empty_text() {
        assert_eq!(readability(""), Err(MetricError::EmptyText));
        assert_eq!(readability("..."), Err(MetricError::EmptyText));
    }
}
