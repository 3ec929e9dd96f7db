use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::{ngram_counts, tokenize_all, MetricConfig, MetricError, MetricId, MetricValue};
use crate::text::tokenize;

type Counts<'t> = BTreeMap<&'t [String], i64>;

/// SARI: mean over n-gram orders of `(F_add + F_keep + P_del) / 3`.
///
/// Counts follow the canonical formulation (source and candidate counts
/// scaled by the number of references, reference counts summed). A component
/// with a zero denominator scores 1.0 if no operation of that type was
/// required and 0.0 otherwise. Orders where source, candidate and every
/// reference are all too short to hold an n-gram carry no signal and are
/// left out of the mean.
pub fn sari(source: &str, candidate: &str, references: &[String]) -> Result<MetricValue, MetricError> {
    sari_with(source, candidate, references, &MetricConfig::default())
}

pub(crate) fn sari_with(
    source: &str,
    candidate: &str,
    references: &[String],
    config: &MetricConfig,
) -> Result<MetricValue, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    let src = tokenize(source);
    if src.is_empty() {
        return Err(MetricError::EmptySource);
    }
    let cand = tokenize(candidate);
    let refs = tokenize_all(references);

    let mut value = MetricValue::new(MetricId::Sari, 0.0);
    let mut total = 0.0;
    let mut orders = 0usize;
    for n in 1..=config.sari_max_n.max(1) {
        let Some(parts) = sari_order(&src, &cand, &refs, n) else {
            continue;
        };
        let score = (parts.f_add + parts.f_keep + parts.p_del) / 3.0;
        value.details.insert(alloc::format!("add{n}"), parts.f_add);
        value.details.insert(alloc::format!("keep{n}"), parts.f_keep);
        value.details.insert(alloc::format!("del{n}"), parts.p_del);
        total += score;
        orders += 1;
    }
    value.value = super::clamp_unit(if orders == 0 { 0.0 } else { total / orders as f64 });
    Ok(value)
}

struct OrderScores {
    f_add: f64,
    f_keep: f64,
    p_del: f64,
}

fn scaled<'t>(tokens: &'t [String], n: usize, k: i64) -> Counts<'t> {
    ngram_counts(tokens, n).into_iter().map(|(g, c)| (g, c as i64 * k)).collect()
}

/// Multiset intersection (`Counter & Counter`).
fn intersect<'t>(a: &Counts<'t>, b: &Counts<'t>) -> Counts<'t> {
    a.iter()
        .filter_map(|(g, &x)| {
            let m = x.min(b.get(g).copied().unwrap_or(0));
            (m > 0).then_some((*g, m))
        })
        .collect()
}

/// Multiset difference keeping positive counts (`Counter - Counter`).
fn subtract<'t>(a: &Counts<'t>, b: &Counts<'t>) -> Counts<'t> {
    a.iter()
        .filter_map(|(g, &x)| {
            let d = x - b.get(g).copied().unwrap_or(0);
            (d > 0).then_some((*g, d))
        })
        .collect()
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn sari_order(src: &[String], cand: &[String], refs: &[Vec<String>], n: usize) -> Option<OrderScores> {
    let numref = refs.len() as i64;
    let s_rep = scaled(src, n, numref);
    let c_rep = scaled(cand, n, numref);
    let mut r_all: Counts<'_> = BTreeMap::new();
    for r in refs {
        for (g, c) in ngram_counts(r, n) {
            *r_all.entry(g).or_insert(0) += c as i64;
        }
    }
    if s_rep.is_empty() && c_rep.is_empty() && r_all.is_empty() {
        return None;
    }

    // keep
    let keep = intersect(&s_rep, &c_rep);
    let keep_good = intersect(&keep, &r_all);
    let keep_all = intersect(&s_rep, &r_all);
    let keep_p = if keep.is_empty() {
        if keep_all.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        keep.iter().map(|(g, &k)| keep_good.get(g).copied().unwrap_or(0) as f64 / k as f64).sum::<f64>()
            / keep.len() as f64
    };
    let keep_r = if keep_all.is_empty() {
        1.0
    } else {
        keep_good.values().sum::<i64>() as f64 / keep_all.values().sum::<i64>() as f64
    };

    // deletion (precision only)
    let del = subtract(&s_rep, &c_rep);
    let del_good = subtract(&del, &r_all);
    let del_all = subtract(&s_rep, &r_all);
    let p_del = if del.is_empty() {
        if del_all.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        del.iter().map(|(g, &d)| del_good.get(g).copied().unwrap_or(0) as f64 / d as f64).sum::<f64>()
            / del.len() as f64
    };

    // addition, on n-gram types
    let s_set: BTreeSet<_> = s_rep.keys().copied().collect();
    let c_set: BTreeSet<_> = c_rep.keys().copied().collect();
    let r_set: BTreeSet<_> = r_all.keys().copied().collect();
    let add: BTreeSet<_> = c_set.difference(&s_set).copied().collect();
    let add_good = add.intersection(&r_set).count();
    let add_all = r_set.difference(&s_set).count();
    let add_p = if add.is_empty() {
        if add_all == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        add_good as f64 / add.len() as f64
    };
    let add_r = if add_all == 0 { 1.0 } else { add_good as f64 / add_all as f64 };

    Some(OrderScores { f_add: f1(add_p, add_r), f_keep: f1(keep_p, keep_r), p_del })
}
