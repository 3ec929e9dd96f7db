//! Slow, direct reference implementations used only by tests.

#![allow(dead_code)]

pub type Toks<'a> = &'a [String];

/// All n-grams of `t`, in order, with repeats.
pub fn grams(t: Toks<'_>, n: usize) -> Vec<Vec<String>> {
    if n == 0 || t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// Distinct elements, first occurrence order.
fn distinct(list: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in list {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

fn clipped(cand: &[Vec<String>], refg: &[Vec<String>]) -> usize {
    distinct(refg).iter().map(|g| count(cand, g).min(count(refg, g))).sum()
}

pub fn rouge_n(cand: Toks<'_>, refs: &[Vec<String>], n: usize) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let cg = grams(cand, n);
    let mut best = 0.0f64;
    for r in refs {
        let rg = grams(r, n);
        if rg.is_empty() {
            continue;
        }
        best = best.max(clipped(&cg, &rg) as f64 / rg.len() as f64);
    }
    best
}

fn is_subsequence(sub: &[&String], of: Toks<'_>) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|x| x == *s))
}

/// Longest common subsequence by trying every subsequence of the shorter
/// sequence.
pub fn lcs_exhaustive(a: Toks<'_>, b: Toks<'_>) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "exhaustive LCS is for short inputs");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<&String> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
        if is_subsequence(&sub, long) {
            best = size;
        }
    }
    best
}

pub fn rouge_l(cand: Toks<'_>, refs: &[Vec<String>], beta: f64) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut best = 0.0f64;
    for r in refs {
        if r.is_empty() {
            continue;
        }
        let l = lcs_exhaustive(cand, r) as f64;
        if l == 0.0 {
            continue;
        }
        let p = l / cand.len() as f64;
        let rc = l / r.len() as f64;
        best = best.max((1.0 + beta * beta) * p * rc / (rc + beta * beta * p));
    }
    best
}

pub fn bleu(cand: Toks<'_>, refs: &[Vec<String>], max_n: usize, eps: f64) -> f64 {
    let c = cand.len();
    if c == 0 {
        return 0.0;
    }
    let mut r = usize::MAX;
    for x in refs {
        let better = x.len().abs_diff(c) < r.abs_diff(c) || (x.len().abs_diff(c) == r.abs_diff(c) && x.len() < r);
        if r == usize::MAX || better {
            r = x.len();
        }
    }
    let mut product = 1.0f64;
    for n in 1..=max_n {
        let cg = grams(cand, n);
        let mut m = 0;
        for g in distinct(&cg) {
            let max_ref = refs.iter().map(|x| count(&grams(x, n), &g)).max().unwrap_or(0);
            m += count(&cg, &g).min(max_ref);
        }
        let p = if m == 0 || cg.is_empty() { eps } else { m as f64 / cg.len() as f64 };
        product *= p;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    (bp * product.powf(1.0 / max_n as f64)).clamp(0.0, 1.0)
}

/// Token-multiset F1, best over references.
pub fn text_quality(cand: Toks<'_>, refs: &[Vec<String>]) -> f64 {
    let mut best: Option<f64> = None;
    for r in refs {
        let f = match (cand.len(), r.len()) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ => {
                let mut pool: Vec<&String> = r.iter().collect();
                let mut overlap = 0usize;
                for t in cand {
                    if let Some(pos) = pool.iter().position(|x| *x == t) {
                        pool.swap_remove(pos);
                        overlap += 1;
                    }
                }
                if overlap == 0 {
                    0.0
                } else {
                    let p = overlap as f64 / cand.len() as f64;
                    let rc = overlap as f64 / r.len() as f64;
                    2.0 * p * rc / (p + rc)
                }
            }
        };
        if best.is_none_or(|b| f > b) {
            best = Some(f);
        }
    }
    best.unwrap_or(0.0)
}

/// Multiset as (item, count) pairs.
type Bag = Vec<(Vec<String>, i64)>;

fn bag(list: &[Vec<String>], times: i64) -> Bag {
    distinct(list)
        .into_iter()
        .map(|g| {
            let c = count(list, &g) as i64;
            (g, c * times)
        })
        .collect()
}

fn get(b: &Bag, g: &[String]) -> i64 {
    b.iter().find(|(x, _)| x.as_slice() == g).map_or(0, |(_, c)| *c)
}

fn bag_and(a: &Bag, b: &Bag) -> Bag {
    a.iter().map(|(g, c)| (g.clone(), (*c).min(get(b, g)))).filter(|(_, c)| *c > 0).collect()
}

fn bag_minus(a: &Bag, b: &Bag) -> Bag {
    a.iter().map(|(g, c)| (g.clone(), c - get(b, g))).filter(|(_, c)| *c > 0).collect()
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// SARI over orders 1..=4, following the reference Python implementation
/// step by step. A ratio with nothing to measure is 1 when nothing was
/// required of that operation and 0 otherwise; orders where source,
/// candidate, and references all lack n-grams are left out of the mean.
pub fn sari(src: Toks<'_>, cand: Toks<'_>, refs: &[Vec<String>]) -> f64 {
    let numref = refs.len() as i64;
    let mut total = 0.0;
    let mut orders = 0;
    for n in 1..=4 {
        let s = bag(&grams(src, n), numref);
        let c = bag(&grams(cand, n), numref);
        let all_ref: Vec<Vec<String>> = refs.iter().flat_map(|r| grams(r, n)).collect();
        let r = bag(&all_ref, 1);
        if s.is_empty() && c.is_empty() && r.is_empty() {
            continue;
        }
        // keep
        let keep = bag_and(&s, &c);
        let keep_good = bag_and(&keep, &r);
        let keep_all = bag_and(&s, &r);
        let keep_p = if keep.is_empty() {
            if keep_all.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            keep.iter().map(|(g, k)| get(&keep_good, g) as f64 / *k as f64).sum::<f64>() / keep.len() as f64
        };
        let keep_r = if keep_all.is_empty() {
            1.0
        } else {
            keep_good.iter().map(|(_, k)| *k).sum::<i64>() as f64 / keep_all.iter().map(|(_, k)| *k).sum::<i64>() as f64
        };
        // delete
        let del = bag_minus(&s, &c);
        let del_good = bag_minus(&del, &r);
        let del_all = bag_minus(&s, &r);
        let del_p = if del.is_empty() {
            if del_all.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            del.iter().map(|(g, d)| get(&del_good, g) as f64 / *d as f64).sum::<f64>() / del.len() as f64
        };
        // add, on sets
        let in_s = |g: &Vec<String>| get(&s, g) > 0;
        let add: Vec<&Vec<String>> = c.iter().map(|(g, _)| g).filter(|g| !in_s(g)).collect();
        let add_good = add.iter().filter(|g| get(&r, g) > 0).count();
        let add_all = r.iter().filter(|(g, _)| !in_s(g)).count();
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
        total += (f1(add_p, add_r) + f1(keep_p, keep_r) + del_p) / 3.0;
        orders += 1;
    }
    if orders == 0 {
        0.0
    } else {
        (total / orders as f64).clamp(0.0, 1.0)
    }
}

/// Splits on spaces; test inputs are already normalized tokens.
pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Confusion counts `(tp, fp, tn, fn)` for one group.
pub type Counts = (usize, usize, usize, usize);

/// Whether `(fpr, tpr)` is reachable by randomly keeping base-positives with
/// probability `a` and flipping base-negatives with probability `b`.
fn reachable(c: Counts, fpr: f64, tpr: f64) -> bool {
    let (tp, fp, tn, fn_) = c;
    let t = tp as f64 / (tp + fn_) as f64;
    let f = fp as f64 / (fp + tn) as f64;
    // [t, 1-t; f, 1-f] [a; b] = [tpr; fpr]
    let det = t * (1.0 - f) - (1.0 - t) * f;
    if det.abs() < 1e-15 {
        return (tpr - fpr).abs() < 1e-9;
    }
    let a = (tpr * (1.0 - f) - (1.0 - t) * fpr) / det;
    let b = (t * fpr - f * tpr) / det;
    let ok = |v: f64| (-1e-9..=1.0 + 1e-9).contains(&v);
    ok(a) && ok(b)
}

/// Lowest expected error over a `step`-spaced grid of shared (FPR, TPR)
/// operating points reachable by both groups.
pub fn eo_grid_error(groups: [Counts; 2], step: f64) -> f64 {
    let steps = (1.0 / step).round() as usize;
    let total: usize = groups.iter().map(|(a, b, c, d)| a + b + c + d).sum();
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let fpr = i as f64 / steps as f64;
        for j in 0..=steps {
            let tpr = j as f64 / steps as f64;
            if !groups.iter().all(|g| reachable(*g, fpr, tpr)) {
                continue;
            }
            let err: f64 = groups
                .iter()
                .map(|&(tp, fp, tn, fn_)| (tp + fn_) as f64 * (1.0 - tpr) + (fp + tn) as f64 * fpr)
                .sum::<f64>()
                / total as f64;
            best = best.min(err);
        }
    }
    best
}

use genaiops_core::metrics::MetricFamily;

/// The published metric table, one row per family and one column per task
/// (summarization, content generation, question answering, entity
/// extraction).
pub const METRIC_TABLE: [(MetricFamily, [bool; 4]); 9] = [
    (MetricFamily::Rouge, [true, true, true, true]),
    (MetricFamily::Sari, [true, false, false, false]),
    (MetricFamily::Meteor, [false, true, true, false]),
    (MetricFamily::TextQuality, [true, true, false, false]),
    (MetricFamily::Bleu, [true, true, true, false]),
    (MetricFamily::SentenceSimilarity, [true, false, false, false]),
    (MetricFamily::Readability, [true, true, false, false]),
    (MetricFamily::ExactMatch, [false, false, true, true]),
    (MetricFamily::MultiLabel, [false, false, false, true]),
];
