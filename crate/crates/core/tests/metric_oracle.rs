mod oracles;

use std::time::Instant;

use genaiops_core::metrics::{bleu, rouge, sari, text_quality, RougeVariant};
use genaiops_core::rng::SeededRng;

const ALPHABET: [&str; 5] = ["a", "b", "c", "d", "e"];
const TOL: f64 = 1e-12;

fn random_seq(rng: &mut SeededRng) -> Vec<String> {
    let len = rng.below(13) as usize;
    (0..len).map(|_| ALPHABET[rng.below(5) as usize].to_string()).collect()
}

fn join(t: &[String]) -> String {
    t.join(" ")
}

struct Pair {
    source: Vec<String>,
    cand: Vec<String>,
    refs: Vec<Vec<String>>,
}

fn pairs(seed: u64, count: usize, max_refs: u64) -> Vec<Pair> {
    let mut rng = SeededRng::new(seed);
    (0..count)
        .map(|_| {
            let source = random_seq(&mut rng);
            let cand = random_seq(&mut rng);
            let nrefs = 1 + rng.below(max_refs) as usize;
            let refs = (0..nrefs).map(|_| random_seq(&mut rng)).collect();
            Pair { source, cand, refs }
        })
        .collect()
}

fn check(name: &str, i: usize, got: f64, want: f64) {
    assert!((got - want).abs() <= TOL, "{name} pair {i}: got {got}, oracle {want}");
}

#[test]
fn single_reference_pairs_match_oracle() {
    let start = Instant::now();
    for (i, p) in pairs(7, 200, 1).iter().enumerate() {
        let c = join(&p.cand);
        let refs: Vec<String> = p.refs.iter().map(|r| join(r)).collect();
        check("rouge1", i, rouge(&c, &refs, RougeVariant::N(1)).unwrap().value, oracles::rouge_n(&p.cand, &p.refs, 1));
        check("rouge2", i, rouge(&c, &refs, RougeVariant::N(2)).unwrap().value, oracles::rouge_n(&p.cand, &p.refs, 2));
        check("rougeL", i, rouge(&c, &refs, RougeVariant::L).unwrap().value, oracles::rouge_l(&p.cand, &p.refs, 1.2));
        check("bleu", i, bleu(&c, &refs, 4).unwrap().value, oracles::bleu(&p.cand, &p.refs, 4, 1e-9));
        check("text_quality", i, text_quality(&c, &refs).unwrap().value, oracles::text_quality(&p.cand, &p.refs));
    }
    assert!(start.elapsed().as_secs_f64() < 5.0, "oracle comparison took {:?}", start.elapsed());
}

#[test]
fn multi_reference_pairs_match_oracle() {
    for (i, p) in pairs(11, 200, 3).iter().enumerate() {
        let c = join(&p.cand);
        let refs: Vec<String> = p.refs.iter().map(|r| join(r)).collect();
        check("rouge1", i, rouge(&c, &refs, RougeVariant::N(1)).unwrap().value, oracles::rouge_n(&p.cand, &p.refs, 1));
        check("rougeL", i, rouge(&c, &refs, RougeVariant::L).unwrap().value, oracles::rouge_l(&p.cand, &p.refs, 1.2));
        check("bleu", i, bleu(&c, &refs, 4).unwrap().value, oracles::bleu(&p.cand, &p.refs, 4, 1e-9));
        check("text_quality", i, text_quality(&c, &refs).unwrap().value, oracles::text_quality(&p.cand, &p.refs));
    }
}

#[test]
fn sari_matches_oracle() {
    for (i, p) in pairs(13, 200, 3).iter().enumerate() {
        if p.source.is_empty() {
            assert!(sari("", &join(&p.cand), &[join(&p.refs[0])]).is_err());
            continue;
        }
        let refs: Vec<String> = p.refs.iter().map(|r| join(r)).collect();
        let got = sari(&join(&p.source), &join(&p.cand), &refs).unwrap().value;
        check("sari", i, got, oracles::sari(&p.source, &p.cand, &p.refs));
    }
}

#[test]
fn sari_empty_candidate_against_identical_reference() {
    let src = oracles::toks("a b c");
    let want = oracles::sari(&src, &[], std::slice::from_ref(&src));
    let got = sari("a b c", "", &["a b c".to_string()]).unwrap().value;
    assert!((got - want).abs() <= TOL);
    assert!((want - 1.0 / 3.0).abs() <= TOL);
    assert!(got < 0.5);
}

#[test]
fn sari_deleting_a_repeated_reference_word() {
    let src = oracles::toks("the cat sat on the mat");
    let r = oracles::toks("the cat sat");
    let want = oracles::sari(&src, &r, std::slice::from_ref(&r));
    let got = sari("the cat sat on the mat", "the cat sat", &["the cat sat".to_string()]).unwrap().value;
    assert!((got - want).abs() <= TOL);
    assert!((want - 35.0 / 36.0).abs() <= TOL);
}

#[test]
fn lcs_oracle_sanity() {
    let a = oracles::toks("a b c b d a b");
    let b = oracles::toks("b d c a b a");
    assert_eq!(oracles::lcs_exhaustive(&a, &b), 4);
}
