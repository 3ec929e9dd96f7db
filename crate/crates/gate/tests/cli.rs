mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::{cli, suite_text, write};
use serde_json::json;

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        write(&root, "suite.jsonl", &suite_text(20));
        write(&root, "template.txt", "Summarize:\n{{source}}");
        let model = json!({"id": "mock", "endpoint": "mock://", "model_name": "mock"});
        write(&root, "model.json", &model.to_string());
        Workspace { _dir: dir, root }
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).to_str().unwrap().to_string()
    }

    fn args<'a>(&'a self, store: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
        let mut v = vec!["--store", store];
        v.extend_from_slice(rest);
        v
    }

    /// Mock run whose outputs are overridden by `overrides` (case index, output).
    fn run(&self, overrides: &[(usize, &str)]) -> String {
        let lines: String = overrides
            .iter()
            .map(|(i, out)| {
                json!({"prompt": format!("Summarize:\nthe quick brown fox number {i}"), "response": out}).to_string()
                    + "\n"
            })
            .collect();
        let fx = write(&self.root, &format!("fx{}.jsonl", lines.len()), &lines);
        let store = self.path("runs");
        let (suite, template, model) = (self.path("suite.jsonl"), self.path("template.txt"), self.path("model.json"));
        let fx = fx.to_str().unwrap();
        let (code, out, err) = cli(&self.args(
            &store,
            &[
                "run",
                "--suite",
                &suite,
                "--template",
                &template,
                "--model",
                &model,
                "--adapter",
                "mock",
                "--fixtures",
                fx,
            ],
        ));
        assert_eq!(code, 0, "{err}");
        out.trim().to_string()
    }

    fn policy(&self, name: &str, body: serde_json::Value) -> String {
        write(&self.root, name, &body.to_string());
        self.path(name)
    }

    fn gate(&self, base: &str, cand: &str, policy: &str, format: &str) -> (i32, String, String) {
        let store = self.path("runs");
        cli(&self
            .args(&store, &["gate", "--baseline", base, "--candidate", cand, "--policy", policy, "--format", format]))
    }
}

fn rouge_policy(ws: &Workspace) -> String {
    ws.policy(
        "policy.json",
        json!({
            "metrics": {
                "rouge1": {"max_mean_drop": 0.0, "per_case_drop_tolerance": 0.1},
                "rougeL": {"max_mean_drop": 0.0, "per_case_drop_tolerance": 0.1},
                "bleu": {"max_mean_drop": 0.0, "per_case_drop_tolerance": 0.1}
            },
            "safety": {"max_pii_findings": 0}
        }),
    )
}

#[test]
fn exit_code_matrix() {
    let start = Instant::now();
    let ws = Workspace::new();
    let policy = rouge_policy(&ws);
    let base = ws.run(&[]);
    let same = ws.run(&[]);

    // identical outputs pass
    let (code, out, _) = ws.gate(&base, &same, &policy, "markdown");
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("PASS"));

    // one case drops far below the tolerance
    let dropped = ws.run(&[(3, "an unrelated answer")]);
    let (code, out, _) = ws.gate(&base, &dropped, &policy, "markdown");
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("case_regression"));
    assert!(out.contains("c03"));
    let (code, out, _) = ws.gate(&base, &dropped, &policy, "json");
    assert_eq!(code, 1);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let cited = doc["verdict"]["violations"].as_array().unwrap();
    assert!(cited.iter().any(|v| v["rule"] == "case_regression" && v["case_id"] == "c03"));

    // a single PII finding in the candidate outputs
    let leaky = ws.run(&[(5, "the quick brown fox number 5 mail fox@example.com")]);
    let pii_only = ws.policy("pii.json", json!({"safety": {"max_pii_findings": 0}}));
    let (code, out, _) = ws.gate(&base, &leaky, &pii_only, "markdown");
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("max_pii_findings"));

    // a small mean drop inside the warning margin
    let slight = ws.run(&[(3, "the quick brown fox number")]);
    let warn = ws.policy(
        "warn.json",
        json!({"metrics": {"rouge1": {"max_mean_drop": 0.01, "per_case_drop_tolerance": 0.2}}, "warn_margin": 0.005}),
    );
    let (code, out, _) = ws.gate(&base, &slight, &warn, "markdown");
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("WARN"));

    // usage and configuration errors
    let store = ws.path("runs");
    assert_eq!(cli(&[]).0, 64);
    assert_eq!(cli(&["frobnicate"]).0, 64);
    assert_eq!(cli(&["gate", "--baseline", &base]).0, 64);
    assert_eq!(
        cli(&["--store", &store, "run", "--suite", "x", "--template", "y", "--model", "z", "--adapter", "bogus"]).0,
        64
    );
    let missing = ws.path("nope.json");
    assert_eq!(ws.gate(&base, &same, &missing, "json").0, 64);
    let bad = ws.policy("bad.json", json!({"metrics": {"rouge1": {"max_mean_drop": -1.0}}}));
    assert_eq!(ws.gate(&base, &same, &bad, "json").0, 64);
    let typo = ws.policy("typo.json", json!({"metrcs": {}}));
    assert_eq!(ws.gate(&base, &same, &typo, "json").0, 64);
    assert_eq!(ws.gate(&base, "01NOTARUN", &policy, "json").0, 64);
    let (code, _, err) = cli(&ws.args(
        &store,
        &[
            "run",
            "--suite",
            &ws.path("suite.jsonl"),
            "--template",
            &ws.path("template.txt"),
            "--model",
            &ws.path("model.json"),
            "--adapter",
            "replay",
        ],
    ));
    assert_eq!(code, 64, "{err}");
    assert_eq!(cli(&["--help"]).0, 0);

    // runs over a different suite are refused
    write(&ws.root, "small.jsonl", &suite_text(3));
    let (code, other, _) = cli(&ws.args(
        &store,
        &[
            "run",
            "--suite",
            &ws.path("small.jsonl"),
            "--template",
            &ws.path("template.txt"),
            "--model",
            &ws.path("model.json"),
            "--adapter",
            "mock",
        ],
    ));
    assert_eq!(code, 0);
    assert_eq!(ws.gate(&base, other.trim(), &policy, "json").0, 64);

    assert!(start.elapsed().as_secs_f64() < 30.0, "matrix took {:?}", start.elapsed());
}

#[test]
fn binary_exit_codes() {
    let ws = Workspace::new();
    let policy = rouge_policy(&ws);
    let base = ws.run(&[]);
    let dropped = ws.run(&[(3, "nothing alike")]);
    let bin = env!("CARGO_BIN_EXE_genaiops");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    let store = ws.path("runs");
    assert_eq!(status(&["--store", &store, "gate", "--baseline", &base, "--candidate", &base, "--policy", &policy]), 0);
    assert_eq!(
        status(&["--store", &store, "gate", "--baseline", &base, "--candidate", &dropped, "--policy", &policy]),
        1
    );
    assert_eq!(status(&["--no-such-flag"]), 64);
}

#[test]
fn run_directory_layout() {
    let ws = Workspace::new();
    let id = ws.run(&[]);
    let dir = Path::new(&ws.path("runs")).join(&id);
    for f in ["manifest.json", "records.jsonl", "summary.json"] {
        let meta = std::fs::metadata(dir.join(f)).unwrap();
        assert!(meta.permissions().readonly(), "{f} should be read-only");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run_id"], id);
    assert_eq!(manifest["n_cases"], 20);
    let (code, out, _) = cli(&["--store", &ws.path("runs"), "compare", "--baseline", &id, "--candidate", &id]);
    assert_eq!(code, 0);
    let cmp: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(cmp["metrics"]["rouge1"]["delta"], 0.0);
}

#[test]
fn sweep_command_prints_a_table() {
    let ws = Workspace::new();
    let model = json!({
        "model": {"id": "mock", "endpoint": "mock://", "model_name": "mock"},
        "capability": {"supports_logprobs": true, "supports_seed": true, "supports_embeddings": true}
    });
    write(&ws.root, "lp.json", &model.to_string());
    let store = ws.path("runs");
    let (code, out, err) = cli(&ws.args(
        &store,
        &[
            "sweep",
            "--suite",
            &ws.path("suite.jsonl"),
            "--template",
            &ws.path("template.txt"),
            "--model",
            &ws.path("lp.json"),
            "--ks",
            "0,1,2",
            "--adapter",
            "mock",
        ],
    ));
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k\tmean\tstddev\tn_cases");
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        let mean: f64 = l.split('\t').nth(1).unwrap().parse().unwrap();
        assert!((mean - 16f64.ln()).abs() < 1e-12);
    }
    // the default capability has no logprobs
    let (code, _, _) = cli(&ws.args(
        &store,
        &[
            "sweep",
            "--suite",
            &ws.path("suite.jsonl"),
            "--template",
            &ws.path("template.txt"),
            "--model",
            &ws.path("model.json"),
            "--ks",
            "0",
            "--adapter",
            "mock",
        ],
    ));
    assert_eq!(code, 64);
}

#[test]
fn safety_and_fairness_commands() {
    let ws = Workspace::new();
    write(&ws.root, "text.txt", "Call 555-123-4567 or mail a@b.example. Darn it.");
    write(&ws.root, "lex.txt", "darn\n");
    let (code, out, _) =
        cli(&["safety", "--input", &ws.path("text.txt"), "--lexicon", &ws.path("lex.txt"), "--redact"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["pii_count"], 2);
    assert_eq!(doc["redacted"], "Call [PHONE] or mail [EMAIL]. Darn it.");
    assert!(doc["hap"]["score"].as_f64().unwrap() > 0.0);

    let scores: String = (0..40)
        .map(|i| {
            let g = if i % 2 == 0 { "privileged" } else { "unprivileged" };
            let s = (i % 10) as f64 / 10.0 + 0.05;
            json!({"score": s, "group": g, "y_true": u8::from(i % 3 != 0)}).to_string() + "\n"
        })
        .collect();
    write(&ws.root, "scores.jsonl", &scores);
    for method in ["roc", "eo", "ceo"] {
        let (code, out, err) = cli(&["fairness", "--scores", &ws.path("scores.jsonl"), "--method", method]);
        assert_eq!(code, 0, "{method}: {err}");
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["labels"].as_array().unwrap().len(), 40);
    }
}
