//! Test suites, prompt templates and few-shot demo selection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::hash::{canonical_hash, sha256_hex};
use crate::metrics::similarity_for_demos;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Summarization,
    ContentGeneration,
    QuestionAnswering,
    EntityExtraction,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] =
        [TaskKind::Summarization, TaskKind::ContentGeneration, TaskKind::QuestionAnswering, TaskKind::EntityExtraction];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Summarization => "summarization",
            TaskKind::ContentGeneration => "content_generation",
            TaskKind::QuestionAnswering => "question_answering",
            TaskKind::EntityExtraction => "entity_extraction",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One regression case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub id: String,
    pub task: TaskKind,
    pub source: String,
    #[serde(default)]
    pub input_vars: BTreeMap<String, String>,
    #[serde(default)]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl TestCase {
    fn needs_references(&self) -> bool {
        !(self.task == TaskKind::EntityExtraction && self.labels.as_ref().is_some_and(|l| !l.is_empty()))
    }

    /// The (input, output) pair this case contributes when used as a demo.
    pub fn demo(&self) -> Demo {
        let output = match self.references.first() {
            Some(r) => r.clone(),
            None => self.labels.as_ref().map(|l| l.iter().cloned().collect::<Vec<_>>().join("; ")).unwrap_or_default(),
        };
        Demo { input: self.source.clone(), output }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demo {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuiteError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate case id `{0}`")]
    DuplicateId(String),
    #[error("case `{0}` has no references")]
    MissingReferences(String),
    #[error("case `{id}` uses undeclared segment `{group}`")]
    UnknownSegment { id: String, group: String },
    #[error("suite contains no cases")]
    Empty,
}

/// Optional first line of a suite file declaring fairness segments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteHeader {
    segments: Vec<String>,
    #[serde(default)]
    privileged: Option<String>,
}

/// A loaded, immutable test suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub cases: Vec<TestCase>,
    /// Declared fairness segment names (or, without a header, every group
    /// seen).
    pub segments: Vec<String>,
    /// Segment treated as privileged by fairness evaluation.
    pub privileged: Option<String>,
    /// SHA-256 of the exact file bytes.
    pub hash: String,
}

impl Suite {
    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.cases.iter().find(|c| c.id == id)
    }

    /// Cases sorted by id, the order every aggregate is computed in.
    pub fn sorted_cases(&self) -> Vec<&TestCase> {
        let mut v: Vec<&TestCase> = self.cases.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }
}

/// Parses a line-delimited suite. Blank lines are ignored; the first record
/// may instead be a `{"segments": [...], "privileged": ...}` header.
pub fn parse_suite(text: &str) -> Result<Suite, SuiteError> {
    let mut cases: Vec<TestCase> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut header: Option<SuiteHeader> = None;
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| SuiteError::Malformed { line: line_no, message: e.to_string() })?;
        let is_header = value.get("segments").is_some() && value.get("id").is_none();
        if is_header {
            if !first {
                return Err(SuiteError::Malformed {
                    line: line_no,
                    message: "segment header must be the first record".into(),
                });
            }
            header = Some(
                serde_json::from_value(value)
                    .map_err(|e| SuiteError::Malformed { line: line_no, message: e.to_string() })?,
            );
            first = false;
            continue;
        }
        first = false;
        let case: TestCase = serde_json::from_value(value)
            .map_err(|e| SuiteError::Malformed { line: line_no, message: e.to_string() })?;
        if case.id.is_empty() {
            return Err(SuiteError::Malformed { line: line_no, message: "empty id".into() });
        }
        if !seen.insert(case.id.clone()) {
            return Err(SuiteError::DuplicateId(case.id));
        }
        if case.needs_references() && case.references.is_empty() {
            return Err(SuiteError::MissingReferences(case.id));
        }
        cases.push(case);
    }

    let (segments, privileged) = match header {
        Some(h) => {
            for c in &cases {
                if let Some(g) = &c.group {
                    if !h.segments.contains(g) {
                        return Err(SuiteError::UnknownSegment { id: c.id.clone(), group: g.clone() });
                    }
                }
            }
            if let Some(p) = &h.privileged {
                if !h.segments.contains(p) {
                    return Err(SuiteError::Malformed {
                        line: 1,
                        message: format!("privileged segment `{p}` is not declared"),
                    });
                }
            }
            (h.segments, h.privileged)
        }
        None => {
            let groups: BTreeSet<String> = cases.iter().filter_map(|c| c.group.clone()).collect();
            (groups.into_iter().collect(), None)
        }
    };
    Ok(Suite { cases, segments, privileged, hash: sha256_hex(text.as_bytes()) })
}

const DEMOS: &str = "demos";
const SOURCE: &str = "source";

/// A prompt with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    #[serde(default)]
    pub system_preamble: String,
    pub body: String,
    #[serde(default = "default_demo_format")]
    pub demo_format: String,
}

fn default_demo_format() -> String {
    "Input: {{demo_input}}\nOutput: {{demo_output}}\n\n".into()
}

impl PromptTemplate {
    pub fn new(body: impl Into<String>) -> Self {
        PromptTemplate { system_preamble: String::new(), body: body.into(), demo_format: default_demo_format() }
    }

    pub fn hash(&self) -> String {
        canonical_hash(self)
    }

    /// Placeholder names in `body`, in order of appearance.
    pub fn placeholders(&self) -> Result<Vec<String>, RenderError> {
        let mut names = Vec::new();
        let mut rest = self.body.as_str();
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            let end = after.find("}}").ok_or_else(|| RenderError::UnresolvedPlaceholder(after.trim().into()))?;
            names.push(after[..end].trim().to_string());
            rest = &after[end + 2..];
        }
        Ok(names)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("unresolved placeholder `{0}`")]
    UnresolvedPlaceholder(String),
}

fn render_demos(format_str: &str, demos: &[Demo]) -> String {
    let mut out = String::new();
    for d in demos {
        out.push_str(&format_str.replace("{{demo_input}}", &d.input).replace("{{demo_output}}", &d.output));
    }
    out
}

/// Substitutes every placeholder of `template.body` from `source` and the
/// case's `input_vars`; demos go at `{{demos}}`, or ahead of the body when
/// the template has no demo slot. Substituted values are inserted verbatim.
pub fn render_prompt(template: &PromptTemplate, case: &TestCase, demos: &[Demo]) -> Result<String, RenderError> {
    let demo_block = render_demos(&template.demo_format, demos);
    let mut out = String::new();
    if !template.system_preamble.is_empty() {
        out.push_str(&template.system_preamble);
        out.push_str("\n\n");
    }
    let has_slot = template.placeholders()?.iter().any(|n| n == DEMOS);
    if !has_slot {
        out.push_str(&demo_block);
    }
    let mut rest = template.body.as_str();
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| RenderError::UnresolvedPlaceholder(after.trim().into()))?;
        let name = after[..end].trim();
        match name {
            DEMOS => out.push_str(&demo_block),
            SOURCE => out.push_str(&case.source),
            other => match case.input_vars.get(other) {
                Some(v) => out.push_str(v),
                None => return Err(RenderError::UnresolvedPlaceholder(other.into())),
            },
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DemoStrategy {
    #[default]
    Random,
    FirstK,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FewShotConfig {
    pub k: usize,
    #[serde(default)]
    pub strategy: DemoStrategy,
    #[serde(default)]
    pub seed: u64,
}

/// Picks up to `k` demos from `pool`, never the case `exclude_id`.
///
/// `Random` shuffles the eligible cases (pool order) with a seeded
/// Fisher–Yates pass and takes a prefix; `Similarity` ranks by
/// hashed-vector similarity to the excluded case's source, ties by id.
pub fn select_demos(pool: &Suite, k: usize, strategy: DemoStrategy, seed: u64, exclude_id: &str) -> Vec<Demo> {
    if k == 0 {
        return Vec::new();
    }
    let mut eligible: Vec<&TestCase> = pool.cases.iter().filter(|c| c.id != exclude_id).collect();
    match strategy {
        DemoStrategy::FirstK => {}
        DemoStrategy::Random => SeededRng::new(seed).shuffle(&mut eligible),
        DemoStrategy::Similarity => {
            let query = pool.get(exclude_id).map(|c| c.source.as_str()).unwrap_or("");
            let mut scored: Vec<(f64, &TestCase)> =
                eligible.iter().map(|c| (similarity_for_demos(query, &c.source), *c)).collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
            eligible = scored.into_iter().map(|(_, c)| c).collect();
        }
    }
    eligible.into_iter().take(k).map(TestCase::demo).collect()
}
