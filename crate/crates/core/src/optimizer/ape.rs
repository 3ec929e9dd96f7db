use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_capability, first_line, mean, score_prompt, sorted, OptimizerError, Scorer};
use crate::adapter::{Adapter, ModelSpec};
use crate::metrics::{ensure_applicable, MetricConfig};
use crate::rng::SeededRng;
use crate::suite::{render_prompt, Demo, PromptTemplate, Suite, TaskKind, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Proposed,
    Resampled,
    Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionCandidate {
    pub text: String,
    /// Higher is better; set once scored.
    pub score: Option<f64>,
    pub provenance: Provenance,
    pub round: usize,
}

fn default_meta_prompt() -> PromptTemplate {
    PromptTemplate::new(
        "I gave a friend an instruction and {{demo_count}} input-output pairs. Based on the pairs, the instruction was:",
    )
}

fn default_resample_prompt() -> PromptTemplate {
    PromptTemplate::new("Generate a variation of the following instruction while keeping its meaning:\n{{instruction}}")
}

fn default_demo_count() -> usize {
    4
}

fn default_eval_fraction() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApeConfig {
    pub n_candidates: usize,
    #[serde(default)]
    pub n_rounds: usize,
    #[serde(default = "default_meta_prompt")]
    pub meta_prompt: PromptTemplate,
    #[serde(default = "default_resample_prompt")]
    pub resample_prompt: PromptTemplate,
    pub scorer: Scorer,
    #[serde(default = "default_demo_count")]
    pub demo_count: usize,
    #[serde(default = "default_eval_fraction")]
    pub eval_fraction: f64,
    /// A human-written instruction always entered into the leaderboard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_instruction: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

impl ApeConfig {
    pub fn new(n_candidates: usize, n_rounds: usize, scorer: Scorer) -> Self {
        ApeConfig {
            n_candidates,
            n_rounds,
            meta_prompt: default_meta_prompt(),
            resample_prompt: default_resample_prompt(),
            scorer,
            demo_count: default_demo_count(),
            eval_fraction: default_eval_fraction(),
            seed_instruction: None,
            seed: 0,
        }
    }

    fn validate(&self, suite: &Suite) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::InvalidConfig(m.into()));
        if self.n_candidates == 0 {
            return bad("n_candidates must be at least 1");
        }
        if self.demo_count == 0 {
            return bad("demo_count must be at least 1");
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction <= 1.0) {
            return bad("eval_fraction must be in (0, 1]");
        }
        if let Scorer::Metric(m) = self.scorer {
            let tasks: BTreeSet<TaskKind> = suite.cases.iter().map(|c| c.task).collect();
            for t in tasks {
                ensure_applicable(m, t).map_err(|e| OptimizerError::InvalidConfig(e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// Candidates first scored in this round.
    pub added: Vec<InstructionCandidate>,
    pub best: InstructionCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApeResult {
    pub best: InstructionCandidate,
    pub leaderboard: Vec<InstructionCandidate>,
    pub rounds_log: Vec<RoundLog>,
    pub eval_case_ids: Vec<String>,
}

fn render_with(template: &PromptTemplate, vars: &[(&str, String)], demos: &[Demo]) -> Result<String, OptimizerError> {
    let case = TestCase {
        id: String::new(),
        task: TaskKind::ContentGeneration,
        source: String::new(),
        input_vars: vars.iter().map(|(k, v)| ((*k).into(), v.clone())).collect::<BTreeMap<_, _>>(),
        references: Vec::new(),
        labels: None,
        group: None,
        metadata: BTreeMap::new(),
    };
    Ok(render_prompt(template, &case, demos)?)
}

fn with_seed(spec: &ModelSpec, seed: u64) -> ModelSpec {
    let mut s = spec.clone();
    s.seed = Some(seed);
    s
}

/// Asks `adapter` for `n` instructions explaining `demos`. Request `i`
/// carries seed `seed + i`; each completion contributes its first
/// non-empty line, first occurrence kept.
pub fn propose_instructions(
    adapter: &dyn Adapter,
    spec: &ModelSpec,
    demos: &[Demo],
    meta_prompt: &PromptTemplate,
    n: usize,
    seed: u64,
) -> Result<Vec<InstructionCandidate>, OptimizerError> {
    if n == 0 {
        return Err(OptimizerError::InvalidConfig("n must be at least 1".into()));
    }
    if demos.is_empty() {
        return Err(OptimizerError::InvalidConfig("no demonstrations to propose from".into()));
    }
    let prompt = render_with(meta_prompt, &[("demo_count", demos.len().to_string())], demos)?;
    let mut out: Vec<InstructionCandidate> = Vec::new();
    for i in 0..n {
        let c = adapter.complete(&with_seed(spec, seed.wrapping_add(i as u64)), &prompt)?;
        if let Some(text) = first_line(&c.text) {
            if !out.iter().any(|x| x.text == text) {
                out.push(InstructionCandidate { text, score: None, provenance: Provenance::Proposed, round: 0 });
            }
        }
    }
    if out.is_empty() {
        return Err(OptimizerError::EmptyProposal);
    }
    Ok(out)
}

/// The prompt an instruction is evaluated with on one case.
pub fn instruction_prompt(instruction: &str, case: &TestCase) -> String {
    alloc::format!("{instruction}\n\n{}", case.source)
}

/// Mean score of `instruction` over `eval_cases` (in id order). NLL is
/// negated so that higher is better for every scorer.
pub fn score_instruction(
    adapter: &dyn Adapter,
    spec: &ModelSpec,
    instruction: &str,
    eval_cases: &[&TestCase],
    scorer: Scorer,
    config: &MetricConfig,
) -> Result<f64, OptimizerError> {
    if eval_cases.is_empty() {
        return Err(OptimizerError::EmptyEvalSet);
    }
    check_capability(adapter, scorer)?;
    let mut scores = Vec::with_capacity(eval_cases.len());
    for case in sorted(eval_cases.iter().copied()) {
        scores.push(score_prompt(adapter, spec, case, &instruction_prompt(instruction, case), scorer, config)?);
    }
    let m = mean(&scores);
    Ok(if scorer == Scorer::Nll { -m } else { m })
}

fn rank(board: &mut [InstructionCandidate]) {
    board.sort_by(|a, b| {
        let (x, y) = (a.score.unwrap_or(f64::NEG_INFINITY), b.score.unwrap_or(f64::NEG_INFINITY));
        y.total_cmp(&x).then_with(|| a.text.cmp(&b.text))
    });
}

/// Splits the suite into proposal demos and evaluation cases using a
/// seeded shuffle of the id-sorted cases. Demos are kept out of the
/// evaluation set unless the suite is too small for both.
fn split<'a>(suite: &'a Suite, config: &ApeConfig) -> (Vec<Demo>, Vec<&'a TestCase>) {
    let mut cases = suite.sorted_cases();
    SeededRng::new(config.seed).shuffle(&mut cases);
    let n_demo = config.demo_count.min(cases.len());
    let demos = cases[..n_demo].iter().map(|c| c.demo()).collect();
    let rest: Vec<&TestCase> = if cases.len() > n_demo { cases[n_demo..].to_vec() } else { cases.clone() };
    let take = libm::ceil(config.eval_fraction * rest.len() as f64) as usize;
    let eval = sorted(rest.into_iter().take(take.max(1)));
    (demos, eval)
}

/// Propose, score, and resample instructions. Round 0 scores the initial
/// proposals (and the seed instruction); each later round asks for one
/// variant of each of the top ⌈n_candidates/4⌉ entries and scores the new
/// ones. The best entry can only improve from round to round.
pub fn ape_search(
    config: &ApeConfig,
    suite: &Suite,
    propose: (&dyn Adapter, &ModelSpec),
    target: (&dyn Adapter, &ModelSpec),
    metric_config: &MetricConfig,
) -> Result<ApeResult, OptimizerError> {
    if suite.is_empty() {
        return Err(OptimizerError::EmptySuite);
    }
    config.validate(suite)?;
    check_capability(target.0, config.scorer)?;
    let (demos, eval) = split(suite, config);
    let score = |text: &str| score_instruction(target.0, target.1, text, &eval, config.scorer, metric_config);

    let mut board =
        propose_instructions(propose.0, propose.1, &demos, &config.meta_prompt, config.n_candidates, config.seed)?;
    if let Some(seed_text) = config.seed_instruction.as_deref().and_then(first_line) {
        match board.iter_mut().find(|c| c.text == seed_text) {
            Some(c) => c.provenance = Provenance::Seed,
            None => board.insert(
                0,
                InstructionCandidate { text: seed_text, score: None, provenance: Provenance::Seed, round: 0 },
            ),
        }
    }
    for c in board.iter_mut() {
        c.score = Some(score(&c.text)?);
    }
    rank(&mut board);
    let mut rounds_log = alloc::vec![RoundLog { round: 0, added: board.clone(), best: board[0].clone() }];

    let top_n = config.n_candidates.div_ceil(4);
    for round in 1..=config.n_rounds {
        let parents: Vec<String> = board.iter().take(top_n).map(|c| c.text.clone()).collect();
        let mut added = Vec::new();
        for (j, parent) in parents.iter().enumerate() {
            let prompt = render_with(&config.resample_prompt, &[("instruction", parent.clone())], &[])?;
            let seed = config.seed.wrapping_add(((round as u64) << 32) | j as u64);
            let c = propose.0.complete(&with_seed(propose.1, seed), &prompt)?;
            let Some(text) = first_line(&c.text) else { continue };
            if board.iter().chain(added.iter()).any(|x: &InstructionCandidate| x.text == text) {
                continue;
            }
            let s = score(&text)?;
            added.push(InstructionCandidate { text, score: Some(s), provenance: Provenance::Resampled, round });
        }
        board.extend(added.iter().cloned());
        rank(&mut board);
        rounds_log.push(RoundLog { round, added, best: board[0].clone() });
    }

    Ok(ApeResult {
        best: board[0].clone(),
        leaderboard: board,
        rounds_log,
        eval_case_ids: eval.iter().map(|c| c.id.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricId;
    use crate::mock::MockAdapter;
    use crate::suite::parse_suite;
    use alloc::vec;

    fn spec() -> ModelSpec {
        ModelSpec::new("m", "mock://", "m")
    }

    fn demos() -> Vec<Demo> {
        vec![Demo { input: "a".into(), output: "b".into() }]
    }

    #[test]
    fn all_blank_is_empty_proposal() {
        let meta = PromptTemplate::new("{{demo_count}} pairs");
        let prompt = render_with(&meta, &[("demo_count", "1".into())], &demos()).unwrap();
        let m = MockAdapter::new().with_fixture(&prompt, "  \n \n");
        assert_eq!(propose_instructions(&m, &spec(), &demos(), &meta, 3, 0), Err(OptimizerError::EmptyProposal));
    }

    #[test]
    fn duplicates_collapse() {
        let meta = default_meta_prompt();
        let got = propose_instructions(&MockAdapter::new(), &spec(), &demos(), &meta, 4, 0).unwrap();
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn identity_scores_one() {
        let s = parse_suite(r#"{"id":"c","task":"summarization","source":"x y z","references":["x y z"]}"#).unwrap();
        let case = &s.cases[0];
        let m = MockAdapter::new();
        let v = score_instruction(
            &m,
            &spec(),
            "Repeat.",
            &[case],
            Scorer::Metric(MetricId::Rouge1),
            &MetricConfig::default(),
        );
        assert_eq!(v, Ok(1.0));
        let nll = score_instruction(&m, &spec(), "Repeat.", &[case], Scorer::Nll, &MetricConfig::default()).unwrap();
        assert!((nll + libm::log(16.0)).abs() < 1e-12);
        assert_eq!(
            score_instruction(&m, &spec(), "Repeat.", &[], Scorer::Nll, &MetricConfig::default()),
            Err(OptimizerError::EmptyEvalSet)
        );
    }

    #[test]
    fn single_candidate_leaderboard() {
        let s = parse_suite(concat!(
            r#"{"id":"a","task":"summarization","source":"one two","references":["one two"]}"#,
            "\n",
            r#"{"id":"b","task":"summarization","source":"three four","references":["three"]}"#
        ))
        .unwrap();
        let m = MockAdapter::new();
        let mut cfg = ApeConfig::new(1, 2, Scorer::Metric(MetricId::Rouge1));
        cfg.demo_count = 1;
        let r = ape_search(&cfg, &s, (&m, &spec()), (&m, &spec()), &MetricConfig::default()).unwrap();
        assert_eq!(r.leaderboard.len(), 1);
        assert_eq!(r.rounds_log.len(), 3);
    }
}
