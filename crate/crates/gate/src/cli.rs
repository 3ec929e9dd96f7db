//! The `genaiops` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use genaiops_core::fairness::{
    calibrated_eo_apply, calibrated_eo_fit, disparity_report, equalized_odds_apply, equalized_odds_fit,
    reject_option_classify, CostKind,
};
use genaiops_core::metrics::MetricConfig;
use genaiops_core::optimizer::{ape_search, few_shot_sweep, Scorer};
use genaiops_core::pipeline::{compare_runs, gate, report, AdapterMode, ReportFormat};
use genaiops_core::safety::{redact, scan_hap, scan_pii, HapConfig};
use genaiops_core::suite::{DemoStrategy, FewShotConfig};
use serde_json::json;

use crate::error::{GateError, Result, EXIT_OK, EXIT_USAGE};
use crate::files::{
    load_ape_config, load_lexicon, load_model, load_policy, load_scores, load_suite, load_template, read_text,
};
use crate::runner::{build_adapter, run_suite, AdapterSources, RunOptions};
use crate::store::{new_run_id, RunStore};

#[derive(Debug, Parser)]
#[command(name = "genaiops", version, about = "Regression gate for switching the model behind an LLM application")]
pub struct Cli {
    /// Run store directory.
    #[arg(long, global = true, default_value = "runs")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Live,
    Record,
    Replay,
    Mock,
}

impl From<ModeArg> for AdapterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Live => AdapterMode::Live,
            ModeArg::Record => AdapterMode::Record,
            ModeArg::Replay => AdapterMode::Replay,
            ModeArg::Mock => AdapterMode::Mock,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Random,
    FirstK,
    Similarity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FairnessMethod {
    Roc,
    Eo,
    Ceo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CostArg {
    Fpr,
    Fnr,
    Weighted,
}

#[derive(Debug, clap::Args)]
pub struct AdapterArgs {
    #[arg(long = "adapter", value_enum, default_value = "live")]
    pub mode: ModeArg,
    /// Replay cache (written in record mode, read in replay mode).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Mock fixtures, one `{"prompt" | "key", "response"}` per line.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

impl AdapterArgs {
    fn sources(&self) -> AdapterSources {
        AdapterSources { cache: self.cache.clone(), fixtures: self.fixtures.clone() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a suite against one model and store the run.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        fewshot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[command(flatten)]
        adapter: AdapterArgs,
    },
    /// Compare a candidate run against a baseline run.
    Compare {
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        candidate: String,
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Gate a candidate run against a baseline under a policy.
    Gate {
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        candidate: String,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Also write the report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score the suite at several few-shot demo counts.
    Sweep {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        /// `nll` or `metric:<id>`.
        #[arg(long, default_value = "nll")]
        scorer: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        adapter: AdapterArgs,
    },
    /// Search for an instruction with automatic prompt engineering.
    Ape {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        propose_model: PathBuf,
        #[arg(long)]
        target_model: PathBuf,
        #[command(flatten)]
        adapter: AdapterArgs,
    },
    /// Post-process scored examples for fairness.
    Fairness {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum)]
        method: FairnessMethod,
        /// Reject-option band half-width.
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long, value_enum, default_value = "fpr")]
        cost: CostArg,
        #[arg(long, default_value_t = 1.0)]
        w_fp: f64,
        #[arg(long, default_value_t = 1.0)]
        w_fn: f64,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scan a text file for PII and HAP content.
    Safety {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Include the redacted text in the report.
        #[arg(long)]
        redact: bool,
    },
}

/// Parses `args` and executes the command, returning the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
        .map_err(|e| GateError::Internal(format!("writing output: {e}")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| GateError::Internal(e.to_string()))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| GateError::StoreWrite { path: dir.into(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| GateError::StoreWrite { path, source })
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let store = RunStore::new(&cli.store);
    let metric_config = MetricConfig::default();
    match &cli.command {
        Command::Run { suite, template, model, fewshot, seed, strategy, parallelism, lexicon, adapter } => {
            let suite = load_suite(suite)?;
            let template = load_template(template)?;
            template.placeholders().map_err(|e| GateError::config(e.to_string()))?;
            let model = load_model(model)?;
            let lexicon = lexicon.as_deref().map(load_lexicon).transpose()?;
            let strategy = match strategy {
                StrategyArg::Random => DemoStrategy::Random,
                StrategyArg::FirstK => DemoStrategy::FirstK,
                StrategyArg::Similarity => DemoStrategy::Similarity,
            };
            let mode: AdapterMode = adapter.mode.into();
            let backend = build_adapter(mode, &model, &adapter.sources())?;
            let opts = RunOptions {
                suite: &suite,
                template: &template,
                fewshot: FewShotConfig { k: *fewshot, strategy, seed: *seed },
                model: &model,
                mode,
                parallelism: *parallelism,
                lexicon: lexicon.as_ref(),
                metric_config: metric_config.clone(),
            };
            let run = run_suite(&opts, backend.as_ref(), &store)?;
            emit(out, &run.manifest.run_id)?;
            Ok(EXIT_OK)
        }
        Command::Compare { baseline, candidate, tolerance } => {
            let (b, c) = (store.load(baseline)?, store.load(candidate)?);
            let cmp = compare_runs(&b, &c, *tolerance).map_err(|e| GateError::config(e.to_string()))?;
            emit(out, &to_json(&cmp)?)?;
            Ok(EXIT_OK)
        }
        Command::Gate { baseline, candidate, policy, format, output } => {
            let policy = load_policy(policy)?;
            let (b, c) = (store.load(baseline)?, store.load(candidate)?);
            let cmp = compare_runs(&b, &c, 0.0).map_err(|e| GateError::config(e.to_string()))?;
            let verdict = gate(&cmp, &policy);
            let format = match format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Markdown => ReportFormat::Markdown,
            };
            let doc = report(&cmp, &verdict, Some((&b, &c)), format);
            if let Some(path) = output {
                std::fs::write(path, &doc).map_err(|source| GateError::StoreWrite { path: path.clone(), source })?;
            }
            emit(out, &doc)?;
            Ok(verdict.status.exit_code())
        }
        Command::Sweep { suite, template, model, ks, scorer, seed, adapter } => {
            let suite = load_suite(suite)?;
            let template = load_template(template)?;
            let model = load_model(model)?;
            let scorer: Scorer = scorer.parse().map_err(GateError::Config)?;
            let backend = build_adapter(adapter.mode.into(), &model, &adapter.sources())?;
            let points =
                few_shot_sweep(&suite, ks, &template, (backend.as_ref(), &model.model), scorer, *seed, &metric_config)
                    .map_err(optimizer_error)?;
            let mut table = String::from("k\tmean\tstddev\tn_cases\n");
            for p in &points {
                table.push_str(&format!("{}\t{}\t{}\t{}\n", p.k, p.mean, p.stddev, p.n_cases));
            }
            let dir = store.root().join("sweeps").join(new_run_id());
            let doc = json!({"model": model.model.id, "suite_hash": suite.hash, "scorer": scorer, "seed": seed, "points": points});
            write_artifact(&dir, "sweep.json", &to_json(&doc)?)?;
            write_artifact(&dir, "sweep.tsv", &table)?;
            emit(out, &table)?;
            Ok(EXIT_OK)
        }
        Command::Ape { suite, config, propose_model, target_model, adapter } => {
            let suite = load_suite(suite)?;
            let config = load_ape_config(config)?;
            let pm = load_model(propose_model)?;
            let tm = load_model(target_model)?;
            let mode: AdapterMode = adapter.mode.into();
            let pa = build_adapter(mode, &pm, &adapter.sources())?;
            let ta = build_adapter(mode, &tm, &adapter.sources())?;
            let result =
                ape_search(&config, &suite, (pa.as_ref(), &pm.model), (ta.as_ref(), &tm.model), &metric_config)
                    .map_err(optimizer_error)?;
            let dir = store.root().join("ape").join(new_run_id());
            write_artifact(&dir, "ape.json", &to_json(&result)?)?;
            emit(out, &to_json(&result)?)?;
            Ok(EXIT_OK)
        }
        Command::Fairness { scores, method, theta, cost, w_fp, w_fn, threshold, seed } => {
            let examples = load_scores(scores)?;
            let fairness = |e: genaiops_core::fairness::FairnessError| GateError::config(e.to_string());
            let baseline: Vec<u8> = examples.iter().map(|e| u8::from(e.score >= *threshold)).collect();
            let before = disparity_report(&examples, &baseline).map_err(fairness)?;
            let (params, labels) = match method {
                FairnessMethod::Roc => (
                    json!({"theta": theta, "threshold": threshold}),
                    reject_option_classify(&examples, *theta, *threshold),
                ),
                FairnessMethod::Eo => {
                    let policy = equalized_odds_fit(&examples, *threshold).map_err(fairness)?;
                    (json!({"policy": policy, "seed": seed}), equalized_odds_apply(&policy, &examples, *seed))
                }
                FairnessMethod::Ceo => {
                    let cost = match cost {
                        CostArg::Fpr => CostKind::Fpr,
                        CostArg::Fnr => CostKind::Fnr,
                        CostArg::Weighted => CostKind::Weighted { w_fp: *w_fp, w_fn: *w_fn },
                    };
                    let policy = calibrated_eo_fit(&examples, cost).map_err(fairness)?;
                    let mixed = calibrated_eo_apply(&policy, &examples, *seed);
                    (json!({"policy": policy, "seed": seed}), mixed.into_iter().map(|(_, l)| l).collect())
                }
            };
            let after = disparity_report(&examples, &labels).map_err(fairness)?;
            let method = format!("{method:?}").to_lowercase();
            let doc = json!({"method": method, "params": params, "before": before, "after": after, "labels": labels});
            emit(out, &to_json(&doc)?)?;
            Ok(EXIT_OK)
        }
        Command::Safety { input, lexicon, redact: want_redacted } => {
            let text = read_text(input)?;
            let findings = scan_pii(&text);
            let hap = match lexicon {
                Some(p) => Some(
                    scan_hap(&text, Some(&load_lexicon(p)?), &HapConfig::default())
                        .map_err(|e| GateError::Internal(e.to_string()))?,
                ),
                None => None,
            };
            let mut doc = json!({"pii": findings, "pii_count": findings.len(), "hap": hap});
            if *want_redacted {
                doc["redacted"] = json!(redact(&text, &findings).map_err(|e| GateError::Internal(e.to_string()))?);
            }
            emit(out, &to_json(&doc)?)?;
            Ok(EXIT_OK)
        }
    }
}

fn optimizer_error(e: genaiops_core::optimizer::OptimizerError) -> GateError {
    use genaiops_core::adapter::AdapterError as A;
    use genaiops_core::optimizer::OptimizerError as E;
    match e {
        E::Adapter(a @ (A::CapabilityMissing { .. } | A::Config { .. })) => GateError::config(a.to_string()),
        E::Adapter(a) => GateError::Internal(a.to_string()),
        other => GateError::config(other.to_string()),
    }
}

/// Entry point used by the binary; panics map to the internal-error code.
pub fn main() -> i32 {
    let outcome = std::panic::catch_unwind(|| {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    });
    outcome.unwrap_or(crate::error::EXIT_INTERNAL)
}
