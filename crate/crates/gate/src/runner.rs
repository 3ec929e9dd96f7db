//! Building adapters for each mode and executing a suite into the store.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use genaiops_core::adapter::Adapter;
use genaiops_core::metrics::MetricConfig;
use genaiops_core::mock::MockAdapter;
use genaiops_core::pipeline::{evaluate_case, failed_record, AdapterMode, Run, RunManifest, RunRecord, SafetyContext};
use genaiops_core::safety::{HapConfig, Lexicon};
use genaiops_core::suite::{render_prompt, select_demos, FewShotConfig, PromptTemplate, Suite};
use genaiops_core::transport::WireAdapter;

use crate::error::{GateError, Result};
use crate::files::{load_fixtures, ModelFile};
use crate::http::{load_replay, LiveTransport, RecordTransport};
use crate::store::{new_run_id, utc_now, RunStore};

/// Endpoint scheme served by the in-process mock model.
pub const MOCK_SCHEME: &str = "mock://";

/// Where an adapter gets its answers.
#[derive(Debug, Clone, Default)]
pub struct AdapterSources {
    /// Replay cache written in record mode and read in replay mode.
    pub cache: Option<PathBuf>,
    /// Fixtures for the mock model.
    pub fixtures: Option<PathBuf>,
}

pub fn mock_adapter(fixtures: Option<&Path>) -> Result<MockAdapter> {
    let mut m = MockAdapter::new();
    if let Some(path) = fixtures {
        for f in load_fixtures(path)? {
            m = match (f.prompt, f.key) {
                (Some(p), _) => m.with_fixture(&p, f.response),
                (None, Some(k)) => m.with_fixture_key(k, f.response),
                (None, None) => m,
            };
        }
    }
    Ok(m)
}

fn cache_path(sources: &AdapterSources) -> Result<&Path> {
    sources.cache.as_deref().ok_or_else(|| GateError::config("record and replay modes need a cache file (--cache)"))
}

/// Builds the adapter for `mode`. The mock model takes on the declared
/// capabilities. Record mode forwards to the mock model
/// when the endpoint uses the `mock://` scheme, else to the live endpoint.
pub fn build_adapter(mode: AdapterMode, model: &ModelFile, sources: &AdapterSources) -> Result<Box<dyn Adapter>> {
    let caps = model.capability;
    Ok(match mode {
        AdapterMode::Mock => Box::new(mock_adapter(sources.fixtures.as_deref())?.with_capability(caps)),
        AdapterMode::Live => Box::new(WireAdapter::new(LiveTransport::new(model.max_in_flight), caps)),
        AdapterMode::Replay => Box::new(WireAdapter::new(load_replay(cache_path(sources)?)?, caps)),
        AdapterMode::Record => {
            let path = cache_path(sources)?;
            if model.model.endpoint.starts_with(MOCK_SCHEME) {
                let upstream = mock_adapter(sources.fixtures.as_deref())?;
                Box::new(WireAdapter::new(RecordTransport::create(upstream, path)?, caps))
            } else {
                let upstream = LiveTransport::new(model.max_in_flight);
                Box::new(WireAdapter::new(RecordTransport::create(upstream, path)?, caps))
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    pub suite: &'a Suite,
    pub template: &'a PromptTemplate,
    pub fewshot: FewShotConfig,
    pub model: &'a ModelFile,
    pub mode: AdapterMode,
    pub parallelism: usize,
    pub lexicon: Option<&'a Lexicon>,
    pub metric_config: MetricConfig,
}

/// Evaluates every case (up to `parallelism` at a time) and persists the
/// run. Per-case failures are kept in the records; only store errors abort.
pub fn run_suite(opts: &RunOptions<'_>, adapter: &dyn Adapter, store: &RunStore) -> Result<Run> {
    if opts.suite.is_empty() {
        return Err(GateError::config("suite is empty"));
    }
    let manifest = RunManifest {
        run_id: new_run_id(),
        created_at: utc_now(),
        model: opts.model.model.clone(),
        suite_hash: opts.suite.hash.clone(),
        template_hash: opts.template.hash(),
        metric_config_hash: opts.metric_config.hash(),
        metric_config: opts.metric_config.clone(),
        fewshot: opts.fewshot,
        adapter_mode: opts.mode,
        privileged_segment: opts.suite.privileged.clone(),
        lexicon_id: opts.lexicon.map(|l| l.id().to_string()),
        n_cases: opts.suite.len(),
    };
    let writer = store.begin(manifest)?;
    let records = evaluate_all(opts, adapter);
    writer.finalize(records)
}

/// Evaluates the suite without persisting anything.
pub fn evaluate_all(opts: &RunOptions<'_>, adapter: &dyn Adapter) -> Vec<RunRecord> {
    let cases = &opts.suite.cases;
    let safety = SafetyContext { lexicon: opts.lexicon, hap: HapConfig::default() };
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; cases.len()]);
    let workers = opts.parallelism.clamp(1, cases.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(case) = cases.get(i) else { break };
                let f = opts.fewshot;
                let demos = select_demos(opts.suite, f.k, f.strategy, f.seed, &case.id);
                let record = match render_prompt(opts.template, case, &demos) {
                    Ok(prompt) => evaluate_case(case, prompt, adapter, &opts.model.model, &opts.metric_config, &safety),
                    Err(e) => failed_record(case, e),
                };
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(record);
            });
        }
    });
    let mut records: Vec<RunRecord> =
        slots.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().flatten().collect();
    records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    records
}
