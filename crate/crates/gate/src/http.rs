//! HTTP transport with retries, the record-mode tee, and replay-cache
//! loading.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use genaiops_core::adapter::{AdapterError, ModelSpec};
use genaiops_core::rng::SeededRng;
use genaiops_core::transport::{CacheEntry, Exchange, ReplayTransport, Transport};
use genaiops_core::wire::cache_key;
use serde_json::Value;

use crate::error::{GateError, Result};
use crate::files::{parse_jsonl, read_text};

pub const API_KEY_ENV: &str = "GENAIOPS_API_KEY";
pub const ENDPOINT_ENV: &str = "GENAIOPS_ENDPOINT";

/// Exponential backoff with full jitter: before retry `n` (from 0) the
/// client sleeps a uniform duration in `[0, min(cap, base * factor^n)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub factor: f64,
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff { base: Duration::from_millis(250), factor: 2.0, cap: Duration::from_secs(8) }
    }
}

impl Backoff {
    /// Upper bound of the sleep before retry `retry`.
    pub fn ceiling(&self, retry: u32) -> Duration {
        let ms = self.base.as_secs_f64() * 1000.0 * self.factor.powi(retry as i32);
        let cap = self.cap.as_secs_f64() * 1000.0;
        Duration::from_secs_f64(ms.min(cap).max(0.0) / 1000.0)
    }

    pub fn delay(&self, retry: u32, rng: &mut SeededRng) -> Duration {
        self.ceiling(retry).mul_f64(rng.unit_f64())
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Talks to an OpenAI-compatible endpoint over HTTP(S).
#[derive(Debug)]
pub struct LiveTransport {
    agent: ureq::Agent,
    api_key: Option<String>,
    endpoint_override: Option<String>,
    backoff: Backoff,
    in_flight: Semaphore,
    jitter: Mutex<SeededRng>,
}

impl LiveTransport {
    /// Reads the bearer token and endpoint override from the environment.
    pub fn new(max_in_flight: usize) -> Self {
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        Self::with_settings(max_in_flight, env(API_KEY_ENV), env(ENDPOINT_ENV), Backoff::default())
    }

    pub fn with_settings(
        max_in_flight: usize,
        api_key: Option<String>,
        endpoint_override: Option<String>,
        backoff: Backoff,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let seed = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
        LiveTransport {
            agent,
            api_key,
            endpoint_override,
            backoff,
            in_flight: Semaphore::new(max_in_flight),
            jitter: Mutex::new(SeededRng::new(seed)),
        }
    }

    /// Full URL for `path` under the model's endpoint (or the override).
    pub fn url(&self, spec: &ModelSpec, path: &str) -> Result<String, AdapterError> {
        let base = self.endpoint_override.as_deref().unwrap_or(&spec.endpoint).trim_end_matches('/');
        let host = base.strip_prefix("http://").or_else(|| base.strip_prefix("https://"));
        if host.is_none_or(str::is_empty) {
            return Err(AdapterError::Config { message: format!("endpoint `{base}` is not an http(s) URL") });
        }
        let path = if base.ends_with("/v1") { path.trim_start_matches("/v1") } else { path };
        Ok(format!("{base}{path}"))
    }

    fn attempt(&self, url: &str, spec: &ModelSpec, body: &Value) -> Result<Value, Attempt> {
        let timeout = Duration::from_millis(spec.timeout_ms.max(1));
        let mut req = self.agent.post(url).config().timeout_global(Some(timeout)).build();
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {k}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Err(Attempt::Retry(AdapterError::Timeout { after_ms: spec.timeout_ms }))
            }
            Err(e @ (ureq::Error::BadUri(_) | ureq::Error::HostNotFound)) => {
                return Err(Attempt::Fatal(AdapterError::Config { message: e.to_string() }))
            }
            Err(e) => return Err(Attempt::Retry(AdapterError::Transport { message: e.to_string() })),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => {
                return Err(Attempt::Retry(AdapterError::Timeout { after_ms: spec.timeout_ms }))
            }
            Err(e) => return Err(Attempt::Retry(AdapterError::Transport { message: e.to_string() })),
        };
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(AdapterError::Endpoint { status, body: text }));
        }
        if !(200..300).contains(&status) {
            return Err(Attempt::Fatal(AdapterError::Endpoint { status, body: text }));
        }
        serde_json::from_str(&text).map_err(|e| Attempt::Fatal(AdapterError::protocol(e.to_string())))
    }
}

enum Attempt {
    Retry(AdapterError),
    Fatal(AdapterError),
}

impl Transport for LiveTransport {
    /// Retries 429, 5xx, timeouts, and connection failures up to
    /// `spec.max_retries` times.
    fn send(&self, spec: &ModelSpec, path: &str, body: &Value) -> Result<Exchange, AdapterError> {
        let url = self.url(spec, path)?;
        let mut retry = 0u32;
        loop {
            let started = Instant::now();
            let outcome = {
                let _permit = self.in_flight.acquire();
                self.attempt(&url, spec, body)
            };
            match outcome {
                Ok(response) => {
                    let latency_ms = started.elapsed().as_millis() as u64;
                    return Ok(Exchange { response, latency_ms });
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if retry >= spec.max_retries => return Err(e),
                Err(Attempt::Retry(_)) => {
                    let delay = {
                        let mut rng = self.jitter.lock().unwrap_or_else(|e| e.into_inner());
                        self.backoff.delay(retry, &mut rng)
                    };
                    std::thread::sleep(delay);
                    retry += 1;
                }
            }
        }
    }
}

/// Forwards to an upstream transport and appends every successful exchange
/// to a replay cache file. Writes go through one mutex-guarded writer.
#[derive(Debug)]
pub struct RecordTransport<T> {
    upstream: T,
    path: PathBuf,
    writer: Mutex<BufWriter<File>>,
}

impl<T: Transport> RecordTransport<T> {
    pub fn create(upstream: T, path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| GateError::StoreWrite { path: dir.into(), source })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| GateError::StoreWrite { path: path.into(), source })?;
        Ok(RecordTransport { upstream, path: path.into(), writer: Mutex::new(BufWriter::new(file)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<T: Transport> Transport for RecordTransport<T> {
    fn send(&self, spec: &ModelSpec, path: &str, body: &Value) -> Result<Exchange, AdapterError> {
        let ex = self.upstream.send(spec, path, body)?;
        let entry = CacheEntry { key: cache_key(body), response: ex.response.clone(), latency_ms: ex.latency_ms };
        let line = serde_json::to_string(&entry).map_err(|e| AdapterError::protocol(e.to_string()))?;
        let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| AdapterError::Transport { message: format!("writing replay cache: {e}") })?;
        Ok(ex)
    }
}

/// Loads a replay cache written by [`RecordTransport`].
pub fn load_replay(path: &Path) -> Result<ReplayTransport> {
    let entries: Vec<CacheEntry> = parse_jsonl(path, &read_text(path)?)?;
    Ok(ReplayTransport::new(entries))
}
