//! A minimal OpenAI-compatible HTTP server backed by the mock model.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use genaiops_core::mock::MockAdapter;
use serde_json::{json, Value};

#[derive(Default)]
struct State {
    /// Status codes to answer with before serving normally.
    script: Mutex<VecDeque<u16>>,
    /// Answer every request with this status.
    always: Mutex<Option<u16>>,
    requests: AtomicUsize,
}

pub struct MockServer {
    pub base: String,
    state: Arc<State>,
}

impl MockServer {
    pub fn start(model: MockAdapter) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let state = Arc::new(State::default());
        let shared = state.clone();
        let model = Arc::new(model);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (state, model) = (shared.clone(), model.clone());
                std::thread::spawn(move || serve(stream, &state, &model));
            }
        });
        MockServer { base, state }
    }

    pub fn fail_next(&self, statuses: &[u16]) {
        self.state.script.lock().unwrap().extend(statuses);
    }

    pub fn fail_always(&self, status: u16) {
        *self.state.always.lock().unwrap() = Some(status);
    }

    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, state: &State, model: &MockAdapter) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut len = 0usize;
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).unwrap();
    state.requests.fetch_add(1, Ordering::SeqCst);

    let forced = state.always.lock().unwrap().or_else(|| state.script.lock().unwrap().pop_front());
    let (status, payload) = match forced {
        Some(s) => (s, json!({"error": {"message": "scripted failure"}})),
        None => {
            let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
            match model.respond(&path, &request) {
                Ok(v) => (200, v),
                Err(e) => (400, json!({"error": {"message": e.to_string()}})),
            }
        }
    };
    let text = payload.to_string();
    let mut out = stream;
    let _ = write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
    let _ = out.flush();
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

/// `n` summarization cases whose reference equals the source.
pub fn suite_text(n: usize) -> String {
    (0..n)
        .map(|i| {
            format!(
                "{{\"id\":\"c{i:02}\",\"task\":\"summarization\",\"source\":\"the quick brown fox number {i}\",\"references\":[\"the quick brown fox number {i}\"]}}\n"
            )
        })
        .collect()
}

pub fn model_json(endpoint: &str, max_retries: u32) -> String {
    json!({
        "model": {"id": "cand", "endpoint": endpoint, "model_name": "mock-model", "max_retries": max_retries, "timeout_ms": 5000},
        "capability": {"supports_logprobs": true, "supports_seed": true, "supports_embeddings": false},
        "max_in_flight": 4
    })
    .to_string()
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["genaiops"];
    full.extend_from_slice(args);
    let code = genaiops_gate::cli::run_cli(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
