//! Shared HTTP stub server for backend tests: a minimal chat-completions
//! endpoint with a scriptable status sequence.

use mcrank_core::backend::{BackendConfig, BackendKind, RetryPolicy};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

/// Minimal HTTP/1.1 chat-completions stub. Each element of `script` answers
/// one request: `Some(status)` forces that status with an empty body,
/// `None` answers 200 with a canned completion.
pub struct StubServer {
    pub addr: String,
    hits: Arc<AtomicUsize>,
    stopping: Arc<std::sync::atomic::AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

fn read_request(stream: &mut TcpStream) -> Option<String> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    if line.is_empty() {
        return None;
    }
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).ok()?;
        if header == "\r\n" || header.is_empty() {
            break;
        }
        let lower = header.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("content-length:") {
            content_length = rest.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    String::from_utf8(body).ok()
}

fn write_response(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        401 => "Unauthorized",
        _ => "Error",
    };
    let response = format!(
        "HTTP/1.1 {} {}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
        status,
        reason,
        body.len(),
        body
    );
    let _ = stream.write_all(response.as_bytes());
}

impl StubServer {
    /// `script[i]` shapes the i-th response; later requests replay the last
    /// entry. The canned completion echoes a fixed ranking answer.
    pub fn start(script: Vec<Option<u16>>, completion: &'static str) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let stopping = Arc::new(std::sync::atomic::AtomicBool::new(false));
        let hits_inner = hits.clone();
        let stopping_inner = stopping.clone();
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if stopping_inner.load(AtomicOrdering::SeqCst) {
                    break;
                }
                let mut stream = match stream {
                    Ok(s) => s,
                    Err(_) => break,
                };
                if read_request(&mut stream).is_none() {
                    continue;
                }
                let n = hits_inner.fetch_add(1, AtomicOrdering::SeqCst);
                let step = script.get(n).or_else(|| script.last()).copied().flatten();
                match step {
                    Some(status) => write_response(&mut stream, status, "{}"),
                    None => {
                        let body = format!(
                            "{{\"choices\":[{{\"message\":{{\"content\":\"{}\"}}}}],\
                             \"usage\":{{\"prompt_tokens\":12,\"completion_tokens\":5}}}}",
                            completion
                        );
                        write_response(&mut stream, 200, &body);
                    }
                }
            }
        });
        StubServer {
            addr,
            hits,
            stopping,
            handle: Some(handle),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(AtomicOrdering::SeqCst)
    }

    pub fn stop(mut self) {
        self.stopping.store(true, AtomicOrdering::SeqCst);
        // Unblock the accept loop with one throwaway connection.
        let _ = TcpStream::connect(self.addr.trim_start_matches("http://"));
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn http_config(addr: &str, cache: Option<std::path::PathBuf>) -> BackendConfig {
    BackendConfig {
        kind: BackendKind::Http,
        base_url: Some(addr.to_string()),
        api_key_env: "MCRANK_TEST_KEY".into(),
        model: "stub-model".into(),
        retry: RetryPolicy {
            max_attempts: 3,
            backoff_base_ms: 5,
        },
        cache_dir: cache,
        concurrency_limit: 2,
        ..BackendConfig::default()
    }
}

pub fn set_key() {
    // Safety: tests in this file run in one process; the variable is only
    // ever set to the same value.
    unsafe { std::env::set_var("MCRANK_TEST_KEY", "test-key") };
}
