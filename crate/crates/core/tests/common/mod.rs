#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Recorded {
    pub headers: Vec<(String, String)>,
    pub body: Value,
}

pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl Reply {
    pub fn ok(body: Value) -> Self {
        Self {
            status: 200,
            body: body.to_string(),
            delay: Duration::ZERO,
        }
    }

    pub fn status(status: u16) -> Self {
        Self {
            status,
            body: "{\"error\": \"boom\"}".into(),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

/// Minimal HTTP/1.1 server answering each request with `handler`.
pub struct MockServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
    pub max_concurrent: Arc<AtomicUsize>,
}

pub fn serve<F>(handler: F) -> MockServer
where
    F: Fn(usize, &Value) -> Reply + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let max_concurrent = Arc::new(AtomicUsize::new(0));
    let current = Arc::new(AtomicUsize::new(0));
    let handler = Arc::new(handler);
    let counter = Arc::new(AtomicUsize::new(0));
    {
        let requests = requests.clone();
        let max_concurrent = max_concurrent.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let requests = requests.clone();
                let handler = handler.clone();
                let counter = counter.clone();
                let current = current.clone();
                let max_concurrent = max_concurrent.clone();
                thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut headers = Vec::new();
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let mut length = 0;
                    loop {
                        line.clear();
                        if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                            break;
                        }
                        if let Some((k, v)) = line.trim_end().split_once(':') {
                            let k = k.trim().to_ascii_lowercase();
                            let v = v.trim().to_string();
                            if k == "content-length" {
                                length = v.parse().unwrap();
                            }
                            headers.push((k, v));
                        }
                    }
                    let mut body = vec![0; length];
                    reader.read_exact(&mut body).unwrap();
                    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);

                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    max_concurrent.fetch_max(now, Ordering::SeqCst);
                    let n = counter.fetch_add(1, Ordering::SeqCst);
                    requests.lock().unwrap().push(Recorded {
                        headers,
                        body: body.clone(),
                    });
                    let reply = handler(n, &body);
                    thread::sleep(reply.delay);
                    current.fetch_sub(1, Ordering::SeqCst);
                    let resp = format!(
                        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        reply.status,
                        reply.body.len(),
                        reply.body
                    );
                    let _ = stream.write_all(resp.as_bytes());
                });
            }
        });
    }
    MockServer {
        url,
        requests,
        max_concurrent,
    }
}

/// Splits `text` into whitespace-led chunks the way BPE tokenizers tend to
/// (`"a b"` → `"a"`, `" b"`), additionally splitting words longer than six
/// bytes in two.
pub fn fake_tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() && !current.trim().is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        current.push(c);
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
        .into_iter()
        .flat_map(|t| {
            if t.len() > 6 && t.is_char_boundary(4) {
                vec![t[..4].to_string(), t[4..].to_string()]
            } else {
                vec![t]
            }
        })
        .collect()
}

/// Echo response assigning each token the logprob `score(token)`.
pub fn echo_response(text: &str, score: impl Fn(&str) -> f64) -> Value {
    let tokens = fake_tokenize(text);
    let mut offsets = Vec::new();
    let mut off = 0;
    for t in &tokens {
        offsets.push(off);
        off += t.len();
    }
    let lps: Vec<Value> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| if i == 0 { Value::Null } else { json!(score(t)) })
        .collect();
    json!({"choices": [{"text": text, "logprobs": {
        "tokens": tokens, "token_logprobs": lps, "text_offset": offsets
    }}]})
}
