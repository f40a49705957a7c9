//! Shared fixtures for integration tests: seeded random profiles, an
//! independent brute-force BM25 scorer, the synthetic oracle dataset,
//! and a scriptable single-thread HTTP stub.

#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lamp_core::model::{Dataset, ProfileEntry, Sample};
use lamp_core::tasks::{self, MOVIE_TAGS};

const VOCAB: [&str; 30] = [
    "alpha", "beta", "gamma", "delta", "engine", "filter", "graph", "hash", "index", "joint",
    "kernel", "lambda", "matrix", "node", "orbit", "parser", "query", "rank", "signal", "tensor",
    "update", "vector", "window", "xenon", "yield", "zeta", "batch", "cache", "depth", "edge",
];

/// Random word drawn mostly from the shared vocabulary, occasionally
/// unique, so document frequencies vary and some query terms miss.
fn word(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.9) {
        VOCAB[rng.gen_range(0..VOCAB.len())].to_string()
    } else {
        format!("uniq{}", rng.gen_range(0..100000))
    }
}

pub fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

/// Profile of `n` single-field entries with 1..=max_tokens tokens each.
pub fn random_profile(rng: &mut ChaCha8Rng, n: usize, max_tokens: usize) -> Vec<ProfileEntry> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=max_tokens);
            ProfileEntry::new(format!("e{i:03}")).with_field("text", words(rng, len))
        })
        .collect()
}

fn oracle_tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Independent BM25 scorer: recomputes tf, df, and avgdl from raw entry
/// texts, scores every entry, sorts score-descending with id-ascending
/// ties, and truncates to k. No shared code with the retrieval path.
pub fn brute_force_bm25(
    entries: &[(String, String)],
    query: &str,
    k: usize,
    k1: f64,
    b: f64,
) -> Vec<(String, f64)> {
    let docs: Vec<(String, Vec<String>)> = entries
        .iter()
        .map(|(id, text)| (id.clone(), oracle_tokenize(text)))
        .collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let query_tokens = oracle_tokenize(query);

    let mut scored: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, tokens)| {
            let dl = tokens.len() as f64;
            let mut seen: Vec<&String> = Vec::new();
            let mut score = 0.0;
            for term in &query_tokens {
                if seen.contains(&term) {
                    continue;
                }
                seen.push(term);
                let tf = tokens.iter().filter(|t| *t == term).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = docs.iter().filter(|(_, ts)| ts.contains(term)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            }
            (id.clone(), score)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    scored
}

/// Synthetic movie-tagging dataset where each sample's gold tag is
/// recoverable from exactly one profile entry. That answer entry shares
/// two sample-unique rare terms with the input (so BM25 ranks it first)
/// and opens with a marker token that never appears in the input.
/// Returns the dataset plus the (marker, gold) rules for the
/// gold-if-present mock.
pub fn oracle_dataset(n: usize, seed: u64) -> (Dataset, Vec<(String, String)>) {
    let task = tasks::by_id("LaMP-2U").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut rules = Vec::with_capacity(n);

    for i in 0..n {
        let gold = MOVIE_TAGS[rng.gen_range(0..MOVIE_TAGS.len())].to_string();
        let rare_a = format!("zq{i}k");
        let rare_b = format!("xv{i}k");
        let marker = format!("mk{i}gold");

        let mut profile = vec![ProfileEntry::new(format!("s{i}-ans"))
            .with_field(
                "description",
                format!("{marker} {rare_a} {rare_b} a story about subject {i}"),
            )
            .with_field("tag", gold.clone())];
        for j in 0..9 {
            profile.push(
                ProfileEntry::new(format!("s{i}-d{j}"))
                    .with_field(
                        "description",
                        format!("unrelated plot {j} about common things and filler scenes"),
                    )
                    .with_field("tag", MOVIE_TAGS[rng.gen_range(0..MOVIE_TAGS.len())].to_string()),
            );
        }
        profile.shuffle(&mut rng);

        samples.push(Sample {
            id: format!("s{i:04}"),
            user_id: format!("u{i:04}"),
            input: format!("{rare_a} {rare_b} a film about subject {i} with twists"),
            target: gold.clone(),
            profile,
        });
        rules.push((marker, gold));
    }

    (Dataset { task, provenance: Some("synthetic oracle".into()), samples }, rules)
}

/// One scripted exchange of the HTTP stub.
pub enum Step {
    /// Respond 200 with this JSON body.
    Json(String),
    /// Respond with this bare status code.
    Status(u16),
    /// Sleep, then respond 200 with this JSON body.
    DelayThenJson(u64, String),
    /// Parse `{"prompt": ...}` and respond `{"text": <prompt>}`.
    EchoPrompt,
}

pub struct StubServer {
    pub url: String,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Serve the scripted steps, one TCP connection each, then exit.
    pub fn start(steps: Vec<Step>) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let url = format!("http://{}/", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            for step in steps {
                let Ok((mut stream, _)) = listener.accept() else { return };
                let body = read_request_body(&mut stream);
                let (status, payload) = match step {
                    Step::Json(json) => ("200 OK", json),
                    Step::Status(code) => {
                        let line = match code {
                            404 => "404 Not Found".to_string(),
                            500 => "500 Internal Server Error".to_string(),
                            code => format!("{code} Error"),
                        };
                        respond(&mut stream, &line, "{}");
                        continue;
                    }
                    Step::DelayThenJson(ms, json) => {
                        std::thread::sleep(std::time::Duration::from_millis(ms));
                        ("200 OK", json)
                    }
                    Step::EchoPrompt => {
                        let parsed: serde_json::Value =
                            serde_json::from_str(&body).unwrap_or_default();
                        let prompt = parsed["prompt"].as_str().unwrap_or("").to_string();
                        ("200 OK", serde_json::json!({ "text": prompt }).to_string())
                    }
                };
                respond(&mut stream, status, &payload);
            }
        });
        StubServer { url, handle: Some(handle) }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn read_request_body(stream: &mut std::net::TcpStream) -> String {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    let header_end = loop {
        match stream.read(&mut chunk) {
            Ok(0) => return String::new(),
            Ok(n) => {
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    break pos;
                }
            }
            Err(_) => return String::new(),
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length = headers
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length").then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => body.extend_from_slice(&chunk[..n]),
            Err(_) => break,
        }
    }
    String::from_utf8_lossy(&body).to_string()
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn respond(stream: &mut std::net::TcpStream, status: &str, body: &str) {
    let response = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}
