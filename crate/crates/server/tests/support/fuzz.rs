//! Random request generator for the error-totality check. Shared by the
//! service's own tests and the acceptance suite.

use axum::body::Body;
use axum::http::{header, HeaderValue, Method, Request, StatusCode};
use axum::Router;
use base64::Engine;
use crossmodal_server::{ErrorBody, ErrorCode};
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tower::ServiceExt;

const BOUNDARY: &str = "fuzz-boundary";

fn pick<'a, T>(rng: &mut StdRng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn png() -> Vec<u8> {
    let mut b = b"\x89PNG\r\n\x1a\n".to_vec();
    b.extend_from_slice(b"fuzz");
    b
}

/// Larger than the per-image cap the fuzz harness configures.
fn big_png() -> Vec<u8> {
    let mut b = png();
    b.resize(8192, 0);
    b
}

fn junk(rng: &mut StdRng, max: usize) -> Vec<u8> {
    let n = rng.random_range(0..max);
    (0..n).map(|_| rng.random()).collect()
}

fn text(rng: &mut StdRng) -> String {
    let options = [
        String::new(),
        "   ".into(),
        "a dog running on the beach".into(),
        "一个男人在骑马".into(),
        "Was ist auf diesem Bild?".into(),
        "🐶🐱".into(),
        "word ".repeat(rng.random_range(70..120)),
        String::from_utf8_lossy(&junk(rng, 40)).into_owned(),
    ];
    pick(rng, &options).clone()
}

fn json_value(rng: &mut StdRng) -> Value {
    let scalars = [
        json!(null),
        json!(true),
        json!(0),
        json!(-3),
        json!(7),
        json!(1.5),
        json!(1u64 << 40),
        json!("x"),
        json!([]),
        json!({}),
    ];
    pick(rng, &scalars).clone()
}

fn mode(rng: &mut StdRng) -> String {
    pick(rng, &["boon", "album", "google", "BOON", "", "flickr", "%FF", "a/b"]).to_string()
}

fn image_b64(rng: &mut StdRng) -> Value {
    let engine = base64::engine::general_purpose::STANDARD;
    match rng.random_range(0..5) {
        0 if rng.random_bool(0.2) => json!(engine.encode(big_png())),
        0 => json!(engine.encode(png())),
        1 => json!(format!("data:image/png;base64,{}", engine.encode(png()))),
        2 => json!(engine.encode(junk(rng, 64))),
        3 => json!("%%%not base64"),
        _ => json_value(rng),
    }
}

fn json_body(rng: &mut StdRng) -> Vec<u8> {
    let mut obj = serde_json::Map::new();
    let keys = ["query", "mode", "k", "text", "images", "session_id", "username", "password", "extra"];
    for key in keys {
        if rng.random_bool(0.3) {
            continue;
        }
        let v = match key {
            "query" | "text" | "username" | "password" => {
                if rng.random_bool(0.8) {
                    json!(text(rng))
                } else {
                    json_value(rng)
                }
            }
            "mode" => json!(mode(rng)),
            "k" => json_value(rng),
            "images" => {
                let n = rng.random_range(0..3);
                json!((0..n).map(|_| image_b64(rng)).collect::<Vec<_>>())
            }
            "session_id" => {
                if rng.random_bool(0.5) {
                    json!("no-such-session")
                } else {
                    json_value(rng)
                }
            }
            _ => json_value(rng),
        };
        obj.insert(key.to_string(), v);
    }
    match rng.random_range(0..6) {
        0 => junk(rng, 200),
        1 => b"{\"query\": ".to_vec(),
        2 => json_value(rng).to_string().into_bytes(),
        _ => Value::Object(obj).to_string().into_bytes(),
    }
}

fn multipart_body(rng: &mut StdRng) -> Vec<u8> {
    let mut body = Vec::new();
    let parts = rng.random_range(0..4);
    for _ in 0..parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        match rng.random_range(0..4) {
            0 | 1 => {
                body.extend_from_slice(
                    b"Content-Disposition: form-data; name=\"image\"; filename=\"f.png\"\r\n\r\n",
                );
                let payload = match rng.random_range(0..10) {
                    0..=5 => png(),
                    6 => big_png(),
                    _ => junk(rng, 300),
                };
                body.extend_from_slice(&payload);
            }
            2 => {
                let name = pick(rng, &["mode", "k", "note"]);
                body.extend_from_slice(
                    format!("Content-Disposition: form-data; name=\"{name}\"\r\n\r\n").as_bytes(),
                );
                let value = match *name {
                    "mode" => mode(rng),
                    "k" => pick(rng, &["1", "0", "-1", "ten", "99999999999999999999"]).to_string(),
                    _ => text(rng),
                };
                body.extend_from_slice(value.as_bytes());
            }
            _ => body.extend_from_slice(&junk(rng, 100)),
        }
        body.extend_from_slice(b"\r\n");
    }
    if rng.random_bool(0.8) {
        body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    }
    body
}

fn path(rng: &mut StdRng) -> String {
    let fixed = [
        "/health",
        "/auth/register",
        "/auth/login",
        "/search/text",
        "/search/image",
        "/chat",
        "/album/upload",
        "/",
        "/search",
        "/gallery//items",
        "/media/boon/images/i000001.jpg",
        "/media/boon/../../etc/passwd",
        "/media/boon/nothing.jpg",
        "/%zz",
    ];
    match rng.random_range(0..8) {
        0 => format!("/gallery/{}/items{}", mode(rng).replace('/', "%2F"), query(rng)),
        1 => format!(
            "/media/album/{}",
            pick(rng, &["x.png", "..%2Fmeta.redb", ".hidden", "a%00b", "%FF"])
        ),
        2 | 3 => pick(rng, &fixed).to_string(),
        _ => pick(rng, &["/search/text", "/search/image", "/chat", "/album/upload"]).to_string(),
    }
}

fn query(rng: &mut StdRng) -> String {
    let opts = [
        "",
        "?page=0",
        "?page=3&page_size=2",
        "?page=-1",
        "?page_size=0",
        "?page_size=100000",
        "?page=abc",
        "?page=%zz",
        "?page=18446744073709551616",
        "?page=99999999999",
    ];
    pick(rng, &opts).to_string()
}

/// One random request.
pub fn request(rng: &mut StdRng, token: &str) -> Request<Body> {
    let method = pick(
        rng,
        &[Method::GET, Method::POST, Method::POST, Method::POST, Method::PUT, Method::DELETE],
    )
    .clone();
    let uri = path(rng);
    let mut builder = Request::builder().method(method).uri(uri.as_str());
    match rng.random_range(0..10) {
        0..=2 => {}
        3..=8 => builder = builder.header(header::AUTHORIZATION, format!("Bearer {token}")),
        9 if rng.random_bool(0.5) => {
            builder = builder.header(header::AUTHORIZATION, "Bearer forged")
        }
        _ => {
            builder = builder.header(
                header::AUTHORIZATION,
                HeaderValue::from_bytes(b"Bearer \xff\xfe").unwrap(),
            )
        }
    }
    let (content_type, body) = match rng.random_range(0..6) {
        0 => (None, Vec::new()),
        1 | 2 => (Some("application/json".to_string()), json_body(rng)),
        3 | 4 => (
            Some(format!("multipart/form-data; boundary={BOUNDARY}")),
            multipart_body(rng),
        ),
        _ => (
            Some(pick(rng, &["text/plain", "multipart/form-data", "application/x-www-form-urlencoded"]).to_string()),
            junk(rng, 200),
        ),
    };
    if let Some(ct) = content_type {
        builder = builder.header(header::CONTENT_TYPE, ct);
    }
    builder.body(Body::from(body)).unwrap_or_else(|_| {
        Request::builder()
            .uri("/health")
            .body(Body::empty())
            .unwrap()
    })
}

#[allow(dead_code)]
#[derive(Debug)]
pub struct Violation {
    pub request: String,
    pub status: StatusCode,
    pub body: String,
}

#[derive(Debug, Default)]
pub struct FuzzSummary {
    pub requests: usize,
    pub successes: usize,
    pub pairs: std::collections::BTreeSet<(u16, String)>,
    pub violations: Vec<Violation>,
}

/// Send `cases` random requests and check every non-success reply is a
/// documented (status, machine code) pair.
pub async fn fuzz(app: &Router, token: &str, cases: usize, seed: u64) -> FuzzSummary {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut summary = FuzzSummary::default();
    for _ in 0..cases {
        let req = request(&mut rng, token);
        let described = format!("{} {}", req.method(), req.uri());
        let res = app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        summary.requests += 1;
        if status.is_success() {
            summary.successes += 1;
            continue;
        }
        let documented = serde_json::from_slice::<ErrorBody>(&bytes)
            .ok()
            .filter(|b| b.error.code.status() == status && ErrorCode::ALL.contains(&b.error.code));
        match documented {
            Some(b) => {
                summary.pairs.insert((status.as_u16(), b.error.code.as_str().to_string()));
            }
            None => summary.violations.push(Violation {
                request: described,
                status,
                body: String::from_utf8_lossy(&bytes).chars().take(200).collect(),
            }),
        }
    }
    summary
}
