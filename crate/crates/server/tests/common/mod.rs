//! Helpers for driving the router in-process.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use crossmodal_core::center::Providers;
use crossmodal_core::providers::mock::fake_jpeg;
use crossmodal_core::synth::SynthSpec;
use crossmodal_core::Dims;
use crossmodal_server::{router, AppState, ErrorBody, ServerConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

pub const DIMS: Dims = Dims::new(16, 8, 3);
pub const CORPUS_IMAGES: usize = 30;

pub struct Harness {
    pub dir: TempDir,
    pub state: Arc<AppState>,
    pub app: Router,
}

pub fn corpus(dir: &Path) -> PathBuf {
    let mut spec = SynthSpec::new(CORPUS_IMAGES, DIMS, 21);
    spec.descriptions_per_image = 2;
    let root = dir.join("corpus");
    let manifest = spec.write(&root).unwrap();
    std::fs::create_dir_all(root.join("images")).unwrap();
    for i in 0..CORPUS_IMAGES {
        let id = SynthSpec::image_id(i);
        std::fs::write(root.join(format!("images/{id}.jpg")), fake_jpeg(id.as_bytes())).unwrap();
    }
    manifest
}

pub fn base_config(dir: &Path) -> ServerConfig {
    ServerConfig {
        data_dir: dir.join("data"),
        boon_store: Some(corpus(dir)),
        dims: DIMS,
        ..ServerConfig::default()
    }
}

pub fn harness(tweak: impl FnOnce(&mut ServerConfig)) -> Harness {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    tweak(&mut config);
    let state = AppState::from_config(config).unwrap();
    let app = router(state.clone());
    Harness { dir, state, app }
}

pub fn harness_with(providers: Providers, tweak: impl FnOnce(&mut ServerConfig)) -> Harness {
    let dir = TempDir::new().unwrap();
    let mut config = base_config(dir.path());
    tweak(&mut config);
    let state = AppState::with_providers(config, providers).unwrap();
    let app = router(state.clone());
    Harness { dir, state, app }
}

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("non-JSON body ({e}): {:?}", String::from_utf8_lossy(&self.bytes)))
    }

    /// Machine code of an error reply.
    pub fn code(&self) -> String {
        let body: ErrorBody = serde_json::from_slice(&self.bytes).unwrap_or_else(|e| {
            panic!("not an error body ({e}): {:?}", String::from_utf8_lossy(&self.bytes))
        });
        body.error.code.as_str().to_string()
    }
}

pub async fn send(app: &Router, req: Request<Body>) -> Reply {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, bytes }
}

fn with_token(mut b: axum::http::request::Builder, token: Option<&str>) -> axum::http::request::Builder {
    if let Some(t) = token {
        b = b.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    b
}

pub async fn post_json(app: &Router, uri: &str, body: Value, token: Option<&str>) -> Reply {
    let req = with_token(Request::builder().method(Method::POST).uri(uri), token)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

pub async fn get(app: &Router, uri: &str, token: Option<&str>) -> Reply {
    let req = with_token(Request::builder().method(Method::GET).uri(uri), token)
        .body(Body::empty())
        .unwrap();
    send(app, req).await
}

pub const BOUNDARY: &str = "----crossmodal-test-boundary";

/// A multipart body; parts with a file name are sent as files.
pub fn multipart_body(parts: &[(&str, Option<&str>, &[u8])]) -> Vec<u8> {
    let mut body = Vec::new();
    for (name, file, data) in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        match file {
            Some(f) => body.extend_from_slice(
                format!(
                    "Content-Disposition: form-data; name=\"{name}\"; filename=\"{f}\"\r\nContent-Type: application/octet-stream\r\n\r\n"
                )
                .as_bytes(),
            ),
            None => body.extend_from_slice(
                format!("Content-Disposition: form-data; name=\"{name}\"\r\n\r\n").as_bytes(),
            ),
        }
        body.extend_from_slice(data);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub async fn post_multipart(
    app: &Router,
    uri: &str,
    parts: &[(&str, Option<&str>, &[u8])],
    token: Option<&str>,
) -> Reply {
    let req = with_token(Request::builder().method(Method::POST).uri(uri), token)
        .header(
            header::CONTENT_TYPE,
            format!("multipart/form-data; boundary={BOUNDARY}"),
        )
        .body(Body::from(multipart_body(parts)))
        .unwrap();
    send(app, req).await
}

/// Register and log in; returns the bearer token.
pub async fn account(app: &Router, name: &str) -> String {
    let r = post_json(
        app,
        "/auth/register",
        serde_json::json!({"username": name, "password": "password123"}),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.json());
    let r = post_json(
        app,
        "/auth/login",
        serde_json::json!({"username": name, "password": "password123"}),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    r.json()["token"].as_str().unwrap().to_string()
}
