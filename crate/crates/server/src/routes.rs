//! HTTP handlers.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::handler::HandlerWithoutStateExt;
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, get_service, post};
use axum::{Json, Router};
use base64::Engine;
use crossmodal_core::center::{ChatSession, NormalizedQuery, Scope, WebHit};
use crossmodal_core::providers::{sniff_image, EncoderInput, ImageFormat};
use crossmodal_core::{GalleryMode, RankedResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::catch_panic::CatchPanicLayer;
use tower_http::services::ServeDir;

use crate::error::{ApiError, ApiResult, ErrorCode};
use crate::meta::{Account, MetaError, StoredSession};
use crate::state::{AppState, ListedImage};

type AppStateRef = Arc<AppState>;

pub fn router(state: AppStateRef) -> Router {
    let mut app = Router::new()
        .route("/health", get(health))
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/search/text", post(search_text))
        .route("/search/image", post(search_image))
        .route("/chat", post(chat))
        .route("/album/upload", post(album_upload))
        .route("/gallery/{mode}/items", get(gallery_items))
        .route("/media/album/{file}", get(album_media))
        .method_not_allowed_fallback(method_not_allowed);
    if let Some(store) = state.boon() {
        let files = ServeDir::new(store.root()).not_found_service(not_found.into_service());
        let media = Router::new()
            .route("/{*path}", get_service(files))
            .method_not_allowed_fallback(method_not_allowed);
        app = app.nest("/media/boon", media);
    }
    app = match &state.config.static_dir {
        Some(dir) => app.fallback_service(
            ServeDir::new(dir)
                .append_index_html_on_directories(true)
                .call_fallback_on_method_not_allowed(true)
                .not_found_service(not_found.into_service()),
        ),
        None => app.fallback(not_found),
    };
    app.layer(DefaultBodyLimit::max(state.config.body_limit()))
        .layer(CatchPanicLayer::custom(|_panic: Box<dyn std::any::Any + Send>| {
            ApiError::new(ErrorCode::Internal, "internal server error").into_response()
        }))
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such resource")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(ErrorCode::MethodNotAllowed, "method not allowed on this resource")
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

/// JSON body whose rejections use the API error format.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| {
            if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
                ApiError::new(ErrorCode::TooLarge, "request body too large")
            } else {
                ApiError::new(ErrorCode::BadRequest, e.body_text())
            }
        })?;
        serde_json::from_slice(&bytes)
            .map(ApiJson)
            .map_err(|e| ApiError::new(ErrorCode::BadRequest, format!("invalid JSON body: {e}")))
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError::new(ErrorCode::BadRequest, message)
}

fn meta_error(e: MetaError) -> ApiError {
    match e {
        MetaError::UsernameTaken => ApiError::new(ErrorCode::UsernameTaken, e.to_string()),
        MetaError::InvalidCredentials => ApiError::new(ErrorCode::InvalidCredentials, e.to_string()),
        MetaError::Invalid(m) => ApiError::new(ErrorCode::InvalidArgument, m),
        MetaError::Db(m) => ApiError::internal(m),
    }
}

/// The caller's account. A malformed or unknown token is rejected even on
/// routes that allow anonymous use.
fn caller(state: &AppState, headers: &HeaderMap) -> ApiResult<Option<Account>> {
    let Some(value) = headers.get(header::AUTHORIZATION) else {
        return Ok(None);
    };
    let token = value
        .to_str()
        .ok()
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| ApiError::new(ErrorCode::Unauthenticated, "expected a bearer token"))?;
    match state.meta.authenticate(token).map_err(meta_error)? {
        Some(account) => Ok(Some(account)),
        None => Err(ApiError::new(ErrorCode::Unauthenticated, "unknown or revoked token")),
    }
}

fn require_account(state: &AppState, headers: &HeaderMap) -> ApiResult<Account> {
    caller(state, headers)?
        .ok_or_else(|| ApiError::new(ErrorCode::Unauthenticated, "sign in required"))
}

fn parse_mode(mode: &str) -> ApiResult<GalleryMode> {
    mode.parse()
        .map_err(|_| ApiError::new(ErrorCode::UnknownMode, format!("unknown gallery mode {mode:?}")))
}

fn check_k(state: &AppState, k: Option<usize>) -> ApiResult<usize> {
    let k = k.unwrap_or(state.config.default_k);
    if k == 0 || k > state.config.max_k {
        return Err(ApiError::new(
            ErrorCode::InvalidArgument,
            format!("k must be between 1 and {}", state.config.max_k),
        ));
    }
    Ok(k)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, MetaError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(ApiError::internal)?
        .map_err(meta_error)
}

// ---- accounts

#[derive(Debug, Deserialize)]
pub struct RegisterRequest {
    pub username: String,
    pub password: String,
    #[serde(default)]
    pub display_name: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct LoginRequest {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AccountResponse {
    pub account_id: String,
    pub display_name: String,
    pub album_gallery_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

impl AccountResponse {
    fn new(a: &Account, token: Option<String>) -> Self {
        Self {
            account_id: a.account_id.clone(),
            display_name: a.display_name.clone(),
            album_gallery_id: a.album_gallery_id.clone(),
            token,
        }
    }
}

async fn register(
    State(state): State<AppStateRef>,
    ApiJson(req): ApiJson<RegisterRequest>,
) -> ApiResult<(StatusCode, Json<AccountResponse>)> {
    let s = state.clone();
    let account = blocking(move || {
        s.meta
            .register(&req.username, &req.password, req.display_name.as_deref())
    })
    .await?;
    Ok((StatusCode::CREATED, Json(AccountResponse::new(&account, None))))
}

async fn login(
    State(state): State<AppStateRef>,
    ApiJson(req): ApiJson<LoginRequest>,
) -> ApiResult<Json<AccountResponse>> {
    let s = state.clone();
    let (account, token) = blocking(move || s.meta.login(&req.username, &req.password)).await?;
    Ok(Json(AccountResponse::new(&account, Some(token))))
}

// ---- retrieval

#[derive(Debug, Deserialize)]
pub struct TextSearchRequest {
    pub query: String,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub k: Option<usize>,
}

fn default_mode() -> String {
    GalleryMode::Boon.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub item_id: String,
    pub uri: Option<String>,
    pub score: f32,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// False for web results whose thumbnail could not be scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scored: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TextSearchResponse {
    pub mode: GalleryMode,
    pub query: NormalizedQuery,
    pub results: Vec<SearchHit>,
}

fn ranked_hits(results: Vec<RankedResult>, uri: impl Fn(&str) -> Option<String>) -> Vec<SearchHit> {
    results
        .into_iter()
        .map(|r| SearchHit {
            uri: uri(&r.item_id),
            item_id: r.item_id,
            score: r.score,
            rank: r.rank,
            title: None,
            scored: None,
        })
        .collect()
}

fn web_hits(results: Vec<WebHit>, k: usize) -> Vec<SearchHit> {
    results
        .into_iter()
        .take(k)
        .map(|h| SearchHit {
            item_id: h.image_uri.clone(),
            uri: Some(h.image_uri),
            score: h.score,
            rank: h.rank,
            title: Some(h.title),
            scored: Some(h.scored),
        })
        .collect()
}

async fn search_text(
    State(state): State<AppStateRef>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<TextSearchRequest>,
) -> ApiResult<Json<TextSearchResponse>> {
    let mode = parse_mode(&req.mode)?;
    let account = caller(&state, &headers)?;
    let k = check_k(&state, req.k)?;
    if req.query.trim().is_empty() {
        return Err(ApiError::new(ErrorCode::EmptyQuery, "query is empty"));
    }
    let center = &state.center;
    let (query, results) = match mode {
        GalleryMode::Album => {
            let account =
                account.ok_or_else(|| ApiError::new(ErrorCode::Unauthenticated, "sign in required"))?;
            let album = state.album(&account)?;
            let (q, ranked) = center.text_to_image(&req.query, Scope::Album(&album), k).await?;
            let snapshot = album.snapshot();
            (q, ranked_hits(ranked, |id| snapshot.get(id).map(|i| i.uri.clone())))
        }
        GalleryMode::Boon => {
            let (q, ranked) = center.text_to_image(&req.query, Scope::Boon, k).await?;
            let store = state.boon().cloned();
            let uri = |id: &str| {
                let raw = store.as_ref()?.image(id)?.uri.clone();
                crate::state::boon_uri(raw.as_deref())
            };
            (q, ranked_hits(ranked, uri))
        }
        GalleryMode::Google => {
            let (q, hits) = center.google_mode_search(&req.query).await?;
            (q, web_hits(hits, k))
        }
    };
    Ok(Json(TextSearchResponse {
        mode,
        query,
        results,
    }))
}

/// Read one multipart field, enforcing the per-image size cap.
async fn read_capped(
    mut field: axum::extract::multipart::Field<'_>,
    cap: usize,
) -> ApiResult<Vec<u8>> {
    let mut out = Vec::new();
    while let Some(chunk) = field.chunk().await.map_err(multipart_error)? {
        if out.len() + chunk.len() > cap {
            return Err(ApiError::new(
                ErrorCode::TooLarge,
                format!("image exceeds {cap} bytes"),
            ));
        }
        out.extend_from_slice(&chunk);
    }
    Ok(out)
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(ErrorCode::TooLarge, "request body too large")
    } else {
        bad_request(format!("malformed multipart body: {}", e.body_text()))
    }
}

/// Multipart form: image files plus text fields.
struct Form {
    images: Vec<Vec<u8>>,
    fields: HashMap<String, String>,
}

async fn read_form(
    multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>,
    state: &AppState,
) -> ApiResult<Form> {
    let mut multipart =
        multipart.map_err(|e| bad_request(format!("expected multipart/form-data: {}", e.body_text())))?;
    let mut form = Form {
        images: Vec::new(),
        fields: HashMap::new(),
    };
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        let name = field.name().unwrap_or_default().to_string();
        if name == "image" || name == "images" || field.file_name().is_some() {
            if form.images.len() == state.config.max_request_images {
                return Err(ApiError::new(
                    ErrorCode::InvalidArgument,
                    format!("at most {} images per request", state.config.max_request_images),
                ));
            }
            form.images
                .push(read_capped(field, state.config.max_upload_bytes).await?);
        } else {
            let value = read_capped(field, 4096).await.map_err(|e| match e.code {
                ErrorCode::TooLarge => bad_request(format!("form field {name:?} too long")),
                _ => e,
            })?;
            let value = String::from_utf8(value)
                .map_err(|_| bad_request(format!("form field {name:?} is not UTF-8")))?;
            form.fields.insert(name, value);
        }
    }
    Ok(form)
}

impl Form {
    fn k(&self, state: &AppState) -> ApiResult<usize> {
        let k = match self.fields.get("k") {
            Some(v) => Some(v.trim().parse().map_err(|_| {
                ApiError::new(ErrorCode::InvalidArgument, "k must be a positive integer")
            })?),
            None => None,
        };
        check_k(state, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionRow {
    pub description_id: String,
    pub text: String,
    pub image_id: String,
    pub image_uri: Option<String>,
    pub score: f32,
    pub rank: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImageSearchResponse {
    pub mode: GalleryMode,
    pub results: Vec<DescriptionRow>,
}

async fn search_image(
    State(state): State<AppStateRef>,
    headers: HeaderMap,
    multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>,
) -> ApiResult<Json<ImageSearchResponse>> {
    let account = caller(&state, &headers)?;
    let form = read_form(multipart, &state).await?;
    let mode = parse_mode(form.fields.get("mode").map_or("boon", String::as_str))?;
    let k = form.k(&state)?;
    let image = match form.images.as_slice() {
        [one] => one,
        [] => return Err(bad_request("missing image field")),
        _ => return Err(ApiError::new(ErrorCode::InvalidArgument, "exactly one image expected")),
    };
    let hits = match mode {
        GalleryMode::Album => {
            let account =
                account.ok_or_else(|| ApiError::new(ErrorCode::Unauthenticated, "sign in required"))?;
            let album = state.album(&account)?;
            state.center.image_to_text(image, Scope::Album(&album), k).await?
        }
        GalleryMode::Boon => state.center.image_to_text(image, Scope::Boon, k).await?,
        GalleryMode::Google => state.center.image_to_text(image, Scope::Google, k).await?,
    };
    let results = hits
        .into_iter()
        .map(|h| DescriptionRow {
            description_id: h.description_id,
            text: h.text,
            image_id: h.image_id,
            image_uri: crate::state::boon_uri(h.image_uri.as_deref()),
            score: h.score,
            rank: h.rank,
        })
        .collect();
    Ok(Json(ImageSearchResponse { mode, results }))
}

// ---- conversation

#[derive(Debug, Deserialize)]
pub struct ChatRequest {
    #[serde(default)]
    pub session_id: Option<String>,
    pub text: String,
    /// Base64-encoded image payloads, optionally as data URLs.
    #[serde(default)]
    pub images: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChatResponse {
    pub session_id: String,
    pub reply: String,
    pub attached_descriptions: Vec<String>,
}

fn decode_image(encoded: &str, cap: usize) -> ApiResult<Vec<u8>> {
    let data = match encoded.split_once(";base64,") {
        Some((prefix, rest)) if prefix.starts_with("data:") => rest,
        _ => encoded,
    };
    let compact: String = data.chars().filter(|c| !c.is_ascii_whitespace()).collect();
    if compact.len() / 4 * 3 > cap + 3 {
        return Err(ApiError::new(ErrorCode::TooLarge, format!("image exceeds {cap} bytes")));
    }
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(compact.as_bytes())
        .map_err(|e| bad_request(format!("image is not valid base64: {e}")))?;
    if bytes.len() > cap {
        return Err(ApiError::new(ErrorCode::TooLarge, format!("image exceeds {cap} bytes")));
    }
    Ok(bytes)
}

async fn chat(
    State(state): State<AppStateRef>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<ChatRequest>,
) -> ApiResult<Json<ChatResponse>> {
    let owner = caller(&state, &headers)?.map(|a| a.account_id);
    if req.images.len() > state.config.max_request_images {
        return Err(ApiError::new(
            ErrorCode::InvalidArgument,
            format!("at most {} images per request", state.config.max_request_images),
        ));
    }
    let images = req
        .images
        .iter()
        .map(|i| decode_image(i, state.config.max_upload_bytes))
        .collect::<ApiResult<Vec<_>>>()?;
    if req.text.trim().is_empty() {
        return Err(ApiError::new(ErrorCode::EmptyText, "text is empty"));
    }

    let session_id = req
        .session_id
        .clone()
        .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    let lock = state.session_lock(&session_id);
    let _guard = lock.lock().await;
    let mut stored = match &req.session_id {
        Some(id) => {
            let unknown = || ApiError::new(ErrorCode::UnknownSession, format!("no session {id:?}"));
            let s = state.meta.load_session(id).map_err(meta_error)?.ok_or_else(unknown)?;
            if s.owner != owner {
                return Err(unknown());
            }
            s
        }
        None => StoredSession {
            owner,
            session: ChatSession::new(session_id.clone()),
        },
    };
    let mut session = stored.session.clone();
    let reply = state.center.chat_turn(&mut session, &req.text, &images).await?;
    stored.session = session;
    state.meta.save_session(&stored).map_err(meta_error)?;
    Ok(Json(ChatResponse {
        session_id,
        reply: reply.reply,
        attached_descriptions: reply.attached_descriptions,
    }))
}

// ---- albums and galleries

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadResponse {
    pub item_ids: Vec<String>,
}

fn extension(format: ImageFormat) -> &'static str {
    match format {
        ImageFormat::Png => "png",
        ImageFormat::Jpeg => "jpg",
    }
}

async fn album_upload(
    State(state): State<AppStateRef>,
    headers: HeaderMap,
    multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>,
) -> ApiResult<Json<UploadResponse>> {
    let account = require_account(&state, &headers)?;
    let form = read_form(multipart, &state).await?;
    if form.images.is_empty() {
        return Err(bad_request("no image fields in upload"));
    }
    let formats = form
        .images
        .iter()
        .map(|i| sniff_image(i))
        .collect::<Result<Vec<_>, _>>()?;
    let album = state.album(&account)?;
    if album.len() + form.images.len() > album.capacity() {
        return Err(ApiError::new(
            ErrorCode::CapacityExceeded,
            format!(
                "album holds {} of {} images; {} more do not fit",
                album.len(),
                album.capacity(),
                form.images.len()
            ),
        ));
    }
    let payloads = state.payload_dir(&account);
    tokio::fs::create_dir_all(&payloads)
        .await
        .map_err(ApiError::internal)?;
    let encoder = &state.center.providers().encoder;
    let mut item_ids = Vec::with_capacity(form.images.len());
    for (bytes, format) in form.images.iter().zip(formats) {
        let repr = encoder.encode(EncoderInput::Image(bytes)).await?;
        let file = format!("{}.{}", uuid::Uuid::new_v4().simple(), extension(format));
        let path = payloads.join(&file);
        tokio::fs::write(&path, bytes).await.map_err(ApiError::internal)?;
        match album.ingest(&format!("/media/album/{file}"), repr, Vec::new()) {
            Ok(id) => item_ids.push(id),
            Err(e) => {
                let _ = tokio::fs::remove_file(&path).await;
                return Err(e.into());
            }
        }
    }
    Ok(Json(UploadResponse { item_ids }))
}

async fn album_media(
    State(state): State<AppStateRef>,
    headers: HeaderMap,
    file: Result<Path<String>, PathRejection>,
) -> ApiResult<Response> {
    let account = require_account(&state, &headers)?;
    let Path(file) = file.map_err(|e| bad_request(e.body_text()))?;
    let valid = !file.starts_with('.')
        && file
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_');
    let not_found = || ApiError::new(ErrorCode::NotFound, "no such payload");
    if !valid {
        return Err(not_found());
    }
    let bytes = tokio::fs::read(state.payload_dir(&account).join(&file))
        .await
        .map_err(|_| not_found())?;
    let content_type = sniff_image(&bytes)
        .map(|f| f.content_type())
        .unwrap_or("application/octet-stream");
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryItem {
    pub item_id: String,
    pub uri: Option<String>,
    #[serde(default)]
    pub descriptions: Vec<GalleryDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryDescription {
    pub description_id: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GalleryPage {
    pub mode: GalleryMode,
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
    pub items: Vec<GalleryItem>,
}

impl From<&ListedImage> for GalleryItem {
    fn from(l: &ListedImage) -> Self {
        Self {
            item_id: l.item_id.clone(),
            uri: l.uri.clone(),
            descriptions: l
                .descriptions
                .iter()
                .map(|d| GalleryDescription {
                    description_id: d.description_id.clone(),
                    text: d.text.clone(),
                })
                .collect(),
        }
    }
}

fn parse_usize(params: &HashMap<String, String>, key: &str) -> ApiResult<Option<usize>> {
    params
        .get(key)
        .map(|v| {
            v.trim().parse().map_err(|_| {
                ApiError::new(ErrorCode::InvalidArgument, format!("{key} must be a non-negative integer"))
            })
        })
        .transpose()
}

/// Zero-based pages of items in ascending item id order.
async fn gallery_items(
    State(state): State<AppStateRef>,
    headers: HeaderMap,
    mode: Result<Path<String>, PathRejection>,
    params: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult<Json<GalleryPage>> {
    let Path(mode) = mode.map_err(|e| bad_request(e.body_text()))?;
    let mode = parse_mode(&mode)?;
    let Query(params) = params.map_err(|e| bad_request(e.body_text()))?;
    let page = parse_usize(&params, "page")?.unwrap_or(0);
    let page_size = parse_usize(&params, "page_size")?.unwrap_or(state.config.page_size);
    if page_size == 0 || page_size > state.config.max_page_size {
        return Err(ApiError::new(
            ErrorCode::InvalidArgument,
            format!("page_size must be between 1 and {}", state.config.max_page_size),
        ));
    }
    let start = page.saturating_mul(page_size);
    let (total, items): (usize, Vec<GalleryItem>) = match mode {
        GalleryMode::Album => {
            let account = require_account(&state, &headers)?;
            let snapshot = state.album(&account)?.snapshot();
            let all = snapshot.items();
            let items = all
                .iter()
                .skip(start)
                .take(page_size)
                .map(|i| GalleryItem {
                    item_id: i.id.clone(),
                    uri: Some(i.uri.clone()),
                    descriptions: Vec::new(),
                })
                .collect();
            (all.len(), items)
        }
        GalleryMode::Boon => {
            caller(&state, &headers)?;
            let all = state.boon_listing();
            (all.len(), all.iter().skip(start).take(page_size).map(GalleryItem::from).collect())
        }
        GalleryMode::Google => {
            return Err(ApiError::new(
                ErrorCode::ModeNotSupported,
                "web results are not stored as a gallery",
            ))
        }
    };
    Ok(Json(GalleryPage {
        mode,
        page,
        page_size,
        total,
        items,
    }))
}
