//! The closed set of API errors and their HTTP mapping.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use crossmodal_core::center::CenterError;
use crossmodal_core::providers::ProviderError;
use crossmodal_core::{SimilarityError, StoreError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    EmptyQuery,
    EmptyText,
    InvalidArgument,
    UnsupportedPayload,
    ModeNotSupported,
    Unauthenticated,
    InvalidCredentials,
    NotFound,
    UnknownMode,
    UnknownSession,
    NoResults,
    MethodNotAllowed,
    UsernameTaken,
    CapacityExceeded,
    EmptyGallery,
    TooLarge,
    QuotaExceeded,
    ProviderUnavailable,
    ProviderRejected,
    ProviderMalformedResponse,
    EmptyPool,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 23] = [
        Self::BadRequest,
        Self::EmptyQuery,
        Self::EmptyText,
        Self::InvalidArgument,
        Self::UnsupportedPayload,
        Self::ModeNotSupported,
        Self::Unauthenticated,
        Self::InvalidCredentials,
        Self::NotFound,
        Self::UnknownMode,
        Self::UnknownSession,
        Self::NoResults,
        Self::MethodNotAllowed,
        Self::UsernameTaken,
        Self::CapacityExceeded,
        Self::EmptyGallery,
        Self::TooLarge,
        Self::QuotaExceeded,
        Self::ProviderUnavailable,
        Self::ProviderRejected,
        Self::ProviderMalformedResponse,
        Self::EmptyPool,
        Self::Internal,
    ];

    pub fn status(self) -> StatusCode {
        use ErrorCode::*;
        match self {
            BadRequest | EmptyQuery | EmptyText | InvalidArgument | UnsupportedPayload
            | ModeNotSupported => StatusCode::BAD_REQUEST,
            Unauthenticated | InvalidCredentials => StatusCode::UNAUTHORIZED,
            NotFound | UnknownMode | UnknownSession | NoResults => StatusCode::NOT_FOUND,
            MethodNotAllowed => StatusCode::METHOD_NOT_ALLOWED,
            UsernameTaken | CapacityExceeded | EmptyGallery => StatusCode::CONFLICT,
            TooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            QuotaExceeded => StatusCode::TOO_MANY_REQUESTS,
            ProviderUnavailable | ProviderRejected | ProviderMalformedResponse => {
                StatusCode::BAD_GATEWAY
            }
            EmptyPool => StatusCode::SERVICE_UNAVAILABLE,
            Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn as_str(self) -> &'static str {
        use ErrorCode::*;
        match self {
            BadRequest => "bad_request",
            EmptyQuery => "empty_query",
            EmptyText => "empty_text",
            InvalidArgument => "invalid_argument",
            UnsupportedPayload => "unsupported_payload",
            ModeNotSupported => "mode_not_supported",
            Unauthenticated => "unauthenticated",
            InvalidCredentials => "invalid_credentials",
            NotFound => "not_found",
            UnknownMode => "unknown_mode",
            UnknownSession => "unknown_session",
            NoResults => "no_results",
            MethodNotAllowed => "method_not_allowed",
            UsernameTaken => "username_taken",
            CapacityExceeded => "capacity_exceeded",
            EmptyGallery => "empty_gallery",
            TooLarge => "too_large",
            QuotaExceeded => "quota_exceeded",
            ProviderUnavailable => "provider_unavailable",
            ProviderRejected => "provider_rejected",
            ProviderMalformedResponse => "provider_malformed_response",
            EmptyPool => "empty_pool",
            Internal => "internal",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == code)
    }
}

/// Error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        self.code.status()
    }

    pub fn internal(message: impl std::fmt::Display) -> Self {
        tracing::error!(%message, "internal error");
        Self::new(ErrorCode::Internal, "internal server error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code,
                message: self.message,
            },
        };
        (self.code.status(), Json(body)).into_response()
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        let code = match &e {
            ProviderError::ProviderUnavailable(_) => ErrorCode::ProviderUnavailable,
            ProviderError::ProviderRejected { .. } => ErrorCode::ProviderRejected,
            ProviderError::MalformedResponse(_) => ErrorCode::ProviderMalformedResponse,
            ProviderError::QuotaExceeded(_) => ErrorCode::QuotaExceeded,
            ProviderError::UnsupportedPayload(_) => ErrorCode::UnsupportedPayload,
            ProviderError::EmptyText => ErrorCode::EmptyText,
            ProviderError::InvalidRequest(_) => ErrorCode::InvalidArgument,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SimilarityError> for ApiError {
    fn from(e: SimilarityError) -> Self {
        match e {
            SimilarityError::InvalidK => Self::new(ErrorCode::InvalidArgument, e.to_string()),
            other => Self::internal(other),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::CapacityExceeded { .. } => {
                Self::new(ErrorCode::CapacityExceeded, e.to_string())
            }
            StoreError::UnknownItem(_) => Self::new(ErrorCode::NotFound, e.to_string()),
            other => Self::internal(other),
        }
    }
}

impl From<CenterError> for ApiError {
    fn from(e: CenterError) -> Self {
        match e {
            CenterError::EmptyText => Self::new(ErrorCode::EmptyText, e.to_string()),
            CenterError::EmptyGallery => Self::new(ErrorCode::EmptyGallery, e.to_string()),
            CenterError::EmptyPool => Self::new(ErrorCode::EmptyPool, e.to_string()),
            CenterError::NoResults => Self::new(ErrorCode::NoResults, e.to_string()),
            CenterError::ModeNotSupported(_) => {
                Self::new(ErrorCode::ModeNotSupported, e.to_string())
            }
            CenterError::Provider(p) => p.into(),
            CenterError::Similarity(s) => s.into(),
            CenterError::Store(s) => s.into(),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
