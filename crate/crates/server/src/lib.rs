//! HTTP service: accounts, galleries, retrieval and grounded chat over the
//! cross-modal retrieval engine.

pub mod config;
pub mod error;
pub mod meta;
pub mod routes;
pub mod state;

use std::future::Future;
use std::sync::Arc;

pub use config::{ConfigError, ProviderKind, ServerConfig};
pub use error::{ApiError, ErrorBody, ErrorCode};
pub use routes::router;
pub use state::{AppState, StartupError};

/// Serve until `shutdown` resolves, then drain in-flight requests.
pub async fn serve(
    state: Arc<AppState>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}
