//! JSON search API over a built artifact directory.
//!
//! Routes: `/search`, `/bio-api/replacements`, `/bio-api/drugs`,
//! `/bio-api/diseases`, `/bio-api/disease-neighbors`, `POST /kg/query` and
//! `/healthz`. Errors are `{"error": code, "message": text}`.

mod api;
pub mod layout;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::{router, ApiError, DEFAULT_K, DEFAULT_LIMIT, MAX_LIMIT};
pub use layout::Layout;
pub use state::{AppState, CoMentions, LoadError};

/// JSON Schemas for every response body, keyed by route.
pub const SCHEMAS: &[(&str, &str)] = &[
    ("/search", include_str!("../schemas/search.json")),
    ("/bio-api/replacements", include_str!("../schemas/drug-list.json")),
    ("/bio-api/drugs", include_str!("../schemas/drug-list.json")),
    ("/bio-api/diseases", include_str!("../schemas/disease-list.json")),
    ("/bio-api/disease-neighbors", include_str!("../schemas/disease-neighbors.json")),
    ("/kg/query", include_str!("../schemas/query-result.json")),
    ("/healthz", include_str!("../schemas/health.json")),
    ("error", include_str!("../schemas/error.json")),
];

pub fn schema(route: &str) -> Option<&'static str> {
    SCHEMAS.iter().find(|(r, _)| *r == route).map(|(_, s)| *s)
}

/// Serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state))).await
}
