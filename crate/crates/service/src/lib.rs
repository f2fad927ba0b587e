//! HTTP service over procedurally generated worlds: world listing, patch
//! sampling, costmap inference and planning.

pub mod app;
pub mod registry;
pub mod scenario;
pub mod wire;

pub use app::{router, AppState, LoadedModel};
pub use registry::WorldRegistry;
pub use scenario::{plan_scenario, PlanOutcome, PlanSettings};
pub use wire::ContextWire;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

/// Serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state), static_dir)).await
}
