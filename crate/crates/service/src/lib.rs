//! JSON-over-HTTP API for interactive exploration of interaction networks.
//!
//! State is scoped by the `x-hina-session` request header (default
//! `default`). Every analysis response is cached per session by network id
//! and canonical parameters, so repeating a request returns the same bytes.

mod error;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use hina_core::ingest::ingest_with_report;
use hina_core::mdl::{project_cluster, ClusterResult, SearchOptions, SearchRegistry};
use hina_core::{metrics_table, prune, FixDeg, HinSpec, NullModelSpec, Table};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use state::{valid_session_id, AppState, Session};

pub const SESSION_HEADER: &str = "x-hina-session";
pub const DEFAULT_SESSION: &str = "default";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory for saving datasets and networks; in-memory only when unset.
    pub persist_dir: Option<PathBuf>,
    /// Built UI bundle served under `/`.
    pub static_dir: Option<PathBuf>,
    pub cluster_budget: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            persist_dir: None,
            static_dir: None,
            cluster_budget: Duration::from_secs(60),
        }
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/datasets", post(upload_dataset))
        .route("/hins", post(build_hin))
        .route("/hins/:id", get(get_hin))
        .route("/hins/:id/metrics", get(get_metrics))
        .route("/hins/:id/prune", post(post_prune))
        .route("/hins/:id/cluster", post(post_cluster))
        .route("/hins/:id/clusters/:r/projection", get(get_projection))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}

fn session(state: &AppState, headers: &HeaderMap) -> Result<Arc<Session>, ApiError> {
    let id = match headers.get(SESSION_HEADER) {
        None => DEFAULT_SESSION,
        Some(v) => v
            .to_str()
            .map_err(|_| ApiError::Malformed("session header is not ASCII".into()))?,
    };
    state.session(id)
}

fn json_body(body: Arc<String>) -> Response {
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "application/json")],
        body.as_str().to_owned(),
    )
        .into_response()
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::Malformed(e.to_string()))
}

fn malformed(rejection: impl std::fmt::Display) -> ApiError {
    ApiError::Malformed(rejection.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("response types serialize")
}

/// Returns the cached body for `key`, computing and storing it on a miss.
fn cached<F>(session: &Session, key: String, compute: F) -> Result<Response, ApiError>
where
    F: FnOnce() -> Result<String, ApiError>,
{
    if let Some(body) = session.cached(&key) {
        return Ok(json_body(body));
    }
    let body = compute()?;
    Ok(json_body(session.store(key, body)))
}

async fn healthz() -> &'static str {
    "ok"
}

#[derive(Deserialize)]
struct UploadQuery {
    delimiter: Option<String>,
}

async fn upload_dataset(
    State(state): State<Shared>,
    headers: HeaderMap,
    query: Result<Query<UploadQuery>, QueryRejection>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let Query(query) = query.map_err(malformed)?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::Malformed("upload is not UTF-8".into()))?;
    let delimiter = match query.delimiter.as_deref() {
        None => None,
        Some("tab" | "\t") => Some(b'\t'),
        Some("comma" | ",") => Some(b','),
        Some(d) if d.len() == 1 => Some(d.as_bytes()[0]),
        Some(d) => return Err(ApiError::Malformed(format!("unsupported delimiter {d:?}"))),
    };
    let table = Table::parse(text, delimiter)?;
    if table.headers.is_empty() {
        return Err(ApiError::Malformed("upload has no header row".into()));
    }
    let (rows, columns) = (table.rows.len(), table.headers.clone());
    let id = session.add_dataset(table)?;
    Ok(json_body(Arc::new(to_json(&json!({
        "dataset_id": id,
        "rows": rows,
        "columns": columns,
    })))))
}

#[derive(Deserialize)]
struct BuildRequest {
    dataset_id: String,
    #[serde(flatten)]
    spec: HinSpec,
}

async fn build_hin(
    State(state): State<Shared>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let request: BuildRequest = parse(&body)?;
    let table = session.dataset(&request.dataset_id)?;
    let (hin, report) = ingest_with_report(&table, &request.spec)?;
    let id = session.add_hin(hin)?;
    Ok(json_body(Arc::new(to_json(&json!({
        "hin_id": id,
        "ingest_report": report,
    })))))
}

async fn get_hin(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let hin = session.hin(&id)?;
    cached(&session, format!("{id}/graph"), || Ok(hin.to_json()))
}

#[derive(Deserialize)]
struct MetricsQuery {
    group_attr: Option<String>,
}

async fn get_metrics(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    query: Result<Query<MetricsQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let Query(query) = query.map_err(malformed)?;
    let hin = session.hin(&id)?;
    let group = query.group_attr.filter(|g| !g.is_empty());
    let key = format!("{id}/metrics/{}", to_json(&group));
    cached(&session, key, || {
        Ok(to_json(&metrics_table(&hin, group.as_deref())?))
    })
}

async fn post_prune(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let hin = session.hin(&id)?;
    let spec: NullModelSpec = parse(&body)?;
    let key = format!("{id}/prune/{}", to_json(&spec));
    cached(&session, key, || Ok(to_json(&prune(&hin, &spec)?)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ClusterRequest {
    method: String,
    seed: Option<u64>,
    restarts: usize,
    max_n1: usize,
}

impl Default for ClusterRequest {
    fn default() -> Self {
        let options = SearchOptions::default();
        Self {
            method: "greedy".into(),
            seed: options.seed,
            restarts: options.restarts,
            max_n1: options.max_n1,
        }
    }
}

/// Runs (or fetches) a clustering under the configured time budget. An
/// overrun answers 503 while the computation finishes in the background
/// and fills the cache for the retry.
async fn cluster_body(
    state: &AppState,
    session: Arc<Session>,
    id: &str,
    request: ClusterRequest,
) -> Result<Arc<String>, ApiError> {
    let hin = session.hin(id)?;
    let strategy = SearchRegistry::get(&request.method)?;
    let key = format!("{id}/cluster/{}", to_json(&request));
    if let Some(body) = session.cached(&key) {
        return Ok(body);
    }
    let options = SearchOptions {
        seed: request.seed,
        restarts: request.restarts.max(1),
        max_n1: request.max_n1,
    };
    let task = tokio::task::spawn_blocking(move || {
        let result = strategy.search(&hin, &options)?;
        Ok::<_, ApiError>(session.store(key, to_json(&result)))
    });
    let budget = state.config.cluster_budget;
    match tokio::time::timeout(budget, task).await {
        Ok(Ok(result)) => result,
        Ok(Err(join)) => Err(ApiError::Internal(join.to_string())),
        Err(_) => Err(ApiError::Busy {
            retry_after_secs: budget.as_secs().max(1),
        }),
    }
}

async fn post_cluster(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let request: ClusterRequest = parse(&body)?;
    Ok(json_body(cluster_body(&state, session, &id, request).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectionQuery {
    alpha: Option<f64>,
    fix_deg: Option<String>,
    bonferroni: Option<bool>,
    method: Option<String>,
    seed: Option<u64>,
    restarts: Option<usize>,
}

async fn get_projection(
    State(state): State<Shared>,
    headers: HeaderMap,
    path: Result<Path<(String, usize)>, PathRejection>,
    query: Result<Query<ProjectionQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let session = session(&state, &headers)?;
    let Path((id, r)) = path.map_err(malformed)?;
    let Query(query) = query.map_err(malformed)?;
    let hin = session.hin(&id)?;
    let fix_deg = match &query.fix_deg {
        None => FixDeg::None,
        Some(s) => s.parse::<FixDeg>()?,
    };
    let spec = NullModelSpec {
        fix_deg,
        alpha: query.alpha.unwrap_or(0.05),
        bonferroni: query.bonferroni.unwrap_or(false),
    };
    let defaults = ClusterRequest::default();
    let request = ClusterRequest {
        method: query.method.unwrap_or(defaults.method),
        seed: query.seed.or(defaults.seed),
        restarts: query.restarts.unwrap_or(defaults.restarts),
        max_n1: defaults.max_n1,
    };
    let key = format!("{id}/projection/{r}/{}/{}", to_json(&request), to_json(&spec));
    if let Some(body) = session.cached(&key) {
        return Ok(json_body(body));
    }
    let clustering: ClusterResult = serde_json::from_str(&cluster_body(&state, session.clone(), &id, request).await?)
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    cached(&session, key, || {
        let projection = project_cluster(&hin, &clustering.best_partition, r)?;
        let graph = projection.to_hin()?;
        let pruned = prune(&graph, &spec)?;
        Ok(to_json(&json!({
            "cluster_id": r,
            "projection": projection,
            "graph": graph,
            "prune": pruned,
        })))
    })
}
