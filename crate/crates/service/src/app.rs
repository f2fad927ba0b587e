use crate::registry::WorldRegistry;
use crate::scenario::{plan_scenario, PlanSettings, ScenarioError};
use crate::wire::{encode_patch, ContextWire};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use pacer::data::{build_patch_bank, DataError, Patch, PreferenceContext};
use pacer::model::{forward, load_checkpoint, ModelParams, NetworkSpec};
use pacer::world::{encode_gray_png, Pose, TerrainWorld};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use tower_http::services::ServeDir;

/// Most patches one gallery request may ask for.
pub const MAX_PATCHES: usize = 256;
pub const DEFAULT_PATCHES: usize = 8;

pub struct LoadedModel {
    pub params: ModelParams,
    pub checkpoint: String,
}

impl LoadedModel {
    pub fn load(path: &Path) -> Result<Self, pacer::model::ModelError> {
        Ok(Self {
            params: load_checkpoint(path, &NetworkSpec::default())?,
            checkpoint: path.display().to_string(),
        })
    }

    fn spec_hash(&self) -> String {
        format!("{:016x}", self.params.spec.hash())
    }
}

#[derive(Default, Serialize)]
pub struct Counters {
    pub worlds: AtomicU64,
    pub patches: AtomicU64,
    pub costmap: AtomicU64,
    pub plan: AtomicU64,
    pub reload: AtomicU64,
}

fn bump(c: &AtomicU64) {
    c.fetch_add(1, Ordering::Relaxed);
}

/// Worlds and counters live for the whole process; the model is swapped
/// whole by the reload endpoint.
pub struct AppState {
    pub worlds: WorldRegistry,
    model: RwLock<Option<Arc<LoadedModel>>>,
    pub counters: Counters,
}

impl AppState {
    pub fn new(worlds: WorldRegistry, model: Option<LoadedModel>) -> Self {
        Self {
            worlds,
            model: RwLock::new(model.map(Arc::new)),
            counters: Counters::default(),
        }
    }

    pub fn model(&self) -> Option<Arc<LoadedModel>> {
        self.model.read().expect("model lock").clone()
    }

    pub fn swap_model(&self, model: LoadedModel) -> Option<Arc<LoadedModel>> {
        self.model.write().expect("model lock").replace(Arc::new(model))
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(message: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::OutOfBounds { .. } | ScenarioError::Eval(_) => Self::bad_request(e.to_string()),
            ScenarioError::Plan(pacer::plan::PlanError::Config(_)) => Self::bad_request(e.to_string()),
            _ => Self::internal(e),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/worlds", get(list_worlds))
        .route("/api/worlds/{id}/patches", get(patches))
        .route("/api/costmap", post(costmap))
        .route("/api/plan", post(plan))
        .route("/api/status", get(status))
        .route("/api/admin/reload", post(reload))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder)),
    }
}

async fn placeholder() -> Html<&'static str> {
    Html("<!doctype html><title>pacer</title><p>No UI assets configured. The JSON API is under <code>/api</code>.</p>\n")
}

fn world<'a>(state: &'a AppState, id: &str) -> ApiResult<&'a TerrainWorld> {
    state
        .worlds
        .get(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown world {id:?}")))
}

fn loaded(state: &AppState) -> ApiResult<Arc<LoadedModel>> {
    state
        .model()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no checkpoint loaded"))
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

fn context(model: &LoadedModel, wire: &ContextWire) -> ApiResult<PreferenceContext> {
    let spec = &model.params.spec;
    wire.decode(spec.n, spec.patch_size)
        .map_err(|e| ApiError::bad_request(format!("context: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn list_worlds(State(state): State<Arc<AppState>>) -> Json<Value> {
    bump(&state.counters.worlds);
    Json(json!(state.worlds.summaries()))
}

fn query_number<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str, default: Option<T>) -> ApiResult<T> {
    match q.get(key) {
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_request(format!("{key}: {v:?} is not a valid value"))),
        None => default.ok_or_else(|| ApiError::bad_request(format!("{key} is required"))),
    }
}

async fn patches(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    bump(&state.counters.patches);
    let w = world(&state, &id)?;
    let label: u8 = query_number(&q, "label", None)?;
    let count: usize = query_number(&q, "count", Some(DEFAULT_PATCHES))?;
    let seed: u64 = query_number(&q, "seed", Some(0))?;
    if label as usize >= w.num_labels() {
        return Err(ApiError::bad_request(format!("label {label} ≥ L = {}", w.num_labels())));
    }
    if count > MAX_PATCHES {
        return Err(ApiError::bad_request(format!("count {count} > {MAX_PATCHES}")));
    }
    let size = NetworkSpec::default().patch_size;
    let bank = gallery(w, label, count, size, seed).map_err(ApiError::internal)?;
    let patches: Vec<Value> = bank
        .iter()
        .map(|p| json!({ "png": encode_patch(p), "origin": p.origin }))
        .collect();
    Ok(Json(json!({
        "world_id": id,
        "label": label,
        "count": count,
        "seed": seed,
        "patch_size": size,
        "patches": patches,
    })))
}

/// `count` patches, from the label's clean windows in the world first,
/// topped up from the label's texture drawn alone.
pub fn gallery(world: &TerrainWorld, label: u8, count: usize, size: usize, seed: u64) -> Result<Vec<Patch>, DataError> {
    if count == 0 {
        return Ok(vec![]);
    }
    let mut out = match build_patch_bank(world, label, count, size, seed) {
        Ok(b) => b.patches,
        Err(DataError::NoCandidates { .. }) => vec![],
        Err(e) => return Err(e),
    };
    if out.len() < count {
        let side = 4 * size;
        let pure = TerrainWorld::from_grid(world.seed(), side, side, world.num_labels(), vec![label; side * side], world.textures().to_vec())?;
        let extra = build_patch_bank(&pure, label, count - out.len(), size, seed)?;
        out.extend(extra.patches.into_iter().map(|p| Patch { origin: None, ..p }));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct CostmapRequest {
    world_id: String,
    pose: Pose,
    context: ContextWire,
}

async fn costmap(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Value>> {
    bump(&state.counters.costmap);
    let req: CostmapRequest = parse(&body)?;
    let w = world(&state, &req.world_id)?.clone();
    let model = loaded(&state)?;
    let ctx = context(&model, &req.context)?;
    if !(req.pose.x.is_finite() && req.pose.y.is_finite() && req.pose.theta.is_finite()) {
        return Err(ApiError::bad_request("pose must be finite"));
    }
    blocking(move || {
        let size = model.params.spec.image_size;
        let image = w.observe(&req.pose, size, size);
        let cm = forward(&model.params, &image, &ctx).map_err(ApiError::internal)?;
        let png = encode_gray_png(cm.width, cm.height, &cm.values);
        let n = cm.values.len() as f64;
        let min = cm.values.iter().copied().fold(f32::INFINITY, f32::min);
        let max = cm.values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mean = cm.values.iter().map(|&v| v as f64).sum::<f64>() / n;
        Ok(Json(json!({
            "costmap": STANDARD.encode(png),
            "width": cm.width,
            "height": cm.height,
            "stats": { "min": min, "max": max, "mean": mean },
            "replay": {
                "world_id": req.world_id,
                "world_seed": w.seed(),
                "pose": req.pose,
                "checkpoint": model.checkpoint,
                "spec_hash": model.spec_hash(),
            },
        })))
    })
    .await
}

#[derive(Deserialize)]
struct PlanRequest {
    world_id: String,
    context: ContextWire,
    #[serde(flatten)]
    settings: PlanSettings,
}

/// CLI invocation that reproduces a plan, given the world file, the
/// checkpoint and the request's context saved as `ctx.json`.
pub fn replay_command(world_id: &str, checkpoint: &str, s: &PlanSettings) -> String {
    let mut cmd = format!(
        "pacer plan --world {world_id}.json --checkpoint {checkpoint} --context ctx.json --start {},{} --goal {},{} --lambda {} --tile-stride {}",
        s.start[0], s.start[1], s.goal[0], s.goal[1], s.lambda, s.tile_stride
    );
    if let Some(o) = &s.ordering {
        let labels: Vec<String> = o.order().iter().map(|l| l.to_string()).collect();
        cmd += &format!(" --ordering {}", labels.join(","));
    }
    cmd + " --out path.json"
}

async fn plan(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Value>> {
    bump(&state.counters.plan);
    let req: PlanRequest = parse(&body)?;
    let w = world(&state, &req.world_id)?.clone();
    req.settings.validate(&w)?;
    let model = loaded(&state)?;
    let ctx = context(&model, &req.context)?;
    blocking(move || {
        let (outcome, field) = plan_scenario(&w, &model.params, &ctx, &req.settings)?;
        Ok(Json(json!({
            "path": outcome.cells,
            "total_cost": outcome.total_cost,
            "tier_report": outcome.tier_breakdown,
            "field_png": STANDARD.encode(encode_gray_png(field.width, field.height, &field.values)),
            "replay": {
                "world_id": req.world_id,
                "world_seed": w.seed(),
                "settings": req.settings,
                "checkpoint": model.checkpoint,
                "spec_hash": model.spec_hash(),
                "command": replay_command(&req.world_id, &model.checkpoint, &req.settings),
            },
        })))
    })
    .await
}

async fn status(State(state): State<Arc<AppState>>) -> Json<Value> {
    let model = state.model();
    Json(json!({
        "checkpoint": model.as_ref().map(|m| m.checkpoint.clone()),
        "spec_hash": model.as_ref().map(|m| m.spec_hash()),
        "worlds": state.worlds.len(),
        "requests": state.counters,
    }))
}

#[derive(Deserialize)]
struct ReloadRequest {
    checkpoint: Option<PathBuf>,
}

async fn reload(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Value>> {
    bump(&state.counters.reload);
    let req: ReloadRequest = if body.is_empty() { ReloadRequest { checkpoint: None } } else { parse(&body)? };
    let path = match (req.checkpoint, state.model()) {
        (Some(p), _) => p,
        (None, Some(m)) => PathBuf::from(&m.checkpoint),
        (None, None) => return Err(ApiError::bad_request("no checkpoint given and none loaded")),
    };
    let model = blocking(move || {
        LoadedModel::load(&path).map_err(|e| ApiError::bad_request(format!("{}: {e}", path.display())))
    })
    .await?;
    let body = json!({ "checkpoint": model.checkpoint, "spec_hash": model.spec_hash() });
    state.swap_model(model);
    Ok(Json(body))
}
