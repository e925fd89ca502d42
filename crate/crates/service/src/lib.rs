//! HTTP + JSON authoring API over a [`SceneStore`].
//!
//! | method | path                              | body / query                      |
//! |--------|-----------------------------------|-----------------------------------|
//! | GET    | `/scenes`                         |                                   |
//! | POST   | `/scenes`                         | multipart (`csv`, `settings`, `title`) or `text/csv` |
//! | GET    | `/scenes/{id}`                    |                                   |
//! | PATCH  | `/scenes/{id}/settings`           | `{revision, settings?, canvas?}`  |
//! | PATCH  | `/scenes/{id}/cells`              | `{revision, item, period, value}` |
//! | POST   | `/scenes/{id}/specs`              | `{revision, spec}`                |
//! | PUT    | `/scenes/{id}/specs/{sid}`        | `{revision, spec}`                |
//! | DELETE | `/scenes/{id}/specs/{sid}`        | `?revision=`                      |
//! | GET    | `/scenes/{id}/frames/{n}`         | returns `image/svg+xml`           |
//! | GET    | `/scenes/{id}/intervals`          |                                   |
//! | GET    | `/scenes/{id}/events`             | `?top_n=&jump=`                   |
//! | GET    | `/scenes/{id}/suggestions`        | `?top_n=&jump=&lead=`             |
//! | POST   | `/scenes/{id}/export`             | `{out_dir?}`                      |
//!
//! Errors are returned as `{code, message, violations[]}`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use barrace_core::events::{DEFAULT_JUMP_THRESHOLD, DEFAULT_LEAD_PERIODS};
use barrace_core::{
    active_intervals, parse_dataset, suggest_foreshadow, AnimationSettings, CanvasSpec, ForeshadowSpec,
    SceneError, SceneStore, Violation,
};
use serde::{Deserialize, Serialize};

#[derive(Clone)]
struct AppState {
    store: Arc<SceneStore>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                violations: Vec::new(),
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl From<SceneError> for ApiError {
    fn from(err: SceneError) -> Self {
        let status = match &err {
            SceneError::UnknownScene(_) | SceneError::UnknownSpec(_) | SceneError::FrameOutOfRange { .. } => {
                StatusCode::NOT_FOUND
            }
            SceneError::RevisionConflict { .. } => StatusCode::CONFLICT,
            SceneError::ValidationFailed(_)
            | SceneError::Data(_)
            | SceneError::Compile(_)
            | SceneError::MissingDataset => StatusCode::UNPROCESSABLE_ENTITY,
            SceneError::Render(barrace_core::RenderError::InvalidCanvas(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            SceneError::Render(_) | SceneError::Io { .. } | SceneError::Malformed { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %err, "request failed");
        }
        Self {
            status,
            body: ErrorBody {
                code: err.code().to_string(),
                message: err.to_string(),
                violations: err.violations().to_vec(),
            },
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        Self::bad_request(rejection.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(rejection: QueryRejection) -> Self {
        Self::bad_request(rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs a blocking store operation off the async executor.
async fn blocking<T, F>(state: &AppState, op: F) -> ApiResult<T>
where
    F: FnOnce(&SceneStore) -> Result<T, SceneError> + Send + 'static,
    T: Send + 'static,
{
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || op(&store))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(store: Arc<SceneStore>) -> Router {
    Router::new()
        .route("/scenes", get(list_scenes).post(create_scene))
        .route("/scenes/{id}", get(get_scene))
        .route("/scenes/{id}/settings", patch(update_settings))
        .route("/scenes/{id}/cells", patch(edit_cell))
        .route("/scenes/{id}/specs", post(add_spec))
        .route("/scenes/{id}/specs/{sid}", put(update_spec).delete(delete_spec))
        .route("/scenes/{id}/frames/{n}", get(frame))
        .route("/scenes/{id}/intervals", get(intervals))
        .route("/scenes/{id}/events", get(events))
        .route("/scenes/{id}/suggestions", get(suggestions))
        .route("/scenes/{id}/export", post(export))
        .with_state(AppState { store })
}

pub async fn serve(addr: SocketAddr, store: Arc<SceneStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, root = %store.root().display(), "serving scenes");
    axum::serve(listener, router(store)).await
}

async fn list_scenes(State(state): State<AppState>) -> ApiResult<Json<Vec<String>>> {
    Ok(Json(blocking(&state, |store| store.list()).await?))
}

#[derive(Default)]
struct CreateRequest {
    csv: Option<String>,
    settings: Option<AnimationSettings>,
    title: Option<String>,
}

async fn read_create_request(headers: &HeaderMap, request: Request) -> ApiResult<CreateRequest> {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default();
    if content_type.starts_with("multipart/form-data") {
        let mut multipart = Multipart::from_request(request, &())
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        let mut out = CreateRequest::default();
        while let Some(field) = multipart
            .next_field()
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?
        {
            let name = field.name().unwrap_or_default().to_string();
            let text = field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
            match name.as_str() {
                "csv" | "file" | "data" => out.csv = Some(text),
                "settings" => {
                    out.settings = Some(
                        serde_json::from_str(&text)
                            .map_err(|e| ApiError::bad_request(format!("settings: {e}")))?,
                    )
                }
                "title" => out.title = Some(text),
                _ => {}
            }
        }
        Ok(out)
    } else if content_type.starts_with("text/csv") || content_type.starts_with("text/plain") {
        let text = String::from_request(request, &())
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        Ok(CreateRequest {
            csv: Some(text),
            ..Default::default()
        })
    } else {
        Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "UnsupportedMediaType",
            "expected multipart/form-data or text/csv",
        ))
    }
}

async fn create_scene(
    State(state): State<AppState>,
    headers: HeaderMap,
    request: Request,
) -> ApiResult<Response> {
    let req = read_create_request(&headers, request).await?;
    let csv = req.csv.ok_or_else(|| ApiError::bad_request("missing `csv` field"))?;
    let dataset = parse_dataset(&csv).map_err(|e| ApiError::from(SceneError::Data(e)))?;
    let settings = req.settings.unwrap_or_default();
    let canvas = CanvasSpec {
        title: req.title.unwrap_or_default(),
        ..Default::default()
    };
    let scene = blocking(&state, move |store| store.create(dataset, settings, Some(canvas))).await?;
    Ok((StatusCode::CREATED, Json(scene)).into_response())
}

async fn get_scene(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let scene = blocking(&state, move |store| store.get(&id)).await?;
    Ok(Json(scene).into_response())
}

#[derive(Deserialize)]
struct SettingsPatch {
    revision: u64,
    settings: Option<AnimationSettings>,
    canvas: Option<CanvasSpec>,
}

async fn update_settings(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SettingsPatch>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(patch) = body?;
    let scene = blocking(&state, move |store| {
        store.update_settings(&id, patch.revision, patch.settings, patch.canvas)
    })
    .await?;
    Ok(Json(scene).into_response())
}

#[derive(Deserialize)]
struct CellPatch {
    revision: u64,
    item: String,
    period: String,
    value: f64,
}

async fn edit_cell(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<CellPatch>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(cell) = body?;
    let scene = blocking(&state, move |store| {
        store.edit_cell(&id, cell.revision, &cell.item, &cell.period, cell.value)
    })
    .await?;
    Ok(Json(scene).into_response())
}

#[derive(Deserialize)]
struct SpecBody {
    revision: u64,
    spec: ForeshadowSpec,
}

async fn add_spec(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SpecBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    let scene = blocking(&state, move |store| store.add_spec(&id, body.revision, body.spec)).await?;
    Ok((StatusCode::CREATED, Json(scene)).into_response())
}

async fn update_spec(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    body: Result<Json<SpecBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    let scene = blocking(&state, move |store| store.update_spec(&id, body.revision, &sid, body.spec)).await?;
    Ok(Json(scene).into_response())
}

#[derive(Deserialize)]
struct RevisionQuery {
    revision: u64,
}

async fn delete_spec(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    query: Result<Query<RevisionQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let scene = blocking(&state, move |store| store.delete_spec(&id, q.revision, &sid)).await?;
    Ok(Json(scene).into_response())
}

async fn frame(State(state): State<AppState>, Path((id, n)): Path<(String, usize)>) -> ApiResult<Response> {
    let svg = blocking(&state, move |store| store.preview(&id, n)).await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

async fn intervals(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let scene = blocking(&state, move |store| store.get(&id)).await?;
    Ok(Json(active_intervals(&scene.specs, &scene.settings)).into_response())
}

#[derive(Deserialize)]
struct EventQuery {
    top_n: Option<usize>,
    jump: Option<usize>,
    lead: Option<f64>,
}

async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<EventQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let scene = blocking(&state, move |store| store.get(&id)).await?;
    let top_n = q.top_n.unwrap_or(scene.settings.top_n);
    let jump = q.jump.unwrap_or(DEFAULT_JUMP_THRESHOLD);
    Ok(Json(scene.events(top_n, jump)).into_response())
}

async fn suggestions(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<EventQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let scene = blocking(&state, move |store| store.get(&id)).await?;
    let top_n = q.top_n.unwrap_or(scene.settings.top_n);
    let jump = q.jump.unwrap_or(DEFAULT_JUMP_THRESHOLD);
    let lead = q.lead.unwrap_or(DEFAULT_LEAD_PERIODS);
    let drafts = scene
        .events(top_n, jump)
        .iter()
        .map(|ev| suggest_foreshadow(ev, lead))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(drafts).into_response())
}

#[derive(Deserialize, Default)]
struct ExportBody {
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExportResponse {
    out_dir: PathBuf,
    manifest: barrace_core::Manifest,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<ExportBody>>,
) -> ApiResult<Response> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let (out_dir, manifest) = blocking(&state, move |store| store.export(&id, body.out_dir.as_deref())).await?;
    Ok(Json(ExportResponse { out_dir, manifest }).into_response())
}
