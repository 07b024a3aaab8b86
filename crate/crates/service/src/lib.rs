//! HTTP service for collecting P5 sentence selections and O3(H) confusing
//! options from human annotators.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/api/next?annotator=NAME` | lowest-id example NAME has not annotated, or 204 |
//! | GET | `/api/example/{id}` | one example, or 404 |
//! | POST | `/api/annotation` | validate and append; 201, 400, 404 or 409 |
//! | GET | `/api/progress[?annotator=NAME]` | `{total, done}` |
//! | GET | `/` | annotation UI (static files) |

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use narc_core::annotation::{Annotation, AnnotationKind, AnnotationStore, AppendError, Payload};
use narc_core::corpus::{split_sentences, Dataset, Example};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

const PLACEHOLDER_UI: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>narc annotation</title></head>
<body><h1>narc annotation service</h1>
<p>No UI bundle configured. The JSON API is available under <code>/api/</code>.</p></body></html>
";

pub struct AppState {
    dataset: Dataset,
    /// Example indices in ascending id order.
    order: Vec<usize>,
    kind: AnnotationKind,
    store: Mutex<AnnotationStore>,
}

impl AppState {
    pub fn new(dataset: Dataset, kind: AnnotationKind, store: AnnotationStore) -> Self {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.sort_by(|&a, &b| dataset.examples[a].id.cmp(&dataset.examples[b].id));
        AppState {
            dataset,
            order,
            kind,
            store: Mutex::new(store),
        }
    }

    fn store(&self) -> std::sync::MutexGuard<'_, AnnotationStore> {
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Lowest-id example `annotator` has not yet annotated.
    pub fn next_for(&self, annotator: &str) -> Option<&Example> {
        let store = self.store();
        self.order
            .iter()
            .map(|&i| &self.dataset.examples[i])
            .find(|ex| !store.contains(&ex.id, annotator, self.kind))
    }

    pub fn progress(&self, annotator: Option<&str>) -> Progress {
        let store = self.store();
        let done = self
            .dataset
            .examples
            .iter()
            .filter(|ex| match annotator {
                Some(a) => store.contains(&ex.id, a, self.kind),
                None => store
                    .annotations()
                    .iter()
                    .any(|x| x.kind == self.kind && x.example_id == ex.id),
            })
            .count();
        Progress {
            total: self.dataset.len(),
            done,
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Progress {
    pub total: usize,
    pub done: usize,
}

/// What the UI needs to render one task.
#[derive(Debug, Serialize)]
struct TaskView<'a> {
    id: &'a str,
    kind: AnnotationKind,
    passage: &'a str,
    sentences: Vec<&'a str>,
    query: &'a str,
    options: &'a [String],
    answer_index: usize,
    answer: &'a str,
}

impl<'a> TaskView<'a> {
    fn new(ex: &'a Example, kind: AnnotationKind) -> Self {
        TaskView {
            id: &ex.id,
            kind,
            passage: &ex.passage,
            sentences: split_sentences(&ex.passage)
                .into_iter()
                .map(|r| &ex.passage[r])
                .collect(),
            query: &ex.query,
            options: &ex.options,
            answer_index: ex.answer_index,
            answer: ex.answer(),
        }
    }
}

fn error(status: StatusCode, field: Option<&str>, message: impl Into<String>) -> Response {
    let mut body = json!({ "error": message.into() });
    if let Some(f) = field {
        body["field"] = json!(f);
    }
    (status, Json(body)).into_response()
}

/// An error response, boxed to keep `Result`s small.
type Rejection = Box<Response>;

fn bad_request(field: &str, message: impl Into<String>) -> Response {
    error(StatusCode::BAD_REQUEST, Some(field), message)
}

fn reject(field: &str, message: impl Into<String>) -> Rejection {
    Box::new(bad_request(field, message))
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

async fn next(State(state): State<Arc<AppState>>, Query(q): Query<AnnotatorQuery>) -> Response {
    let Some(annotator) = q.annotator.filter(|a| !a.trim().is_empty()) else {
        return bad_request("annotator", "query parameter annotator is required");
    };
    match state.next_for(&annotator) {
        Some(ex) => Json(TaskView::new(ex, state.kind)).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn example(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.dataset.get(&id) {
        Some(ex) => Json(TaskView::new(ex, state.kind)).into_response(),
        None => error(
            StatusCode::NOT_FOUND,
            None,
            format!("unknown example id {id}"),
        ),
    }
}

async fn progress(
    State(state): State<Arc<AppState>>,
    Query(q): Query<AnnotatorQuery>,
) -> Json<Progress> {
    Json(state.progress(q.annotator.as_deref()))
}

fn string_field(body: &Value, field: &str) -> Result<String, Rejection> {
    match body.get(field) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(reject(field, "must not be empty")),
        Some(_) => Err(reject(field, "must be a string")),
        None => Err(reject(field, "missing field")),
    }
}

/// Turn a submitted JSON body into an annotation, reporting the first bad field.
fn parse_submission(state: &AppState, raw: &[u8]) -> Result<Annotation, Rejection> {
    let body: Value =
        serde_json::from_slice(raw).map_err(|e| reject("body", format!("invalid JSON: {e}")))?;
    if !body.is_object() {
        return Err(reject("body", "expected a JSON object"));
    }
    let example_id = string_field(&body, "example_id")?;
    let annotator = string_field(&body, "annotator")?;
    let kind = match body.get("kind") {
        None => state.kind,
        Some(v) => serde_json::from_value::<AnnotationKind>(v.clone())
            .map_err(|_| reject("kind", "expected sentence_selection or confusing_option"))?,
    };
    if kind != state.kind {
        return Err(reject(
            "kind",
            format!("this service collects {:?} annotations", state.kind),
        ));
    }
    let payload = match body.get("payload") {
        None => return Err(reject("payload", "missing field")),
        Some(v) => serde_json::from_value::<Payload>(v.clone()).map_err(|_| {
            reject(
                "payload",
                "expected an option index or a list of sentence indices",
            )
        })?,
    };
    let timestamp = match body.get("timestamp") {
        None | Some(Value::Null) => SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0),
        Some(v) => v
            .as_i64()
            .ok_or_else(|| reject("timestamp", "expected integer UTC seconds"))?,
    };
    Ok(Annotation {
        example_id,
        annotator,
        kind,
        payload,
        timestamp,
    })
}

async fn submit(State(state): State<Arc<AppState>>, raw: Bytes) -> Response {
    let ann = match parse_submission(&state, &raw) {
        Ok(a) => a,
        Err(r) => return *r,
    };
    let Some(ex) = state.dataset.get(&ann.example_id) else {
        return error(
            StatusCode::NOT_FOUND,
            Some("example_id"),
            format!("unknown example id {}", ann.example_id),
        );
    };
    if let Err(e) = ann.validate(ex) {
        return bad_request(e.field, e.message);
    }
    let result = state.store().append(ann.clone());
    match result {
        Ok(()) => (StatusCode::CREATED, Json(ann)).into_response(),
        Err(e @ AppendError::Duplicate(..)) => error(StatusCode::CONFLICT, None, e.to_string()),
        Err(AppendError::Store(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, None, e.to_string()),
    }
}

/// Build the application router. With `ui_dir`, static files are served from
/// it at `/`; otherwise a placeholder page is shown.
pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/next", get(next))
        .route("/api/example/{id}", get(example))
        .route("/api/annotation", post(submit))
        .route("/api/progress", get(progress))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_UI) })),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub ui_dir: Option<PathBuf>,
}

/// Run until ctrl-c.
pub async fn serve(state: AppState, config: ServeConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    let summary: BTreeMap<&str, String> = BTreeMap::from([
        ("listening", listener.local_addr()?.to_string()),
        ("task", state.kind.to_string()),
        ("examples", state.dataset.len().to_string()),
    ]);
    eprintln!("{}", serde_json::to_string(&summary).unwrap_or_default());
    let app = router(Arc::new(state), config.ui_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
