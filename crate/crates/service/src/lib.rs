//! Local HTTP backend for the interactive registration viewer.
//!
//! One process holds one session: an immutable source and target cloud, a
//! mutable list of picked correspondence pairs and the most recent estimate.
//!
//! Point payloads are JSON by default. A request that sends
//! `Accept: application/octet-stream` gets the compact framing instead, all
//! little-endian:
//!
//! ```text
//! u32 count
//! count × [f32; 3]   positions
//! u8  has_colors
//! count × [u8; 3]    colors, only when has_colors = 1
//! ```
//!
//! Point indices are positions in that list in both encodings.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use skyground::fusion::lod_downsample;
use skyground::io::write_transform;
use skyground::registration::{estimate_transform, CorrespondenceSet, RegistrationResult};
use skyground::{apply_transform, pipeline, Error, Point3, PointCloudd, TransformMode};
use tower_http::services::ServeDir;

pub const DEFAULT_LOD_BUDGET: usize = 200_000;
pub const BINARY_MIME: &str = "application/octet-stream";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Rigid,
    Similarity,
}

impl From<ModeName> for TransformMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Rigid => TransformMode::Rigid,
            ModeName::Similarity => TransformMode::Similarity,
        }
    }
}

impl From<TransformMode> for ModeName {
    fn from(m: TransformMode) -> Self {
        match m {
            TransformMode::Rigid => ModeName::Rigid,
            TransformMode::Similarity => ModeName::Similarity,
        }
    }
}

#[derive(Default)]
struct Picks {
    pairs: CorrespondenceSet<f64>,
    last: Option<Estimate>,
}

#[derive(Clone)]
struct Estimate {
    result: RegistrationResult<f64>,
    ids: Vec<u64>,
}

/// Session state. Reads share the lock; pair edits and estimates take it
/// exclusively, so every response sees one consistent pair list.
pub struct Session {
    source: Arc<PointCloudd>,
    target: Arc<PointCloudd>,
    lod_budget: usize,
    picks: RwLock<Picks>,
    lods: Mutex<HashMap<(Side, usize), Arc<PointCloudd>>>,
}

impl Session {
    pub fn new(source: PointCloudd, target: PointCloudd, lod_budget: usize) -> skyground::Result<Self> {
        if lod_budget == 0 {
            return Err(Error::InvalidArgument("lod budget must be at least 1".into()));
        }
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidArgument("session clouds must be non-empty".into()));
        }
        Ok(Self {
            source: Arc::new(source),
            target: Arc::new(target),
            lod_budget,
            picks: RwLock::new(Picks::default()),
            lods: Mutex::new(HashMap::new()),
        })
    }

    pub fn lod_budget(&self) -> usize {
        self.lod_budget
    }

    /// Snapshot of the current pair list.
    pub fn pairs(&self) -> CorrespondenceSet<f64> {
        self.picks.read().expect("session lock").pairs.clone()
    }

    fn cloud(&self, side: Side) -> &Arc<PointCloudd> {
        match side {
            Side::Source => &self.source,
            Side::Target => &self.target,
        }
    }

    /// Level-of-detail copy for a requested budget, capped by the session
    /// budget. Computed once per budget and then reused.
    fn lod(&self, side: Side, requested: Option<usize>) -> Result<Arc<PointCloudd>, ApiError> {
        let budget = match requested {
            Some(0) => return Err(ApiError::bad_request("lod: must be at least 1")),
            Some(n) => n.min(self.lod_budget),
            None => self.lod_budget,
        };
        if let Some(hit) = self.lods.lock().expect("lod cache").get(&(side, budget)) {
            return Ok(hit.clone());
        }
        let (reduced, _) = lod_downsample(self.cloud(side), budget).map_err(ApiError::from)?;
        let reduced = Arc::new(reduced);
        self.lods.lock().expect("lod cache").entry((side, budget)).or_insert_with(|| reduced.clone());
        Ok(reduced)
    }
}

/// JSON error body: a stable code plus a human message.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub found: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required: Option<usize>,
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
            body: ErrorBody { error: code.into(), message: message.into(), found: None, required: None },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed-request", message)
    }

    fn no_pair(id: u64) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown-pair", format!("no pair with id {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InsufficientCorrespondences { found } => {
                let mut err = Self::new(StatusCode::CONFLICT, "insufficient-correspondences", message);
                err.body.found = Some(found);
                err.body.required = Some(3);
                err
            }
            Error::DegenerateConfiguration(_) | Error::ReflectionOrDegenerate { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "degenerate-configuration", message)
            }
            Error::InvalidArgument(_) => Self::new(StatusCode::BAD_REQUEST, "invalid-argument", message),
            Error::Io { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "io", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Decode a JSON body. Parsing keeps every float bit-exact, and the error
/// names the offending field.
fn body<T: serde::de::DeserializeOwned>(raw: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(raw).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LodQuery {
    pub lod: Option<usize>,
}

/// JSON form of a point list.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CloudPayload {
    pub count: usize,
    pub points: Vec<[f64; 3]>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub indices: Vec<usize>,
}

impl CloudPayload {
    pub fn of(cloud: &PointCloudd) -> Self {
        Self {
            count: cloud.len(),
            points: cloud.points().iter().map(|p| p.to_array()).collect(),
            colors: cloud.colors().map(|cs| cs.iter().map(|c| [c.r, c.g, c.b]).collect()),
            indices: (0..cloud.len()).collect(),
        }
    }
}

/// Compact binary form; see the module docs for the layout.
pub fn encode_binary(cloud: &PointCloudd) -> Vec<u8> {
    let n = cloud.len();
    let mut out = Vec::with_capacity(5 + n * 15);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for p in cloud.points() {
        for v in p.to_array() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    match cloud.colors() {
        Some(cs) => {
            out.push(1);
            for c in cs {
                out.extend_from_slice(&[c.r, c.g, c.b]);
            }
        }
        None => out.push(0),
    }
    out
}

fn wants_binary(headers: &HeaderMap) -> bool {
    headers
        .get_all(header::ACCEPT)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .any(|v| v.split(',').any(|part| part.split(';').next().unwrap_or("").trim() == BINARY_MIME))
}

fn points_response(cloud: &PointCloudd, headers: &HeaderMap) -> Response {
    if wants_binary(headers) {
        ([(header::CONTENT_TYPE, BINARY_MIME)], encode_binary(cloud)).into_response()
    } else {
        Json(CloudPayload::of(cloud)).into_response()
    }
}

fn lod_param(q: Result<Query<LodQuery>, QueryRejection>) -> Result<Option<usize>, ApiError> {
    q.map(|Query(q)| q.lod).map_err(|r| ApiError::bad_request(r.body_text()))
}

async fn get_cloud(
    State(s): State<Arc<Session>>,
    UrlPath(which): UrlPath<String>,
    q: Result<Query<LodQuery>, QueryRejection>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let side = match which.as_str() {
        "source" => Side::Source,
        "target" => Side::Target,
        other => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown-cloud",
                format!("no cloud named '{other}'; use source or target"),
            ))
        }
    };
    let cloud = s.lod(side, lod_param(q)?)?;
    Ok(points_response(&cloud, &headers))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NewPair {
    pub source_point: [f64; 3],
    pub target_point: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PairView {
    pub id: u64,
    pub source_point: [f64; 3],
    pub target_point: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PairList {
    pub pairs: Vec<PairView>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PairId {
    pub id: u64,
}

fn pair_list(set: &CorrespondenceSet<f64>) -> PairList {
    PairList {
        pairs: set
            .pairs()
            .iter()
            .map(|p| PairView {
                id: p.id,
                source_point: p.source.to_array(),
                target_point: p.target.to_array(),
            })
            .collect(),
    }
}

async fn add_pair(State(s): State<Arc<Session>>, raw: Bytes) -> Result<(StatusCode, Json<PairId>), ApiError> {
    let p: NewPair = body(&raw)?;
    let mut picks = s.picks.write().expect("session lock");
    let id = picks.pairs.push(Point3::from_array(p.source_point), Point3::from_array(p.target_point))?;
    Ok((StatusCode::CREATED, Json(PairId { id })))
}

async fn list_pairs(State(s): State<Arc<Session>>) -> Json<PairList> {
    Json(pair_list(&s.picks.read().expect("session lock").pairs))
}

async fn delete_pair(
    State(s): State<Arc<Session>>,
    id: Result<UrlPath<u64>, PathRejection>,
) -> Result<StatusCode, ApiError> {
    let UrlPath(id) = id.map_err(|r| ApiError::bad_request(format!("id: {}", r.body_text())))?;
    let mut picks = s.picks.write().expect("session lock");
    picks.pairs.remove(id).ok_or_else(|| ApiError::no_pair(id))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRequest {
    pub mode: ModeName,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Residual {
    pub id: u64,
    pub residual: f64,
}

/// Estimate reply: the matrix, its fit over the pairs and the readable
/// parameters (angles in degrees).
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EstimateView {
    pub mode: ModeName,
    pub matrix: [[f64; 4]; 4],
    pub rmse: f64,
    pub residuals: Vec<Residual>,
    pub scale: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub translation: [f64; 3],
}

fn estimate_view(e: &Estimate) -> Result<EstimateView, ApiError> {
    let r = &e.result;
    let d = r.transform.decompose()?;
    Ok(EstimateView {
        mode: r.mode.into(),
        matrix: *r.transform.matrix(),
        rmse: r.rmse,
        residuals: e.ids.iter().zip(&r.residuals).map(|(&id, &residual)| Residual { id, residual }).collect(),
        scale: d.scale,
        roll_deg: d.angles.roll.to_degrees(),
        pitch_deg: d.angles.pitch.to_degrees(),
        yaw_deg: d.angles.yaw.to_degrees(),
        translation: d.translation.to_array(),
    })
}

async fn estimate(State(s): State<Arc<Session>>, raw: Bytes) -> Result<Json<EstimateView>, ApiError> {
    let req: EstimateRequest = body(&raw)?;
    let mut picks = s.picks.write().expect("session lock");
    let result = estimate_transform(&picks.pairs, req.mode.into())?;
    let est = Estimate { result, ids: picks.pairs.pairs().iter().map(|p| p.id).collect() };
    let view = estimate_view(&est)?;
    picks.last = Some(est);
    Ok(Json(view))
}

async fn preview(
    State(s): State<Arc<Session>>,
    q: Result<Query<LodQuery>, QueryRejection>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let lod = lod_param(q)?;
    let m = match &s.picks.read().expect("session lock").last {
        Some(e) => e.result.transform,
        None => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "no-estimate",
                "no estimate yet; POST /api/estimate first",
            ))
        }
    };
    let cloud = s.lod(Side::Source, lod)?;
    Ok(points_response(&apply_transform(&m, cloud.as_ref()), &headers))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportRequest {
    pub path: PathBuf,
    /// Defaults to the mode of the last estimate, else similarity.
    pub mode: Option<ModeName>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ExportReply {
    pub path: PathBuf,
    pub mode: ModeName,
    pub rmse: f64,
}

/// Same document the `register` command writes for these pairs.
async fn export(State(s): State<Arc<Session>>, raw: Bytes) -> Result<Json<ExportReply>, ApiError> {
    let req: ExportRequest = body(&raw)?;
    if req.path.as_os_str().is_empty() {
        return Err(ApiError::bad_request("path: must not be empty"));
    }
    let picks = s.picks.write().expect("session lock");
    let mode = req
        .mode
        .map(TransformMode::from)
        .or(picks.last.as_ref().map(|e| e.result.mode))
        .unwrap_or(TransformMode::Similarity);
    let doc = pipeline::register(&picks.pairs, mode, None)?;
    write_transform(&doc, &req.path)?;
    Ok(Json(ExportReply {
        path: req.path,
        mode: mode.into(),
        rmse: doc.rmse.expect("register records rmse"),
    }))
}

/// All API routes, plus the viewer bundle from `static_dir` when given.
pub fn router(session: Arc<Session>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/clouds/:which", get(get_cloud))
        .route("/api/pairs", post(add_pair).get(list_pairs))
        .route("/api/pairs/:id", delete(delete_pair))
        .route("/api/estimate", post(estimate))
        .route("/api/preview", get(preview))
        .route("/api/export", post(export))
        .with_state(session);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}
