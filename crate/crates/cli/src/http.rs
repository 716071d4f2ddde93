//! HTTP routes over [`CircuitService`]. Documents are JSON; regions and
//! slices are binary region payloads (`application/octet-stream`).

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use circuitproof::edit::EditKind;
use circuitproof::rle::encode_region;
use circuitproof::service::CircuitService;
use circuitproof::volume::INSPECTOR_SHAPE;
use circuitproof::{BranchId, Error, PhysPoint, RoiStatus, SegmentId, ShadeMode};

/// Largest region a single request may ask for, in voxels.
pub const MAX_REGION_VOXELS: usize = 1 << 27;

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    head: Option<u64>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, head) = match &self.0 {
            Error::NotFound(_) => (StatusCode::NOT_FOUND, None),
            Error::Conflict { head } => (StatusCode::CONFLICT, Some(*head)),
            Error::Bounds(_) | Error::Param(_) | Error::Format(_) => (StatusCode::BAD_REQUEST, None),
            Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, None),
            Error::Generation(_) | Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        (status, Json(ErrorBody { error: self.0.to_string(), head })).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;
type Svc = Arc<CircuitService>;

/// Runs the (possibly slow) service call off the async workers.
async fn blocking<T: Send + 'static>(svc: &Svc, f: impl FnOnce(&CircuitService) -> circuitproof::Result<T> + Send + 'static) -> ApiResult<T> {
    let svc = svc.clone();
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError(Error::Io(std::io::Error::other(e.to_string()))))?
        .map_err(ApiError)
}

pub fn router(svc: Svc) -> Router {
    Router::new()
        .route("/head", get(head))
        .route("/cells", get(cells))
        .route("/cells/{id}/circuit", get(circuit))
        .route("/cells/{id}/tree", get(tree))
        .route("/cells/{id}/head", get(cell_head))
        .route("/cells/{id}/edits", post(post_edit))
        .route("/cells/{id}/branches/{branch}/anchor", get(anchor))
        .route("/region", get(region))
        .route("/slice", get(slice))
        .route("/rollback", post(rollback))
        .route("/errors", get(errors))
        .with_state(svc)
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct VersionBody {
    pub version: u64,
}

async fn head(State(svc): State<Svc>) -> Json<VersionBody> {
    Json(VersionBody { version: svc.head() })
}

#[derive(Deserialize)]
struct CellsQuery {
    mode: Option<String>,
    version: Option<u64>,
}

async fn cells(State(svc): State<Svc>, Query(q): Query<CellsQuery>) -> ApiResult<Response> {
    let mode = match q.mode.as_deref() {
        None => ShadeMode::Errors,
        Some(m) => ShadeMode::parse(m).ok_or_else(|| Error::Param(format!("mode must be errors or synapses, got {m:?}")))?,
    };
    let list = blocking(&svc, move |s| s.list_cells(mode, q.version)).await?;
    Ok(Json(list).into_response())
}

async fn circuit(State(svc): State<Svc>, Path(id): Path<SegmentId>, Query(q): Query<VersionQuery>) -> ApiResult<Response> {
    let doc = blocking(&svc, move |s| s.local_circuit(id, q.version)).await?;
    Ok(Json(doc).into_response())
}

async fn tree(State(svc): State<Svc>, Path(id): Path<SegmentId>, Query(q): Query<VersionQuery>) -> ApiResult<Response> {
    let doc = blocking(&svc, move |s| s.browser_tree(id, q.version)).await?;
    Ok(Json(doc).into_response())
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct CellHead {
    pub cell_id: SegmentId,
    pub head: u64,
}

async fn cell_head(State(svc): State<Svc>, Path(id): Path<SegmentId>) -> Json<CellHead> {
    Json(CellHead { cell_id: id, head: svc.cell_head(id) })
}

#[derive(Deserialize)]
struct AnchorQuery {
    t: f64,
    version: Option<u64>,
}

async fn anchor(State(svc): State<Svc>, Path((id, branch)): Path<(SegmentId, BranchId)>, Query(q): Query<AnchorQuery>) -> ApiResult<Response> {
    let a = blocking(&svc, move |s| s.branch_anchor(id, branch, q.t, q.version)).await?;
    Ok(Json(a).into_response())
}

/// Center in nm; shape in voxels, defaulting to the inspector shape.
#[derive(Deserialize)]
struct RegionQuery {
    x: f64,
    y: f64,
    z: f64,
    w: Option<usize>,
    h: Option<usize>,
    d: Option<usize>,
    version: Option<u64>,
}

fn binary(bytes: Vec<u8>, version: u64) -> Response {
    let mut r = bytes.into_response();
    r.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/octet-stream"));
    r.headers_mut().insert("x-version", HeaderValue::from(version));
    r
}

async fn region(State(svc): State<Svc>, Query(q): Query<RegionQuery>) -> ApiResult<Response> {
    let shape = [q.w.unwrap_or(INSPECTOR_SHAPE[0]), q.h.unwrap_or(INSPECTOR_SHAPE[1]), q.d.unwrap_or(INSPECTOR_SHAPE[2])];
    if shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).is_none_or(|n| n > MAX_REGION_VOXELS) {
        return Err(Error::Param(format!("region {shape:?} exceeds {MAX_REGION_VOXELS} voxels")).into());
    }
    let (bytes, version) = blocking(&svc, move |s| {
        let version = q.version.unwrap_or(s.head());
        let sub = s.inspection_region(PhysPoint::new(q.x, q.y, q.z), Some(version), Some(shape))?;
        Ok((encode_region(&sub)?, version))
    })
    .await?;
    Ok(binary(bytes, version))
}

#[derive(Deserialize)]
struct SliceQuery {
    z: usize,
    scale: Option<usize>,
    version: Option<u64>,
}

async fn slice(State(svc): State<Svc>, Query(q): Query<SliceQuery>) -> ApiResult<Response> {
    let (bytes, version) = blocking(&svc, move |s| {
        let version = q.version.unwrap_or(s.head());
        let sl = s.slice(q.z, q.scale.unwrap_or(1), Some(version))?;
        Ok((encode_region(&sl.to_subvolume())?, version))
    })
    .await?;
    Ok(binary(bytes, version))
}

/// `{"author", "base_version", "kind", "payload"}`.
#[derive(Serialize, Deserialize, Debug)]
pub struct EditRequest {
    pub author: String,
    pub base_version: u64,
    #[serde(flatten)]
    pub edit: EditKind,
}

async fn post_edit(State(svc): State<Svc>, Path(id): Path<SegmentId>, Json(req): Json<EditRequest>) -> ApiResult<Response> {
    let version = blocking(&svc, move |s| s.post_edit(id, req.base_version, &req.author, req.edit)).await?;
    Ok((StatusCode::CREATED, Json(VersionBody { version })).into_response())
}

#[derive(Serialize, Deserialize, Debug)]
pub struct RollbackRequest {
    pub author: String,
    pub version: u64,
    #[serde(default)]
    pub expected_head: Option<u64>,
}

async fn rollback(State(svc): State<Svc>, Json(req): Json<RollbackRequest>) -> ApiResult<Response> {
    let version = blocking(&svc, move |s| s.rollback(&req.author, req.version, req.expected_head)).await?;
    Ok((StatusCode::CREATED, Json(VersionBody { version })).into_response())
}

#[derive(Deserialize)]
struct ErrorsQuery {
    cell: Option<SegmentId>,
    status: Option<String>,
    version: Option<u64>,
}

async fn errors(State(svc): State<Svc>, Query(q): Query<ErrorsQuery>) -> ApiResult<Response> {
    let status = match q.status.as_deref() {
        None => None,
        Some(s) => Some(RoiStatus::parse(s).ok_or_else(|| Error::Param(format!("unknown status {s:?}")))?),
    };
    let list = blocking(&svc, move |s| s.errors(q.cell, status, q.version)).await?;
    Ok(Json(list).into_response())
}

pub async fn serve(svc: CircuitService, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(svc))).await
}
