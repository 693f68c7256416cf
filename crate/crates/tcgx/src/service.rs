//! HTTP facade over on-disk drawings and the prototype library. Requests
//! are stateless; mutations of one drawing are serialized by a per-id lock
//! and written atomically, so readers never observe a torn file.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tcgx_core::codec::canonical_bytes;
use tcgx_core::params::GeneratorKind;
use tcgx_core::profile::{CommandId, Profile};
use tcgx_core::svg::{render_drawing, render_preview, RenderOptions};
use tcgx_core::{validate_params, Drawing, ElementId, KeyRing, ModuleParams, Point2, Violation};

use crate::config::ProfileConfig;
use crate::error::{Error, Result};
use crate::keyring::KeyRingDir;
use crate::{io, library, now, ops};

/// Request header selecting a loaded profile (UTF-8, optionally
/// percent-encoded).
pub const PROFILE_HEADER: &str = "x-profile";
pub const DRAWING_EXT: &str = "tcgx";

struct Inner {
    store: PathBuf,
    library: PathBuf,
    keyring: Option<PathBuf>,
    profiles: ProfileConfig,
    profile: Option<String>,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// `profile` is the server's default profile; requests may pick another
    /// with the `X-Profile` header. The store directory is created if needed.
    pub fn new(
        store: PathBuf,
        library: PathBuf,
        keyring: Option<PathBuf>,
        profiles: ProfileConfig,
        profile: Option<String>,
    ) -> Result<Self> {
        profiles.select(profile.as_deref())?;
        fs::create_dir_all(&store).map_err(|e| Error::io(&store, e))?;
        Ok(Self {
            inner: Arc::new(Inner {
                store,
                library,
                keyring,
                profiles,
                profile,
                locks: Mutex::new(HashMap::new()),
            }),
        })
    }

    fn profile(&self, headers: &HeaderMap) -> Result<&Profile> {
        let requested = match headers.get(PROFILE_HEADER) {
            Some(v) => Some(decode_header(v)?),
            None => None,
        };
        self.inner
            .profiles
            .select(requested.as_deref().or(self.inner.profile.as_deref()))
    }

    fn gate(&self, headers: &HeaderMap, command: CommandId) -> Result<()> {
        let profile = self.profile(headers)?;
        if profile.allows(command) {
            Ok(())
        } else {
            Err(Error::NotInProfile {
                command,
                profile: profile.name.clone(),
            })
        }
    }

    fn drawing_path(&self, id: &str) -> Result<PathBuf> {
        if !valid_drawing_id(id) {
            return Err(not_found(id));
        }
        Ok(self.inner.store.join(format!("{id}.{DRAWING_EXT}")))
    }

    fn existing_drawing(&self, id: &str) -> Result<PathBuf> {
        let path = self.drawing_path(id)?;
        if path.is_file() {
            Ok(path)
        } else {
            Err(not_found(id))
        }
    }

    fn lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.inner.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    /// Freshly scanned key ring (empty when none is configured).
    fn ring(&self) -> Result<KeyRing> {
        match &self.inner.keyring {
            Some(dir) => Ok(KeyRingDir::open(dir)?.ring),
            None => Ok(KeyRing::new()),
        }
    }
}

fn decode_header(v: &HeaderValue) -> Result<String> {
    let raw = std::str::from_utf8(v.as_bytes())
        .map_err(|_| Error::Usage("X-Profile header is not UTF-8".into()))?;
    percent_encoding::percent_decode_str(raw)
        .decode_utf8()
        .map(|s| s.into_owned())
        .map_err(|_| Error::Usage("X-Profile header is not UTF-8".into()))
}

fn not_found(id: &str) -> Error {
    Error::NotFound {
        what: "drawing",
        id: id.into(),
    }
}

pub fn valid_drawing_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_')
}

/// Error body of every non-2xx response.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ApiError {
    pub code: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation_fields: Option<Vec<String>>,
}

fn violation_lists(v: &[Violation]) -> (Vec<String>, Vec<String>) {
    (
        v.iter().map(|v| v.message.clone()).collect(),
        v.iter().map(|v| v.field.clone()).collect(),
    )
}

impl IntoResponse for Error {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let (violations, violation_fields) = match self.violations() {
            Some(v) => {
                let (m, f) = violation_lists(v);
                (Some(m), Some(f))
            }
            None => (None, None),
        };
        let body = ApiError {
            code: self.code().into(),
            detail: self.to_string(),
            violations,
            violation_fields,
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, Error>;

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::Usage(format!("invalid request body: {e}")))
}

fn svg_response(svg: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/profiles", get(get_profiles))
        .route("/api/prototypes", get(list_prototypes))
        .route("/api/prototypes/:id", get(get_prototype))
        .route("/api/prototypes/:id/preview.svg", get(prototype_preview))
        .route("/api/regenerate", post(regenerate))
        .route("/api/drawings", get(list_drawings).post(create_drawing))
        .route("/api/drawings/:id", get(drawing_info))
        .route("/api/drawings/:id/modules", post(add_module))
        .route("/api/drawings/:id/modules/:mid/params", post(edit_params))
        .route("/api/drawings/:id/render.svg", get(render))
        .route("/api/drawings/:id/spec", get(spec))
        .route("/api/drawings/:id/conflicts", get(conflicts))
        .route("/api/drawings/:id/sign", post(sign))
        .route("/api/drawings/:id/verify", get(verify))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: &str) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr, e))?;
    if let Ok(local) = listener.local_addr() {
        eprintln!("tcgx: listening on http://{local}");
    }
    axum::serve(listener, router(state)).await.map_err(|e| Error::io(addr, e))
}

#[derive(Serialize)]
struct ProfileView<'a> {
    name: &'a str,
    marks: Vec<&'a str>,
    commands: Vec<&'static str>,
}

async fn get_profiles(State(st): State<AppState>, headers: HeaderMap) -> ApiResult<Json<serde_json::Value>> {
    let current = st.profile(&headers)?;
    let profiles: Vec<ProfileView> = st
        .inner
        .profiles
        .set
        .iter()
        .map(|p| ProfileView {
            name: &p.name,
            marks: p.marks.iter().map(String::as_str).collect(),
            commands: p.available_commands().into_iter().map(CommandId::as_str).collect(),
        })
        .collect();
    Ok(Json(json!({
        "current": current.name,
        "marks": st.inner.profiles.set.marks,
        "profiles": profiles,
    })))
}

#[derive(Deserialize)]
struct KindQuery {
    kind: Option<String>,
}

async fn list_prototypes(
    State(st): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<KindQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    st.gate(&headers, CommandId::ProtoList)?;
    let kind = q.kind.as_deref().filter(|k| !k.is_empty()).map(ops::parse_kind).transpose()?;
    let catalog = library::list_prototypes(&st.inner.library, kind)?;
    Ok(Json(json!({ "records": catalog.records })))
}

async fn get_prototype(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    st.gate(&headers, CommandId::ProtoList)?;
    let loaded = library::load_prototype(&st.inner.library, &id)?;
    let mut value = serde_json::to_value(&loaded.record).expect("serializable");
    value["kind"] = json!(loaded.record.kind());
    value["preview"] = serde_json::to_value(&loaded.preview).expect("serializable");
    Ok(Json(value))
}

async fn prototype_preview(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    st.gate(&headers, CommandId::ProtoList)?;
    let loaded = library::load_prototype(&st.inner.library, &id)?;
    let svg = render_preview(&loaded.record.params, &RenderOptions::default()).map_err(|v| {
        Error::InvalidPrototype {
            id: id.clone(),
            reason: v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        }
    })?;
    Ok(svg_response(svg))
}

/// Non-persisting preview of `{kind, params}`.
async fn regenerate(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    st.gate(&headers, CommandId::Render)?;
    let params: ModuleParams = parse_json(&body)?;
    let svg = render_preview(&params, &RenderOptions::default()).map_err(Error::InvalidParams)?;
    Ok(Json(json!({
        "svg": String::from_utf8(svg).expect("svg is UTF-8"),
        "violations": Vec::<String>::new(),
        "entity_count": params.entity_count(),
    })))
}

async fn list_drawings(State(st): State<AppState>, headers: HeaderMap) -> ApiResult<Json<serde_json::Value>> {
    st.gate(&headers, CommandId::Info)?;
    let dir = &st.inner.store;
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids: Vec<String> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(DRAWING_EXT) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            if valid_drawing_id(stem) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    let ring = st.ring()?;
    let mut drawings = Vec::with_capacity(ids.len());
    for id in ids {
        let path = st.drawing_path(&id)?;
        match io::load_drawing(&path, &ring) {
            Ok(loaded) => drawings.push(json!({
                "id": id,
                "mark": loaded.drawing.mark(),
                "entity_count": loaded.drawing.entity_count(),
                "module_count": loaded.drawing.module_count(),
                "signature": loaded.status,
            })),
            Err(e) => drawings.push(json!({ "id": id, "error": e.to_string() })),
        }
    }
    Ok(Json(json!({ "drawings": drawings })))
}

#[derive(Deserialize)]
struct CreateDrawing {
    id: String,
    #[serde(default)]
    mark: Option<String>,
}

async fn create_drawing(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    st.gate(&headers, CommandId::New)?;
    let req: CreateDrawing = parse_json(&body)?;
    if !valid_drawing_id(&req.id) {
        return Err(Error::Usage(format!(
            "invalid drawing id {:?}: use letters, digits, '-' or '_'",
            req.id
        )));
    }
    let marks = &st.inner.profiles.set.marks;
    let mark = match req.mark {
        Some(m) => m,
        None => {
            let profile = st.profile(&headers)?;
            marks
                .iter()
                .find(|m| profile.marks.contains(*m))
                .or(marks.first())
                .cloned()
                .ok_or_else(|| Error::Usage("no drawing marks configured".into()))?
        }
    };
    let drawing = Drawing::with_marks(&mark, marks)?;
    let path = st.drawing_path(&req.id)?;
    let lock = st.lock(&req.id);
    let _guard = lock.lock().await;
    let bytes = tcgx_core::codec::encode_drawing_file(&canonical_bytes(&drawing), None);
    io::atomic_create(&path, &bytes).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::Exists {
                what: "drawing",
                id: req.id.clone(),
            }
        } else {
            Error::io(&path, e)
        }
    })?;
    let info = ops::drawing_info(&drawing, tcgx_core::SignatureStatus::Unsigned);
    Ok((StatusCode::CREATED, Json(json!({ "id": req.id, "drawing": info }))).into_response())
}

async fn drawing_info(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ops::DrawingInfo>> {
    st.gate(&headers, CommandId::Info)?;
    let path = st.existing_drawing(&id)?;
    let loaded = io::load_drawing(&path, &st.ring()?)?;
    Ok(Json(ops::drawing_info(&loaded.drawing, loaded.status)))
}

fn command_for_kind(kind: GeneratorKind) -> CommandId {
    match kind {
        GeneratorKind::ConstructionGrid => CommandId::AddGrid,
        GeneratorKind::PipeAxonometric => CommandId::AddRoute,
    }
}

#[derive(Deserialize)]
struct AddModule {
    kind: String,
    params: serde_json::Value,
    #[serde(default)]
    origin: Option<Point2>,
    #[serde(default)]
    scale: Option<f64>,
}

fn module_params(kind: &str, params: serde_json::Value) -> Result<ModuleParams> {
    serde_json::from_value(json!({ "kind": kind, "params": params }))
        .map_err(|e| Error::Usage(format!("invalid params: {e}")))
}

/// Loads a stored drawing under its lock, applies `edit`, and saves it.
async fn mutate_drawing<T>(
    st: &AppState,
    id: &str,
    edit: impl FnOnce(&mut Drawing) -> Result<T>,
) -> Result<(T, Drawing)> {
    let path = st.existing_drawing(id)?;
    let lock = st.lock(id);
    let _guard = lock.lock().await;
    let mut drawing = io::load_drawing(&path, &KeyRing::new())?.drawing;
    let out = edit(&mut drawing)?;
    io::save_drawing(&drawing, &path, None)?;
    Ok((out, drawing))
}

async fn add_module(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: AddModule = parse_json(&body)?;
    let kind = ops::parse_kind(&req.kind)?;
    st.gate(&headers, command_for_kind(kind))?;
    let params = module_params(&req.kind, req.params)?;
    let violations = validate_params(&params);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let origin = req.origin.unwrap_or(Point2::ORIGIN);
    let scale = req.scale.unwrap_or(1.0);
    let (module_id, drawing) = mutate_drawing(&st, &id, |d| Ok(d.add_module(params, origin, scale)?)).await?;
    let entity_count = drawing.module(module_id).map_or(0, |m| m.owned_entity_ids.len());
    let body = json!({
        "module_id": module_id,
        "entity_count": entity_count,
        "conflicts": ops::conflicts(&drawing).conflicts,
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
struct EditParams {
    #[serde(default)]
    kind: Option<String>,
    params: serde_json::Value,
}

async fn edit_params(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath((id, mid)): UrlPath<(String, u64)>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let req: EditParams = parse_json(&body)?;
    let path = st.existing_drawing(&id)?;
    let module_id = ElementId(mid);
    let current_kind = io::load_drawing(&path, &KeyRing::new())?
        .drawing
        .module(module_id)
        .map(|m| m.kind())
        .ok_or(Error::Drawing(tcgx_core::DrawingError::NotFound(module_id)))?;
    st.gate(&headers, command_for_kind(current_kind))?;
    let kind = req.kind.unwrap_or_else(|| current_kind.as_str().to_string());
    let params = module_params(&kind, req.params)?;
    let violations = validate_params(&params);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let ((), drawing) = mutate_drawing(&st, &id, |d| Ok(d.set_module_params(module_id, params)?)).await?;
    let entity_count = drawing.module(module_id).map_or(0, |m| m.owned_entity_ids.len());
    Ok(Json(json!({
        "module_id": module_id,
        "entity_count": entity_count,
        "conflicts": ops::conflicts(&drawing).conflicts,
    })))
}

async fn render(State(st): State<AppState>, headers: HeaderMap, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    st.gate(&headers, CommandId::Render)?;
    let path = st.existing_drawing(&id)?;
    let drawing = io::load_drawing(&path, &KeyRing::new())?.drawing;
    Ok(svg_response(render_drawing(&drawing, &RenderOptions::default())))
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn spec(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    st.gate(&headers, CommandId::Spec)?;
    let path = st.existing_drawing(&id)?;
    let drawing = io::load_drawing(&path, &KeyRing::new())?.drawing;
    match q.format.as_deref() {
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], ops::spec_csv(&drawing)).into_response()),
        None | Some("json") => {
            let source = format!("{id}.{DRAWING_EXT}");
            Ok(Json(ops::spec_table(&drawing, &source, now())).into_response())
        }
        Some(other) => Err(Error::Usage(format!("unknown format {other:?}: use csv or json"))),
    }
}

async fn conflicts(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ops::ConflictReport>> {
    st.gate(&headers, CommandId::CheckDups)?;
    let path = st.existing_drawing(&id)?;
    let drawing = io::load_drawing(&path, &KeyRing::new())?.drawing;
    Ok(Json(ops::conflicts(&drawing)))
}

async fn sign(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ops::VerifyReport>> {
    st.gate(&headers, CommandId::Sign)?;
    let path = st.existing_drawing(&id)?;
    let dir = st.inner.keyring.as_deref().ok_or(Error::NoKeyRing)?;
    let ring = KeyRingDir::open(dir)?.ring;
    let lock = st.lock(&id);
    let _guard = lock.lock().await;
    let block = io::sign_file(&path, &ring)?;
    let status = tcgx_core::SignatureStatus::Valid(block.key_id.clone());
    Ok(Json(ops::VerifyReport::new(status, Some(&block))))
}

async fn verify(
    State(st): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ops::VerifyReport>> {
    st.gate(&headers, CommandId::Verify)?;
    let path = st.existing_drawing(&id)?;
    let checked = io::verify_file(&path, &st.ring()?)?;
    Ok(Json(ops::VerifyReport::new(checked.status, checked.signature.as_ref())))
}

/// Path of a stored drawing, for tests and tooling.
pub fn stored_drawing_path(store: &Path, id: &str) -> Option<PathBuf> {
    valid_drawing_id(id).then(|| store.join(format!("{id}.{DRAWING_EXT}")))
}
