use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use d4c_core::annotate::EntityKind;
use d4c_core::diseasesim::Aggregate;
use d4c_core::drugsim::{query_replacements, DrugSimError};
use d4c_core::kgmap::PatternQuery;
use serde::Serialize;
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use crate::state::AppState;

pub const DEFAULT_LIMIT: usize = 20;
pub const MAX_LIMIT: usize = 100;
pub const DEFAULT_K: usize = 10;
const RELATED: usize = 10;

type Params = Query<BTreeMap<String, String>>;
type Shared = State<Arc<AppState>>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn unknown(term: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownTerm", format!("no drug or disease matches {term:?}"))
    }

    fn bad_pagination(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadPagination", message)
    }

    fn unavailable(what: &str) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "ArtifactMissing", format!("{what} was not built"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn keyword(params: &BTreeMap<String, String>, name: &str) -> Result<String, ApiError> {
    match params.get(name).map(|s| s.trim()) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        _ => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "MissingParameter",
            format!("query parameter {name:?} is required"),
        )),
    }
}

fn count_param(params: &BTreeMap<String, String>, name: &str, default: usize) -> Result<usize, ApiError> {
    match params.get(name) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| ApiError::bad_pagination(format!("{name} must be a non-negative integer, got {raw:?}"))),
    }
}

#[derive(Debug, Serialize)]
pub struct RankedDrug {
    pub atc_code: String,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct RankedDisease {
    pub mesh_code: String,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct Highlight {
    pub start: usize,
    pub end: usize,
    pub code: String,
    pub kind: EntityKind,
}

#[derive(Debug, Serialize)]
pub struct ParagraphHit {
    pub paragraph_id: String,
    pub paper_id: String,
    pub title: String,
    pub section: String,
    pub text: String,
    pub highlights: Vec<Highlight>,
}

#[derive(Debug, Serialize)]
pub struct Resolved {
    pub code: String,
    pub label: String,
    pub kind: EntityKind,
}

#[derive(Debug, Serialize)]
pub struct Page {
    pub offset: usize,
    pub limit: usize,
}

#[derive(Debug, Serialize)]
pub struct SearchResult {
    pub query: String,
    pub resolved: Resolved,
    pub total: usize,
    pub page: Page,
    pub paragraphs: Vec<ParagraphHit>,
    pub related_drugs: Vec<RankedDrug>,
    pub related_diseases: Vec<RankedDisease>,
}

#[derive(Debug, Serialize)]
pub struct DiseaseNeighbor {
    pub mesh_code: String,
    pub label: String,
    pub distance: f64,
    pub compared_terms: usize,
}

fn related_drugs(state: &AppState, code: &str, n: usize) -> Vec<RankedDrug> {
    state
        .comentions
        .ranked(code, EntityKind::Drug)
        .into_iter()
        .take(n)
        .map(|(c, count)| RankedDrug {
            label: state.label(EntityKind::Drug, &c),
            atc_code: c,
            score: count as f64,
        })
        .collect()
}

fn related_diseases(state: &AppState, code: &str, n: usize) -> Vec<RankedDisease> {
    state
        .comentions
        .ranked(code, EntityKind::Disease)
        .into_iter()
        .take(n)
        .map(|(c, count)| RankedDisease {
            label: state.label(EntityKind::Disease, &c),
            mesh_code: c,
            score: count as f64,
        })
        .collect()
}

async fn search(State(state): Shared, Query(params): Params) -> ApiResult<SearchResult> {
    let q = keyword(&params, "q")?;
    let offset = count_param(&params, "offset", 0)?;
    let limit = count_param(&params, "limit", DEFAULT_LIMIT)?;
    if limit == 0 || limit > MAX_LIMIT {
        return Err(ApiError::bad_pagination(format!("limit must be in 1..={MAX_LIMIT}")));
    }
    let (kind, code) = state.resolve(&q).ok_or_else(|| ApiError::unknown(&q))?;
    let ids = state.comentions.paragraphs(code);
    let paragraphs = ids
        .iter()
        .skip(offset)
        .take(limit)
        .filter_map(|pid| {
            let p = state.corpus.paragraph(pid)?;
            let title = state.corpus.document(&p.doc_id).map(|d| d.title.clone()).unwrap_or_default();
            let highlights = state
                .annotations
                .unit_mentions(pid)
                .iter()
                .map(|m| Highlight {
                    start: m.start,
                    end: m.end,
                    code: m.code.clone(),
                    kind: m.kind,
                })
                .collect();
            Some(ParagraphHit {
                paragraph_id: p.id.clone(),
                paper_id: p.doc_id.clone(),
                title,
                section: p.section.clone(),
                text: p.text.clone(),
                highlights,
            })
        })
        .collect();
    Ok(Json(SearchResult {
        query: q.clone(),
        resolved: Resolved {
            code: code.to_string(),
            label: state.label(kind, code),
            kind,
        },
        total: ids.len(),
        page: Page { offset, limit },
        paragraphs,
        related_drugs: related_drugs(&state, code, RELATED),
        related_diseases: related_diseases(&state, code, RELATED),
    }))
}

async fn replacements(State(state): Shared, Query(params): Params) -> ApiResult<Vec<RankedDrug>> {
    let kw = keyword(&params, "keywords")?;
    let k = count_param(&params, "k", DEFAULT_K)?;
    let index = state.drug_index.as_ref().ok_or_else(|| ApiError::unavailable("drug index"))?;
    let code = state.atc.resolve(&kw).ok_or_else(|| ApiError::unknown(&kw))?;
    if index.position(code).is_none() || k == 0 {
        // A known drug without disease co-mentions has no vector.
        return Ok(Json(Vec::new()));
    }
    let found = query_replacements(index, &state.atc, code, k).map_err(|e| match e {
        DrugSimError::UnknownDrug(_) => ApiError::unknown(&kw),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", other.to_string()),
    })?;
    Ok(Json(
        found
            .into_iter()
            .map(|r| RankedDrug {
                atc_code: r.atc_code,
                label: r.label,
                score: r.similarity,
            })
            .collect(),
    ))
}

async fn drugs(State(state): Shared, Query(params): Params) -> ApiResult<Vec<RankedDrug>> {
    let kw = keyword(&params, "keywords")?;
    let (_, code) = state.resolve(&kw).ok_or_else(|| ApiError::unknown(&kw))?;
    Ok(Json(related_drugs(&state, code, usize::MAX)))
}

async fn diseases(State(state): Shared, Query(params): Params) -> ApiResult<Vec<RankedDisease>> {
    let kw = keyword(&params, "keywords")?;
    let (_, code) = state.resolve(&kw).ok_or_else(|| ApiError::unknown(&kw))?;
    Ok(Json(related_diseases(&state, code, usize::MAX)))
}

async fn disease_neighbors(State(state): Shared, Query(params): Params) -> ApiResult<Vec<DiseaseNeighbor>> {
    let kw = keyword(&params, "keywords")?;
    let mode = match params.get("aggregate").map(String::as_str) {
        None | Some("euclidean") => Aggregate::Euclidean,
        Some("wmd") => Aggregate::Wmd,
        Some(other) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "BadParameter",
                format!("aggregate must be euclidean or wmd, got {other:?}"),
            ))
        }
    };
    let distances = state
        .disease_distances
        .as_ref()
        .ok_or_else(|| ApiError::unavailable("disease distances"))?;
    let code = state.mesh.resolve(&kw).ok_or_else(|| ApiError::unknown(&kw))?;
    let mut out: Vec<DiseaseNeighbor> = distances
        .iter()
        .filter(|d| d.aggregate_mode == mode)
        .filter_map(|d| {
            let other = if d.disease_a == code {
                &d.disease_b
            } else if d.disease_b == code {
                &d.disease_a
            } else {
                return None;
            };
            Some(DiseaseNeighbor {
                mesh_code: other.clone(),
                label: state.label(EntityKind::Disease, other),
                distance: d.aggregate,
                compared_terms: d.compared_terms,
            })
        })
        .collect();
    out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.mesh_code.cmp(&b.mesh_code)));
    Ok(Json(out))
}

async fn kg_query(State(state): Shared, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, "BadQuery", m);
    let query: PatternQuery = serde_json::from_slice(&body).map_err(|e| bad(e.to_string()))?;
    let graph = state.graph.as_ref().ok_or_else(|| ApiError::unavailable("knowledge graph"))?;
    let result = graph.query(&query).map_err(|e| bad(e.to_string()))?;
    Ok(Json(json!({"vars": result.vars, "bindings": result.bindings_json()})))
}

async fn healthz(State(state): Shared) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "documents": state.corpus.documents().len(),
        "paragraphs": state.corpus.paragraphs().len(),
        "mentions": state.annotations.mentions().len(),
        "drug_index": state.drug_index.as_ref().map_or(0, |i| i.len()),
        "triples": state.graph.as_ref().map_or(0, |g| g.len()),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/search", get(search))
        .route("/bio-api/replacements", get(replacements))
        .route("/bio-api/drugs", get(drugs))
        .route("/bio-api/diseases", get(diseases))
        .route("/bio-api/disease-neighbors", get(disease_neighbors))
        .route("/kg/query", post(kg_query))
        .route("/healthz", get(healthz))
        .layer(cors)
        .with_state(state)
}
