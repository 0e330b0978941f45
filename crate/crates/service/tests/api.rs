use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use d4c_core::annotate::{annotate_corpus, parse_atc, EntityKind, Gazetteer};
use d4c_core::corpus::ingest;
use d4c_core::drugsim::{build_matrix, tfidf_transform, AnnConfig, AnnIndex, CountMode};
use d4c_core::kgmap::{export_annotations, generate_triples, parse_mapping, Graph, DEFAULT_MAPPING};
use d4c_service::{router, schema, AppState};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn state() -> Arc<AppState> {
    static STATE: OnceLock<Arc<AppState>> = OnceLock::new();
    STATE
        .get_or_init(|| {
            let (corpus, _) = ingest(&fixtures().join("corpus")).unwrap();
            let atc = Gazetteer::from_csv_path(EntityKind::Drug, &fixtures().join("atc.csv")).unwrap();
            let mesh = Gazetteer::from_csv_path(EntityKind::Disease, &fixtures().join("mesh.csv")).unwrap();
            let annotations = annotate_corpus(&corpus, &atc, &mesh);
            let matrix = build_matrix(&annotations, CountMode::Paragraph).unwrap();
            let index = AnnIndex::build(&tfidf_transform(&matrix), AnnConfig::default()).unwrap();
            let tables = export_annotations(&annotations, &corpus, &atc, &mesh).unwrap();
            let triples = generate_triples(&tables, &parse_mapping(DEFAULT_MAPPING).unwrap()).unwrap();
            let mut state = AppState::new(corpus, annotations, atc, mesh);
            state.drug_index = Some(index);
            state.graph = Some(Graph::new(triples));
            Arc::new(state)
        })
        .clone()
}

async fn call(req: Request<Body>) -> (StatusCode, Value) {
    let resp = router(state()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn get(uri: &str) -> (StatusCode, Value) {
    call(Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(uri: &str, body: &str) -> (StatusCode, Value) {
    call(Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()).await
}

fn assert_schema(route: &str, value: &Value) {
    let schema: Value = serde_json::from_str(schema(route).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{route}: {errors:?}\n{value}");
}

#[tokio::test]
async fn replacements_for_chloroquine() {
    let (status, body) = get("/bio-api/replacements?keywords=chloroquine&k=5").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("/bio-api/replacements", &body);
    let list = body.as_array().unwrap();
    assert!(!list.is_empty() && list.len() <= 5);
    let scores: Vec<f64> = list.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    for r in list {
        assert_ne!(r["atc_code"], "P01BA01");
        assert!(parse_atc(r["atc_code"].as_str().unwrap()).is_ok());
    }
    let (_, zero) = get("/bio-api/replacements?keywords=P01BA01&k=0").await;
    assert_eq!(zero, serde_json::json!([]));
}

#[tokio::test]
async fn unknown_terms_and_bad_pagination() {
    let (status, body) = get("/search?q=zzzz").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownTerm");
    assert_schema("error", &body);
    for uri in ["/search?q=chloroquine&limit=0", "/search?q=chloroquine&offset=-1", "/search?q=chloroquine&limit=abc"] {
        let (status, body) = get(uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert_eq!(body["error"], "BadPagination");
        assert_schema("error", &body);
    }
    let (status, body) = get("/bio-api/drugs").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_schema("error", &body);
}

#[tokio::test]
async fn search_pages_partition_the_result() {
    let (status, full) = get("/search?q=COVID-19&limit=100").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("/search", &full);
    let total = full["total"].as_u64().unwrap() as usize;
    assert!(total > 3);
    let all: Vec<Value> = full["paragraphs"].as_array().unwrap().clone();
    assert_eq!(all.len(), total);
    for limit in [1, 2, 3, 7] {
        let mut pages = Vec::new();
        let mut offset = 0;
        while offset < total + limit {
            let (_, page) = get(&format!("/search?q=covid-19&offset={offset}&limit={limit}")).await;
            assert_schema("/search", &page);
            assert_eq!(page["total"].as_u64().unwrap() as usize, total);
            pages.extend(page["paragraphs"].as_array().unwrap().iter().cloned());
            offset += limit;
        }
        assert_eq!(pages, all);
    }
    for p in &all {
        let text = p["text"].as_str().unwrap();
        for h in p["highlights"].as_array().unwrap() {
            let (s, e) = (h["start"].as_u64().unwrap() as usize, h["end"].as_u64().unwrap() as usize);
            assert!(text.get(s..e).is_some());
        }
    }
}

#[tokio::test]
async fn co_mention_rankings_match_brute_force() {
    let st = state();
    let (status, body) = get("/bio-api/diseases?keywords=hydroxychloroquine").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("/bio-api/diseases", &body);
    let paragraphs = st.annotations.paragraph_codes(EntityKind::Drug);
    let diseases = st.annotations.paragraph_codes(EntityKind::Disease);
    let mut want: Vec<(String, u64)> = Vec::new();
    for code in st.mesh.codes() {
        let n = paragraphs
            .iter()
            .filter(|(p, drugs)| drugs.contains("P01BA02") && diseases.get(*p).is_some_and(|d| d.contains(code)))
            .count() as u64;
        if n > 0 {
            want.push((code.to_string(), n));
        }
    }
    want.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let got: Vec<(String, u64)> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["mesh_code"].as_str().unwrap().to_string(), r["score"].as_f64().unwrap() as u64))
        .collect();
    assert_eq!(got, want);

    let (_, drugs) = get("/bio-api/drugs?keywords=lopinavir").await;
    assert_schema("/bio-api/drugs", &drugs);
    assert!(drugs.as_array().unwrap().iter().all(|r| r["atc_code"] != "J05AR10"));
}

#[tokio::test]
async fn pattern_queries() {
    let listing = std::fs::read_to_string(fixtures().join("queries/listing1.json")).unwrap();
    let (status, body) = post("/kg/query", &listing).await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("/kg/query", &body);
    let sections: BTreeSet<&str> = body["bindings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["section"]["value"].as_str().unwrap())
        .collect();
    assert_eq!(sections, BTreeSet::from(["Results"]));

    let (status, body) = post("/kg/query", r#"{"select": ["s"], "patterns": []}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_schema("error", &body);
    let (status, _) = post("/kg/query", "not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // DISTINCT collapses the per-paragraph repeats of a paper.
    let q = r#"{"select": ["p"], "distinct": DISTINCT, "patterns": [["?x", "onto:isPartOf", "?p"], ["?x", "a", "onto:Paragraph"]]}"#;
    let (_, with) = post("/kg/query", &q.replace("DISTINCT", "true")).await;
    let (_, without) = post("/kg/query", &q.replace("DISTINCT", "false")).await;
    let n_with = with["bindings"].as_array().unwrap().len();
    assert_eq!(n_with, 20);
    assert!(without["bindings"].as_array().unwrap().len() > n_with);
}

#[tokio::test]
async fn health_cors_and_missing_artifacts() {
    let (status, body) = get("/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("/healthz", &body);

    let resp = router(state())
        .oneshot(Request::get("/healthz").header("origin", "http://localhost:4200").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");

    let (status, body) = get("/bio-api/disease-neighbors?keywords=malaria").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_schema("error", &body);
}

#[tokio::test]
async fn identical_requests_identical_bodies() {
    let a = get("/search?q=Plaquenil&limit=3").await;
    let b = get("/search?q=plaquenil&limit=3").await;
    assert_eq!(a.1["resolved"]["code"], "P01BA02");
    assert_eq!(a.1["paragraphs"], b.1["paragraphs"]);
    assert_eq!(get("/bio-api/drugs?keywords=P01BA02").await, get("/bio-api/drugs?keywords=P01BA02").await);
}
