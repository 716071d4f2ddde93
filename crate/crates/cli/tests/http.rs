use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use circuitproof::pipeline::PipelineParams;
use circuitproof::rle::{decode_region, HEADER_LEN, MAGIC};
use circuitproof::service::CircuitService;
use circuitproof::volume::synth::{generate_synthetic, InjectedCut, SyntheticDataset, SyntheticSpec};
use circuitproof::volume::VolumeSource;
use circuitproof_cli::http::router;

fn fixture() -> (Router, SyntheticDataset) {
    let spec = SyntheticSpec {
        dims: [64, 64, 96],
        tube_count: 3,
        synapse_rate: 2.0,
        injected_cuts: vec![InjectedCut { tube: 1, slice: 45, gap: 2, dark_image: false }],
        ..SyntheticSpec::default()
    };
    let ds = generate_synthetic(&spec, 4).unwrap();
    let base: Arc<dyn VolumeSource> = Arc::new(ds.base.clone());
    let svc = CircuitService::detect_and_open(base, ds.somas.clone(), ds.synapses.clone(), PipelineParams::default()).unwrap();
    (router(Arc::new(svc)), ds)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(app: &Router, uri: &str) -> Value {
    let (status, body) = call(app, "GET", uri, None).await;
    assert_eq!(status, StatusCode::OK, "{uri}: {}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

fn broken(errors: &Value) -> Value {
    errors.as_array().unwrap().iter().find(|r| r["kind"] == "broken").cloned().expect("a broken roi")
}

#[tokio::test]
async fn cells_in_both_modes() {
    let (app, ds) = fixture();
    for mode in ["errors", "synapses"] {
        let cells = get_json(&app, &format!("/cells?mode={mode}")).await;
        let cells = cells.as_array().unwrap();
        assert_eq!(cells.len(), ds.somas.len());
        assert!(cells.iter().all(|c| (0.0..=1.0).contains(&c["shade"].as_f64().unwrap())));
    }
    let (status, _) = call(&app, "GET", "/cells?mode=bogus", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn circuit_tree_and_anchor() {
    let (app, ds) = fixture();
    let cell = ds.somas[0].cell_id;
    let doc = get_json(&app, &format!("/cells/{cell}/circuit")).await;
    assert_eq!(doc["cell_id"], cell);
    let clusters: Vec<u64> = doc["clusters"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    let tree = get_json(&app, &format!("/cells/{cell}/tree")).await;
    let mut order = Vec::new();
    for b in tree["children"][1]["children"].as_array().unwrap() {
        for c in b["children"].as_array().unwrap() {
            order.push(c["id"].as_u64().unwrap());
        }
    }
    assert_eq!(order, clusters);
    let a = get_json(&app, &format!("/cells/{cell}/branches/0/anchor?t=1e9")).await;
    assert!(a["t"].as_f64().unwrap() < 1e9);
    let (status, _) = call(&app, "GET", "/cells/12345/circuit", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn region_payload_decodes() {
    let (app, ds) = fixture();
    let (status, body) = call(&app, "GET", "/region?x=320&y=320&z=1440", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&body[..4], &MAGIC);
    assert!(body.len() > HEADER_LEN);
    let sub = decode_region(&body).unwrap();
    assert_eq!(sub.shape, [512, 512, 100]);
    let center = ds.base.meta().phys_to_voxel(circuitproof::PhysPoint::new(320.0, 320.0, 1440.0)).unwrap();
    let want = circuitproof::volume::read_region(&ds.base, center, [512, 512, 100]).unwrap();
    assert_eq!(sub, want);

    let (status, _) = call(&app, "GET", "/region?x=-1&y=0&z=0", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "GET", "/region?x=0&y=0&z=0&w=100000&h=100000&d=100000", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn slice_payload() {
    let (app, _) = fixture();
    let (status, body) = call(&app, "GET", "/slice?z=10&scale=2", None).await;
    assert_eq!(status, StatusCode::OK);
    let sub = decode_region(&body).unwrap();
    assert_eq!(sub.shape, [32, 32, 1]);
    assert_eq!(sub.origin, [0, 0, 10]);
    let (status, _) = call(&app, "GET", "/slice?z=10&scale=3", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn merge_edit_conflict_and_rollback() {
    let (app, _) = fixture();
    let errors = get_json(&app, "/errors?status=open").await;
    let roi = broken(&errors);
    let cell = roi["cell_id"].as_u64().unwrap();
    let cand: u64 = roi["evidence"]["candidate_label"].as_str().unwrap().parse().unwrap();
    let center = roi["center"].clone();
    let merge = json!({
        "author": "ann", "base_version": 0, "kind": "merge_objects",
        "payload": {"target_id": cell, "source_id": cand, "anchor_a": center, "anchor_b": center}
    });
    let (status, body) = call(&app, "POST", &format!("/cells/{cell}/edits"), Some(merge.clone())).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&body));
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["version"], 1);

    // Same base again is stale.
    let (status, body) = call(&app, "POST", &format!("/cells/{cell}/edits"), Some(merge)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["head"], 1);
    assert_eq!(get_json(&app, "/head").await["version"], 1);
    assert_eq!(get_json(&app, &format!("/cells/{cell}/head")).await["head"], 1);

    let resolve = json!({"author": "ann", "base_version": 1, "kind": "resolve_error", "payload": {"roi_id": roi["id"], "resolution": "dismissed"}});
    let (status, _) = call(&app, "POST", &format!("/cells/{cell}/edits"), Some(resolve)).await;
    assert_eq!(status, StatusCode::CREATED);
    let open = get_json(&app, &format!("/errors?cell={cell}&status=open")).await;
    assert!(open.as_array().unwrap().iter().all(|r| r["id"] != roi["id"]));
    let dismissed = get_json(&app, &format!("/errors?cell={cell}&status=dismissed")).await;
    assert_eq!(dismissed.as_array().unwrap().len(), 1);
    let old = get_json(&app, &format!("/errors?cell={cell}&status=open&version=0")).await;
    assert!(old.as_array().unwrap().iter().any(|r| r["id"] == roi["id"]));

    let (status, body) = call(&app, "POST", "/rollback", Some(json!({"author": "ann", "version": 0}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["version"], 3);
    let reopened = get_json(&app, &format!("/errors?cell={cell}&status=open")).await;
    assert!(reopened.as_array().unwrap().iter().any(|r| r["id"] == roi["id"]));
}

#[tokio::test]
async fn invalid_edits_are_rejected() {
    let (app, ds) = fixture();
    let cell = ds.somas[0].cell_id;
    let bad = json!({"author": "ann", "base_version": 0, "kind": "merge_objects",
        "payload": {"target_id": cell, "source_id": 9999, "anchor_a": {"x":0.0,"y":0.0,"z":0.0}, "anchor_b": {"x":0.0,"y":0.0,"z":0.0}}});
    let (status, _) = call(&app, "POST", &format!("/cells/{cell}/edits"), Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", &format!("/cells/{cell}/edits"), Some(json!({"author": "ann"}))).await;
    assert!(status.is_client_error());
    assert_eq!(get_json(&app, "/head").await["version"], 0);
}
