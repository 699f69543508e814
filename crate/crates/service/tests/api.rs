use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use hina_service::{router, AppState, ServiceConfig, SESSION_HEADER};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const LOG: &str = "student,partner,code,class\n\
s1,AI,Question,A\ns1,AI,Question,A\ns1,AI,Question,A\ns1,AI,Question,A\ns1,AI,Question,A\n\
s1,s2,Agree,A\ns2,s1,Agree,A\ns2,AI,Plan,A\ns3,AI,Plan,B\ns3,s1,Question,B\ns3,s2,Agree,B\n";

fn app_with(config: ServiceConfig) -> Router {
    router(Arc::new(AppState::new(config).unwrap()))
}

fn app() -> Router {
    app_with(ServiceConfig::default())
}

async fn send(app: &Router, method: &str, uri: &str, body: impl Into<Body>, session: Option<&str>) -> (StatusCode, Vec<u8>) {
    let mut request = Request::builder().method(method).uri(uri);
    if let Some(s) = session {
        request = request.header(SESSION_HEADER, s);
    }
    let response = app
        .clone()
        .oneshot(request.body(body.into()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call(app: &Router, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
    let text = if body.is_null() { String::new() } else { body.to_string() };
    let (status, bytes) = send(app, method, uri, text, None).await;
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn built(app: &Router, set2: &[&str]) -> String {
    let (status, bytes) = send(app, "POST", "/datasets", LOG, None).await;
    assert_eq!(status, StatusCode::OK);
    let upload: Value = serde_json::from_slice(&bytes).unwrap();
    let (status, built) = call(
        app,
        "POST",
        "/hins",
        json!({
            "dataset_id": upload["dataset_id"],
            "set1_columns": ["student"],
            "set2_columns": set2,
            "attribute_columns": [{"column": "class", "attach_to": "set1"}],
        }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{built}");
    built["hin_id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn healthz() {
    let (status, body) = send(&app(), "GET", "/healthz", Body::empty(), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"ok");
}

#[tokio::test]
async fn upload_build_metrics_round_trip() {
    let app = app();
    let id = built(&app, &["partner"]).await;
    let (status, graph) = call(&app, "GET", &format!("/hins/{id}"), Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(graph["set1"].as_array().unwrap().len(), 3);
    let (status, rows) = call(&app, "GET", &format!("/hins/{id}/metrics?group_attr=class"), Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let total: f64 = rows.iter().map(|r| r["quantity"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(rows[2]["quantity_group"].as_f64().unwrap(), 1.0);
}

#[tokio::test]
async fn prune_sets_are_nested_and_cached() {
    let app = app();
    let id = built(&app, &["code", "partner"]).await;
    let uri = format!("/hins/{id}/prune");
    let kept = |v: &Value| -> Vec<(u64, u64)> {
        v["edges"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["kept"].as_bool().unwrap())
            .map(|e| (e["source"].as_u64().unwrap(), e["target"].as_u64().unwrap()))
            .collect()
    };
    let (_, strict) = call(&app, "POST", &uri, json!({"alpha": 0.01, "fix_deg": "none"})).await;
    let (_, loose) = call(&app, "POST", &uri, json!({"alpha": 0.10, "fix_deg": "none"})).await;
    assert!(kept(&strict).iter().all(|e| kept(&loose).contains(e)));
    assert!(!kept(&loose).is_empty());

    let body = json!({"alpha": 0.05, "fix_deg": "set1"}).to_string();
    let (_, first) = send(&app, "POST", &uri, body.clone(), None).await;
    let (_, second) = send(&app, "POST", &uri, body, None).await;
    assert_eq!(first, second);
}

#[tokio::test]
async fn cluster_and_projection() {
    let app = app();
    let id = built(&app, &["code", "partner"]).await;
    let (status, result) = call(&app, "POST", &format!("/hins/{id}/cluster"), json!({"seed": 3})).await;
    assert_eq!(status, StatusCode::OK, "{result}");
    let groups = result["B"].as_u64().unwrap();
    assert_eq!(result["labels"].as_array().unwrap().len(), 3);
    assert_eq!(result["trace"][0][0].as_u64().unwrap(), 3);

    let (status, projection) = call(
        &app,
        "GET",
        &format!("/hins/{id}/clusters/0/projection?alpha=0.05&fix_deg=none&seed=3"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{projection}");
    assert_eq!(projection["cluster_id"], 0);
    assert!(projection["prune"]["edges"].is_array());
    assert!(projection["graph"]["set1"].is_array());

    let (status, body) = call(
        &app,
        "GET",
        &format!("/hins/{id}/clusters/{groups}/projection?seed=3"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body, json!({"error": "UnknownId"}));
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let (status, body) = call(&app, "GET", "/hins/h99", Value::Null).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body, json!({"error": "UnknownId"}));

    let id = built(&app, &["partner"]).await;
    let (status, body) = send(&app, "POST", &format!("/hins/{id}/prune"), "{not json", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{}", String::from_utf8_lossy(&body));

    let (status, body) = call(&app, "POST", &format!("/hins/{id}/prune"), json!({"alpha": 1.5})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "InvalidAlpha");

    let (status, body) = call(&app, "GET", &format!("/hins/{id}/metrics?group_attr=cohort"), Value::Null).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "MissingAttribute");

    let (status, body) = call(&app, "POST", &format!("/hins/{id}/cluster"), json!({"method": "spectral"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "UnknownMethod");

    let (status, body) = call(&app, "POST", "/hins", json!({"dataset_id": "d1", "set1_columns": ["student"], "set2_columns": ["nope"]})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "MissingColumn");

    let (status, _) = call(&app, "POST", "/hins", json!({"dataset_id": "d1", "set1_columns": [], "set2_columns": ["partner"]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = call(&app, "GET", &format!("/hins/{id}/clusters/x/projection"), Value::Null).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = app();
    let (_, upload) = send(&app, "POST", "/datasets", LOG, Some("alice")).await;
    let upload: Value = serde_json::from_slice(&upload).unwrap();
    let body = json!({"dataset_id": upload["dataset_id"], "set1_columns": ["student"], "set2_columns": ["partner"]}).to_string();
    let (status, _) = send(&app, "POST", "/hins", body.clone(), Some("bob")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, "POST", "/hins", body, Some("alice")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = send(&app, "GET", "/healthz", Body::empty(), Some("../etc")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = send(&app, "POST", "/datasets", LOG, Some("../etc")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn overrunning_the_budget_answers_503() {
    let app = app_with(ServiceConfig {
        cluster_budget: Duration::ZERO,
        ..ServiceConfig::default()
    });
    let mut log = String::from("a,b\n");
    for i in 0..300 {
        for j in 0..(i % 7 + 1) {
            log.push_str(&format!("u{i},v{}\n", (i * 31 + j * 17) % 40));
        }
    }
    let (_, upload) = send(&app, "POST", "/datasets", log, None).await;
    let upload: Value = serde_json::from_slice(&upload).unwrap();
    let (_, built) = call(&app, "POST", "/hins", json!({"dataset_id": upload["dataset_id"], "set1_columns": ["a"], "set2_columns": ["b"]})).await;
    let id = built["hin_id"].as_str().unwrap();
    let response = app
        .clone()
        .oneshot(Request::post(format!("/hins/{id}/cluster")).body(Body::from("{}")).unwrap())
        .await
        .unwrap();
    assert_eq!(response.status(), StatusCode::SERVICE_UNAVAILABLE);
    assert!(response.headers().contains_key("retry-after"));
}

#[tokio::test]
async fn persisted_state_survives_restart() {
    let dir = std::env::temp_dir().join(format!("hina-service-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let config = ServiceConfig {
        persist_dir: Some(dir.clone()),
        ..ServiceConfig::default()
    };
    let first = app_with(config.clone());
    let id = built(&first, &["partner"]).await;
    let (_, before) = send(&first, "GET", &format!("/hins/{id}"), Body::empty(), None).await;

    let second = app_with(config);
    let (status, after) = send(&second, "GET", &format!("/hins/{id}"), Body::empty(), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    // new ids continue after the restored ones
    let next = built(&second, &["partner"]).await;
    assert_ne!(next, id);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[tokio::test]
async fn serves_static_bundle() {
    let dir = std::env::temp_dir().join(format!("hina-static-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<html>ui</html>").unwrap();
    let app = app_with(ServiceConfig {
        static_dir: Some(dir.clone()),
        ..ServiceConfig::default()
    });
    let (status, body) = send(&app, "GET", "/index.html", Body::empty(), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>ui</html>");
    std::fs::remove_dir_all(&dir).unwrap();
}
