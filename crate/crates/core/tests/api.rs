use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use cemis::api::{router, AppState, ADMIN_HEADER};
use cemis::demo::{write_demo_manifest, DemoPoolSizes};
use cemis::domain::StudyConfig;
use cemis::session::SteppingClock;
use cemis::storage::DataDir;

const ADMIN: &str = "s3cret";

struct Harness {
    _dir: tempfile::TempDir,
    app: Router,
}

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or(Value::Null)
    }

    fn category(&self) -> String {
        self.json()["error"]["category"].as_str().unwrap_or_default().to_string()
    }
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_manifest(&dir.path().join("pool"), 6, DemoPoolSizes::default()).unwrap();
        let data = DataDir::new(dir.path().join("data"));
        data.ingest_manifest("demo", &manifest).unwrap();
        let state = AppState::open(data, ADMIN, Arc::new(SteppingClock::new(1_700_000_000))).unwrap();
        Self { _dir: dir, app: router(Arc::new(state)) }
    }

    async fn send(&self, req: Request<Body>) -> Reply {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, headers, bytes }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.send(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    async fn post(&self, uri: &str, admin: Option<&str>, body: Value) -> Reply {
        let mut req = Request::post(uri).header(header::CONTENT_TYPE, "application/json");
        if let Some(t) = admin {
            req = req.header(ADMIN_HEADER, t);
        }
        self.send(req.body(Body::from(body.to_string())).unwrap()).await
    }

    async fn create_and_enroll(&self) -> String {
        let r =
            self.post("/api/studies", Some(ADMIN), serde_json::to_value(StudyConfig::new("demo", 9)).unwrap()).await;
        assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.json());
        let r = self.post("/api/studies/demo/experts", Some(ADMIN), json!({"years_experience": 11})).await;
        assert_eq!(r.status, StatusCode::CREATED);
        r.json()["session_token"].as_str().unwrap().to_string()
    }

    async fn submit(&self, token: &str, task_id: &Value, answer: Value) -> Reply {
        self.post(&format!("/api/sessions/{token}/responses"), None, json!({"task_id": task_id, "answer": answer}))
            .await
    }
}

#[tokio::test]
async fn health() {
    let h = Harness::new();
    let r = h.get("/api/healthz").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json(), json!({"status": "ok"}));
}

#[tokio::test]
async fn admin_routes_need_the_token() {
    let h = Harness::new();
    let config = serde_json::to_value(StudyConfig::new("demo", 9)).unwrap();
    for token in [None, Some("wrong")] {
        let r = h.post("/api/studies", token, config.clone()).await;
        assert_eq!(r.status, StatusCode::UNAUTHORIZED);
        assert_eq!(r.category(), "auth.invalid_token");
    }
    let r = h.get("/api/studies/demo/reports/table1").await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn create_study_errors() {
    let h = Harness::new();
    let r = h.post("/api/studies", Some(ADMIN), json!({"study_id": "demo"})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = h.post("/api/studies", Some(ADMIN), serde_json::to_value(StudyConfig::new("nopool", 1)).unwrap()).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND, "{:?}", r.json());
    h.create_and_enroll().await;
    let r = h.post("/api/studies", Some(ADMIN), serde_json::to_value(StudyConfig::new("demo", 9)).unwrap()).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.category(), "storage.conflict");
    let r = h.post("/api/studies/demo/experts", Some(ADMIN), json!({"years_experience": -1})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = h.post("/api/studies/missing/experts", Some(ADMIN), json!({"years_experience": 3})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_flow() {
    let h = Harness::new();
    let token = h.create_and_enroll().await;

    let state = h.get(&format!("/api/sessions/{token}/state")).await.json();
    assert_eq!(state["status"], "active");
    assert_eq!(state["progress"]["answered"], 0);
    let total = state["progress"]["total"].as_u64().unwrap();
    assert_eq!(total, 1208);

    let next = h.get(&format!("/api/sessions/{token}/task")).await.json();
    assert_eq!(next["status"], "active");
    let task = &next["task"];
    assert_eq!(task["procedure"], "A1");
    assert_eq!(task["payload"]["type"], "single");

    let r = h.submit(&token, &task["task_id"], json!(0)).await;
    assert_eq!(r.status, StatusCode::OK, "{:?}", r.json());
    let receipt = r.json();
    assert_eq!(receipt["replayed"], false);
    let id = receipt["response_id"].clone();

    // the same answer again is acknowledged without a second record
    let again = h.submit(&token, &task["task_id"], json!(0)).await.json();
    assert_eq!(again["replayed"], true);
    assert_eq!(again["response_id"], id);

    let r = h.submit(&token, &task["task_id"], json!(1)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.category(), "session.immutable");

    let r = h.submit(&token, &json!("A5-G01-T1"), json!(0)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.category(), "session.ordering");

    let current = &receipt["next"]["task"];
    let r = h.submit(&token, &current["task_id"], json!(7)).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = h.submit(&token, &current["task_id"], json!([0, 1])).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = h
        .post(
            &format!("/api/sessions/{token}/responses"),
            None,
            json!({"task_id": current["task_id"], "answer": 0, "truth": 1}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let state = h.get(&format!("/api/sessions/{token}/state")).await.json();
    assert_eq!(state["progress"]["answered"], 1);

    let r = h.get("/api/sessions/not-a-token/task").await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn images_are_gated_to_the_current_task() {
    let h = Harness::new();
    let token = h.create_and_enroll().await;
    let next = h.get(&format!("/api/sessions/{token}/task")).await.json();
    let handle = next["task"]["payload"]["image"].as_str().unwrap().to_string();
    let fetch = |handle: String, bearer: Option<String>| {
        let mut req = Request::get(format!("/api/images/{handle}"));
        if let Some(b) = bearer {
            req = req.header(header::AUTHORIZATION, format!("Bearer {b}"));
        }
        req.body(Body::empty()).unwrap()
    };

    let r = h.send(fetch(handle.clone(), Some(token.clone()))).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers[header::CONTENT_TYPE], "image/png");
    assert_eq!(r.headers[header::CACHE_CONTROL], "no-store");
    assert!(r.bytes.starts_with(b"\x89PNG"));

    assert_eq!(h.send(fetch(handle.clone(), None)).await.status, StatusCode::UNAUTHORIZED);
    assert_eq!(h.send(fetch(handle.clone(), Some("nope".into()))).await.status, StatusCode::UNAUTHORIZED);

    // once every task on the image is answered, it is no longer viewable
    let mut next = next;
    while next["task"]["payload"]["image"] == handle.as_str() {
        let answer = if next["task"]["multi_select"] == true { json!([0]) } else { json!(0) };
        next = h.submit(&token, &next["task"]["task_id"], answer).await.json()["next"].clone();
    }
    let r = h.send(fetch(handle.clone(), Some(token.clone()))).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert_eq!(r.category(), "auth.forbidden");
    let following = next["task"]["payload"]["image"].as_str().unwrap();

    // another expert cannot see someone else's current image
    let other = h.post("/api/studies/demo/experts", Some(ADMIN), json!({"years_experience": 2})).await.json();
    let other = other["session_token"].as_str().unwrap().to_string();
    let r = h.send(fetch(following.to_string(), Some(other))).await;
    assert_ne!(r.status, StatusCode::OK);
}

#[tokio::test]
async fn reports_over_http() {
    let h = Harness::new();
    let r = h.post("/api/studies", Some(ADMIN), serde_json::to_value(StudyConfig::new("demo", 9)).unwrap()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let admin_get = |uri: &str| Request::get(uri).header(ADMIN_HEADER, ADMIN).body(Body::empty()).unwrap();

    let r = h.send(admin_get("/api/studies/demo/reports/table1")).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.category(), "report.empty");

    let token = h.post("/api/studies/demo/experts", Some(ADMIN), json!({"years_experience": 8})).await.json();
    let token = token["session_token"].as_str().unwrap().to_string();
    for _ in 0..60 {
        let next = h.get(&format!("/api/sessions/{token}/task")).await.json();
        let answer = if next["task"]["multi_select"] == true { json!([0]) } else { json!(0) };
        assert_eq!(h.submit(&token, &next["task"]["task_id"], answer).await.status, StatusCode::OK);
    }

    let r = h.send(admin_get("/api/studies/demo/reports/table1")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers[header::CONTENT_TYPE], "application/json");
    let doc = r.json();
    assert_eq!(doc["kind"], "table1");
    assert_eq!(doc["study_id"], "demo");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    let mut columns: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let keys: Vec<&str> = doc["rows"][0].as_object().unwrap().keys().map(String::as_str).collect();
    columns.sort_unstable();
    assert_eq!(keys, columns);

    let r = h.send(admin_get("/api/studies/demo/reports/table2?format=csv")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.headers[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/csv"));
    let csv = String::from_utf8(r.bytes).unwrap();
    assert!(csv.starts_with("procedure,"), "{csv}");

    let r = h.send(admin_get("/api/studies/demo/reports/table9")).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = h.send(admin_get("/api/studies/demo/reports/table1?format=xml")).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = h.send(admin_get("/api/studies/other/reports/table1")).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}
