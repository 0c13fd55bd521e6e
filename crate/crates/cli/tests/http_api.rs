use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use elicit_cli::server::router;
use elicit_core::session::{Api, SessionStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const HIV: &str = "var H : h > no_h\nvar N : n > no_n\nvar I : i > no_i\nvar C : c > no_c\n\
                   edge N -> H\nedge I -> H\nedge C -> H\nedge I -> C\n";

struct Client {
    app: axum::Router,
}

impl Client {
    fn new(store: SessionStore) -> Self {
        Self {
            app: router(Api::new(Arc::new(store))),
        }
    }

    async fn call(&self, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .body(body.into())
            .unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call(Method::GET, uri, Body::empty()).await
    }

    async fn post(&self, uri: &str, body: &str) -> (StatusCode, Value) {
        self.call(Method::POST, uri, body.to_string()).await
    }
}

fn small_run() -> String {
    json!({"n_target": 300, "max_draws": 300000, "seed": 11, "bins": 10}).to_string()
}

#[tokio::test]
async fn elicitation_loop() {
    let c = Client::new(SessionStore::in_memory());
    let (status, created) = c.post("/sessions", HIV).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_string();

    let (status, snap) = c.get(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["k"], 16);
    assert_eq!(snap["variables"].as_array().unwrap().len(), 4);
    assert_eq!(snap["edges"].as_array().unwrap().len(), 4);
    assert_eq!(snap["schema_version"], 1);

    let (status, snap) = c
        .post(&format!("/sessions/{id}/statements"), "P(i) > P(n)")
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["statements"].as_array().unwrap().len(), 1);
    assert_eq!(snap["statements"][0]["id"], "s1");
    assert_eq!(snap["statements"][0]["robustness_class"], "comparison");
    assert_eq!(snap["results_current"], false);

    let (status, err) = c.get(&format!("/sessions/{id}/bounds")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "not_run");

    let (status, snap) = c.post(&format!("/sessions/{id}/run"), &small_run()).await;
    assert_eq!(status, StatusCode::OK, "{snap}");
    assert_eq!(snap["results_current"], true);
    assert_eq!(snap["run"]["verdict"], "consistent-witnessed");
    assert_eq!(snap["run"]["accepted"], 300);

    let (status, res) = c
        .get(&format!("/sessions/{id}/results?query=P(i)&bins=10"))
        .await;
    assert_eq!(status, StatusCode::OK);
    let dist = &res["distribution"];
    assert_eq!(dist["bin_count"], 10);
    let total: f64 = dist["densities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(res["bounds"]["status"], "feasible");
    assert_eq!(res["report"]["verdict"], "consistent-witnessed");

    let (status, res) = c
        .get(&format!(
            "/sessions/{id}/results?query=P(h%20%7C%20~n,~i,~c)&bins=5"
        ))
        .await;
    assert_eq!(status, StatusCode::OK, "{res}");
    assert_eq!(
        res["distribution"]["bin_counts"].as_array().unwrap().len(),
        5
    );

    let (status, bounds) = c.get(&format!("/sessions/{id}/bounds")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bounds["constituents"].as_array().unwrap().len(), 16);

    let (status, cliques) = c.get(&format!("/sessions/{id}/cliques")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(cliques["cliques"].as_array().unwrap().len(), 1);
    assert_eq!(cliques["family_check"], true);

    let (status, cons) = c.get(&format!("/sessions/{id}/consistency")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(cons["verdict"], "consistent-witnessed");
    assert!(cons["suggestions"].as_array().unwrap().is_empty());

    // a mutation marks results stale until the next run
    let (_, snap) = c
        .post(&format!("/sessions/{id}/statements"), "S+(N,H)")
        .await;
    assert_eq!(snap["statements"].as_array().unwrap().len(), 2);
    assert_eq!(snap["results_current"], false);
    let (status, err) = c.get(&format!("/sessions/{id}/results?query=P(i)")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "stale_results");

    let (status, snap) = c
        .call(
            Method::DELETE,
            &format!("/sessions/{id}/statements/s2"),
            Body::empty(),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["statements"].as_array().unwrap().len(), 1);
    // removing the statement restores the digest the run was computed from
    assert_eq!(snap["results_current"], true);
}

#[tokio::test]
async fn inconsistent_session_suggests_revision() {
    let c = Client::new(SessionStore::in_memory());
    let (_, created) = c
        .post(
            "/sessions",
            &format!("{HIV}P(h) = 0.2\nP(h) = 0.3\nS+(N,H)\n"),
        )
        .await;
    let id = created["id"].as_str().unwrap();
    let (status, snap) = c.post(&format!("/sessions/{id}/run"), "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["run"]["verdict"], "infeasible-proven");

    let (_, cons) = c.get(&format!("/sessions/{id}/consistency")).await;
    assert_eq!(cons["verdict"], "infeasible-proven");
    assert_eq!(cons["evidence"][0]["type"], "lp-infeasible");
    let suggested: Vec<&str> = cons["suggestions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["statement"].as_str().unwrap())
        .collect();
    assert_eq!(suggested, vec!["s2", "s1"]);

    let (_, bounds) = c.get(&format!("/sessions/{id}/bounds")).await;
    assert_eq!(bounds["status"], "infeasible");
    let (status, err) = c.get(&format!("/sessions/{id}/results?query=P(h)")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "samples_unavailable");

    let (_, snap) = c
        .call(
            Method::DELETE,
            &format!("/sessions/{id}/statements/s2"),
            Body::empty(),
        )
        .await;
    assert_eq!(snap["results_current"], false);
    let (status, err) = c.get(&format!("/sessions/{id}/consistency")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "stale_results");
}

#[tokio::test]
async fn errors_have_stable_codes() {
    let c = Client::new(SessionStore::in_memory());
    let (status, err) = c.get("/sessions/sess-404").await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("session_not_found"))
    );

    let (status, err) = c.post("/sessions", "var A : a > b\nvar A : c > d\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "parse_error");

    let (status, err) = c.post("/sessions", &format!("{HIV}P(q) = 0.2\n")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "unknown_name");
    assert_eq!(err["line"], 9);

    let (_, created) = c.post("/sessions", HIV).await;
    let id = created["id"].as_str().unwrap();
    let (status, err) = c
        .post(&format!("/sessions/{id}/statements"), "S+(C,N)")
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "validation_error");

    let (status, err) = c
        .call(
            Method::DELETE,
            &format!("/sessions/{id}/statements/s9"),
            Body::empty(),
        )
        .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("statement_not_found"))
    );

    let (status, err) = c
        .post(&format!("/sessions/{id}/run"), r#"{"n_target": 0}"#)
        .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("invalid_argument"))
    );
    let (status, err) = c.post(&format!("/sessions/{id}/run"), "{not json").await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("invalid_argument"))
    );

    c.post(&format!("/sessions/{id}/run"), &small_run()).await;
    let (status, err) = c
        .get(&format!("/sessions/{id}/results?query=P(h)&bins=0"))
        .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("invalid_argument"))
    );
    let (status, err) = c.get(&format!("/sessions/{id}/results?query=P(zz)")).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("unknown_name"))
    );
}

#[tokio::test]
async fn persistent_store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let c = Client::new(SessionStore::persistent(dir.path()).unwrap());
        let (_, created) = c.post("/sessions", &format!("{HIV}P(i) > P(n)\n")).await;
        let id = created["id"].as_str().unwrap().to_string();
        c.post(&format!("/sessions/{id}/run"), &small_run()).await;
        id
    };
    let file = dir.path().join(format!("{id}.json"));
    let before = std::fs::read_to_string(&file).unwrap();
    let c = Client::new(SessionStore::persistent(dir.path()).unwrap());
    let (status, snap) = c.get(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["results_current"], true);
    let (status, _) = c
        .get(&format!(
            "/sessions/{id}/results?query=P(h%20%7C%20n)&bins=10"
        ))
        .await;
    assert_eq!(status, StatusCode::OK);
    // a cached query is the only change on disk
    let after = std::fs::read_to_string(&file).unwrap();
    assert_ne!(before, after);
    assert_eq!(before.lines().next(), after.lines().next());
}
