use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sysgame::session::http::router;
use sysgame::session::Sessions;
use tower::ServiceExt;

const PROT: &str = "export prot; import read;
    decl prot() { local s, k, x; s = new(); k = new(); x = read(); if (*x == *k) then *s else *k }";

struct Client {
    app: axum::Router,
}

impl Client {
    fn new() -> Self {
        Client { app: router(Arc::new(Sessions::new())) }
    }

    async fn send(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, text) = self.send(method, uri, body).await;
        (s, serde_json::from_str(&text).unwrap_or(Value::Null))
    }

    async fn create(&self, source: &str) -> String {
        let (s, v) = self.json("POST", "/sessions", Some(json!({ "source": source }))).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v["id"].as_str().unwrap().to_string()
    }
}

#[tokio::test]
async fn create_and_view() {
    let c = Client::new();
    let (s, v) = c.json("POST", "/sessions", Some(json!({ "source": PROT }))).await;
    assert_eq!(s, StatusCode::CREATED);
    let view = &v["view"];
    for key in ["turn", "publicNames", "visibleStore", "storedContinuations", "lastLabels", "menu", "historyTree", "disclosures"] {
        assert!(view.get(key).is_some(), "missing {key}");
    }
    let id = v["id"].as_str().unwrap();
    let (s, again) = c.json("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&again, view);
    let (_, menu) = c.json("GET", &format!("/sessions/{id}/moves"), None).await;
    assert!(menu.as_array().unwrap().contains(&json!({"kind":"call","fn":"f0","value":[],"k":"k0","store":{}})));
}

#[tokio::test]
async fn malformed_source_is_unprocessable() {
    let c = Client::new();
    let (s, v) = c.json("POST", "/sessions", Some(json!({ "source": "export f; decl f( {" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["kind"], "SourceError");
    assert_eq!(v["error"]["pos"]["line"], 1);
}

#[tokio::test]
async fn attack_over_http() {
    let c = Client::new();
    let id = c.create(PROT).await;
    let moves = format!("/sessions/{id}/moves");
    let (s, _) = c.json("POST", &moves, Some(json!({"kind":"call","fn":"f0","value":[],"k":"k0","store":{}}))).await;
    assert_eq!(s, StatusCode::OK);
    let (_, v) = c.json("POST", &moves, Some(json!({"kind":"ret","value":"l5","k":"k1","store":{"l5":0}}))).await;
    assert_eq!(v["lastLabels"][1]["value"], "l4");
    let (_, v) = c.json("POST", &moves, Some(json!({"kind":"ret","value":"l4","k":"k1","store":{"l4":0,"l5":0}}))).await;
    assert_eq!(v["disclosures"], json!(["l3"]));
    assert!(v["publicNames"].as_array().unwrap().contains(&json!("l3")));

    let (s, report) = c.json("GET", &format!("/sessions/{id}/verify"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(report["ok"], true);
    let (s, log) = c.send("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(sysgame::wire::parse_script(&log).unwrap().len(), 3);
}

#[tokio::test]
async fn rejected_moves_carry_an_explanation() {
    let c = Client::new();
    let id = c.create(PROT).await;
    let moves = format!("/sessions/{id}/moves");
    let (s, v) = c.json("POST", &moves, Some(json!({"kind":"ret","value":0,"k":"k0","store":{}}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["kind"], "UnknownContinuation");
    let (s, v) = c.json("POST", &moves, Some(json!({"kind":"call","value":0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["kind"], "MalformedMove");
}

#[tokio::test]
async fn cursor_branches_and_sinks() {
    let c = Client::new();
    let id = c.create("export f; decl f(p) { return *p; }").await;
    let moves = format!("/sessions/{id}/moves");
    let cursor = format!("/sessions/{id}/cursor");
    let (_, v) = c.json("POST", &moves, Some(json!({"kind":"call","fn":"f0","value":1,"k":"k0","store":{}}))).await;
    assert_eq!(v["turn"], "halted");
    let (s, v) = c.json("POST", &moves, Some(json!({"kind":"call","fn":"f0","value":1,"k":"k1","store":{}}))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    let (s, v) = c.json("POST", &cursor, Some(json!({"node": 0}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["turn"], "system");
    c.json("POST", &moves, Some(json!({"kind":"call","fn":"f0","value":"l0","k":"k0","store":{"l0":7}}))).await;
    let (_, v) = c.json("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["historyTree"]["nodes"][0]["children"], json!([1, 2]));
    assert_eq!(v["lastLabels"][1]["value"], 7);
    let (s, _) = c.json("POST", &cursor, Some(json!({"node": 42}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = c.json("GET", "/sessions/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}
