use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pairforge_annotation::{router, Workspace, WORKSPACE_KEY_HEADER};
use pairforge_core::text::Casing;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn app() -> (Router, Arc<Workspace>) {
    let ws = Arc::new(Workspace::in_memory(4).unwrap());
    (router(ws.clone(), None), ws)
}

fn swap_pairs(n: u64) -> Value {
    Value::Array(
        (0..n)
            .map(|i| {
                json!({
                    "id": i,
                    "s1": format!("source {i} went before target"),
                    "s2": format!("target {i} went before source"),
                    "provenance": "swap",
                })
            })
            .collect(),
    )
}

fn bt_pairs(n: u64, offset: u64) -> Value {
    Value::Array(
        (0..n)
            .map(|i| {
                json!({
                    "id": offset + i,
                    "s1": format!("they met in city {i} on monday"),
                    "s2": format!("on monday , they met in city {i}"),
                    "provenance": "backtranslation",
                })
            })
            .collect(),
    )
}

async fn vote(app: &Router, pair: u64, rater: &str, yes: bool) -> (StatusCode, Value) {
    let v = if yes { "paraphrase" } else { "non_paraphrase" };
    call(app, Method::POST, "/v1/judgments", Some(json!({"pair_id": pair, "rater_id": rater, "vote": v}))).await
}

#[tokio::test]
async fn enqueue_is_idempotent_and_phase_checked() {
    let (app, _) = app();
    let batch = json!({"phase": "correction", "pairs": swap_pairs(10)});
    let (s, v) = call(&app, Method::POST, "/v1/batches", Some(batch.clone())).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["created"], 10);
    let id = v["batch_id"].clone();

    let (s, v) = call(&app, Method::POST, "/v1/batches", Some(batch)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["created"].clone(), v["batch_id"].clone()), (json!(0), id));

    let (_, stats) = call(&app, Method::GET, "/v1/stats", None).await;
    assert_eq!(stats["pairs"], 10);
    assert_eq!(stats["by_state"]["correction"], 10);

    let mut mixed = swap_pairs(1).as_array().unwrap().clone();
    mixed.extend(bt_pairs(1, 50).as_array().unwrap().clone());
    let (s, v) = call(&app, Method::POST, "/v1/batches", Some(json!({"phase": "correction", "pairs": mixed}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "phase_mismatch");

    let (s, v) = call(&app, Method::POST, "/v1/batches", Some(json!({"phase": "judgment", "pairs": []}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("empty_batch")));

    let named = |pairs| json!({"batch_id": "b1", "phase": "judgment", "pairs": pairs});
    let (s, _) = call(&app, Method::POST, "/v1/batches", Some(named(bt_pairs(2, 100)))).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, v) = call(&app, Method::POST, "/v1/batches", Some(named(bt_pairs(3, 200)))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("duplicate_batch")));
}

#[tokio::test]
async fn correction_never_shows_the_source() {
    let (app, _) = app();
    call(&app, Method::POST, "/v1/batches", Some(json!({"phase": "correction", "pairs": swap_pairs(3)}))).await;
    for rater in ["c1", "c2"] {
        let (s, task) = call(&app, Method::GET, &format!("/v1/tasks/next?phase=correction&rater={rater}"), None).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(task["displayed"].as_array().unwrap().len(), 1);
        let body = task.to_string();
        assert!(!body.contains("source 0 went"), "{body}");
        assert!(body.contains("target 0 went before source"));
    }
    let (_, view) = call(&app, Method::GET, "/v1/pairs/0", None).await;
    assert_eq!(view["state"], "correction");
    assert!(!view.to_string().contains("source 0 went"));
    assert!(!view.to_string().contains("provenance"));
}

#[tokio::test]
async fn correction_actions() {
    let (app, _) = app();
    let pairs = json!([{"id": 1, "s1": "he ate an apple", "s2": "a apple ate he", "provenance": "swap"},
                       {"id": 2, "s1": "she saw it", "s2": "it saw she", "provenance": "swap"}]);
    call(&app, Method::POST, "/v1/batches", Some(json!({"phase": "correction", "pairs": pairs}))).await;

    let (s, v) = call(&app, Method::POST, "/v1/corrections", Some(json!({"pair_id": 1, "rater_id": "c", "action": "fix"}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("validation_error")));

    let fix = json!({"pair_id": 1, "rater_id": "c", "action": "fix", "fixed_text": "an apple ate he"});
    let (s, v) = call(&app, Method::POST, "/v1/corrections", Some(fix.clone())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["state"], "judgment");
    let shown: Vec<&str> = v["displayed"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert!(shown.contains(&"an apple ate he") && shown.contains(&"he ate an apple"));

    let (s, v) = call(&app, Method::POST, "/v1/corrections", Some(fix)).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("already_corrected")));

    let (s, v) = call(&app, Method::POST, "/v1/corrections", Some(json!({"pair_id": 2, "rater_id": "c", "action": "reject"}))).await;
    assert_eq!((s, v["state"].as_str()), (StatusCode::OK, Some("rejected")));
    let (s, v) = vote(&app, 2, "r1", true).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("wrong_state")));

    let (s, v) = call(&app, Method::POST, "/v1/corrections", Some(json!({"pair_id": 9, "rater_id": "c", "action": "accept"}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_pair")));

    let (s, task) = call(&app, Method::GET, "/v1/tasks/next?phase=judgment&rater=r1", None).await;
    assert_eq!((s, task["pair_id"].as_u64()), (StatusCode::OK, Some(1)));
    let (s, _) = call(&app, Method::GET, "/v1/tasks/next?phase=correction&rater=c", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn five_votes_then_quota() {
    let (app, _) = app();
    call(&app, Method::POST, "/v1/batches", Some(json!({"phase": "judgment", "pairs": bt_pairs(1, 7)}))).await;
    let (s, v) = call(&app, Method::GET, "/v1/pairs/7/judgment", None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("incomplete")));
    for (i, yes) in [true, true, true, true, false].into_iter().enumerate() {
        let (s, v) = vote(&app, 7, &format!("r{i}"), yes).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["votes"], i + 1);
        if i == 0 {
            let (s, v) = vote(&app, 7, "r0", false).await;
            assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("duplicate_rater")));
        }
    }
    let (s, v) = vote(&app, 7, "r9", true).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("quota_exceeded")));
    let (_, rec) = call(&app, Method::GET, "/v1/pairs/7/judgment", None).await;
    assert_eq!(rec["majority"], "paraphrase");
    assert_eq!(rec["agreement"], 0.8);
    assert_eq!(rec["kept"], true);
    let (_, stats) = call(&app, Method::GET, "/v1/stats", None).await;
    assert_eq!((stats["complete"].clone(), stats["kept"].clone()), (json!(1), json!(1)));
    assert_eq!(stats["corpus_agreement"], 0.8);
}

#[tokio::test]
async fn five_raters_ten_pairs() {
    let (app, ws) = app();
    call(&app, Method::POST, "/v1/batches", Some(json!({"phase": "judgment", "pairs": bt_pairs(10, 0)}))).await;
    // rater r votes yes on pair p unless (p + r) % 4 == 0
    let raters = ["r0", "r1", "r2", "r3", "r4"];
    for (ri, rater) in raters.iter().enumerate() {
        loop {
            let (s, task) = call(&app, Method::GET, &format!("/v1/tasks/next?phase=judgment&rater={rater}"), None).await;
            if s == StatusCode::NO_CONTENT {
                break;
            }
            assert_eq!(task["displayed"].as_array().unwrap().len(), 2);
            let p = task["pair_id"].as_u64().unwrap();
            let (s, _) = vote(&app, p, rater, !(p as usize + ri).is_multiple_of(4)).await;
            assert_eq!(s, StatusCode::OK);
        }
    }
    let records = ws.records();
    assert_eq!(records.len(), 10);
    for r in &records {
        let p: usize = r.pair_id.parse().unwrap();
        let no = (0..5).filter(|ri| (p + ri).is_multiple_of(4)).count();
        assert_eq!(r.kept, no.max(5 - no) >= 4, "pair {p}");
    }
    let export = ws.labeled_pairs(Casing::Lower).unwrap();
    assert_eq!(export.bt_pairs.len(), records.iter().filter(|r| r.kept).count());
    let (s, _) = call(&app, Method::GET, "/v1/tasks/next?phase=judgment&rater=r5", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn workspace_key() {
    let ws = Arc::new(Workspace::in_memory(4).unwrap());
    let app = router(ws, Some("sesame".into()));
    let (s, v) = call(&app, Method::GET, "/v1/stats", None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNAUTHORIZED, Some("unauthorized")));
    let req = Request::get("/v1/stats").header(WORKSPACE_KEY_HEADER, "sesame").body(Body::empty()).unwrap();
    assert_eq!(app.oneshot(req).await.unwrap().status(), StatusCode::OK);
}

#[test]
fn jsonl_export_import_and_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ws.db");
    let ws = Workspace::open(&path, 4).unwrap();
    let batch: pairforge_annotation::BatchRequest =
        serde_json::from_value(json!({"phase": "judgment", "pairs": bt_pairs(3, 0)})).unwrap();
    ws.enqueue_batch(batch).unwrap();
    for p in 0..3u64 {
        for r in 0..5 {
            let sub = serde_json::from_value(json!({"pair_id": p, "rater_id": format!("r{r}"), "vote": if r < 3 { "paraphrase" } else { "non_paraphrase" }})).unwrap();
            ws.submit_judgment(sub).unwrap();
        }
    }
    let mut log = Vec::new();
    ws.export_jsonl(&mut log).unwrap();
    assert_eq!(String::from_utf8_lossy(&log).lines().count(), 16);
    let stats = ws.stats();
    drop(ws);

    let copy = Workspace::in_memory(4).unwrap();
    assert_eq!(copy.import_jsonl(&log[..]).unwrap(), 16);
    assert_eq!(copy.stats(), stats);
    assert_eq!(Workspace::open(&path, 4).unwrap().stats(), stats);
    assert_eq!(stats.corpus_agreement, Some(0.6));
    assert_eq!(stats.corpus_agreement_kept, None);
}
