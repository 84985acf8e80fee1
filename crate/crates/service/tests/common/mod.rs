#![allow(dead_code)]

use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use safetynet_core::{
    BlurCause, BlurField, ChiefComplaint, ConsultRuntime, Demographics, DocumentationState, Gender, VitalSigns,
};
use safetynet_service::{FsyncPolicy, ServiceConfig};
use serde_json::{json, Value};

pub fn config(dir: &std::path::Path) -> ServiceConfig {
    ServiceConfig { port: 0, storage_path: dir.to_path_buf(), fsync: FsyncPolicy::Never, ..Default::default() }
}

pub fn at(min: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 3, 9, 0, 0).unwrap() + chrono::Duration::minutes(min)
}

/// Adult chart with full vitals: the reference rules answer green.
pub fn green_doc() -> DocumentationState {
    let mut d = DocumentationState::new(Demographics::new(34, Gender::Female));
    d.vitals = VitalSigns {
        temperature_celsius: Some(37.0),
        pulse_bpm: Some(80.0),
        bp_systolic_mmhg: Some(120),
        bp_diastolic_mmhg: Some(80),
        respiratory_rate_bpm: Some(16.0),
        spo2_percent: Some(98.0),
        weight_kg: Some(60.0),
        height_cm: Some(165.0),
        muac: None,
    };
    d.chief_complaints.push(ChiefComplaint::new("Headache"));
    d
}

/// No vitals at all: red at the vitals stage.
pub fn red_doc() -> DocumentationState {
    let mut d = DocumentationState::new(Demographics::new(40, Gender::Male));
    d.chief_complaints.push(ChiefComplaint::new("Fever"));
    d
}

/// Two-year-old without MUAC: yellow at the vitals stage.
pub fn yellow_doc() -> DocumentationState {
    let mut d = green_doc();
    d.demographics = Demographics::new(2, Gender::Male);
    d.vitals.bp_systolic_mmhg = None;
    d.vitals.bp_diastolic_mmhg = None;
    d
}

pub fn blur(visit: &str, field: BlurField, doc: &DocumentationState, min: i64) -> Value {
    json!({
        "visit_id": visit,
        "field": field,
        "snapshot": doc,
        "cause": BlurCause::UserNavigation,
        "timestamp": at(min),
    })
}

pub struct Client {
    pub base: String,
    pub http: reqwest::Client,
}

impl Client {
    pub fn new(addr: std::net::SocketAddr) -> Self {
        Self { base: format!("http://{addr}"), http: reqwest::Client::new() }
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn post_raw(&self, path: &str, body: &'static str) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    /// Polls a visit's alerts until `n` responses are logged.
    pub async fn wait_for(&self, visit: &str, n: usize) -> Value {
        for _ in 0..200 {
            let (status, v) = self.get(&format!("/visits/{visit}/alerts")).await;
            assert_eq!(status, 200, "{v}");
            if v["log"]["responses"].as_array().map_or(0, Vec::len) >= n {
                return v;
            }
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
        panic!("{visit} never reached {n} responses");
    }
}

/// Waits until no consult is in flight anywhere.
pub async fn idle(rt: &ConsultRuntime) {
    for _ in 0..500 {
        if rt.with_state(|s| s.visits.values().all(|v| v.in_flight() == 0)) {
            return;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    panic!("consults still in flight");
}
