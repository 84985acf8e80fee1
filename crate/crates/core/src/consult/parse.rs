use chrono::{DateTime, Utc};
use serde_json::{json, Map, Value};

use super::gateway::RawModelOutput;
use crate::domain::{ConsultResponse, Severity, VisitId, WorkflowStage};
use crate::error::ConsultError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub severity: Severity,
    pub reason: String,
    pub action: String,
}

/// Call metadata that the model output does not carry.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseContext {
    pub visit_id: VisitId,
    pub sequence_no: u64,
    pub shadow: bool,
    pub model_id: String,
    pub timestamp: DateTime<Utc>,
}

pub fn parse(
    raw: &RawModelOutput,
    stage: WorkflowStage,
    ctx: &ResponseContext,
) -> Result<ConsultResponse, ConsultError> {
    let v = parse_verdict(&raw.text)?;
    Ok(ConsultResponse {
        visit_id: ctx.visit_id.clone(),
        stage,
        severity: Some(v.severity),
        error: None,
        reason: v.reason,
        action: v.action,
        shadow: ctx.shadow,
        model_id: ctx.model_id.clone(),
        latency_ms: raw.latency_ms,
        sequence_no: ctx.sequence_no,
        timestamp: ctx.timestamp,
    })
}

/// Canonical contract payload for a verdict.
pub fn render_contract(severity: Severity, reason: &str, action: &str) -> String {
    json!({
        "Response": [{ "Severity": severity.as_str(), "Reason": reason }],
        "Recommendations": [{ "Severity": severity.as_str(), "Action": action }],
    })
    .to_string()
}

pub fn parse_verdict(text: &str) -> Result<Verdict, ConsultError> {
    let body = merge_adjacent_strings(strip_fences(text));
    let value: Value = serde_json::from_str(&body).map_err(|e| ConsultError::Parse(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| violation("top level is not an object"))?;

    let (resp_sev, reason) = single_entry(obj, "Response", "Reason")?;
    let (rec_sev, action) = single_entry(obj, "Recommendations", "Action")?;
    if resp_sev != rec_sev {
        return Err(violation(format!("Response is {resp_sev} but Recommendations is {rec_sev}")));
    }
    Ok(Verdict { severity: resp_sev, reason, action })
}

fn violation(msg: impl Into<String>) -> ConsultError {
    ConsultError::ContractViolation(msg.into())
}

fn get_ci<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).or_else(|| obj.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v))
}

fn single_entry(obj: &Map<String, Value>, list: &str, text_key: &str) -> Result<(Severity, String), ConsultError> {
    let arr = get_ci(obj, list).and_then(Value::as_array).ok_or_else(|| violation(format!("missing {list} array")))?;
    if arr.len() != 1 {
        return Err(violation(format!("{list} has {} entries; exactly one severity is allowed", arr.len())));
    }
    let entry = arr[0].as_object().ok_or_else(|| violation(format!("{list} entry is not an object")))?;
    let sev = get_ci(entry, "Severity")
        .and_then(Value::as_str)
        .ok_or_else(|| violation(format!("{list} entry lacks Severity")))?;
    let severity: Severity = sev.parse().map_err(|_| violation(format!("unknown severity {sev:?}")))?;
    let text = get_ci(entry, text_key).and_then(Value::as_str).map(str::trim).unwrap_or_default();
    if text.is_empty() {
        return Err(violation(format!("{list} entry has an empty {text_key}")));
    }
    Ok((severity, text.to_string()))
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.split_once('\n').map(|(_, body)| body).unwrap_or("");
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Joins string literals separated only by whitespace (`"a" "b"` → `"ab"`).
/// That shape never occurs in valid JSON, so well-formed input passes through.
fn merge_adjacent_strings(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let mut in_string = false;
    while i < chars.len() {
        let c = chars[i];
        if in_string {
            if c == '\\' && i + 1 < chars.len() {
                out.push(c);
                out.push(chars[i + 1]);
                i += 2;
                continue;
            }
            if c == '"' {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '"' {
                    i = j + 1;
                    continue;
                }
                in_string = false;
            }
            out.push(c);
        } else {
            if c == '"' {
                in_string = true;
            }
            out.push(c);
        }
        i += 1;
    }
    out
}
