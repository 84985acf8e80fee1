//! Deployment analytics over visit logs. Every series is bucketed by the ISO
//! week of the visit start and split by arm; Mixed visits never enter a series.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;

use chrono::{DateTime, Datelike, Duration, NaiveDate, Utc, Weekday};
use serde::{Serialize, Serializer};

use safetynet_stats::{bootstrap_ci, median, quantile};

use crate::alert::Classifier;
use crate::domain::{Group, Thumb, VisitAlertLog, VisitId, VisitRecord, WorkflowStage};
use crate::engine::EngineState;

pub const DEFAULT_QUANTILES: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];
pub const DEFAULT_MAX_CALLS: usize = 12;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// The per-visit facts the metrics read.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVisit {
    pub visit_id: VisitId,
    pub group: Group,
    pub started_at: DateTime<Utc>,
    pub clinician_id: Option<String>,
    pub attending_minutes: Option<f64>,
    pub note_length: usize,
    pub log: VisitAlertLog,
}

impl From<&VisitRecord> for MetricVisit {
    fn from(v: &VisitRecord) -> Self {
        Self {
            visit_id: v.visit_id.clone(),
            group: v.group,
            started_at: v.started_at,
            clinician_id: v.clinician_ids.first().cloned(),
            attending_minutes: Some(v.attending_minutes),
            note_length: v.documentation.note_length_chars(),
            log: v.alert_log.clone(),
        }
    }
}

/// Visits known to an engine. A visit without an explicit group counts as
/// NonAi when shadowed and Ai otherwise.
pub fn from_engine(state: &EngineState) -> Vec<MetricVisit> {
    state
        .visits
        .iter()
        .map(|(id, s)| MetricVisit {
            visit_id: id.clone(),
            group: s.meta.group.unwrap_or(if s.meta.shadow { Group::NonAi } else { Group::Ai }),
            started_at: s.meta.started_at,
            clinician_id: s.meta.clinician_ids.first().cloned(),
            attending_minutes: None,
            note_length: s.doc.as_ref().map_or(0, |d| d.note_length_chars()),
            log: s.log.clone(),
        })
        .collect()
}

/// ISO-8601 week, rendered `2024-W07`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Week {
    pub year: i32,
    pub week: u32,
}

impl Week {
    pub fn of(t: DateTime<Utc>) -> Self {
        let w = t.iso_week();
        Self { year: w.year(), week: w.week() }
    }

    pub fn monday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon).expect("constructed from a real date")
    }

    pub fn next(self) -> Self {
        let d = self.monday() + Duration::days(7);
        let w = d.iso_week();
        Self { year: w.year(), week: w.week() }
    }

    /// Every week from `first` to `last` inclusive.
    pub fn span(first: Week, last: Week) -> Vec<Week> {
        let mut out = vec![first];
        let mut w = first;
        while w < last {
            w = w.next();
            out.push(w);
        }
        out
    }
}

impl fmt::Display for Week {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

impl Serialize for Week {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

const ARMS: [Group; 2] = [Group::Ai, Group::NonAi];

/// Included visits bucketed by (week, arm), with every week between the first
/// and last visit present for both arms.
fn buckets(visits: &[MetricVisit]) -> BTreeMap<(Week, Group), Vec<&MetricVisit>> {
    let included: Vec<&MetricVisit> = visits.iter().filter(|v| v.group != Group::Mixed).collect();
    let mut out = BTreeMap::new();
    let (Some(first), Some(last)) =
        (included.iter().map(|v| Week::of(v.started_at)).min(), included.iter().map(|v| Week::of(v.started_at)).max())
    else {
        return out;
    };
    for w in Week::span(first, last) {
        for g in ARMS {
            out.insert((w, g), Vec::new());
        }
    }
    for v in included {
        out.get_mut(&(Week::of(v.started_at), v.group)).expect("span covers every visit").push(v);
    }
    out
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub week: Week,
    pub group: Group,
    pub n: usize,
    pub events: usize,
    /// Absent when `n` is zero.
    pub rate: Option<f64>,
}

pub fn weekly_rate(visits: &[MetricVisit], classifier: Classifier, stages: &[WorkflowStage]) -> Vec<RatePoint> {
    buckets(visits)
        .into_iter()
        .map(|((week, group), vs)| {
            let events = vs.iter().filter(|v| classifier.classify(&v.log, stages)).count();
            RatePoint { week, group, n: vs.len(), events, rate: ratio(events, vs.len()) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantilePoint {
    pub week: Week,
    pub group: Group,
    pub quantile: f64,
    pub clinicians: usize,
    pub value: Option<f64>,
}

/// Per clinician-week classified rate, then the requested quantiles of those
/// rates per (week, arm). A visit is attributed to its first clinician.
pub fn clinician_quantiles(
    visits: &[MetricVisit],
    classifier: Classifier,
    stages: &[WorkflowStage],
    quantiles: &[f64],
) -> Vec<QuantilePoint> {
    let mut out = Vec::new();
    for ((week, group), vs) in buckets(visits) {
        let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for v in vs.iter().filter(|v| v.clinician_id.is_some()) {
            let e = per.entry(v.clinician_id.as_deref().unwrap_or_default()).or_default();
            e.0 += usize::from(classifier.classify(&v.log, stages));
            e.1 += 1;
        }
        let rates: Vec<f64> = per.values().map(|&(k, n)| k as f64 / n as f64).collect();
        for &q in quantiles {
            out.push(QuantilePoint {
                week,
                group,
                quantile: q,
                clinicians: rates.len(),
                value: quantile(&rates, q).ok(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttendingPoint {
    pub group: Group,
    pub calls: usize,
    pub n: usize,
    pub median_minutes: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Median attending time by number of consult calls (all colours and error
/// entries), for visits with at most `max_calls` calls. Empty buckets are
/// omitted. The bootstrap seed is derived from the bucket so output is stable.
pub fn attending_time_by_triggers(visits: &[MetricVisit], max_calls: usize, seed: u64) -> Vec<AttendingPoint> {
    let mut by: BTreeMap<(Group, usize), Vec<f64>> = BTreeMap::new();
    for v in visits.iter().filter(|v| v.group != Group::Mixed) {
        let calls = v.log.responses.len();
        if let (Some(m), true) = (v.attending_minutes, calls <= max_calls) {
            by.entry((v.group, calls)).or_default().push(m);
        }
    }
    by.into_iter()
        .map(|((group, calls), xs)| {
            let med = median(&xs).expect("bucket is non-empty");
            let bucket_seed = seed ^ ((calls as u64) << 8) ^ (group as u64);
            let (lo, hi) = bootstrap_ci(
                &xs,
                |s| median(s).expect("resample is non-empty"),
                BOOTSTRAP_RESAMPLES,
                0.95,
                bucket_seed,
            )
            .expect("bucket is non-empty");
            AttendingPoint { group, calls, n: xs.len(), median_minutes: med, ci_low: lo, ci_high: hi }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteLengthPoint {
    pub week: Week,
    pub group: Group,
    pub n: usize,
    pub median_chars: Option<f64>,
}

pub fn median_note_length(visits: &[MetricVisit]) -> Vec<NoteLengthPoint> {
    buckets(visits)
        .into_iter()
        .map(|((week, group), vs)| {
            let lens: Vec<f64> = vs.iter().map(|v| v.note_length as f64).collect();
            NoteLengthPoint { week, group, n: vs.len(), median_chars: median(&lens).ok() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThumbsPoint {
    pub week: Week,
    pub group: Group,
    pub responses: usize,
    pub with_feedback: usize,
    pub down: usize,
    /// Feedback per visible, coloured response.
    pub feedback_rate: Option<f64>,
    /// Thumbs-down share among responses with feedback.
    pub down_rate: Option<f64>,
}

pub fn thumbs_rates(visits: &[MetricVisit]) -> Vec<ThumbsPoint> {
    buckets(visits)
        .into_iter()
        .map(|((week, group), vs)| {
            let mut responses = 0;
            let mut with_feedback = 0;
            let mut down = 0;
            for v in vs {
                let visible: BTreeSet<_> = v
                    .log
                    .responses
                    .iter()
                    .filter(|r| !r.shadow && r.severity.is_some())
                    .map(|r| r.reference())
                    .collect();
                responses += visible.len();
                for f in v.log.feedback.iter().filter(|f| visible.contains(&f.response)) {
                    with_feedback += 1;
                    down += usize::from(f.thumb == Thumb::Down);
                }
            }
            ThumbsPoint {
                week,
                group,
                responses,
                with_feedback,
                down,
                feedback_rate: ratio(with_feedback, responses),
                down_rate: ratio(down, with_feedback),
            }
        })
        .collect()
}

/// Writes rows with a header line; `None` becomes an empty field.
pub fn write_csv<T: Serialize, W: io::Write>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ConsultResponse, Severity};
    use chrono::TimeZone;

    fn at(day: u32) -> DateTime<Utc> {
        // 2024-01-01 is a Monday (ISO week 1).
        Utc.with_ymd_and_hms(2024, 1, day, 9, 0, 0).unwrap()
    }

    fn resp(visit: &str, stage: WorkflowStage, seq: u64, sev: Severity) -> ConsultResponse {
        ConsultResponse {
            visit_id: visit.into(),
            stage,
            severity: Some(sev),
            error: None,
            reason: "r".into(),
            action: "a".into(),
            shadow: false,
            model_id: "m".into(),
            latency_ms: 1,
            sequence_no: seq,
            timestamp: at(1),
        }
    }

    fn visit(id: &str, group: Group, day: u32, clinician: &str, finals: &[Severity]) -> MetricVisit {
        let mut log = VisitAlertLog::new(id);
        for (i, &s) in finals.iter().enumerate() {
            log.responses.push(resp(id, WorkflowStage::Diagnosis, i as u64 + 1, s));
        }
        MetricVisit {
            visit_id: id.into(),
            group,
            started_at: at(day),
            clinician_id: Some(clinician.into()),
            attending_minutes: Some(10.0),
            note_length: 500,
            log,
        }
    }

    #[test]
    fn week_rendering_and_span() {
        assert_eq!(Week::of(at(1)).to_string(), "2024-W01");
        let dec = Week::of(Utc.with_ymd_and_hms(2020, 12, 31, 0, 0, 0).unwrap());
        assert_eq!(dec.to_string(), "2020-W53");
        assert_eq!(dec.next().to_string(), "2021-W01");
        assert_eq!(Week::span(Week::of(at(1)), Week::of(at(22))).len(), 4);
    }

    #[test]
    fn alternating_finals_give_half() {
        let vs: Vec<_> = (0..10)
            .map(|i| {
                let sev = if i % 2 == 0 { Severity::Red } else { Severity::Green };
                visit(&format!("v{i}"), Group::Ai, 2, "c", &[sev])
            })
            .collect();
        let s = weekly_rate(&vs, Classifier::LeftInRed, &WorkflowStage::ALL);
        let ai: Vec<_> = s.iter().filter(|p| p.group == Group::Ai).collect();
        assert_eq!(ai.len(), 1);
        assert_eq!(ai[0].rate, Some(0.5));
        let non = s.iter().find(|p| p.group == Group::NonAi).unwrap();
        assert_eq!((non.n, non.rate), (0, None));
    }

    #[test]
    fn gap_weeks_and_mixed_exclusion() {
        let vs = vec![
            visit("a", Group::Ai, 1, "c", &[Severity::Red]),
            visit("b", Group::Ai, 22, "c", &[Severity::Red]),
            visit("m", Group::Mixed, 8, "c", &[Severity::Red]),
        ];
        let s = weekly_rate(&vs, Classifier::StartedRed, &WorkflowStage::ALL);
        assert_eq!(s.len(), 8);
        assert_eq!(s.iter().map(|p| p.n).sum::<usize>(), 2);
        let w2 = s.iter().find(|p| p.week.week == 2 && p.group == Group::Ai).unwrap();
        assert_eq!((w2.n, w2.rate), (0, None));
    }

    #[test]
    fn quantiles_interpolate_between_clinicians() {
        let vs =
            vec![visit("a", Group::Ai, 1, "x", &[Severity::Red]), visit("b", Group::Ai, 1, "y", &[Severity::Green])];
        let q = clinician_quantiles(&vs, Classifier::LeftInRed, &WorkflowStage::ALL, &[0.5]);
        let ai = q.iter().find(|p| p.group == Group::Ai).unwrap();
        assert_eq!(ai.value, Some(0.5));
        assert_eq!(ai.clinicians, 2);
    }

    #[test]
    fn constant_attending_time_has_zero_width_ci() {
        let vs: Vec<_> = (0..20).map(|i| visit(&format!("v{i}"), Group::Ai, 1, "c", &[Severity::Green; 2])).collect();
        let a = attending_time_by_triggers(&vs, DEFAULT_MAX_CALLS, 7);
        assert_eq!(a.len(), 1);
        assert_eq!((a[0].calls, a[0].median_minutes, a[0].ci_low, a[0].ci_high), (2, 10.0, 10.0, 10.0));
        let over: Vec<_> = (0..3).map(|i| visit(&format!("w{i}"), Group::Ai, 1, "c", &[Severity::Green; 13])).collect();
        assert!(attending_time_by_triggers(&over, DEFAULT_MAX_CALLS, 7).is_empty());
    }

    #[test]
    fn thumbs_arithmetic() {
        let mut v = visit("a", Group::Ai, 1, "c", &[Severity::Yellow; 10]);
        let none = thumbs_rates(std::slice::from_ref(&v));
        assert_eq!((none[0].feedback_rate, none[0].down_rate), (Some(0.0), None));
        for (seq, thumb) in [(1, Thumb::Up), (2, Thumb::Down)] {
            let r = v.log.responses[seq - 1].reference();
            crate::alert::record_feedback(&mut v.log, &r, thumb, at(1)).unwrap();
        }
        let t = thumbs_rates(&[v]);
        assert_eq!((t[0].feedback_rate, t[0].down_rate), (Some(0.2), Some(0.5)));
    }

    #[test]
    fn csv_leaves_undefined_rates_empty() {
        let rows = vec![RatePoint { week: Week::of(at(1)), group: Group::NonAi, n: 0, events: 0, rate: None }];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "week,group,n,events,rate\n2024-W01,non_ai,0,0,\n");
    }
}
