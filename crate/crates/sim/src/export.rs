use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use safetynet_core::{Acuity, Arm, Category, Group, Payment, Period, RaterKind, Severity};
use safetynet_stats::analysis::{self, FinalCall, RatingRow};
use serde::Serialize;

use crate::generate::{category_index, Cohort, SimVisit};
use crate::materialize::sex;
use crate::SimError;

fn final_call(s: Option<Severity>) -> Option<FinalCall> {
    s.map(|s| match s {
        Severity::Red => FinalCall::Red,
        Severity::Yellow => FinalCall::Yellow,
        Severity::Green => FinalCall::Green,
    })
}

fn rows_for(cohort: &Cohort, v: &SimVisit) -> Vec<RatingRow> {
    let arm = match v.group {
        Group::Ai => analysis::Arm::Ai,
        Group::NonAi => analysis::Arm::NonAi,
        Group::Mixed => return Vec::new(),
    };
    let physicians = v.physician_ratings().max(1) as f64;
    let per = |c: Category| {
        let i = category_index(c);
        (i, final_call(v.final_call(c)), v.any_red(c) as u8)
    };
    let (h, inv, dx, tx) =
        (per(Category::History), per(Category::Investigations), per(Category::Diagnosis), per(Category::Treatment));
    v.ratings
        .iter()
        .map(|r| {
            let l = r.likert;
            let e = |i: usize| (l[i] <= safetynet_core::LIKERT_ERROR_MAX) as u8;
            RatingRow {
                visit_id: v.visit_id.clone(),
                rater_id: r.rater_id.clone(),
                rater_kind: match r.kind {
                    RaterKind::Physician => analysis::RaterKind::Physician,
                    RaterKind::Model => analysis::RaterKind::Model,
                },
                group: arm,
                period: match v.period {
                    Period::Induction => analysis::Period::Induction,
                    Period::Main => analysis::Period::Main,
                },
                week: v.week,
                clinic: cohort.clinics[v.clinic].name.clone(),
                clinician: cohort.clinicians[v.clinicians[0]].id.clone(),
                age_years: v.age_years as f64 + v.age_months as f64 / 12.0,
                gender: sex(v.gender),
                payment: match v.payment {
                    Payment::Insurance => analysis::Payment::Insurance,
                    Payment::Cash => analysis::Payment::Cash,
                },
                acuity: match v.acuity {
                    Acuity::Low => analysis::Acuity::Low,
                    Acuity::Medium => analysis::Acuity::Medium,
                    Acuity::High => analysis::Acuity::High,
                },
                history_likert: l[h.0],
                history_error: e(h.0),
                history_final: h.1,
                history_any_red: h.2,
                investigations_likert: l[inv.0],
                investigations_error: e(inv.0),
                investigations_final: inv.1,
                investigations_any_red: inv.2,
                diagnosis_likert: l[dx.0],
                diagnosis_error: e(dx.0),
                diagnosis_final: dx.1,
                diagnosis_any_red: dx.2,
                treatment_likert: l[tx.0],
                treatment_error: e(tx.0),
                treatment_final: tx.1,
                treatment_any_red: tx.2,
                weight: if r.kind == RaterKind::Physician { 1.0 / physicians } else { 1.0 },
            }
        })
        .collect()
}

/// Analysis table rows, one per rating. Mixed visits are left out.
pub fn analysis_rows(cohort: &Cohort) -> Vec<RatingRow> {
    cohort.visits.iter().flat_map(|v| rows_for(cohort, v)).collect()
}

fn jsonl<T: Serialize, W: Write>(items: impl IntoIterator<Item = T>, out: W) -> Result<(), SimError> {
    let mut w = BufWriter::new(out);
    for it in items {
        serde_json::to_writer(&mut w, &it).map_err(|e| SimError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| SimError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}

pub fn write_visits<W: Write>(cohort: &Cohort, out: W) -> Result<(), SimError> {
    jsonl(cohort.visits.iter().map(|v| v.record(cohort)), out)
}

pub fn write_journal<W: Write>(cohort: &Cohort, out: W) -> Result<(), SimError> {
    jsonl(cohort.visits.iter().flat_map(|v| v.journal(cohort)), out)
}

pub fn write_ratings<W: Write>(cohort: &Cohort, out: W) -> Result<(), SimError> {
    jsonl(cohort.visits.iter().flat_map(|v| v.rating_forms()), out)
}

pub fn write_outcomes<W: Write>(cohort: &Cohort, out: W) -> Result<(), SimError> {
    jsonl(cohort.visits.iter().map(|v| &v.outcome), out)
}

#[derive(Serialize)]
struct ArmRow<'a> {
    clinician_id: &'a str,
    clinic: &'a str,
    arm: Arm,
    engaged: bool,
}

pub fn write_arms<W: Write>(cohort: &Cohort, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for c in &cohort.clinicians {
        w.serialize(ArmRow {
            clinician_id: &c.id,
            clinic: &cohort.clinics[c.clinic].name,
            arm: c.arm,
            engaged: c.engaged,
        })
        .map_err(|e| SimError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, File), SimError> {
    let p = dir.join(name);
    let f = File::create(&p).map_err(|e| SimError::Io(format!("{}: {e}", p.display())))?;
    Ok((p, f))
}

/// Writes every artifact into `dir` and returns the paths written.
pub fn write_all(cohort: &Cohort, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();

    let (p, f) = create(dir, "config.json")?;
    serde_json::to_writer_pretty(BufWriter::new(f), &cohort.config).map_err(|e| SimError::Io(e.to_string()))?;
    written.push(p);
    let (p, f) = create(dir, "arms.csv")?;
    write_arms(cohort, f)?;
    written.push(p);
    let (p, f) = create(dir, "visits.jsonl")?;
    write_visits(cohort, f)?;
    written.push(p);
    let (p, f) = create(dir, "journal.jsonl")?;
    write_journal(cohort, f)?;
    written.push(p);
    let (p, f) = create(dir, "ratings.jsonl")?;
    write_ratings(cohort, f)?;
    written.push(p);
    let (p, f) = create(dir, "outcomes.jsonl")?;
    write_outcomes(cohort, f)?;
    written.push(p);
    let (p, f) = create(dir, "analysis.csv")?;
    analysis::write_rows(&analysis_rows(cohort), BufWriter::new(f)).map_err(|e| SimError::Io(e.to_string()))?;
    written.push(p);
    Ok(written)
}
