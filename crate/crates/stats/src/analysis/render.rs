use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::tables::{Effect, EffectTable, Report, StratumRate};
use super::{AnalysisError, Arm, Category};

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn interval(mid: f64, low: f64, high: f64) -> String {
    format!("{} ({}-{})", pct(mid), pct(low), pct(high))
}

fn effect_cell(e: &Option<Effect>) -> String {
    e.as_ref().map_or_else(|| "n/a".into(), |e| interval(e.rrr, e.rrr_low, e.rrr_high))
}

fn rate_cell(s: &Option<StratumRate>) -> String {
    s.as_ref().map_or_else(|| "n/a".into(), |s| interval(s.rate, s.low, s.high))
}

fn opt_p(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".into(), |p| format!("{p:.6}"))
}

fn line(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "{}", cells.join(" & "));
}

fn effect_table(out: &mut String, title: &str, t: &EffectTable) {
    let _ = writeln!(out, "\n{title}");
    let mut head = vec!["Category".to_string()];
    head.extend(t.labels.iter().cloned());
    line(out, &head);
    for r in &t.rows {
        let mut cells = vec![r.category.label().to_string()];
        cells.extend(r.cells.iter().map(effect_cell));
        line(out, &cells);
    }
}

/// Plain-text rendering; cells are separated by " & ".
pub fn render_text(rep: &Report) -> String {
    let ci = format!("{:.0}% CI", rep.conf * 100.0);
    let mut out = String::new();
    let _ = writeln!(out, "Ratings analysed: {}", rep.rows);

    let _ = writeln!(out, "\nError rates, main period ({ci})");
    line(&mut out, &["Category".into(), "Group".into(), "Weighted n".into(), "Error rate".into()]);
    for r in &rep.error_rates {
        let g = if r.group == Arm::Ai { "AI" } else { "Non-AI" };
        line(&mut out, &[r.category.label().into(), g.into(), format!("{:.1}", r.n), interval(r.rate, r.low, r.high)]);
    }

    let _ = writeln!(out, "\nRelative risk reduction, AI vs non-AI (volume {})", rep.annual_volume);
    line(&mut out, &["Category".into(), "RRR: all visits".into(), "NNT".into(), "Yearly errors averted".into()]);
    for r in &rep.table2 {
        let nnt = r.impact.and_then(|i| i.nnt).map_or_else(|| "n/a".into(), |n| format!("{n:.1}"));
        let averted = r.impact.and_then(|i| i.averted).map_or_else(|| "n/a".into(), |a| a.to_string());
        line(&mut out, &[r.category.label().into(), effect_cell(&r.effect), nnt, averted]);
    }

    let _ = writeln!(out, "\nBenjamini-Hochberg (FDR {})", rep.fdr);
    line(&mut out, &["Category".into(), "p".into(), "Adjusted p".into(), "Rejected".into()]);
    for b in &rep.bh {
        line(
            &mut out,
            &[b.category.label().into(), format!("{:.6}", b.p), format!("{:.6}", b.adjusted), b.rejected.to_string()],
        );
    }

    effect_table(&mut out, "Relative risk reduction by period", &rep.stratified);
    effect_table(&mut out, "Relative risk reduction by acuity", &rep.acuity);

    let _ = writeln!(out, "\nError rate by final alert colour ({ci})");
    line(
        &mut out,
        &[
            "Category".into(),
            "Left in red".into(),
            "Left in yellow".into(),
            "Left in green".into(),
            "p: R vs Y".into(),
            "p: Y vs G".into(),
        ],
    );
    for s in &rep.strata {
        line(
            &mut out,
            &[
                s.category.label().into(),
                rate_cell(&s.red),
                rate_cell(&s.yellow),
                rate_cell(&s.green),
                opt_p(s.p_red_yellow),
                opt_p(s.p_yellow_green),
            ],
        );
    }

    for t in &rep.regressions {
        let _ = writeln!(out, "\n{}: {} (n = {}, clusters = {})", t.category.label(), t.model, t.n_obs, t.n_clusters);
        if let Some(f) = &t.failure {
            let _ = writeln!(out, "fit failed: {f}");
            continue;
        }
        line(
            &mut out,
            &["Variable".into(), "Relative risk".into(), format!("{ci} lower"), format!("{ci} upper"), "p".into()],
        );
        for c in &t.rows {
            line(
                &mut out,
                &[
                    c.name.clone(),
                    format!("{:.3}", c.rr),
                    format!("{:.3}", c.low),
                    format!("{:.3}", c.high),
                    format!("{:.6}", c.p),
                ],
            );
        }
    }

    let _ = writeln!(out, "\nInter-rater agreement");
    line(
        &mut out,
        &["Category".into(), "Double-rated visits".into(), "Within-one agreement".into(), "Fleiss kappa".into()],
    );
    for a in &rep.agreement {
        line(
            &mut out,
            &[
                a.category.label().into(),
                a.pairs.to_string(),
                a.within_one.map_or_else(|| "n/a".into(), pct),
                a.kappa.map_or_else(|| "n/a".into(), |k| format!("{k:.3}")),
            ],
        );
    }

    effect_table(&mut out, "Relative risk reduction by rater", &rep.raters);
    out
}

#[derive(Serialize)]
struct Table2Record {
    category: Category,
    ai_events: Option<f64>,
    ai_n: Option<f64>,
    non_ai_events: Option<f64>,
    non_ai_n: Option<f64>,
    rr: Option<f64>,
    rrr: Option<f64>,
    rrr_low: Option<f64>,
    rrr_high: Option<f64>,
    p_fisher: Option<f64>,
    p_bh: Option<f64>,
    bh_rejected: Option<bool>,
    nnt: Option<f64>,
    yearly_averted: Option<i64>,
}

#[derive(Serialize)]
struct EffectRecord<'a> {
    category: Category,
    column: &'a str,
    ai_events: Option<f64>,
    ai_n: Option<f64>,
    non_ai_events: Option<f64>,
    non_ai_n: Option<f64>,
    rrr: Option<f64>,
    rrr_low: Option<f64>,
    rrr_high: Option<f64>,
    p_fisher: Option<f64>,
}

#[derive(Serialize)]
struct StrataRecord {
    category: Category,
    red_n: Option<f64>,
    red_rate: Option<f64>,
    red_low: Option<f64>,
    red_high: Option<f64>,
    yellow_n: Option<f64>,
    yellow_rate: Option<f64>,
    yellow_low: Option<f64>,
    yellow_high: Option<f64>,
    green_n: Option<f64>,
    green_rate: Option<f64>,
    green_low: Option<f64>,
    green_high: Option<f64>,
    p_red_vs_yellow: Option<f64>,
    p_yellow_vs_green: Option<f64>,
}

#[derive(Serialize)]
struct RegressionRecord<'a> {
    category: Category,
    model: &'a str,
    term: &'a str,
    estimate: Option<f64>,
    se: Option<f64>,
    rr: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    p: Option<f64>,
    n_obs: usize,
    n_clusters: usize,
    working_correlation: Option<f64>,
    failure: Option<&'a str>,
}

fn write_csv<T: Serialize>(path: PathBuf, rows: impl IntoIterator<Item = T>) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn effect_records(t: &EffectTable) -> Vec<EffectRecord<'_>> {
    let mut out = Vec::new();
    for r in &t.rows {
        for (label, e) in t.labels.iter().zip(&r.cells) {
            out.push(EffectRecord {
                category: r.category,
                column: label,
                ai_events: e.as_ref().map(|e| e.ai.events),
                ai_n: e.as_ref().map(|e| e.ai.n),
                non_ai_events: e.as_ref().map(|e| e.non_ai.events),
                non_ai_n: e.as_ref().map(|e| e.non_ai.n),
                rrr: e.as_ref().map(|e| e.rrr),
                rrr_low: e.as_ref().map(|e| e.rrr_low),
                rrr_high: e.as_ref().map(|e| e.rrr_high),
                p_fisher: e.as_ref().map(|e| e.p),
            });
        }
    }
    out
}

/// Writes every table as CSV plus `tables.txt` into `dir`, creating it if needed.
/// Returns the written paths.
pub fn write_tables(rep: &Report, dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(dir)?;
    let p = |name: &str| dir.join(name);

    write_csv(p("error_rates.csv"), &rep.error_rates)?;
    write_csv(
        p("table2.csv"),
        rep.table2.iter().map(|r| {
            let e = r.effect.as_ref();
            let bh = rep.bh.iter().find(|b| b.category == r.category);
            Table2Record {
                category: r.category,
                ai_events: e.map(|e| e.ai.events),
                ai_n: e.map(|e| e.ai.n),
                non_ai_events: e.map(|e| e.non_ai.events),
                non_ai_n: e.map(|e| e.non_ai.n),
                rr: e.map(|e| e.rr),
                rrr: e.map(|e| e.rrr),
                rrr_low: e.map(|e| e.rrr_low),
                rrr_high: e.map(|e| e.rrr_high),
                p_fisher: e.map(|e| e.p),
                p_bh: bh.map(|b| b.adjusted),
                bh_rejected: bh.map(|b| b.rejected),
                nnt: r.impact.and_then(|i| i.nnt),
                yearly_averted: r.impact.and_then(|i| i.averted),
            }
        }),
    )?;
    write_csv(p("stratified.csv"), effect_records(&rep.stratified))?;
    write_csv(p("acuity.csv"), effect_records(&rep.acuity))?;
    write_csv(p("raters.csv"), effect_records(&rep.raters))?;
    write_csv(
        p("severity_strata.csv"),
        rep.strata.iter().map(|s| {
            let f = |x: &Option<StratumRate>| {
                x.as_ref().map_or((None, None, None, None), |x| (Some(x.n), Some(x.rate), Some(x.low), Some(x.high)))
            };
            let (red_n, red_rate, red_low, red_high) = f(&s.red);
            let (yellow_n, yellow_rate, yellow_low, yellow_high) = f(&s.yellow);
            let (green_n, green_rate, green_low, green_high) = f(&s.green);
            StrataRecord {
                category: s.category,
                red_n,
                red_rate,
                red_low,
                red_high,
                yellow_n,
                yellow_rate,
                yellow_low,
                yellow_high,
                green_n,
                green_rate,
                green_low,
                green_high,
                p_red_vs_yellow: s.p_red_yellow,
                p_yellow_vs_green: s.p_yellow_green,
            }
        }),
    )?;
    let mut reg = Vec::new();
    for t in &rep.regressions {
        if let Some(f) = &t.failure {
            reg.push(RegressionRecord {
                category: t.category,
                model: t.model,
                term: "",
                estimate: None,
                se: None,
                rr: None,
                ci_low: None,
                ci_high: None,
                p: None,
                n_obs: t.n_obs,
                n_clusters: t.n_clusters,
                working_correlation: None,
                failure: Some(f),
            });
        }
        for c in &t.rows {
            reg.push(RegressionRecord {
                category: t.category,
                model: t.model,
                term: &c.name,
                estimate: Some(c.estimate),
                se: Some(c.se),
                rr: Some(c.rr),
                ci_low: Some(c.low),
                ci_high: Some(c.high),
                p: Some(c.p),
                n_obs: t.n_obs,
                n_clusters: t.n_clusters,
                working_correlation: t.correlation,
                failure: None,
            });
        }
    }
    write_csv(p("regression.csv"), reg)?;
    write_csv(p("agreement.csv"), &rep.agreement)?;
    fs::write(p("tables.txt"), render_text(rep))?;

    Ok([
        "error_rates.csv",
        "table2.csv",
        "stratified.csv",
        "acuity.csv",
        "raters.csv",
        "severity_strata.csv",
        "regression.csv",
        "agreement.csv",
        "tables.txt",
    ]
    .iter()
    .map(|n| p(n))
    .collect())
}
