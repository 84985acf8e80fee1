use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Acuity, AnalysisConfig, AnalysisError, Arm, Category, FinalCall, Period, RaterKind, RatingRow, Sex};
use crate::agreement::{fleiss_kappa_binary, within_one_agreement};
use crate::design::SumToZero;
use crate::error::StatsError;
use crate::fisher::fisher_exact;
use crate::interval::wilson_interval;
use crate::multiplicity::benjamini_hochberg;
use crate::regression::{
    fit_log_binomial_gee, fit_modified_poisson, CoefficientSummary, Design, FitOptions, FitResult, WorkingCorrelation,
};
use crate::risk::{impact, risk_ratio_weighted, Impact};
use crate::table::TwoByTwo;
use crate::weighting::WeightedCount;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRateRow {
    pub category: Category,
    pub group: Arm,
    pub events: f64,
    pub n: f64,
    pub rate: f64,
    pub low: f64,
    pub high: f64,
}

/// AI versus non-AI comparison on weighted counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effect {
    pub ai: WeightedCount,
    pub non_ai: WeightedCount,
    pub rr: f64,
    pub rrr: f64,
    pub rrr_low: f64,
    pub rrr_high: f64,
    /// Fisher exact on doubled weighted counts.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub category: Category,
    pub effect: Option<Effect>,
    pub impact: Option<Impact>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BhRow {
    pub category: Category,
    pub p: f64,
    pub adjusted: f64,
    pub rejected: bool,
}

/// Category rows with one comparison per labelled column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectTable {
    pub labels: Vec<String>,
    pub rows: Vec<EffectRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectRow {
    pub category: Category,
    pub cells: Vec<Option<Effect>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumRate {
    pub events: f64,
    pub n: f64,
    pub rate: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrataRow {
    pub category: Category,
    pub red: Option<StratumRate>,
    pub yellow: Option<StratumRate>,
    pub green: Option<StratumRate>,
    pub p_red_yellow: Option<f64>,
    pub p_yellow_green: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionTable {
    pub category: Category,
    pub model: &'static str,
    pub rows: Vec<CoefficientSummary>,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub correlation: Option<f64>,
    /// Set when the fit failed; `rows` is then empty.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub category: Category,
    pub pairs: usize,
    pub within_one: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub conf: f64,
    pub fdr: f64,
    pub annual_volume: u64,
    pub rows: usize,
    pub error_rates: Vec<ErrorRateRow>,
    pub table2: Vec<Table2Row>,
    pub bh: Vec<BhRow>,
    pub stratified: EffectTable,
    pub acuity: EffectTable,
    pub strata: Vec<StrataRow>,
    pub regressions: Vec<RegressionTable>,
    pub agreement: Vec<AgreementRow>,
    pub raters: EffectTable,
}

pub const GEE_MODEL: &str = "log_binomial_gee_exchangeable";
pub const POISSON_MODEL: &str = "modified_poisson_clustered";

fn tally<'a>(rows: impl IntoIterator<Item = &'a RatingRow>, c: Category) -> (WeightedCount, WeightedCount) {
    let mut ai = WeightedCount::default();
    let mut non = WeightedCount::default();
    for r in rows {
        let acc = match r.group {
            Arm::Ai => &mut ai,
            Arm::NonAi => &mut non,
            Arm::Mixed => continue,
        };
        acc.n += r.weight;
        if r.error(c) {
            acc.events += r.weight;
        }
    }
    (ai, non)
}

/// Doubling makes 0.5-weighted counts integral for the exact test.
fn doubled(w: &WeightedCount) -> (u64, u64) {
    ((2.0 * w.events).round() as u64, (2.0 * w.n).round() as u64)
}

pub(crate) fn effect(ai: WeightedCount, non_ai: WeightedCount, conf: f64) -> Result<Effect, StatsError> {
    let rr = risk_ratio_weighted(ai.events, ai.n, non_ai.events, non_ai.n, conf)?;
    let (a, n1) = doubled(&ai);
    let (c, n2) = doubled(&non_ai);
    let p = fisher_exact(&TwoByTwo::from_events(a, n1, c, n2))?;
    let (rrr, rrr_low, rrr_high) = rr.rrr();
    Ok(Effect { ai, non_ai, rr: rr.rr, rrr, rrr_low, rrr_high, p })
}

fn effect_of<'a>(rows: impl IntoIterator<Item = &'a RatingRow>, c: Category, conf: f64) -> Option<Effect> {
    let (ai, non) = tally(rows, c);
    effect(ai, non, conf).ok()
}

fn stratum(rows: &[&RatingRow], c: Category, call: FinalCall, conf: f64) -> Option<StratumRate> {
    let mut w = WeightedCount::default();
    for r in rows.iter().filter(|r| r.final_call(c) == Some(call)) {
        w.n += r.weight;
        if r.error(c) {
            w.events += r.weight;
        }
    }
    let (low, high) = wilson_interval(w.events, w.n, conf).ok()?;
    Some(StratumRate { events: w.events, n: w.n, rate: w.rate(), low, high })
}

fn stratum_p(x: &Option<StratumRate>, y: &Option<StratumRate>) -> Option<f64> {
    let (x, y) = (x.as_ref()?, y.as_ref()?);
    let d = |s: &StratumRate| ((2.0 * s.events).round() as u64, (2.0 * s.n).round() as u64);
    let ((a, n1), (c, n2)) = (d(x), d(y));
    fisher_exact(&TwoByTwo::from_events(a, n1, c, n2)).ok()
}

/// Primary AI vs non-AI effects and their BH adjustment from main-period
/// physician rows.
pub fn primary_effects(
    main: &[&RatingRow],
    cfg: &AnalysisConfig,
) -> Result<(Vec<Table2Row>, Vec<BhRow>), AnalysisError> {
    let table2: Vec<Table2Row> = Category::ALL
        .iter()
        .map(|&c| {
            let effect = effect_of(main.iter().copied(), c, cfg.conf);
            let impact = effect.as_ref().and_then(|e| impact(e.non_ai.rate(), e.ai.rate(), cfg.annual_volume).ok());
            Table2Row { category: c, effect, impact }
        })
        .collect();

    let tested: Vec<(Category, f64)> =
        table2.iter().filter_map(|r| r.effect.as_ref().map(|e| (r.category, e.p))).collect();
    if tested.is_empty() {
        return Ok((table2, Vec::new()));
    }
    let ps: Vec<f64> = tested.iter().map(|t| t.1).collect();
    let res = benjamini_hochberg(&ps, cfg.fdr)?;
    let bh = tested
        .iter()
        .enumerate()
        .map(|(i, &(category, p))| BhRow { category, p, adjusted: res.adjusted[i], rejected: res.rejected[i] })
        .collect();
    Ok((table2, bh))
}

/// Builds every table from validated rows. Mixed-arm rows are dropped.
pub fn analyze(rows: &[RatingRow], cfg: &AnalysisConfig) -> Result<Report, AnalysisError> {
    let conf = cfg.conf;
    let usable: Vec<&RatingRow> = rows.iter().filter(|r| r.group != Arm::Mixed).collect();
    let physician: Vec<&RatingRow> = usable.iter().copied().filter(|r| r.rater_kind == RaterKind::Physician).collect();
    let main: Vec<&RatingRow> = physician.iter().copied().filter(|r| r.period == Period::Main).collect();
    let induction: Vec<&RatingRow> = physician.iter().copied().filter(|r| r.period == Period::Induction).collect();
    if main.is_empty() {
        return Err(AnalysisError::Invalid("no main-period physician ratings".into()));
    }

    let mut error_rates = Vec::new();
    for c in Category::ALL {
        let (ai, non) = tally(main.iter().copied(), c);
        for (group, w) in [(Arm::Ai, ai), (Arm::NonAi, non)] {
            if w.n == 0.0 {
                continue;
            }
            let (low, high) = wilson_interval(w.events, w.n, conf)?;
            error_rates.push(ErrorRateRow { category: c, group, events: w.events, n: w.n, rate: w.rate(), low, high });
        }
    }

    let (table2, bh) = primary_effects(&main, cfg)?;

    let stratified = EffectTable {
        labels: vec![
            "Main period, all visits".into(),
            "Induction period".into(),
            "Main period, only visits with reds".into(),
        ],
        rows: Category::ALL
            .iter()
            .map(|&c| EffectRow {
                category: c,
                cells: vec![
                    effect_of(main.iter().copied(), c, conf),
                    effect_of(induction.iter().copied(), c, conf),
                    effect_of(main.iter().copied().filter(|r| r.any_red(c)), c, conf),
                ],
            })
            .collect(),
    };

    let acuity = EffectTable {
        labels: vec!["Low-acuity cases".into(), "Medium-acuity cases".into(), "High-acuity cases".into()],
        rows: Category::ALL
            .iter()
            .map(|&c| EffectRow {
                category: c,
                cells: Acuity::ALL
                    .iter()
                    .map(|&a| effect_of(main.iter().copied().filter(|r| r.acuity == a), c, conf))
                    .collect(),
            })
            .collect(),
    };

    let strata = Category::ALL
        .iter()
        .map(|&c| {
            let red = stratum(&physician, c, FinalCall::Red, conf);
            let yellow = stratum(&physician, c, FinalCall::Yellow, conf);
            let green = stratum(&physician, c, FinalCall::Green, conf);
            StrataRow {
                category: c,
                p_red_yellow: stratum_p(&red, &yellow),
                p_yellow_green: stratum_p(&yellow, &green),
                red,
                yellow,
                green,
            }
        })
        .collect();

    let regressions = regressions(&main, cfg);
    let agreement = agreement(&physician);
    let raters = rater_table(&usable, &main, conf);

    Ok(Report {
        conf,
        fdr: cfg.fdr,
        annual_volume: cfg.annual_volume,
        rows: rows.len(),
        error_rates,
        table2,
        bh,
        stratified,
        acuity,
        strata,
        regressions,
        agreement,
        raters,
    })
}

fn first_per_visit<'a>(rows: &[&'a RatingRow]) -> Vec<&'a RatingRow> {
    let mut seen = BTreeSet::new();
    rows.iter().copied().filter(|r| seen.insert(r.visit_id.as_str())).collect()
}

/// Design columns in table order.
fn regression_design(rows: &[&RatingRow], cfg: &AnalysisConfig) -> Result<Design, StatsError> {
    let levels: Vec<String> = rows.iter().map(|r| r.clinic.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let coding = if levels.len() >= 2 {
        let omitted = cfg
            .omitted_clinic
            .clone()
            .filter(|o| levels.contains(o))
            .unwrap_or_else(|| levels.last().cloned().unwrap_or_default());
        Some(SumToZero::new(levels, &omitted)?)
    } else {
        None
    };
    let mut names: Vec<String> = vec![
        "Intercept".into(),
        "Group: AI vs Non-AI".into(),
        "Gender: Female vs Male".into(),
        "Visit type: Insurance vs Cash".into(),
    ];
    if let Some(c) = &coding {
        names.extend(c.column_levels().iter().map(|l| format!("Clinic: {l} vs mean clinic")));
    }
    names.push("Age (years)".into());
    let mut x = Vec::with_capacity(rows.len());
    for r in rows {
        let mut row = vec![
            1.0,
            (r.group == Arm::Ai) as u8 as f64,
            (r.gender == Sex::Female) as u8 as f64,
            (r.payment == super::Payment::Insurance) as u8 as f64,
        ];
        if let Some(c) = &coding {
            row.extend(c.encode(&r.clinic)?);
        }
        row.push(r.age_years);
        x.push(row);
    }
    Design::from_rows(names, &x)
}

fn table_from(
    category: Category,
    model: &'static str,
    fit: Result<FitResult, StatsError>,
    conf: f64,
) -> RegressionTable {
    match fit {
        Ok(f) => RegressionTable {
            category,
            model,
            rows: f.summary(conf),
            n_obs: f.n_obs,
            n_clusters: f.n_clusters,
            correlation: f.correlation,
            failure: None,
        },
        Err(e) => RegressionTable {
            category,
            model,
            rows: Vec::new(),
            n_obs: 0,
            n_clusters: 0,
            correlation: None,
            failure: Some(e.to_string()),
        },
    }
}

/// GEE and modified Poisson per category on the first rating of each
/// main-period visit, clustered by clinician.
fn regressions(main: &[&RatingRow], cfg: &AnalysisConfig) -> Vec<RegressionTable> {
    let rows = first_per_visit(main);
    let clusters: Vec<&str> = rows.iter().map(|r| r.clinician.as_str()).collect();
    let design = regression_design(&rows, cfg);
    let mut out = Vec::new();
    for c in Category::ALL {
        let y: Vec<f64> = rows.iter().map(|r| r.error(c) as u8 as f64).collect();
        let (gee, pois) = match &design {
            Ok(d) => (
                fit_log_binomial_gee(d, &y, &clusters, WorkingCorrelation::Exchangeable, FitOptions::default()),
                fit_modified_poisson(d, &y, Some(&clusters), FitOptions::default()),
            ),
            Err(e) => (Err(e.clone()), Err(e.clone())),
        };
        out.push(table_from(c, GEE_MODEL, gee, cfg.conf));
        out.push(table_from(c, POISSON_MODEL, pois, cfg.conf));
    }
    out
}

/// First two physician ratings of every visit rated at least twice.
fn agreement(physician: &[&RatingRow]) -> Vec<AgreementRow> {
    let mut by_visit: BTreeMap<&str, Vec<&RatingRow>> = BTreeMap::new();
    for r in physician {
        by_visit.entry(r.visit_id.as_str()).or_default().push(r);
    }
    let pairs: Vec<(&RatingRow, &RatingRow)> =
        by_visit.values().filter(|v| v.len() >= 2).map(|v| (v[0], v[1])).collect();
    Category::ALL
        .iter()
        .map(|&c| {
            let likert: Vec<(u8, u8)> = pairs.iter().map(|(a, b)| (a.likert(c), b.likert(c))).collect();
            let flags: Vec<(bool, bool)> = pairs.iter().map(|(a, b)| (a.error(c), b.error(c))).collect();
            AgreementRow {
                category: c,
                pairs: pairs.len(),
                within_one: within_one_agreement(&likert).ok(),
                kappa: fleiss_kappa_binary(&flags).ok(),
            }
        })
        .collect()
}

/// Main-period RRR as measured by physicians and by each model rater.
fn rater_table(usable: &[&RatingRow], main_physician: &[&RatingRow], conf: f64) -> EffectTable {
    let mut models: BTreeMap<&str, Vec<&RatingRow>> = BTreeMap::new();
    for r in usable.iter().filter(|r| r.rater_kind == RaterKind::Model && r.period == Period::Main) {
        models.entry(r.rater_id.as_str()).or_default().push(r);
    }
    let mut labels = vec!["Physician raters".to_string()];
    labels.extend(models.keys().map(|k| k.to_string()));
    let rows = Category::ALL
        .iter()
        .map(|&c| {
            let mut cells = vec![effect_of(main_physician.iter().copied(), c, conf)];
            cells.extend(models.values().map(|rs| effect_of(rs.iter().copied(), c, conf)));
            EffectRow { category: c, cells }
        })
        .collect();
    EffectTable { labels, rows }
}
