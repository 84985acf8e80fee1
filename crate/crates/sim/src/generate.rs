use chrono::{DateTime, Duration, NaiveTime, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use safetynet_core::{
    assign_visit_group, Acuity, Arm, Category, Gender, Group, OutcomeRecord, Payment, Period, RaterKind, ServiceRegion,
    Severity, Thumb, WorkflowStage,
};

use crate::arms::assign_arms;
use crate::config::SimConfig;
use crate::SimError;

pub const CLINIC_NAMES: [&str; 15] = [
    "Embakasi",
    "Kahawa West",
    "Kangemi",
    "Kasarani",
    "Kawangware",
    "Kimathi Street",
    "Lang'ata",
    "Lucky Summer",
    "Mathare North",
    "Pipeline",
    "Sunton",
    "Tassia",
    "Umoja 1",
    "Umoja 2",
    "Zimmerman",
];

const ARM_STREAM: u64 = 0;
const EFFECT_STREAM: u64 = 1;
const VISIT_STREAM_BASE: u64 = 2;

/// Independent ChaCha stream for `(seed, id)`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clinic {
    pub name: String,
    pub region: ServiceRegion,
    /// Multiplier on every category's error rate.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clinician {
    pub id: String,
    pub clinic: usize,
    pub arm: Arm,
    /// False for AI clinicians who ignore alerts and do not learn.
    pub engaged: bool,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRating {
    pub rater_id: String,
    pub kind: RaterKind,
    /// Indexed by [`Category::ALL`] order.
    pub likert: [u8; 4],
}

/// Compact synthetic visit. Calls are per stage in sequence order; `None`
/// marks an error entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SimVisit {
    pub visit_id: String,
    pub clinic: usize,
    pub clinicians: Vec<usize>,
    pub group: Group,
    pub period: Period,
    pub week: u32,
    pub started_at: DateTime<Utc>,
    pub age_years: u32,
    pub age_months: u32,
    pub gender: Gender,
    pub pregnant: bool,
    pub payment: Payment,
    pub acuity: Acuity,
    /// Latent documentation flaw per category.
    pub flawed: [bool; 4],
    pub calls: [Vec<Option<Severity>>; 5],
    pub ratings: Vec<SimRating>,
    pub outcome: OutcomeRecord,
    pub attending_minutes: f64,
    pub note_length: usize,
    /// (stage, sequence_no, thumb) on visible coloured responses.
    pub feedback: Vec<(WorkflowStage, u64, Thumb)>,
    pub doc_seed: u64,
}

pub(crate) fn category_index(c: Category) -> usize {
    Category::ALL.iter().position(|&x| x == c).expect("known category")
}

pub(crate) fn stage_index(s: WorkflowStage) -> usize {
    WorkflowStage::ALL.iter().position(|&x| x == s).expect("known stage")
}

impl SimVisit {
    pub fn shadow(&self) -> bool {
        self.group != Group::Ai
    }

    pub fn stage_calls(&self, s: WorkflowStage) -> &[Option<Severity>] {
        &self.calls[stage_index(s)]
    }

    pub fn total_calls(&self) -> usize {
        self.calls.iter().map(Vec::len).sum()
    }

    fn first_colour(&self, s: WorkflowStage) -> Option<Severity> {
        self.stage_calls(s).iter().flatten().next().copied()
    }

    fn last_colour(&self, s: WorkflowStage) -> Option<Severity> {
        self.stage_calls(s).iter().flatten().last().copied()
    }

    /// Worst final colour over the category's stages.
    pub fn final_call(&self, c: Category) -> Option<Severity> {
        c.stages().iter().filter_map(|&s| self.last_colour(s)).max()
    }

    pub fn any_red(&self, c: Category) -> bool {
        c.stages().iter().any(|&s| self.stage_calls(s).contains(&Some(Severity::Red)))
    }

    pub fn left_in_red(&self) -> bool {
        WorkflowStage::ALL.iter().any(|&s| self.last_colour(s) == Some(Severity::Red))
    }

    pub fn started_red(&self) -> bool {
        WorkflowStage::ALL.iter().any(|&s| self.first_colour(s) == Some(Severity::Red))
    }

    pub fn physician_ratings(&self) -> usize {
        self.ratings.iter().filter(|r| r.kind == RaterKind::Physician).count()
    }
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub config: SimConfig,
    pub clinics: Vec<Clinic>,
    pub clinicians: Vec<Clinician>,
    pub visits: Vec<SimVisit>,
}

impl Cohort {
    pub fn clinician_ids(&self, v: &SimVisit) -> Vec<String> {
        v.clinicians.iter().map(|&i| self.clinicians[i].id.clone()).collect()
    }
}

fn slug(name: &str) -> String {
    name.chars().filter(|c| c.is_alphanumeric() || *c == ' ').collect::<String>().to_lowercase().replace(' ', "-")
}

fn clinic_name(i: usize) -> String {
    CLINIC_NAMES.get(i).map_or_else(|| format!("Clinic {}", i + 1), |n| n.to_string())
}

const REGIONS: [ServiceRegion; 3] = [ServiceRegion::Eastlands, ServiceRegion::Southwest, ServiceRegion::ThikaRoad];

fn pick<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Generates a full cohort. Output is a pure function of `cfg`.
pub fn generate(cfg: &SimConfig) -> Result<Cohort, SimError> {
    cfg.validate()?;
    let mut arm_rng = stream(cfg.seed, ARM_STREAM);
    let arms = assign_arms(&vec![cfg.clinicians_per_clinic; cfg.clinics], &mut arm_rng);

    let mut eff = stream(cfg.seed, EFFECT_STREAM);
    let clinic_dist = LogNormal::new(0.0, cfg.clinic_effect_sd).map_err(|e| SimError::Config(e.to_string()))?;
    let clinician_dist = LogNormal::new(0.0, cfg.clinician_effect_sd).map_err(|e| SimError::Config(e.to_string()))?;
    let mut clinics = Vec::with_capacity(cfg.clinics);
    let mut clinicians = Vec::new();
    for (k, clinic_arms) in arms.iter().enumerate() {
        let name = clinic_name(k);
        for (j, &arm) in clinic_arms.iter().enumerate() {
            let disengaged = arm == Arm::Ai && eff.random_bool(cfg.compliance.disengaged_fraction);
            clinicians.push(Clinician {
                id: format!("{}-{:02}", slug(&name), j + 1),
                clinic: k,
                arm,
                engaged: !disengaged,
                effect: clinician_dist.sample(&mut eff),
            });
        }
        clinics.push(Clinic { name, region: REGIONS[k % REGIONS.len()], effect: clinic_dist.sample(&mut eff) });
    }

    let n_clin = clinicians.len() as u64;
    let mut visits = Vec::new();
    for week in 0..cfg.weeks() {
        for ci in 0..clinicians.len() {
            let mut rng = stream(cfg.seed, VISIT_STREAM_BASE + week as u64 * n_clin + ci as u64);
            let n = if cfg.visits_per_clinician_week > 0.0 {
                Poisson::new(cfg.visits_per_clinician_week)
                    .map_err(|e| SimError::Config(e.to_string()))?
                    .sample(&mut rng) as usize
            } else {
                0
            };
            for k in 0..n {
                visits.push(visit(cfg, &clinics, &clinicians, ci, week, k, &mut rng)?);
            }
        }
    }
    Ok(Cohort { config: cfg.clone(), clinics, clinicians, visits })
}

fn visit<R: Rng>(
    cfg: &SimConfig,
    clinics: &[Clinic],
    clinicians: &[Clinician],
    ci: usize,
    week: u32,
    k: usize,
    rng: &mut R,
) -> Result<SimVisit, SimError> {
    let me = &clinicians[ci];
    let period = if week < cfg.induction_weeks { Period::Induction } else { Period::Main };

    let mut attending = vec![ci];
    if cfg.clinicians_per_clinic > 1 && rng.random_bool(cfg.second_clinician_rate) {
        let peers: Vec<usize> =
            (0..clinicians.len()).filter(|&j| j != ci && clinicians[j].clinic == me.clinic).collect();
        attending.push(peers[rng.random_range(0..peers.len())]);
    }
    let group = assign_visit_group(&attending.iter().map(|&j| clinicians[j].arm).collect::<Vec<_>>())
        .map_err(|e| SimError::Config(e.to_string()))?;
    let ai = group == Group::Ai;

    let day = rng.random_range(0..7);
    let minute = rng.random_range(7 * 60..20 * 60);
    let started_at = (cfg.start_date + Duration::days(7 * week as i64 + day)).and_time(NaiveTime::MIN).and_utc()
        + Duration::minutes(minute);

    let mut flawed = [false; 4];
    for c in Category::ALL {
        let rr = match (ai, period) {
            (false, _) => 1.0,
            (true, Period::Induction) => cfg.rr_induction.get(c),
            (true, Period::Main) => cfg.rr_main.get(c),
        };
        let m = cfg.base_error.get(c) * rr * clinics[me.clinic].effect * me.effect;
        flawed[category_index(c)] = rng.random_bool(cfg.kernels.get(c).flaw_probability(m));
    }

    let sv = &cfg.severity;
    let cm = &cfg.compliance;
    let engaged = ai && me.engaged;
    let learn = if engaged { (1.0 - cm.learning_rate * week as f64).max(0.0) } else { 1.0 };
    let compliance = match (engaged, period) {
        (false, _) => 0.0,
        (true, Period::Induction) => cm.ai_induction,
        (true, Period::Main) => cm.ai_main,
    };
    let resolve = 1.0 - (1.0 - cm.natural_resolution) * (1.0 - compliance);
    let calls: [Vec<Option<Severity>>; 5] = std::array::from_fn(|si| {
        let f = flawed[category_index(WorkflowStage::ALL[si].category())];
        let (red, yellow) = if f { (sv.red_flawed, sv.yellow_flawed) } else { (sv.red_clean, sv.yellow_clean) };
        let u: f64 = rng.random();
        let first = if u < red * learn {
            Severity::Red
        } else if u < red * learn + yellow {
            Severity::Yellow
        } else {
            Severity::Green
        };
        let mut out = Vec::with_capacity(3);
        if rng.random_bool(sv.error_call) {
            out.push(None);
        }
        out.push(Some(first));
        if first == Severity::Red {
            if rng.random_bool(resolve) {
                out.push(Some(if rng.random_bool(0.5) { Severity::Yellow } else { Severity::Green }));
            } else if rng.random_bool(sv.repeat_call) {
                out.push(Some(Severity::Red));
            }
        } else if rng.random_bool(sv.late_red) {
            out.push(Some(Severity::Red));
        } else if rng.random_bool(sv.repeat_call) {
            out.push(Some(if rng.random_bool(0.5) { first } else { Severity::Green }));
        }
        out
    });

    let u: f64 = rng.random();
    let age_years = if u < 0.12 {
        rng.random_range(0..5)
    } else if u < 0.30 {
        rng.random_range(5..18)
    } else {
        rng.random_range(18..76)
    };
    let age_months = if age_years == 0 { rng.random_range(1..12) } else { 0 };
    let gender = if rng.random_bool(0.58) { Gender::Female } else { Gender::Male };
    let pregnant = gender == Gender::Female && (18..46).contains(&age_years) && rng.random_bool(0.08);
    let payment = if rng.random_bool(0.5) { Payment::Insurance } else { Payment::Cash };
    let acuity = [Acuity::Low, Acuity::Medium, Acuity::High][pick(rng, &[0.45, 0.40, 0.15])];

    let mut ratings = Vec::new();
    if rng.random_bool(cfg.rated_fraction) {
        let n = if rng.random_bool(cfg.double_rated_fraction) { 2 } else { 1 };
        let first = rng.random_range(0..cfg.physician_raters);
        for r in 0..n {
            let id =
                if r == 0 { first } else { (first + rng.random_range(1..cfg.physician_raters)) % cfg.physician_raters };
            ratings.push(SimRating {
                rater_id: format!("physician-{:02}", id + 1),
                kind: RaterKind::Physician,
                likert: likert(cfg, &flawed, rng),
            });
        }
        for m in &cfg.model_raters {
            ratings.push(SimRating { rater_id: m.clone(), kind: RaterKind::Model, likert: likert(cfg, &flawed, rng) });
        }
    }

    let responded = rng.random_bool(cfg.response_rate_8day);
    let outcome = OutcomeRecord {
        visit_id: String::new(),
        responded_8day: responded,
        feeling_likert: responded.then(|| pick(rng, &[0.02, 0.03, 0.12, 0.33, 0.50]) as u8 + 1),
        saw_pharmacist: responded.then(|| rng.random_bool(0.10)),
        self_referred: responded.then(|| rng.random_bool(0.05)),
        unplanned_penda_visit: responded.then(|| rng.random_bool(0.04)),
        one_day_worse: None,
    };

    let total_calls: usize = calls.iter().map(Vec::len).sum();
    let per_call = if ai { 0.8 } else { 0.3 };
    let base: f64 = LogNormal::new(12f64.ln(), 0.45).map_err(|e| SimError::Config(e.to_string()))?.sample(rng);
    let attending_minutes = ((base + per_call * total_calls as f64) * 10.0).round() / 10.0;
    let mean_len: f64 = if ai { 500.0 } else { 400.0 };
    let note_length =
        Normal::new(mean_len, 120.0).map_err(|e| SimError::Config(e.to_string()))?.sample(rng).round().max(40.0)
            as usize;

    let mut feedback = Vec::new();
    if ai {
        let down = if week < cfg.thumbs_early_weeks { cfg.thumbs_down_early } else { cfg.thumbs_down_late };
        for (si, stage_calls) in calls.iter().enumerate() {
            for (j, call) in stage_calls.iter().enumerate() {
                if call.is_some() && rng.random_bool(cfg.feedback_rate) {
                    let thumb = if rng.random_bool(down) { Thumb::Down } else { Thumb::Up };
                    feedback.push((WorkflowStage::ALL[si], j as u64 + 1, thumb));
                }
            }
        }
    }

    let visit_id = format!("w{week:02}-c{ci:04}-{k:03}");
    Ok(SimVisit {
        outcome: OutcomeRecord { visit_id: visit_id.clone(), ..outcome },
        visit_id,
        clinic: me.clinic,
        clinicians: attending,
        group,
        period,
        week,
        started_at,
        age_years,
        age_months,
        gender,
        pregnant,
        payment,
        acuity,
        flawed,
        calls,
        ratings,
        attending_minutes,
        note_length,
        feedback,
        doc_seed: rng.random(),
    })
}

fn likert<R: Rng>(cfg: &SimConfig, flawed: &[bool; 4], rng: &mut R) -> [u8; 4] {
    std::array::from_fn(|i| {
        let k = cfg.kernels.get(Category::ALL[i]);
        let row = if flawed[i] { k.flawed } else { k.clean };
        pick(rng, &row) as u8 + 1
    })
}
