use chrono::NaiveDate;
use safetynet_core::Category;
use serde::{Deserialize, Serialize};

use crate::SimError;

/// One value per rated category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerCategory<T> {
    pub history: T,
    pub investigations: T,
    pub diagnosis: T,
    pub treatment: T,
}

impl<T: Copy> PerCategory<T> {
    pub fn get(&self, c: Category) -> T {
        match c {
            Category::History => self.history,
            Category::Investigations => self.investigations,
            Category::Diagnosis => self.diagnosis,
            Category::Treatment => self.treatment,
        }
    }

    pub fn splat(v: T) -> Self {
        Self { history: v, investigations: v, diagnosis: v, treatment: v }
    }
}

/// Likert score distributions (index 0 is score 1) given the latent flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub flawed: [f64; 5],
    pub clean: [f64; 5],
}

impl Kernel {
    /// P(score ≤ 2) under the flawed and clean rows.
    pub fn error_probs(&self) -> (f64, f64) {
        (self.flawed[0] + self.flawed[1], self.clean[0] + self.clean[1])
    }

    /// Latent flaw probability that yields rated error rate `m`.
    pub fn flaw_probability(&self, m: f64) -> f64 {
        let (s, f) = self.error_probs();
        ((m - f) / (s - f)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeverityModel {
    /// First-call red probability for a flawed / clean category.
    pub red_flawed: f64,
    pub red_clean: f64,
    pub yellow_flawed: f64,
    pub yellow_clean: f64,
    /// A non-red first call later turns red.
    pub late_red: f64,
    /// An unresolved call is followed by a repeat of the same colour.
    pub repeat_call: f64,
    /// A stage's calls start with a timeout entry.
    pub error_call: f64,
}

impl Default for SeverityModel {
    fn default() -> Self {
        Self {
            red_flawed: 0.27,
            red_clean: 0.01,
            yellow_flawed: 0.45,
            yellow_clean: 0.15,
            late_red: 0.005,
            repeat_call: 0.3,
            error_call: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplianceModel {
    /// Chance a red is resolved without the tool's help (both arms).
    pub natural_resolution: f64,
    /// Additional resolution chance for visible reds.
    pub ai_induction: f64,
    pub ai_main: f64,
    /// Weekly multiplicative decline of first-call reds in the AI arm.
    pub learning_rate: f64,
    /// Share of AI clinicians who never act on alerts and do not learn.
    pub disengaged_fraction: f64,
}

impl Default for ComplianceModel {
    fn default() -> Self {
        Self {
            natural_resolution: 0.31,
            ai_induction: 0.0,
            ai_main: 0.33,
            learning_rate: 0.011,
            disengaged_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub clinics: usize,
    pub clinicians_per_clinic: usize,
    /// Poisson mean of visits per clinician per week.
    pub visits_per_clinician_week: f64,
    pub induction_weeks: u32,
    pub main_weeks: u32,
    /// Monday of study week 0.
    pub start_date: NaiveDate,
    /// Non-AI rated error rates.
    pub base_error: PerCategory<f64>,
    pub rr_induction: PerCategory<f64>,
    pub rr_main: PerCategory<f64>,
    pub kernels: PerCategory<Kernel>,
    pub severity: SeverityModel,
    pub compliance: ComplianceModel,
    /// Log-scale SD of the per-clinic and per-clinician error multipliers.
    pub clinic_effect_sd: f64,
    pub clinician_effect_sd: f64,
    /// A visit gets a second attending clinician from the same clinic.
    pub second_clinician_rate: f64,
    pub rated_fraction: f64,
    pub double_rated_fraction: f64,
    pub physician_raters: usize,
    /// Each rated visit also gets one rating per listed model rater.
    pub model_raters: Vec<String>,
    pub response_rate_8day: f64,
    pub feedback_rate: f64,
    /// Thumbs-down share among responses given feedback.
    pub thumbs_down_early: f64,
    pub thumbs_down_late: f64,
    pub thumbs_early_weeks: u32,
}

const FLAWED_HISTORY: [f64; 5] = [0.15, 0.35, 0.40, 0.10, 0.0];
const CLEAN_HISTORY: [f64; 5] = [0.018, 0.042, 0.188, 0.423, 0.329];
const FLAWED_MIDDLE: [f64; 5] = [0.195, 0.455, 0.28, 0.07, 0.0];
const CLEAN_MIDDLE: [f64; 5] = [0.03, 0.07, 0.36, 0.36, 0.18];
const FLAWED_TREATMENT: [f64; 5] = [0.234, 0.546, 0.176, 0.044, 0.0];
const CLEAN_TREATMENT: [f64; 5] = [0.09, 0.21, 0.28, 0.28, 0.14];

impl Default for SimConfig {
    fn default() -> Self {
        let middle = Kernel { flawed: FLAWED_MIDDLE, clean: CLEAN_MIDDLE };
        Self {
            seed: 1,
            clinics: 15,
            clinicians_per_clinic: 10,
            visits_per_clinician_week: 20.0,
            induction_weeks: 8,
            main_weeks: 7,
            start_date: NaiveDate::from_ymd_opt(2025, 1, 6).expect("valid date"),
            base_error: PerCategory { history: 0.278, investigations: 0.349, diagnosis: 0.345, treatment: 0.566 },
            rr_induction: PerCategory { history: 0.833, investigations: 0.862, diagnosis: 0.936, treatment: 0.957 },
            rr_main: PerCategory { history: 0.682, investigations: 0.897, diagnosis: 0.84, treatment: 0.873 },
            kernels: PerCategory {
                history: Kernel { flawed: FLAWED_HISTORY, clean: CLEAN_HISTORY },
                investigations: middle,
                diagnosis: middle,
                treatment: Kernel { flawed: FLAWED_TREATMENT, clean: CLEAN_TREATMENT },
            },
            severity: SeverityModel::default(),
            compliance: ComplianceModel::default(),
            clinic_effect_sd: 0.08,
            clinician_effect_sd: 0.03,
            second_clinician_rate: 0.04,
            rated_fraction: 0.15,
            double_rated_fraction: 0.25,
            physician_raters: 12,
            model_raters: Vec::new(),
            response_rate_8day: 0.385,
            feedback_rate: 0.10,
            thumbs_down_early: 0.13,
            thumbs_down_late: 0.055,
            thumbs_early_weeks: 2,
        }
    }
}

fn prob(name: &str, v: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SimError::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl SimConfig {
    pub fn weeks(&self) -> u32 {
        self.induction_weeks + self.main_weeks
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.clinics == 0 || self.clinicians_per_clinic == 0 {
            return Err(SimError::Config("need at least one clinic and one clinician".into()));
        }
        if !(self.visits_per_clinician_week >= 0.0 && self.visits_per_clinician_week.is_finite()) {
            return Err(SimError::Config("visits_per_clinician_week must be a non-negative number".into()));
        }
        if self.physician_raters < 2 {
            return Err(SimError::Config("double ratings need at least two physician raters".into()));
        }
        for c in Category::ALL {
            let k = self.kernels.get(c);
            for row in [k.flawed, k.clean] {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                    return Err(SimError::Config(format!("{c} kernel rows must be distributions over 5 scores")));
                }
            }
            let (s, f) = k.error_probs();
            if s <= f {
                return Err(SimError::Config(format!("{c} kernel: flawed visits must be rated as errors more often")));
            }
            let base = self.base_error.get(c);
            prob(&format!("base_error.{c}"), base)?;
            for (period, rr) in [("rr_induction", self.rr_induction.get(c)), ("rr_main", self.rr_main.get(c))] {
                if !(rr > 0.0 && rr.is_finite()) {
                    return Err(SimError::Config(format!("{period}.{c} must be positive, got {rr}")));
                }
            }
            for m in [base, base * self.rr_induction.get(c), base * self.rr_main.get(c)] {
                if m < f || m > s {
                    return Err(SimError::Config(format!(
                        "{c}: target error rate {m:.3} is outside the kernel's reachable range [{f:.3}, {s:.3}]"
                    )));
                }
            }
        }
        let sv = &self.severity;
        let cm = &self.compliance;
        for (name, v) in [
            ("severity.red_flawed", sv.red_flawed),
            ("severity.red_clean", sv.red_clean),
            ("severity.yellow_flawed", sv.yellow_flawed),
            ("severity.yellow_clean", sv.yellow_clean),
            ("severity.late_red", sv.late_red),
            ("severity.repeat_call", sv.repeat_call),
            ("severity.error_call", sv.error_call),
            ("compliance.natural_resolution", cm.natural_resolution),
            ("compliance.ai_induction", cm.ai_induction),
            ("compliance.ai_main", cm.ai_main),
            ("compliance.learning_rate", cm.learning_rate),
            ("compliance.disengaged_fraction", cm.disengaged_fraction),
            ("second_clinician_rate", self.second_clinician_rate),
            ("rated_fraction", self.rated_fraction),
            ("double_rated_fraction", self.double_rated_fraction),
            ("response_rate_8day", self.response_rate_8day),
            ("feedback_rate", self.feedback_rate),
            ("thumbs_down_early", self.thumbs_down_early),
            ("thumbs_down_late", self.thumbs_down_late),
        ] {
            prob(name, v)?;
        }
        if sv.red_flawed + sv.yellow_flawed > 1.0 || sv.red_clean + sv.yellow_clean > 1.0 {
            return Err(SimError::Config("red plus yellow first-call probability exceeds 1".into()));
        }
        if self.clinic_effect_sd < 0.0 || self.clinician_effect_sd < 0.0 {
            return Err(SimError::Config("effect SDs must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
