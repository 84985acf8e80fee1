//! One-day follow-up call eligibility.

use crate::domain::DocumentationState;

/// Listed diagnoses, as printed (including their original spellings).
pub const ONE_DAY_DIAGNOSES: &[&str] = &[
    "Severe malaria",
    "Acute viral or bacterial gastroenteritis with some or severe dehydration",
    "Severe pneumonia",
    "Pneumonia",
    "Puerperal sepsis",
    "Neonatal sepsis",
    "Myocardial infaction or angina",
    "Hypertensive emergency and urgency",
    "Acute abdomen",
    "Ectopic pregnancy",
    "Stroke",
    "Acute coronary syndrome",
    "Pre-emplasia and clampsia",
    "Diabetic ketoacidosis",
    "Hypoglycemia",
    "Poisoning",
    "Gastroenteritis with some or severe dehydration",
    "Head injury",
    "Febrile convulsions",
    "Convulsions",
];

/// Spellings and split forms of compound entries that charts actually use.
pub const ONE_DAY_DIAGNOSIS_VARIANTS: &[&str] = &[
    "Myocardial infarction",
    "Angina",
    "Hypertensive emergency",
    "Hypertensive urgency",
    "Pre-eclampsia",
    "Eclampsia",
];

pub const ONE_DAY_COMPLAINTS: &[&str] = &[
    "Difficulty in breathing",
    "Vaginal bleeding",
    "Fever",
    "Weakness",
    "Unconsciousness",
    "History of convulsion",
    "Poisoning",
];

/// Lowercase, trim, collapse internal whitespace.
pub fn canonicalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Plain pneumonia is listed only for patients under 5 or over 50.
fn diagnosis_listed(diagnosis: &str, age_years: u32) -> bool {
    let d = canonicalize(diagnosis);
    ONE_DAY_DIAGNOSES.iter().chain(ONE_DAY_DIAGNOSIS_VARIANTS).any(|entry| {
        let e = canonicalize(entry);
        d.contains(&e) && (e != "pneumonia" || !(5..=50).contains(&age_years))
    })
}

pub fn one_day_follow_up_eligible(doc: &DocumentationState) -> bool {
    let age = doc.demographics.age_years;
    doc.diagnoses.iter().any(|d| diagnosis_listed(d, age))
        || doc.chief_complaints.iter().any(|c| {
            let label = canonicalize(&c.label);
            ONE_DAY_COMPLAINTS.iter().any(|entry| label.contains(&canonicalize(entry)))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChiefComplaint, Demographics, Gender};

    fn doc(age: u32) -> DocumentationState {
        DocumentationState::new(Demographics::new(age, Gender::Female))
    }

    #[test]
    fn severe_malaria() {
        let mut d = doc(30);
        d.diagnoses.push("  SEVERE   Malaria ".into());
        assert!(one_day_follow_up_eligible(&d));
    }

    #[test]
    fn sore_throat_is_not_listed() {
        let mut d = doc(30);
        d.chief_complaints.push(ChiefComplaint::new("Sore Throat"));
        assert!(!one_day_follow_up_eligible(&d));
    }

    #[test]
    fn difficulty_breathing() {
        let mut d = doc(30);
        d.chief_complaints.push(ChiefComplaint::new("Difficulty in breathing"));
        assert!(one_day_follow_up_eligible(&d));
    }

    #[test]
    fn pneumonia_is_age_conditional() {
        let mut d = doc(30);
        d.diagnoses.push("Pneumonia".into());
        assert!(!one_day_follow_up_eligible(&d));
        let mut d = doc(3);
        d.diagnoses.push("Pneumonia".into());
        assert!(one_day_follow_up_eligible(&d));
        let mut d = doc(30);
        d.diagnoses.push("Severe pneumonia".into());
        assert!(one_day_follow_up_eligible(&d));
    }
}
