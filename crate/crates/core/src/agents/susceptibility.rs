use std::collections::BTreeMap;

use super::{AgentError, Demographics, Profession};

/// Multiplicative susceptibility model: the product of per-attribute
/// multipliers and the social-distancing mobility factor, clamped to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityModel {
    pub age: BTreeMap<String, f64>,
    pub gender: BTreeMap<String, f64>,
    pub income: BTreeMap<String, f64>,
    pub profession: BTreeMap<Profession, f64>,
    pub vaccinated_multiplier: f64,
}

impl SusceptibilityModel {
    pub fn susceptibility(
        &self,
        demographics: &Demographics,
        profession: Profession,
        vaccinated: bool,
        social_distancing: f64,
    ) -> Result<f64, AgentError> {
        let age = lookup(&self.age, "age", &demographics.age_band)?;
        let gender = lookup(&self.gender, "gender", &demographics.gender)?;
        let income = lookup(&self.income, "income", &demographics.income_band)?;
        let prof = *self.profession.get(&profession).ok_or_else(|| AgentError::UnknownLabel {
            dimension: "profession",
            label: profession.to_string(),
            known: self.profession.keys().map(|p| p.to_string()).collect(),
        })?;
        let vacc = if vaccinated { self.vaccinated_multiplier } else { 1.0 };
        Ok(combine(&[age, prof, gender, income, vacc, social_distancing]))
    }
}

/// Product of non-negative multipliers clamped to [0, 1]. Monotone in each
/// argument.
pub fn combine(multipliers: &[f64]) -> f64 {
    multipliers
        .iter()
        .map(|m| m.max(0.0))
        .product::<f64>()
        .clamp(0.0, 1.0)
}

fn lookup(table: &BTreeMap<String, f64>, dimension: &'static str, label: &str) -> Result<f64, AgentError> {
    table.get(label).copied().ok_or_else(|| AgentError::UnknownLabel {
        dimension,
        label: label.to_string(),
        known: table.keys().cloned().collect(),
    })
}
