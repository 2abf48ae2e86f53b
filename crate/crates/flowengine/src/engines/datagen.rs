//! Synthetic bank-credit dataset generator.
//!
//! Encodes plausible dependencies between demographic, financial, and
//! behavioral factors, plus a deliberate gender-dependent shift in the
//! default-generating process so a plain model exhibits measurable
//! statistical disparity for the fairness engines to mitigate. All
//! distribution constants are named fields of [`BankGenConfig`].

use crate::data::{ColumnKind, Dataset};
use crate::error::{FlowError, Result};
use crate::rng::SplitMix64;

/// Every constant of the data-generating process.
#[derive(Debug, Clone)]
pub struct BankGenConfig {
    /// income ~ LogNormal(mu, sigma)
    pub income_mu: f64,
    pub income_sigma: f64,
    /// age ~ Uniform{age_min..=age_max}
    pub age_min: u64,
    pub age_max: u64,
    /// profession ~ Categorical(employee, self-employed, unemployed)
    pub profession_probs: [f64; 3],
    pub p_female: f64,
    /// loan_amount = income * Uniform(loan_ratio_min, loan_ratio_max)
    pub loan_ratio_min: f64,
    pub loan_ratio_max: f64,
    /// credit_score = clamp(score_base + score_income * z_income
    ///   + score_age * (age - age_center) + score_profession[p]
    ///   + Normal(0, score_noise_sd), score_clamp_lo..score_clamp_hi)
    pub score_base: f64,
    pub score_income: f64,
    pub score_age: f64,
    pub score_profession: [f64; 3],
    pub score_noise_sd: f64,
    pub score_clamp_lo: f64,
    pub score_clamp_hi: f64,
    /// Centers/scales used to standardize predictors inside the default
    /// model (fixed population-level approximations, not sample statistics,
    /// so each row is generated independently).
    pub income_center: f64,
    pub income_scale: f64,
    pub lti_center: f64,
    pub lti_scale: f64,
    pub score_center: f64,
    pub score_scale: f64,
    pub age_center: f64,
    pub age_scale: f64,
    /// default ~ Bernoulli(sigmoid(logit)) with
    /// logit = default_intercept + b_income * z_income + b_lti * z_lti
    ///   + b_score * z_score + b_age * z_age
    ///   + b_unemployed * professionUnemployed
    ///   + gender_bias_logit * genderFemale
    pub default_intercept: f64,
    pub b_income: f64,
    pub b_lti: f64,
    pub b_score: f64,
    pub b_age: f64,
    pub b_unemployed: f64,
    /// The injected bias the fairness engines must mitigate.
    pub gender_bias_logit: f64,
    /// Minimum gender gap in positive-target rate the generator is expected
    /// to produce at n >= 5000 (checked by tests, not enforced per draw).
    pub bias_rate_threshold: f64,
}

impl Default for BankGenConfig {
    fn default() -> Self {
        BankGenConfig {
            income_mu: 10.5,
            income_sigma: 0.5,
            age_min: 18,
            age_max: 75,
            profession_probs: [0.7, 0.2, 0.1],
            p_female: 0.5,
            loan_ratio_min: 0.1,
            loan_ratio_max: 3.0,
            score_base: 560.0,
            score_income: 30.0,
            score_age: 0.8,
            score_profession: [20.0, 0.0, -40.0],
            score_noise_sd: 35.0,
            score_clamp_lo: 300.0,
            score_clamp_hi: 850.0,
            income_center: 41_000.0,
            income_scale: 22_000.0,
            lti_center: 1.55,
            lti_scale: 0.84,
            score_center: 600.0,
            score_scale: 50.0,
            age_center: 46.5,
            age_scale: 16.7,
            default_intercept: -0.2,
            b_income: -0.6,
            b_lti: 0.7,
            b_score: -0.8,
            b_age: -0.25,
            b_unemployed: 0.6,
            gender_bias_logit: 0.4,
            bias_rate_threshold: 0.05,
        }
    }
}

/// Column names, in the exact order the generator emits them.
pub const BANK_COLUMNS: [&str; 14] = [
    "income",
    "loan_amount",
    "credit_score",
    "professionEmployee",
    "professionSelfemployed",
    "professionUnemployed",
    "genderFemale",
    "genderMale",
    "age",
    "age_group.<30",
    "age_group.30-50",
    "age_group.50+",
    "loan_to_income",
    "default",
];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Deterministic synthetic credit dataset: same (n_rows, seed, config)
/// always yields a bit-identical table.
pub fn generate_bank_dataset_with(
    n_rows: usize,
    seed: u64,
    config: &BankGenConfig,
) -> Result<Dataset> {
    if n_rows < 1 {
        return Err(FlowError::Params("n_rows must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut cols: Vec<Vec<f64>> = (0..BANK_COLUMNS.len())
        .map(|_| Vec::with_capacity(n_rows))
        .collect();

    for _ in 0..n_rows {
        let income = rng.lognormal(config.income_mu, config.income_sigma);
        let age = (config.age_min + rng.next_below(config.age_max - config.age_min + 1)) as f64;
        let profession = rng.categorical(&config.profession_probs);
        let female = rng.next_f64() < config.p_female;
        let score_noise = rng.normal(0.0, config.score_noise_sd);
        let loan_ratio = rng.uniform(config.loan_ratio_min, config.loan_ratio_max);
        let default_draw = rng.next_f64();

        let z_income = (income - config.income_center) / config.income_scale;
        let credit_score = (config.score_base
            + config.score_income * z_income
            + config.score_age * (age - config.age_center)
            + config.score_profession[profession]
            + score_noise)
            .clamp(config.score_clamp_lo, config.score_clamp_hi);
        let loan_amount = income * loan_ratio;
        let loan_to_income = loan_amount / income;

        let logit = config.default_intercept
            + config.b_income * z_income
            + config.b_lti * (loan_to_income - config.lti_center) / config.lti_scale
            + config.b_score * (credit_score - config.score_center) / config.score_scale
            + config.b_age * (age - config.age_center) / config.age_scale
            + config.b_unemployed * if profession == 2 { 1.0 } else { 0.0 }
            + config.gender_bias_logit * if female { 1.0 } else { 0.0 };
        let default = if default_draw < sigmoid(logit) { 1.0 } else { 0.0 };

        cols[0].push(income);
        cols[1].push(loan_amount);
        cols[2].push(credit_score);
        cols[3].push(if profession == 0 { 1.0 } else { 0.0 });
        cols[4].push(if profession == 1 { 1.0 } else { 0.0 });
        cols[5].push(if profession == 2 { 1.0 } else { 0.0 });
        cols[6].push(if female { 1.0 } else { 0.0 });
        cols[7].push(if female { 0.0 } else { 1.0 });
        cols[8].push(age);
        cols[9].push(if age < 30.0 { 1.0 } else { 0.0 });
        cols[10].push(if (30.0..=50.0).contains(&age) { 1.0 } else { 0.0 });
        cols[11].push(if age > 50.0 { 1.0 } else { 0.0 });
        cols[12].push(loan_to_income);
        cols[13].push(default);
    }

    let kinds = [
        ColumnKind::Numeric, // income
        ColumnKind::Numeric, // loan_amount
        ColumnKind::Numeric, // credit_score
        ColumnKind::Binary,
        ColumnKind::Binary,
        ColumnKind::Binary,
        ColumnKind::Binary,
        ColumnKind::Binary,
        ColumnKind::Numeric, // age
        ColumnKind::Binary,
        ColumnKind::Binary,
        ColumnKind::Binary,
        ColumnKind::Numeric, // loan_to_income
        ColumnKind::Binary,  // default
    ];
    Dataset::from_columns(
        BANK_COLUMNS
            .iter()
            .zip(kinds)
            .zip(cols)
            .map(|((name, kind), values)| (name.to_string(), kind, values))
            .collect(),
    )
}

/// [`generate_bank_dataset_with`] at the default configuration.
pub fn generate_bank_dataset(n_rows: usize, seed: u64) -> Result<Dataset> {
    generate_bank_dataset_with(n_rows, seed, &BankGenConfig::default())
}
