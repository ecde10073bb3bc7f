//! Regression specifications and effect composition.
//!
//! Builds the four model specifications, assembles analysis rows from
//! predictions, and sums coefficients into the cumulative effects reported
//! per model variant and language.

mod consistency;
mod output;
mod pretrain;

pub use crate::consistency::ConsistencyCheck;
pub use consistency::published_checks;
pub use output::{curve_tsv, heatmap, heatmap_tsv, scatter_tsv, HeatmapCell};
pub use pretrain::{
    accuracy_by_pretraining_share, pretraining_fraction, PretrainAnalysis, PretrainShare, PretrainShareTable,
    ShareGroup, ShareProvenance, TrendLine, DEFAULT_PRETRAINING_TOKENS,
};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{summarize, Language, Split, TweetRecord};
use crate::glm::{CoefficientTable, Covariates, FitResult, Observation, RegressionSpec, Term, INTERACTION_SEP};
use crate::inference::{PredictionRecord, Variant};

pub const RESPONSE: &str = "Correct";
pub const MODEL: &str = "Model";
pub const LABEL: &str = "Label";
pub const LANGUAGE: &str = "Language";
pub const SPLIT: &str = "Split";
pub const TRANSLATION_QUALITY: &str = "TranslationQuality";
pub const SHARE_UNRELATED: &str = "ShareUnrelated";
pub const INTERCEPT: &str = crate::glm::INTERCEPT;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectsError {
    #[error("coefficient `{0}` is missing; the fit does not cover this level")]
    MissingTerm(String),
    #[error("share {0} is outside [0, 1]")]
    ShareOutOfRange(f64),
    #[error("no predictions left after filtering")]
    NoPredictions,
    #[error("prediction `{0}` has no matching corpus record")]
    UnmatchedPrediction(String),
    #[error("record `{0}` has no split assigned")]
    MissingSplit(String),
    #[error("trend line undefined: {0}")]
    DegenerateTrend(String),
    #[error("pretraining token count must be positive")]
    ZeroPretraining,
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("pretraining share table: {0}")]
    ShareTable(String),
}

/// The four regression specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            ModelId::M1 => "Model 1: main effects",
            ModelId::M2 => "Model 2: Model × Label",
            ModelId::M3 => "Model 3: Model × Language",
            ModelId::M4 => "Model 4: Model × ShareUnrelated and Model × Language",
        }
    }

    /// Published coefficients for this specification.
    pub fn fixture(self) -> CoefficientTable {
        let src = match self {
            ModelId::M1 => include_str!("../../fixtures/model1.tsv"),
            ModelId::M2 => include_str!("../../fixtures/model2.tsv"),
            ModelId::M3 => include_str!("../../fixtures/model3.tsv"),
            ModelId::M4 => include_str!("../../fixtures/model4.tsv"),
        };
        CoefficientTable::parse_tsv(src).expect("bundled fixture is valid")
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.number())
    }
}

impl FromStr for ModelId {
    type Err = EffectsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().trim_start_matches('m') {
            "1" => Ok(ModelId::M1),
            "2" => Ok(ModelId::M2),
            "3" => Ok(ModelId::M3),
            "4" => Ok(ModelId::M4),
            _ => Err(EffectsError::UnknownModel(s.to_string())),
        }
    }
}

/// Regression formula for `id`, with the baseline English model on
/// untranslated, neutral, English training data as reference.
pub fn make_spec(id: ModelId) -> RegressionSpec {
    let model = Term::factor(MODEL, Variant::English.level());
    let label = Term::factor(LABEL, "neutral");
    let language = Term::factor(LANGUAGE, Language::En.token());
    let split = Term::factor(SPLIT, Split::Train.token());
    let quality = Term::factor(TRANSLATION_QUALITY, "not_translated");
    match id {
        ModelId::M1 => RegressionSpec::new(RESPONSE, vec![model, label, language, split, quality]),
        ModelId::M2 => {
            RegressionSpec::new(RESPONSE, vec![model, label, language, split, quality]).with_interaction(MODEL, LABEL)
        }
        ModelId::M3 => RegressionSpec::new(RESPONSE, vec![model, label, language, split, quality])
            .with_interaction(MODEL, LANGUAGE),
        ModelId::M4 => RegressionSpec::new(
            RESPONSE,
            vec![model, language, Term::covariate(SHARE_UNRELATED), split, quality],
        )
        .with_interaction(MODEL, LANGUAGE)
        .with_interaction(MODEL, SHARE_UNRELATED),
    }
}

/// Joins predictions to their corpus records and builds one analysis row
/// per prediction. `additional_test` rows count as test for the Split
/// factor; ShareUnrelated is the corpus share of unrelated records in the
/// row's language.
pub fn analysis_rows(
    predictions: &[PredictionRecord],
    corpus: &[TweetRecord],
) -> Result<Vec<Observation>, EffectsError> {
    let by_id: HashMap<&str, &TweetRecord> = corpus.iter().map(|r| (r.id.as_str(), r)).collect();
    let shares = summarize(corpus).share_map();
    predictions
        .iter()
        .map(|p| {
            let record = by_id
                .get(p.id.as_str())
                .ok_or_else(|| EffectsError::UnmatchedPrediction(p.id.clone()))?;
            let split = match record
                .split
                .ok_or_else(|| EffectsError::MissingSplit(record.id.clone()))?
            {
                Split::Train => Split::Train,
                Split::Test | Split::AdditionalTest => Split::Test,
            };
            let covariates = Covariates::new()
                .level(MODEL, p.variant.level())
                .level(LABEL, record.label.token())
                .level(LANGUAGE, record.language.token())
                .level(SPLIT, split.token())
                .level(TRANSLATION_QUALITY, record.translation_quality.token())
                .value(SHARE_UNRELATED, shares[&record.language]);
            Ok(Observation::new(p.correct, covariates))
        })
        .collect()
}

/// Anything that can answer "what is the coefficient of this term".
pub trait Coefficients {
    fn coefficient(&self, term: &str) -> Option<f64>;
}

impl Coefficients for CoefficientTable {
    fn coefficient(&self, term: &str) -> Option<f64> {
        self.estimate(term)
    }
}

impl Coefficients for FitResult {
    fn coefficient(&self, term: &str) -> Option<f64> {
        self.estimate(term)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectComponent {
    pub term: String,
    pub value: f64,
}

/// A named sum of coefficients. Reference levels contribute no component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectResult {
    pub components: Vec<EffectComponent>,
    pub total: f64,
}

impl EffectResult {
    fn from_components(components: Vec<EffectComponent>) -> Self {
        let total = components.iter().fold(0.0, |acc, c| acc + c.value);
        Self { components, total }
    }
}

pub fn model_term(variant: Variant) -> Option<String> {
    (variant != Variant::English).then(|| format!("{MODEL}:{}", variant.level()))
}

pub fn language_term(language: Language) -> Option<String> {
    (language != Language::En).then(|| format!("{LANGUAGE}:{}", language.token()))
}

pub fn interaction_term(left: &str, right: &str) -> String {
    format!("{left}{INTERACTION_SEP}{right}")
}

fn required(coefs: &(impl Coefficients + ?Sized), term: &str) -> Result<EffectComponent, EffectsError> {
    coefs
        .coefficient(term)
        .map(|value| EffectComponent {
            term: term.to_string(),
            value,
        })
        .ok_or_else(|| EffectsError::MissingTerm(term.to_string()))
}

fn optional(coefs: &(impl Coefficients + ?Sized), term: &str) -> Option<EffectComponent> {
    coefs.coefficient(term).map(|value| EffectComponent {
        term: term.to_string(),
        value,
    })
}

/// Model main effect + language main effect + their interaction, as log-odds
/// relative to the English model on English text. Interactions absent from
/// the fit (level pairs never observed) contribute nothing.
pub fn cumulative_model_language(
    coefs: &(impl Coefficients + ?Sized),
    variant: Variant,
    language: Language,
) -> Result<EffectResult, EffectsError> {
    let mut components = Vec::new();
    let model = model_term(variant);
    let lang = language_term(language);
    if let Some(m) = &model {
        components.push(required(coefs, m)?);
    }
    if let Some(l) = &lang {
        components.push(required(coefs, l)?);
    }
    if let (Some(m), Some(l)) = (&model, &lang) {
        components.extend(optional(coefs, &interaction_term(m, l)));
    }
    Ok(EffectResult::from_components(components))
}

/// Model main effect + ShareUnrelated main effect + their interaction.
pub fn share_unrelated_total(
    coefs: &(impl Coefficients + ?Sized),
    variant: Variant,
) -> Result<EffectResult, EffectsError> {
    let mut components = Vec::new();
    let model = model_term(variant);
    if let Some(m) = &model {
        components.push(required(coefs, m)?);
    }
    components.push(required(coefs, SHARE_UNRELATED)?);
    if let Some(m) = &model {
        components.push(required(coefs, &interaction_term(m, SHARE_UNRELATED))?);
    }
    Ok(EffectResult::from_components(components))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub share: f64,
    pub total_effect: f64,
    pub accuracy: f64,
}

/// Predicted accuracy across shares of unrelated content for one variant and
/// language, on the baseline label, split and translation levels:
/// logistic(intercept + model + language + model×language
/// + s·(ShareUnrelated + model×ShareUnrelated)).
pub fn accuracy_curve(
    coefs: &(impl Coefficients + ?Sized),
    variant: Variant,
    language: Language,
    grid: &[f64],
) -> Result<Vec<CurvePoint>, EffectsError> {
    if let Some(bad) = grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(EffectsError::ShareOutOfRange(*bad));
    }
    let offset = required(coefs, INTERCEPT)?.value + cumulative_model_language(coefs, variant, language)?.total;
    let mut slope = required(coefs, SHARE_UNRELATED)?.value;
    if let Some(m) = model_term(variant) {
        slope += required(coefs, &interaction_term(&m, SHARE_UNRELATED))?.value;
    }
    Ok(grid
        .iter()
        .map(|&share| {
            let total_effect = offset + share * slope;
            CurvePoint {
                share,
                total_effect,
                accuracy: crate::glm::logistic(total_effect),
            }
        })
        .collect())
}

/// Evenly spaced shares from 0 to 1 inclusive.
pub fn share_grid(steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}
