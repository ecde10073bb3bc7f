use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::EffectsError;
use crate::corpus::{Label, Language, TweetRecord};
use crate::inference::{PredictionRecord, Variant};

/// Token count of the base model's pretraining corpus.
pub const DEFAULT_PRETRAINING_TOKENS: f64 = 1.56e13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareProvenance {
    /// Published share.
    Listed,
    /// Not published because it fell under the reporting threshold; stored as 0.
    BelowThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainShare {
    pub percent: f64,
    pub provenance: ShareProvenance,
}

/// Share of each language in the base model's pretraining data, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainShareTable {
    shares: BTreeMap<Language, PretrainShare>,
}

impl Default for PretrainShareTable {
    fn default() -> Self {
        use Language::*;
        let listed = [
            (En, 89.70),
            (De, 0.17),
            (Fr, 0.16),
            (Es, 0.13),
            (It, 0.11),
            (Pl, 0.09),
            (Pt, 0.09),
            (Ko, 0.06),
            (Id, 0.03),
            (Hu, 0.03),
        ];
        let mut shares: BTreeMap<Language, PretrainShare> = listed
            .into_iter()
            .map(|(l, percent)| {
                (
                    l,
                    PretrainShare {
                        percent,
                        provenance: ShareProvenance::Listed,
                    },
                )
            })
            .collect();
        for l in [Ar, Tr, Hi] {
            shares.insert(
                l,
                PretrainShare {
                    percent: 0.0,
                    provenance: ShareProvenance::BelowThreshold,
                },
            );
        }
        Self { shares }
    }
}

impl PretrainShareTable {
    /// Builds a table from listed shares; languages not given are recorded
    /// as below threshold with share 0.
    pub fn from_listed(listed: impl IntoIterator<Item = (Language, f64)>) -> Result<Self, EffectsError> {
        let mut shares = BTreeMap::new();
        for (l, percent) in listed {
            if !(0.0..=100.0).contains(&percent) {
                return Err(EffectsError::ShareTable(format!(
                    "share {percent} for `{l}` is not a percentage"
                )));
            }
            shares.insert(
                l,
                PretrainShare {
                    percent,
                    provenance: ShareProvenance::Listed,
                },
            );
        }
        for l in Language::ALL {
            shares.entry(*l).or_insert(PretrainShare {
                percent: 0.0,
                provenance: ShareProvenance::BelowThreshold,
            });
        }
        Ok(Self { shares })
    }

    pub fn get(&self, language: Language) -> PretrainShare {
        self.shares[&language]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Language, PretrainShare)> + '_ {
        self.shares.iter().map(|(l, s)| (*l, *s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareGroup {
    pub language: Language,
    pub variant: Variant,
    pub share_percent: f64,
    pub provenance: ShareProvenance,
    pub n: usize,
    pub mean_accuracy: f64,
}

/// Least-squares line `mean_accuracy = intercept + slope · share_percent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendLine {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainAnalysis {
    pub groups: Vec<ShareGroup>,
    pub trend: TrendLine,
}

fn least_squares(points: &[(f64, f64)]) -> Result<TrendLine, EffectsError> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(EffectsError::DegenerateTrend(
            "all groups share one pretraining share".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(TrendLine {
        slope,
        intercept: my - slope * mx,
    })
}

/// Mean accuracy per (language, variant) against the language's pretraining
/// share, excluding English records and records labelled unrelated, plus a
/// least-squares trend over the group means.
pub fn accuracy_by_pretraining_share(
    predictions: &[PredictionRecord],
    corpus: &[TweetRecord],
    shares: &PretrainShareTable,
) -> Result<PretrainAnalysis, EffectsError> {
    let by_id: HashMap<&str, &TweetRecord> = corpus.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut tallies: BTreeMap<(Language, Variant), (usize, usize)> = BTreeMap::new();
    for p in predictions {
        let record = by_id
            .get(p.id.as_str())
            .ok_or_else(|| EffectsError::UnmatchedPrediction(p.id.clone()))?;
        if record.language == Language::En || record.label == Label::Unrelated {
            continue;
        }
        let t = tallies.entry((record.language, p.variant)).or_default();
        t.0 += 1;
        t.1 += usize::from(p.correct);
    }
    if tallies.is_empty() {
        return Err(EffectsError::NoPredictions);
    }
    let groups: Vec<ShareGroup> = tallies
        .into_iter()
        .map(|((language, variant), (n, correct))| {
            let share = shares.get(language);
            ShareGroup {
                language,
                variant,
                share_percent: share.percent,
                provenance: share.provenance,
                n,
                mean_accuracy: correct as f64 / n as f64,
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = groups.iter().map(|g| (g.share_percent, g.mean_accuracy)).collect();
    let trend = least_squares(&points)?;
    Ok(PretrainAnalysis { groups, trend })
}

/// Fine-tuning tokens as a fraction of pretraining tokens.
pub fn pretraining_fraction(fine_tuning_tokens: u64, pretraining_tokens: f64) -> Result<f64, EffectsError> {
    if pretraining_tokens.is_nan() || pretraining_tokens <= 0.0 {
        return Err(EffectsError::ZeroPretraining);
    }
    Ok(fine_tuning_tokens as f64 / pretraining_tokens)
}
