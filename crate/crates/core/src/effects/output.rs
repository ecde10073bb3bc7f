use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{accuracy_curve, cumulative_model_language, Coefficients, EffectsError, PretrainAnalysis};
use crate::corpus::Language;
use crate::inference::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub variant: Variant,
    pub language: Language,
    pub total: f64,
}

/// Cumulative model×language effects for every variant and language the
/// coefficients cover; pairs with a missing main effect are skipped.
pub fn heatmap(coefs: &(impl Coefficients + ?Sized)) -> Vec<HeatmapCell> {
    let mut cells = Vec::new();
    for variant in Variant::ALL {
        for language in Language::ALL {
            if let Ok(e) = cumulative_model_language(coefs, variant, *language) {
                cells.push(HeatmapCell {
                    variant,
                    language: *language,
                    total: e.total,
                });
            }
        }
    }
    cells
}

pub fn heatmap_tsv(cells: &[HeatmapCell]) -> String {
    let mut out = String::from("variant\tlanguage\ttotal_log_odds\n");
    for c in cells {
        writeln!(out, "{}\t{}\t{:.5}", c.variant.level(), c.language.token(), c.total).unwrap();
    }
    out
}

/// Accuracy against share of unrelated content for each (variant, language).
pub fn curve_tsv(
    coefs: &(impl Coefficients + ?Sized),
    pairs: &[(Variant, Language)],
    grid: &[f64],
) -> Result<String, EffectsError> {
    let mut out = String::from("variant\tlanguage\tshare_unrelated\ttotal_log_odds\taccuracy\n");
    for (variant, language) in pairs {
        for p in accuracy_curve(coefs, *variant, *language, grid)? {
            writeln!(
                out,
                "{}\t{}\t{:.4}\t{:.5}\t{:.5}",
                variant.level(),
                language.token(),
                p.share,
                p.total_effect,
                p.accuracy
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Group means with the trend line's fitted value at each group's share.
pub fn scatter_tsv(analysis: &PretrainAnalysis) -> String {
    let mut out = String::from("language\tvariant\tpretrain_share_percent\tprovenance\tn\tmean_accuracy\ttrend\n");
    for g in &analysis.groups {
        let provenance = match g.provenance {
            super::ShareProvenance::Listed => "listed",
            super::ShareProvenance::BelowThreshold => "below_threshold",
        };
        writeln!(
            out,
            "{}\t{}\t{:.2}\t{}\t{}\t{:.5}\t{:.5}",
            g.language.token(),
            g.variant.level(),
            g.share_percent,
            provenance,
            g.n,
            g.mean_accuracy,
            analysis.trend.intercept + analysis.trend.slope * g.share_percent
        )
        .unwrap();
    }
    out
}
