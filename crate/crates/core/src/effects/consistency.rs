use super::{
    cumulative_model_language, pretraining_fraction, share_unrelated_total, Coefficients, DEFAULT_PRETRAINING_TOKENS,
};
use crate::consistency::ConsistencyCheck;
use crate::corpus::Language;
use crate::inference::Variant;

const MODEL_LANGUAGE_QUOTES: [(Variant, Language, f64); 6] = [
    (Variant::Multilanguage, Language::Pl, -0.718),
    (Variant::Multilanguage, Language::Tr, -0.573),
    (Variant::EnglishSpanish, Language::Id, 0.435),
    (Variant::EnglishSpanish, Language::Ko, 0.545),
    (Variant::Spanish, Language::Es, -0.468),
    (Variant::EnglishSpanish, Language::Es, -0.272),
];

const SHARE_UNRELATED_QUOTES: [(Variant, f64); 3] = [
    (Variant::EnglishSpanish, 5.009),
    (Variant::Spanish, 4.456),
    (Variant::Multilanguage, 3.597),
];

/// Recomputes the published cumulative effects and the pretraining
/// fractions. Quotes are three-decimal values, so the tolerance is half a
/// unit in the third decimal.
pub fn published_checks(m3: Option<&dyn Coefficients>, m4: Option<&dyn Coefficients>) -> Vec<ConsistencyCheck> {
    let mut checks = Vec::new();
    if let Some(m3) = m3 {
        for (v, l, quoted) in MODEL_LANGUAGE_QUOTES {
            if let Ok(e) = cumulative_model_language(m3, v, l) {
                checks.push(ConsistencyCheck::new(
                    format!("M3 cumulative effect {} × {}", v.level(), l.english_name()),
                    e.total,
                    quoted,
                    0.0005,
                ));
            }
        }
    }
    if let Some(m4) = m4 {
        for (v, quoted) in SHARE_UNRELATED_QUOTES {
            if let Ok(e) = share_unrelated_total(m4, v) {
                checks.push(
                    ConsistencyCheck::new(
                        format!("M4 ShareUnrelated total {}", v.level()),
                        e.total,
                        quoted,
                        0.0005,
                    )
                    .known(),
                );
            }
        }
    }
    for (tokens, quoted) in [(1500u64, 9.62e-11), (1349, 8.65e-11)] {
        let f = pretraining_fraction(tokens, DEFAULT_PRETRAINING_TOKENS).expect("positive denominator");
        checks.push(ConsistencyCheck::new(
            format!("pretraining fraction of {tokens} tokens"),
            f,
            quoted,
            0.005e-11,
        ));
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::ModelId;

    #[test]
    fn fixture_checks() {
        let m3 = ModelId::M3.fixture();
        let m4 = ModelId::M4.fixture();
        let checks = published_checks(Some(&m3), Some(&m4));
        assert_eq!(checks.len(), 11);
        assert!(checks[..6].iter().all(|c| c.consistent), "{:#?}", &checks[..6]);
        // The narrative ShareUnrelated totals do not follow from the table.
        assert!(checks[6..9].iter().all(|c| !c.consistent && c.known_discrepancy));
        assert!(checks.iter().all(ConsistencyCheck::as_expected));
        assert!(checks[9..].iter().all(|c| c.consistent), "{:#?}", &checks[9..]);
        assert!(published_checks(None, None).len() == 2);
    }
}
