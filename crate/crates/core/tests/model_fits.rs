use stance_core::corpus::{Label, Language, Split, TranslationQuality, TweetRecord};
use stance_core::effects::{analysis_rows, make_spec, ModelId, SHARE_UNRELATED};
use stance_core::glm::{encode_design, fit_logistic, GlmError, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use stance_core::inference::{PredictionRecord, Variant};

fn corpus() -> Vec<TweetRecord> {
    let languages = [Language::En, Language::Es, Language::Tr, Language::Fr];
    let mut records = Vec::new();
    for (li, language) in languages.iter().enumerate() {
        for i in 0..80 {
            // Unrelated share differs by language: every (li + 3)-th record.
            let label = if i % (li + 3) == 0 {
                Label::Unrelated
            } else {
                Label::ALL[i % 3]
            };
            let translated = *language != Language::En && i % 7 == 0;
            records.push(TweetRecord {
                id: format!("{language}-{i}"),
                text: format!("{language} {i}"),
                language: *language,
                label,
                split: Some(if i % 4 == 0 { Split::Test } else { Split::Train }),
                translation_quality: if translated {
                    [TranslationQuality::Good, TranslationQuality::Bad][i % 2]
                } else {
                    TranslationQuality::NotTranslated
                },
                translated_text: translated.then(|| format!("translated {i}")),
            });
        }
    }
    records
}

fn predictions(corpus: &[TweetRecord]) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    for (vi, variant) in Variant::ALL.iter().enumerate() {
        for (i, r) in corpus.iter().enumerate() {
            let correct = (i * 13 + vi * 7 + i / 5) % 10 >= 3;
            out.push(PredictionRecord {
                id: r.id.clone(),
                variant: *variant,
                predicted: if correct {
                    r.label
                } else {
                    Label::ALL[(r.label as usize + 1) % 4]
                },
                correct,
                raw_response: String::new(),
                input_token_count: 0,
                output_token_count: 1,
                model: format!("m{vi}"),
                prompt_version: "v".into(),
            });
        }
    }
    out
}

#[test]
fn models_one_to_three_fit_on_outcomes() {
    let corpus = corpus();
    let rows = analysis_rows(&predictions(&corpus), &corpus).unwrap();
    for id in [ModelId::M1, ModelId::M2, ModelId::M3] {
        let design = encode_design(&rows, &make_spec(id)).unwrap();
        let fit = fit_logistic(&design, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(fit.converged, "{id}");
        assert_eq!(fit.n_obs, 4 * corpus.len());
    }
}

#[test]
fn per_language_share_makes_model_four_rank_deficient() {
    let corpus = corpus();
    let rows = analysis_rows(&predictions(&corpus), &corpus).unwrap();
    let design = encode_design(&rows, &make_spec(ModelId::M4)).unwrap();
    match fit_logistic(&design, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS) {
        Err(GlmError::RankDeficiency { dependent }) => {
            assert!(dependent.iter().any(|d| d.contains(SHARE_UNRELATED)), "{dependent:?}");
        }
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}
