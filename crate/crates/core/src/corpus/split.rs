use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CorpusError, Label, Language, Split, TweetRecord};
use crate::inference::Variant;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitOutcome {
    pub train: Vec<TweetRecord>,
    pub test: Vec<TweetRecord>,
}

fn language_seed(seed: u64, language: Language) -> u64 {
    let slot = Language::ALL.iter().position(|l| *l == language).unwrap_or(0) as u64 + 1;
    seed ^ slot.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Round-half-up train size for a group of `n` records.
fn train_size(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) + 0.5).floor().min(n as f64) as usize
}

/// Splits records into train and test sets independently per language.
///
/// Every record is assigned (existing split tags are overwritten). Each
/// language contributes `round(n * train_fraction)` records to the training
/// set; membership is drawn from a seeded ChaCha stream so the result is
/// reproducible. Both outputs keep the input order.
pub fn stratified_split(records: &[TweetRecord], train_fraction: f64, seed: u64) -> Result<SplitOutcome, CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    let mut by_language: BTreeMap<Language, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_language.entry(r.language).or_default().push(i);
    }

    let mut in_train = vec![false; records.len()];
    for (language, mut indices) in by_language {
        let k = train_size(indices.len(), train_fraction);
        let mut rng = ChaCha8Rng::seed_from_u64(language_seed(seed, language));
        indices.shuffle(&mut rng);
        for &i in &indices[..k] {
            in_train[i] = true;
        }
    }

    let mut outcome = SplitOutcome::default();
    for (record, train) in records.iter().zip(in_train) {
        let mut record = record.clone();
        if train {
            record.split = Some(Split::Train);
            outcome.train.push(record);
        } else {
            record.split = Some(Split::Test);
            outcome.test.push(record);
        }
    }
    Ok(outcome)
}

/// Training sets for the four fine-tuned variants. Korean never enters a
/// training set; the multilingual set takes the training rows of every other
/// language.
pub fn build_training_sets(corpus: &[TweetRecord]) -> BTreeMap<Variant, Vec<TweetRecord>> {
    let train: Vec<&TweetRecord> = corpus.iter().filter(|r| r.split == Some(Split::Train)).collect();
    let pick = |keep: &dyn Fn(Language) -> bool| -> Vec<TweetRecord> {
        train
            .iter()
            .filter(|r| keep(r.language))
            .map(|r| (*r).clone())
            .collect()
    };
    let mut sets = BTreeMap::new();
    sets.insert(Variant::English, pick(&|l| l == Language::En));
    sets.insert(Variant::Spanish, pick(&|l| l == Language::Es));
    sets.insert(
        Variant::EnglishSpanish,
        pick(&|l| matches!(l, Language::En | Language::Es)),
    );
    sets.insert(Variant::Multilanguage, pick(&|l| l != Language::Ko));
    sets
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LanguageSummary {
    pub total: usize,
    pub by_split: BTreeMap<Split, usize>,
    pub unassigned: usize,
    pub by_label: BTreeMap<Label, usize>,
    /// Fraction of this language's records whose gold label is `unrelated`.
    pub share_unrelated: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub total: usize,
    pub languages: BTreeMap<Language, LanguageSummary>,
}

impl CorpusSummary {
    pub fn share_unrelated(&self, language: Language) -> Option<f64> {
        self.languages.get(&language).map(|s| s.share_unrelated)
    }

    /// Share-of-unrelated lookup keyed by language, for regression covariates.
    pub fn share_map(&self) -> HashMap<Language, f64> {
        self.languages.iter().map(|(l, s)| (*l, s.share_unrelated)).collect()
    }
}

pub fn summarize(corpus: &[TweetRecord]) -> CorpusSummary {
    let mut languages: BTreeMap<Language, LanguageSummary> = BTreeMap::new();
    for r in corpus {
        let entry = languages.entry(r.language).or_default();
        entry.total += 1;
        match r.split {
            Some(split) => *entry.by_split.entry(split).or_default() += 1,
            None => entry.unassigned += 1,
        }
        *entry.by_label.entry(r.label).or_default() += 1;
    }
    for summary in languages.values_mut() {
        let unrelated = summary.by_label.get(&Label::Unrelated).copied().unwrap_or(0);
        summary.share_unrelated = unrelated as f64 / summary.total as f64;
    }
    CorpusSummary {
        total: corpus.len(),
        languages,
    }
}
