use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use stance_core::consistency::ConsistencyCheck;
use stance_core::corpus::{
    build_training_sets, match_search_terms, parse_corpus, stratified_split, summarize, write_corpus, Label, Language,
    SearchTermTable, Split, TweetRecord,
};
use stance_core::effects::{
    accuracy_by_pretraining_share, analysis_rows, curve_tsv, heatmap, heatmap_tsv, make_spec, published_checks,
    scatter_tsv, share_grid, share_unrelated_total, Coefficients, ModelId, PretrainAnalysis, PretrainShareTable,
};
use stance_core::footprint::{
    compare, published_footprint_checks, ratios_tsv, report_tsv, BillingConvention, Catalog, Comparison,
    FootprintReport, Workload,
};
use stance_core::glm::{
    encode_design, fit_logistic, CoefficientTable, GlmError, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use stance_core::inference::{
    read_log, run_classify_campaign, run_translate_campaign, CampaignConfig, CampaignError, CampaignReport,
    ClassifyEntry, FailureKind, FailureRecord, HttpEndpoint, PredictionRecord, RetryPolicy, TranslateEntry, Variant,
};
use stance_core::report::{render_report, EffectsSection, FootprintSection, ReportInputs};

use crate::config::{input_file, optional_file, output_dir, RunConfig};
use crate::error::{CliError, CliResult, Status, WithStatus};
use crate::{
    ClassifyArgs, EffectsArgs, FilterArgs, FitArgs, FootprintArgs, IngestArgs, ReportArgs, SplitArgs, TranslateArgs,
};

const DEFAULT_OUT: &str = "out";
const DEFAULT_SEED: u64 = 42;
const BUILTIN: &str = "builtin";

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn load_corpus(path: &Path) -> CliResult<Vec<TweetRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))?;
    parse_corpus(file).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn store_corpus(path: &Path, records: &[TweetRecord]) -> CliResult<()> {
    let mut buf = Vec::new();
    write_corpus(&mut buf, records).data_err()?;
    write_file(path, buf)
}

fn summary_tsv(records: &[TweetRecord]) -> String {
    let summary = summarize(records);
    let mut out = String::from("language\ttotal\ttrain\ttest\tadditional_test\tunassigned");
    for l in Label::ALL {
        write!(out, "\t{l}").unwrap();
    }
    out.push_str("\tshare_unrelated\n");
    for (language, s) in &summary.languages {
        write!(out, "{language}\t{}", s.total).unwrap();
        for split in Split::ALL {
            write!(out, "\t{}", s.by_split.get(split).copied().unwrap_or(0)).unwrap();
        }
        write!(out, "\t{}", s.unassigned).unwrap();
        for l in Label::ALL {
            write!(out, "\t{}", s.by_label.get(l).copied().unwrap_or(0)).unwrap();
        }
        writeln!(out, "\t{:.5}", s.share_unrelated).unwrap();
    }
    out
}

fn checks_tsv(checks: &[ConsistencyCheck]) -> String {
    let mut out = String::from("check\tcomputed\tpublished\ttolerance\tconsistent\tknown_discrepancy\tas_expected\n");
    for c in checks {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.name,
            c.computed,
            c.published,
            c.tolerance,
            c.consistent,
            c.known_discrepancy,
            c.as_expected()
        )
        .unwrap();
    }
    out
}

pub fn ingest(args: &IngestArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = input_file(args.corpus.as_ref(), config.corpus.as_ref(), "corpus")?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let records = load_corpus(&corpus_path)?;
    store_corpus(&out.join("corpus.csv"), &records)?;
    write_file(&out.join("corpus_summary.tsv"), summary_tsv(&records))?;
    eprintln!("ingested {} records", records.len());
    Ok(())
}

pub fn filter(args: &FilterArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = input_file(args.corpus.as_ref(), config.corpus.as_ref(), "corpus")?;
    let terms_path = optional_file(args.terms.as_ref(), config.terms.as_ref(), "terms")?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let table = match terms_path {
        Some(p) => {
            let src = fs::read_to_string(&p).config_err()?;
            SearchTermTable::from_toml(&src).config_err()?
        }
        None => SearchTermTable::default_table(),
    };
    let records = load_corpus(&corpus_path)?;
    let mut kept = Vec::new();
    let mut matches = String::from("id\tlanguage\tmatched_terms\n");
    for r in &records {
        let hits = match_search_terms(&r.text, r.language, &table).data_err()?;
        if !hits.is_empty() {
            writeln!(matches, "{}\t{}\t{}", r.id, r.language, hits.join("|")).unwrap();
            kept.push(r.clone());
        }
    }
    store_corpus(&out.join("filtered.csv"), &kept)?;
    write_file(&out.join("filter_matches.tsv"), matches)?;
    eprintln!("kept {} of {} records", kept.len(), records.len());
    Ok(())
}

pub fn split(args: &SplitArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = input_file(args.corpus.as_ref(), config.corpus.as_ref(), "corpus")?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let mut records = load_corpus(&corpus_path)?;

    let unassigned: Vec<TweetRecord> = records.iter().filter(|r| r.split.is_none()).cloned().collect();
    if !unassigned.is_empty() {
        let outcome = stratified_split(&unassigned, args.train_fraction, seed).config_err()?;
        let assigned: BTreeMap<String, Option<Split>> = outcome
            .train
            .iter()
            .chain(&outcome.test)
            .map(|r| (r.id.clone(), r.split))
            .collect();
        for r in records.iter_mut().filter(|r| r.split.is_none()) {
            r.split = assigned[&r.id];
        }
    }
    store_corpus(&out.join("split.csv"), &records)?;
    write_file(&out.join("split_summary.tsv"), summary_tsv(&records))?;

    let mut sizes = String::from("variant\ttraining_records\tlanguages\n");
    for (variant, set) in build_training_sets(&records) {
        let mut languages: Vec<Language> = set.iter().map(|r| r.language).collect();
        languages.sort();
        languages.dedup();
        let names: Vec<&str> = languages.iter().map(|l| l.token()).collect();
        writeln!(sizes, "{}\t{}\t{}", variant, set.len(), names.join(",")).unwrap();
        store_corpus(&out.join(format!("train_{}.csv", variant.token())), &set)?;
    }
    write_file(&out.join("training_sets.tsv"), sizes)?;
    eprintln!("{} records assigned with seed {seed}", unassigned.len());
    Ok(())
}

fn campaign_status(report: &CampaignReport, failures: &[&FailureRecord]) -> CliResult<()> {
    eprintln!(
        "{} items: {} resumed, {} processed, {} ok, {} failed{}",
        report.total,
        report.resumed,
        report.processed,
        report.successes,
        report.failures,
        if report.interrupted {
            " (stopped early; rerun to resume)"
        } else {
            ""
        }
    );
    let transport = failures
        .iter()
        .filter(|f| f.kind == FailureKind::TransportError)
        .count();
    if transport > 0 {
        let first = failures.iter().find(|f| f.kind == FailureKind::TransportError).unwrap();
        return Err(CliError::new(
            Status::Transport,
            anyhow::anyhow!(
                "{transport} item(s) failed on transport; first: {}: {}",
                first.id,
                first.detail
            ),
        ));
    }
    Ok(())
}

fn campaign_err(e: CampaignError) -> CliError {
    match e {
        CampaignError::Unwritable { .. } => CliError::new(Status::Config, e),
        _ => CliError::new(Status::Data, e),
    }
}

fn retry_policy(max_attempts: Option<u32>) -> RetryPolicy {
    let mut policy = RetryPolicy::default();
    if let Some(n) = max_attempts {
        policy.max_attempts = n.max(1);
    }
    policy
}

fn campaign_config(id: String, dir: PathBuf, parallelism: usize, max_items: Option<usize>) -> CampaignConfig {
    let config = CampaignConfig::new(id, dir).with_parallelism(parallelism.max(1));
    match max_items {
        Some(n) => config.with_max_items(n),
        None => config,
    }
}

pub fn classify(args: &ClassifyArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = input_file(args.corpus.as_ref(), config.corpus.as_ref(), "corpus")?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let checkpoints = output_dir(
        args.checkpoint_dir.as_ref(),
        config.checkpoint_dir.as_ref(),
        &out.join("checkpoints").to_string_lossy(),
    )?;
    let descriptor = config.endpoint(args.variant.token(), args.endpoint.as_deref(), args.model_id.as_deref())?;
    let endpoint = HttpEndpoint::from_env(descriptor).config_err()?;

    let records: Vec<TweetRecord> = load_corpus(&corpus_path)?
        .into_iter()
        .filter(|r| args.split.is_none() || r.split == args.split)
        .collect();
    let campaign = campaign_config(
        format!("classify-{}", args.variant.token()),
        checkpoints,
        args.parallelism.or(config.parallelism).unwrap_or(4),
        args.max_items,
    );
    let report = run_classify_campaign(
        &endpoint,
        &records,
        args.variant,
        &campaign,
        &retry_policy(args.max_attempts),
        None,
    )
    .map_err(campaign_err)?;

    let entries: Vec<ClassifyEntry> = read_log(&report.log_path).map_err(campaign_err)?;
    let mut tsv = String::from("id\tvariant\tpredicted\tcorrect\tinput_tokens\toutput_tokens\tmodel\n");
    let mut failures = Vec::new();
    for e in &entries {
        match e {
            ClassifyEntry::Ok(p) => writeln!(
                tsv,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.id, p.variant, p.predicted, p.correct, p.input_token_count, p.output_token_count, p.model
            )
            .unwrap(),
            ClassifyEntry::Failed(f) => failures.push(f),
        }
    }
    write_file(&out.join(format!("predictions_{}.tsv", args.variant.token())), tsv)?;
    campaign_status(&report, &failures)
}

pub fn translate(args: &TranslateArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = input_file(args.corpus.as_ref(), config.corpus.as_ref(), "corpus")?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let checkpoints = output_dir(
        args.checkpoint_dir.as_ref(),
        config.checkpoint_dir.as_ref(),
        &out.join("checkpoints").to_string_lossy(),
    )?;
    let descriptor = config.endpoint("translate", args.endpoint.as_deref(), args.model_id.as_deref())?;
    let endpoint = HttpEndpoint::from_env(descriptor).config_err()?;

    let records = load_corpus(&corpus_path)?;
    let pending: Vec<TweetRecord> = records
        .iter()
        .filter(|r| r.language != Language::En && r.translated_text.is_none())
        .cloned()
        .collect();
    let campaign = campaign_config(
        "translate".to_string(),
        checkpoints,
        args.parallelism.or(config.parallelism).unwrap_or(4),
        args.max_items,
    );
    let report = run_translate_campaign(&endpoint, &pending, &campaign, &retry_policy(args.max_attempts), None)
        .map_err(campaign_err)?;

    let entries: Vec<TranslateEntry> = read_log(&report.log_path).map_err(campaign_err)?;
    let mut translations = BTreeMap::new();
    let mut failures = Vec::new();
    for e in &entries {
        match e {
            TranslateEntry::Ok(t) => {
                translations.insert(t.id.as_str(), t);
            }
            TranslateEntry::Failed(f) => failures.push(f),
        }
    }
    let translated: Vec<TweetRecord> = records
        .iter()
        .map(|r| {
            translations
                .get(r.id.as_str())
                .map_or_else(|| r.clone(), |t| t.apply(r))
        })
        .collect();
    store_corpus(&out.join("translated.csv"), &translated)?;
    campaign_status(&report, &failures)
}

/// Predictions from explicit log paths, or from every classify log in the
/// checkpoint directory (sorted by file name).
fn load_predictions(explicit: &[PathBuf], checkpoint_dir: Option<&Path>) -> CliResult<Vec<PredictionRecord>> {
    let mut paths = explicit.to_vec();
    if paths.is_empty() {
        if let Some(dir) = checkpoint_dir.filter(|d| d.is_dir()) {
            let mut found: Vec<PathBuf> = fs::read_dir(dir)
                .config_err()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("classify-") && n.ends_with(".log.jsonl"))
                })
                .collect();
            found.sort();
            paths = found;
        }
    }
    let mut predictions = Vec::new();
    for path in &paths {
        if !path.is_file() {
            return Err(CliError::config(format!(
                "prediction log {} does not exist",
                path.display()
            )));
        }
        let entries: Vec<ClassifyEntry> = read_log(path).map_err(campaign_err)?;
        predictions.extend(entries.into_iter().filter_map(|e| match e {
            ClassifyEntry::Ok(p) => Some(p),
            ClassifyEntry::Failed(_) => None,
        }));
    }
    Ok(predictions)
}

fn checkpoint_dir(flag: Option<&PathBuf>, config: &RunConfig, out: &Path) -> PathBuf {
    flag.or(config.checkpoint_dir.as_ref())
        .cloned()
        .unwrap_or_else(|| out.join("checkpoints"))
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = input_file(args.corpus.as_ref(), config.corpus.as_ref(), "corpus")?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let models = if args.models.is_empty() {
        config.models()?.unwrap_or_else(|| ModelId::ALL.to_vec())
    } else {
        args.models.clone()
    };
    let corpus = load_corpus(&corpus_path)?;
    let checkpoints = checkpoint_dir(args.checkpoint_dir.as_ref(), &config, &out);
    let predictions = load_predictions(&args.predictions, Some(&checkpoints))?;
    if predictions.is_empty() {
        return Err(CliError::data("no successful predictions to fit"));
    }
    let rows = analysis_rows(&predictions, &corpus).data_err()?;

    let mut first_error = None;
    for id in models {
        let outcome = encode_design(&rows, &make_spec(id))
            .and_then(|design| fit_logistic(&design, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS));
        let error = match outcome {
            Ok(fit) if fit.converged => {
                let table = CoefficientTable::from_fit(&fit);
                write_file(&out.join(format!("model{}.tsv", id.number())), table.to_tsv())?;
                eprintln!(
                    "{id}: {} coefficients, {} iterations, n = {}",
                    fit.beta.len(),
                    fit.iterations,
                    fit.n_obs
                );
                for w in &fit.warnings {
                    eprintln!("{id}: warning: {w:?}");
                }
                continue;
            }
            Ok(fit) => CliError::new(
                Status::NonConvergence,
                anyhow::anyhow!(
                    "{id}: {}; warnings: {:?}",
                    GlmError::NotConverged {
                        iterations: fit.iterations
                    },
                    fit.warnings
                ),
            ),
            Err(e @ GlmError::NotConverged { .. }) => {
                CliError::new(Status::NonConvergence, anyhow::anyhow!("{id}: {e}"))
            }
            Err(e) => CliError::data(format!("{id}: {e}")),
        };
        eprintln!("error: {error}");
        first_error.get_or_insert(error);
    }
    first_error.map_or(Ok(()), Err)
}

/// Coefficient tables for each model: shipped fixtures, a directory of
/// `model<N>.tsv` files, or (without `--fixtures`) the fitted tables in the
/// output directory. Missing files are skipped.
fn load_tables(fixtures: Option<&Path>, out: &Path) -> CliResult<BTreeMap<ModelId, CoefficientTable>> {
    if fixtures.is_some_and(|f| f.as_os_str() == BUILTIN) {
        return Ok(ModelId::ALL.iter().map(|m| (*m, m.fixture())).collect());
    }
    let dir = fixtures.unwrap_or(out);
    if fixtures.is_some() && !dir.is_dir() {
        return Err(CliError::config(format!(
            "fixtures directory {} does not exist",
            dir.display()
        )));
    }
    let mut tables = BTreeMap::new();
    for id in ModelId::ALL {
        let path = dir.join(format!("model{}.tsv", id.number()));
        if path.is_file() {
            let src = fs::read_to_string(&path).config_err()?;
            let table =
                CoefficientTable::parse_tsv(&src).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            tables.insert(id, table);
        }
    }
    Ok(tables)
}

fn fixtures_path(flag: Option<&PathBuf>, config: &RunConfig) -> Option<PathBuf> {
    flag.or(config.fixtures.as_ref()).cloned()
}

fn pretrain_analysis(
    corpus: Option<&PathBuf>,
    config: &RunConfig,
    checkpoints: &Path,
) -> CliResult<Option<PretrainAnalysis>> {
    let Some(corpus_path) = optional_file(corpus, config.corpus.as_ref(), "corpus")? else {
        return Ok(None);
    };
    let predictions = load_predictions(&[], Some(checkpoints))?;
    if predictions.is_empty() {
        return Ok(None);
    }
    let corpus = load_corpus(&corpus_path)?;
    accuracy_by_pretraining_share(&predictions, &corpus, &PretrainShareTable::default())
        .map(Some)
        .data_err()
}

fn share_totals(m4: &CoefficientTable) -> Vec<(Variant, stance_core::effects::EffectResult)> {
    Variant::ALL
        .iter()
        .filter_map(|v| share_unrelated_total(m4, *v).ok().map(|e| (*v, e)))
        .collect()
}

fn all_pairs() -> Vec<(Variant, Language)> {
    Variant::ALL
        .iter()
        .flat_map(|v| Language::ALL.iter().map(move |l| (*v, *l)))
        .collect()
}

pub fn effects(args: &EffectsArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let tables = load_tables(fixtures_path(args.fixtures.as_ref(), &config).as_deref(), &out)?;
    let m3 = tables.get(&ModelId::M3);
    let m4 = tables.get(&ModelId::M4);
    if m3.is_none() && m4.is_none() {
        return Err(CliError::data("effects need a Model 3 or Model 4 coefficient table"));
    }
    if let Some(m3) = m3 {
        write_file(&out.join("heatmap.tsv"), heatmap_tsv(&heatmap(m3)))?;
    }
    if let Some(m4) = m4 {
        let mut tsv = String::from("variant\tterm\tvalue\ttotal\n");
        for (v, e) in share_totals(m4) {
            for c in &e.components {
                writeln!(tsv, "{}\t{}\t{:.5}\t{:.5}", v.level(), c.term, c.value, e.total).unwrap();
            }
        }
        write_file(&out.join("share_totals.tsv"), tsv)?;
        let pairs: Vec<(Variant, Language)> = all_pairs()
            .into_iter()
            .filter(|(v, l)| stance_core::effects::accuracy_curve(m4, *v, *l, &[0.0]).is_ok())
            .collect();
        write_file(
            &out.join("curves.tsv"),
            curve_tsv(m4, &pairs, &share_grid(args.grid_steps)).data_err()?,
        )?;
    }
    let checks = published_checks(m3.map(|t| t as &dyn Coefficients), m4.map(|t| t as &dyn Coefficients));
    write_file(&out.join("effects_checks.tsv"), checks_tsv(&checks))?;

    let checkpoints = checkpoint_dir(args.checkpoint_dir.as_ref(), &config, &out);
    if let Some(analysis) = pretrain_analysis(args.corpus.as_ref(), &config, &checkpoints)? {
        write_file(&out.join("pretrain.tsv"), scatter_tsv(&analysis))?;
    }
    Ok(())
}

fn load_catalog(flag: Option<&PathBuf>, config: &RunConfig) -> CliResult<(Catalog, bool)> {
    match optional_file(flag, config.catalog.as_ref(), "catalog")? {
        Some(path) => {
            let src = fs::read_to_string(&path).config_err()?;
            Ok((Catalog::from_toml(&src).config_err()?, false))
        }
        None => Ok((Catalog::default_catalog(), true)),
    }
}

struct Footprints {
    catalog: Catalog,
    reports: BTreeMap<String, FootprintReport>,
    baseline: Option<String>,
    comparisons: Vec<Comparison>,
    checks: Vec<ConsistencyCheck>,
}

fn footprints(
    catalog_flag: Option<&PathBuf>,
    config: &RunConfig,
    items: Option<u64>,
    baseline: Option<&str>,
    billing: BillingConvention,
) -> CliResult<Footprints> {
    let (catalog, builtin) = load_catalog(catalog_flag, config)?;
    let workload = items.map(Workload::items).unwrap_or_default();
    let reports = catalog.estimate_all(&workload, billing).data_err()?;
    let baseline = match baseline {
        Some(b) => Some(b.to_string()),
        None => catalog
            .providers
            .iter()
            .find(|p| p.id == "llama-3.2-ft")
            .map(|p| p.id.clone()),
    };
    let comparisons = match &baseline {
        Some(b) => compare(&reports, b).config_err()?,
        None => Vec::new(),
    };
    // The published table only describes the shipped catalog and workload.
    let checks = if builtin && items.is_none() && billing == BillingConvention::default() {
        published_footprint_checks(&catalog).data_err()?
    } else {
        Vec::new()
    };
    Ok(Footprints {
        catalog,
        reports,
        baseline,
        comparisons,
        checks,
    })
}

pub fn footprint(args: &FootprintArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let f = footprints(
        args.catalog.as_ref(),
        &config,
        args.items,
        args.baseline.as_deref(),
        args.billing.into(),
    )?;
    write_file(&out.join("footprint.tsv"), report_tsv(&f.catalog, &f.reports))?;
    if let Some(b) = &f.baseline {
        write_file(&out.join("ratios.tsv"), ratios_tsv(b, &f.comparisons))?;
    }
    if !f.checks.is_empty() {
        write_file(&out.join("footprint_checks.tsv"), checks_tsv(&f.checks))?;
    }
    Ok(())
}

pub fn report(args: &ReportArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let out = output_dir(args.common.out.as_ref(), config.out.as_ref(), DEFAULT_OUT)?;
    let tables = load_tables(fixtures_path(args.fixtures.as_ref(), &config).as_deref(), &out)?;
    let m3 = tables.get(&ModelId::M3);
    let m4 = tables.get(&ModelId::M4);

    let checkpoints = checkpoint_dir(args.checkpoint_dir.as_ref(), &config, &out);
    let pretrain = pretrain_analysis(args.corpus.as_ref(), &config, &checkpoints)?;
    let mut effects = EffectsSection {
        heatmap: m3.map(heatmap).unwrap_or_default(),
        pretrain,
        ..Default::default()
    };
    if let Some(m4) = m4 {
        effects.share_totals = share_totals(m4);
        for v in Variant::ALL {
            for l in [Language::En, Language::Es] {
                if let Ok(points) = stance_core::effects::accuracy_curve(m4, v, l, &share_grid(4)) {
                    effects.curves.push((v, l, points));
                }
            }
        }
    }
    let has_effects = !effects.heatmap.is_empty() || !effects.share_totals.is_empty() || effects.pretrain.is_some();

    let mut checks = if m3.is_some() || m4.is_some() {
        published_checks(m3.map(|t| t as &dyn Coefficients), m4.map(|t| t as &dyn Coefficients))
    } else {
        Vec::new()
    };
    let footprint = if args.no_footprint {
        None
    } else {
        let f = footprints(
            args.catalog.as_ref(),
            &config,
            args.items,
            args.baseline.as_deref(),
            BillingConvention::default(),
        )?;
        checks.extend(f.checks);
        Some(FootprintSection {
            catalog: f.catalog,
            reports: f.reports,
            baseline: f.baseline,
            comparisons: f.comparisons,
        })
    };

    let inputs = ReportInputs {
        fits: tables
            .iter()
            .map(|(id, t)| (id.title().to_string(), t.clone()))
            .collect(),
        effects: has_effects.then_some(effects),
        footprints: footprint,
        checks,
    };
    if inputs.fits.is_empty() && inputs.effects.is_none() && inputs.footprints.is_none() {
        return Err(CliError::data(
            "nothing to report: no coefficient tables, effects or footprint",
        ));
    }
    write_file(&out.join("report.md"), render_report(&inputs))
}
