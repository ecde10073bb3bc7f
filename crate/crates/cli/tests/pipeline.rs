use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use stance_core::corpus::parse_corpus;
use stance_core::inference::stub::{user_text, StubReply, StubServer};

const LANGUAGES: [(&str, &str); 6] = [
    ("en", "migrant"),
    ("es", "migrante"),
    ("de", "Migrant"),
    ("fr", "migrant"),
    ("pl", "migrant"),
    ("ko", "난민"),
];
const LABELS: [&str; 4] = ["neutral", "pro", "anti", "unrelated"];

fn stance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stance"))
        .args(args)
        .env("STANCE_API_KEY", "test-token")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn fnv(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Synthetic corpus with unassigned splits, a few translated records and
/// one off-topic record per language. Returns the csv and gold labels keyed
/// by the text the classifier will see.
fn corpus() -> (String, HashMap<String, String>) {
    let mut csv = String::from("id,text,language,label,split,translation_quality,translated_text\n");
    let mut gold = HashMap::new();
    for (lang, term) in LANGUAGES {
        for i in 0..48 {
            let label = LABELS[i % 4];
            let text = format!("{term} post {lang} {i}");
            let (quality, translated) = match (lang, i % 6) {
                ("en", _) | ("ko", _) => ("", String::new()),
                (_, 1) => ("good", format!("translated {lang} {i}")),
                (_, 4) => ("bad", format!("translated {lang} {i}")),
                _ => ("", String::new()),
            };
            let seen = if translated.is_empty() {
                text.clone()
            } else {
                translated.clone()
            };
            gold.insert(seen, label.to_string());
            csv.push_str(&format!("{lang}-{i},{text},{lang},{label},,{quality},{translated}\n"));
        }
        csv.push_str(&format!("{lang}-off,weather today,{lang},unrelated,,,\n"));
    }
    (csv, gold)
}

/// Answers with the gold label for about 70% of (text, model) pairs and a
/// fixed wrong label otherwise.
fn stub(gold: HashMap<String, String>) -> StubServer {
    let gold = Arc::new(gold);
    StubServer::start(move |req| {
        let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
        let model = body["model"].as_str().unwrap_or_default().to_string();
        let text = user_text(&req.body).unwrap_or_default();
        let truth = gold.get(&text).map(String::as_str).unwrap_or("unrelated");
        let h = fnv(format!("{model}|{text}").as_bytes());
        let answer = if h % 100 < 70 {
            truth
        } else {
            LABELS[(LABELS.iter().position(|l| *l == truth).unwrap() + 1) % 4]
        };
        StubReply::content(answer)
    })
    .unwrap()
}

fn run_pipeline(dir: &Path, server: &StubServer) {
    let s = |p: &str| dir.join(p).to_string_lossy().into_owned();
    let out = s("out");
    assert_eq!(
        code(&stance(&["ingest", "--corpus", &s("corpus.csv"), "--out", &out])),
        0
    );
    assert_eq!(
        code(&stance(&["filter", "--corpus", &s("out/corpus.csv"), "--out", &out])),
        0
    );
    assert_eq!(
        code(&stance(&[
            "split",
            "--corpus",
            &s("out/filtered.csv"),
            "--out",
            &out,
            "--seed",
            "11"
        ])),
        0
    );
    for variant in ["english", "spanish", "english-spanish", "multilanguage"] {
        let model_id = format!("stub-{variant}");
        let r = stance(&[
            "classify",
            "--corpus",
            &s("out/split.csv"),
            "--out",
            &out,
            "--variant",
            variant,
            "--endpoint",
            &server.base_url(),
            "--model-id",
            &model_id,
            "--parallelism",
            "3",
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    let r = stance(&["fit", "--corpus", &s("out/split.csv"), "--out", &out, "--model", "1"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(code(&stance(&["report", "--out", &out, "--no-footprint"])), 0);
}

#[test]
fn full_pipeline_against_stub_is_deterministic() {
    let (csv, gold) = corpus();
    let server = stub(gold);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        fs::write(dir.join("corpus.csv"), &csv).unwrap();
        run_pipeline(dir, &server);
    }

    let filtered = parse_corpus(fs::File::open(a.path().join("out/filtered.csv")).unwrap()).unwrap();
    assert_eq!(filtered.len(), 6 * 48);
    assert!(filtered.iter().all(|r| !r.id.ends_with("-off")));

    let sets = fs::read_to_string(a.path().join("out/training_sets.tsv")).unwrap();
    assert!(sets.contains("english\t36\ten\n"), "{sets}");
    assert!(sets.contains("multilanguage\t180\ten,es,pl,fr,de\n"), "{sets}");

    let requests = server.requests();
    assert_eq!(requests.len(), 2 * 4 * 6 * 48);
    assert!(requests
        .iter()
        .all(|r| r.authorization.as_deref() == Some("Bearer test-token")));

    for file in [
        "out/model1.tsv",
        "out/report.md",
        "out/predictions_english.tsv",
        "out/split.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file} differs between runs"
        );
    }
    let report = fs::read_to_string(a.path().join("out/report.md")).unwrap();
    assert!(report.contains("## Model 1: main effects"));
    assert!(report.contains("| Model:Multilanguage |"));
    assert!(report.contains("| TranslationQuality:bad |"));
    assert!(report.contains("Significance codes:"));
}

#[test]
fn rerunning_classify_resumes_without_new_requests() {
    let (csv, gold) = corpus();
    let server = stub(gold);
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.csv"), &csv).unwrap();
    let s = |p: &str| dir.path().join(p).to_string_lossy().into_owned();
    let args = |max: &'static str| {
        vec![
            "classify".to_string(),
            "--corpus".into(),
            s("corpus.csv"),
            "--out".into(),
            s("out"),
            "--variant".into(),
            "spanish".into(),
            "--endpoint".into(),
            server.base_url(),
            "--model-id".into(),
            "m".into(),
            "--max-items".into(),
            max.into(),
        ]
    };
    let run = |a: Vec<String>| stance(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&run(args("100"))), 0);
    assert_eq!(server.requests().len(), 100);
    assert_eq!(code(&run(args("100000"))), 0);
    assert_eq!(code(&run(args("100000"))), 0);
    assert_eq!(server.requests().len(), 6 * 49);
    let tsv = fs::read_to_string(dir.path().join("out/predictions_spanish.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 6 * 49);
}

#[test]
fn transport_failures_exit_4() {
    let server = StubServer::start(|_| StubReply::status(401, "{}")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = corpus();
    fs::write(dir.path().join("c.csv"), csv).unwrap();
    let c = dir.path().join("c.csv");
    let out = dir.path().join("out");
    let r = stance(&[
        "classify",
        "--corpus",
        c.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--variant",
        "english",
        "--endpoint",
        &server.base_url(),
        "--model-id",
        "m",
        "--max-items",
        "3",
    ]);
    assert_eq!(code(&r), 4, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn perfect_outcomes_do_not_converge_exit_5() {
    let (csv, gold) = corpus();
    let gold = Arc::new(gold);
    let server = StubServer::start(move |req| {
        StubReply::content(
            gold.get(&user_text(&req.body).unwrap_or_default())
                .map_or("unrelated", String::as_str),
        )
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.csv"), csv).unwrap();
    let s = |p: &str| dir.path().join(p).to_string_lossy().into_owned();
    assert_eq!(
        code(&stance(&["split", "--corpus", &s("corpus.csv"), "--out", &s("out")])),
        0
    );
    let r = stance(&[
        "classify",
        "--corpus",
        &s("out/split.csv"),
        "--out",
        &s("out"),
        "--variant",
        "english",
        "--endpoint",
        &server.base_url(),
        "--model-id",
        "m",
    ]);
    assert_eq!(code(&r), 0);
    let r = stance(&[
        "fit",
        "--corpus",
        &s("out/split.csv"),
        "--out",
        &s("out"),
        "--model",
        "1",
    ]);
    assert_eq!(code(&r), 5, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!dir.path().join("out/model1.tsv").exists());
}

#[test]
fn exit_codes_for_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&stance(&[
            "ingest",
            "--corpus",
            missing.to_str().unwrap(),
            "--out",
            out
        ])),
        2
    );
    assert_eq!(code(&stance(&["ingest", "--out", out])), 2);
    assert_eq!(code(&stance(&["fit", "--model", "9"])), 2);
    assert_eq!(code(&stance(&[])), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "id,text,language,label,split,translation_quality,translated_text\nx,hi,xx,pro,,,\n",
    )
    .unwrap();
    assert_eq!(
        code(&stance(&["ingest", "--corpus", bad.to_str().unwrap(), "--out", out])),
        3
    );

    let config = dir.path().join("run.toml");
    fs::write(&config, "seed = \"not a number\"\n").unwrap();
    assert_eq!(code(&stance(&["footprint", "--config", config.to_str().unwrap()])), 2);

    let r = stance(&[
        "classify",
        "--corpus",
        bad.to_str().unwrap(),
        "--variant",
        "english",
        "--out",
        out,
    ]);
    assert_eq!(code(&r), 2);
    assert_eq!(code(&stance(&["effects", "--out", out])), 3);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = corpus();
    fs::write(dir.path().join("corpus.csv"), csv).unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "corpus = \"corpus.csv\"\nout = \"results\"\nseed = 5\n",
    )
    .unwrap();
    let config = dir.path().join("run.toml");
    assert_eq!(code(&stance(&["split", "--config", config.to_str().unwrap()])), 0);
    let first = fs::read(dir.path().join("results/split.csv")).unwrap();
    assert_eq!(code(&stance(&["split", "--config", config.to_str().unwrap()])), 0);
    assert_eq!(first, fs::read(dir.path().join("results/split.csv")).unwrap());
    let other = dir.path().join("other");
    assert_eq!(
        code(&stance(&[
            "split",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "6",
            "--out",
            other.to_str().unwrap()
        ])),
        0
    );
    assert_ne!(first, fs::read(other.join("split.csv")).unwrap());
}

#[test]
fn footprint_and_fixture_effects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(code(&stance(&["footprint", "--out", out])), 0);
    let table = fs::read_to_string(dir.path().join("out/footprint.tsv")).unwrap();
    assert_eq!(table.lines().count(), 13);
    let checks = fs::read_to_string(dir.path().join("out/footprint_checks.tsv")).unwrap();
    assert!(checks.lines().skip(1).all(|l| l.ends_with("\ttrue")), "{checks}");

    assert_eq!(code(&stance(&["effects", "--fixtures", "--out", out])), 0);
    let heat = fs::read_to_string(dir.path().join("out/heatmap.tsv")).unwrap();
    assert!(heat.contains("Multilanguage\tpl\t-0.71790\n"));
    let totals = fs::read_to_string(dir.path().join("out/share_totals.tsv")).unwrap();
    assert!(totals.contains("EnglishSpanish\tShareUnrelated\t"));

    assert_eq!(code(&stance(&["report", "--fixtures", "--out", out])), 0);
    let report = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(report.contains("## Consistency appendix"));
    assert!(report.contains("are unexpected"));
    assert!(report.contains(" 0 are unexpected."), "{report}");
}
