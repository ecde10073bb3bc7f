//! Resumable campaigns over a record list.
//!
//! Results go to an append-only JSON-lines log through a single committing
//! writer. Workers may finish out of order, but entries are committed in input
//! order, so the log is always an input-ordered prefix of the pending records
//! and an interrupted run can be resumed by skipping the ids already logged.
//! A sidecar checkpoint lists the committed ids; it is rewritten atomically
//! (write to a temporary file, then rename) and may lag the log after a crash.
//! On resume the log is authoritative: a torn trailing line is truncated and
//! the checkpoint is rebuilt from the surviving entries.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Condvar, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    classify, translate, ChatEndpoint, InferenceError, PredictionRecord, RetryPolicy, TranslationRecord, Variant,
};
use crate::corpus::TweetRecord;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("cannot write campaign state at {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("result log {path} is corrupt at line {line}: {message}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("checkpoint {path} does not match its result log: {message}")]
    CheckpointMismatch { path: PathBuf, message: String },
    #[error("input contains duplicate id `{0}`")]
    DuplicateInput(String),
}

/// A line of a campaign result log.
pub trait CampaignEntry: Serialize + DeserializeOwned + Send {
    fn id(&self) -> &str;
    fn succeeded(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    ParseFailure,
    TransportError,
    Precondition,
}

/// An item the campaign gave up on. It counts as completed and is never retried
/// by a resume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variant: Option<Variant>,
    pub kind: FailureKind,
    pub attempts: u32,
    pub detail: String,
}

impl FailureRecord {
    fn from_error(id: &str, variant: Option<Variant>, err: &InferenceError) -> Self {
        let (kind, attempts) = match err {
            InferenceError::ParseFailure { attempts, .. } => (FailureKind::ParseFailure, *attempts),
            InferenceError::Transport { attempts, .. } => (FailureKind::TransportError, *attempts),
            InferenceError::Unparseable(_) => (FailureKind::ParseFailure, 1),
            InferenceError::Precondition(_) => (FailureKind::Precondition, 0),
        };
        Self {
            id: id.to_string(),
            variant,
            kind,
            attempts,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClassifyEntry {
    Ok(PredictionRecord),
    Failed(FailureRecord),
}

impl CampaignEntry for ClassifyEntry {
    fn id(&self) -> &str {
        match self {
            ClassifyEntry::Ok(p) => &p.id,
            ClassifyEntry::Failed(f) => &f.id,
        }
    }

    fn succeeded(&self) -> bool {
        matches!(self, ClassifyEntry::Ok(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TranslateEntry {
    Ok(TranslationRecord),
    Failed(FailureRecord),
}

impl CampaignEntry for TranslateEntry {
    fn id(&self) -> &str {
        match self {
            TranslateEntry::Ok(t) => &t.id,
            TranslateEntry::Failed(f) => &f.id,
        }
    }

    fn succeeded(&self) -> bool {
        matches!(self, TranslateEntry::Ok(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignConfig {
    pub campaign_id: String,
    pub dir: PathBuf,
    /// Maximum number of requests in flight.
    pub parallelism: usize,
    /// Commits between checkpoint rewrites.
    pub checkpoint_every: usize,
    /// Stop after committing this many new entries (one batch of a longer
    /// campaign on preemptible hardware).
    pub max_items: Option<usize>,
}

impl CampaignConfig {
    pub fn new(campaign_id: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            campaign_id: campaign_id.into(),
            dir: dir.into(),
            parallelism: 4,
            checkpoint_every: 64,
            max_items: None,
        }
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn with_max_items(mut self, max_items: usize) -> Self {
        self.max_items = Some(max_items);
        self
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join(format!("{}.log.jsonl", self.campaign_id))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.dir.join(format!("{}.checkpoint.json", self.campaign_id))
    }
}

/// Sidecar listing the ids committed to the result log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub campaign_id: String,
    pub log_file: String,
    pub log_bytes: u64,
    pub completed: Vec<String>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Option<Self>, CampaignError> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| CampaignError::CheckpointMismatch {
                    path: path.to_path_buf(),
                    message: format!("unreadable checkpoint: {e}"),
                }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(CampaignError::Io {
                path: path.to_path_buf(),
                source,
            }),
        }
    }

    /// Writes the checkpoint next to `path` and renames it into place.
    pub fn store(&self, path: &Path) -> io::Result<()> {
        let mut tmp_name = path.as_os_str().to_owned();
        tmp_name.push(".tmp");
        let tmp = PathBuf::from(tmp_name);
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer(&mut f, self)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignReport {
    pub log_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub total: usize,
    /// Entries found in the log before this run started.
    pub resumed: usize,
    /// Entries committed by this run.
    pub processed: usize,
    pub successes: usize,
    pub failures: usize,
    /// True when the run stopped (cancellation or item limit) before covering
    /// every record.
    pub interrupted: bool,
}

impl CampaignReport {
    pub fn is_complete(&self) -> bool {
        !self.interrupted && self.successes + self.failures == self.total
    }
}

/// Reads a result log, skipping a torn final line. Returns the entries and the
/// byte length of the intact prefix.
fn load_log<E: CampaignEntry>(path: &Path) -> Result<(Vec<E>, u64), CampaignError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(source) => {
            return Err(CampaignError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let intact = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let mut entries = Vec::new();
    for (n, line) in bytes[..intact].split(|b| *b == b'\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let entry = serde_json::from_slice::<E>(line).map_err(|e| CampaignError::CorruptLog {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok((entries, intact as u64))
}

/// Reads every intact entry of a result log.
pub fn read_log<E: CampaignEntry>(path: &Path) -> Result<Vec<E>, CampaignError> {
    load_log(path).map(|(entries, _)| entries)
}

struct LogWriter {
    file: File,
    path: PathBuf,
    bytes: u64,
}

impl LogWriter {
    fn append<E: Serialize>(&mut self, entry: &E) -> Result<(), CampaignError> {
        let mut line = serde_json::to_vec(entry).expect("log entries serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(|source| CampaignError::Io {
            path: self.path.clone(),
            source,
        })?;
        self.bytes += line.len() as u64;
        Ok(())
    }
}

/// Runs `work` over every record not yet present in the campaign log.
///
/// At most `config.parallelism` items are in flight. Setting `cancel` stops the
/// run at the next commit boundary without writing a final checkpoint, which
/// is what an external kill looks like to a later resume.
pub fn run_campaign<E, F>(
    records: &[TweetRecord],
    config: &CampaignConfig,
    cancel: Option<&AtomicBool>,
    work: F,
) -> Result<CampaignReport, CampaignError>
where
    E: CampaignEntry,
    F: Fn(&TweetRecord) -> E + Sync,
{
    let mut input_ids = HashSet::with_capacity(records.len());
    for r in records {
        if !input_ids.insert(r.id.as_str()) {
            return Err(CampaignError::DuplicateInput(r.id.clone()));
        }
    }

    let log_path = config.log_path();
    let checkpoint_path = config.checkpoint_path();
    fs::create_dir_all(&config.dir).map_err(|source| CampaignError::Unwritable {
        path: config.dir.clone(),
        source,
    })?;

    let (existing, intact_bytes) = load_log::<E>(&log_path)?;
    let mut completed: Vec<String> = Vec::with_capacity(existing.len());
    let mut completed_set: HashSet<String> = HashSet::with_capacity(existing.len());
    let mut successes = 0;
    for (n, entry) in existing.iter().enumerate() {
        let id = entry.id();
        if !input_ids.contains(id) {
            return Err(CampaignError::CorruptLog {
                path: log_path.clone(),
                line: n + 1,
                message: format!("id `{id}` is not part of this campaign's input"),
            });
        }
        if !completed_set.insert(id.to_string()) {
            return Err(CampaignError::CorruptLog {
                path: log_path.clone(),
                line: n + 1,
                message: format!("id `{id}` appears twice"),
            });
        }
        successes += usize::from(entry.succeeded());
        completed.push(id.to_string());
    }
    let resumed = completed.len();

    if let Some(previous) = Checkpoint::load(&checkpoint_path)? {
        if previous.campaign_id != config.campaign_id {
            return Err(CampaignError::CheckpointMismatch {
                path: checkpoint_path,
                message: format!("belongs to campaign `{}`", previous.campaign_id),
            });
        }
        if let Some(missing) = previous.completed.iter().find(|id| !completed_set.contains(*id)) {
            return Err(CampaignError::CheckpointMismatch {
                path: checkpoint_path,
                message: format!("id `{missing}` is checkpointed but missing from the log"),
            });
        }
    }

    // Open everything we will write before the first request goes out.
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|source| CampaignError::Unwritable {
            path: log_path.clone(),
            source,
        })?;
    file.set_len(intact_bytes).map_err(|source| CampaignError::Unwritable {
        path: log_path.clone(),
        source,
    })?;
    let mut writer = LogWriter {
        file,
        path: log_path.clone(),
        bytes: intact_bytes,
    };
    let log_file = log_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut checkpoint = Checkpoint {
        campaign_id: config.campaign_id.clone(),
        log_file,
        log_bytes: writer.bytes,
        completed,
    };
    checkpoint
        .store(&checkpoint_path)
        .map_err(|source| CampaignError::Unwritable {
            path: checkpoint_path.clone(),
            source,
        })?;

    let mut pending: Vec<&TweetRecord> = records.iter().filter(|r| !completed_set.contains(&r.id)).collect();
    let remaining = pending.len();
    if let Some(limit) = config.max_items {
        pending.truncate(limit);
    }
    drop(completed_set);

    let cancelled = || cancel.is_some_and(|c| c.load(Ordering::SeqCst));
    let parallelism = config.parallelism.max(1);
    let window = parallelism * 4;
    let checkpoint_every = config.checkpoint_every.max(1);

    let stop = AtomicBool::new(false);
    let next_claim = AtomicUsize::new(0);
    let committed_mark = Mutex::new(0usize);
    let advanced = Condvar::new();

    let mut processed = 0usize;
    let mut interrupted = false;

    let run_result: Result<(), CampaignError> = std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, E)>();
        for _ in 0..parallelism.min(pending.len()) {
            let tx = tx.clone();
            let (pending, work, stop, next_claim, committed_mark, advanced) =
                (&pending, &work, &stop, &next_claim, &committed_mark, &advanced);
            scope.spawn(move || loop {
                let i = next_claim.fetch_add(1, Ordering::SeqCst);
                if i >= pending.len() {
                    break;
                }
                {
                    let mut mark = committed_mark.lock().unwrap();
                    while i >= *mark + window && !stop.load(Ordering::SeqCst) {
                        mark = advanced.wait(mark).unwrap();
                    }
                }
                if stop.load(Ordering::SeqCst) || cancelled() {
                    break;
                }
                let entry = work(pending[i]);
                if tx.send((i, entry)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut buffer: BTreeMap<usize, E> = BTreeMap::new();
        let mut outcome = Ok(());
        'receive: for (i, entry) in rx.iter() {
            buffer.insert(i, entry);
            while let Some(entry) = buffer.remove(&processed) {
                if cancelled() {
                    interrupted = true;
                    break 'receive;
                }
                if let Err(e) = writer.append(&entry) {
                    outcome = Err(e);
                    break 'receive;
                }
                successes += usize::from(entry.succeeded());
                checkpoint.completed.push(entry.id().to_string());
                processed += 1;
                *committed_mark.lock().unwrap() = processed;
                advanced.notify_all();
                if processed.is_multiple_of(checkpoint_every) {
                    checkpoint.log_bytes = writer.bytes;
                    if let Err(source) = writer.file.sync_data().and_then(|_| checkpoint.store(&checkpoint_path)) {
                        outcome = Err(CampaignError::Io {
                            path: checkpoint_path.clone(),
                            source,
                        });
                        break 'receive;
                    }
                }
            }
        }
        stop.store(true, Ordering::SeqCst);
        advanced.notify_all();
        drop(rx);
        if processed < remaining && (cancelled() || processed == pending.len()) {
            interrupted = true;
        }
        outcome
    });
    run_result?;

    if !interrupted {
        checkpoint.log_bytes = writer.bytes;
        writer
            .file
            .sync_data()
            .and_then(|_| checkpoint.store(&checkpoint_path))
            .map_err(|source| CampaignError::Io {
                path: checkpoint_path.clone(),
                source,
            })?;
    }

    let committed = resumed + processed;
    Ok(CampaignReport {
        log_path,
        checkpoint_path,
        total: records.len(),
        resumed,
        processed,
        successes,
        failures: committed - successes,
        interrupted,
    })
}

/// Classifies every record with one variant, logging predictions and failures.
pub fn run_classify_campaign(
    endpoint: &dyn ChatEndpoint,
    records: &[TweetRecord],
    variant: Variant,
    config: &CampaignConfig,
    policy: &RetryPolicy,
    cancel: Option<&AtomicBool>,
) -> Result<CampaignReport, CampaignError> {
    run_campaign(records, config, cancel, |record| {
        match classify(endpoint, record, variant, policy) {
            Ok(p) => ClassifyEntry::Ok(p),
            Err(e) => ClassifyEntry::Failed(FailureRecord::from_error(&record.id, Some(variant), &e)),
        }
    })
}

/// Translates every record into English, logging translations and failures.
pub fn run_translate_campaign(
    endpoint: &dyn ChatEndpoint,
    records: &[TweetRecord],
    config: &CampaignConfig,
    policy: &RetryPolicy,
    cancel: Option<&AtomicBool>,
) -> Result<CampaignReport, CampaignError> {
    run_campaign(records, config, cancel, |record| {
        match translate(endpoint, record, policy) {
            Ok(t) => TranslateEntry::Ok(t),
            Err(e) => TranslateEntry::Failed(FailureRecord::from_error(&record.id, None, &e)),
        }
    })
}

/// Indexes successful predictions by record id.
pub fn predictions_by_id(entries: &[ClassifyEntry]) -> HashMap<&str, &PredictionRecord> {
    entries
        .iter()
        .filter_map(|e| match e {
            ClassifyEntry::Ok(p) => Some((p.id.as_str(), p)),
            ClassifyEntry::Failed(_) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Language, Split, TranslationQuality};
    use crate::inference::{ChatRequest, ChatResponse, TransportError};
    use std::sync::atomic::AtomicU32;

    fn records(n: usize) -> Vec<TweetRecord> {
        (0..n)
            .map(|i| TweetRecord {
                id: format!("t{i:04}"),
                text: format!("text number {i}"),
                language: Language::Es,
                label: Label::ALL[i % 4],
                split: Some(Split::Test),
                translation_quality: TranslationQuality::NotTranslated,
                translated_text: None,
            })
            .collect()
    }

    /// Answers from a fixed table keyed on the text; counts requests.
    struct TableStub {
        calls: AtomicU32,
        cancel_after: Option<(u32, &'static AtomicBool)>,
    }

    impl ChatEndpoint for TableStub {
        fn model(&self) -> &str {
            "table-stub"
        }

        fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
            if let Some((limit, flag)) = self.cancel_after {
                if n >= limit {
                    flag.store(true, Ordering::SeqCst);
                }
            }
            let text = &request.messages[1].content;
            let k: usize = text.rsplit(' ').next().unwrap().parse().unwrap();
            Ok(ChatResponse::text(match k % 7 {
                0 => "garbage",
                1 | 4 => "neutral",
                2 => "pro-immigration",
                3 => "Anti",
                _ => "unrelated",
            }))
        }
    }

    fn stub() -> TableStub {
        TableStub {
            calls: AtomicU32::new(0),
            cancel_after: None,
        }
    }

    #[test]
    fn empty_input_gives_empty_log() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("c", dir.path());
        let report = run_classify_campaign(
            &stub(),
            &[],
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        assert_eq!(report.total, 0);
        assert!(report.is_complete());
        assert_eq!(fs::read(config.log_path()).unwrap(), b"");
    }

    #[test]
    fn every_record_is_logged_once_in_input_order() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("c", dir.path()).with_parallelism(8);
        let recs = records(50);
        let report = run_classify_campaign(
            &stub(),
            &recs,
            Variant::Spanish,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        assert!(report.is_complete());
        let entries: Vec<ClassifyEntry> = read_log(&config.log_path()).unwrap();
        let ids: Vec<_> = entries.iter().map(|e| e.id().to_string()).collect();
        let expected: Vec<_> = recs.iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids, expected);
        // k % 7 == 0 answers garbage: ids 0, 7, ..., 49 -> 8 failures
        assert_eq!(report.failures, 8);
        assert_eq!(report.successes + report.failures, 50);
        let ckpt = Checkpoint::load(&config.checkpoint_path()).unwrap().unwrap();
        assert_eq!(ckpt.completed, expected);
        assert_eq!(ckpt.log_bytes, fs::metadata(config.log_path()).unwrap().len());
    }

    #[test]
    fn resume_over_complete_log_sends_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("c", dir.path());
        let recs = records(10);
        let s = stub();
        run_classify_campaign(&s, &recs, Variant::English, &config, &RetryPolicy::immediate(3), None).unwrap();
        let before = s.calls.load(Ordering::SeqCst);
        let again =
            run_classify_campaign(&s, &recs, Variant::English, &config, &RetryPolicy::immediate(3), None).unwrap();
        assert_eq!(s.calls.load(Ordering::SeqCst), before);
        assert_eq!(again.processed, 0);
        assert_eq!(again.resumed, 10);
    }

    #[test]
    fn kill_after_four_commits_then_resume() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<_> = records(10)
            .into_iter()
            .map(|mut r| {
                r.text = "text number 1".into();
                r
            })
            .collect();
        let config = CampaignConfig::new("c", dir.path()).with_max_items(4);
        let first = stub();
        let report = run_classify_campaign(
            &first,
            &recs,
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        assert!(report.interrupted);
        assert_eq!(report.processed, 4);
        let after_first = fs::read(config.log_path()).unwrap();

        let config = CampaignConfig::new("c", dir.path());
        let second = stub();
        let report = run_classify_campaign(
            &second,
            &recs,
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        assert!(report.is_complete());
        assert_eq!((report.resumed, report.processed), (4, 6));
        assert_eq!(second.calls.load(Ordering::SeqCst), 6);
        let log = fs::read(config.log_path()).unwrap();
        assert!(log.starts_with(&after_first));
        assert_eq!(read_log::<ClassifyEntry>(&config.log_path()).unwrap().len(), 10);
    }

    #[test]
    fn cancellation_stops_at_a_commit_boundary() {
        static FLAG: AtomicBool = AtomicBool::new(false);
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("c", dir.path()).with_parallelism(3);
        let recs = records(40);
        let first = TableStub {
            calls: AtomicU32::new(0),
            cancel_after: Some((10, &FLAG)),
        };
        let report = run_classify_campaign(
            &first,
            &recs,
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            Some(&FLAG),
        )
        .unwrap();
        assert!(report.interrupted);
        assert!(report.processed < 40);
        let partial: Vec<ClassifyEntry> = read_log(&config.log_path()).unwrap();
        assert_eq!(partial.len(), report.processed);

        FLAG.store(false, Ordering::SeqCst);
        let report = run_classify_campaign(
            &stub(),
            &recs,
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            Some(&FLAG),
        )
        .unwrap();
        assert!(report.is_complete());
        assert_eq!(report.successes + report.failures, 40);
    }

    #[test]
    fn torn_tail_is_discarded_on_resume() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("c", dir.path());
        let recs = records(6);
        run_classify_campaign(
            &stub(),
            &recs[..3],
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        let reference = fs::read(config.log_path()).unwrap();
        let mut f = OpenOptions::new().append(true).open(config.log_path()).unwrap();
        f.write_all(b"{\"status\":\"ok\",\"id\":\"t00").unwrap();
        drop(f);
        assert_eq!(read_log::<ClassifyEntry>(&config.log_path()).unwrap().len(), 3);
        run_classify_campaign(
            &stub(),
            &recs,
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        let log = fs::read(config.log_path()).unwrap();
        assert!(log.starts_with(&reference));
        assert_eq!(read_log::<ClassifyEntry>(&config.log_path()).unwrap().len(), 6);
    }

    #[test]
    fn unwritable_directory_aborts_before_requests() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let config = CampaignConfig::new("c", blocker.join("sub"));
        let s = stub();
        let err = run_classify_campaign(
            &s,
            &records(3),
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, CampaignError::Unwritable { .. }));
        assert_eq!(s.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn duplicate_input_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs = records(3);
        recs[2].id = recs[0].id.clone();
        let err = run_classify_campaign(
            &stub(),
            &recs,
            Variant::English,
            &CampaignConfig::new("c", dir.path()),
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, CampaignError::DuplicateInput(_)));
    }

    #[test]
    fn foreign_log_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("c", dir.path());
        run_classify_campaign(
            &stub(),
            &records(3),
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap();
        let other: Vec<_> = records(3)
            .into_iter()
            .map(|mut r| {
                r.id = format!("x{}", r.id);
                r
            })
            .collect();
        let err = run_classify_campaign(
            &stub(),
            &other,
            Variant::English,
            &config,
            &RetryPolicy::immediate(3),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, CampaignError::CorruptLog { .. }));
    }

    #[test]
    fn translate_campaign_records_precondition_failures() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig::new("tr", dir.path());
        let mut recs = records(3);
        recs[1].language = Language::En;
        let report = run_translate_campaign(&stub(), &recs, &config, &RetryPolicy::immediate(3), None).unwrap();
        assert_eq!(report.failures, 1);
        let entries: Vec<TranslateEntry> = read_log(&config.log_path()).unwrap();
        assert!(matches!(&entries[1], TranslateEntry::Failed(f) if f.kind == FailureKind::Precondition));
    }
}
