//! Session state with an append-only decision log.
//!
//! A data directory holds three files:
//!
//! - `sessions.jsonl`: one record per created session, including its queue;
//! - `decisions.jsonl`: one record per label or revision,
//!   `{"ts", "session", "tweet", "label", "revised"}`;
//! - `snapshot.json`: the full state after a number of log records, written
//!   every `snapshot_every` decisions.
//!
//! Records are flushed to disk before an operation returns. Opening a
//! directory loads the snapshot and replays the log records after it; a
//! torn final line (from a crash mid-write) is ignored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use arsid_core::agreement::{cohen_kappa, contingency_pairs, AgreementTable};
use arsid_core::ingest::{Corpus, Label};
use arsid_core::{seed, Error as CoreError};
use chrono::{SecondsFormat, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{AnnotationError, Result};
use crate::guidelines::GUIDELINE_VERSION;

const SESSIONS_LOG: &str = "sessions.jsonl";
const DECISIONS_LOG: &str = "decisions.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub annotator_id: String,
    pub order_seed: u64,
    pub guideline_version: String,
    pub queue: Vec<String>,
    pub decisions: BTreeMap<String, Label>,
}

impl Session {
    pub fn progress(&self) -> Progress {
        Progress::new(self.decisions.len(), self.queue.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub decided: usize,
    pub total: usize,
    pub fraction: f64,
}

impl Progress {
    fn new(decided: usize, total: usize) -> Self {
        Self {
            decided,
            total,
            fraction: if total == 0 { 0.0 } else { decided as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub tweet_id: String,
    pub text: String,
    /// Zero-based queue position.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextItem {
    pub done: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<Item>,
    pub progress: Progress,
}

/// Live agreement between two sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LiveKappa {
    Ok {
        kappa: f64,
        pa: f64,
        pe: f64,
        overlap: usize,
        table: AgreementTable,
    },
    InsufficientOverlap {
        overlap: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    /// Disagreements get no gold label.
    RequireAgreement,
    /// Disagreements are returned as a work list for a third judge.
    AdjudicateList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Agreed,
    Excluded,
    NeedsAdjudication,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionEntry {
    pub tweet_id: String,
    pub label_a: Label,
    pub label_b: Label,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub policy: MergePolicy,
    pub gold: BTreeMap<String, Label>,
    pub adjudication: Vec<String>,
    pub resolution_log: Vec<ResolutionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionRecord {
    ts: String,
    session: String,
    annotator: String,
    order_seed: u64,
    guideline_version: String,
    queue: Vec<String>,
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub ts: String,
    pub session: String,
    pub tweet: String,
    pub label: Label,
    pub revised: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Snapshot {
    sessions: BTreeMap<String, Session>,
    next_session: u64,
    sessions_logged: u64,
    decisions_logged: u64,
}

struct Log {
    dir: PathBuf,
    sessions: File,
    decisions: File,
    snapshot_every: u64,
}

impl Log {
    fn append(&mut self, which: &str, line: &str) -> Result<()> {
        let path = self.dir.join(which);
        let f = if which == SESSIONS_LOG {
            &mut self.sessions
        } else {
            &mut self.decisions
        };
        f.write_all(line.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .and_then(|_| f.sync_data())
            .map_err(|e| AnnotationError::storage(path, e))
    }
}

struct State {
    snap: Snapshot,
    log: Option<Log>,
}

/// Thread-safe session store over one corpus. Writes are serialized; reads
/// see a consistent state.
pub struct Store {
    texts: HashMap<String, String>,
    ids: Vec<String>,
    state: RwLock<State>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn parse_label(label: i64) -> Result<Label> {
    u8::try_from(label)
        .ok()
        .and_then(|l| Label::try_from(l).ok())
        .ok_or_else(|| AnnotationError::Validation(format!("label must be 0 or 1, got {label}")))
}

/// Lines of a JSONL log; a final line that fails to parse is treated as torn
/// and dropped, any other bad line is an error.
fn read_log<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(AnnotationError::storage(path, e)),
    };
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| AnnotationError::storage(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(e) if Some(i) == last => {
                log::warn!("{}: ignoring torn final line: {e}", path.display());
            }
            Err(e) => {
                return Err(AnnotationError::CorruptLog {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

impl Store {
    /// A store that keeps everything in memory.
    pub fn in_memory(corpus: &Corpus) -> Result<Self> {
        Self::build(corpus, Snapshot::default(), None)
    }

    /// Opens (or initializes) a data directory and replays its logs.
    pub fn open(corpus: &Corpus, dir: impl AsRef<Path>, snapshot_every: u64) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| AnnotationError::storage(&dir, e))?;
        let snap_path = dir.join(SNAPSHOT);
        let mut snap: Snapshot = match std::fs::read_to_string(&snap_path) {
            Ok(s) => serde_json::from_str(&s).map_err(|e| AnnotationError::CorruptLog {
                path: snap_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Snapshot::default(),
            Err(e) => return Err(AnnotationError::storage(&snap_path, e)),
        };

        let sessions: Vec<SessionRecord> = read_log(&dir.join(SESSIONS_LOG))?;
        for r in sessions.into_iter().skip(snap.sessions_logged as usize) {
            snap.sessions_logged += 1;
            snap.next_session += 1;
            snap.sessions.insert(
                r.session.clone(),
                Session {
                    session_id: r.session,
                    annotator_id: r.annotator,
                    order_seed: r.order_seed,
                    guideline_version: r.guideline_version,
                    queue: r.queue,
                    decisions: BTreeMap::new(),
                },
            );
        }
        let decisions: Vec<DecisionRecord> = read_log(&dir.join(DECISIONS_LOG))?;
        for r in decisions.into_iter().skip(snap.decisions_logged as usize) {
            snap.decisions_logged += 1;
            let s = snap.sessions.get_mut(&r.session).ok_or_else(|| AnnotationError::CorruptLog {
                path: dir.join(DECISIONS_LOG),
                line: snap.decisions_logged as usize,
                message: format!("unknown session {:?}", r.session),
            })?;
            s.decisions.insert(r.tweet, r.label);
        }

        let open = |name: &str| {
            let p = dir.join(name);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&p)
                .map_err(|e| AnnotationError::storage(p, e))
        };
        let log = Log {
            sessions: open(SESSIONS_LOG)?,
            decisions: open(DECISIONS_LOG)?,
            dir,
            snapshot_every: snapshot_every.max(1),
        };
        Self::build(corpus, snap, Some(log))
    }

    fn build(corpus: &Corpus, snap: Snapshot, log: Option<Log>) -> Result<Self> {
        if corpus.is_empty() {
            return Err(AnnotationError::Validation("cannot annotate an empty corpus".into()));
        }
        let texts: HashMap<String, String> = corpus.tweets.iter().map(|t| (t.id.clone(), t.text.clone())).collect();
        for s in snap.sessions.values() {
            if let Some(id) = s.queue.iter().find(|id| !texts.contains_key(*id)) {
                return Err(AnnotationError::Validation(format!(
                    "session {} refers to tweet {id:?}, which is not in the corpus",
                    s.session_id
                )));
            }
        }
        Ok(Self {
            ids: corpus.tweets.iter().map(|t| t.id.clone()).collect(),
            texts,
            state: RwLock::new(State { snap, log }),
        })
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn corpus_size(&self) -> usize {
        self.ids.len()
    }

    /// Creates a session whose queue is a permutation of the corpus ids
    /// determined by `order_seed`.
    pub fn create_session(&self, annotator_id: &str, order_seed: u64) -> Result<Session> {
        let annotator_id = annotator_id.trim();
        if annotator_id.is_empty() {
            return Err(AnnotationError::Validation("annotator_id must be non-empty".into()));
        }
        let mut queue = self.ids.clone();
        queue.shuffle(&mut seed::rng(order_seed));

        let mut st = self.write();
        let session_id = format!("s{}", st.snap.next_session + 1);
        let record = SessionRecord {
            ts: now(),
            session: session_id.clone(),
            annotator: annotator_id.to_string(),
            order_seed,
            guideline_version: GUIDELINE_VERSION.to_string(),
            queue: queue.clone(),
        };
        if let Some(log) = &mut st.log {
            log.append(SESSIONS_LOG, &serde_json::to_string(&record).expect("serializable record"))?;
        }
        let session = Session {
            session_id: session_id.clone(),
            annotator_id: record.annotator,
            order_seed,
            guideline_version: record.guideline_version,
            queue,
            decisions: BTreeMap::new(),
        };
        st.snap.next_session += 1;
        st.snap.sessions_logged += 1;
        st.snap.sessions.insert(session_id, session.clone());
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Session> {
        self.read().snap.sessions.get(id).cloned().ok_or_else(|| not_found("session", id))
    }

    pub fn sessions(&self) -> Vec<Session> {
        self.read().snap.sessions.values().cloned().collect()
    }

    pub fn next_item(&self, id: &str) -> Result<NextItem> {
        let st = self.read();
        let s = st.snap.sessions.get(id).ok_or_else(|| not_found("session", id))?;
        let item = s
            .queue
            .iter()
            .enumerate()
            .find(|(_, t)| !s.decisions.contains_key(*t))
            .map(|(position, t)| Item {
                tweet_id: t.clone(),
                text: self.texts[t].clone(),
                position,
            });
        Ok(NextItem {
            done: item.is_none(),
            item,
            progress: s.progress(),
        })
    }

    pub fn submit_label(&self, session: &str, tweet: &str, label: i64) -> Result<Progress> {
        self.record(session, tweet, label, false)
    }

    pub fn revise_label(&self, session: &str, tweet: &str, label: i64) -> Result<Progress> {
        self.record(session, tweet, label, true)
    }

    fn record(&self, session: &str, tweet: &str, label: i64, revise: bool) -> Result<Progress> {
        let label = parse_label(label)?;
        let mut st = self.write();
        let s = st.snap.sessions.get(session).ok_or_else(|| not_found("session", session))?;
        if !s.queue.iter().any(|t| t == tweet) {
            return Err(not_found("tweet", tweet));
        }
        match (s.decisions.contains_key(tweet), revise) {
            (true, false) => {
                return Err(AnnotationError::Conflict(format!(
                    "tweet {tweet:?} is already labeled in session {session}; use revise to change it"
                )))
            }
            (false, true) => {
                return Err(AnnotationError::Conflict(format!(
                    "tweet {tweet:?} has no label in session {session} to revise"
                )))
            }
            _ => {}
        }
        let record = DecisionRecord {
            ts: now(),
            session: session.to_string(),
            tweet: tweet.to_string(),
            label,
            revised: revise,
        };
        let st = &mut *st;
        if let Some(log) = &mut st.log {
            log.append(DECISIONS_LOG, &serde_json::to_string(&record).expect("serializable record"))?;
        }
        st.snap.decisions_logged += 1;
        let s = st.snap.sessions.get_mut(session).expect("checked above");
        s.decisions.insert(record.tweet, label);
        let progress = s.progress();
        if let Some(log) = &st.log {
            if st.snap.decisions_logged % log.snapshot_every == 0 {
                if let Err(e) = write_snapshot(&log.dir, &st.snap) {
                    // the log alone is enough to recover
                    log::warn!("snapshot failed: {e}");
                }
            }
        }
        Ok(progress)
    }

    /// Writes a snapshot now.
    pub fn snapshot(&self) -> Result<()> {
        let st = self.read();
        match &st.log {
            Some(log) => write_snapshot(&log.dir, &st.snap),
            None => Ok(()),
        }
    }

    fn pair(&self, a: &str, b: &str) -> Result<(Session, Session)> {
        let st = self.read();
        let get = |id: &str| st.snap.sessions.get(id).cloned().ok_or_else(|| not_found("session", id));
        let (sa, sb) = (get(a)?, get(b)?);
        let ids_a: HashSet<&String> = sa.queue.iter().collect();
        if sa.queue.len() != sb.queue.len() || !sb.queue.iter().all(|t| ids_a.contains(t)) {
            return Err(AnnotationError::CorpusMismatch);
        }
        Ok((sa, sb))
    }

    /// Cohen's kappa over the tweets both sessions have labeled.
    pub fn live_kappa(&self, a: &str, b: &str) -> Result<LiveKappa> {
        let (sa, sb) = self.pair(a, b)?;
        let pairs: Vec<(Label, Label)> = sa
            .decisions
            .iter()
            .filter_map(|(t, &la)| sb.decisions.get(t).map(|&lb| (la, lb)))
            .collect();
        let overlap = pairs.len();
        if overlap < 2 {
            return Ok(LiveKappa::InsufficientOverlap {
                overlap,
                reason: format!("{overlap} tweets labeled by both annotators; at least 2 are needed"),
            });
        }
        let table = contingency_pairs(pairs)?;
        match cohen_kappa(&table) {
            Ok(k) => Ok(LiveKappa::Ok {
                kappa: k.kappa,
                pa: k.pa,
                pe: k.pe,
                overlap,
                table,
            }),
            Err(CoreError::DegenerateDistribution { .. }) => Ok(LiveKappa::InsufficientOverlap {
                overlap,
                reason: "the shared labels do not vary enough for a chance-corrected agreement".into(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    /// Combines two complete sessions into gold labels.
    pub fn merge_annotations(&self, a: &str, b: &str, policy: MergePolicy) -> Result<GoldLabels> {
        let (sa, sb) = self.pair(a, b)?;
        let mut missing: Vec<String> = Vec::new();
        for s in [&sa, &sb] {
            missing.extend(
                s.queue
                    .iter()
                    .filter(|t| !s.decisions.contains_key(*t))
                    .map(|t| format!("{}:{t}", s.session_id)),
            );
        }
        if !missing.is_empty() {
            return Err(AnnotationError::Incomplete { missing });
        }
        let mut gold = BTreeMap::new();
        let mut adjudication = Vec::new();
        let mut resolution_log = Vec::with_capacity(sa.decisions.len());
        for (t, &la) in &sa.decisions {
            let lb = sb.decisions[t];
            let resolution = if la == lb {
                gold.insert(t.clone(), la);
                Resolution::Agreed
            } else if policy == MergePolicy::AdjudicateList {
                adjudication.push(t.clone());
                Resolution::NeedsAdjudication
            } else {
                Resolution::Excluded
            };
            resolution_log.push(ResolutionEntry {
                tweet_id: t.clone(),
                label_a: la,
                label_b: lb,
                resolution,
            });
        }
        Ok(GoldLabels {
            policy,
            gold,
            adjudication,
            resolution_log,
        })
    }
}

fn not_found(what: &'static str, id: &str) -> AnnotationError {
    AnnotationError::NotFound {
        what,
        id: id.to_string(),
    }
}

fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<()> {
    let tmp = dir.join(format!("{SNAPSHOT}.tmp"));
    let path = dir.join(SNAPSHOT);
    let body = serde_json::to_vec(snap).expect("serializable snapshot");
    let mut f = File::create(&tmp).map_err(|e| AnnotationError::storage(&tmp, e))?;
    f.write_all(&body)
        .and_then(|_| f.sync_all())
        .map_err(|e| AnnotationError::storage(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| AnnotationError::storage(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use arsid_core::ingest::Tweet;

    fn corpus(n: usize) -> Corpus {
        Corpus::new((0..n).map(|i| Tweet::new(format!("t{i}"), format!("نص {i}"))).collect(), "mem").unwrap()
    }

    #[test]
    fn queues_are_seeded_permutations() {
        let store = Store::in_memory(&corpus(5)).unwrap();
        let a = store.create_session("A", 7).unwrap();
        let b = store.create_session("A", 7).unwrap();
        let c = store.create_session("A", 8).unwrap();
        assert_eq!(a.queue, b.queue);
        assert_ne!(a.session_id, b.session_id);
        let mut sorted = c.queue.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["t0", "t1", "t2", "t3", "t4"]);
        assert!(Store::in_memory(&corpus(0)).is_err());
    }

    #[test]
    fn next_item_walks_the_queue() {
        let store = Store::in_memory(&corpus(3)).unwrap();
        let s = store.create_session("A", 1).unwrap();
        let n = store.next_item(&s.session_id).unwrap();
        assert_eq!(n.item.unwrap().tweet_id, s.queue[0]);
        store.submit_label(&s.session_id, &s.queue[0], 1).unwrap();
        let n = store.next_item(&s.session_id).unwrap();
        assert_eq!(n.item.as_ref().unwrap().tweet_id, s.queue[1]);
        assert_eq!(n.item.unwrap().position, 1);
        for t in &s.queue[1..] {
            store.submit_label(&s.session_id, t, 0).unwrap();
        }
        let n = store.next_item(&s.session_id).unwrap();
        assert!(n.done && n.item.is_none());
        assert!(matches!(store.next_item("nope"), Err(AnnotationError::NotFound { .. })));
    }

    #[test]
    fn submit_rules() {
        let store = Store::in_memory(&corpus(4)).unwrap();
        let s = store.create_session("A", 1).unwrap();
        let t = &s.queue[0];
        let p = store.submit_label(&s.session_id, t, 1).unwrap();
        assert_eq!((p.decided, p.total), (1, 4));
        assert!(matches!(store.submit_label(&s.session_id, t, 1), Err(AnnotationError::Conflict(_))));
        assert!(matches!(
            store.submit_label(&s.session_id, &s.queue[1], 2),
            Err(AnnotationError::Validation(_))
        ));
        assert!(matches!(
            store.submit_label(&s.session_id, "zzz", 1),
            Err(AnnotationError::NotFound { .. })
        ));
        assert!(matches!(
            store.revise_label(&s.session_id, &s.queue[1], 1),
            Err(AnnotationError::Conflict(_))
        ));
        store.revise_label(&s.session_id, t, 0).unwrap();
        assert_eq!(store.session(&s.session_id).unwrap().decisions[t], Label::NonSuicidal);
    }

    fn label_all(store: &Store, s: &Session, f: impl Fn(usize) -> i64) {
        let mut ids = s.queue.clone();
        ids.sort_by_key(|t| t[1..].parse::<usize>().unwrap());
        for (i, t) in ids.iter().enumerate() {
            store.submit_label(&s.session_id, t, f(i)).unwrap();
        }
    }

    #[test]
    fn kappa_and_merge() {
        let store = Store::in_memory(&corpus(10)).unwrap();
        let a = store.create_session("A", 1).unwrap();
        let b = store.create_session("B", 2).unwrap();
        assert!(matches!(
            store.live_kappa(&a.session_id, &b.session_id).unwrap(),
            LiveKappa::InsufficientOverlap { overlap: 0, .. }
        ));
        assert!(matches!(
            store.merge_annotations(&a.session_id, &b.session_id, MergePolicy::RequireAgreement),
            Err(AnnotationError::Incomplete { .. })
        ));
        label_all(&store, &a, |i| (i % 2) as i64);
        label_all(&store, &b, |i| (i % 2) as i64);
        match store.live_kappa(&a.session_id, &b.session_id).unwrap() {
            LiveKappa::Ok { kappa, overlap, .. } => assert_eq!((kappa, overlap), (1.0, 10)),
            other => panic!("{other:?}"),
        }
        let g = store.merge_annotations(&a.session_id, &b.session_id, MergePolicy::RequireAgreement).unwrap();
        assert_eq!(g.gold.len(), 10);
        assert!(g.adjudication.is_empty());

        store.revise_label(&b.session_id, "t3", 0).unwrap();
        let g = store.merge_annotations(&a.session_id, &b.session_id, MergePolicy::RequireAgreement).unwrap();
        assert_eq!(g.gold.len(), 9);
        assert_eq!(g.resolution_log.len(), 10);
        let g = store.merge_annotations(&a.session_id, &b.session_id, MergePolicy::AdjudicateList).unwrap();
        assert_eq!(g.adjudication, vec!["t3"]);
        assert_eq!(g.gold.len(), 9);
    }

    #[test]
    fn log_replay_restores_state() {
        let dir = tempfile::tempdir().unwrap();
        let c = corpus(6);
        let before = {
            let store = Store::open(&c, dir.path(), 4).unwrap();
            let a = store.create_session("A", 3).unwrap();
            let b = store.create_session("B", 4).unwrap();
            for t in &a.queue {
                store.submit_label(&a.session_id, t, 1).unwrap();
            }
            store.submit_label(&b.session_id, &b.queue[0], 0).unwrap();
            store.revise_label(&a.session_id, &a.queue[2], 0).unwrap();
            store.sessions()
        };
        assert!(dir.path().join(SNAPSHOT).is_file());
        let store = Store::open(&c, dir.path(), 4).unwrap();
        assert_eq!(store.sessions(), before);
        let s = store.create_session("C", 0).unwrap();
        assert_eq!(s.session_id, "s3");

        let log = std::fs::read_to_string(dir.path().join(DECISIONS_LOG)).unwrap();
        let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
        let mut keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["label", "revised", "session", "ts", "tweet"]);
        assert_eq!(log.lines().count(), 8);
    }

    #[test]
    fn torn_final_line_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let c = corpus(3);
        {
            let store = Store::open(&c, dir.path(), 100).unwrap();
            let a = store.create_session("A", 3).unwrap();
            store.submit_label(&a.session_id, &a.queue[0], 1).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(dir.path().join(DECISIONS_LOG)).unwrap();
        f.write_all(br#"{"ts":"2024-01-01T00:00:00Z","sess"#).unwrap();
        let store = Store::open(&c, dir.path(), 100).unwrap();
        assert_eq!(store.sessions()[0].decisions.len(), 1);
    }
}
