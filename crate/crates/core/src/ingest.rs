//! Offline tweet ingestion, keyword matching and deduplication.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::{self, NormalizeOptions};

/// Binary annotation label. Serialized as the integers 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonSuicidal = 0,
    Suicidal = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Label::Suicidal
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::NonSuicidal),
            1 => Ok(Label::Suicidal),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl From<bool> for Label {
    fn from(positive: bool) -> Self {
        if positive {
            Label::Suicidal
        } else {
            Label::NonSuicidal
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// One social-media post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "rfc3339_opt"
    )]
    pub created_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matched_keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            created_at: None,
            matched_keywords: Vec::new(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_time(mut self, t: DateTime<Utc>) -> Self {
        self.created_at = Some(t);
        self
    }
}

mod rfc3339_opt {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| super::parse_timestamp(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Parses an RFC 3339 timestamp, truncated to whole seconds.
pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let t = DateTime::parse_from_rfc3339(s.trim()).map_err(|e| format!("bad timestamp {s:?}: {e}"))?;
    let secs = t.timestamp();
    DateTime::from_timestamp(secs, 0).ok_or_else(|| format!("timestamp out of range: {s:?}"))
}

/// Ordered tweet collection with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub tweets: Vec<Tweet>,
    pub provenance: String,
}

impl Corpus {
    pub fn new(tweets: Vec<Tweet>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(tweets.len());
        for t in &tweets {
            if t.id.is_empty() {
                return Err(Error::InvalidArgument("tweet id must be non-empty".into()));
            }
            if !seen.insert(t.id.as_str()) {
                return Err(Error::DuplicateId(t.id.clone()));
            }
        }
        Ok(Self {
            tweets,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Tweet> {
        self.tweets.iter().find(|t| t.id == id)
    }

    /// Labels by id; errors on the first unlabeled tweet.
    pub fn labels(&self) -> Result<Vec<(String, Label)>> {
        self.tweets
            .iter()
            .map(|t| {
                t.label
                    .map(|l| (t.id.clone(), l))
                    .ok_or_else(|| Error::Unlabeled(t.id.clone()))
            })
            .collect()
    }

    /// Writes the corpus as JSONL, one tweet per line, in order.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.tweets {
            let line = serde_json::to_string(&TweetRecord::from(t))?;
            writeln!(w, "{line}").map_err(|e| Error::io("<writer>", e))?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Wire form of a tweet: `{"id", "text", "created_at", "label"}` plus the
/// optional keyword provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TweetRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    matched_keywords: Vec<String>,
}

impl From<&Tweet> for TweetRecord {
    fn from(t: &Tweet) -> Self {
        Self {
            id: t.id.clone(),
            text: t.text.clone(),
            created_at: t
                .created_at
                .map(|c| c.to_rfc3339_opts(SecondsFormat::Secs, true)),
            label: t.label.map(Label::as_u8),
            matched_keywords: t.matched_keywords.clone(),
        }
    }
}

impl TryFrom<TweetRecord> for Tweet {
    type Error = String;

    fn try_from(r: TweetRecord) -> std::result::Result<Self, String> {
        if r.id.trim().is_empty() {
            return Err("empty id".into());
        }
        let created_at = r.created_at.as_deref().map(parse_timestamp).transpose()?;
        let label = r.label.map(Label::try_from).transpose()?;
        Ok(Tweet {
            id: r.id,
            text: r.text,
            created_at,
            matched_keywords: r.matched_keywords,
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guesses from the file extension; defaults to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// A loaded corpus and the number of records that could not be used.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub corpus: Corpus,
    pub skipped: usize,
}

pub fn load_tweets(path: impl AsRef<Path>, format: InputFormat) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let provenance = path.display().to_string();
    let outcome = match format {
        InputFormat::Jsonl => parse_jsonl(&content, provenance),
        InputFormat::Csv => parse_csv(&content, provenance)?,
    };
    if outcome.corpus.is_empty() {
        log::warn!("{}: no parseable records", path.display());
    }
    if outcome.skipped > 0 {
        log::warn!("{}: skipped {} malformed records", path.display(), outcome.skipped);
    }
    Ok(outcome)
}

pub fn parse_jsonl(content: &str, provenance: impl Into<String>) -> LoadOutcome {
    let records = content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            serde_json::from_str::<TweetRecord>(line)
                .map_err(|e| e.to_string())
                .and_then(Tweet::try_from)
        });
    collect_records(records, provenance.into())
}

pub fn parse_csv(content: &str, provenance: impl Into<String>) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("csv header", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(id_col), Some(text_col)) = (col("id"), col("text")) else {
        if content.trim().is_empty() {
            return Ok(LoadOutcome {
                corpus: Corpus::default(),
                skipped: 0,
            });
        }
        return Err(Error::parse("csv header", "required columns: id,text,created_at,label"));
    };
    let time_col = col("created_at");
    let label_col = col("label");

    let records = reader.records().map(|rec| {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |i: Option<usize>| {
            i.and_then(|i| rec.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
        };
        let label = match field(label_col) {
            Some(s) => Some(s.parse::<u8>().map_err(|e| format!("bad label {s:?}: {e}"))?),
            None => None,
        };
        Tweet::try_from(TweetRecord {
            id: field(Some(id_col)).unwrap_or_default(),
            text: rec.get(text_col).unwrap_or_default().to_owned(),
            created_at: field(time_col),
            label,
            matched_keywords: Vec::new(),
        })
    });
    Ok(collect_records(records, provenance.into()))
}

fn collect_records<I>(records: I, provenance: String) -> LoadOutcome
where
    I: Iterator<Item = std::result::Result<Tweet, String>>,
{
    let mut seen = HashSet::new();
    let mut tweets = Vec::new();
    let mut skipped = 0;
    for (line, rec) in records.enumerate() {
        match rec {
            Ok(t) if seen.insert(t.id.clone()) => tweets.push(t),
            Ok(t) => {
                log::debug!("record {}: duplicate id {}", line + 1, t.id);
                skipped += 1;
            }
            Err(e) => {
                log::debug!("record {}: {e}", line + 1);
                skipped += 1;
            }
        }
    }
    LoadOutcome {
        corpus: Corpus { tweets, provenance },
        skipped,
    }
}

/// One search phrase: the text as written, its normalized tokens, and the
/// source tag it was translated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyword {
    pub phrase: String,
    pub tokens: Vec<String>,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordList {
    keywords: Vec<Keyword>,
}

impl KeywordList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a phrase. Phrases that normalize to nothing are rejected.
    pub fn push(&mut self, phrase: &str, source: &str) -> Result<()> {
        let tokens = textnorm::normalize(phrase).tokens;
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(format!("empty keyword phrase {phrase:?}")));
        }
        self.keywords.push(Keyword {
            phrase: phrase.trim().to_owned(),
            tokens,
            source: source.trim().to_owned(),
        });
        Ok(())
    }

    pub fn from_phrases<'a, I: IntoIterator<Item = &'a str>>(phrases: I) -> Result<Self> {
        let mut list = Self::new();
        for p in phrases {
            list.push(p, "")?;
        }
        Ok(list)
    }

    /// Parses `arabic_phrase<TAB>source_tag` lines. `#` comment lines and
    /// blank lines are ignored; a missing tag is allowed.
    pub fn parse(content: &str) -> Result<Self> {
        let mut list = Self::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (phrase, tag) = line.split_once('\t').unwrap_or((line, ""));
            list.push(phrase, tag)
                .map_err(|e| Error::parse(format!("keyword line {}", i + 1), e.to_string()))?;
        }
        Ok(list)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Keyword> {
        self.keywords.iter()
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }
}

/// Phrases whose normalized token sequence occurs contiguously in the
/// tweet's normalized tokens. Returns phrases as written in the list.
pub fn match_keywords(tweet: &Tweet, keywords: &KeywordList) -> Vec<String> {
    let tokens = textnorm::normalize(&tweet.text).tokens;
    match_tokens(&tokens, keywords)
}

pub fn match_tokens(tokens: &[String], keywords: &KeywordList) -> Vec<String> {
    keywords
        .iter()
        .filter(|k| tokens.windows(k.tokens.len()).any(|w| w == k.tokens.as_slice()))
        .map(|k| k.phrase.clone())
        .collect()
}

/// Removes tweets whose normalized text equals an earlier-created tweet's.
/// The earliest `created_at` survives (missing timestamps sort last, ties by
/// smaller id); survivors keep their input order.
pub fn dedup(corpus: &Corpus) -> Corpus {
    dedup_with(corpus, &NormalizeOptions::default())
}

pub fn dedup_with(corpus: &Corpus, opts: &NormalizeOptions) -> Corpus {
    let mut best: HashMap<String, usize> = HashMap::new();
    for (i, t) in corpus.tweets.iter().enumerate() {
        let key = textnorm::normalize_str(&t.text, opts);
        best.entry(key)
            .and_modify(|j| {
                if precedes(t, &corpus.tweets[*j]) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep = vec![false; corpus.len()];
    for &i in best.values() {
        keep[i] = true;
    }
    Corpus {
        tweets: corpus
            .tweets
            .iter()
            .zip(keep)
            .filter_map(|(t, k)| k.then(|| t.clone()))
            .collect(),
        provenance: corpus.provenance.clone(),
    }
}

fn precedes(a: &Tweet, b: &Tweet) -> bool {
    let key = |t: &Tweet| (t.created_at.is_none(), t.created_at, t.id.clone());
    key(a) < key(b)
}

/// Counts at each collection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub loaded: usize,
    pub skipped: usize,
    pub matched: usize,
    pub deduplicated: usize,
}

/// Load, keep tweets with at least one keyword match, then optionally dedup.
pub fn collect(
    source: impl AsRef<Path>,
    format: InputFormat,
    keywords: &KeywordList,
    do_dedup: bool,
) -> Result<(Corpus, StageCounts)> {
    let LoadOutcome { corpus, skipped } = load_tweets(source, format)?;
    Ok(collect_corpus(corpus, skipped, keywords, do_dedup))
}

pub fn collect_corpus(
    corpus: Corpus,
    skipped: usize,
    keywords: &KeywordList,
    do_dedup: bool,
) -> (Corpus, StageCounts) {
    let loaded = corpus.len();
    let provenance = corpus.provenance.clone();
    let matched: Vec<Tweet> = corpus
        .tweets
        .into_iter()
        .filter_map(|mut t| {
            t.matched_keywords = match_keywords(&t, keywords);
            (!t.matched_keywords.is_empty()).then_some(t)
        })
        .collect();
    let matched = Corpus {
        tweets: matched,
        provenance,
    };
    let n_matched = matched.len();
    let out = if do_dedup { dedup(&matched) } else { matched };
    let counts = StageCounts {
        loaded,
        skipped,
        matched: n_matched,
        deduplicated: out.len(),
    };
    (out, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn jsonl_parsing() {
        let ok = r#"{"id":"1","text":"a","created_at":"2021-08-23T10:00:00Z","label":1}
{"id":"2","text":"b","created_at":"2021-08-23T11:00:00+03:00"}
{"id":"3","text":"c","created_at":"2021-08-24T10:00:00Z","label":0}
"#;
        let out = parse_jsonl(ok, "mem");
        assert_eq!(out.corpus.len(), 3);
        assert_eq!(out.skipped, 0);
        assert_eq!(out.corpus.tweets[0].label, Some(Label::Suicidal));
        assert_eq!(out.corpus.tweets[1].created_at, Some(ts("2021-08-23T08:00:00Z")));

        let bad = r#"{"id":"1","text":"a","created_at":"2021-08-23T10:00:00Z"}
{"id":"2","text":
{"id":"3","text":"c","created_at":"2021-08-24T10:00:00Z"}
"#;
        let out = parse_jsonl(bad, "mem");
        assert_eq!(out.corpus.len(), 2);
        assert_eq!(out.skipped, 1);

        let out = parse_jsonl("", "mem");
        assert_eq!(out.corpus.len(), 0);
    }

    #[test]
    fn jsonl_rejects_bad_labels_and_duplicate_ids() {
        let s = r#"{"id":"1","text":"a","label":2}
{"id":"2","text":"b"}
{"id":"2","text":"c"}
"#;
        let out = parse_jsonl(s, "mem");
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(out.skipped, 2);
    }

    #[test]
    fn csv_parsing() {
        let s = "id,text,created_at,label\n1,\"hello, world\",2021-08-23T10:00:00Z,1\n2,bye,,\n3,x,not-a-date,0\n";
        let out = parse_csv(s, "mem").unwrap();
        assert_eq!(out.corpus.len(), 2);
        assert_eq!(out.skipped, 1);
        assert_eq!(out.corpus.tweets[0].text, "hello, world");
        assert_eq!(out.corpus.tweets[1].label, None);
        assert!(parse_csv("foo,bar\n1,2\n", "mem").is_err());
    }

    #[test]
    fn jsonl_round_trip_preserves_order() {
        let corpus = Corpus::new(
            vec![
                Tweet::new("b", "ابى اموت").with_label(Label::Suicidal).with_time(ts("2022-01-01T00:00:00Z")),
                Tweet::new("a", "hello"),
            ],
            "mem",
        )
        .unwrap();
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let back = parse_jsonl(std::str::from_utf8(&buf).unwrap(), "mem").corpus;
        assert_eq!(back.tweets, corpus.tweets);
    }

    #[test]
    fn keyword_matching() {
        let kw = KeywordList::from_phrases(["ابى اموت"]).unwrap();
        let hit = match_keywords(&Tweet::new("1", "ابى اموت اليوم"), &kw);
        assert_eq!(hit, vec!["ابى اموت"]);
        assert!(match_keywords(&Tweet::new("1", "اموتابى"), &kw).is_empty());
        assert!(match_keywords(&Tweet::new("1", "ابى اموت"), &KeywordList::new()).is_empty());
        // diacritics and hamza on the tweet side still match
        assert_eq!(match_keywords(&Tweet::new("1", "أبى أَموت"), &kw).len(), 1);
    }

    #[test]
    fn keyword_file() {
        let kw = KeywordList::parse("# header\nابى اموت\tI want to die\nانتحار\tsuicide\n\n").unwrap();
        assert_eq!(kw.len(), 2);
        assert_eq!(kw.iter().next().unwrap().source, "I want to die");
        assert!(KeywordList::parse("\u{064B}\tdiacritic only\n").is_err());
    }

    #[test]
    fn dedup_keeps_earliest() {
        let c = Corpus::new(
            vec![
                Tweet::new("3", "same").with_time(ts("2022-01-03T00:00:00Z")),
                Tweet::new("1", "same").with_time(ts("2022-01-01T00:00:00Z")),
                Tweet::new("2", "same").with_time(ts("2022-01-02T00:00:00Z")),
            ],
            "mem",
        )
        .unwrap();
        let d = dedup(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d.tweets[0].id, "1");
    }

    #[test]
    fn dedup_ties_go_to_smaller_id_and_missing_time_loses() {
        let t = ts("2022-01-01T00:00:00Z");
        let c = Corpus::new(
            vec![
                Tweet::new("b", "x").with_time(t),
                Tweet::new("a", "x").with_time(t),
                Tweet::new("0", "x"),
            ],
            "mem",
        )
        .unwrap();
        assert_eq!(dedup(&c).tweets[0].id, "a");
    }

    #[test]
    fn dedup_distinct_and_diacritics() {
        let c = Corpus::new(vec![Tweet::new("1", "a"), Tweet::new("2", "b")], "mem").unwrap();
        assert_eq!(dedup(&c), c);
        let c = Corpus::new(
            vec![Tweet::new("1", "أَموت"), Tweet::new("2", "اموت")],
            "mem",
        )
        .unwrap();
        assert_eq!(dedup(&c).len(), 1);
    }

    fn ten_tweets(dups: bool) -> Corpus {
        let mut tweets: Vec<Tweet> = (0..10)
            .map(|i| Tweet::new(i.to_string(), format!("filler text {i}")))
            .collect();
        for (k, i) in [1, 3, 5, 7].into_iter().enumerate() {
            tweets[i].text = format!("ابى اموت {k}");
        }
        if dups {
            tweets[3].text = tweets[1].text.clone();
        }
        Corpus::new(tweets, "mem").unwrap()
    }

    #[test]
    fn collect_stage_counts() {
        let kw = KeywordList::from_phrases(["ابى اموت"]).unwrap();
        let (_, c) = collect_corpus(ten_tweets(false), 0, &kw, true);
        assert_eq!((c.loaded, c.matched, c.deduplicated), (10, 4, 4));
        let (out, c) = collect_corpus(ten_tweets(true), 0, &kw, true);
        assert_eq!((c.loaded, c.matched, c.deduplicated), (10, 4, 3));
        assert!(out.tweets.iter().all(|t| t.matched_keywords == vec!["ابى اموت"]));
        let (_, c) = collect_corpus(ten_tweets(false), 0, &KeywordList::new(), true);
        assert_eq!((c.loaded, c.matched, c.deduplicated), (10, 0, 0));
    }

    #[test]
    fn collect_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.jsonl");
        ten_tweets(true).save_jsonl(&path).unwrap();
        let kw = KeywordList::from_phrases(["ابى اموت"]).unwrap();
        let (_, c) = collect(&path, InputFormat::Jsonl, &kw, false).unwrap();
        assert_eq!((c.loaded, c.matched, c.deduplicated), (10, 4, 4));
        assert!(matches!(
            collect(dir.path().join("missing"), InputFormat::Jsonl, &kw, false),
            Err(Error::Io { .. })
        ));
    }
}
