//! Arabic text normalization, tokenization and stop-word filtering.
//!
//! Every matching, counting and vectorization step in the pipeline runs on
//! the output of [`normalize`]. The recipe is fixed and each sub-step can be
//! switched off through [`NormalizeOptions`]:
//!
//! 1. remove Arabic diacritics (U+064B..=U+0652, U+0670) and tatweel (U+0640)
//! 2. remove `#` characters
//! 3. remove URLs (`http://`, `https://`, `www.` up to the next whitespace)
//! 4. drop user-mention tokens (tokens starting with `@`)
//! 5. fold alef variants (U+0622, U+0623, U+0625) to bare alef (U+0627)
//! 6. fold alef maqsura (U+0649) to ya (U+064A)
//! 7. fold ta marbuta (U+0629) to ha (U+0647); this one is lossy
//! 8. collapse whitespace and trim
//!
//! Character deletions run before URL and mention stripping so that a
//! deletion can never expose a new URL or mention, which keeps the function
//! idempotent.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Toggles for the individual normalization steps. All on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeOptions {
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub strip_hash: bool,
    pub remove_diacritics: bool,
    pub remove_tatweel: bool,
    pub fold_alef: bool,
    pub fold_alef_maqsura: bool,
    pub fold_ta_marbuta: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            strip_urls: true,
            strip_mentions: true,
            strip_hash: true,
            remove_diacritics: true,
            remove_tatweel: true,
            fold_alef: true,
            fold_alef_maqsura: true,
            fold_ta_marbuta: true,
        }
    }
}

/// Raw text together with its normalized form and tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub original: String,
    pub normalized: String,
    pub tokens: Vec<String>,
}

const TATWEEL: char = '\u{0640}';

pub fn is_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}' | '\u{0670}')
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("static regex"))
}

/// Normalizes `raw` with the default options.
pub fn normalize(raw: &str) -> NormalizedText {
    normalize_with(raw, &NormalizeOptions::default())
}

pub fn normalize_with(raw: &str, opts: &NormalizeOptions) -> NormalizedText {
    let normalized = normalize_str(raw, opts);
    let tokens = tokenize(&normalized);
    NormalizedText {
        original: raw.to_owned(),
        normalized,
        tokens,
    }
}

/// The normalized string only, without allocating the token list.
pub fn normalize_str(raw: &str, opts: &NormalizeOptions) -> String {
    let mut text: String = raw
        .chars()
        .filter(|&c| {
            !(opts.remove_diacritics && is_diacritic(c))
                && !(opts.remove_tatweel && c == TATWEEL)
                && !(opts.strip_hash && c == '#')
        })
        .collect();

    if opts.strip_urls {
        text = url_regex().replace_all(&text, " ").into_owned();
    }

    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if opts.strip_mentions && token.starts_with('@') {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(token.chars().map(|c| fold_char(c, opts)));
    }
    out
}

fn fold_char(c: char, opts: &NormalizeOptions) -> char {
    match c {
        '\u{0622}' | '\u{0623}' | '\u{0625}' if opts.fold_alef => '\u{0627}',
        '\u{0649}' if opts.fold_alef_maqsura => '\u{064A}',
        '\u{0629}' if opts.fold_ta_marbuta => '\u{0647}',
        _ => c,
    }
}

/// Whitespace tokenization. Never yields empty tokens.
pub fn tokenize(normalized: &str) -> Vec<String> {
    normalized.split_whitespace().map(str::to_owned).collect()
}

/// A set of normalized stop words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
}

impl StopList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a stop list, normalizing every entry. Entries that normalize to
    /// more than one token contribute each token.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let opts = NormalizeOptions::default();
        let words = words
            .into_iter()
            .flat_map(|w| tokenize(&normalize_str(w.as_ref(), &opts)))
            .collect();
        Self { words }
    }

    /// Parses the stop-list file format: one token per line, `#` starts a
    /// comment line, blank lines ignored.
    pub fn parse(content: &str) -> Self {
        Self::from_words(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&content))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Order-preserving removal of stop words.
pub fn remove_stopwords<S: AsRef<str>>(tokens: &[S], stops: &StopList) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !stops.contains(t))
        .map(str::to_owned)
        .collect()
}

/// Inclusive range of n-gram lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NgramRange {
    pub low: usize,
    pub high: usize,
}

impl NgramRange {
    pub fn new(low: usize, high: usize) -> Result<Self> {
        let range = Self { low, high };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if self.low == 0 || self.low > self.high {
            return Err(Error::InvalidRange {
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }
}

impl Default for NgramRange {
    fn default() -> Self {
        Self { low: 2, high: 4 }
    }
}

/// Character n-grams of one token, grouped by length (ascending) and in
/// left-to-right order within each length. A token shorter than `n`
/// contributes itself once at that length.
pub fn char_ngrams(token: &str, range: NgramRange) -> Result<Vec<String>> {
    range.validate()?;
    let mut out = Vec::new();
    char_ngrams_into(token, range, &mut out);
    Ok(out)
}

pub(crate) fn char_ngrams_into(token: &str, range: NgramRange, out: &mut Vec<String>) {
    if token.is_empty() {
        return;
    }
    // byte offsets of every char boundary, including the end
    let bounds: Vec<usize> = token
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(token.len()))
        .collect();
    let len = bounds.len() - 1;
    for n in range.low..=range.high {
        if len < n {
            out.push(token.to_owned());
            continue;
        }
        for start in 0..=(len - n) {
            out.push(token[bounds[start]..bounds[start + n]].to_owned());
        }
    }
}
