//! Descriptive corpus statistics: class balance, tweet lengths, frequent
//! terms and hour-of-day activity.

use std::collections::HashMap;

use chrono::{Duration, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::csv_field;
use crate::ingest::{Corpus, Label, Tweet};
use crate::textnorm::{self, NormalizeOptions, StopList};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub suicidal: u64,
    pub non_suicidal: u64,
    pub suicidal_fraction: f64,
    pub non_suicidal_fraction: f64,
}

impl ClassWeights {
    pub fn from_counts(suicidal: u64, non_suicidal: u64) -> Result<Self> {
        let total = suicidal + non_suicidal;
        if total == 0 {
            return Err(Error::Empty("no labeled tweets".into()));
        }
        let suicidal_fraction = suicidal as f64 / total as f64;
        Ok(Self {
            suicidal,
            non_suicidal,
            suicidal_fraction,
            non_suicidal_fraction: non_suicidal as f64 / total as f64,
        })
    }

    pub fn total(&self) -> u64 {
        self.suicidal + self.non_suicidal
    }

    pub fn to_csv(&self) -> String {
        format!(
            "class,count,fraction\n1,{},{}\n0,{},{}\n",
            self.suicidal, self.suicidal_fraction, self.non_suicidal, self.non_suicidal_fraction
        )
    }
}

pub fn class_weights(corpus: &Corpus) -> Result<ClassWeights> {
    let labels = corpus.labels()?;
    let pos = labels.iter().filter(|(_, l)| l.is_positive()).count() as u64;
    ClassWeights::from_counts(pos, labels.len() as u64 - pos)
}

/// Tweets of `class`, or every tweet when `class` is `None`. Unlabeled
/// tweets are an error when filtering by class.
fn select<'a>(corpus: &'a Corpus, class: Option<Label>) -> Result<Vec<&'a Tweet>> {
    let Some(c) = class else {
        return Ok(corpus.tweets.iter().collect());
    };
    let mut out = Vec::new();
    for t in &corpus.tweets {
        match t.label {
            Some(l) if l == c => out.push(t),
            Some(_) => {}
            None => return Err(Error::Unlabeled(t.id.clone())),
        }
    }
    Ok(out)
}

/// Token counts bucketed into `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub class: Option<Label>,
    pub bin_width: usize,
    /// `counts.len() + 1` strictly increasing edges.
    pub edges: Vec<usize>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("low,high,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

pub fn length_histogram(corpus: &Corpus, class: Option<Label>, bin_width: usize) -> Result<Histogram> {
    length_histogram_with(corpus, class, bin_width, &NormalizeOptions::default())
}

/// Histogram of normalized token counts. Bins start at the multiple of
/// `bin_width` at or below the shortest tweet and end after the longest.
pub fn length_histogram_with(
    corpus: &Corpus,
    class: Option<Label>,
    bin_width: usize,
    opts: &NormalizeOptions,
) -> Result<Histogram> {
    if bin_width == 0 {
        return Err(Error::InvalidArgument("bin width must be at least 1".into()));
    }
    let lengths: Vec<usize> = select(corpus, class)?
        .iter()
        .map(|t| textnorm::normalize_with(&t.text, opts).tokens.len())
        .collect();
    let (Some(&min), Some(&max)) = (lengths.iter().min(), lengths.iter().max()) else {
        return Ok(Histogram {
            class,
            bin_width,
            edges: Vec::new(),
            counts: Vec::new(),
        });
    };
    let first = min / bin_width;
    let last = max / bin_width;
    let mut counts = vec![0u64; last - first + 1];
    for len in lengths {
        counts[len / bin_width - first] += 1;
    }
    let edges = (first..=last + 1).map(|b| b * bin_width).collect();
    Ok(Histogram {
        class,
        bin_width,
        edges,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: u64,
}

pub fn term_frequencies(corpus: &Corpus, class: Option<Label>, stops: &StopList, top_k: usize) -> Result<Vec<TermCount>> {
    term_frequencies_with(corpus, class, stops, top_k, &NormalizeOptions::default())
}

/// The `top_k` most frequent normalized, stop-filtered tokens; count
/// descending, ties alphabetical.
pub fn term_frequencies_with(
    corpus: &Corpus,
    class: Option<Label>,
    stops: &StopList,
    top_k: usize,
    opts: &NormalizeOptions,
) -> Result<Vec<TermCount>> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in select(corpus, class)? {
        let tokens = textnorm::normalize_with(&t.text, opts).tokens;
        for tok in textnorm::remove_stopwords(&tokens, stops) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<TermCount> = counts
        .into_iter()
        .map(|(term, count)| TermCount { term, count })
        .collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.term.cmp(&b.term)));
    ranked.truncate(top_k);
    Ok(ranked)
}

pub fn term_frequencies_csv(terms: &[TermCount]) -> String {
    let mut out = String::from("rank,term,count\n");
    for (i, t) in terms.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, csv_field(&t.term), t.count));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourlyTrend {
    pub class: Option<Label>,
    pub tz_offset_minutes: i32,
    pub hours: [u64; 24],
    /// Tweets without a timestamp.
    pub unknown: u64,
}

impl HourlyTrend {
    pub fn total(&self) -> u64 {
        self.hours.iter().sum::<u64>() + self.unknown
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("hour,count\n");
        for (h, c) in self.hours.iter().enumerate() {
            out.push_str(&format!("{h},{c}\n"));
        }
        out.push_str(&format!("unknown,{}\n", self.unknown));
        out
    }
}

/// Counts by local hour, where local time is UTC plus `tz_offset_minutes`.
pub fn hourly_trend(corpus: &Corpus, class: Option<Label>, tz_offset_minutes: i32) -> Result<HourlyTrend> {
    if tz_offset_minutes.unsigned_abs() >= 24 * 60 {
        return Err(Error::InvalidArgument(format!(
            "timezone offset must be within ±24h, got {tz_offset_minutes} minutes"
        )));
    }
    let offset = Duration::minutes(i64::from(tz_offset_minutes));
    let mut trend = HourlyTrend {
        class,
        tz_offset_minutes,
        hours: [0; 24],
        unknown: 0,
    };
    for t in select(corpus, class)? {
        match t.created_at {
            Some(ts) => trend.hours[(ts + offset).hour() as usize] += 1,
            None => trend.unknown += 1,
        }
    }
    Ok(trend)
}

/// Everything the `stats` command reports for one class selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub class_weights: Option<ClassWeights>,
    pub lengths: Histogram,
    pub terms: Vec<TermCount>,
    pub hourly: HourlyTrend,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;
    use proptest::prelude::*;

    fn corpus(texts: &[(&str, u8)]) -> Corpus {
        let tweets = texts
            .iter()
            .enumerate()
            .map(|(i, (t, l))| Tweet::new(format!("{i}"), *t).with_label(Label::try_from(*l).unwrap()))
            .collect();
        Corpus::new(tweets, "mem").unwrap()
    }

    #[test]
    fn class_weight_examples() {
        let w = ClassWeights::from_counts(1426, 4293).unwrap();
        assert_eq!((w.suicidal_fraction * 100.0).round(), 25.0);
        assert!((w.suicidal_fraction * 100.0 - 24.93).abs() < 0.005);
        assert!((w.suicidal_fraction + w.non_suicidal_fraction - 1.0).abs() < 1e-12);
        let w = class_weights(&corpus(&[("a", 1)])).unwrap();
        assert_eq!((w.suicidal_fraction, w.non_suicidal_fraction), (1.0, 0.0));
        let w = class_weights(&corpus(&[("a", 1), ("b", 0)])).unwrap();
        assert_eq!(w.suicidal_fraction, 0.5);

        let unlabeled = Corpus::new(vec![Tweet::new("x", "a")], "mem").unwrap();
        assert!(matches!(class_weights(&unlabeled), Err(Error::Unlabeled(_))));
    }

    #[test]
    fn histogram_examples() {
        let c = corpus(&[("a b c", 1), ("d e f", 1)]);
        let h = length_histogram(&c, Some(Label::Suicidal), 1).unwrap();
        assert_eq!(h.edges, vec![3, 4]);
        assert_eq!(h.counts, vec![2]);

        let long = vec!["w"; 20].join(" ");
        let c = corpus(&[("a b", 1), (&long, 1), ("x y z", 0)]);
        let h1 = length_histogram(&c, Some(Label::Suicidal), 1).unwrap();
        assert_eq!(h1.edges.first(), Some(&2));
        assert_eq!(h1.edges.last(), Some(&21));
        assert_eq!(h1.counts.first(), Some(&1));
        assert_eq!(h1.counts.last(), Some(&1));
        let h5 = length_histogram(&c, Some(Label::Suicidal), 5).unwrap();
        assert_eq!(h1.total(), h5.total());
        assert_eq!(length_histogram(&c, None, 5).unwrap().total(), 3);
    }

    #[test]
    fn term_examples() {
        let c = corpus(&[("a a b", 1)]);
        let none = StopList::new();
        let t = term_frequencies(&c, None, &none, 10).unwrap();
        assert_eq!(
            t,
            vec![
                TermCount { term: "a".into(), count: 2 },
                TermCount { term: "b".into(), count: 1 }
            ]
        );
        assert_eq!(term_frequencies(&c, None, &none, 1).unwrap().len(), 1);
        let stops = StopList::from_words(["a"]);
        assert_eq!(
            term_frequencies(&c, None, &stops, 10).unwrap(),
            vec![TermCount { term: "b".into(), count: 1 }]
        );
        // ties are alphabetical
        let c = corpus(&[("z y x", 1)]);
        let t = term_frequencies(&c, None, &none, 10).unwrap();
        assert_eq!(t.iter().map(|t| t.term.as_str()).collect::<Vec<_>>(), ["x", "y", "z"]);
    }

    #[test]
    fn hourly_examples() {
        let mk = |id: &str, ts: Option<&str>, l: u8| {
            let t = Tweet::new(id, "x").with_label(Label::try_from(l).unwrap());
            match ts {
                Some(s) => t.with_time(parse_timestamp(s).unwrap()),
                None => t,
            }
        };
        let c = Corpus::new(
            vec![
                mk("1", Some("2021-08-23T22:05:00Z"), 1),
                mk("2", Some("2021-08-23T22:59:00Z"), 1),
                mk("3", Some("2021-08-23T21:30:00Z"), 0),
                mk("4", None, 0),
            ],
            "mem",
        )
        .unwrap();
        let h = hourly_trend(&c, Some(Label::Suicidal), 0).unwrap();
        assert_eq!(h.hours[22], 2);
        assert_eq!(h.total(), 2);
        let h = hourly_trend(&c, Some(Label::NonSuicidal), 60).unwrap();
        assert_eq!(h.hours[22], 1);
        assert_eq!(h.unknown, 1);
        let h = hourly_trend(&c, Some(Label::NonSuicidal), -22 * 60).unwrap();
        assert_eq!(h.hours[23], 1);

        let only_neg = corpus(&[("a", 0)]);
        let h = hourly_trend(&only_neg, Some(Label::Suicidal), 0).unwrap();
        assert_eq!(h.hours, [0; 24]);
        assert_eq!(h.total(), 0);
    }

    proptest! {
        #[test]
        fn conservation_and_order_invariance(
            docs in proptest::collection::vec(("[ab ]{0,12}", any::<bool>(), proptest::option::of(0i64..100_000)), 0..20),
            width in 1usize..6,
            tz in -720i32..720,
        ) {
            let tweets: Vec<Tweet> = docs.iter().enumerate().map(|(i, (t, l, ts))| {
                let tw = Tweet::new(format!("{i}"), t.clone()).with_label(Label::from(*l));
                match ts {
                    Some(s) => tw.with_time(chrono::DateTime::from_timestamp(s * 60, 0).unwrap()),
                    None => tw,
                }
            }).collect();
            let c = Corpus::new(tweets.clone(), "p").unwrap();
            let pos = docs.iter().filter(|d| d.1).count() as u64;
            prop_assert_eq!(length_histogram(&c, Some(Label::Suicidal), width).unwrap().total(), pos);
            prop_assert_eq!(hourly_trend(&c, Some(Label::Suicidal), tz).unwrap().total(), pos);

            let mut rev = tweets;
            rev.reverse();
            let r = Corpus::new(rev, "p").unwrap();
            let stops = StopList::new();
            prop_assert_eq!(
                term_frequencies(&c, None, &stops, 50).unwrap(),
                term_frequencies(&r, None, &stops, 50).unwrap()
            );
        }
    }
}
