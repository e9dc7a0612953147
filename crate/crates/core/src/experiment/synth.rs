//! Seeded generator of labeled pseudo-tweets for end-to-end runs.
//!
//! Each tweet is a run of neutral filler words with one class phrase
//! inserted at a random position. Both classes draw phrases that share
//! words (an "I want to die" phrase versus a "dying of laughter" phrase), so
//! a single shared token never decides the class. Misspelling applies one
//! random character edit to a token with the configured probability.

use chrono::{DateTime, Duration};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, Label, Tweet};
use crate::seed;

/// Phrases expressing the wish to die, in normalized spelling.
pub const POSITIVE_PHRASES: &[&str] = &[
    "ابي اموت",
    "اريد الانتحار",
    "تعبت من الحياه",
    "ودي انتحر",
    "ما ابي اعيش",
    "نفسي اموت وارتاح",
    "افكر انهي حياتي",
    "الموت ارحم لي",
];

/// Phrases sharing vocabulary with the positive ones in benign senses.
pub const NEGATIVE_PHRASES: &[&str] = &[
    "اموت من الضحك",
    "اموت فيك",
    "تعبت من الشغل",
    "الانتحار حرام",
    "ابي انام",
    "اموت على القهوه",
    "الحياه حلوه",
    "ما ابي اروح الدوام",
];

/// Neutral words; none of them occurs in a class phrase.
pub const FILLERS: &[&str] = &[
    "اليوم", "والله", "الصبح", "الناس", "كل", "يوم", "شي", "بس", "مع", "هذا", "كان", "عشان", "الحين",
    "مره", "كثير", "يا", "انا", "انت", "وش", "ليش", "بعد", "قبل", "البيت", "الجامعه", "الجو", "الليل",
    "صديقي", "امس", "بكره", "المباراه", "الاكل", "السياره", "الحمد", "لله", "جدا", "طيب", "خلاص",
];

const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق',
    'ك', 'ل', 'م', 'ن', 'ه', 'و', 'ي',
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    /// Fraction of positive (suicidal) tweets.
    pub balance: f64,
    /// Probability that a token receives one character edit.
    pub misspelling_rate: f64,
    /// Overrides the experiment seed when set.
    pub seed: Option<u64>,
    pub positive_phrases: Vec<String>,
    pub negative_phrases: Vec<String>,
    pub fillers: Vec<String>,
    pub min_fillers: usize,
    pub max_fillers: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            n: 2000,
            balance: 0.25,
            misspelling_rate: 0.15,
            seed: None,
            positive_phrases: own(POSITIVE_PHRASES),
            negative_phrases: own(NEGATIVE_PHRASES),
            fillers: own(FILLERS),
            min_fillers: 2,
            max_fillers: 10,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("synthetic corpus size must be at least 1".into()));
        }
        if !(self.balance > 0.0 && self.balance < 1.0) {
            return Err(Error::InvalidArgument(format!("balance must lie in (0, 1), got {}", self.balance)));
        }
        if !(0.0..=1.0).contains(&self.misspelling_rate) {
            return Err(Error::InvalidArgument(format!(
                "misspelling rate must lie in [0, 1], got {}",
                self.misspelling_rate
            )));
        }
        if self.min_fillers > self.max_fillers {
            return Err(Error::InvalidArgument("min_fillers exceeds max_fillers".into()));
        }
        for (name, list) in [
            ("positive phrase", &self.positive_phrases),
            ("negative phrase", &self.negative_phrases),
        ] {
            if list.iter().all(|p| p.split_whitespace().next().is_none()) {
                return Err(Error::Empty(format!("{name} list")));
            }
        }
        if self.fillers.is_empty() && self.max_fillers > 0 {
            return Err(Error::Empty("filler list".into()));
        }
        Ok(())
    }

    /// Number of positive tweets: nearest integer to `n * balance`, ties up.
    pub fn positives(&self) -> usize {
        ((self.n as f64 * self.balance + 0.5).floor() as usize).min(self.n)
    }
}

fn misspell(token: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = token.chars().collect();
    let i = rng.random_range(0..chars.len());
    match rng.random_range(0..4) {
        0 => {
            let c = *LETTERS.choose(rng).expect("non-empty alphabet");
            chars[i] = c;
        }
        1 if chars.len() > 2 => {
            chars.remove(i);
        }
        2 if i + 1 < chars.len() => chars.swap(i, i + 1),
        _ => chars.insert(i, chars[i]),
    }
    chars.into_iter().collect()
}

/// Generates `spec.n` labeled tweets; identical `(spec, seed)` give an
/// identical corpus. `spec.seed`, when set, takes precedence over `seed`.
pub fn make_synthetic(spec: &SynthSpec, seed: u64) -> Result<Corpus> {
    spec.validate()?;
    let seed = spec.seed.unwrap_or(seed);
    let mut rng = seed::rng(seed::derive(seed, &[seed::tag("synthetic")]));
    let n_pos = spec.positives();
    let mut labels: Vec<Label> = (0..spec.n).map(|i| Label::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);

    let phrases = |list: &[String]| -> Vec<Vec<String>> {
        list.iter()
            .map(|p| p.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
            .filter(|p| !p.is_empty())
            .collect()
    };
    let pos = phrases(&spec.positive_phrases);
    let neg = phrases(&spec.negative_phrases);
    let start = DateTime::from_timestamp(1_627_776_000, 0).expect("valid epoch"); // 2021-08-01
    let width = spec.n.to_string().len().max(5);

    let mut tweets = Vec::with_capacity(spec.n);
    for (i, &label) in labels.iter().enumerate() {
        let k = rng.random_range(spec.min_fillers..=spec.max_fillers);
        let mut tokens: Vec<String> = (0..k)
            .map(|_| spec.fillers.choose(&mut rng).expect("fillers validated").clone())
            .collect();
        let phrase = if label.is_positive() { &pos } else { &neg }
            .choose(&mut rng)
            .expect("phrases validated");
        let at = rng.random_range(0..=tokens.len());
        tokens.splice(at..at, phrase.iter().cloned());
        if spec.misspelling_rate > 0.0 {
            for t in &mut tokens {
                if rng.random_bool(spec.misspelling_rate) {
                    *t = misspell(t, &mut rng);
                }
            }
        }
        let offset = Duration::seconds(rng.random_range(0..30 * 24 * 3600));
        tweets.push(
            Tweet::new(format!("syn{i:0width$}"), tokens.join(" "))
                .with_label(label)
                .with_time(start + offset),
        );
    }
    Corpus::new(
        tweets,
        format!(
            "synthetic(n={}, balance={}, misspelling_rate={}, seed={seed})",
            spec.n, spec.balance, spec.misspelling_rate
        ),
    )
}
