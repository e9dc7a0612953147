//! Two-annotator contingency tables and Cohen's kappa.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;

/// 2x2 agreement counts. The first index is annotator A's label, the second
/// annotator B's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgreementTable {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl AgreementTable {
    pub fn new(n00: u64, n01: u64, n10: u64, n11: u64) -> Self {
        Self { n00, n01, n10, n11 }
    }

    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.n00, self.n10, self.n01, self.n11)
    }

    fn add(&mut self, a: Label, b: Label) {
        match (a, b) {
            (Label::NonSuicidal, Label::NonSuicidal) => self.n00 += 1,
            (Label::NonSuicidal, Label::Suicidal) => self.n01 += 1,
            (Label::Suicidal, Label::NonSuicidal) => self.n10 += 1,
            (Label::Suicidal, Label::Suicidal) => self.n11 += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    /// Observed agreement P(A).
    pub pa: f64,
    /// Chance agreement P(E).
    pub pe: f64,
}

/// Builds the table over the ids labeled by both annotators.
pub fn contingency<S: AsRef<str>>(
    a: &HashMap<S, Label>,
    b: &HashMap<S, Label>,
) -> Result<AgreementTable>
where
    S: std::hash::Hash + Eq,
{
    let b_by_id: HashMap<&str, Label> = b.iter().map(|(k, v)| (k.as_ref(), *v)).collect();
    let mut table = AgreementTable::default();
    for (id, la) in a {
        if let Some(&lb) = b_by_id.get(id.as_ref()) {
            table.add(*la, lb);
        }
    }
    if table.total() == 0 {
        return Err(Error::Empty("annotators share no labeled ids".into()));
    }
    Ok(table)
}

/// Same as [`contingency`] for paired label slices.
pub fn contingency_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Result<AgreementTable> {
    let mut table = AgreementTable::default();
    for (a, b) in pairs {
        table.add(a, b);
    }
    if table.total() == 0 {
        return Err(Error::Empty("no paired labels".into()));
    }
    Ok(table)
}

/// `kappa = (P(A) - P(E)) / (1 - P(E))`.
///
/// When chance agreement is 1 the ratio is undefined: perfect observed
/// agreement yields kappa 1, anything else is reported as
/// [`Error::DegenerateDistribution`].
pub fn cohen_kappa(table: &AgreementTable) -> Result<KappaResult> {
    let n = table.total();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "kappa needs at least 2 items, got {n}"
        )));
    }
    let nf = n as f64;
    let pa = (table.n00 + table.n11) as f64 / nf;
    let row_a0 = (table.n00 + table.n01) as f64;
    let row_a1 = (table.n10 + table.n11) as f64;
    let col_b0 = (table.n00 + table.n10) as f64;
    let col_b1 = (table.n01 + table.n11) as f64;
    let pe = (row_a0 * col_b0 + row_a1 * col_b1) / (nf * nf);

    // P(E) = 1 only when both annotators used a single, identical class.
    if 1.0 - pe <= f64::EPSILON {
        if table.n01 == 0 && table.n10 == 0 {
            return Ok(KappaResult { kappa: 1.0, pa, pe });
        }
        return Err(Error::DegenerateDistribution { observed: pa });
    }
    Ok(KappaResult {
        kappa: (pa - pe) / (1.0 - pe),
        pa,
        pe,
    })
}

/// Reads an `id,label` CSV (header required).
pub fn load_label_csv(path: impl AsRef<Path>) -> Result<HashMap<String, Label>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_csv(&content).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn parse_label_csv(content: &str) -> Result<HashMap<String, Label>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();
    let id_col = headers.iter().position(|h| h == "id");
    let label_col = headers.iter().position(|h| h == "label");
    let (Some(id_col), Some(label_col)) = (id_col, label_col) else {
        return Err(Error::parse("header", "expected columns id,label"));
    };
    let mut out = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let loc = format!("row {}", i + 2);
        let rec = rec.map_err(|e| Error::parse(&loc, e.to_string()))?;
        let id = rec.get(id_col).unwrap_or_default().to_owned();
        let label = rec
            .get(label_col)
            .unwrap_or_default()
            .parse::<u8>()
            .map_err(|e| e.to_string())
            .and_then(Label::try_from)
            .map_err(|e| Error::parse(&loc, e))?;
        if out.insert(id.clone(), label).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(pairs: &[(&str, u8)]) -> HashMap<String, Label> {
        pairs
            .iter()
            .map(|(id, l)| (id.to_string(), Label::try_from(*l).unwrap()))
            .collect()
    }

    #[test]
    fn contingency_examples() {
        let a = labels(&[("i1", 1), ("i2", 0)]);
        let t = contingency(&a, &a).unwrap();
        assert_eq!(t, AgreementTable::new(1, 0, 0, 1));

        let b = labels(&[("x", 1)]);
        assert!(contingency(&a, &b).is_err());

        let a = labels(&[("1", 0), ("2", 0), ("3", 1), ("4", 1)]);
        let b = labels(&[("1", 0), ("2", 1), ("3", 1), ("4", 1), ("5", 0)]);
        let t = contingency(&a, &b).unwrap();
        assert_eq!(t, AgreementTable::new(1, 1, 0, 2));
    }

    #[test]
    fn kappa_reported_agreement() {
        let r = cohen_kappa(&AgreementTable::new(4258, 8, 39, 1387)).unwrap();
        assert!((r.kappa - 0.978).abs() <= 0.0005, "{}", r.kappa);
    }

    #[test]
    fn kappa_perfect_and_chance() {
        let r = cohen_kappa(&AgreementTable::new(5, 0, 0, 5)).unwrap();
        assert_eq!(r.kappa, 1.0);
        let r = cohen_kappa(&AgreementTable::new(25, 25, 25, 25)).unwrap();
        assert_eq!(r.pa, 0.5);
        assert_eq!(r.pe, 0.5);
        assert_eq!(r.kappa, 0.0);
    }

    #[test]
    fn kappa_degenerate_cases() {
        assert!(cohen_kappa(&AgreementTable::new(1, 0, 0, 0)).is_err());
        let r = cohen_kappa(&AgreementTable::new(10, 0, 0, 0)).unwrap();
        assert_eq!(r.kappa, 1.0);
        // one-sided degeneracy leaves P(E) < 1
        let r = cohen_kappa(&AgreementTable::new(9, 1, 0, 0)).unwrap();
        assert_eq!(r.kappa, 0.0);
    }

    #[test]
    fn label_csv() {
        let m = parse_label_csv("id,label\na,1\nb,0\n").unwrap();
        assert_eq!(m["a"], Label::Suicidal);
        assert!(parse_label_csv("id,label\na,2\n").is_err());
        assert!(matches!(
            parse_label_csv("id,label\na,1\na,0\n"),
            Err(Error::DuplicateId(_))
        ));
    }

    proptest! {
        #[test]
        fn kappa_is_symmetric(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 2..60)) {
            let ab = pairs.iter().map(|&(a, b)| (Label::from(a), Label::from(b)));
            let ba = pairs.iter().map(|&(a, b)| (Label::from(b), Label::from(a)));
            let t1 = contingency_pairs(ab).unwrap();
            let t2 = contingency_pairs(ba).unwrap();
            prop_assert_eq!(t1.transpose(), t2);
            match (cohen_kappa(&t1), cohen_kappa(&t2)) {
                (Ok(x), Ok(y)) => prop_assert!((x.kappa - y.kappa).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric error"),
            }
        }

        #[test]
        fn kappa_one_iff_no_disagreement(t in (1u64..50, 0u64..5, 0u64..5, 1u64..50)) {
            let table = AgreementTable::new(t.0, t.1, t.2, t.3);
            let k = cohen_kappa(&table).unwrap().kappa;
            prop_assert_eq!((k - 1.0).abs() < 1e-12, t.1 == 0 && t.2 == 0);
        }

        #[test]
        fn kappa_permutation_invariant(
            pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 2..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let conv = |v: &[(bool, bool)]| {
                contingency_pairs(v.iter().map(|&(a, b)| (Label::from(a), Label::from(b)))).unwrap()
            };
            prop_assert_eq!(conv(&pairs), conv(&shuffled));
        }
    }
}
