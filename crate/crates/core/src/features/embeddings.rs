use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Pretrained word vectors of a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dim: usize,
}

impl EmbeddingTable {
    /// Parses the textual word-vector format: an optional `count dim` header
    /// line, then `word v1 ... vd` per line. Later duplicates are ignored.
    pub fn parse(content: &str) -> Result<Self> {
        let mut vectors = HashMap::new();
        let mut dim: Option<usize> = None;
        let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();

        if let Some((_, first)) = lines.peek() {
            let fields: Vec<&str> = first.split_whitespace().collect();
            if fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                dim = Some(fields[1].parse().expect("checked above"));
                lines.next();
            }
        }

        for (i, line) in lines {
            let loc = || format!("embedding line {}", i + 1);
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("line is non-blank");
            let vec = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(loc(), e.to_string()))?;
            match dim {
                None if vec.is_empty() => return Err(Error::parse(loc(), "no vector components")),
                None => dim = Some(vec.len()),
                Some(d) if d != vec.len() => {
                    return Err(Error::parse(loc(), format!("expected {d} components, found {}", vec.len())))
                }
                Some(_) => {}
            }
            vectors.entry(word.to_owned()).or_insert(vec);
        }
        if vectors.is_empty() {
            return Err(Error::Empty("embedding file has no vectors".into()));
        }
        Ok(Self {
            vectors,
            dim: dim.expect("set by the first vector"),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Mean of the vectors of in-table tokens; zero vector when none are known.
    pub fn embed_doc<S: AsRef<str>>(&self, doc: &[S]) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for v in doc.iter().filter_map(|t| self.get(t.as_ref())) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
        if n > 0 {
            for s in &mut sum {
                *s /= n as f64;
            }
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_and_without_header() {
        let t = EmbeddingTable::parse("2 3\nموت 0.1 0.2 0.3\nحياه 1 2 3\n").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        let t = EmbeddingTable::parse("a 0 2\nb 2 0\na 9 9\n").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 2));
        assert_eq!(t.get("a"), Some(&[0.0, 2.0][..]));
    }

    #[test]
    fn ragged_and_empty_files() {
        let err = EmbeddingTable::parse("a 1 2\nb 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(EmbeddingTable::parse("").is_err());
        assert!(EmbeddingTable::parse("2 3\n").is_err());
    }

    #[test]
    fn mean_pooling() {
        let t = EmbeddingTable::parse("a 0 2\nb 2 0\n").unwrap();
        assert_eq!(t.embed_doc(&["a"]), vec![0.0, 2.0]);
        assert_eq!(t.embed_doc(&["a", "b", "zz"]), vec![1.0, 1.0]);
        assert_eq!(t.embed_doc(&["zz"]), vec![0.0, 0.0]);
    }
}
