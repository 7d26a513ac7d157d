use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::corpus::Sentence;
use crate::error::{Error, Result};

const N_DOCS_HEADER: &str = "#!n_docs";

/// Dense term index with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, df: Vec<usize>, n_docs: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            index,
            df,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, i: usize) -> usize {
        self.df[i]
    }

    pub fn df_of(&self, term: &str) -> Option<usize> {
        self.get(term).map(|i| self.df[i])
    }

    /// `term<TAB>df` per line, preceded by a `#!n_docs<TAB>N` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("{N_DOCS_HEADER}\t{}\n", self.n_docs);
        for (t, df) in self.terms.iter().zip(&self.df) {
            let _ = writeln!(out, "{t}\t{df}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_docs = None;
        let mut terms = Vec::new();
        let mut df = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let (a, b) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                line: i + 1,
                reason: "expected term<TAB>df".into(),
            })?;
            let count: usize = b.parse().map_err(|_| Error::Malformed {
                line: i + 1,
                reason: format!("bad count {b:?}"),
            })?;
            if i == 0 && a == N_DOCS_HEADER {
                n_docs = Some(count);
            } else {
                terms.push(a.to_owned());
                df.push(count);
            }
        }
        let n_docs = n_docs.unwrap_or_else(|| df.iter().copied().max().unwrap_or(0));
        Ok(Self::from_parts(terms, df, n_docs))
    }
}

/// Keep terms whose corpus frequency is at least `min_count`, ranked by
/// frequency (ties: lexicographically smaller first) and truncated to
/// `max_size`. Indices follow that ranking.
pub fn build_vocab(docs: &[Sentence], min_count: usize, max_size: Option<usize>) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyInput("no documents to build a vocabulary from".into()));
    }
    let mut freq: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for t in doc.iter() {
            let e = freq.entry(t).or_default();
            e.0 += 1;
            if seen.insert(t) {
                e.1 += 1;
            }
        }
    }
    let mut kept: Vec<(&str, usize, usize)> = freq
        .into_iter()
        .filter(|(_, (count, _))| *count >= min_count)
        .map(|(t, (c, d))| (t, c, d))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(max) = max_size {
        kept.truncate(max);
    }
    Ok(Vocabulary::from_parts(
        kept.iter().map(|k| k.0.to_owned()).collect(),
        kept.iter().map(|k| k.2).collect(),
        docs.len(),
    ))
}
