use std::collections::BTreeMap;

use crate::corpus::{Origin, Sentence};
use crate::sparse::CsrMatrix;
use crate::textproc::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TfidfConfig {
    /// Use `1 + ln(count)` instead of the raw count.
    pub sublinear_tf: bool,
    /// Treat terms occurring in more than this fraction of documents as
    /// stop words (dropped like out-of-vocabulary tokens).
    pub max_df: Option<f64>,
}

/// Row-normalized TF-IDF matrix. Rows with no in-vocabulary token stay empty
/// and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    pub matrix: CsrMatrix,
    pub origins: Vec<Option<Origin>>,
    pub empty_rows: Vec<bool>,
}

impl DocTermMatrix {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_empty(&self) -> usize {
        self.empty_rows.iter().filter(|e| **e).count()
    }

    pub fn with_origins(mut self, origins: impl IntoIterator<Item = Origin>) -> Self {
        self.origins = origins.into_iter().map(Some).collect();
        assert_eq!(self.origins.len(), self.nrows());
        self
    }
}

/// `ln((N + 1) / (df + 1)) + 1`.
pub(crate) fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((n_docs as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
}

/// Weight each document by `tf * idf` over `vocab`, then L2-normalize rows.
/// Out-of-vocabulary tokens are dropped.
pub fn build_tfidf(docs: &[Sentence], vocab: &Vocabulary, cfg: &TfidfConfig) -> DocTermMatrix {
    let n_docs = vocab.n_docs();
    let idf: Vec<f64> = (0..vocab.len()).map(|t| smoothed_idf(n_docs, vocab.df(t))).collect();
    let stop = |t: usize| match cfg.max_df {
        Some(m) => vocab.df(t) as f64 > m * n_docs as f64,
        None => false,
    };
    let mut rows = Vec::with_capacity(docs.len());
    let mut empty = Vec::with_capacity(docs.len());
    for doc in docs {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in doc.iter().filter_map(|t| vocab.get(t)).filter(|&t| !stop(t)) {
            *counts.entry(t).or_default() += 1;
        }
        let mut row: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(t, c)| {
                let tf = if cfg.sublinear_tf {
                    1.0 + (c as f64).ln()
                } else {
                    c as f64
                };
                (t, tf * idf[t])
            })
            .collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        empty.push(row.is_empty());
        rows.push(row);
    }
    let n_empty = empty.iter().filter(|e| **e).count();
    if n_empty > 0 {
        log::warn!("{n_empty} documents have no in-vocabulary terms");
    }
    DocTermMatrix {
        matrix: CsrMatrix::from_rows(vocab.len(), rows),
        origins: vec![None; docs.len()],
        empty_rows: empty,
    }
}

/// Pack every `n` consecutive sentences into one document.
pub fn group_sentences(sentences: &[Sentence], n: usize) -> Vec<Sentence> {
    let n = n.max(1);
    sentences
        .chunks(n)
        .map(|c| c.iter().flat_map(|s| s.tokens().iter().cloned()).collect())
        .collect()
}
