//! The STDM score: how similar target-originating text is to (translated)
//! source-originating text in a shared LSA topic space.
//!
//! Both groups are target-language text: the target side of every pair.
//! With `m_S`, `m_T` the mean topic embeddings of the two groups,
//!
//! ```text
//! s_AB  = mean over i in A, j in B of <ū_i, ū_j> = <m_A, m_B>
//! score = (s_ST + s_TS) / (s_SS + s_TT)
//! ```
//!
//! Diagonal self-similarities are included in `s_SS` and `s_TT`.

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledParallelCorpus, Origin, Sentence};
use crate::error::{Error, Result};
use crate::lsa::{fit_lsa, SvdMethod};
use crate::textproc::{build_tfidf, build_vocab, group_sentences, TfidfConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct StdmConfig {
    pub k: usize,
    pub method: SvdMethod,
    pub seed: u64,
    pub tfidf: TfidfConfig,
    /// Sentences per TF-IDF row.
    pub group: usize,
    pub min_count: usize,
}

impl Default for StdmConfig {
    fn default() -> Self {
        StdmConfig {
            k: 50,
            method: SvdMethod::default(),
            seed: 0,
            tfidf: TfidfConfig::default(),
            group: 1,
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdmReport {
    pub corpus: String,
    pub score: f64,
    pub s_ss: f64,
    pub s_st: f64,
    pub s_ts: f64,
    pub s_tt: f64,
    pub n_s: usize,
    pub n_t: usize,
    /// Requested topic count.
    pub k: usize,
    /// Rank actually kept after truncation.
    pub rank: usize,
    pub seed: u64,
    pub vocab_size: usize,
    pub empty_rows: usize,
}

fn mean_row(e: &DMatrix<f64>) -> RowDVector<f64> {
    let mut m = RowDVector::zeros(e.ncols());
    for row in e.row_iter() {
        m += row;
    }
    m / e.nrows() as f64
}

/// Average pairwise inner product between the rows of `a` and the rows of
/// `b`, computed as the inner product of the mean rows.
pub fn block_mean_similarity(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::EmptyInput("embedding set has no rows".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidArgument(format!(
            "embedding widths differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(mean_row(a).dot(&mean_row(b)))
}

/// Block similarities and score for two embedding sets.
pub fn score_embeddings(e_s: &DMatrix<f64>, e_t: &DMatrix<f64>) -> Result<[f64; 5]> {
    let s_ss = block_mean_similarity(e_s, e_s)?;
    let s_st = block_mean_similarity(e_s, e_t)?;
    let s_ts = block_mean_similarity(e_t, e_s)?;
    let s_tt = block_mean_similarity(e_t, e_t)?;
    let denom = s_ss + s_tt;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(
            "within-group similarity is zero; score undefined".into(),
        ));
    }
    let score = (s_st + s_ts) / denom;
    if score < 0.0 {
        log::warn!("negative STDM score {score:.4}: group mean embeddings anti-correlate");
    }
    Ok([score, s_ss, s_st, s_ts, s_tt])
}

/// Target-side documents of one corpus: source-originating rows first, each
/// group grouped then sorted so row order within a group never matters.
fn target_documents(corpus: &LabeledParallelCorpus, group: usize) -> (Vec<Sentence>, Vec<Sentence>) {
    let side = |origin| {
        let tgt: Vec<Sentence> = corpus.with_origin(origin).map(|p| p.tgt.clone()).collect();
        let mut docs = group_sentences(&tgt, group);
        docs.sort();
        docs
    };
    (side(Origin::SourceOriginating), side(Origin::TargetOriginating))
}

fn check_groups(s: &[Sentence], t: &[Sentence]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptyGroup("no source-originating pairs".into()));
    }
    if t.is_empty() {
        return Err(Error::EmptyGroup("no target-originating pairs".into()));
    }
    Ok(())
}

/// Split embedding rows into the two groups, dropping rows whose TF-IDF
/// vector was empty.
fn grouped_rows(
    e: &DMatrix<f64>,
    offset: usize,
    n_s: usize,
    n_t: usize,
    empty: &[bool],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let pick = |range: std::ops::Range<usize>| {
        let rows: Vec<usize> = range.filter(|&i| !empty[i]).collect();
        e.select_rows(rows.iter())
    };
    let s = pick(offset..offset + n_s);
    let t = pick(offset + n_s..offset + n_s + n_t);
    if s.nrows() == 0 {
        return Err(Error::EmptyGroup("every source-originating row is out of vocabulary".into()));
    }
    if t.nrows() == 0 {
        return Err(Error::EmptyGroup("every target-originating row is out of vocabulary".into()));
    }
    Ok((s, t))
}

fn report(
    corpus: &str,
    e_s: &DMatrix<f64>,
    e_t: &DMatrix<f64>,
    cfg: &StdmConfig,
    rank: usize,
    vocab_size: usize,
    empty_rows: usize,
) -> Result<StdmReport> {
    let [score, s_ss, s_st, s_ts, s_tt] = score_embeddings(e_s, e_t)?;
    Ok(StdmReport {
        corpus: corpus.to_owned(),
        score,
        s_ss,
        s_st,
        s_ts,
        s_tt,
        n_s: e_s.nrows(),
        n_t: e_t.nrows(),
        k: cfg.k,
        rank,
        seed: cfg.seed,
        vocab_size,
        empty_rows,
    })
}

/// Score one parallel corpus from its target side grouped by origin.
pub fn stdm_score(corpus: &LabeledParallelCorpus, name: &str, cfg: &StdmConfig) -> Result<StdmReport> {
    let (s, t) = target_documents(corpus, cfg.group);
    check_groups(&s, &t)?;
    let docs: Vec<Sentence> = s.iter().chain(&t).cloned().collect();
    let vocab = build_vocab(&docs, cfg.min_count, None)?;
    let a = build_tfidf(&docs, &vocab, &cfg.tfidf);
    let model = fit_lsa(&a.matrix, cfg.k, cfg.method, cfg.seed)?;
    let (e_s, e_t) = grouped_rows(&model.doc_embeddings, 0, s.len(), t.len(), &a.empty_rows)?;
    report(name, &e_s, &e_t, cfg, model.rank(), vocab.len(), a.n_empty())
}

/// Score several corpora in one topic space fit on the union of their
/// target sides. Each corpus is folded into that space and scored on its
/// own; a corpus that cannot be scored yields an error in its slot.
pub fn stdm_multi(
    datasets: &[(String, LabeledParallelCorpus)],
    cfg: &StdmConfig,
) -> Result<Vec<Result<StdmReport>>> {
    if datasets.is_empty() {
        return Err(Error::EmptyInput("no datasets to score".into()));
    }
    let groups: Vec<(Vec<Sentence>, Vec<Sentence>)> = datasets
        .iter()
        .map(|(_, c)| target_documents(c, cfg.group))
        .collect();
    let union: Vec<Sentence> = groups
        .iter()
        .flat_map(|(s, t)| s.iter().chain(t))
        .cloned()
        .collect();
    let vocab = build_vocab(&union, cfg.min_count, None)?;
    let a = build_tfidf(&union, &vocab, &cfg.tfidf);
    let model = fit_lsa(&a.matrix, cfg.k, cfg.method, cfg.seed)?;

    let mut out = Vec::with_capacity(datasets.len());
    let mut offset = 0;
    for ((name, _), (s, t)) in datasets.iter().zip(&groups) {
        let (n_s, n_t) = (s.len(), t.len());
        let rows: Vec<usize> = (offset..offset + n_s + n_t).collect();
        let empty = &a.empty_rows[offset..offset + n_s + n_t];
        offset += n_s + n_t;
        let result = check_groups(s, t).and_then(|()| {
            let e = model.embed_docs(&a.matrix.select_rows(&rows))?;
            let (e_s, e_t) = grouped_rows(&e, 0, n_s, n_t, empty)?;
            let n_empty = empty.iter().filter(|x| **x).count();
            report(name, &e_s, &e_t, cfg, model.rank(), vocab.len(), n_empty)
        });
        if let Err(e) = &result {
            log::warn!("{name}: {e}");
        }
        out.push(result);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ParallelPair;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn naive(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for i in 0..a.nrows() {
            for j in 0..b.nrows() {
                total += a.row(i).dot(&b.row(j));
            }
        }
        total / (a.nrows() * b.nrows()) as f64
    }

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, "test", 0);
        DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    fn corpus(s: &[&str], t: &[&str]) -> LabeledParallelCorpus {
        let pair = |line: &&str, origin| ParallelPair {
            src: Sentence::parse("x"),
            tgt: Sentence::parse(line),
            origin,
        };
        LabeledParallelCorpus::new(
            s.iter()
                .map(|l| pair(l, Origin::SourceOriginating))
                .chain(t.iter().map(|l| pair(l, Origin::TargetOriginating)))
                .collect(),
        )
    }

    #[test]
    fn unit_self_similarity() {
        let e = DMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
        assert!((block_mean_similarity(&e, &e).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_rows() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let b = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert_eq!(block_mean_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn empty_embedding_set_is_error() {
        let a = DMatrix::<f64>::zeros(0, 3);
        let b = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        assert!(block_mean_similarity(&a, &b).is_err());
    }

    #[test]
    fn mean_dot_matches_double_sum() {
        let a = random(50, 8, 1);
        let b = random(70, 8, 2);
        assert!((block_mean_similarity(&a, &b).unwrap() - naive(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn identical_groups_score_one() {
        let lines = ["a b c", "b c d", "d e", "a e f", "f g", "g h a", "c c d", "h b", "e f g", "a h"];
        let c = corpus(&lines, &lines);
        let r = stdm_score(&c, "same", &StdmConfig::default()).unwrap();
        assert!((r.score - 1.0).abs() < 1e-9, "{r:?}");
        assert_eq!(r.s_st, r.s_ts);
    }

    #[test]
    fn disjoint_vocabularies_score_zero() {
        let s = ["a b", "b c", "c a", "a a b"];
        let t = ["x y", "y z", "z x", "x z z"];
        let r = stdm_score(&corpus(&s, &t), "disjoint", &StdmConfig::default()).unwrap();
        assert!(r.score.abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn missing_group_is_explicit_error() {
        let err = stdm_score(&corpus(&["a b"], &[]), "c", &StdmConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "cannot score: no target-originating pairs");
    }

    #[test]
    fn permuting_rows_within_group_is_bitwise_invariant() {
        let s = ["a b c", "b d", "e a", "c c f"];
        let t = ["a f", "g h", "h b c", "d d"];
        let mut s_rev = s;
        s_rev.reverse();
        let cfg = StdmConfig::default();
        let a = stdm_score(&corpus(&s, &t), "c", &cfg).unwrap();
        let b = stdm_score(&corpus(&s_rev, &t), "c", &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn multi_of_one_equals_single() {
        let s = ["a b c", "b d", "e a", "c c f", "a b"];
        let t = ["a f", "g h", "h b c", "d d", "f g"];
        let c = corpus(&s, &t);
        for method in [SvdMethod::Dense, SvdMethod::default()] {
            let cfg = StdmConfig {
                k: 4,
                method,
                ..Default::default()
            };
            let single = stdm_score(&c, "c", &cfg).unwrap();
            let multi = stdm_multi(&[("c".into(), c.clone())], &cfg).unwrap();
            let m = multi[0].as_ref().unwrap();
            assert!((m.score - single.score).abs() < 1e-9, "{m:?} vs {single:?}");
        }
    }

    #[test]
    fn multi_reports_per_dataset_errors_without_aborting() {
        let good = corpus(&["a b", "b c"], &["c d", "a d"]);
        let bad = corpus(&["a b"], &[]);
        let out = stdm_multi(
            &[
                ("good".into(), good.clone()),
                ("bad".into(), bad),
                ("good2".into(), good),
            ],
            &StdmConfig::default(),
        )
        .unwrap();
        assert!(out[0].is_ok());
        assert!(matches!(out[1], Err(Error::EmptyGroup(_))));
        let (a, c) = (out[0].as_ref().unwrap(), out[2].as_ref().unwrap());
        assert_eq!(a.score, c.score);
        assert_eq!(a.s_ss, c.s_ss);
    }

    proptest! {
        #[test]
        fn efficient_equals_naive(
            n_a in 1usize..40, n_b in 1usize..40, r in 1usize..12, seed in any::<u64>()
        ) {
            let a = random(n_a, r, seed);
            let b = random(n_b, r, seed.wrapping_add(1));
            prop_assert!((block_mean_similarity(&a, &b).unwrap() - naive(&a, &b)).abs() <= 1e-9);
        }

        #[test]
        fn score_never_exceeds_one(
            n_a in 1usize..30, n_b in 1usize..30, r in 1usize..10, seed in any::<u64>()
        ) {
            let a = random(n_a, r, seed);
            let b = random(n_b, r, seed ^ 0xabc);
            if let Ok([score, s_ss, _, _, s_tt]) = score_embeddings(&a, &b) {
                prop_assert!(score <= 1.0 + 1e-9);
                prop_assert!(s_ss >= 0.0 && s_tt >= 0.0);
            }
        }
    }
}
