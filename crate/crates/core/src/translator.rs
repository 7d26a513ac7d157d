//! Translator contract, a word-translation model trained by EM, corpus BLEU
//! and a subprocess adapter for external systems.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Source tokens with this prefix are control tokens (domain tags): they
/// take part in training but are never emitted when decoding.
pub const CONTROL_PREFIX: &str = "⟨dom:";

/// Log-probability charged for an out-of-vocabulary source token.
pub const OOV_LOGPROB: f64 = -9.210_340_371_976_184; // ln(1e-4)

pub fn is_control(token: &str) -> bool {
    token.starts_with(CONTROL_PREFIX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub sentence: Sentence,
    /// Mean per-token log-probability of the output.
    pub score: f64,
}

pub trait Translator {
    fn translate(&self, batch: &[Sentence]) -> Result<Vec<Translation>>;
}

/// A training example with its loss weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub src: Sentence,
    pub tgt: Sentence,
    pub weight: f64,
}

impl TrainPair {
    pub fn new(src: Sentence, tgt: Sentence, weight: f64) -> Self {
        TrainPair { src, tgt, weight }
    }
}

/// Produces a freshly initialized model trained on the given data.
pub trait TranslatorFactory {
    fn train(&self, data: &[TrainPair]) -> Result<Box<dyn Translator>>;
}

// ---------------------------------------------------------------------------
// Lexical model

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexConfig {
    pub epochs: usize,
}

impl Default for LexConfig {
    fn default() -> Self {
        LexConfig { epochs: 5 }
    }
}

impl TranslatorFactory for LexConfig {
    fn train(&self, data: &[TrainPair]) -> Result<Box<dyn Translator>> {
        Ok(Box::new(train_lex(data, *self)?))
    }
}

/// Translation table `t(target | source)` stored as one sparse row per
/// source word.
#[derive(Debug, Clone, PartialEq)]
pub struct LexModel {
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    src_index: HashMap<String, u32>,
    /// Row offsets into `cols`/`probs`, one row per source word.
    offsets: Vec<usize>,
    cols: Vec<u32>,
    probs: Vec<f64>,
    /// Best target and its log-probability for every source word.
    best: Vec<(u32, f64)>,
    /// Weighted log-likelihood before each epoch's update, plus the final
    /// value.
    pub log_likelihood: Vec<f64>,
}

fn index_of(vocab: &BTreeSet<&str>) -> HashMap<String, u32> {
    vocab.iter().enumerate().map(|(i, w)| (w.to_string(), i as u32)).collect()
}

/// Train by EM over word alignments with a uniform alignment prior. Each
/// pair's expected counts are multiplied by its weight. Every target token
/// must be explained by some source token, so pairs with an empty source or
/// target side carry no information and are skipped.
pub fn train_lex(data: &[TrainPair], cfg: LexConfig) -> Result<LexModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput("no training pairs".into()));
    }
    if let Some(p) = data.iter().find(|p| !(p.weight > 0.0 && p.weight.is_finite())) {
        return Err(Error::InvalidArgument(format!("pair weight {} is not positive", p.weight)));
    }
    let src_set: BTreeSet<&str> = data.iter().flat_map(|p| p.src.iter()).collect();
    let tgt_set: BTreeSet<&str> = data.iter().flat_map(|p| p.tgt.iter()).collect();
    let src_index = index_of(&src_set);
    let tgt_index = index_of(&tgt_set);
    let encode = |s: &Sentence, idx: &HashMap<String, u32>| -> Vec<u32> {
        s.iter().map(|t| idx[t]).collect()
    };
    let pairs: Vec<(Vec<u32>, Vec<u32>, f64)> = data
        .iter()
        .filter(|p| !p.src.is_empty() && !p.tgt.is_empty())
        .map(|p| (encode(&p.src, &src_index), encode(&p.tgt, &tgt_index), p.weight))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyInput("every training pair has an empty side".into()));
    }

    // Co-occurrence structure: sorted target ids per source word.
    let mut co: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); src_set.len()];
    for (s, t, _) in &pairs {
        for &e in s {
            co[e as usize].extend(t.iter().copied());
        }
    }
    let mut offsets = Vec::with_capacity(co.len() + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    for row in &co {
        cols.extend(row.iter().copied());
        offsets.push(cols.len());
    }
    drop(co);
    let slot = |e: u32, f: u32| -> usize {
        let (a, b) = (offsets[e as usize], offsets[e as usize + 1]);
        a + cols[a..b].binary_search(&f).expect("co-occurring pair")
    };
    // slots[p][j * |src| + i] indexes t(tgt_j | src_i).
    let slots: Vec<Vec<usize>> = pairs
        .iter()
        .map(|(s, t, _)| {
            t.iter()
                .flat_map(|&f| s.iter().map(move |&e| (e, f)))
                .map(|(e, f)| slot(e, f))
                .collect()
        })
        .collect();

    let mut probs: Vec<f64> = (0..src_set.len())
        .flat_map(|e| {
            let n = offsets[e + 1] - offsets[e];
            std::iter::repeat_n(1.0 / n as f64, n)
        })
        .collect();
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut counts = vec![0.0; probs.len()];
    for epoch in 0..=cfg.epochs {
        counts.iter_mut().for_each(|c| *c = 0.0);
        let mut ll = 0.0;
        for ((s, t, w), sl) in pairs.iter().zip(&slots) {
            let ls = s.len();
            for j in 0..t.len() {
                let row = &sl[j * ls..(j + 1) * ls];
                let denom: f64 = row.iter().map(|&k| probs[k]).sum();
                ll += w * (denom / ls as f64).ln();
                if epoch < cfg.epochs {
                    for &k in row {
                        counts[k] += w * probs[k] / denom;
                    }
                }
            }
        }
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            assert!(
                ll >= prev - 1e-9 * prev.abs().max(1.0),
                "EM log-likelihood decreased: {prev} -> {ll}"
            );
        }
        trace.push(ll);
        if epoch == cfg.epochs {
            break;
        }
        for e in 0..src_set.len() {
            let r = offsets[e]..offsets[e + 1];
            let total: f64 = counts[r.clone()].iter().sum();
            for k in r {
                probs[k] = counts[k] / total;
            }
        }
        log::debug!("EM epoch {}: log-likelihood {ll:.6}", epoch + 1);
    }

    let mut model = LexModel {
        src_vocab: src_set.iter().map(|s| s.to_string()).collect(),
        tgt_vocab: tgt_set.iter().map(|s| s.to_string()).collect(),
        src_index,
        offsets,
        cols,
        probs,
        best: Vec::new(),
        log_likelihood: trace,
    };
    model.compute_best();
    Ok(model)
}

impl LexModel {
    fn compute_best(&mut self) {
        self.best = (0..self.src_vocab.len())
            .map(|e| {
                let r = self.offsets[e]..self.offsets[e + 1];
                // Columns are sorted by target string, so the first maximum is
                // the lexicographically smallest among ties.
                let (mut bf, mut bp) = (self.cols[r.start], f64::NEG_INFINITY);
                for k in r {
                    if self.probs[k] > bp {
                        bp = self.probs[k];
                        bf = self.cols[k];
                    }
                }
                (bf, bp.ln())
            })
            .collect();
    }

    pub fn src_vocab(&self) -> &[String] {
        &self.src_vocab
    }

    /// `t(tgt | src)`, zero for unseen combinations.
    pub fn prob(&self, src: &str, tgt: &str) -> f64 {
        let Some(&e) = self.src_index.get(src) else {
            return 0.0;
        };
        let Ok(f) = self.tgt_vocab.binary_search_by(|w| w.as_str().cmp(tgt)) else {
            return 0.0;
        };
        let r = self.offsets[e as usize]..self.offsets[e as usize + 1];
        match self.cols[r.clone()].binary_search(&(f as u32)) {
            Ok(k) => self.probs[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Conditional distribution `t(. | src)` as `(target, prob)` pairs.
    pub fn row(&self, src: &str) -> Vec<(&str, f64)> {
        let Some(&e) = self.src_index.get(src) else {
            return Vec::new();
        };
        let r = self.offsets[e as usize]..self.offsets[e as usize + 1];
        r.map(|k| (self.tgt_vocab[self.cols[k] as usize].as_str(), self.probs[k]))
            .collect()
    }

    /// Most probable translation of a source word.
    pub fn best(&self, src: &str) -> Option<(&str, f64)> {
        let &e = self.src_index.get(src)?;
        let (f, lp) = self.best[e as usize];
        Some((self.tgt_vocab[f as usize].as_str(), lp))
    }

    pub fn translate_one(&self, sentence: &Sentence) -> Translation {
        let mut out = Vec::with_capacity(sentence.len());
        let mut total = 0.0;
        for tok in sentence.iter().filter(|t| !is_control(t)) {
            match self.best(tok) {
                Some((f, lp)) => {
                    out.push(f.to_owned());
                    total += lp;
                }
                None => {
                    out.push(tok.to_owned());
                    total += OOV_LOGPROB;
                }
            }
        }
        let score = if out.is_empty() { 0.0 } else { total / out.len() as f64 };
        Translation {
            sentence: Sentence::new(out),
            score,
        }
    }

    /// One `src<TAB>tgt<TAB>prob` line per table entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (e, src) in self.src_vocab.iter().enumerate() {
            for k in self.offsets[e]..self.offsets[e + 1] {
                let _ = writeln!(out, "{src}\t{}\t{}", self.tgt_vocab[self.cols[k] as usize], self.probs[k]);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |reason: &str| Error::Malformed {
                line: i + 1,
                reason: reason.into(),
            };
            let mut f = line.split('\t');
            let (Some(s), Some(t), Some(p), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(bad("expected src<TAB>tgt<TAB>prob"));
            };
            let p: f64 = p.parse().map_err(|_| bad("probability is not a number"))?;
            if !(0.0..=1.0 + 1e-9).contains(&p) {
                return Err(bad("probability outside [0, 1]"));
            }
            rows.entry(s).or_default().insert(t, p);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("translation table has no entries".into()));
        }
        let tgt_set: BTreeSet<&str> = rows.values().flat_map(|r| r.keys().copied()).collect();
        let tgt_index = index_of(&tgt_set);
        let src_set: BTreeSet<&str> = rows.keys().copied().collect();
        let mut offsets = vec![0];
        let (mut cols, mut probs) = (Vec::new(), Vec::new());
        for row in rows.values() {
            for (t, p) in row {
                cols.push(tgt_index[*t]);
                probs.push(*p);
            }
            offsets.push(cols.len());
        }
        let mut model = LexModel {
            src_index: index_of(&src_set),
            src_vocab: src_set.iter().map(|s| s.to_string()).collect(),
            tgt_vocab: tgt_set.iter().map(|s| s.to_string()).collect(),
            offsets,
            cols,
            probs,
            best: Vec::new(),
            log_likelihood: Vec::new(),
        };
        model.compute_best();
        Ok(model)
    }
}

impl Translator for LexModel {
    fn translate(&self, batch: &[Sentence]) -> Result<Vec<Translation>> {
        Ok(batch.iter().map(|s| self.translate_one(s)).collect())
    }
}

// ---------------------------------------------------------------------------
// BLEU

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BleuReport {
    pub bleu: f64,
    /// Smoothed modified precisions, one per order.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *m.entry(g).or_default() += 1;
        }
    }
    m
}

/// Corpus-level BLEU over whitespace tokens. A precision with zero matches
/// is replaced by `1 / (2 * denominator)`; orders for which no hypothesis
/// has any n-gram are left out of the geometric mean.
pub fn corpus_bleu(hyps: &[Sentence], refs: &[Sentence], max_n: usize) -> Result<BleuReport> {
    if hyps.len() != refs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if refs.is_empty() {
        return Err(Error::EmptyInput("no references".into()));
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("max_n must be at least 1".into()));
    }
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut c, mut r) = (0, 0);
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len();
        r += rf.len();
        for n in 1..=max_n {
            let rc = ngram_counts(rf.tokens(), n);
            for (g, k) in ngram_counts(h.tokens(), n) {
                matches[n - 1] += k.min(rc.get(g).copied().unwrap_or(0));
                totals[n - 1] += k;
            }
        }
    }
    let precisions: Vec<f64> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| match (m, t) {
            (_, 0) => 1.0,
            (0, t) => 1.0 / (2.0 * t as f64),
            (m, t) => m as f64 / t as f64,
        })
        .collect();
    let used: Vec<f64> = precisions
        .iter()
        .zip(&totals)
        .filter(|(_, &t)| t > 0)
        .map(|(p, _)| p.ln())
        .collect();
    let brevity_penalty = if c == 0 {
        if r == 0 { 1.0 } else { 0.0 }
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    let geo = if used.is_empty() {
        1.0
    } else {
        (used.iter().sum::<f64>() / used.len() as f64).exp()
    };
    Ok(BleuReport {
        bleu: 100.0 * brevity_penalty * geo,
        precisions,
        brevity_penalty,
        hyp_len: c,
        ref_len: r,
    })
}

// ---------------------------------------------------------------------------
// External translators

/// Runs a command that reads sentences on stdin and writes
/// `translation<TAB>score` lines on stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTranslator {
    pub command: Vec<String>,
}

impl Translator for ExternalTranslator {
    fn translate(&self, batch: &[Sentence]) -> Result<Vec<Translation>> {
        external_translate(&self.command, batch)
    }
}

pub fn external_translate(command: &[String], sentences: &[Sentence]) -> Result<Vec<Translation>> {
    let (prog, args) = command
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("empty translator command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Translator(format!("cannot launch {prog}: {e}")))?;
    let mut input = String::new();
    for s in sentences {
        let _ = writeln!(input, "{s}");
    }
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
    let stdout = child.stdout.take().expect("piped stdout");
    let lines: Vec<String> = BufReader::new(stdout)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::Translator(format!("reading output of {prog}: {e}")))?;
    let status = child
        .wait()
        .map_err(|e| Error::Translator(format!("waiting for {prog}: {e}")))?;
    // A command that exits early may close stdin before reading everything.
    let _ = writer.join();
    if !status.success() {
        return Err(Error::Translator(format!("{prog} exited with {status}")));
    }
    if lines.len() != sentences.len() {
        return Err(Error::Translator(format!(
            "{prog} returned {} lines for {} input sentences",
            lines.len(),
            sentences.len()
        )));
    }
    let mut missing = 0;
    let out = lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let (text, score) = match line.rsplit_once('\t') {
                Some((t, s)) => {
                    let score: f64 = s.trim().parse().map_err(|_| {
                        Error::Translator(format!("line {}: score {s:?} is not a number", i + 1))
                    })?;
                    (t, score)
                }
                None => {
                    missing += 1;
                    (line.as_str(), 0.0)
                }
            };
            Ok(Translation {
                sentence: Sentence::parse(text),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if missing > 0 {
        log::warn!("{prog}: {missing} output lines had no score; using 0");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(x: &str) -> Sentence {
        Sentence::parse(x)
    }

    fn pairs(list: &[(&str, &str)]) -> Vec<TrainPair> {
        list.iter().map(|(a, b)| TrainPair::new(s(a), s(b), 1.0)).collect()
    }

    #[test]
    fn single_pair_model() {
        let m = train_lex(&pairs(&[("a", "x")]), LexConfig::default()).unwrap();
        assert_eq!(m.prob("a", "x"), 1.0);
        let t = m.translate_one(&s("a a"));
        assert_eq!(t.sentence, s("x x"));
        assert_eq!(t.score, 0.0);
    }

    #[test]
    fn oov_is_copied_with_penalty() {
        let m = train_lex(&pairs(&[("a", "x")]), LexConfig::default()).unwrap();
        let t = m.translate_one(&s("a zz"));
        assert_eq!(t.sentence, s("x zz"));
        assert!((t.score - OOV_LOGPROB / 2.0).abs() < 1e-12);
    }

    #[test]
    fn control_tokens_are_not_emitted() {
        let m = train_lex(&pairs(&[("⟨dom:s⟩ a", "x")]), LexConfig::default()).unwrap();
        assert_eq!(m.translate_one(&s("⟨dom:s⟩ a")).sentence, s("x"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(train_lex(&[], LexConfig::default()), Err(Error::EmptyInput(_))));
        let mut p = pairs(&[("a", "x")]);
        p[0].weight = 0.0;
        assert!(train_lex(&p, LexConfig::default()).is_err());
    }

    #[test]
    fn em_resolves_classic_example() {
        let data = pairs(&[("la maison", "the house"), ("la fleur", "the flower"), ("maison", "house")]);
        let m = train_lex(&data, LexConfig { epochs: 20 }).unwrap();
        assert_eq!(m.best("la").unwrap().0, "the");
        assert_eq!(m.best("maison").unwrap().0, "house");
        assert_eq!(m.best("fleur").unwrap().0, "flower");
        for w in m.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn weight_equals_duplication() {
        let base = pairs(&[("a b", "x y"), ("b c", "y z"), ("a c d", "x z w")]);
        let mut dup = base.clone();
        dup.push(base[1].clone());
        let mut weighted = base.clone();
        weighted[1].weight = 2.0;
        let m1 = train_lex(&dup, LexConfig::default()).unwrap();
        let m2 = train_lex(&weighted, LexConfig::default()).unwrap();
        for src in ["a", "b", "c", "d"] {
            for (t, p) in m1.row(src) {
                assert!((p - m2.prob(src, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let data = pairs(&[("a b", "x y"), ("b c", "y z")]);
        let m = train_lex(&data, LexConfig::default()).unwrap();
        let back = LexModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back.to_text(), m.to_text());
        let input = [s("a b c q")];
        assert_eq!(back.translate(&input).unwrap(), m.translate(&input).unwrap());
    }

    #[test]
    fn score_drops_when_a_token_is_replaced_by_a_worse_one() {
        let data = pairs(&[("a b", "x y"), ("a", "x"), ("b c", "y z")]);
        let m = train_lex(&data, LexConfig::default()).unwrap();
        let t = m.translate_one(&s("a b c"));
        for (i, src) in ["a", "b", "c"].iter().enumerate() {
            for (alt, p) in m.row(src) {
                let mut toks = t.sentence.tokens().to_vec();
                toks[i] = alt.to_owned();
                let lp: Vec<f64> = ["a", "b", "c"]
                    .iter()
                    .zip(&toks)
                    .map(|(s, t)| m.prob(s, t).ln())
                    .collect();
                let v = lp.iter().sum::<f64>() / 3.0;
                assert!(v <= t.score + 1e-12, "{alt} with p={p}");
            }
        }
    }

    #[test]
    fn bleu_identity_is_100() {
        let h = vec![s("a b c d e"), s("f g")];
        assert_eq!(corpus_bleu(&h, &h, 4).unwrap().bleu, 100.0);
        let short = vec![s("a"), s("b c")];
        assert_eq!(corpus_bleu(&short, &short, 4).unwrap().bleu, 100.0);
    }

    #[test]
    fn bleu_hand_example() {
        let r = corpus_bleu(&[s("a b c d e")], &[s("a b c d f")], 4).unwrap();
        let expected = 100.0 * (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
        assert!((r.bleu - expected).abs() < 1e-9);
        assert!((r.bleu - 66.87).abs() < 0.01);
        assert_eq!(r.brevity_penalty, 1.0);
    }

    #[test]
    fn bleu_brevity_penalty() {
        let r = corpus_bleu(&[s("a b c d")], &[s("a b c d e")], 4).unwrap();
        assert!((r.brevity_penalty - (1.0f64 - 5.0 / 4.0).exp()).abs() < 1e-12);
        assert!(r.bleu < 100.0);
    }

    #[test]
    fn bleu_zero_match_smoothing() {
        let r = corpus_bleu(&[s("a b c d")], &[s("d c b a")], 4).unwrap();
        assert_eq!(r.precisions, vec![1.0, 1.0 / 6.0, 1.0 / 4.0, 1.0 / 2.0]);
    }

    #[test]
    fn bleu_length_mismatch() {
        assert!(corpus_bleu(&[s("a")], &[], 4).is_err());
    }

    /// Count n-grams by scanning every window against every reference
    /// window.
    fn naive_bleu(hyps: &[Sentence], refs: &[Sentence]) -> f64 {
        let (mut c, mut r) = (0usize, 0usize);
        let mut logp = 0.0;
        let mut used = 0;
        for n in 1..=4 {
            let (mut m, mut t) = (0usize, 0usize);
            for (h, rf) in hyps.iter().zip(refs) {
                let hw: Vec<&[String]> = if h.len() >= n { h.tokens().windows(n).collect() } else { vec![] };
                let rw: Vec<&[String]> = if rf.len() >= n { rf.tokens().windows(n).collect() } else { vec![] };
                let mut taken = vec![false; rw.len()];
                for g in &hw {
                    t += 1;
                    if let Some(k) = (0..rw.len()).find(|&k| !taken[k] && rw[k] == *g) {
                        taken[k] = true;
                        m += 1;
                    }
                }
            }
            if t > 0 {
                used += 1;
                logp += if m == 0 { (1.0 / (2.0 * t as f64)).ln() } else { (m as f64 / t as f64).ln() };
            }
        }
        for (h, rf) in hyps.iter().zip(refs) {
            c += h.len();
            r += rf.len();
        }
        let bp = if c == 0 {
            if r == 0 { 1.0 } else { 0.0 }
        } else if c < r {
            (1.0 - r as f64 / c as f64).exp()
        } else {
            1.0
        };
        100.0 * bp * if used == 0 { 1.0 } else { (logp / used as f64).exp() }
    }

    fn sent() -> impl Strategy<Value = Sentence> {
        prop::collection::vec("[a-d]", 0..8).prop_map(Sentence::new)
    }

    proptest! {
        #[test]
        fn bleu_matches_naive_oracle(
            data in prop::collection::vec((sent(), sent()), 1..20),
        ) {
            let (h, r): (Vec<_>, Vec<_>) = data.into_iter().unzip();
            let fast = corpus_bleu(&h, &r, 4).unwrap().bleu;
            prop_assert!((fast - naive_bleu(&h, &r)).abs() < 1e-9);
            prop_assert!((0.0..=100.0).contains(&fast));
        }

        #[test]
        fn bleu_is_permutation_invariant(
            data in prop::collection::vec((sent(), sent()), 1..20),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut shuffled = data.clone();
            shuffled.shuffle(&mut crate::rng::stream(seed, "test", 0));
            let (h, r): (Vec<_>, Vec<_>) = data.into_iter().unzip();
            let (h2, r2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            let a = corpus_bleu(&h, &r, 4).unwrap().bleu;
            let b = corpus_bleu(&h2, &r2, 4).unwrap().bleu;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn em_invariants(
            data in prop::collection::vec(("[a-e]( [a-e]){0,4}", "[v-z]( [v-z]){0,4}", 0.5f64..3.0), 1..15),
        ) {
            let tp: Vec<TrainPair> = data.iter().map(|(a, b, w)| TrainPair::new(s(a), s(b), *w)).collect();
            let m = train_lex(&tp, LexConfig::default()).unwrap();
            for w in m.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
            }
            for src in m.src_vocab() {
                let row = m.row(src);
                prop_assert!(row.iter().all(|(_, p)| *p >= 0.0));
                prop_assert!((row.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-6);
            }
            let t = m.translate_one(&tp[0].src);
            prop_assert!(t.score.is_finite());
        }
    }

    #[cfg(unix)]
    #[test]
    fn external_identity_and_errors() {
        let cmd = |c: &str| vec!["sh".to_owned(), "-c".to_owned(), c.to_owned()];
        let input = vec![s("a b"), s("c")];
        let out = external_translate(&cmd("cat"), &input).unwrap();
        assert_eq!(out.iter().map(|t| t.sentence.clone()).collect::<Vec<_>>(), input);
        assert!(out.iter().all(|t| t.score == 0.0));

        let scored = external_translate(&cmd("sed 's/$/\t-0.5/'"), &input).unwrap();
        assert_eq!(scored[1].score, -0.5);
        assert_eq!(scored[1].sentence, s("c"));

        let err = external_translate(&cmd("head -n 1"), &input).unwrap_err();
        assert!(err.to_string().contains("1 lines for 2"), "{err}");
        assert!(external_translate(&cmd("cat >/dev/null; exit 3"), &input).is_err());
    }
}
