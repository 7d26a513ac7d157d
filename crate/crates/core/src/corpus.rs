//! Monolingual and origin-labelled parallel corpora, plain-text I/O and
//! seeded splitting.
//!
//! On disk a corpus is UTF-8 text with one pre-tokenized sentence per line.
//! Origin labels live in a side file with one `S` or `T` per line, or in the
//! third column of the single-file `src \t tgt \t origin` layout.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A whitespace-free token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    /// Build a sentence from tokens. Tokens must be non-empty and contain no
    /// whitespace.
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        Sentence { tokens }
    }

    /// Whitespace-split a line.
    pub fn parse(line: &str) -> Self {
        Sentence {
            tokens: line.split_whitespace().map(str::to_owned).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t)?;
        }
        Ok(())
    }
}

impl<S: Into<String>> FromIterator<S> for Sentence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Sentence::new(iter.into_iter().map(Into::into).collect())
    }
}

/// Which language a parallel pair was originally authored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    SourceOriginating,
    TargetOriginating,
}

impl Origin {
    pub fn label(self) -> char {
        match self {
            Origin::SourceOriginating => 'S',
            Origin::TargetOriginating => 'T',
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "S" => Some(Origin::SourceOriginating),
            "T" => Some(Origin::TargetOriginating),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoCorpus {
    pub sentences: Vec<Sentence>,
    pub language: String,
    pub domain_hint: Option<String>,
}

impl MonoCorpus {
    pub fn new(language: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        let language = language.into();
        assert!(!language.is_empty(), "language label must be non-empty");
        MonoCorpus {
            sentences,
            language,
            domain_hint: None,
        }
    }

    pub fn with_domain_hint(mut self, hint: impl Into<String>) -> Self {
        self.domain_hint = Some(hint.into());
        self
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParallelPair {
    pub src: Sentence,
    pub tgt: Sentence,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabeledParallelCorpus {
    pub pairs: Vec<ParallelPair>,
}

impl LabeledParallelCorpus {
    pub fn new(pairs: Vec<ParallelPair>) -> Self {
        LabeledParallelCorpus { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn with_origin(&self, origin: Origin) -> impl Iterator<Item = &ParallelPair> {
        self.pairs.iter().filter(move |p| p.origin == origin)
    }

    pub fn count(&self, origin: Origin) -> usize {
        self.with_origin(origin).count()
    }

    pub fn sources(&self) -> MonoCorpus {
        MonoCorpus::new("src", self.pairs.iter().map(|p| p.src.clone()).collect())
    }

    pub fn targets(&self) -> MonoCorpus {
        MonoCorpus::new("tgt", self.pairs.iter().map(|p| p.tgt.clone()).collect())
    }

    /// Swap the two sides; origin labels are kept as-is.
    pub fn reversed(&self) -> LabeledParallelCorpus {
        LabeledParallelCorpus::new(
            self.pairs
                .iter()
                .map(|p| ParallelPair {
                    src: p.tgt.clone(),
                    tgt: p.src.clone(),
                    origin: p.origin,
                })
                .collect(),
        )
    }
}

/// Non-fatal observations made while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub blank_lines: usize,
    pub defaulted_origins: bool,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(&bytes);
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            std::str::from_utf8(raw)
                .map(str::to_owned)
                .map_err(|_| Error::InvalidUtf8 {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
        })
        .collect()
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Load a one-sentence-per-line file. Blank lines are skipped and tallied.
pub fn load_mono(path: impl AsRef<Path>, language: &str) -> Result<(MonoCorpus, LoadReport)> {
    let path = path.as_ref();
    let mut report = LoadReport::default();
    let mut sentences = Vec::new();
    for line in read_lines(path)? {
        let s = Sentence::parse(&line);
        if s.is_empty() {
            report.blank_lines += 1;
        } else {
            sentences.push(s);
        }
    }
    if report.blank_lines > 0 {
        log::warn!("{}: skipped {} blank lines", path.display(), report.blank_lines);
    }
    Ok((MonoCorpus::new(language, sentences), report))
}

fn lines_of<'a>(sentences: impl Iterator<Item = &'a Sentence>) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

pub fn write_mono(path: impl AsRef<Path>, corpus: &MonoCorpus) -> Result<()> {
    write_text(path.as_ref(), &lines_of(corpus.sentences.iter()))
}

/// Load line-aligned source/target files plus an optional origin file.
///
/// Without an origin file every pair is labelled source-originating. Pairs
/// with a blank side are dropped and tallied as blank lines.
pub fn load_parallel(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    origin_path: Option<&Path>,
) -> Result<(LabeledParallelCorpus, LoadReport)> {
    let src = read_lines(src_path.as_ref())?;
    let tgt = read_lines(tgt_path.as_ref())?;
    if src.len() != tgt.len() {
        return Err(Error::LineCountMismatch {
            src: src.len(),
            tgt: tgt.len(),
        });
    }
    let mut report = LoadReport::default();
    let origins = match origin_path {
        Some(p) => {
            let labels = read_lines(p)?;
            if labels.len() != src.len() {
                return Err(Error::OriginCountMismatch {
                    expected: src.len(),
                    found: labels.len(),
                });
            }
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    Origin::from_label(l.trim()).ok_or_else(|| Error::InvalidOrigin {
                        line: i + 1,
                        label: l.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            log::warn!("no origin file given; labelling all pairs source-originating");
            report.defaulted_origins = true;
            vec![Origin::SourceOriginating; src.len()]
        }
    };
    let mut pairs = Vec::with_capacity(src.len());
    for ((s, t), origin) in src.iter().zip(&tgt).zip(origins) {
        let (s, t) = (Sentence::parse(s), Sentence::parse(t));
        if s.is_empty() || t.is_empty() {
            report.blank_lines += 1;
            continue;
        }
        pairs.push(ParallelPair { src: s, tgt: t, origin });
    }
    if report.blank_lines > 0 {
        log::warn!("skipped {} pairs with a blank side", report.blank_lines);
    }
    Ok((LabeledParallelCorpus::new(pairs), report))
}

/// Write the three-file layout (`src`, `tgt`, origin labels).
pub fn write_parallel(
    corpus: &LabeledParallelCorpus,
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    origin_path: impl AsRef<Path>,
) -> Result<()> {
    write_text(src_path.as_ref(), &lines_of(corpus.pairs.iter().map(|p| &p.src)))?;
    write_text(tgt_path.as_ref(), &lines_of(corpus.pairs.iter().map(|p| &p.tgt)))?;
    let mut origins = String::with_capacity(corpus.len() * 2);
    for p in &corpus.pairs {
        origins.push(p.origin.label());
        origins.push('\n');
    }
    write_text(origin_path.as_ref(), &origins)
}

/// Load the single-file `src \t tgt \t origin` layout. Extra columns are
/// ignored; a missing origin column defaults to `S`.
pub fn load_tsv(path: impl AsRef<Path>) -> Result<(LabeledParallelCorpus, LoadReport)> {
    let path = path.as_ref();
    let mut report = LoadReport::default();
    let mut pairs = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            report.blank_lines += 1;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(Error::Malformed {
                line: i + 1,
                reason: "expected at least two tab-separated columns".into(),
            });
        }
        let origin = match cols.get(2) {
            Some(l) => Origin::from_label(l.trim()).ok_or_else(|| Error::InvalidOrigin {
                line: i + 1,
                label: (*l).to_owned(),
            })?,
            None => {
                report.defaulted_origins = true;
                Origin::SourceOriginating
            }
        };
        let (src, tgt) = (Sentence::parse(cols[0]), Sentence::parse(cols[1]));
        if src.is_empty() || tgt.is_empty() {
            report.blank_lines += 1;
            continue;
        }
        pairs.push(ParallelPair { src, tgt, origin });
    }
    Ok((LabeledParallelCorpus::new(pairs), report))
}

pub fn write_tsv(path: impl AsRef<Path>, corpus: &LabeledParallelCorpus) -> Result<()> {
    let mut out = String::new();
    for p in &corpus.pairs {
        out.push_str(&format!("{}\t{}\t{}\n", p.src, p.tgt, p.origin.label()));
    }
    write_text(path.as_ref(), &out)
}

/// Seeded shuffle followed by a contiguous partition.
///
/// Part boundaries are the rounded cumulative fractions, so every part size
/// is within one item of `fraction * len`.
pub fn split_items<T: Clone>(items: &[T], fractions: &[f64], seed: u64) -> Result<Vec<Vec<T>>> {
    if fractions.is_empty() {
        return Err(Error::BadFractions("no fractions given".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(Error::BadFractions(format!("fraction {f} is not positive")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::BadFractions(format!("fractions sum to {total}, not 1")));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng::stream(seed, "split", 0));

    let n = items.len() as f64;
    let mut parts = Vec::with_capacity(fractions.len());
    let mut cum = 0.0;
    let mut start = 0usize;
    for (i, f) in fractions.iter().enumerate() {
        cum += f;
        let end = if i + 1 == fractions.len() {
            items.len()
        } else {
            ((cum * n).round() as usize).clamp(start, items.len())
        };
        parts.push(order[start..end].iter().map(|&j| items[j].clone()).collect());
        start = end;
    }
    Ok(parts)
}

/// Corpora that can be partitioned with [`split_items`].
pub trait Split: Sized {
    fn split(&self, fractions: &[f64], seed: u64) -> Result<Vec<Self>>;
}

impl Split for MonoCorpus {
    fn split(&self, fractions: &[f64], seed: u64) -> Result<Vec<Self>> {
        Ok(split_items(&self.sentences, fractions, seed)?
            .into_iter()
            .map(|sentences| MonoCorpus {
                sentences,
                language: self.language.clone(),
                domain_hint: self.domain_hint.clone(),
            })
            .collect())
    }
}

impl Split for LabeledParallelCorpus {
    fn split(&self, fractions: &[f64], seed: u64) -> Result<Vec<Self>> {
        Ok(split_items(&self.pairs, fractions, seed)?
            .into_iter()
            .map(LabeledParallelCorpus::new)
            .collect())
    }
}
