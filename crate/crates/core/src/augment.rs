//! Data augmentation: back-translation, iterative noisy self-training,
//! their combination, input noise and domain tags.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledParallelCorpus, MonoCorpus, Sentence};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::translator::{TrainPair, Translator, TranslatorFactory};

pub const BLANK: &str = "<blank>";
pub const SRC_DOM: &str = "⟨dom:s⟩";
pub const TGT_DOM: &str = "⟨dom:t⟩";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Gold,
    BackTranslated,
    SelfTrained,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Gold => "gold",
            Provenance::BackTranslated => "bt",
            Provenance::SelfTrained => "st",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "gold" => Some(Provenance::Gold),
            "bt" => Some(Provenance::BackTranslated),
            "st" => Some(Provenance::SelfTrained),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPair {
    /// Source side without the domain tag.
    pub src: Sentence,
    pub tgt: Sentence,
    pub provenance: Provenance,
    pub weight: f64,
    /// Domain tag prepended to `src` at training time.
    pub tag: Option<String>,
    /// The un-noised source, for self-trained pairs.
    pub original_src: Option<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AugmentedDataset {
    pub pairs: Vec<AugmentedPair>,
}

impl AugmentedDataset {
    /// Every pair of `corpus` as a gold pair with weight `weight`.
    pub fn from_gold(corpus: &LabeledParallelCorpus, weight: f64) -> Self {
        AugmentedDataset {
            pairs: corpus
                .pairs
                .iter()
                .map(|p| AugmentedPair {
                    src: p.src.clone(),
                    tgt: p.tgt.clone(),
                    provenance: Provenance::Gold,
                    weight,
                    tag: None,
                    original_src: None,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.pairs.iter().filter(|p| p.provenance == provenance).count()
    }

    pub fn with_provenance(&self, provenance: Provenance) -> impl Iterator<Item = &AugmentedPair> {
        self.pairs.iter().filter(move |p| p.provenance == provenance)
    }

    /// Training examples with tags applied.
    pub fn train_pairs(&self) -> Vec<TrainPair> {
        self.pairs
            .iter()
            .map(|p| {
                let src = match &p.tag {
                    Some(t) => tag_domain(&p.src, t),
                    None => p.src.clone(),
                };
                TrainPair::new(src, p.tgt.clone(), p.weight)
            })
            .collect()
    }

    /// Train a fresh model on the dataset.
    pub fn train(&self, factory: &dyn TranslatorFactory) -> Result<Box<dyn Translator>> {
        factory.train(&self.train_pairs())
    }

    /// `src<TAB>tgt<TAB>provenance<TAB>weight<TAB>tag`, with an empty tag
    /// column for untagged pairs.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                p.src,
                p.tgt,
                p.provenance,
                p.weight,
                p.tag.as_deref().unwrap_or("")
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pairs = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                let bad = |reason: &str| Error::Malformed {
                    line: i + 1,
                    reason: reason.into(),
                };
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 5 {
                    return Err(bad("expected 5 tab-separated fields"));
                }
                let provenance = Provenance::from_label(f[2]).ok_or_else(|| bad("unknown provenance"))?;
                let weight: f64 = f[3].parse().map_err(|_| bad("weight is not a number"))?;
                if weight.is_nan() || weight <= 0.0 {
                    return Err(bad("weight must be positive"));
                }
                Ok(AugmentedPair {
                    src: Sentence::parse(f[0]),
                    tgt: Sentence::parse(f[1]),
                    provenance,
                    weight,
                    tag: (!f[4].is_empty()).then(|| f[4].to_owned()),
                    original_src: None,
                })
            })
            .collect::<Result<_>>()?;
        Ok(AugmentedDataset { pairs })
    }
}

// ---------------------------------------------------------------------------
// Noise and tags

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_drop: f64,
    pub p_blank: f64,
    /// Maximum distance a token may move.
    pub window: usize,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p_drop: 0.1,
            p_blank: 0.1,
            window: 3,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn none() -> Self {
        NoiseParams {
            p_drop: 0.0,
            p_blank: 0.0,
            window: 0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [("p_drop", self.p_drop), ("p_blank", self.p_blank)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Drop, blank and locally shuffle tokens. The shuffle sorts positions by
/// `i + u` with `u ~ U[0, window + 1)`, so no token moves more than
/// `window` places. A non-empty input always keeps at least one token.
pub fn add_noise_with(sentence: &Sentence, params: &NoiseParams, rng: &mut Rng) -> Sentence {
    let tokens = sentence.tokens();
    if tokens.is_empty() {
        return Sentence::default();
    }
    let mut kept: Vec<String> = tokens
        .iter()
        .filter(|_| !(params.p_drop > 0.0 && rng.random::<f64>() < params.p_drop))
        .cloned()
        .collect();
    if kept.is_empty() {
        kept.push(tokens[rng.random_range(0..tokens.len())].clone());
    }
    for t in &mut kept {
        if params.p_blank > 0.0 && rng.random::<f64>() < params.p_blank {
            *t = BLANK.to_owned();
        }
    }
    if params.window > 0 {
        let span = params.window as f64 + 1.0;
        let mut keyed: Vec<(f64, String)> = kept
            .into_iter()
            .enumerate()
            .map(|(i, t)| (i as f64 + rng.random::<f64>() * span, t))
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        kept = keyed.into_iter().map(|(_, t)| t).collect();
    }
    Sentence::new(kept)
}

/// [`add_noise_with`] on a stream derived from `params.seed`.
pub fn add_noise(sentence: &Sentence, params: &NoiseParams) -> Sentence {
    add_noise_with(sentence, params, &mut rng::stream(params.seed, "noise", 0))
}

pub fn tag_domain(sentence: &Sentence, tag: &str) -> Sentence {
    std::iter::once(tag.to_owned())
        .chain(sentence.tokens().iter().cloned())
        .collect()
}

/// Remove a leading domain tag, if present.
pub fn strip_tag(sentence: &Sentence) -> Sentence {
    match sentence.tokens().first() {
        Some(t) if crate::translator::is_control(t) => sentence.tokens()[1..].iter().cloned().collect(),
        _ => sentence.clone(),
    }
}

// ---------------------------------------------------------------------------
// Pipelines

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Loss weight of gold pairs; synthetic pairs weigh 1.
    pub parallel_weight: f64,
    pub tagging: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            parallel_weight: 5.0,
            tagging: true,
        }
    }
}

/// Train a target-to-source model on `p`.
pub fn train_reverse(p: &LabeledParallelCorpus, factory: &dyn TranslatorFactory) -> Result<Box<dyn Translator>> {
    AugmentedDataset::from_gold(&p.reversed(), 1.0).train(factory)
}

/// Add back-translations of `m_t` to the gold pairs of `p`.
pub fn back_translate(
    p: &LabeledParallelCorpus,
    m_t: &MonoCorpus,
    reverse: &dyn Translator,
    cfg: &AugmentConfig,
) -> Result<AugmentedDataset> {
    let mut ds = AugmentedDataset::from_gold(p, cfg.parallel_weight);
    if m_t.is_empty() {
        log::warn!("target monolingual corpus is empty; back-translation adds nothing");
        return Ok(ds);
    }
    let out = reverse.translate(&m_t.sentences)?;
    ds.pairs.extend(out.into_iter().zip(&m_t.sentences).map(|(x, y)| AugmentedPair {
        src: x.sentence,
        tgt: y.clone(),
        provenance: Provenance::BackTranslated,
        weight: 1.0,
        tag: cfg.tagging.then(|| TGT_DOM.to_owned()),
        original_src: None,
    }));
    Ok(ds)
}

/// Per-iteration selection sizes `A_1 < ... < A_k`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StSchedule {
    pub sizes: Vec<usize>,
}

impl StSchedule {
    /// Sizes as fractions of `n` (rounded, at least 1).
    pub fn from_fractions(fractions: &[f64], n: usize) -> Self {
        StSchedule {
            sizes: fractions
                .iter()
                .map(|f| ((f * n as f64).round() as usize).clamp(1, n.max(1)))
                .collect(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidArgument("self-training schedule is empty".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) || self.sizes[0] == 0 {
            return Err(Error::InvalidArgument(format!(
                "schedule {:?} is not strictly increasing and positive",
                self.sizes
            )));
        }
        if *self.sizes.last().unwrap() > n {
            return Err(Error::InvalidArgument(format!(
                "schedule {:?} exceeds the {n} monolingual sentences",
                self.sizes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StIteration {
    pub selected: usize,
    pub mean_score_selected: f64,
    pub mean_score_rejected: Option<f64>,
}

pub struct StOutcome {
    pub dataset: AugmentedDataset,
    /// Model trained on the final dataset.
    pub model: Box<dyn Translator>,
    pub iterations: Vec<StIteration>,
}

/// Iterative noisy self-training. Each iteration translates all of `m_s`
/// with the current model, keeps the `A_t` highest-scoring outputs (ties
/// go to the earlier sentence), and trains a fresh model on the gold pairs
/// plus `(noise(x), y)` for the kept pairs.
pub fn self_train(
    p: &LabeledParallelCorpus,
    m_s: &MonoCorpus,
    factory: &dyn TranslatorFactory,
    schedule: &StSchedule,
    noise: &NoiseParams,
    cfg: &AugmentConfig,
) -> Result<StOutcome> {
    if m_s.is_empty() {
        return Err(Error::EmptyInput("self-training needs source monolingual data".into()));
    }
    schedule.validate(m_s.len())?;
    noise.validate()?;
    let gold = AugmentedDataset::from_gold(p, cfg.parallel_weight);
    let mut model = gold.train(factory)?;
    let mut dataset = gold.clone();
    let mut iterations = Vec::new();
    for (t, &a_t) in schedule.sizes.iter().enumerate() {
        let out = model.translate(&m_s.sentences)?;
        let mut order: Vec<usize> = (0..out.len()).collect();
        order.sort_by(|&i, &j| out[j].score.total_cmp(&out[i].score));
        let (keep, reject) = order.split_at(a_t);
        let mean = |ix: &[usize]| ix.iter().map(|&i| out[i].score).sum::<f64>() / ix.len() as f64;
        iterations.push(StIteration {
            selected: a_t,
            mean_score_selected: mean(keep),
            mean_score_rejected: (!reject.is_empty()).then(|| mean(reject)),
        });
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let mut next = gold.clone();
        next.pairs.extend(keep.iter().map(|&i| {
            let x = &m_s.sentences[i];
            let mut r = rng::stream(rng::derive(noise.seed, t as u64), "st.noise", i as u64);
            AugmentedPair {
                src: add_noise_with(x, noise, &mut r),
                tgt: out[i].sentence.clone(),
                provenance: Provenance::SelfTrained,
                weight: 1.0,
                tag: cfg.tagging.then(|| SRC_DOM.to_owned()),
                original_src: Some(x.clone()),
            }
        }));
        model = next.train(factory)?;
        dataset = next;
        log::info!("self-training iteration {}: kept {a_t} of {}", t + 1, m_s.len());
    }
    Ok(StOutcome {
        dataset,
        model,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombineConfig {
    pub augment: AugmentConfig,
    pub schedule_fractions: Vec<f64>,
    pub noise: NoiseParams,
}

impl Default for CombineConfig {
    fn default() -> Self {
        CombineConfig {
            augment: AugmentConfig::default(),
            schedule_fractions: vec![0.25, 0.5, 1.0],
            noise: NoiseParams::default(),
        }
    }
}

/// Union of the gold pairs, back-translations of `m_t` and the final
/// self-training iteration's pairs from `m_s`. Self-training only sees the
/// gold data. Either monolingual set may be empty.
pub fn combine_st_bt(
    p: &LabeledParallelCorpus,
    m_s: &MonoCorpus,
    m_t: &MonoCorpus,
    forward: &dyn TranslatorFactory,
    reverse: &dyn TranslatorFactory,
    cfg: &CombineConfig,
) -> Result<AugmentedDataset> {
    let mut ds = if m_t.is_empty() {
        AugmentedDataset::from_gold(p, cfg.augment.parallel_weight)
    } else {
        let rev = train_reverse(p, reverse)?;
        back_translate(p, m_t, rev.as_ref(), &cfg.augment)?
    };
    if !m_s.is_empty() {
        let schedule = StSchedule::from_fractions(&cfg.schedule_fractions, m_s.len());
        let st = self_train(p, m_s, forward, &schedule, &cfg.noise, &cfg.augment)?;
        ds.pairs
            .extend(st.dataset.pairs.into_iter().filter(|x| x.provenance == Provenance::SelfTrained));
    }
    Ok(ds)
}
