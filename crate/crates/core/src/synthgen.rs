//! Synthetic two-domain world and controlled benchmark mixer.
//!
//! Sentences live in a concept space shared by both languages. A domain is
//! a Dirichlet prior over topics plus one categorical over concepts per
//! topic; a sentence draws a topic mixture from its domain's prior, then
//! for every token a topic and a concept. Each language realizes concept
//! `c` as one word, and the bilingual lexicon between the two vocabularies
//! is a bijection.
//!
//! Concepts are split into a source-domain block (first half) and a
//! target-domain block (second half). With word divergence `d`, a domain's
//! topic-word distribution is `(1 - d) * shared + d * own_block`, so `d = 1`
//! gives the two domains disjoint vocabularies and `d = 0` identical ones.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, LabeledParallelCorpus, MonoCorpus, Origin, ParallelPair, Sentence};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    S,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Language {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    SourceToTarget,
    TargetToSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub n_topics: usize,
    /// Number of concepts, which is also each language's vocabulary size.
    pub vocab_size: usize,
    /// 0: identical topic priors; 1: each domain's prior mean is its own
    /// random draw.
    pub topic_divergence: f64,
    /// 0: identical word distributions; 1: disjoint vocabularies.
    pub word_divergence: f64,
    /// Per-topic Dirichlet concentration for a sentence's topic mixture.
    pub topic_concentration: f64,
    /// Per-concept Dirichlet concentration for topic-word distributions.
    pub word_concentration: f64,
    /// Translation swaps adjacent token pairs.
    pub reorder: bool,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_topics: 20,
            vocab_size: 2000,
            topic_divergence: 0.5,
            word_divergence: 0.5,
            topic_concentration: 0.1,
            word_concentration: 0.05,
            reorder: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Caches {
    /// Cumulative topic-word distributions, `[domain][topic]`.
    word_cdf: [Vec<Vec<f64>>; 2],
    src_index: HashMap<String, usize>,
    tgt_index: HashMap<String, usize>,
    /// Concept realized by each target word index.
    tgt_to_concept: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct World {
    pub config: WorldConfig,
    /// Dirichlet parameters of the per-sentence topic mixture, by domain.
    pub topic_prior: [Vec<f64>; 2],
    /// Topic-word distributions over concepts, `[domain][topic][concept]`.
    pub word_dist: [Vec<Vec<f64>>; 2],
    /// Target word index realizing each concept.
    pub lexicon: Vec<usize>,
    #[serde(skip)]
    caches: Caches,
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.topic_prior == other.topic_prior
            && self.word_dist == other.word_dist
            && self.lexicon == other.lexicon
    }
}

fn domain_index(d: Domain) -> usize {
    match d {
        Domain::S => 0,
        Domain::T => 1,
    }
}

/// Normalized Dirichlet draw. Falls back to a one-hot vector when every
/// gamma variate underflows.
fn dirichlet(params: &[f64], rng: &mut Rng) -> Vec<f64> {
    let mut x: Vec<f64> = params
        .iter()
        .map(|&a| if a > 0.0 { Gamma::new(a, 1.0).unwrap().sample(rng) } else { 0.0 })
        .collect();
    let sum: f64 = x.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        x.iter_mut().for_each(|v| *v /= sum);
    } else {
        let support: Vec<usize> = (0..params.len()).filter(|&i| params[i] > 0.0).collect();
        x.iter_mut().for_each(|v| *v = 0.0);
        x[support[rng.random_range(0..support.len())]] = 1.0;
    }
    x
}

fn cdf(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn sample_cdf(cdf: &[f64], rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Tokens of the source language are `s<concept>`; target-language tokens
/// are `t<index>` with the index given by the lexicon.
fn src_word(c: usize) -> String {
    format!("s{c}")
}

fn tgt_word(i: usize) -> String {
    format!("t{i}")
}

fn swap_adjacent(tokens: &mut [String]) {
    for pair in tokens.chunks_mut(2) {
        if pair.len() == 2 {
            pair.swap(0, 1);
        }
    }
}

/// Which domain(s) a generation job draws from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainMix {
    Pure(Domain),
    /// Each sentence comes from `S` with probability `alpha`, else `T`.
    Alpha(f64),
}

/// A sentence in concept space.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSentence {
    pub concepts: Vec<usize>,
    pub domain: Domain,
}

/// Validate that `x` is a probability.
fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{name} = {x} is outside [0, 1]")));
    }
    Ok(())
}

pub fn make_world(config: WorldConfig) -> Result<World> {
    let (t, v) = (config.n_topics, config.vocab_size);
    if t < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 topics, got {t}")));
    }
    if v < t || v < 2 {
        return Err(Error::InvalidArgument(format!(
            "vocabulary size {v} must be at least the topic count {t}"
        )));
    }
    check_unit("topic_divergence", config.topic_divergence)?;
    check_unit("word_divergence", config.word_divergence)?;
    if !(config.topic_concentration > 0.0 && config.word_concentration > 0.0) {
        return Err(Error::InvalidArgument("concentrations must be positive".into()));
    }

    let seed = config.seed;
    let mut topic_prior: [Vec<f64>; 2] = Default::default();
    for (d, prior) in topic_prior.iter_mut().enumerate() {
        let own = dirichlet(&vec![1.0; t], &mut rng::stream(seed, "world.topic_mean", d as u64));
        let scale = config.topic_concentration * t as f64;
        *prior = own
            .iter()
            .map(|&o| scale * ((1.0 - config.topic_divergence) / t as f64 + config.topic_divergence * o))
            .collect();
    }

    let half = v / 2;
    let blocks = [0..half, half..v];
    let beta = config.word_concentration;
    let mut word_dist: [Vec<Vec<f64>>; 2] = Default::default();
    for topic in 0..t {
        let shared = dirichlet(&vec![beta; v], &mut rng::stream(seed, "world.shared", topic as u64));
        for d in 0..2 {
            let params: Vec<f64> = (0..v)
                .map(|c| if blocks[d].contains(&c) { beta } else { 0.0 })
                .collect();
            let own = dirichlet(
                &params,
                &mut rng::stream(seed, "world.own", (d * t + topic) as u64),
            );
            let dv = config.word_divergence;
            word_dist[d].push(
                shared
                    .iter()
                    .zip(&own)
                    .map(|(s, o)| (1.0 - dv) * s + dv * o)
                    .collect(),
            );
        }
    }

    let mut lexicon: Vec<usize> = (0..v).collect();
    lexicon.shuffle(&mut rng::stream(seed, "world.lexicon", 0));

    let mut world = World {
        config,
        topic_prior,
        word_dist,
        lexicon,
        caches: Caches::default(),
    };
    world.rebuild_caches();
    Ok(world)
}

impl World {
    fn rebuild_caches(&mut self) {
        let word_cdf = [0, 1].map(|d| self.word_dist[d].iter().map(|p| cdf(p)).collect());
        let mut tgt_to_concept = vec![0; self.lexicon.len()];
        for (c, &i) in self.lexicon.iter().enumerate() {
            tgt_to_concept[i] = c;
        }
        self.caches = Caches {
            word_cdf,
            src_index: (0..self.lexicon.len()).map(|c| (src_word(c), c)).collect(),
            tgt_index: (0..self.lexicon.len()).map(|i| (tgt_word(i), i)).collect(),
            tgt_to_concept,
        };
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut w: World = serde_json::from_str(text)?;
        w.rebuild_caches();
        Ok(w)
    }

    pub fn vocab_size(&self) -> usize {
        self.lexicon.len()
    }

    /// Topic-word categorical for `domain` and `topic`, indexed by the
    /// vocabulary of `language`.
    pub fn word_distribution(&self, domain: Domain, topic: usize, language: Language) -> Vec<f64> {
        let p = &self.word_dist[domain_index(domain)][topic];
        match language {
            Language::Source => p.clone(),
            Language::Target => {
                let mut out = vec![0.0; p.len()];
                for (c, &i) in self.lexicon.iter().enumerate() {
                    out[i] = p[c];
                }
                out
            }
        }
    }

    /// Expected concept distribution of a single token from `domain`.
    pub fn token_marginal(&self, domain: Domain) -> Vec<f64> {
        let d = domain_index(domain);
        let prior = &self.topic_prior[d];
        let total: f64 = prior.iter().sum();
        let mut out = vec![0.0; self.vocab_size()];
        for (z, a) in prior.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(&self.word_dist[d][z]) {
                *o += a / total * p;
            }
        }
        out
    }

    pub fn concept_of(&self, token: &str, language: Language) -> Option<usize> {
        match language {
            Language::Source => self.caches.src_index.get(token).copied(),
            Language::Target => self
                .caches
                .tgt_index
                .get(token)
                .map(|&i| self.caches.tgt_to_concept[i]),
        }
    }

    pub fn word(&self, concept: usize, language: Language) -> String {
        match language {
            Language::Source => src_word(concept),
            Language::Target => tgt_word(self.lexicon[concept]),
        }
    }

    /// Draw one concept sentence from `domain` using `rng`.
    fn sample_sentence(&self, domain: Domain, len: usize, rng: &mut Rng) -> Vec<usize> {
        let d = domain_index(domain);
        let theta = cdf(&dirichlet(&self.topic_prior[d], rng));
        (0..len)
            .map(|_| {
                let z = sample_cdf(&theta, rng);
                sample_cdf(&self.caches.word_cdf[d][z], rng)
            })
            .collect()
    }

    /// `n` concept sentences. Sentence `i` depends only on
    /// `(seed, purpose, i)`.
    pub fn sample_concepts(
        &self,
        mix: DomainMix,
        n: usize,
        len_range: (usize, usize),
        seed: u64,
        purpose: &str,
    ) -> Vec<ConceptSentence> {
        let (lo, hi) = (len_range.0.max(1), len_range.1.max(len_range.0.max(1)));
        (0..n)
            .map(|i| {
                let mut r = rng::stream(seed, purpose, i as u64);
                let domain = match mix {
                    DomainMix::Pure(d) => d,
                    DomainMix::Alpha(a) => {
                        if r.random::<f64>() < a {
                            Domain::S
                        } else {
                            Domain::T
                        }
                    }
                };
                let len = r.random_range(lo..=hi);
                ConceptSentence {
                    concepts: self.sample_sentence(domain, len, &mut r),
                    domain,
                }
            })
            .collect()
    }

    pub fn realize(&self, s: &ConceptSentence, language: Language) -> Sentence {
        Sentence::new(s.concepts.iter().map(|&c| self.word(c, language)).collect())
    }

    /// Human-translation stand-in: token-wise lexicon substitution, plus
    /// adjacent-pair swapping when the world is configured to reorder.
    pub fn oracle_translate(&self, sentence: &Sentence, direction: Direction) -> Result<Sentence> {
        let (from, to) = match direction {
            Direction::SourceToTarget => (Language::Source, Language::Target),
            Direction::TargetToSource => (Language::Target, Language::Source),
        };
        let mut tokens = sentence
            .iter()
            .map(|t| {
                self.concept_of(t, from)
                    .map(|c| self.word(c, to))
                    .ok_or_else(|| Error::OutOfLexicon(t.to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        if self.config.reorder {
            swap_adjacent(&mut tokens);
        }
        Ok(Sentence::new(tokens))
    }
}

/// Generate a monolingual corpus in `language`.
pub fn generate_corpus(
    world: &World,
    mix: DomainMix,
    language: Language,
    n: usize,
    len_range: (usize, usize),
    seed: u64,
) -> MonoCorpus {
    let lang = match language {
        Language::Source => "src",
        Language::Target => "tgt",
    };
    let sentences = world
        .sample_concepts(mix, n, len_range, seed, "corpus")
        .iter()
        .map(|s| world.realize(s, language))
        .collect();
    MonoCorpus::new(lang, sentences)
}

// ---------------------------------------------------------------------------
// Benchmarks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSizes {
    pub n_parallel: usize,
    pub n_mono_s: usize,
    pub n_mono_t: usize,
    pub n_test: usize,
}

impl Default for BenchmarkSizes {
    fn default() -> Self {
        BenchmarkSizes {
            n_parallel: 2000,
            n_mono_s: 10_000,
            n_mono_t: 10_000,
            n_test: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Share of source-domain data in the target-originating half of the
    /// parallel set and in the target monolingual set.
    pub alpha: f64,
    /// Fraction of the parallel set that is source-originating. The
    /// default 0.5 gives the equal-halves layout.
    pub beta: f64,
    pub sizes: BenchmarkSizes,
    pub len_range: (usize, usize),
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            alpha: 0.0,
            beta: 0.5,
            sizes: BenchmarkSizes::default(),
            len_range: (5, 15),
            seed: 0,
        }
    }
}

/// Identifier of a generated or sampled sentence: partition tag in the high
/// bits, index within the partition (or pool) below.
pub type SentenceId = u64;

/// One parallel pair drawn for a benchmark partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Drawn {
    pub src: Sentence,
    pub tgt: Sentence,
    pub domain: Domain,
    pub id: SentenceId,
}

/// Where benchmark sentences come from: a synthetic [`World`] or a pair of
/// real parallel corpora standing in for the two domains.
pub trait PairSource {
    /// Draw `n` items from `mix`. For source-originating items `tgt` is the
    /// translation of `src`; for target-originating items `src` is the
    /// translation of `tgt`.
    fn draw(&mut self, part: Partition, mix: DomainMix, n: usize, origin: Origin) -> Result<Vec<Drawn>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Partition {
    ParallelS,
    ParallelT,
    MonoS,
    MonoT,
    Test,
    TestReverse,
}

impl Partition {
    pub const ALL: [Partition; 6] = [
        Partition::ParallelS,
        Partition::ParallelT,
        Partition::MonoS,
        Partition::MonoT,
        Partition::Test,
        Partition::TestReverse,
    ];

    fn tag(self) -> u64 {
        self as u64 + 1
    }

    fn name(self) -> &'static str {
        match self {
            Partition::ParallelS => "parallel_s",
            Partition::ParallelT => "parallel_t",
            Partition::MonoS => "mono_s",
            Partition::MonoT => "mono_t",
            Partition::Test => "test",
            Partition::TestReverse => "test_reverse",
        }
    }
}

/// Generates fresh sentences for every request.
pub struct WorldSource<'a> {
    pub world: &'a World,
    pub len_range: (usize, usize),
    pub seed: u64,
}

impl PairSource for WorldSource<'_> {
    fn draw(&mut self, part: Partition, mix: DomainMix, n: usize, origin: Origin) -> Result<Vec<Drawn>> {
        let w = self.world;
        w.sample_concepts(mix, n, self.len_range, self.seed, part.name())
            .into_iter()
            .enumerate()
            .map(|(i, z)| {
                let (src, tgt) = match origin {
                    Origin::SourceOriginating => {
                        let src = w.realize(&z, Language::Source);
                        let tgt = w.oracle_translate(&src, Direction::SourceToTarget)?;
                        (src, tgt)
                    }
                    Origin::TargetOriginating => {
                        let tgt = w.realize(&z, Language::Target);
                        let src = w.oracle_translate(&tgt, Direction::TargetToSource)?;
                        (src, tgt)
                    }
                };
                Ok(Drawn {
                    src,
                    tgt,
                    domain: z.domain,
                    id: (part.tag() << 40) | i as u64,
                })
            })
            .collect()
    }
}

/// Samples without replacement from two user-supplied parallel corpora.
pub struct RealCorporaSource {
    pools: [Vec<(ParallelPair, SentenceId)>; 2],
    cursors: [usize; 2],
    seed: u64,
}

impl RealCorporaSource {
    /// `domain_s` plays the source domain, `domain_t` the target domain.
    /// Both pools are shuffled under `seed`.
    pub fn new(domain_s: LabeledParallelCorpus, domain_t: LabeledParallelCorpus, seed: u64) -> Self {
        let pools = [domain_s, domain_t].map(|c| c.pairs);
        let pools = [0usize, 1].map(|d| {
            let mut pool: Vec<(ParallelPair, SentenceId)> = pools[d]
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, p)| (p, ((d as u64 + 1) << 40) | i as u64))
                .collect();
            pool.shuffle(&mut rng::stream(seed, "real.pool", d as u64));
            pool
        });
        RealCorporaSource {
            pools,
            cursors: [0, 0],
            seed,
        }
    }

    fn take(&mut self, d: usize, part: Partition) -> Result<(ParallelPair, SentenceId)> {
        let pool = &self.pools[d];
        let item = pool.get(self.cursors[d]).cloned().ok_or_else(|| Error::InsufficientData {
            what: format!("domain {} corpus (for {})", ["S", "T"][d], part.name()),
            requested: self.cursors[d] + 1,
            available: pool.len(),
        })?;
        self.cursors[d] += 1;
        Ok(item)
    }
}

impl PairSource for RealCorporaSource {
    fn draw(&mut self, part: Partition, mix: DomainMix, n: usize, _origin: Origin) -> Result<Vec<Drawn>> {
        (0..n)
            .map(|i| {
                let domain = match mix {
                    DomainMix::Pure(d) => d,
                    DomainMix::Alpha(a) => {
                        if rng::stream(self.seed, part.name(), i as u64).random::<f64>() < a {
                            Domain::S
                        } else {
                            Domain::T
                        }
                    }
                };
                let (p, id) = self.take(domain_index(domain), part)?;
                Ok(Drawn {
                    src: p.src,
                    tgt: p.tgt,
                    domain,
                    id,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub parallel: LabeledParallelCorpus,
    pub mono_src: MonoCorpus,
    pub mono_tgt: MonoCorpus,
    /// Source-originating pairs from the source domain.
    pub test: LabeledParallelCorpus,
    /// Target-originating pairs from the target domain, for evaluating the
    /// reverse direction.
    pub test_reverse: LabeledParallelCorpus,
    pub config: BenchmarkConfig,
    pub ids: BTreeMap<Partition, Vec<SentenceId>>,
    pub domains: BTreeMap<Partition, Vec<Domain>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BenchmarkManifest {
    alpha: f64,
    beta: f64,
    sizes: BenchmarkSizes,
    len_range: (usize, usize),
    seed: u64,
}

/// Lay out a benchmark:
///
/// * parallel: `round(beta * n)` source-originating pairs from `S`, the rest
///   target-originating from the `alpha` mixture;
/// * source monolingual from `S`, target monolingual from the `alpha`
///   mixture;
/// * test from `S`, reverse test from `T`.
pub fn build_benchmark(source: &mut dyn PairSource, config: BenchmarkConfig) -> Result<Benchmark> {
    check_unit("alpha", config.alpha)?;
    check_unit("beta", config.beta)?;
    let s = config.sizes;
    if s.n_parallel == 0 || s.n_test == 0 {
        return Err(Error::InvalidArgument("parallel and test sizes must be positive".into()));
    }
    let n_ps = (config.beta * s.n_parallel as f64).round() as usize;
    let n_pt = s.n_parallel - n_ps;
    let mix = DomainMix::Alpha(config.alpha);
    let pure_s = DomainMix::Pure(Domain::S);
    let pure_t = DomainMix::Pure(Domain::T);
    use Origin::*;

    let parts = [
        (Partition::ParallelS, pure_s, n_ps, SourceOriginating),
        (Partition::ParallelT, mix, n_pt, TargetOriginating),
        (Partition::MonoS, pure_s, s.n_mono_s, SourceOriginating),
        (Partition::MonoT, mix, s.n_mono_t, TargetOriginating),
        (Partition::Test, pure_s, s.n_test, SourceOriginating),
        (Partition::TestReverse, pure_t, s.n_test, TargetOriginating),
    ];
    let mut drawn = BTreeMap::new();
    for (part, m, n, origin) in parts {
        drawn.insert(part, (source.draw(part, m, n, origin)?, origin));
    }

    let pairs = |parts: &[Partition]| {
        LabeledParallelCorpus::new(
            parts
                .iter()
                .flat_map(|p| {
                    let (items, origin) = &drawn[p];
                    items.iter().map(move |d| ParallelPair {
                        src: d.src.clone(),
                        tgt: d.tgt.clone(),
                        origin: *origin,
                    })
                })
                .collect(),
        )
    };
    let parallel = pairs(&[Partition::ParallelS, Partition::ParallelT]);
    let test = pairs(&[Partition::Test]);
    let test_reverse = pairs(&[Partition::TestReverse]);
    let mono_src = MonoCorpus::new("src", drawn[&Partition::MonoS].0.iter().map(|d| d.src.clone()).collect())
        .with_domain_hint("S");
    let mono_tgt = MonoCorpus::new("tgt", drawn[&Partition::MonoT].0.iter().map(|d| d.tgt.clone()).collect())
        .with_domain_hint(format!("alpha={}", config.alpha));

    let ids = drawn
        .iter()
        .map(|(p, (items, _))| (*p, items.iter().map(|d| d.id).collect()))
        .collect();
    let domains = drawn
        .iter()
        .map(|(p, (items, _))| (*p, items.iter().map(|d| d.domain).collect()))
        .collect();
    Ok(Benchmark {
        parallel,
        mono_src,
        mono_tgt,
        test,
        test_reverse,
        config,
        ids,
        domains,
    })
}

impl Benchmark {
    /// Write the corpus files and `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = |stem: &str| {
            (
                dir.join(format!("{stem}.src")),
                dir.join(format!("{stem}.tgt")),
                dir.join(format!("{stem}.origin")),
            )
        };
        for (stem, corpus) in [
            ("parallel", &self.parallel),
            ("test", &self.test),
            ("test_reverse", &self.test_reverse),
        ] {
            let (s, t, o) = files(stem);
            corpus::write_parallel(corpus, s, t, o)?;
        }
        corpus::write_mono(dir.join("mono.src"), &self.mono_src)?;
        corpus::write_mono(dir.join("mono.tgt"), &self.mono_tgt)?;
        let manifest = BenchmarkManifest {
            alpha: self.config.alpha,
            beta: self.config.beta,
            sizes: self.config.sizes,
            len_range: self.config.len_range,
            seed: self.config.seed,
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Read a directory written by [`Benchmark::write_dir`]. Sentence ids
    /// and domain labels are not stored on disk and come back empty.
    pub fn read_dir(dir: &Path) -> Result<Benchmark> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: BenchmarkManifest = serde_json::from_str(&text)?;
        let load = |stem: &str| -> Result<LabeledParallelCorpus> {
            let o = dir.join(format!("{stem}.origin"));
            Ok(corpus::load_parallel(
                dir.join(format!("{stem}.src")),
                dir.join(format!("{stem}.tgt")),
                Some(o.as_path()),
            )?
            .0)
        };
        Ok(Benchmark {
            parallel: load("parallel")?,
            test: load("test")?,
            test_reverse: load("test_reverse")?,
            mono_src: corpus::load_mono(dir.join("mono.src"), "src")?.0.with_domain_hint("S"),
            mono_tgt: corpus::load_mono(dir.join("mono.tgt"), "tgt")?
                .0
                .with_domain_hint(format!("alpha={}", m.alpha)),
            config: BenchmarkConfig {
                alpha: m.alpha,
                beta: m.beta,
                sizes: m.sizes,
                len_range: m.len_range,
                seed: m.seed,
            },
            ids: BTreeMap::new(),
            domains: BTreeMap::new(),
        })
    }
}
