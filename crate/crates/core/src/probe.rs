//! Linear probes: can a classifier tell translated text from original
//! text, in TF-IDF space and in topic space, and can it tell the two
//! domains apart in topic space?

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_items, Sentence};
use crate::error::{Error, Result};
use crate::lsa::{fit_lsa, SvdMethod};
use crate::rng;
use crate::synthgen::{Direction, Domain, DomainMix, Language, World};
use crate::textproc::{build_tfidf, build_vocab, TfidfConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: DVector<f64>,
    pub bias: f64,
    pub lambda: f64,
    /// Objective value before training and after every epoch.
    pub trace: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus `lambda / 2 * |w|²` (bias unregularized), and
/// its gradient with respect to `w` and `b`.
pub fn objective(x: &DMatrix<f64>, y: &[bool], w: &DVector<f64>, b: f64, lambda: f64) -> (f64, DVector<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x * w;
    let mut loss = 0.0;
    let mut r = DVector::zeros(x.nrows());
    for i in 0..x.nrows() {
        let zi = z[i] + b;
        let yi = if y[i] { 1.0 } else { 0.0 };
        loss += softplus(zi) - yi * zi;
        r[i] = (sigmoid(zi) - yi) / n;
    }
    let grad_w = x.tr_mul(&r) + w * lambda;
    let grad_b = r.sum();
    (loss / n + 0.5 * lambda * w.norm_squared(), grad_w, grad_b)
}

/// Full-batch gradient descent from zero. `lr` is the initial step; the step
/// doubles after every accepted move and is halved until the Armijo
/// condition holds, so the objective never increases.
pub fn train_linear(x: &DMatrix<f64>, y: &[bool], lambda: f64, epochs: usize, lr: f64) -> Result<LinearModel> {
    if x.nrows() != y.len() || y.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need matching features and at least 2 labels, got {} rows and {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    if !(lambda >= 0.0 && lr > 0.0) {
        return Err(Error::InvalidArgument("lambda must be non-negative and lr positive".into()));
    }
    let mut w = DVector::zeros(x.ncols());
    let mut b = 0.0;
    let (mut f, mut gw, mut gb) = objective(x, y, &w, b, lambda);
    let mut trace = vec![f];
    let mut step = lr;
    for _ in 0..epochs {
        let g2 = gw.norm_squared() + gb * gb;
        if g2 == 0.0 {
            trace.push(f);
            continue;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let w2 = &w - &gw * step;
            let b2 = b - gb * step;
            let next = objective(x, y, &w2, b2, lambda);
            if next.0 <= f - 1e-4 * step * g2 {
                accepted = Some((w2, b2, next));
                break;
            }
            step *= 0.5;
        }
        if let Some((w2, b2, (f2, gw2, gb2))) = accepted {
            w = w2;
            b = b2;
            f = f2;
            gw = gw2;
            gb = gb2;
            step *= 2.0;
        }
        trace.push(f);
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        lambda,
        trace,
    })
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<bool> {
        let z = x * &self.weights;
        z.iter().map(|zi| zi + self.bias >= 0.0).collect()
    }

    pub fn accuracy(&self, x: &DMatrix<f64>, y: &[bool]) -> f64 {
        let p = self.predict(x);
        p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }
}

// ---------------------------------------------------------------------------
// Probe data

/// Target-language sentences grouped by role. `original[i]` and
/// `roundtrip[i]` are two versions of the same underlying sentence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeData {
    pub original: Vec<Sentence>,
    pub roundtrip: Vec<Sentence>,
    pub src_translated: Vec<Sentence>,
}

impl ProbeData {
    /// Read `sentence<TAB>role` lines, or corpus TSV lines with a trailing
    /// role column (`src<TAB>tgt<TAB>origin<TAB>role`, using `tgt`).
    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut d = ProbeData::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            let (sentence, role) = match f.len() {
                2 => (f[0], f[1]),
                4 => (f[1], f[3]),
                _ => {
                    return Err(Error::Malformed {
                        line: i + 1,
                        reason: "expected sentence<TAB>role or src<TAB>tgt<TAB>origin<TAB>role".into(),
                    })
                }
            };
            let s = Sentence::parse(sentence);
            match role.trim() {
                "original" => d.original.push(s),
                "roundtrip" => d.roundtrip.push(s),
                "src_translated" => d.src_translated.push(s),
                other => {
                    return Err(Error::Malformed {
                        line: i + 1,
                        reason: format!("unknown role {other:?}"),
                    })
                }
            }
        }
        d.check()?;
        Ok(d)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("original", &self.original),
            ("roundtrip", &self.roundtrip),
            ("src_translated", &self.src_translated),
        ] {
            if v.is_empty() {
                return Err(Error::EmptyInput(format!("missing required corpus role {name}")));
            }
        }
        if self.original.len() != self.roundtrip.len() {
            return Err(Error::LineCountMismatch {
                src: self.original.len(),
                tgt: self.roundtrip.len(),
            });
        }
        Ok(())
    }
}

/// For every concept, the most probable concept of its most likely topic in
/// `domain`: a stand-in for the lexical normalization of translated text.
fn canonical_map(world: &World, domain: Domain) -> Vec<usize> {
    let d = match domain {
        Domain::S => 0,
        Domain::T => 1,
    };
    let prior = &world.topic_prior[d];
    let dists = &world.word_dist[d];
    let head: Vec<usize> = dists
        .iter()
        .map(|p| (0..p.len()).fold(0, |b, c| if p[c] > p[b] { c } else { b }))
        .collect();
    (0..world.vocab_size())
        .map(|c| {
            let z = (0..prior.len()).fold(0, |b, z| {
                if prior[z] * dists[z][c] > prior[b] * dists[b][c] {
                    z
                } else {
                    b
                }
            });
            head[z]
        })
        .collect()
}

/// Synthetic probe data: `n` target-domain sentences, their oracle round
/// trips, and `n` translated source-domain sentences. Translated text has
/// each token replaced with probability `perturbation` by the head word of
/// its most likely topic.
pub fn synthetic_probe_data(world: &World, n: usize, perturbation: f64, seed: u64) -> Result<ProbeData> {
    if !(0.0..=1.0).contains(&perturbation) {
        return Err(Error::InvalidArgument(format!("perturbation {perturbation} is outside [0, 1]")));
    }
    let len = (5, 15);
    let canon = [canonical_map(world, Domain::S), canonical_map(world, Domain::T)];
    let perturb = |s: &Sentence, d: usize, purpose: &str, i: usize| -> Sentence {
        let mut r = rng::stream(seed, purpose, i as u64);
        s.iter()
            .map(|t| {
                if perturbation > 0.0 && r.random::<f64>() < perturbation {
                    let c = world.concept_of(t, Language::Target).expect("generated token");
                    world.word(canon[d][c], Language::Target)
                } else {
                    t.to_owned()
                }
            })
            .collect()
    };
    let zt = world.sample_concepts(DomainMix::Pure(Domain::T), n, len, seed, "probe.t");
    let zs = world.sample_concepts(DomainMix::Pure(Domain::S), n, len, seed, "probe.s");
    let mut d = ProbeData::default();
    for (i, z) in zt.iter().enumerate() {
        let tgt = world.realize(z, Language::Target);
        let back = world.oracle_translate(&tgt, Direction::TargetToSource)?;
        let rt = world.oracle_translate(&back, Direction::SourceToTarget)?;
        d.roundtrip.push(perturb(&rt, 1, "probe.rt", i));
        d.original.push(tgt);
    }
    for (i, z) in zs.iter().enumerate() {
        let tr = world.oracle_translate(&world.realize(z, Language::Source), Direction::SourceToTarget)?;
        d.src_translated.push(perturb(&tr, 0, "probe.st", i));
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub k: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub test_fraction: f64,
    /// Z-score feature columns using training-split statistics.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            k: 50,
            lambda: 1e-3,
            epochs: 300,
            lr: 1.0,
            test_fraction: 0.2,
            standardize: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub tfidf_translationese: f64,
    pub topic_translationese: f64,
    pub topic_origin: f64,
    pub n_translationese: usize,
    pub n_origin: usize,
    pub split_seed: u64,
}

/// Standardize columns with statistics from `train` rows.
fn standardize(x: &DMatrix<f64>, train: &[usize]) -> DMatrix<f64> {
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let mean = train.iter().map(|&i| x[(i, j)]).sum::<f64>() / train.len() as f64;
        let var = train.iter().map(|&i| (x[(i, j)] - mean).powi(2)).sum::<f64>() / train.len() as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..x.nrows() {
            out[(i, j)] = (x[(i, j)] - mean) / sd;
        }
    }
    out
}

fn rows(x: &DMatrix<f64>, ix: &[usize]) -> DMatrix<f64> {
    x.select_rows(ix)
}

/// Train on the items in `train_groups` and report accuracy on the rest.
/// Each group lists the row indices of one underlying sentence.
fn probe_accuracy(x: &DMatrix<f64>, y: &[bool], groups: &[Vec<usize>], cfg: &ProbeConfig) -> Result<f64> {
    let fractions = [1.0 - cfg.test_fraction, cfg.test_fraction];
    let parts = split_items(groups, &fractions, cfg.seed)?;
    let train: Vec<usize> = parts[0].iter().flatten().copied().collect();
    let test: Vec<usize> = parts[1].iter().flatten().copied().collect();
    if test.is_empty() {
        return Err(Error::InsufficientData {
            what: "probe test split".into(),
            requested: 1,
            available: 0,
        });
    }
    let xs = if cfg.standardize { standardize(x, &train) } else { x.clone() };
    let y_train: Vec<bool> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<bool> = test.iter().map(|&i| y[i]).collect();
    let m = train_linear(&rows(&xs, &train), &y_train, cfg.lambda, cfg.epochs, cfg.lr)?;
    Ok(m.accuracy(&rows(&xs, &test), &y_test))
}

/// Translationese probes on TF-IDF and topic features, and the origin probe
/// on topic features. TF-IDF statistics and the topic model are fit on all
/// probe sentences.
pub fn run_probes(data: &ProbeData, cfg: &ProbeConfig) -> Result<ProbeReport> {
    data.check()?;
    let n = data.original.len();
    let m = data.src_translated.len();
    let all: Vec<Sentence> = data
        .original
        .iter()
        .chain(&data.roundtrip)
        .chain(&data.src_translated)
        .cloned()
        .collect();
    let vocab = build_vocab(&all, 1, None)?;
    let w = build_tfidf(&all, &vocab, &TfidfConfig::default()).matrix;
    let topics = fit_lsa(&w, cfg.k, SvdMethod::default(), cfg.seed)?;
    let tfidf = w.to_dense();
    let topic = topics.topic_features(&w)?;

    // Translationese: original (0) vs round trip (1), split by sentence.
    let tr_rows: Vec<usize> = (0..2 * n).collect();
    let tr_y: Vec<bool> = (0..2 * n).map(|i| i >= n).collect();
    let tr_groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i, n + i]).collect();
    let tfidf_tr = rows(&tfidf, &tr_rows);
    let topic_tr = rows(&topic, &tr_rows);

    // Origin: original target-domain text (0) vs translated source-domain
    // text (1).
    let or_rows: Vec<usize> = (0..n).chain(2 * n..2 * n + m).collect();
    let or_y: Vec<bool> = (0..n + m).map(|i| i >= n).collect();
    let or_groups: Vec<Vec<usize>> = (0..n + m).map(|i| vec![i]).collect();
    let topic_or = rows(&topic, &or_rows);

    Ok(ProbeReport {
        tfidf_translationese: probe_accuracy(&tfidf_tr, &tr_y, &tr_groups, cfg)?,
        topic_translationese: probe_accuracy(&topic_tr, &tr_y, &tr_groups, cfg)?,
        topic_origin: probe_accuracy(&topic_or, &or_y, &or_groups, cfg)?,
        n_translationese: 2 * n,
        n_origin: n + m,
        split_seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{make_world, WorldConfig};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn separable_points() {
        let x = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let y = [false, true];
        let m = train_linear(&x, &y, 0.0, 100, 1.0).unwrap();
        assert_eq!(m.accuracy(&x, &y), 1.0);
        assert!(m.trace.windows(2).all(|t| t[1] <= t[0]));
    }

    #[test]
    fn strong_regularization_predicts_majority() {
        let x = DMatrix::from_row_slice(3, 1, &[-1.0, 1.0, 2.0]);
        let y = [false, true, true];
        let m = train_linear(&x, &y, 1e9, 200, 1.0).unwrap();
        assert!(m.weights.norm() < 1e-6);
        assert_eq!(m.predict(&x), vec![true, true, true]);
    }

    #[test]
    fn input_validation() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(matches!(train_linear(&x, &[true, true], 0.0, 1, 1.0), Err(Error::SingleClass)));
        assert!(train_linear(&x, &[true], 0.0, 1, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng::stream(1, "test", 0);
        let x = DMatrix::from_fn(40, 10, |_, _| StandardNormal.sample(&mut r));
        let y: Vec<bool> = (0..40).map(|_| r.random::<bool>()).collect();
        let w = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut r));
        let b = 0.3;
        let lambda = 0.1;
        let (_, gw, gb) = objective(&x, &y, &w, b, lambda);
        let h = 1e-6;
        let mut fd = DVector::zeros(10);
        for j in 0..10 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            fd[j] = (objective(&x, &y, &wp, b, lambda).0 - objective(&x, &y, &wm, b, lambda).0) / (2.0 * h);
        }
        let fdb = (objective(&x, &y, &w, b + h, lambda).0 - objective(&x, &y, &w, b - h, lambda).0) / (2.0 * h);
        let rel = (&gw - &fd).norm() / fd.norm();
        assert!(rel <= 1e-4, "{rel}");
        assert!((gb - fdb).abs() <= 1e-4 * fdb.abs().max(1e-3));
    }

    fn world(seed: u64) -> World {
        make_world(WorldConfig {
            n_topics: 8,
            vocab_size: 400,
            word_divergence: 0.5,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_perturbation_is_chance() {
        let d = synthetic_probe_data(&world(0), 200, 0.0, 0).unwrap();
        assert_eq!(d.original, d.roundtrip);
        let r = run_probes(&d, &ProbeConfig { k: 10, ..Default::default() }).unwrap();
        assert_eq!(r.tfidf_translationese, 0.5);
        assert_eq!(r.topic_translationese, 0.5);
    }

    #[test]
    fn probes_are_deterministic() {
        let d = synthetic_probe_data(&world(2), 150, 0.3, 2).unwrap();
        let cfg = ProbeConfig { k: 10, seed: 2, ..Default::default() };
        let r = run_probes(&d, &cfg).unwrap();
        assert_eq!(r, run_probes(&d, &cfg).unwrap());
        for a in [r.tfidf_translationese, r.topic_translationese, r.topic_origin] {
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn missing_role_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        fs::write(&path, "a b\toriginal\na c\troundtrip\n").unwrap();
        let err = ProbeData::load_tsv(&path).unwrap_err();
        assert!(err.to_string().contains("src_translated"), "{err}");
        fs::write(&path, "a b\toriginal\na c\troundtrip\nx\tS\tT\tsrc_translated\n").unwrap();
        let d = ProbeData::load_tsv(&path).unwrap();
        assert_eq!(d.src_translated, vec![Sentence::parse("S")]);
    }
}
