//! Benchmark pipelines and parameter sweeps producing the results table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::{
    back_translate, combine_st_bt, self_train, train_reverse, AugmentConfig, AugmentedDataset, CombineConfig,
    NoiseParams, StSchedule,
};
use crate::corpus::{LabeledParallelCorpus, MonoCorpus, Origin};
use crate::error::{Error, Result};
use crate::rng;
use crate::stdm::{stdm_score, StdmConfig};
use crate::synthgen::{build_benchmark, make_world, Benchmark, BenchmarkConfig, BenchmarkSizes, WorldConfig, WorldSource};
use crate::translator::{corpus_bleu, LexConfig, Translator, TranslatorFactory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Baseline,
    Bt,
    St,
    StBt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Bt, Method::St, Method::StBt];

    pub fn label(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Bt => "bt",
            Method::St => "st",
            Method::StBt => "stbt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// One translation task: training data, monolingual data on both sides and
/// a test set, all oriented in the translation direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub parallel: LabeledParallelCorpus,
    pub mono_src: MonoCorpus,
    pub mono_tgt: MonoCorpus,
    pub test: LabeledParallelCorpus,
}

impl Task {
    pub fn forward(b: &Benchmark) -> Self {
        Task {
            parallel: b.parallel.clone(),
            mono_src: b.mono_src.clone(),
            mono_tgt: b.mono_tgt.clone(),
            test: b.test.clone(),
        }
    }

    /// Translate target to source, evaluated on the reverse test set.
    pub fn reverse(b: &Benchmark) -> Self {
        Task {
            parallel: b.parallel.reversed(),
            mono_src: b.mono_tgt.clone(),
            mono_tgt: b.mono_src.clone(),
            test: b.test_reverse.reversed(),
        }
    }

    /// Keep only the source-originating parallel pairs and back-translate
    /// their own target side instead of the target monolingual data.
    pub fn in_domain_only(b: &Benchmark) -> Self {
        let parallel = LabeledParallelCorpus::new(
            b.parallel
                .with_origin(Origin::SourceOriginating)
                .cloned()
                .collect(),
        );
        let mono_tgt = MonoCorpus::new("tgt", parallel.pairs.iter().map(|p| p.tgt.clone()).collect());
        Task {
            parallel,
            mono_src: b.mono_src.clone(),
            mono_tgt,
            test: b.test.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub lex: LexConfig,
    pub augment: AugmentConfig,
    pub noise: NoiseParams,
    pub schedule_fractions: Vec<f64>,
    pub bleu_order: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lex: LexConfig::default(),
            augment: AugmentConfig::default(),
            noise: NoiseParams::default(),
            schedule_fractions: vec![0.25, 0.5, 1.0],
            bleu_order: 4,
        }
    }
}

fn evaluate(model: &dyn Translator, test: &LabeledParallelCorpus, order: usize) -> Result<f64> {
    let src: Vec<_> = test.pairs.iter().map(|p| p.src.clone()).collect();
    let refs: Vec<_> = test.pairs.iter().map(|p| p.tgt.clone()).collect();
    let hyps: Vec<_> = model.translate(&src)?.into_iter().map(|t| t.sentence).collect();
    Ok(corpus_bleu(&hyps, &refs, order)?.bleu)
}

/// Train with `method` on `task` and return test BLEU.
pub fn run_method(task: &Task, method: Method, cfg: &PipelineConfig, seed: u64) -> Result<f64> {
    let factory: &dyn TranslatorFactory = &cfg.lex;
    let noise = NoiseParams {
        seed: rng::derive(seed, rng::tag("noise")),
        ..cfg.noise
    };
    let model = match method {
        Method::Baseline => AugmentedDataset::from_gold(&task.parallel, 1.0).train(factory)?,
        Method::Bt => {
            let rev = train_reverse(&task.parallel, factory)?;
            back_translate(&task.parallel, &task.mono_tgt, rev.as_ref(), &cfg.augment)?.train(factory)?
        }
        Method::St => {
            let schedule = StSchedule::from_fractions(&cfg.schedule_fractions, task.mono_src.len());
            self_train(&task.parallel, &task.mono_src, factory, &schedule, &noise, &cfg.augment)?.model
        }
        Method::StBt => {
            let c = CombineConfig {
                augment: cfg.augment,
                schedule_fractions: cfg.schedule_fractions.clone(),
                noise,
            };
            combine_st_bt(&task.parallel, &task.mono_src, &task.mono_tgt, factory, factory, &c)?.train(factory)?
        }
    };
    evaluate(model.as_ref(), &task.test, cfg.bleu_order)
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    Alpha,
    MonoSize,
    InDomainOnly,
    Beta,
}

impl SweepKind {
    pub fn label(self) -> &'static str {
        match self {
            SweepKind::Alpha => "alpha",
            SweepKind::MonoSize => "mono_size",
            SweepKind::InDomainOnly => "in_domain_only",
            SweepKind::Beta => "beta",
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepKind::Alpha, SweepKind::MonoSize, SweepKind::InDomainOnly, SweepKind::Beta]
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Grid values: α for the alpha sweep, monolingual size for the size
    /// sweep, β for the beta sweep. Ignored by the in-domain sweep.
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub world: WorldConfig,
    pub benchmark: BenchmarkConfig,
    pub pipeline: PipelineConfig,
    pub stdm: StdmConfig,
}

impl SweepConfig {
    pub fn new(kind: SweepKind) -> Self {
        let grid = match kind {
            SweepKind::Alpha => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            SweepKind::MonoSize => vec![2500.0, 5000.0, 10_000.0, 20_000.0],
            SweepKind::InDomainOnly => vec![],
            SweepKind::Beta => vec![0.0, 0.25, 0.5, 0.75, 1.0],
        };
        SweepConfig {
            kind,
            grid,
            seeds: vec![0, 1, 2],
            methods: Method::ALL.to_vec(),
            world: WorldConfig::default(),
            benchmark: BenchmarkConfig {
                sizes: BenchmarkSizes::default(),
                ..Default::default()
            },
            pipeline: PipelineConfig::default(),
            stdm: StdmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: String,
    pub param: String,
    pub seed: u64,
    pub method: String,
    /// `None` when the grid point failed.
    pub bleu: Option<f64>,
    pub score_stdm: Option<f64>,
    pub n_parallel: usize,
    pub n_mono_s: usize,
    pub n_mono_t: usize,
}

pub const CSV_HEADER: &str = "sweep,param,seed,method,bleu,score_stdm,n_parallel,n_mono_s,n_mono_t";

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.6}"),
        None => "failed".to_owned(),
    }
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.sweep,
            self.param,
            self.seed,
            self.method,
            fmt_opt(self.bleu),
            fmt_opt(self.score_stdm),
            self.n_parallel,
            self.n_mono_s,
            self.n_mono_t
        )
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Parse a table written by [`to_csv`].
pub fn from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Malformed {
            line: 1,
            reason: "unexpected results header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Malformed {
                line: i + 2,
                reason: "bad results row".into(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad());
            }
            let opt = |s: &str| -> Result<Option<f64>> {
                if s == "failed" {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad())
                }
            };
            Ok(ResultRow {
                sweep: f[0].to_owned(),
                param: f[1].to_owned(),
                seed: f[2].parse().map_err(|_| bad())?,
                method: f[3].to_owned(),
                bleu: opt(f[4])?,
                score_stdm: opt(f[5])?,
                n_parallel: f[6].parse().map_err(|_| bad())?,
                n_mono_s: f[7].parse().map_err(|_| bad())?,
                n_mono_t: f[8].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// One grid point: a benchmark, the tasks to run on it and their labels.
type TaskBuilder = fn(&Benchmark) -> Task;

struct GridPoint {
    param: String,
    bench_cfg: BenchmarkConfig,
    /// `(method label suffix, task builder)`.
    variants: Vec<(&'static str, TaskBuilder)>,
    param_suffix: Vec<&'static str>,
}

fn grid_points(cfg: &SweepConfig) -> Vec<GridPoint> {
    let base = &cfg.benchmark;
    let fwd: (&'static str, fn(&Benchmark) -> Task) = ("", Task::forward);
    match cfg.kind {
        SweepKind::Alpha => cfg
            .grid
            .iter()
            .map(|&alpha| GridPoint {
                param: format!("{alpha}"),
                bench_cfg: BenchmarkConfig { alpha, ..base.clone() },
                variants: vec![fwd],
                param_suffix: vec![""],
            })
            .collect(),
        SweepKind::MonoSize => cfg
            .grid
            .iter()
            .map(|&n| {
                let n = n.round() as usize;
                GridPoint {
                    param: n.to_string(),
                    bench_cfg: BenchmarkConfig {
                        sizes: BenchmarkSizes {
                            n_mono_s: n,
                            n_mono_t: n,
                            ..base.sizes
                        },
                        ..base.clone()
                    },
                    variants: vec![fwd],
                    param_suffix: vec![""],
                }
            })
            .collect(),
        SweepKind::InDomainOnly => vec![GridPoint {
            param: String::new(),
            bench_cfg: base.clone(),
            variants: vec![fwd, ("", Task::in_domain_only)],
            param_suffix: vec!["mixed", "in_domain"],
        }],
        SweepKind::Beta => cfg
            .grid
            .iter()
            .map(|&beta| GridPoint {
                param: format!("{beta}"),
                bench_cfg: BenchmarkConfig { beta, ..base.clone() },
                variants: vec![fwd, ("_rev", Task::reverse)],
                param_suffix: vec!["", ""],
            })
            .collect(),
    }
}

/// Run every grid point × seed × method in grid order. A failing
/// component marks the affected rows as failed instead of aborting the
/// sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for point in grid_points(cfg) {
        for &seed in &cfg.seeds {
            let world = make_world(WorldConfig {
                seed,
                ..cfg.world.clone()
            });
            let bench_cfg = BenchmarkConfig {
                seed,
                ..point.bench_cfg.clone()
            };
            let bench = world.and_then(|w| {
                build_benchmark(
                    &mut WorldSource {
                        world: &w,
                        len_range: bench_cfg.len_range,
                        seed,
                    },
                    bench_cfg.clone(),
                )
            });
            let score = bench.as_ref().ok().and_then(|b| {
                stdm_score(&b.parallel, "benchmark", &StdmConfig { seed, ..cfg.stdm.clone() })
                    .map_err(|e| log::warn!("STDM score failed: {e}"))
                    .ok()
                    .map(|r| r.score)
            });
            if let Err(e) = &bench {
                log::error!("benchmark for {} = {} failed: {e}", cfg.kind.label(), point.param);
            }
            for ((suffix, build), psuffix) in point.variants.iter().zip(&point.param_suffix) {
                let task = bench.as_ref().ok().map(build);
                for &method in &cfg.methods {
                    let bleu = task.as_ref().and_then(|t| {
                        run_method(t, method, &cfg.pipeline, seed)
                            .map_err(|e| log::error!("{method} at {} failed: {e}", point.param))
                            .ok()
                    });
                    let param = if psuffix.is_empty() {
                        point.param.clone()
                    } else {
                        psuffix.to_string()
                    };
                    rows.push(ResultRow {
                        sweep: cfg.kind.label().to_owned(),
                        param,
                        seed,
                        method: format!("{method}{suffix}"),
                        bleu,
                        score_stdm: score,
                        n_parallel: task.as_ref().map_or(0, |t| t.parallel.len()),
                        n_mono_s: task.as_ref().map_or(0, |t| t.mono_src.len()),
                        n_mono_t: task.as_ref().map_or(0, |t| t.mono_tgt.len()),
                    });
                }
            }
        }
    }
    rows
}

/// Mean BLEU per `(param, method)` over seeds, skipping failed rows.
pub fn mean_bleu(rows: &[ResultRow], param: &str, method: &str) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.param == param && r.method == method)
        .filter_map(|r| r.bleu)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// BLEU of one `(param, seed, method)` cell.
pub fn bleu_at(rows: &[ResultRow], param: &str, seed: u64, method: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r.param == param && r.seed == seed && r.method == method)
        .and_then(|r| r.bleu)
}
