use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use stdm_core::augment::{
    back_translate, combine_st_bt, self_train, AugmentConfig, AugmentedDataset, CombineConfig, NoiseParams, StSchedule,
};
use stdm_core::corpus::{load_mono, load_parallel, load_tsv, write_mono, LabeledParallelCorpus, MonoCorpus, Sentence};
use stdm_core::experiment::{run_sweep, to_csv, Method, PipelineConfig, SweepConfig, SweepKind};
use stdm_core::lsa::SvdMethod;
use stdm_core::probe::{run_probes, synthetic_probe_data, ProbeConfig, ProbeData};
use stdm_core::stdm::{stdm_multi, stdm_score, StdmConfig};
use stdm_core::synthgen::{
    build_benchmark, make_world, Benchmark, BenchmarkConfig, BenchmarkSizes, RealCorporaSource, WorldConfig,
    WorldSource,
};
use stdm_core::textproc::{learn_bpe, BpeModel, TfidfConfig};
use stdm_core::translator::{
    corpus_bleu, train_lex, ExternalTranslator, LexConfig, LexModel, TrainPair, Translator, TranslatorFactory,
};

use crate::args::*;
use crate::error::CliError;
use crate::run::{write_text, Run};

type Res<T = ()> = Result<T, CliError>;

/// Create a run directory, run `body` in it and always write the manifest.
fn with_run<A: Serialize>(
    run_args: &RunArgs,
    command: &str,
    args: &A,
    seeds: Vec<u64>,
    body: impl FnOnce(&mut Run) -> Res,
) -> Res {
    let name = run_args.name.clone().unwrap_or_else(|| command.replace(' ', "-"));
    let mut run = Run::create(&run_args.runs_dir, &name, command, serde_json::to_value(args)?, seeds)?;
    let status = body(&mut run);
    let dir = run.finish(&status)?;
    eprintln!("run directory: {}", dir.display());
    status
}

/// Write to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn world_config(w: &WorldArgs, seed: u64) -> WorldConfig {
    WorldConfig {
        n_topics: w.n_topics,
        vocab_size: w.vocab_size,
        topic_divergence: w.topic_divergence,
        word_divergence: w.word_divergence,
        topic_concentration: w.topic_concentration,
        word_concentration: w.word_concentration,
        reorder: w.reorder,
        seed,
    }
}

fn benchmark_config(s: &SizeArgs, m: &MixArgsCommon, seed: u64) -> BenchmarkConfig {
    BenchmarkConfig {
        alpha: m.alpha,
        beta: m.beta,
        sizes: BenchmarkSizes {
            n_parallel: s.n_parallel,
            n_mono_s: s.n_mono_s,
            n_mono_t: s.n_mono_t,
            n_test: s.n_test,
        },
        len_range: (s.min_len, s.max_len),
        seed,
    }
}

fn stdm_config(a: &StdmArgs, seed: u64) -> StdmConfig {
    StdmConfig {
        k: a.k,
        method: match a.svd {
            SvdKind::Randomized => SvdMethod::default(),
            SvdKind::Dense => SvdMethod::Dense,
        },
        seed,
        tfidf: TfidfConfig {
            sublinear_tf: a.sublinear_tf,
            max_df: a.max_df,
        },
        group: a.group,
        min_count: a.min_count,
    }
}

fn augment_config(p: &PipelineArgs) -> AugmentConfig {
    AugmentConfig {
        parallel_weight: p.parallel_weight,
        tagging: !p.no_tagging,
    }
}

fn noise(p: &PipelineArgs, seed: u64) -> NoiseParams {
    NoiseParams {
        p_drop: p.p_drop,
        p_blank: p.p_blank,
        window: p.window,
        seed,
    }
}

fn load_input(input: &ParallelInput, run: &mut Run) -> Res<LabeledParallelCorpus> {
    let corpus = match (&input.tsv, &input.src, &input.tgt) {
        (Some(tsv), _, _) => {
            run.input(tsv)?;
            load_tsv(tsv)?.0
        }
        (None, Some(src), Some(tgt)) => {
            run.input(src)?;
            run.input(tgt)?;
            if let Some(o) = &input.origin {
                run.input(o)?;
            }
            load_parallel(src, tgt, input.origin.as_deref())?.0
        }
        _ => return Err(CliError::Usage("give a parallel corpus with --tsv or --src/--tgt".into())),
    };
    Ok(corpus)
}

fn load_mono_input(path: &Path, lang: &str, run: &mut Run) -> Res<MonoCorpus> {
    run.input(path)?;
    Ok(load_mono(path, lang)?.0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Res {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_benchmark(run: &mut Run, bench: &Benchmark, out: &Option<PathBuf>) -> Res<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| run.artifact("benchmark"));
    fs::create_dir_all(&dir).map_err(|e| CliError::write(&dir, e))?;
    bench.write_dir(&dir)?;
    run.output(&dir)?;
    Ok(dir)
}

pub fn gen(a: &GenArgs) -> Res {
    with_run(&a.run, "gen", a, vec![a.seed], |run| {
        let world = make_world(world_config(&a.world, a.seed))?;
        let cfg = benchmark_config(&a.sizes, &a.mix, a.seed);
        let mut source = WorldSource {
            world: &world,
            len_range: cfg.len_range,
            seed: a.seed,
        };
        let bench = build_benchmark(&mut source, cfg)?;
        let dir = write_benchmark(run, &bench, &a.out)?;
        let world_path = dir.join("world.json");
        write_text(&world_path, &world.to_json()?)?;
        run.output(&world_path)?;
        emit(&format!("{}\n", dir.display()));
        Ok(())
    })
}

pub fn mix(a: &MixArgs) -> Res {
    with_run(&a.run, "mix", a, vec![a.seed], |run| {
        run.input(&a.domain_s)?;
        run.input(&a.domain_t)?;
        let s = load_tsv(&a.domain_s)?.0;
        let t = load_tsv(&a.domain_t)?.0;
        let mut source = RealCorporaSource::new(s, t, a.seed);
        let bench = build_benchmark(&mut source, benchmark_config(&a.sizes, &a.mix, a.seed))?;
        let dir = write_benchmark(run, &bench, &a.out)?;
        emit(&format!("{}\n", dir.display()));
        Ok(())
    })
}

pub fn score(a: &ScoreArgs) -> Res {
    with_run(&a.run, "score", a, vec![a.seed], |run| {
        let (corpus, name) = match &a.benchmark {
            Some(dir) => {
                run.input(dir)?;
                (Benchmark::read_dir(dir)?.parallel, dir.display().to_string())
            }
            None => {
                let name = a
                    .input
                    .tsv
                    .as_ref()
                    .or(a.input.tgt.as_ref())
                    .map(|p| p.display().to_string())
                    .unwrap_or_default();
                (load_input(&a.input, run)?, name)
            }
        };
        let report = stdm_score(&corpus, &name, &stdm_config(&a.stdm, a.seed))?;
        let path = run.artifact("report.json");
        write_json(&path, &report)?;
        run.output(&path)?;
        emit(&format!("{}\n", serde_json::to_string_pretty(&report)?));
        Ok(())
    })
}

#[derive(Serialize)]
#[serde(untagged)]
enum MultiEntry {
    Ok(stdm_core::stdm::StdmReport),
    Failed { corpus: String, error: String },
}

pub fn score_multi(a: &ScoreMultiArgs) -> Res {
    with_run(&a.run, "score-multi", a, vec![a.seed], |run| {
        let mut datasets = Vec::new();
        for spec in &a.datasets {
            let (name, path) = match spec.split_once('=') {
                Some((n, p)) => (n.to_owned(), PathBuf::from(p)),
                None => {
                    let p = PathBuf::from(spec);
                    let n = p.file_stem().map_or_else(|| spec.clone(), |s| s.to_string_lossy().into_owned());
                    (n, p)
                }
            };
            run.input(&path)?;
            datasets.push((name, load_tsv(&path)?.0));
        }
        let results = stdm_multi(&datasets, &stdm_config(&a.stdm, a.seed))?;
        let entries: Vec<MultiEntry> = results
            .into_iter()
            .zip(&datasets)
            .map(|(r, (name, _))| match r {
                Ok(r) => MultiEntry::Ok(r),
                Err(e) => MultiEntry::Failed {
                    corpus: name.clone(),
                    error: e.to_string(),
                },
            })
            .collect();
        let path = run.artifact("reports.json");
        write_json(&path, &entries)?;
        run.output(&path)?;
        emit(&format!("{}\n", serde_json::to_string_pretty(&entries)?));
        Ok(())
    })
}

pub fn bpe(cmd: &BpeCmd) -> Res {
    match cmd {
        BpeCmd::Learn(a) => with_run(&a.run, "bpe learn", a, vec![], |run| {
            let corpus = load_mono_input(&a.input, "text", run)?;
            let model = learn_bpe(&corpus, a.merges);
            let out = a.out.clone().unwrap_or_else(|| run.artifact("bpe.txt"));
            write_text(&out, &model.to_text())?;
            run.output(&out)?;
            eprintln!("learned {} merges", model.merges().len());
            Ok(())
        }),
        BpeCmd::Apply(a) => with_run(&a.run, "bpe apply", a, vec![], |run| {
            run.input(&a.model)?;
            let text = fs::read_to_string(&a.model).map_err(|e| CliError::Data(format!("{}: {e}", a.model.display())))?;
            let model = BpeModel::from_text(&text)?;
            let corpus = load_mono_input(&a.input, "text", run)?;
            let mut unk = 0;
            let sentences = corpus
                .sentences
                .iter()
                .map(|s| {
                    if a.decode {
                        model.decode(s)
                    } else {
                        let o = model.apply(s);
                        unk += o.unk_count;
                        o.sentence
                    }
                })
                .collect();
            if unk > 0 {
                log::warn!("{unk} characters outside the learned alphabet became unknown symbols");
            }
            let out = a.out.clone().unwrap_or_else(|| run.artifact("segmented.txt"));
            write_mono(&out, &MonoCorpus::new(corpus.language, sentences))?;
            run.output(&out)?;
            Ok(())
        }),
    }
}

fn load_lex(path: &Path) -> Res<LexModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(LexModel::from_text(&text)?)
}

pub fn train(a: &TrainArgs) -> Res {
    with_run(&a.run, "train", a, vec![], |run| {
        let pairs: Vec<TrainPair> = match &a.data {
            Some(path) => {
                run.input(path)?;
                AugmentedDataset::read_tsv(path)?.train_pairs()
            }
            None => {
                let mut c = load_input(&a.input, run)?;
                if a.reverse {
                    c = c.reversed();
                }
                AugmentedDataset::from_gold(&c, 1.0).train_pairs()
            }
        };
        let model = train_lex(&pairs, LexConfig { epochs: a.epochs })?;
        let out = a.out.clone().unwrap_or_else(|| run.artifact("model.txt"));
        write_text(&out, &model.to_text())?;
        run.output(&out)?;
        if let Some(ll) = model.log_likelihood.last() {
            eprintln!("trained on {} pairs, final log-likelihood {ll:.4}", pairs.len());
        }
        Ok(())
    })
}

fn read_sentences(input: &Option<PathBuf>) -> Res<Vec<Sentence>> {
    let mut text = String::new();
    match input {
        Some(p) => {
            text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        }
        None => {
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::Data(format!("stdin: {e}")))?;
        }
    }
    Ok(text.lines().map(Sentence::parse).collect())
}

fn format_translations(model: &LexModel, sentences: &[Sentence], scores: bool) -> Res<String> {
    let mut out = String::new();
    for t in model.translate(sentences)? {
        if scores {
            out.push_str(&format!("{}\t{}\n", t.sentence, t.score));
        } else {
            out.push_str(&format!("{}\n", t.sentence));
        }
    }
    Ok(out)
}

pub fn translate(a: &TranslateArgs) -> Res {
    if a.protocol {
        let model = load_lex(&a.model)?;
        let stdin = io::stdin();
        let mut stdout = io::BufWriter::new(io::stdout().lock());
        for line in stdin.lock().lines() {
            let line = line.map_err(|e| CliError::Data(format!("stdin: {e}")))?;
            let t = model.translate_one(&Sentence::parse(&line));
            writeln!(stdout, "{}\t{}", t.sentence, t.score).map_err(|e| CliError::write("stdout", e))?;
        }
        return stdout.flush().map_err(|e| CliError::write("stdout", e));
    }
    with_run(&a.run, "translate", a, vec![], |run| {
        run.input(&a.model)?;
        if let Some(p) = &a.input {
            run.input(p)?;
        }
        let model = load_lex(&a.model)?;
        let text = format_translations(&model, &read_sentences(&a.input)?, a.scores)?;
        match &a.output {
            Some(p) => {
                write_text(p, &text)?;
                run.output(p)?;
            }
            None => emit(&text),
        }
        Ok(())
    })
}

pub fn bleu(a: &BleuArgs) -> Res {
    with_run(&a.run, "bleu", a, vec![], |run| {
        run.input(&a.hyp)?;
        run.input(&a.reference)?;
        let hyps = read_sentences(&Some(a.hyp.clone()))?;
        let refs = read_sentences(&Some(a.reference.clone()))?;
        let report = corpus_bleu(&hyps, &refs, a.order)?;
        let path = run.artifact("bleu.json");
        write_json(&path, &report)?;
        run.output(&path)?;
        emit(&format!("BLEU = {:.2}\n", report.bleu));
        Ok(())
    })
}

/// A translator that was trained elsewhere; training data is ignored.
enum Pretrained {
    Lex(LexModel),
    External(ExternalTranslator),
}

impl TranslatorFactory for Pretrained {
    fn train(&self, _: &[TrainPair]) -> stdm_core::Result<Box<dyn Translator>> {
        Ok(match self {
            Pretrained::Lex(m) => Box::new(m.clone()),
            Pretrained::External(t) => Box::new(t.clone()),
        })
    }
}

fn reverse_factory(a: &AugmentArgs, run: &mut Run) -> Res<Box<dyn TranslatorFactory>> {
    let lex = LexConfig {
        epochs: a.pipeline.epochs,
    };
    Ok(match (&a.reverse_model, &a.reverse_command) {
        (Some(p), _) => {
            run.input(p)?;
            Box::new(Pretrained::Lex(load_lex(p)?))
        }
        (None, Some(cmd)) => {
            let command = shlex::split(cmd)
                .filter(|c| !c.is_empty())
                .ok_or_else(|| CliError::Usage(format!("cannot parse translator command {cmd:?}")))?;
            Box::new(Pretrained::External(ExternalTranslator { command }))
        }
        (None, None) => Box::new(lex),
    })
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str, what: &str) -> Res<&'a PathBuf> {
    p.as_ref().ok_or_else(|| CliError::Usage(format!("{what} needs {flag}")))
}

pub fn augment(cmd: &AugmentCmd) -> Res {
    let (label, a) = match cmd {
        AugmentCmd::Bt(a) => ("bt", a),
        AugmentCmd::St(a) => ("st", a),
        AugmentCmd::Stbt(a) => ("stbt", a),
    };
    with_run(&a.run, &format!("augment {label}"), a, vec![a.seed], |run| {
        let p = load_input(&a.input, run)?;
        let lex = LexConfig {
            epochs: a.pipeline.epochs,
        };
        let cfg = augment_config(&a.pipeline);
        let noise = noise(&a.pipeline, a.seed);
        let ds = match cmd {
            AugmentCmd::Bt(_) => {
                let m_t = load_mono_input(need(&a.mono_tgt, "--mono-tgt", "back-translation")?, "tgt", run)?;
                let rev = reverse_factory(a, run)?.train(&AugmentedDataset::from_gold(&p.reversed(), 1.0).train_pairs())?;
                back_translate(&p, &m_t, rev.as_ref(), &cfg)?
            }
            AugmentCmd::St(_) => {
                let m_s = load_mono_input(need(&a.mono_src, "--mono-src", "self-training")?, "src", run)?;
                let schedule = StSchedule::from_fractions(&a.pipeline.schedule, m_s.len());
                let out = self_train(&p, &m_s, &lex, &schedule, &noise, &cfg)?;
                let path = run.artifact("st_iterations.tsv");
                let mut text = String::from("iteration\tselected\tmean_score_selected\tmean_score_rejected\n");
                for (i, it) in out.iterations.iter().enumerate() {
                    let rej = it.mean_score_rejected.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"));
                    text.push_str(&format!("{}\t{}\t{:.6}\t{rej}\n", i + 1, it.selected, it.mean_score_selected));
                }
                write_text(&path, &text)?;
                run.output(&path)?;
                out.dataset
            }
            AugmentCmd::Stbt(_) => {
                let m_s = load_mono_input(need(&a.mono_src, "--mono-src", "stbt")?, "src", run)?;
                let m_t = load_mono_input(need(&a.mono_tgt, "--mono-tgt", "stbt")?, "tgt", run)?;
                let rev = reverse_factory(a, run)?;
                let ccfg = CombineConfig {
                    augment: cfg,
                    schedule_fractions: a.pipeline.schedule.clone(),
                    noise,
                };
                combine_st_bt(&p, &m_s, &m_t, &lex, rev.as_ref(), &ccfg)?
            }
        };
        let data_path = run.artifact("augmented.tsv");
        ds.write_tsv(&data_path)?;
        run.output(&data_path)?;
        let model = train_lex(&ds.train_pairs(), lex)?;
        let model_path = run.artifact("model.txt");
        write_text(&model_path, &model.to_text())?;
        run.output(&model_path)?;
        let mut counts = BTreeMap::new();
        for pair in &ds.pairs {
            *counts.entry(pair.provenance.label()).or_insert(0usize) += 1;
        }
        eprintln!("augmented dataset: {counts:?}");
        Ok(())
    })
}

pub fn probe(a: &ProbeArgs) -> Res {
    with_run(&a.run, "probe", a, vec![a.seed], |run| {
        let data = match &a.input {
            Some(p) => {
                run.input(p)?;
                ProbeData::load_tsv(p)?
            }
            None => {
                let world = make_world(world_config(&a.world, a.seed))?;
                synthetic_probe_data(&world, a.n, a.perturbation, a.seed)?
            }
        };
        let cfg = ProbeConfig {
            k: a.k,
            lambda: a.lambda,
            epochs: a.epochs,
            lr: a.lr,
            test_fraction: a.test_fraction,
            standardize: a.standardize,
            seed: a.seed,
        };
        let report = run_probes(&data, &cfg)?;
        let path = run.artifact("probe.json");
        write_json(&path, &report)?;
        run.output(&path)?;
        emit(&format!("{}\n", serde_json::to_string_pretty(&report)?));
        Ok(())
    })
}

pub fn sweep(a: &SweepArgs) -> Res {
    let kind = match a.kind {
        SweepKindArg::Alpha => SweepKind::Alpha,
        SweepKindArg::MonoSize => SweepKind::MonoSize,
        SweepKindArg::InDomainOnly => SweepKind::InDomainOnly,
        SweepKindArg::Beta => SweepKind::Beta,
    };
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<stdm_core::Result<Vec<_>>>()?;
    let mut cfg = SweepConfig::new(kind);
    if let Some(g) = &a.grid {
        cfg.grid = g.clone();
    }
    cfg.seeds = a.seeds.clone();
    cfg.methods = methods;
    cfg.world = world_config(&a.world, 0);
    cfg.benchmark = benchmark_config(&a.sizes, &a.mix, 0);
    cfg.pipeline = PipelineConfig {
        lex: LexConfig {
            epochs: a.pipeline.epochs,
        },
        augment: augment_config(&a.pipeline),
        noise: noise(&a.pipeline, 0),
        schedule_fractions: a.pipeline.schedule.clone(),
        bleu_order: 4,
    };
    cfg.stdm = stdm_config(&a.stdm, 0);
    let name = format!("sweep-{}", kind.label());
    let run_args = RunArgs {
        name: a.run.name.clone().or(Some(name)),
        ..a.run.clone()
    };
    with_run(&run_args, "sweep", a, a.seeds.clone(), |run| {
        let rows = run_sweep(&cfg);
        let path = run.dir.join("results.csv");
        write_text(&path, &to_csv(&rows))?;
        run.output(&path)?;
        let failed = rows.iter().filter(|r| r.bleu.is_none()).count();
        let mut means: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for r in &rows {
            if let Some(b) = r.bleu {
                means.entry((r.param.clone(), r.method.clone())).or_default().push(b);
            }
        }
        for ((param, method), v) in &means {
            eprintln!("{param:>10} {method:<12} {:.2}", v.iter().sum::<f64>() / v.len() as f64);
        }
        emit(&format!("{}\n", path.display()));
        if failed > 0 {
            return Err(CliError::Pipeline(format!("{failed} of {} result rows failed", rows.len())));
        }
        Ok(())
    })
}
