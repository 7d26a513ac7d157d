use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "stdm", version, about = "Source-target domain mismatch toolkit")]
pub struct Cli {
    /// `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a synthetic world and an α/β benchmark from it.
    Gen(GenArgs),
    /// Build an α/β benchmark from two real parallel corpora.
    Mix(MixArgs),
    /// STDM score of one parallel corpus.
    Score(ScoreArgs),
    /// STDM scores of several corpora in a shared topic space.
    ScoreMulti(ScoreMultiArgs),
    /// Learn or apply BPE merges.
    #[command(subcommand)]
    Bpe(BpeCmd),
    /// Train a lexical translation model.
    Train(TrainArgs),
    /// Translate with a trained lexical model.
    Translate(TranslateArgs),
    /// Corpus BLEU of hypotheses against references.
    Bleu(BleuArgs),
    /// Build an augmented training set.
    #[command(subcommand)]
    Augment(AugmentCmd),
    /// Translationese and origin probes.
    Probe(ProbeArgs),
    /// Run a benchmark sweep and write a results table.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Directory that receives `<timestamp>-<name>` run folders.
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
    /// Run name; defaults to the command name.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WorldArgs {
    #[arg(long, default_value_t = 20)]
    pub n_topics: usize,
    #[arg(long, default_value_t = 2000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub topic_divergence: f64,
    #[arg(long, default_value_t = 0.5)]
    pub word_divergence: f64,
    #[arg(long, default_value_t = 0.1)]
    pub topic_concentration: f64,
    #[arg(long, default_value_t = 0.05)]
    pub word_concentration: f64,
    /// Swap adjacent words when translating.
    #[arg(long)]
    pub reorder: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SizeArgs {
    #[arg(long, default_value_t = 2000)]
    pub n_parallel: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_mono_s: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_mono_t: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    #[arg(long, default_value_t = 5)]
    pub min_len: usize,
    #[arg(long, default_value_t = 15)]
    pub max_len: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MixArgsCommon {
    /// Share of source-domain data in the target-originating material.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Fraction of the parallel set that is source-originating.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ParallelInput {
    /// Parallel corpus as `src<TAB>tgt<TAB>origin` lines.
    #[arg(long, conflicts_with_all = ["src", "tgt"])]
    pub tsv: Option<PathBuf>,
    #[arg(long, requires = "tgt")]
    pub src: Option<PathBuf>,
    #[arg(long, requires = "src")]
    pub tgt: Option<PathBuf>,
    /// One `S` or `T` per line, aligned with `--src`/`--tgt`.
    #[arg(long, requires = "src")]
    pub origin: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SvdKind {
    Randomized,
    Dense,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StdmArgs {
    /// Number of topics.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Sentences per TF-IDF document.
    #[arg(long, default_value_t = 1)]
    pub group: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    /// Drop terms present in more than this fraction of documents.
    #[arg(long)]
    pub max_df: Option<f64>,
    #[arg(long)]
    pub sublinear_tf: bool,
    #[arg(long, value_enum, default_value_t = SvdKind::Randomized)]
    pub svd: SvdKind,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    /// EM epochs for every lexical model.
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Loss weight of gold pairs relative to synthetic ones.
    #[arg(long, default_value_t = 5.0)]
    pub parallel_weight: f64,
    /// Do not prepend domain tags to synthetic pairs.
    #[arg(long)]
    pub no_tagging: bool,
    /// Self-training selection sizes as fractions of the source monolingual set.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
    pub schedule: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub p_drop: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p_blank: f64,
    #[arg(long, default_value_t = 3)]
    pub window: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[command(flatten)]
    pub mix: MixArgsCommon,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Benchmark directory; defaults to the run's artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MixArgs {
    /// Source-domain parallel corpus (TSV).
    #[arg(long)]
    pub domain_s: PathBuf,
    /// Target-domain parallel corpus (TSV).
    #[arg(long)]
    pub domain_t: PathBuf,
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[command(flatten)]
    pub mix: MixArgsCommon,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: ParallelInput,
    /// Score the parallel set of a benchmark directory.
    #[arg(long, conflicts_with_all = ["tsv", "src"])]
    pub benchmark: Option<PathBuf>,
    #[command(flatten)]
    pub stdm: StdmArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreMultiArgs {
    /// `name=path.tsv`, or a path whose file stem becomes the name.
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<String>,
    #[command(flatten)]
    pub stdm: StdmArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum BpeCmd {
    /// Learn merges from a monolingual corpus.
    Learn(BpeLearnArgs),
    /// Segment a corpus with learned merges, or undo the segmentation.
    Apply(BpeApplyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BpeLearnArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub merges: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BpeApplyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Join subwords back into words instead of splitting.
    #[arg(long)]
    pub decode: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: ParallelInput,
    /// Augmented dataset TSV (`src tgt provenance weight tag`).
    #[arg(long, conflicts_with_all = ["tsv", "src"])]
    pub data: Option<PathBuf>,
    /// Train the target-to-source direction.
    #[arg(long)]
    pub reverse: bool,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TranslateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Sentences to translate; standard input if absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write `translation<TAB>score` lines.
    #[arg(long)]
    pub scores: bool,
    /// Act as an external translator: stdin to `translation<TAB>score`
    /// lines on stdout, no run directory.
    #[arg(long)]
    pub protocol: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BleuArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum AugmentCmd {
    /// Back-translation of target monolingual data.
    Bt(AugmentArgs),
    /// Noisy self-training on source monolingual data.
    St(AugmentArgs),
    /// Both, combined.
    Stbt(AugmentArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub input: ParallelInput,
    #[arg(long)]
    pub mono_src: Option<PathBuf>,
    #[arg(long)]
    pub mono_tgt: Option<PathBuf>,
    /// Pretrained target-to-source lexical model for back-translation.
    #[arg(long, conflicts_with = "reverse_command")]
    pub reverse_model: Option<PathBuf>,
    /// External target-to-source translator command line.
    #[arg(long)]
    pub reverse_command: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// Probe corpus: `sentence<TAB>role` or `src<TAB>tgt<TAB>origin<TAB>role`.
    #[arg(long, required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate probe data from a synthetic world instead.
    #[arg(long, conflicts_with = "input")]
    pub synthetic: bool,
    #[command(flatten)]
    pub world: WorldArgs,
    /// Sentences per role in synthetic mode.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Per-token probability of a translationese substitution.
    #[arg(long, default_value_t = 0.1)]
    pub perturbation: f64,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
pub enum SweepKindArg {
    Alpha,
    MonoSize,
    InDomainOnly,
    Beta,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKindArg,
    /// Grid values (α, monolingual size or β); the kind's default grid if absent.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// Methods among baseline, bt, st, stbt.
    #[arg(long, value_delimiter = ',', default_value = "baseline,bt,st,stbt")]
    pub methods: Vec<String>,
    #[command(flatten)]
    pub world: WorldArgs,
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[command(flatten)]
    pub mix: MixArgsCommon,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub stdm: StdmArgs,
    #[command(flatten)]
    pub run: RunArgs,
}
