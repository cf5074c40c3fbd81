//! `datefrag`: benchmark generation, fragmentation scoring, answer scoring,
//! embedding geometry and statistics from one binary.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use datefrag::datefmt::{FormatKind, Language};

#[derive(Parser, Debug)]
#[command(name = "datefrag", version, about, long_about = None)]
#[command(after_help = "Exit status: 0 success, 1 validation failure, 2 input/output or schema error.")]
pub struct Cli {
    /// Seed for every randomized step (CV folds, synthetic fixtures).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to one per core. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expand seed questions into every (language, format) variant.
    ///
    /// Seeds JSONL: {"seed_id","task":"arithmetic|relation|timezone","language":"en|de|zh|ar|ha",
    /// "text","gold":[..],"source":"tram|tot|freshbench"}.
    /// Output JSONL: {"record_id","seed_id","task","language","format_kind","calendar","question",
    /// "gold_aliases":[..],"provenance":{"source","seed_dates","calendar_fallbacks"}}.
    Gen(GenArgs),
    /// Segment date strings into semantic units.
    ///
    /// Input: one date string per line. Output JSONL: {"input","units":[{"role","text","byte_span"}],
    /// "language","kind","calendar"}.
    Segment(SegmentArgs),
    /// Tokenize date strings with a byte-level BPE model or the baseline segmenter.
    ///
    /// Input: one date string per line. Output pretokenized JSONL: {"id","text","tokenizer_id",
    /// "tokens":[{"text","start","end"}],"language","format"}; offsets are UTF-8 bytes.
    Tokenize(TokenizeArgs),
    /// Fragmentation features, mDFR scores and the per-tokenizer report.
    ///
    /// Input: pretokenized JSONL (see `tokenize`). Output JSONL per record: {"id","tokenizer_id",
    /// "language","format","calendar","split","delimiter_lost","delta_n_norm","theta","n","n_b","f"};
    /// report CSV: tokenizer_id plus one column per (calendar, language) cell.
    Mdfr(MdfrArgs),
    /// Fit mDFR weights to human severity ratings.
    ///
    /// Features: `mdfr` JSONL output. Ratings CSV: item_id,annotator_id,rating (1..5), item_id
    /// matching feature ids. Output JSON: {"a1","a2","a3","a4","raw","residual_rmse","items","alpha"}.
    Calibrate(CalibrateArgs),
    /// Score model outputs against gold aliases.
    ///
    /// Predictions JSONL: {"record_id","raw_output","model_id"?}. Verdict CSV:
    /// record_id,label,matched_alias. Accuracy CSV: model_id plus one macro-accuracy column per language.
    Score(ScoreArgs),
    /// Linear probes of year, month and day on hidden states.
    ///
    /// Embeddings JSONL: {"language","format","date":"YYYY-MM-DD","sample","layer","dim","vector":[..]}.
    /// Output CSV: language,format,component,layer,r2_in,r2_cv,folds,weight_norm,n.
    Probe(ProbeArgs),
    /// Year-path segments, straightness and PCA coordinates of hidden states.
    ///
    /// Embeddings JSONL as for `probe`. Path CSV: language,format,layer,first_year,last_year,
    /// segments,mean_step_norm,straightness. PCA CSV: language,format,layer,year,pc1,pc2,ratio1,ratio2.
    Geometry(GeometryArgs),
    /// Write a synthetic embedding dump with a linear date signal.
    SynthEmbeddings(SynthArgs),
    /// Pearson and Spearman correlations over an analysis table.
    ///
    /// Analysis CSV: model_id,question_id,language,resource?,mdfr,linearity,correct.
    /// Output CSV: group,n,pearson,spearman.
    Correlate(CorrelateArgs),
    /// Fixed-effects logistic regression correct ~ mdfr_z * lin_z * resource.
    ///
    /// Analysis CSV as for `correlate`. Output CSV: term,beta,se,z,p after a comment header.
    Regress(RegressArgs),
    /// Ordinal Krippendorff's alpha of a ratings table.
    ///
    /// Ratings CSV: item_id,annotator_id,rating.
    Alpha(AlphaArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Seed questions JSONL.
    #[arg(long, required_unless_present = "synthetic")]
    pub seeds: Option<PathBuf>,
    /// Generate this many synthetic seeds per task instead of reading --seeds.
    #[arg(long, conflicts_with = "seeds")]
    pub synthetic: Option<usize>,
    /// Also write the seeds used.
    #[arg(long)]
    pub write_seeds: Option<PathBuf>,
    /// Keep only these languages (comma-separated).
    #[arg(long = "lang", value_delimiter = ',')]
    pub langs: Vec<Language>,
    /// Fail unless every (task, language, format) cell has exactly this many records.
    #[arg(long)]
    pub expect_per_cell: Option<usize>,
    /// Validation report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub lang: Language,
    /// iso, numeric (slash), textual (long) or calendar.
    #[arg(long)]
    pub format: FormatKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub lang: Language,
    #[arg(long)]
    pub format: FormatKind,
    /// Emit the baseline segmentation as the tokenization.
    #[arg(long, conflicts_with_all = ["vocab", "merges"])]
    pub baseline: bool,
    /// vocab.json of a byte-level BPE model.
    #[arg(long, requires = "merges", required_unless_present = "baseline")]
    pub vocab: Option<PathBuf>,
    /// merges.txt of the same model.
    #[arg(long, requires = "vocab")]
    pub merges: Option<PathBuf>,
    /// Pre-split regex; defaults to the GPT-2 pattern.
    #[arg(long)]
    pub pattern: Option<String>,
    #[arg(long, default_value = "bpe")]
    pub tokenizer_id: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Theta {
    BoundaryCosine,
    UnitCoverage,
}

#[derive(Args, Debug)]
pub struct MdfrArgs {
    /// Pretokenized JSONL.
    #[arg(long)]
    pub input: PathBuf,
    /// Language for records that do not carry one.
    #[arg(long)]
    pub lang: Option<Language>,
    /// Format for records that do not carry one.
    #[arg(long)]
    pub format: Option<FormatKind>,
    /// Weights JSON with a1..a4; defaults to 0.2, 0.2, 0.1, 0.5.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Theta::BoundaryCosine)]
    pub theta: Theta,
    /// Per-record features and scores (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Report CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Benchmark JSONL from `gen`.
    #[arg(long)]
    pub bench: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Model id for predictions that do not carry one.
    #[arg(long, default_value = "model")]
    pub model: String,
    /// Verdict CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Accuracy table CSV.
    #[arg(long)]
    pub accuracy: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Eval {
    InSample,
    Kfold,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Samples per (language, format, year).
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Best-layer summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// R² used by the summary.
    #[arg(long, value_enum, default_value_t = Eval::Kfold)]
    pub eval: Eval,
}

#[derive(Args, Debug)]
pub struct GeometryArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub paths: PathBuf,
    #[arg(long)]
    pub pca: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long = "lang", value_delimiter = ',', default_value = "en")]
    pub langs: Vec<Language>,
    #[arg(long = "format", value_delimiter = ',', default_value = "iso,slash,long")]
    pub formats: Vec<String>,
    #[arg(long, default_value_t = 1990)]
    pub first_year: i32,
    #[arg(long, default_value_t = 2024)]
    pub last_year: i32,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Standard deviation of the per-coordinate noise.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Column {
    Mdfr,
    Linearity,
    Correct,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    All,
    Language,
    Resource,
    Model,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeanBy {
    None,
    Model,
    Question,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Column::Mdfr)]
    pub x: Column,
    #[arg(long, value_enum, default_value_t = Column::Correct)]
    pub y: Column,
    #[arg(long, value_enum, default_value_t = GroupBy::Language)]
    pub by: GroupBy,
    /// Average x and y within each group per model (or question) first.
    #[arg(long, value_enum, default_value_t = MeanBy::None)]
    pub mean_by: MeanBy,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Add one fixed effect per model.
    #[arg(long)]
    pub model_dummies: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AlphaArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// JSON output; the value is printed to stdout either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("datefrag: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("datefrag: {f}");
            ExitCode::from(f.code())
        }
    }
}
