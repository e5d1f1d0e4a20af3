//! `vocalex`: segmentation, transcription, fusion and analysis from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(vocalex_core::Error),
}

impl From<vocalex_core::Error> for CliError {
    fn from(e: vocalex_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if !e.is_data_error() => 1,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "vocalex",
    version,
    about = "Vocalization corpus construction and context statistics"
)]
pub struct Cli {
    /// TOML configuration document.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (segment, transcribe, fuse, train, summary) or directory
    /// (analyze, pipeline, fixture).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write spans.json, transcription.json and fusion.json.
    #[arg(long, global = true)]
    pub keep_intermediates: bool,
    /// Drop quadruplets with activity `Unknown` from activity analyses.
    #[arg(long, global = true)]
    pub exclude_unknown_activity: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sentences and typed word spans of one recording.
    Segment(SegmentArgs),
    /// Subword boundaries and IPA transcripts for segmented words.
    Transcribe(TranscribeArgs),
    /// Location and activity fusion into a quadruplet corpus.
    Fuse(FuseArgs),
    /// Priors, lift matrices, transitions and durations of a corpus.
    Analyze(AnalyzeArgs),
    /// Segment, transcribe, fuse and analyze in one run.
    Pipeline(PipelineArgs),
    /// Corpus totals and label counts.
    Summary(SummaryArgs),
    /// Fit a word-type model, frame detector or IPA table from labeled clips.
    Train(TrainArgs),
    /// Write the synthetic end-to-end fixture bundle.
    Fixture,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub audio: PathBuf,
    /// Precomputed `time,<category>...` posteriors replacing the detector.
    #[arg(long)]
    pub posteriors: Option<PathBuf>,
    #[arg(long)]
    pub word_model: Option<PathBuf>,
    #[arg(long)]
    pub frame_model: Option<PathBuf>,
    /// Defaults to the audio file stem.
    #[arg(long)]
    pub video_id: Option<String>,
    /// Write per-frame log band energies as CSV.
    #[arg(long)]
    pub dump_features: Option<PathBuf>,
    /// Write the sonority envelope as CSV.
    #[arg(long)]
    pub dump_envelope: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TranscribeArgs {
    #[arg(long)]
    pub audio: PathBuf,
    #[arg(long)]
    pub spans: PathBuf,
    #[arg(long)]
    pub ipa_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Transcription JSON from `transcribe`.
    #[arg(long)]
    pub words: PathBuf,
    #[arg(long)]
    pub loc: Option<PathBuf>,
    #[arg(long)]
    pub act: Option<PathBuf>,
    #[arg(long)]
    pub dog_id: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    /// P(w2|w1)
    Next,
    /// P(w1|w2)
    Previous,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BigramContextArg {
    First,
    Second,
}

#[derive(Debug, Args, Default)]
pub struct AnalysisFlags {
    #[arg(long)]
    pub min_context_count: Option<u64>,
    #[arg(long)]
    pub min_bigram_count: Option<u64>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    #[arg(long)]
    pub normalize_transitions: bool,
    #[arg(long, value_enum)]
    pub bigram_context: Option<BigramContextArg>,
    #[arg(long)]
    pub exclude_no_dog: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// The seven standard reports.
    #[arg(long)]
    pub all: bool,
    /// Analyses to run (priors, word_location, word_activity, word_context,
    /// bigram_context, word_transition, durations, subwords).
    #[arg(long, value_delimiter = ',')]
    pub analysis: Vec<String>,
    /// IPA table whose symbols form the inventory; defaults to the 20 vowels.
    #[arg(long)]
    pub ipa_table: Option<PathBuf>,
    #[command(flatten)]
    pub flags: AnalysisFlags,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Single recording; otherwise `[[inputs]]` from the config.
    #[arg(long)]
    pub audio: Option<PathBuf>,
    #[arg(long)]
    pub posteriors: Option<PathBuf>,
    #[arg(long)]
    pub loc: Option<PathBuf>,
    #[arg(long)]
    pub act: Option<PathBuf>,
    #[arg(long)]
    pub video_id: Option<String>,
    #[arg(long)]
    pub dog_id: Option<String>,
    #[arg(long)]
    pub ipa_table: Option<PathBuf>,
    #[arg(long)]
    pub word_model: Option<PathBuf>,
    #[arg(long)]
    pub frame_model: Option<PathBuf>,
    #[command(flatten)]
    pub flags: AnalysisFlags,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub ipa_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrainKind {
    /// Nearest-centroid word-type model (JSON).
    Word,
    /// Nearest-centroid frame detector (JSON); labels are category names.
    Frame,
    /// IPA reference table (CSV).
    Ipa,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// CSV `path,label`; paths relative to the manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub kind: TrainKind,
    /// Provenance note stored in an IPA table.
    #[arg(long, default_value = "trained from manifest")]
    pub provenance: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
