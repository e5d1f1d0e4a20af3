use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use vocalex_core::audio::{frame_features, load_wav, sonority_envelope, AudioClip, FeatureConfig};
use vocalex_core::context::{read_activity_csv, read_location_csv};
use vocalex_core::detect::{read_posteriors_csv, train_centroids, FrameDetector, NearestCentroid};
use vocalex_core::pipeline::{
    fuse_clip, run_pipeline, segment_clip, transcribe_clip, ClipIdentity, ClipInput,
    ClipSegmentation, ClipTranscription, PipelineOutput, ANALYZE,
};
use vocalex_core::report::{render_reports, write_reports, AnalysisKind};
use vocalex_core::stats::{BigramContext, TransitionDirection};
use vocalex_core::subword::{load_ipa_table, write_ipa_table, IpaReferenceTable};
use vocalex_core::synth::{fixture_bundle, FIXTURE_DOG, FIXTURE_VIDEO};
use vocalex_core::{
    corpus_summary, parse_corpus, write_corpus, Error, IpaInventory, IpaSymbol, QuadrupletCorpus,
    WordType,
};

use crate::config::{InputSpec, PipelineConfig};
use crate::{
    AnalysisFlags, AnalyzeArgs, BigramContextArg, Cli, CliError, Command, DirectionArg, FuseArgs,
    PipelineArgs, SegmentArgs, SummaryArgs, TrainArgs, TrainKind, TranscribeArgs,
};

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.exclude_unknown_activity {
        cfg.settings.analysis.exclude_unknown_activity = true;
    }
    match &cli.command {
        Command::Segment(args) => segment(cli, &cfg, args),
        Command::Transcribe(args) => transcribe(cli, &cfg, args),
        Command::Fuse(args) => fuse(cli, &cfg, args),
        Command::Analyze(args) => analyze(cli, cfg, args),
        Command::Pipeline(args) => pipeline(cli, cfg, args),
        Command::Summary(args) => summary(cli, args),
        Command::Train(args) => train(cli, &cfg, args),
        Command::Fixture => fixture(cli),
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Core(Error::Io(io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    )))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_error(path, e))
}

fn create(path: &Path) -> CliResult<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path).map_err(|e| io_error(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Core(Error::Json(e)))
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => create(path)?
            .write_all(text.as_bytes())
            .map_err(|e| io_error(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Core(Error::Io(e))),
    }
}

fn require_dir(cli: &Cli, command: &str) -> CliResult<PathBuf> {
    cli.out
        .clone()
        .ok_or_else(|| CliError::Usage(format!("{command} needs --out <dir>")))
}

fn load_audio(path: &Path) -> CliResult<AudioClip> {
    Ok(load_wav(open(path)?)?)
}

fn load_table(path: &Path) -> CliResult<IpaReferenceTable> {
    Ok(load_ipa_table(open(path)?)?)
}

fn load_word_model(
    arg: Option<&PathBuf>,
    cfg: &PipelineConfig,
) -> CliResult<NearestCentroid<WordType>> {
    let path = arg.or(cfg.paths.word_model.as_ref()).ok_or_else(|| {
        CliError::Usage("word typing needs --word-model or [paths] word_model".into())
    })?;
    read_json(path)
}

fn load_frame_model(
    arg: Option<&PathBuf>,
    cfg: &PipelineConfig,
) -> CliResult<Option<NearestCentroid<String>>> {
    match arg.or(cfg.paths.frame_model.as_ref()) {
        None => Ok(None),
        Some(path) => {
            let model: NearestCentroid<String> = read_json(path)?;
            model.check_inventory()?;
            Ok(Some(model))
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "clip".into())
}

fn write_rows(path: &Path, rows: impl IntoIterator<Item = Vec<String>>) -> CliResult {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.write_record(&row)
            .map_err(|e| CliError::Core(Error::Csv(e)))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn dump_features(path: &Path, audio: &AudioClip, features: &FeatureConfig) -> CliResult {
    let frames = frame_features(audio, features)?;
    let header = std::iter::once("time".to_string())
        .chain((0..features.n_bands).map(|b| format!("b{b}")))
        .collect();
    let rows = frames.iter().enumerate().map(|(i, f)| {
        std::iter::once((i as f64 * features.grid.hop).to_string())
            .chain(f.values().iter().map(f64::to_string))
            .collect()
    });
    write_rows(path, std::iter::once(header).chain(rows))
}

fn segment(cli: &Cli, cfg: &PipelineConfig, args: &SegmentArgs) -> CliResult {
    let settings = &cfg.settings;
    let audio = load_audio(&args.audio)?;
    let posteriors = match &args.posteriors {
        Some(p) => Some(read_posteriors_csv(
            open(p)?,
            settings.segmentation.word_gap,
        )?),
        None => None,
    };
    let model = load_word_model(args.word_model.as_ref(), cfg)?;
    let frame_model = load_frame_model(args.frame_model.as_ref(), cfg)?;
    let detector: &dyn FrameDetector = match &frame_model {
        Some(m) => m,
        None => &settings.energy_detector,
    };
    if let Some(path) = &args.dump_features {
        dump_features(path, &audio, &settings.detector_features)?;
    }
    if let Some(path) = &args.dump_envelope {
        let env = sonority_envelope(&audio, &settings.envelope)?;
        let rows = env
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| vec![(j as f64 / env.rate).to_string(), v.to_string()]);
        write_rows(
            path,
            std::iter::once(vec!["time".to_string(), "value".into()]).chain(rows),
        )?;
    }
    let video_id = args.video_id.clone().unwrap_or_else(|| stem(&args.audio));
    let seg = segment_clip(
        &video_id,
        &audio,
        posteriors.as_ref(),
        detector,
        &model,
        settings,
    )?;
    emit(cli.out.as_deref(), &json_text(&seg))
}

fn transcribe(cli: &Cli, cfg: &PipelineConfig, args: &TranscribeArgs) -> CliResult {
    let audio = load_audio(&args.audio)?;
    let seg: ClipSegmentation = read_json(&args.spans)?;
    let table = match args.ipa_table.as_ref().or(cfg.paths.ipa_table.as_ref()) {
        Some(p) => Some(load_table(p)?),
        None => None,
    };
    let words = transcribe_clip(&audio, &seg, table.as_ref(), &cfg.settings)?;
    let out = ClipTranscription {
        video_id: seg.video_id,
        words,
    };
    emit(cli.out.as_deref(), &json_text(&out))
}

fn fuse(cli: &Cli, cfg: &PipelineConfig, args: &FuseArgs) -> CliResult {
    let words: ClipTranscription = read_json(&args.words)?;
    let locations = match &args.loc {
        Some(p) => read_location_csv(open(p)?)?,
        None => Vec::new(),
    };
    let activities = match &args.act {
        Some(p) => read_activity_csv(open(p)?)?,
        None => Vec::new(),
    };
    let identity = ClipIdentity {
        video_id: words.video_id.clone(),
        dog_id: args.dog_id.clone(),
    };
    let (quads, records) = fuse_clip(
        &identity,
        &words.words,
        &locations,
        &activities,
        &cfg.settings,
    )?;
    let corpus = QuadrupletCorpus::new(quads)?;
    let mut bytes = Vec::new();
    write_corpus(&corpus, &mut bytes)?;
    emit(
        cli.out.as_deref(),
        &String::from_utf8(bytes).expect("UTF-8 JSON"),
    )?;
    if cli.keep_intermediates {
        let dir = cli
            .out
            .as_deref()
            .and_then(Path::parent)
            .unwrap_or(Path::new("."));
        emit(Some(&dir.join("fusion.json")), &json_text(&records))?;
    }
    Ok(())
}

fn apply_flags(cfg: &mut PipelineConfig, flags: &AnalysisFlags) {
    let a = &mut cfg.settings.analysis;
    if let Some(n) = flags.min_context_count {
        a.min_context_count = n;
    }
    if let Some(n) = flags.min_bigram_count {
        a.min_bigram_count = n;
    }
    if let Some(d) = flags.direction {
        a.transition_direction = match d {
            DirectionArg::Next => TransitionDirection::NextGivenPrevious,
            DirectionArg::Previous => TransitionDirection::PreviousGivenNext,
        };
    }
    if flags.normalize_transitions {
        a.normalize_transitions = true;
    }
    if let Some(b) = flags.bigram_context {
        a.bigram_context = match b {
            BigramContextArg::First => BigramContext::FirstWord,
            BigramContextArg::Second => BigramContext::SecondWord,
        };
    }
    if flags.exclude_no_dog {
        a.exclude_no_dog = true;
    }
}

fn inventory_for(table: Option<&PathBuf>) -> CliResult<IpaInventory> {
    match table {
        Some(p) => Ok(load_table(p)?.inventory()),
        None => Ok(IpaInventory::default()),
    }
}

fn load_corpus(path: &Path, inventory: &IpaInventory) -> CliResult<QuadrupletCorpus> {
    Ok(parse_corpus(open(path)?, inventory)?)
}

fn print_totals(corpus: &QuadrupletCorpus, files: usize, dir: &Path) {
    println!("quadruplets: {}", corpus.len());
    println!("sentences: {}", corpus.sentence_count());
    println!("videos: {}", corpus.video_count());
    println!("subwords: {}", corpus.subword_count());
    println!("wrote {files} files to {}", dir.display());
}

fn analysis_kinds(all: bool, names: &[String]) -> CliResult<Vec<AnalysisKind>> {
    let mut kinds: Vec<AnalysisKind> = if all || names.is_empty() {
        AnalysisKind::STANDARD.to_vec()
    } else {
        Vec::new()
    };
    for n in names {
        let k: AnalysisKind = n
            .parse()
            .map_err(|e: Error| CliError::Usage(e.to_string()))?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    Ok(kinds)
}

fn analyze(cli: &Cli, mut cfg: PipelineConfig, args: &AnalyzeArgs) -> CliResult {
    let dir = require_dir(cli, "analyze")?;
    apply_flags(&mut cfg, &args.flags);
    let kinds = analysis_kinds(args.all, &args.analysis)?;
    let inventory = inventory_for(args.ipa_table.as_ref())?;
    let corpus = load_corpus(&args.corpus, &inventory)?;
    let reports = render_reports(
        &corpus,
        &inventory,
        &kinds,
        &cfg.settings.analysis,
        &cfg.echo(),
    )?;
    let paths = write_reports(&reports, &dir)?;
    print_totals(&corpus, paths.len(), &dir);
    Ok(())
}

fn load_input(spec: &InputSpec, word_gap: f64) -> CliResult<ClipInput> {
    Ok(ClipInput {
        identity: ClipIdentity {
            video_id: spec.video_id.clone(),
            dog_id: spec.dog_id.clone(),
        },
        audio: load_audio(&spec.audio)?,
        posteriors: match &spec.posteriors {
            Some(p) => Some(read_posteriors_csv(open(p)?, word_gap)?),
            None => None,
        },
        locations: match &spec.locations {
            Some(p) => read_location_csv(open(p)?)?,
            None => Vec::new(),
        },
        activities: match &spec.activities {
            Some(p) => read_activity_csv(open(p)?)?,
            None => Vec::new(),
        },
    })
}

fn pipeline(cli: &Cli, mut cfg: PipelineConfig, args: &PipelineArgs) -> CliResult {
    let dir = require_dir(cli, "pipeline")?;
    apply_flags(&mut cfg, &args.flags);
    if let Some(audio) = &args.audio {
        cfg.inputs = vec![InputSpec {
            video_id: args.video_id.clone().unwrap_or_else(|| stem(audio)),
            audio: audio.clone(),
            posteriors: args.posteriors.clone(),
            locations: args.loc.clone(),
            activities: args.act.clone(),
            dog_id: args.dog_id.clone(),
        }];
    } else if args.posteriors.is_some() || args.loc.is_some() || args.act.is_some() {
        return Err(CliError::Usage(
            "--posteriors, --loc and --act need --audio".into(),
        ));
    }
    if cfg.inputs.is_empty() {
        return Err(CliError::Usage(
            "pipeline needs --audio or [[inputs]] in the config".into(),
        ));
    }
    for (flag, slot) in [
        (&args.ipa_table, &mut cfg.paths.ipa_table),
        (&args.word_model, &mut cfg.paths.word_model),
        (&args.frame_model, &mut cfg.paths.frame_model),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }

    let settings = &cfg.settings;
    let inputs = cfg
        .inputs
        .iter()
        .map(|s| load_input(s, settings.segmentation.word_gap))
        .collect::<CliResult<Vec<_>>>()?;
    let model = load_word_model(None, &cfg)?;
    let frame_model = load_frame_model(None, &cfg)?;
    let table = match &cfg.paths.ipa_table {
        Some(p) => Some(load_table(p)?),
        None => None,
    };
    let out: PipelineOutput = run_pipeline(
        &inputs,
        frame_model.as_ref().map(|m| m as &dyn FrameDetector),
        &model,
        table.as_ref(),
        settings,
    )?;
    let inventory = table
        .as_ref()
        .map_or_else(IpaInventory::default, |t| t.inventory());
    let reports = render_reports(
        &out.corpus,
        &inventory,
        &AnalysisKind::STANDARD,
        &settings.analysis,
        &cfg.echo(),
    )
    .map_err(|e| e.in_stage(ANALYZE))?;

    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let mut bytes = Vec::new();
    write_corpus(&out.corpus, &mut bytes)?;
    emit(
        Some(&dir.join("corpus.jsonl")),
        &String::from_utf8(bytes).expect("UTF-8 JSON"),
    )?;
    let mut files = 1 + write_reports(&reports, &dir)?.len();
    if cli.keep_intermediates {
        emit(
            Some(&dir.join("spans.json")),
            &json_text(&out.segmentations),
        )?;
        emit(
            Some(&dir.join("transcription.json")),
            &json_text(&out.transcriptions),
        )?;
        emit(Some(&dir.join("fusion.json")), &json_text(&out.fusion))?;
        files += 3;
    }
    print_totals(&out.corpus, files, &dir);
    Ok(())
}

fn summary(cli: &Cli, args: &SummaryArgs) -> CliResult {
    let inventory = inventory_for(args.ipa_table.as_ref())?;
    let corpus = load_corpus(&args.corpus, &inventory)?;
    emit(
        cli.out.as_deref(),
        &json_text(&corpus_summary(&corpus, &inventory)),
    )
}

#[derive(serde::Deserialize)]
struct ManifestRow {
    path: PathBuf,
    label: String,
}

fn read_manifest(path: &Path) -> CliResult<Vec<(AudioClip, String)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut out = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let row = row.map_err(|e| CliError::Core(Error::Csv(e)))?;
        out.push((load_audio(&base.join(&row.path))?, row.label));
    }
    if out.is_empty() {
        return Err(CliError::Core(Error::EmptyLabel("manifest".into())));
    }
    Ok(out)
}

fn train(cli: &Cli, cfg: &PipelineConfig, args: &TrainArgs) -> CliResult {
    let clips = read_manifest(&args.manifest)?;
    let text = match args.kind {
        TrainKind::Word => {
            let labelled = clips
                .into_iter()
                .map(|(c, l)| Ok((c, l.parse::<WordType>()?)))
                .collect::<Result<Vec<_>, Error>>()?;
            let labels: Vec<WordType> = WordType::ALL
                .iter()
                .copied()
                .filter(|w| labelled.iter().any(|(_, l)| l == w))
                .collect();
            json_text(&train_centroids(
                &labels,
                &labelled,
                &FeatureConfig::default(),
            )?)
        }
        TrainKind::Frame => {
            let mut labels: Vec<String> = Vec::new();
            for (_, l) in &clips {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
            let model = train_centroids(&labels, &clips, &cfg.settings.detector_features)?;
            model.check_inventory()?;
            json_text(&model)
        }
        TrainKind::Ipa => {
            let refs = clips
                .into_iter()
                .map(|(c, l)| Ok((IpaSymbol::new(l)?, c)))
                .collect::<Result<Vec<_>, Error>>()?;
            let table = IpaReferenceTable::from_reference_clips(
                &refs,
                &cfg.settings.transcription_features,
                args.provenance.clone(),
            )?;
            let mut bytes = Vec::new();
            write_ipa_table(&table, &mut bytes)?;
            String::from_utf8(bytes).expect("UTF-8 CSV")
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn fixture_config() -> String {
    format!(
        "[paths]\nipa_table = \"ipa_table.csv\"\nword_model = \"word_model.json\"\n\n\
         [[inputs]]\nvideo_id = \"{FIXTURE_VIDEO}\"\naudio = \"audio.wav\"\n\
         posteriors = \"posteriors.csv\"\nlocations = \"locations.csv\"\n\
         activities = \"activities.csv\"\ndog_id = \"{FIXTURE_DOG}\"\n"
    )
}

fn fixture(cli: &Cli) -> CliResult {
    let dir = require_dir(cli, "fixture")?;
    fixture_bundle()?.write_to(&dir)?;
    emit(Some(&dir.join("pipeline.toml")), &fixture_config())?;
    println!("wrote fixture bundle to {}", dir.display());
    Ok(())
}
