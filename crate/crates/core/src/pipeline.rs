//! Stage orchestration: segment, split into subwords, transcribe, fuse.
//!
//! Every error leaving a stage carries the stage name. Each stage also
//! returns a serializable record so intermediate artifacts can be written.

use serde::{Deserialize, Serialize};

use crate::audio::{sonority_envelope, AudioClip, EnvelopeConfig, FeatureConfig};
use crate::context::{
    activity_observation_for, activity_window, decide_location, fuse_activity, sample_frame_times,
    ActivityObservation, FusionConfig, LocationObservation,
};
use crate::corpus::{Quadruplet, QuadrupletCorpus, Subword, TimeSpan, TIME_EPSILON};
use crate::detect::{
    classify_word, detect_clip, extract_sentences, segment_words, EnergyDetector, FrameDetector,
    FramePosterior, SegmentationConfig, WordSpan, WordTypeScorer,
};
use crate::error::{Error, Result};
use crate::labels::{ActivityLabel, IpaSymbol, LocationLabel, WordType};
use crate::report::AnalysisConfig;
use crate::subword::{
    segment_subwords, transcribe_subword, transcription_features, IpaReferenceTable,
    OscillatorParams,
};

pub const SEGMENT: &str = "segment";
pub const SUBWORD: &str = "subword";
pub const TRANSCRIBE: &str = "transcribe";
pub const FUSE: &str = "fuse";
pub const ANALYZE: &str = "analyze";

trait InStage<T> {
    fn in_stage(self, stage: &'static str) -> Result<T>;
}

impl<T> InStage<T> for Result<T> {
    fn in_stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}

/// Settings of every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub segmentation: SegmentationConfig,
    /// Front-end of the built-in frame detector.
    pub detector_features: FeatureConfig,
    pub energy_detector: EnergyDetector,
    pub envelope: EnvelopeConfig,
    pub oscillator: OscillatorParams,
    pub transcription_features: FeatureConfig,
    pub fusion: FusionConfig,
    /// Largest distance (s) between a sampled frame time and the location
    /// observation used for it.
    pub location_tolerance: f64,
    /// Largest end-point error (s) when matching an activity window.
    pub activity_tolerance: f64,
    pub analysis: AnalysisConfig,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            segmentation: SegmentationConfig::default(),
            detector_features: FeatureConfig::default(),
            energy_detector: EnergyDetector::default(),
            envelope: EnvelopeConfig::default(),
            oscillator: OscillatorParams::default(),
            transcription_features: transcription_features(),
            fusion: FusionConfig::default(),
            location_tolerance: 0.05,
            activity_tolerance: 0.05,
            analysis: AnalysisConfig::default(),
        }
    }
}

impl PipelineSettings {
    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        self.detector_features.validate()?;
        self.envelope.validate()?;
        self.oscillator.validate()?;
        self.transcription_features.validate()?;
        self.fusion.validate()?;
        self.analysis.validate()?;
        if !(self.location_tolerance >= 0.0 && self.activity_tolerance >= 0.0) {
            return Err(Error::Config(
                "observation tolerances must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSpans {
    pub sentence_id: String,
    pub span: TimeSpan,
    pub words: Vec<WordSpan>,
}

/// Output of the segment stage for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipSegmentation {
    pub video_id: String,
    pub sentences: Vec<SentenceSpans>,
}

pub fn sentence_id(video_id: &str, k: usize) -> String {
    format!("{video_id}-s{k}")
}

/// Sentences and typed words of one recording. Without `posteriors`, the
/// `detector` is run on the audio.
pub fn segment_clip(
    video_id: &str,
    audio: &AudioClip,
    posteriors: Option<&FramePosterior>,
    detector: &dyn FrameDetector,
    scorer: &dyn WordTypeScorer,
    settings: &PipelineSettings,
) -> Result<ClipSegmentation> {
    let computed;
    let posteriors = match posteriors {
        Some(p) => p,
        None => {
            computed =
                detect_clip(detector, audio, &settings.detector_features).in_stage(SEGMENT)?;
            &computed
        }
    };
    segment_posteriors(
        video_id,
        |span| audio.slice(span),
        posteriors,
        scorer,
        settings,
    )
}

/// Segmentation over a posterior sequence; `clip_of` supplies the audio of
/// each word for type scoring.
pub fn segment_posteriors(
    video_id: &str,
    clip_of: impl Fn(&TimeSpan) -> Result<AudioClip>,
    posteriors: &FramePosterior,
    scorer: &dyn WordTypeScorer,
    settings: &PipelineSettings,
) -> Result<ClipSegmentation> {
    let seg = &settings.segmentation;
    let spans = extract_sentences(posteriors, seg).in_stage(SEGMENT)?;
    let mut sentences = Vec::with_capacity(spans.len());
    for span in spans {
        let mut words = Vec::new();
        for w in segment_words(posteriors, &span, seg).in_stage(SEGMENT)? {
            let clip = clip_of(&w).in_stage(SEGMENT)?;
            let c = classify_word(&clip, scorer, seg).in_stage(SEGMENT)?;
            words.push(WordSpan {
                span: w,
                word: c.word,
                type_scores: c.type_scores,
            });
        }
        if !words.is_empty() {
            sentences.push(SentenceSpans {
                sentence_id: sentence_id(video_id, sentences.len()),
                span,
                words,
            });
        }
    }
    Ok(ClipSegmentation {
        video_id: video_id.to_string(),
        sentences,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribedSubword {
    pub span: TimeSpan,
    pub ipa: IpaSymbol,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribedWord {
    pub sentence_id: String,
    pub index_in_sentence: u32,
    pub word: WordSpan,
    pub subwords: Vec<TranscribedSubword>,
}

/// Subword spans of one word clip, in absolute time. Words shorter than the
/// minimum subword duration form a single subword.
pub fn word_subwords(
    word: &TimeSpan,
    clip: &AudioClip,
    settings: &PipelineSettings,
) -> Result<Vec<TimeSpan>> {
    if word.duration() < settings.oscillator.min_subword_duration - TIME_EPSILON {
        return Ok(vec![*word]);
    }
    let envelope = sonority_envelope(clip, &settings.envelope)?;
    segment_subwords(word, &envelope, &settings.oscillator)
}

/// Splits and transcribes every word of a segmentation. A missing table is
/// reported by the transcribe stage.
pub fn transcribe_clip(
    audio: &AudioClip,
    segmentation: &ClipSegmentation,
    table: Option<&IpaReferenceTable>,
    settings: &PipelineSettings,
) -> Result<Vec<TranscribedWord>> {
    let table = table
        .ok_or_else(|| Error::Config("no IPA reference table given".into()))
        .in_stage(TRANSCRIBE)?;
    let mut out = Vec::new();
    for sentence in &segmentation.sentences {
        for (i, word) in sentence.words.iter().enumerate() {
            let clip = audio.slice(&word.span).in_stage(SUBWORD)?;
            let spans = word_subwords(&word.span, &clip, settings).in_stage(SUBWORD)?;
            let subwords = spans
                .into_iter()
                .map(|span| {
                    let piece = audio.slice(&span)?;
                    let (ipa, distance) =
                        transcribe_subword(&piece, table, &settings.transcription_features)?;
                    Ok(TranscribedSubword {
                        span,
                        ipa,
                        distance,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .in_stage(TRANSCRIBE)?;
            out.push(TranscribedWord {
                sentence_id: sentence.sentence_id.clone(),
                index_in_sentence: i as u32,
                word: word.clone(),
                subwords,
            });
        }
    }
    Ok(out)
}

/// How one word's context labels were chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionRecord {
    pub sentence_id: String,
    pub index_in_sentence: u32,
    pub frame_times: Vec<f64>,
    /// Timestamps of the observations used, one per matched frame.
    pub location_observations: Vec<f64>,
    pub location: LocationLabel,
    pub location_votes: Vec<u32>,
    pub location_sums: Vec<f64>,
    pub activity_window: TimeSpan,
    pub activity_matched: bool,
    pub activity: ActivityLabel,
}

/// The observation nearest to `t` within `tolerance`; the earlier one wins
/// ties.
fn nearest_observation(
    all: &[LocationObservation],
    t: f64,
    tolerance: f64,
) -> Option<&LocationObservation> {
    all.iter()
        .map(|o| (o, (o.timestamp - t).abs()))
        .filter(|&(_, d)| d <= tolerance + TIME_EPSILON)
        .fold(
            None,
            |best: Option<(&LocationObservation, f64)>, cand| match best {
                Some((_, d)) if cand.1 >= d => best,
                _ => Some(cand),
            },
        )
        .map(|(o, _)| o)
}

/// Identity shared by all words of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipIdentity {
    pub video_id: String,
    pub dog_id: Option<String>,
}

/// Context fusion for the transcribed words of one recording.
pub fn fuse_clip(
    identity: &ClipIdentity,
    words: &[TranscribedWord],
    locations: &[LocationObservation],
    activities: &[ActivityObservation],
    settings: &PipelineSettings,
) -> Result<(Vec<Quadruplet>, Vec<FusionRecord>)> {
    let cfg = &settings.fusion;
    cfg.validate().in_stage(FUSE)?;
    let mut quads = Vec::with_capacity(words.len());
    let mut records = Vec::with_capacity(words.len());
    for w in words {
        let span = w.word.span;
        let frame_times = sample_frame_times(&span, cfg.n_frames).in_stage(FUSE)?;
        let matched: Vec<LocationObservation> = frame_times
            .iter()
            .filter_map(|&t| nearest_observation(locations, t, settings.location_tolerance))
            .cloned()
            .collect();
        let (location, votes, sums) = if matched.is_empty() {
            (LocationLabel::Others, Vec::new(), Vec::new())
        } else {
            let d = decide_location(&matched, cfg.location_mode).in_stage(FUSE)?;
            (d.label, d.votes, d.sums)
        };
        let window = activity_window(&span, cfg.activity_pad);
        let act_obs = activity_observation_for(activities, &window, settings.activity_tolerance);
        let activity = fuse_activity(act_obs).in_stage(FUSE)?;
        quads.push(Quadruplet {
            word: w.word.word,
            subwords: w
                .subwords
                .iter()
                .map(|s| Subword {
                    span: s.span,
                    symbol: s.ipa.clone(),
                    distance: s.distance,
                })
                .collect(),
            location,
            activity,
            span,
            sentence_id: w.sentence_id.clone(),
            index_in_sentence: w.index_in_sentence,
            video_id: identity.video_id.clone(),
            dog_id: identity.dog_id.clone(),
        });
        records.push(FusionRecord {
            sentence_id: w.sentence_id.clone(),
            index_in_sentence: w.index_in_sentence,
            frame_times,
            location_observations: matched.iter().map(|o| o.timestamp).collect(),
            location,
            location_votes: votes,
            location_sums: sums,
            activity_window: window,
            activity_matched: act_obs.is_some(),
            activity,
        });
    }
    Ok((quads, records))
}

/// All inputs for one recording.
#[derive(Debug, Clone)]
pub struct ClipInput {
    pub identity: ClipIdentity,
    pub audio: AudioClip,
    pub posteriors: Option<FramePosterior>,
    pub locations: Vec<LocationObservation>,
    pub activities: Vec<ActivityObservation>,
}

/// Transcribe-stage output for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipTranscription {
    pub video_id: String,
    pub words: Vec<TranscribedWord>,
}

/// Results of a full run, with per-stage records in input order.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub segmentations: Vec<ClipSegmentation>,
    pub transcriptions: Vec<ClipTranscription>,
    pub fusion: Vec<FusionRecord>,
    pub corpus: QuadrupletCorpus,
}

type ClipResult = (
    ClipSegmentation,
    ClipTranscription,
    Vec<Quadruplet>,
    Vec<FusionRecord>,
);

fn run_clip(
    input: &ClipInput,
    detector: &dyn FrameDetector,
    scorer: &dyn WordTypeScorer,
    table: Option<&IpaReferenceTable>,
    settings: &PipelineSettings,
) -> Result<ClipResult> {
    let seg = segment_clip(
        &input.identity.video_id,
        &input.audio,
        input.posteriors.as_ref(),
        detector,
        scorer,
        settings,
    )?;
    let words = transcribe_clip(&input.audio, &seg, table, settings)?;
    let (quads, records) = fuse_clip(
        &input.identity,
        &words,
        &input.locations,
        &input.activities,
        settings,
    )?;
    let transcription = ClipTranscription {
        video_id: input.identity.video_id.clone(),
        words,
    };
    Ok((seg, transcription, quads, records))
}

/// Runs segment, subword, transcribe and fuse over every recording and
/// assembles the corpus. Recordings are processed on parallel threads;
/// results and the first error are taken in input order. `detector`
/// defaults to the configured energy detector.
pub fn run_pipeline(
    inputs: &[ClipInput],
    detector: Option<&dyn FrameDetector>,
    scorer: &dyn WordTypeScorer,
    table: Option<&IpaReferenceTable>,
    settings: &PipelineSettings,
) -> Result<PipelineOutput> {
    settings.validate()?;
    let detector = detector.unwrap_or(&settings.energy_detector);
    let results: Vec<Result<ClipResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|input| scope.spawn(move || run_clip(input, detector, scorer, table, settings)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|panic| std::panic::resume_unwind(panic))
            })
            .collect()
    });
    let mut out = PipelineOutput {
        segmentations: Vec::new(),
        transcriptions: Vec::new(),
        fusion: Vec::new(),
        corpus: QuadrupletCorpus::default(),
    };
    let mut quads = Vec::new();
    for r in results {
        let (seg, words, q, records) = r?;
        out.segmentations.push(seg);
        out.transcriptions.push(words);
        out.fusion.extend(records);
        quads.extend(q);
    }
    out.corpus = QuadrupletCorpus::new(quads).in_stage(FUSE)?;
    Ok(out)
}

/// Word types of a segmentation in order, for quick inspection.
pub fn word_types(segmentation: &ClipSegmentation) -> Vec<Vec<WordType>> {
    segmentation
        .sentences
        .iter()
        .map(|s| s.words.iter().map(|w| w.word).collect())
        .collect()
}
