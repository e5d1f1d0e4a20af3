//! Frame-level event detection, sentence extraction, word segmentation and
//! word-type classification.
//!
//! Posterior row `i` describes the cell `[time(i), time(i) + hop)`. A run of
//! rows `a..=b` therefore maps to the span `[time(a), time(b) + hop)`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::audio::{frame_features, pooled_features, AudioClip, FeatureConfig, FeatureVector};
use crate::corpus::{TimeSpan, TIME_EPSILON};
use crate::error::{Error, Result};
use crate::labels::{argmax_first, Label, WordType};

pub const DOG: &str = "Dog";
pub const SILENCE: &str = "Silence";

/// Inventory of the baseline detectors.
pub const BASELINE_CATEGORIES: [&str; 5] = [DOG, SILENCE, "Speech", "Music", "OtherNoise"];

const ROW_SUM_TOLERANCE: f64 = 1e-6;
const GRID_TOLERANCE: f64 = 1e-6;

/// Per-frame category probabilities on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePosterior {
    categories: Vec<String>,
    start: f64,
    hop: f64,
    rows: Vec<Vec<f64>>,
    dog: usize,
    silence: usize,
}

impl FramePosterior {
    pub fn new(categories: Vec<String>, start: f64, hop: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let find = |name: &str| {
            categories.iter().position(|c| c == name).ok_or_else(|| {
                Error::InvalidPosterior(format!("category inventory lacks {name:?}"))
            })
        };
        let dog = find(DOG)?;
        let silence = find(SILENCE)?;
        for (i, c) in categories.iter().enumerate() {
            if categories[..i].contains(c) {
                return Err(Error::InvalidPosterior(format!("duplicate category {c:?}")));
            }
        }
        if !(hop > 0.0 && start.is_finite()) {
            return Err(Error::InvalidPosterior(format!(
                "bad grid start={start} hop={hop}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != categories.len() {
                return Err(Error::InvalidPosterior(format!(
                    "row {i} has {} entries for {} categories",
                    row.len(),
                    categories.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidPosterior(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidPosterior(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self {
            categories,
            start,
            hop,
            rows,
            dog,
            silence,
        })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn hop(&self) -> f64 {
        self.hop
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.hop
    }

    pub fn dog(&self, i: usize) -> f64 {
        self.rows[i][self.dog]
    }

    /// Largest probability among categories other than Dog and Silence.
    pub fn noise(&self, i: usize) -> f64 {
        self.rows[i]
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != self.dog && c != self.silence)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max)
    }

    /// Argmax category index of row `i`, ties by inventory order.
    pub fn argmax(&self, i: usize) -> usize {
        argmax_first(&self.rows[i]).unwrap_or(self.silence)
    }

    pub fn is_dog_frame(&self, i: usize) -> bool {
        self.argmax(i) == self.dog
    }

    pub fn is_silence_frame(&self, i: usize) -> bool {
        self.argmax(i) == self.silence
    }

    fn run_span(&self, first: usize, last: usize) -> TimeSpan {
        TimeSpan {
            begin: self.time(first),
            end: self.time(last) + self.hop,
        }
    }
}

/// Reads `time,<category1>,<category2>,...`. The hop is taken from the time
/// column; a single-row file uses `fallback_hop`.
pub fn read_posteriors_csv<R: Read>(source: R, fallback_hop: f64) -> Result<FramePosterior> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("time") {
        return Err(Error::InvalidPosterior(
            "first column must be `time`".into(),
        ));
    }
    let categories: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::malformed(i + 2, e.to_string()))?;
        let (t, row) = values
            .split_first()
            .ok_or_else(|| Error::malformed(i + 2, "empty row"))?;
        times.push(*t);
        rows.push(row.to_vec());
    }
    if rows.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    let hop = if times.len() > 1 {
        (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
    } else {
        fallback_hop
    };
    for (i, t) in times.iter().enumerate() {
        if (t - (times[0] + i as f64 * hop)).abs() > GRID_TOLERANCE {
            return Err(Error::InvalidPosterior(format!(
                "row {i} time {t} is off the uniform grid"
            )));
        }
    }
    FramePosterior::new(categories, times[0], hop, rows)
}

pub fn write_posteriors_csv<W: Write>(posterior: &FramePosterior, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["time".to_string()];
    header.extend(posterior.categories.iter().cloned());
    writer.write_record(&header)?;
    for (i, row) in posterior.rows.iter().enumerate() {
        let mut record = vec![posterior.time(i).to_string()];
        record.extend(row.iter().map(f64::to_string));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Maps frame features to per-frame category posteriors.
pub trait FrameDetector: Send + Sync {
    /// Category inventory; always contains [`DOG`] and [`SILENCE`].
    fn categories(&self) -> &[String];

    /// One probability row per input frame.
    fn detect(&self, frames: &[FeatureVector]) -> Result<Vec<Vec<f64>>>;
}

/// Runs `detector` over a whole clip. Row times are shifted by half the
/// excess of frame length over hop so each row's cell sits centered in its
/// analysis window.
pub fn detect_clip(
    detector: &dyn FrameDetector,
    clip: &AudioClip,
    features: &FeatureConfig,
) -> Result<FramePosterior> {
    let frames = frame_features(clip, features)?;
    let rows = detector.detect(&frames)?;
    if rows.len() != frames.len() {
        return Err(Error::InvalidPosterior(format!(
            "detector returned {} rows for {} frames",
            rows.len(),
            frames.len()
        )));
    }
    let start = (features.grid.frame_length - features.grid.hop) / 2.0;
    FramePosterior::new(
        detector.categories().to_vec(),
        start,
        features.grid.hop,
        rows,
    )
}

/// Training-free baseline: log-energy gate between Dog and Silence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyDetector {
    /// Frame power (dB, summed over bands) at which P(Dog) = 0.5.
    pub threshold_db: f64,
    /// Logistic slope in dB.
    pub slope_db: f64,
    #[serde(skip)]
    categories: Vec<String>,
}

impl Default for EnergyDetector {
    fn default() -> Self {
        Self::new(-30.0, 2.0)
    }
}

impl EnergyDetector {
    pub fn new(threshold_db: f64, slope_db: f64) -> Self {
        Self {
            threshold_db,
            slope_db,
            categories: BASELINE_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FrameDetector for EnergyDetector {
    fn categories(&self) -> &[String] {
        &self.categories
    }

    fn detect(&self, frames: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
        Ok(frames
            .iter()
            .map(|f| {
                let power: f64 = f.values().iter().map(|v| v.exp()).sum();
                let db = 10.0 * power.max(1e-300).log10();
                let p_dog = 1.0 / (1.0 + (-(db - self.threshold_db) / self.slope_db).exp());
                vec![p_dog, 1.0 - p_dog, 0.0, 0.0, 0.0]
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub dog_threshold: f64,
    /// Ceiling on any non-dog, non-silence posterior.
    pub noise_threshold: f64,
    /// Dog runs separated by less than this (seconds) join one sentence.
    pub min_sentence_gap: f64,
    /// Expected posterior hop for word segmentation.
    pub word_gap: f64,
    pub min_word_duration: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            dog_threshold: 0.5,
            noise_threshold: 0.3,
            min_sentence_gap: 1.0,
            word_gap: 0.1,
            min_word_duration: 0.05,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |p: f64| p > 0.0 && p < 1.0;
        if !open_unit(self.dog_threshold) || !open_unit(self.noise_threshold) {
            return Err(Error::Config(
                "segmentation thresholds must lie in (0, 1)".into(),
            ));
        }
        if !(self.min_sentence_gap > 0.0 && self.word_gap > 0.0 && self.min_word_duration > 0.0) {
            return Err(Error::Config(
                "segmentation durations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Maximal runs of clean dog frames, merged across short gaps.
pub fn extract_sentences(
    posteriors: &FramePosterior,
    config: &SegmentationConfig,
) -> Result<Vec<TimeSpan>> {
    config.validate()?;
    if posteriors.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    let qualifies = |i: usize| {
        posteriors.dog(i) >= config.dog_threshold && posteriors.noise(i) < config.noise_threshold
    };

    let mut runs: Vec<(usize, usize)> = Vec::new();
    for i in 0..posteriors.len() {
        if !qualifies(i) {
            continue;
        }
        match runs.last_mut() {
            Some((_, last)) if *last + 1 == i => *last = i,
            Some((_, last)) => {
                let gap = (i - *last - 1) as f64 * posteriors.hop();
                if gap < config.min_sentence_gap - TIME_EPSILON {
                    *last = i;
                } else {
                    runs.push((i, i));
                }
            }
            None => runs.push((i, i)),
        }
    }
    Ok(runs
        .into_iter()
        .map(|(a, b)| posteriors.run_span(a, b))
        .collect())
}

/// Splits a sentence into words at silence/dog transitions. Frames whose
/// argmax is neither Dog nor Silence count as silence here.
pub fn segment_words(
    posteriors: &FramePosterior,
    sentence: &TimeSpan,
    config: &SegmentationConfig,
) -> Result<Vec<TimeSpan>> {
    config.validate()?;
    if posteriors.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    if (posteriors.hop() - config.word_gap).abs() > GRID_TOLERANCE {
        return Err(Error::InvalidPosterior(format!(
            "posterior hop {} does not match word_gap {}",
            posteriors.hop(),
            config.word_gap
        )));
    }
    let coverage_end = posteriors.time(posteriors.len() - 1) + posteriors.hop();
    if sentence.begin < posteriors.start() - TIME_EPSILON
        || sentence.end > coverage_end + TIME_EPSILON
    {
        return Err(Error::SpanOutsideCoverage {
            begin: sentence.begin,
            end: sentence.end,
        });
    }

    let inside = |i: usize| {
        let t = posteriors.time(i);
        t >= sentence.begin - TIME_EPSILON && t + posteriors.hop() <= sentence.end + TIME_EPSILON
    };
    let mut words = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for i in (0..posteriors.len()).filter(|&i| inside(i)) {
        if posteriors.is_dog_frame(i) {
            current = match current {
                Some((a, b)) if b + 1 == i => Some((a, i)),
                Some(run) => {
                    words.push(run);
                    Some((i, i))
                }
                None => Some((i, i)),
            };
        } else if let Some(run) = current.take() {
            words.push(run);
        }
    }
    words.extend(current);
    Ok(words
        .into_iter()
        .map(|(a, b)| posteriors.run_span(a, b))
        .filter(|s| s.duration() >= config.min_word_duration - TIME_EPSILON)
        .collect())
}

/// Produces one score per [`WordType`], in declaration order.
pub trait WordTypeScorer: Send + Sync {
    fn score(&self, clip: &AudioClip) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordClassification {
    pub word: WordType,
    pub type_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSpan {
    pub span: TimeSpan,
    pub word: WordType,
    pub type_scores: Vec<f64>,
}

/// Argmax word type of `scorer` on a single-word clip, ties by enum order.
pub fn classify_word(
    clip: &AudioClip,
    scorer: &dyn WordTypeScorer,
    config: &SegmentationConfig,
) -> Result<WordClassification> {
    if clip.duration() < config.min_word_duration - TIME_EPSILON {
        return Err(Error::ClipTooShort {
            duration: clip.duration(),
            required: config.min_word_duration,
        });
    }
    let type_scores = scorer.score(clip)?;
    if type_scores.len() != WordType::count() {
        return Err(Error::DimensionMismatch {
            expected: WordType::count(),
            actual: type_scores.len(),
        });
    }
    let best = argmax_first(&type_scores)
        .ok_or_else(|| Error::InvalidClip("word scores are all NaN".into()))?;
    Ok(WordClassification {
        word: WordType::ALL[best],
        type_scores,
    })
}

/// Mean pooled feature per label; scores are a softmax over negative
/// Euclidean distances to the centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearestCentroid<L> {
    pub labels: Vec<L>,
    pub centroids: Vec<FeatureVector>,
    pub features: FeatureConfig,
    pub sample_rate: u32,
}

/// Fits one centroid per entry of `labels` from labeled clips.
pub fn train_centroids<L: Clone + PartialEq + std::fmt::Debug>(
    labels: &[L],
    clips: &[(AudioClip, L)],
    features: &FeatureConfig,
) -> Result<NearestCentroid<L>> {
    features.validate()?;
    let sample_rate = match clips.first() {
        Some((clip, _)) => clip.sample_rate(),
        None => {
            return Err(Error::EmptyLabel(
                labels.first().map(|l| format!("{l:?}")).unwrap_or_default(),
            ))
        }
    };
    let mut pooled: Vec<Vec<FeatureVector>> = vec![Vec::new(); labels.len()];
    for (clip, label) in clips {
        if clip.sample_rate() != sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: sample_rate,
                actual: clip.sample_rate(),
            });
        }
        let slot = labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Config(format!("training label {label:?} not in inventory")))?;
        pooled[slot].push(pooled_features(clip, features)?);
    }
    let centroids = labels
        .iter()
        .zip(&pooled)
        .map(|(l, vs)| FeatureVector::mean(vs).ok_or_else(|| Error::EmptyLabel(format!("{l:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(NearestCentroid {
        labels: labels.to_vec(),
        centroids,
        features: *features,
        sample_rate,
    })
}

impl<L> NearestCentroid<L> {
    pub fn scores(&self, query: &FeatureVector) -> Result<Vec<f64>> {
        let dim = self.centroids.first().map_or(0, FeatureVector::dim);
        if query.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: query.dim(),
            });
        }
        let neg: Vec<f64> = self.centroids.iter().map(|c| -c.euclidean(query)).collect();
        Ok(softmax(&neg))
    }

    fn check_rate(&self, clip: &AudioClip) -> Result<()> {
        if clip.sample_rate() != self.sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: self.sample_rate,
                actual: clip.sample_rate(),
            });
        }
        Ok(())
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl NearestCentroid<String> {
    /// Errors unless the inventory holds both Dog and Silence.
    pub fn check_inventory(&self) -> Result<()> {
        for needed in [DOG, SILENCE] {
            if !self.labels.iter().any(|l| l == needed) {
                return Err(Error::InvalidPosterior(format!(
                    "detector inventory lacks {needed:?}"
                )));
            }
        }
        Ok(())
    }
}

impl FrameDetector for NearestCentroid<String> {
    fn categories(&self) -> &[String] {
        &self.labels
    }

    fn detect(&self, frames: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
        self.check_inventory()?;
        frames.iter().map(|f| self.scores(f)).collect()
    }
}

impl WordTypeScorer for NearestCentroid<WordType> {
    fn score(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        self.check_rate(clip)?;
        let raw = self.scores(&pooled_features(clip, &self.features)?)?;
        let mut out = vec![0.0; WordType::count()];
        for (label, s) in self.labels.iter().zip(raw) {
            out[label.index()] = s;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats() -> Vec<String> {
        BASELINE_CATEGORIES.iter().map(|s| s.to_string()).collect()
    }

    /// Rows from a compact code: 'd' dog, 's' silence, 'p' speech-argmax,
    /// 'n' dog with P(Speech)=0.5.
    fn posterior(code: &str) -> FramePosterior {
        let rows = code
            .chars()
            .map(|c| match c {
                'd' => vec![0.9, 0.1, 0.0, 0.0, 0.0],
                's' => vec![0.0, 1.0, 0.0, 0.0, 0.0],
                'p' => vec![0.2, 0.1, 0.7, 0.0, 0.0],
                'n' => vec![0.5, 0.0, 0.5, 0.0, 0.0],
                _ => unreachable!(),
            })
            .collect();
        FramePosterior::new(cats(), 0.0, 0.1, rows).unwrap()
    }

    fn approx_span(s: &TimeSpan, b: f64, e: f64) -> bool {
        (s.begin - b).abs() < 1e-9 && (s.end - e).abs() < 1e-9
    }

    #[test]
    fn whole_clip_sentence() {
        let p = posterior(&"d".repeat(20));
        let s = extract_sentences(&p, &SegmentationConfig::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert!(approx_span(&s[0], 0.0, 2.0));
    }

    #[test]
    fn long_gap_splits_sentences() {
        let code = format!("{}{}{}", "d".repeat(10), "s".repeat(15), "d".repeat(10));
        let s = extract_sentences(&posterior(&code), &SegmentationConfig::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(approx_span(&s[0], 0.0, 1.0));
        assert!(approx_span(&s[1], 2.5, 3.5));
    }

    #[test]
    fn speech_contaminated_frames_rejected() {
        let s =
            extract_sentences(&posterior(&"n".repeat(10)), &SegmentationConfig::default()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn empty_posterior_error() {
        let p = FramePosterior::new(cats(), 0.0, 0.1, vec![]).unwrap();
        assert!(matches!(
            extract_sentences(&p, &SegmentationConfig::default()),
            Err(Error::EmptyPosterior)
        ));
    }

    #[test]
    fn all_dog_sentence_is_one_word() {
        let p = posterior(&"d".repeat(8));
        let cfg = SegmentationConfig::default();
        let s = extract_sentences(&p, &cfg).unwrap();
        let w = segment_words(&p, &s[0], &cfg).unwrap();
        assert_eq!(w, s);
    }

    #[test]
    fn internal_pause_two_words() {
        let p = posterior("dddddssdddd");
        let cfg = SegmentationConfig::default();
        let s = extract_sentences(&p, &cfg).unwrap();
        assert_eq!(s.len(), 1);
        let w = segment_words(&p, &s[0], &cfg).unwrap();
        assert_eq!(w.len(), 2);
        assert!((w[0].duration() - 0.5).abs() < 1e-9);
        assert!((w[1].duration() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn speech_argmax_splits_words() {
        // Hand-run: frames 0-4 dog (word opens at 0.0), 5-6 speech argmax
        // (treated as silence, word closes at 0.5), 7-10 dog (word 0.7-1.1).
        let p = posterior("dddddppdddd");
        let cfg = SegmentationConfig::default();
        let sentence = TimeSpan::new(0.0, 1.1).unwrap();
        let w = segment_words(&p, &sentence, &cfg).unwrap();
        assert_eq!(w.len(), 2);
        assert!(approx_span(&w[0], 0.0, 0.5));
        assert!(approx_span(&w[1], 0.7, 1.1));
    }

    #[test]
    fn sentence_outside_coverage() {
        let p = posterior("dddd");
        let err = segment_words(
            &p,
            &TimeSpan::new(0.0, 2.0).unwrap(),
            &SegmentationConfig::default(),
        );
        assert!(matches!(err, Err(Error::SpanOutsideCoverage { .. })));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(
            FramePosterior::new(cats(), 0.0, 0.1, vec![vec![0.5, 0.4, 0.0, 0.0, 0.0]]).is_err()
        );
        assert!(FramePosterior::new(vec!["Dog".into()], 0.0, 0.1, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn posterior_csv_round_trip() {
        let p = posterior("ddssp");
        let mut buf = Vec::new();
        write_posteriors_csv(&p, &mut buf).unwrap();
        let back = read_posteriors_csv(buf.as_slice(), 0.1).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back.categories(), p.categories());
        assert!((back.hop() - 0.1).abs() < 1e-12);
    }

    struct Fixed(Vec<f64>);

    impl WordTypeScorer for Fixed {
        fn score(&self, _: &AudioClip) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    fn clip(seconds: f64) -> AudioClip {
        AudioClip::new(vec![0.1; (seconds * 16000.0) as usize], 16000).unwrap()
    }

    #[test]
    fn one_hot_growl() {
        let mut s = vec![0.0; 6];
        s[WordType::Growl.index()] = 1.0;
        let c = classify_word(&clip(0.3), &Fixed(s), &SegmentationConfig::default()).unwrap();
        assert_eq!(c.word, WordType::Growl);
    }

    #[test]
    fn tie_goes_to_bark() {
        let s = vec![0.4, 0.4, 0.05, 0.05, 0.05, 0.05];
        let c = classify_word(&clip(0.3), &Fixed(s), &SegmentationConfig::default()).unwrap();
        assert_eq!(c.word, WordType::Bark);
    }

    #[test]
    fn short_word_rejected() {
        let s = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let err = classify_word(&clip(0.01), &Fixed(s), &SegmentationConfig::default());
        assert!(matches!(err, Err(Error::ClipTooShort { .. })));
    }

    fn tone(freq: f64) -> AudioClip {
        let s = (0..8000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 16000.0).sin())
            .collect();
        AudioClip::new(s, 16000).unwrap()
    }

    #[test]
    fn centroid_of_single_clip_is_its_pooled_vector() {
        let cfg = FeatureConfig::default();
        let a = tone(400.0);
        let b = tone(2000.0);
        let model = train_centroids(
            &["lo".to_string(), "hi".to_string()],
            &[
                (a.clone(), "lo".into()),
                (b.clone(), "hi".into()),
                (b.clone(), "hi".into()),
            ],
            &cfg,
        )
        .unwrap();
        assert_eq!(model.centroids[0], pooled_features(&a, &cfg).unwrap());
        // two identical clips average to the same centroid
        let pb = pooled_features(&b, &cfg).unwrap();
        for (x, y) in model.centroids[1].values().iter().zip(pb.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_label_errors() {
        let err = train_centroids(
            &["lo".to_string(), "hi".to_string()],
            &[(tone(400.0), "lo".to_string())],
            &FeatureConfig::default(),
        );
        assert!(matches!(err, Err(Error::EmptyLabel(_))));
    }

    #[test]
    fn equidistant_query_scores_equal() {
        let model = NearestCentroid {
            labels: vec![0, 1],
            centroids: vec![FeatureVector(vec![0.0, 0.0]), FeatureVector(vec![2.0, 0.0])],
            features: FeatureConfig::default(),
            sample_rate: 16000,
        };
        let s = model.scores(&FeatureVector(vec![1.0, 5.0])).unwrap();
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn energy_detector_on_bursts() {
        let sr = 16000;
        let mut s = Vec::new();
        for _ in 0..3 {
            s.extend(tone(500.0).samples()[..8000].iter());
            s.extend(std::iter::repeat_n(0.0, (0.3 * sr as f64) as usize));
        }
        let clip = AudioClip::new(s, sr).unwrap();
        let p = detect_clip(&EnergyDetector::default(), &clip, &FeatureConfig::default()).unwrap();
        let cfg = SegmentationConfig::default();
        let sentences = extract_sentences(&p, &cfg).unwrap();
        assert_eq!(sentences.len(), 1);
        let words = segment_words(&p, &sentences[0], &cfg).unwrap();
        assert_eq!(words.len(), 3);
        for (k, w) in words.iter().enumerate() {
            let truth = k as f64 * 0.8;
            assert!((w.begin - truth).abs() <= 0.1 + 1e-9, "{w:?}");
            assert!((w.end - (truth + 0.5)).abs() <= 0.1 + 1e-9, "{w:?}");
        }
    }
}
