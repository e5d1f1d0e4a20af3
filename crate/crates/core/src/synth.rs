//! Seeded synthetic data: random corpora, test signals, scripted posteriors
//! and a self-consistent end-to-end fixture bundle with known answers.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::audio::{write_wav, AudioClip, FeatureConfig};
use crate::context::{
    activity_window, write_activity_csv, write_location_csv, ActivityObservation,
    LocationObservation,
};
use crate::corpus::{write_corpus, Quadruplet, QuadrupletCorpus, Subword, TimeSpan};
use crate::detect::{
    train_centroids, write_posteriors_csv, FramePosterior, NearestCentroid, BASELINE_CATEGORIES,
};
use crate::error::Result;
use crate::labels::{ActivityLabel, IpaInventory, IpaSymbol, Label, LocationLabel, WordType};
use crate::subword::{transcription_features, write_ipa_table, IpaReferenceTable};

/// Shape limits for [`random_corpus`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomCorpusSpec {
    pub max_quadruplets: usize,
    pub max_sentences: usize,
    pub max_subwords: usize,
    /// Number of distinct dog ids; 0 leaves `dog_id` unset.
    pub dog_pool: usize,
}

impl Default for RandomCorpusSpec {
    fn default() -> Self {
        Self {
            max_quadruplets: 500,
            max_sentences: 50,
            max_subwords: 3,
            dog_pool: 4,
        }
    }
}

/// Random skewed weights over `n` labels; roughly a third get weight zero.
fn skewed_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<u32> {
    let mut w: Vec<u32> = (0..n)
        .map(|_| {
            if rng.random_bool(0.35) {
                0
            } else {
                rng.random_range(1..=20)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0) {
        w[rng.random_range(0..n)] = 1;
    }
    w
}

fn pick<R: Rng, L: Label>(rng: &mut R, dist: &WeightedIndex<u32>) -> L {
    L::all()[dist.sample(rng)]
}

/// Millisecond-quantized time.
fn ms(v: u32) -> f64 {
    v as f64 / 1000.0
}

/// A random corpus with skewed label frequencies, sentences of one or more
/// words, and subword partitions drawn from `inventory`.
pub fn random_corpus<R: Rng>(
    rng: &mut R,
    spec: &RandomCorpusSpec,
    inventory: &IpaInventory,
) -> QuadrupletCorpus {
    let words = WeightedIndex::new(skewed_weights(rng, WordType::count())).expect("weights");
    let locations =
        WeightedIndex::new(skewed_weights(rng, LocationLabel::count())).expect("weights");
    let activities =
        WeightedIndex::new(skewed_weights(rng, ActivityLabel::count())).expect("weights");
    let symbols = inventory.symbols();
    let n_symbols = rng.random_range(1..=symbols.len().min(6));

    let n_sentences = rng.random_range(1..=spec.max_sentences);
    let total = rng.random_range(n_sentences..=spec.max_quadruplets.max(n_sentences));
    // each sentence gets one word, the rest are spread at random
    let mut sizes = vec![1usize; n_sentences];
    for _ in n_sentences..total {
        sizes[rng.random_range(0..n_sentences)] += 1;
    }

    let mut quads = Vec::with_capacity(total);
    for (s, &size) in sizes.iter().enumerate() {
        let video = format!("v{}", s % 7);
        let dog_id = (spec.dog_pool > 0 && rng.random_bool(0.8))
            .then(|| format!("dog{}", rng.random_range(0..spec.dog_pool)));
        // sentences occupy disjoint 1000 s slots
        let mut cursor = 1000 * s as u32 * 1000;
        for i in 0..size {
            cursor += rng.random_range(10..=500);
            let begin = cursor;
            let n_sub = rng.random_range(0..=spec.max_subwords);
            let mut edges = vec![begin];
            for _ in 0..n_sub {
                let last = *edges.last().expect("non-empty");
                edges.push(last + rng.random_range(20..=400));
            }
            let end = if n_sub == 0 {
                begin + rng.random_range(50..=2000)
            } else {
                *edges.last().expect("non-empty")
            };
            cursor = end;
            let subwords = edges
                .windows(2)
                .map(|e| Subword {
                    span: TimeSpan::new(ms(e[0]), ms(e[1])).expect("ordered"),
                    symbol: symbols[rng.random_range(0..n_symbols)].clone(),
                    distance: rng.random_range(0..1000) as f64 / 256.0,
                })
                .collect();
            quads.push(Quadruplet {
                word: pick(rng, &words),
                subwords,
                location: pick(rng, &locations),
                activity: pick(rng, &activities),
                span: TimeSpan::new(ms(begin), ms(end)).expect("ordered"),
                sentence_id: format!("s{s}"),
                index_in_sentence: i as u32,
                video_id: video.clone(),
                dog_id: dog_id.clone(),
            });
        }
    }
    QuadrupletCorpus::new(quads).expect("generated corpus is valid")
}

/// `n` quadruplets with word, location and activity drawn independently
/// from fixed non-uniform priors, in sentences of `sentence_len` words.
/// Three word types, four locations and four activities carry weight, so
/// every supported word-context cell expects at least `n / 20` members.
pub fn independent_corpus<R: Rng>(rng: &mut R, n: usize, sentence_len: usize) -> QuadrupletCorpus {
    let words = WeightedIndex::new([35u32, 0, 25, 0, 40, 0]).expect("weights");
    let locations = WeightedIndex::new([30u32, 0, 25, 0, 25, 0, 0, 0, 20, 0, 0]).expect("weights");
    let activities =
        WeightedIndex::new([0u32, 25, 25, 0, 30, 0, 0, 20, 0, 0, 0, 0, 0, 0, 0]).expect("weights");
    let quads = (0..n)
        .map(|k| {
            let (s, i) = (k / sentence_len, k % sentence_len);
            let begin = i as f64;
            Quadruplet {
                word: pick(rng, &words),
                subwords: vec![],
                location: pick(rng, &locations),
                activity: pick(rng, &activities),
                span: TimeSpan::new(begin, begin + 0.5).expect("ordered"),
                sentence_id: format!("s{s}"),
                index_in_sentence: i as u32,
                video_id: format!("v{s}"),
                dog_id: None,
            }
        })
        .collect();
    QuadrupletCorpus::new(quads).expect("generated corpus is valid")
}

/// A sine starting at phase zero.
pub fn tone(freq: f64, seconds: f64, amplitude: f64, sample_rate: u32) -> Vec<f64> {
    let n = (seconds * sample_rate as f64).round() as usize;
    (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / sample_rate as f64).sin())
        .collect()
}

pub fn silence(seconds: f64, sample_rate: u32) -> Vec<f64> {
    vec![0.0; (seconds * sample_rate as f64).round() as usize]
}

/// Frame categories for scripted posteriors over [`BASELINE_CATEGORIES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Dog,
    Silence,
    Noise,
    /// Dog and speech at 0.5 each.
    SpeechContaminated,
}

impl FrameKind {
    pub fn row(self) -> [f64; 5] {
        match self {
            FrameKind::Dog => [0.9, 0.05, 0.02, 0.02, 0.01],
            FrameKind::Silence => [0.02, 0.95, 0.01, 0.01, 0.01],
            FrameKind::Noise => [0.1, 0.2, 0.05, 0.05, 0.6],
            FrameKind::SpeechContaminated => [0.5, 0.0, 0.5, 0.0, 0.0],
        }
    }
}

/// Posterior sequence starting at time zero from `(kind, frames)` runs.
pub fn scripted_posterior(script: &[(FrameKind, usize)], hop: f64) -> FramePosterior {
    let rows = script
        .iter()
        .flat_map(|&(kind, n)| std::iter::repeat_n(kind.row().to_vec(), n))
        .collect();
    FramePosterior::new(
        BASELINE_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        0.0,
        hop,
        rows,
    )
    .expect("scripted rows are valid")
}

/// A scripted posterior with its constructed sentence and word spans.
#[derive(Debug, Clone)]
pub struct PosteriorFixture {
    pub posterior: FramePosterior,
    pub script: Vec<(FrameKind, usize)>,
    /// `(sentence, words)` in time order.
    pub sentences: Vec<(TimeSpan, Vec<TimeSpan>)>,
}

/// `k` dog runs grouped into sentences. Runs of one sentence are separated
/// by 2 to 5 silent frames; sentences by at least 15 frames of silence or
/// noise. Hop is 0.1 s.
pub fn posterior_fixture<R: Rng>(rng: &mut R, k: usize) -> PosteriorFixture {
    const HOP: f64 = 0.1;
    let mut script = vec![(FrameKind::Silence, rng.random_range(3..=10))];
    let mut frame = script[0].1;
    let mut sentences: Vec<(TimeSpan, Vec<TimeSpan>)> = Vec::new();
    let span = |a: usize, b: usize| TimeSpan {
        begin: a as f64 * HOP,
        end: b as f64 * HOP,
    };
    let mut current: Vec<(usize, usize)> = Vec::new();
    for run in 0..k {
        let len = rng.random_range(1..=6);
        script.push((FrameKind::Dog, len));
        current.push((frame, frame + len));
        frame += len;
        let last = run + 1 == k;
        if last || rng.random_bool(0.4) {
            let words: Vec<TimeSpan> = current.iter().map(|&(a, b)| span(a, b)).collect();
            sentences.push((span(current[0].0, current.last().expect("run").1), words));
            current.clear();
            let gap = rng.random_range(15..=25);
            if rng.random_bool(0.5) {
                let noise = rng.random_range(1..gap);
                script.push((FrameKind::Silence, gap - noise));
                script.push((FrameKind::Noise, noise));
            } else {
                script.push((FrameKind::Silence, gap));
            }
            frame += gap;
        } else {
            let gap = rng.random_range(2..=5);
            script.push((FrameKind::Silence, gap));
            frame += gap;
        }
    }
    PosteriorFixture {
        posterior: scripted_posterior(&script, HOP),
        script,
        sentences,
    }
}

pub const FIXTURE_SAMPLE_RATE: u32 = 16000;
pub const FIXTURE_VIDEO: &str = "fixture";
pub const FIXTURE_DOG: &str = "dog-1";
const FIXTURE_HOP: f64 = 0.1;
const FIXTURE_AMPLITUDE: f64 = 0.5;
const VOWELS: [(&str, f64); 4] = [("u", 350.0), ("a", 800.0), ("e", 1600.0), ("ɪ", 3000.0)];
/// Silent gap between the two vowels of a two-vowel word, seconds.
pub const FIXTURE_VOWEL_GAP: f64 = 0.1;

fn vowel_freq(symbol: &str) -> f64 {
    VOWELS
        .iter()
        .find(|(s, _)| *s == symbol)
        .map(|v| v.1)
        .expect("fixture vowel")
}

/// Vowels and their durations (s) making up each fixture word type.
pub fn word_template(word: WordType) -> &'static [(&'static str, f64)] {
    match word {
        WordType::Bark => &[("a", 0.3)],
        WordType::Howl => &[("u", 0.6)],
        WordType::Yip => &[("e", 0.2)],
        WordType::Whimper => &[("ɪ", 0.2), ("u", 0.2)],
        WordType::Growl => &[("u", 0.2), ("a", 0.2)],
        WordType::BowWow => &[("a", 0.2), ("a", 0.2)],
    }
}

/// Audio of one fixture word; vowels are separated by a silent gap.
pub fn render_word(word: WordType) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, &(sym, dur)) in word_template(word).iter().enumerate() {
        if i > 0 {
            out.extend(silence(FIXTURE_VOWEL_GAP, FIXTURE_SAMPLE_RATE));
        }
        out.extend(tone(
            vowel_freq(sym),
            dur,
            FIXTURE_AMPLITUDE,
            FIXTURE_SAMPLE_RATE,
        ));
    }
    out
}

fn template_duration(word: WordType) -> f64 {
    let t = word_template(word);
    t.iter().map(|v| v.1).sum::<f64>() + FIXTURE_VOWEL_GAP * (t.len() - 1) as f64
}

struct FixtureSentence {
    location: LocationLabel,
    words: &'static [(WordType, Option<ActivityLabel>)],
}

/// `None` activity: no activity observation is emitted for that word.
const FIXTURE_SCRIPT: [FixtureSentence; 5] = [
    FixtureSentence {
        location: LocationLabel::Grass,
        words: &[
            (WordType::Bark, Some(ActivityLabel::Sit)),
            (WordType::Bark, Some(ActivityLabel::Sit)),
            (WordType::Howl, Some(ActivityLabel::Walk)),
        ],
    },
    FixtureSentence {
        location: LocationLabel::LivingRoom,
        words: &[
            (WordType::Yip, Some(ActivityLabel::LayDown)),
            (WordType::Whimper, Some(ActivityLabel::LayDown)),
        ],
    },
    FixtureSentence {
        location: LocationLabel::Road,
        words: &[
            (WordType::Growl, Some(ActivityLabel::FightWithDogs)),
            (WordType::Bark, Some(ActivityLabel::FightWithDogs)),
            (WordType::Growl, Some(ActivityLabel::ShowTeethOrBite)),
        ],
    },
    FixtureSentence {
        location: LocationLabel::Snowfield,
        words: &[(WordType::Howl, None)],
    },
    FixtureSentence {
        location: LocationLabel::Cage,
        words: &[
            (WordType::BowWow, Some(ActivityLabel::Walk)),
            (WordType::Yip, Some(ActivityLabel::Eat)),
            (WordType::Bark, Some(ActivityLabel::Eat)),
        ],
    },
];

/// A recording with every input the pipeline needs and the corpus it must
/// produce.
#[derive(Debug, Clone)]
pub struct FixtureBundle {
    pub audio: AudioClip,
    pub posteriors: FramePosterior,
    pub locations: Vec<LocationObservation>,
    pub activities: Vec<ActivityObservation>,
    pub ipa_table: IpaReferenceTable,
    pub word_model: NearestCentroid<WordType>,
    pub expected: QuadrupletCorpus,
}

pub const FIXTURE_FILES: [&str; 7] = [
    "audio.wav",
    "posteriors.csv",
    "locations.csv",
    "activities.csv",
    "ipa_table.csv",
    "word_model.json",
    "expected.jsonl",
];

fn frames(seconds: f64) -> usize {
    (seconds / FIXTURE_HOP).round() as usize
}

/// Builds the fixture. Words sit on the 0.1 s posterior grid, words of a
/// sentence are 0.3 s apart and sentences 2 s apart.
pub fn fixture_bundle() -> Result<FixtureBundle> {
    let sr = FIXTURE_SAMPLE_RATE;
    let mut samples = silence(1.0, sr);
    let mut kinds: Vec<FrameKind> = vec![FrameKind::Silence; frames(1.0)];
    let mut quads = Vec::new();
    let mut activities = Vec::new();
    let mut sentence_spans = Vec::new();
    for (s, sentence) in FIXTURE_SCRIPT.iter().enumerate() {
        if s > 0 {
            samples.extend(silence(2.0, sr));
            // a noise burst inside the gap in the posterior stream only
            kinds.extend(vec![FrameKind::Silence; frames(0.8)]);
            kinds.extend(vec![FrameKind::Noise; frames(0.4)]);
            kinds.extend(vec![FrameKind::Silence; frames(0.8)]);
        }
        let first_frame = kinds.len();
        for (i, &(word, activity)) in sentence.words.iter().enumerate() {
            if i > 0 {
                samples.extend(silence(0.3, sr));
                kinds.extend(vec![FrameKind::Silence; frames(0.3)]);
            }
            let a = kinds.len();
            let b = a + frames(template_duration(word));
            samples.extend(render_word(word));
            kinds.extend(vec![FrameKind::Dog; b - a]);
            let span = TimeSpan::new(a as f64 * FIXTURE_HOP, b as f64 * FIXTURE_HOP)?;
            let template = word_template(word);
            let subwords = if template.len() == 1 {
                vec![(span, template[0].0)]
            } else {
                // boundary at the middle of the silent gap
                let cut = span.begin + template[0].1 + FIXTURE_VOWEL_GAP / 2.0;
                vec![
                    (TimeSpan::new(span.begin, cut)?, template[0].0),
                    (TimeSpan::new(cut, span.end)?, template[1].0),
                ]
            };
            if let Some(act) = activity {
                let mut scores = vec![0.0; ActivityLabel::count()];
                scores[act.index()] = 2.0;
                scores[(act.index() + 1) % ActivityLabel::count()] = 0.5;
                activities.push(ActivityObservation {
                    window: activity_window(&span, 1.0),
                    scores,
                });
            }
            quads.push(Quadruplet {
                word,
                subwords: subwords
                    .into_iter()
                    .map(|(span, sym)| Subword {
                        span,
                        symbol: IpaSymbol::new(sym).expect("fixture vowel"),
                        distance: 0.0,
                    })
                    .collect(),
                location: sentence.location,
                activity: activity.unwrap_or(ActivityLabel::Unknown),
                span,
                sentence_id: crate::pipeline::sentence_id(FIXTURE_VIDEO, s),
                index_in_sentence: i as u32,
                video_id: FIXTURE_VIDEO.into(),
                dog_id: Some(FIXTURE_DOG.into()),
            });
        }
        let end_frame = kinds.len();
        sentence_spans.push((
            first_frame as f64 * FIXTURE_HOP,
            end_frame as f64 * FIXTURE_HOP,
            sentence.location,
        ));
    }
    samples.extend(silence(1.0, sr));
    kinds.extend(vec![FrameKind::Silence; frames(1.0)]);
    let per_frame = (FIXTURE_HOP * sr as f64).round() as usize;
    debug_assert_eq!(samples.len(), kinds.len() * per_frame);

    let posteriors = FramePosterior::new(
        BASELINE_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        0.0,
        FIXTURE_HOP,
        kinds.iter().map(|k| k.row().to_vec()).collect(),
    )?;

    // location observations every 50 ms; the sentence location dominates
    // within half a second of a sentence, `Others` elsewhere
    let duration = samples.len() as f64 / sr as f64;
    let locations = (0..(duration / 0.05).round() as usize)
        .map(|k| {
            let t = k as f64 * 0.05;
            let label = sentence_spans
                .iter()
                .find(|(b, e, _)| t >= b - 0.5 && t <= e + 0.5)
                .map_or(LocationLabel::Others, |s| s.2);
            let mut scores: Vec<f64> = (0..LocationLabel::count())
                .map(|i| ((i * 7 + k * 3) % 5) as f64 * 0.1)
                .collect();
            scores[label.index()] = 3.0;
            LocationObservation {
                timestamp: t,
                scores,
            }
        })
        .collect();

    let audio = AudioClip::new(samples, sr)?;
    let references: Vec<(IpaSymbol, AudioClip)> = VOWELS
        .iter()
        .map(|&(sym, f)| {
            Ok((
                IpaSymbol::new(sym)?,
                AudioClip::new(tone(f, 0.2, FIXTURE_AMPLITUDE, sr), sr)?,
            ))
        })
        .collect::<Result<_>>()?;
    let ipa_table = IpaReferenceTable::from_reference_clips(
        &references,
        &transcription_features(),
        "synthetic pure-tone vowels",
    )?;
    let training: Vec<(AudioClip, WordType)> = WordType::ALL
        .iter()
        .map(|&w| Ok((AudioClip::new(render_word(w), sr)?, w)))
        .collect::<Result<_>>()?;
    let word_model = train_centroids(WordType::ALL, &training, &FeatureConfig::default())?;

    Ok(FixtureBundle {
        audio,
        posteriors,
        locations,
        activities,
        ipa_table,
        word_model,
        expected: QuadrupletCorpus::new(quads)?,
    })
}

impl FixtureBundle {
    /// Writes the files listed in [`FIXTURE_FILES`] into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_wav(
            &self.audio,
            BufWriter::new(File::create(dir.join("audio.wav"))?),
        )?;
        write_posteriors_csv(&self.posteriors, File::create(dir.join("posteriors.csv"))?)?;
        write_location_csv(&self.locations, File::create(dir.join("locations.csv"))?)?;
        write_activity_csv(&self.activities, File::create(dir.join("activities.csv"))?)?;
        write_ipa_table(&self.ipa_table, File::create(dir.join("ipa_table.csv"))?)?;
        let mut model = serde_json::to_string_pretty(&self.word_model)?;
        model.push('\n');
        fs::write(dir.join("word_model.json"), model)?;
        write_corpus(&self.expected, File::create(dir.join("expected.jsonl"))?)?;
        Ok(())
    }
}

/// Compares a produced corpus with ground truth. Labels, identities and
/// subword symbols must match exactly, word spans to 1e-9 s and subword
/// boundaries to `boundary_tolerance`. Match distances are not compared.
pub fn compare_corpora(
    actual: &QuadrupletCorpus,
    expected: &QuadrupletCorpus,
    boundary_tolerance: f64,
) -> std::result::Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!(
            "{} quadruplets, expected {}",
            actual.len(),
            expected.len()
        ));
    }
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    for (k, (a, e)) in actual.quadruplets().zip(expected.quadruplets()).enumerate() {
        let at = format!(
            "quadruplet {k} ({} #{})",
            e.sentence_id, e.index_in_sentence
        );
        let discrete = (
            a.word,
            a.location,
            a.activity,
            &a.sentence_id,
            a.index_in_sentence,
            &a.video_id,
            &a.dog_id,
        ) == (
            e.word,
            e.location,
            e.activity,
            &e.sentence_id,
            e.index_in_sentence,
            &e.video_id,
            &e.dog_id,
        );
        if !discrete {
            return Err(format!("{at}: labels differ: got {a:?}, expected {e:?}"));
        }
        if !close(a.span.begin, e.span.begin, 1e-9) || !close(a.span.end, e.span.end, 1e-9) {
            return Err(format!("{at}: span {:?} vs {:?}", a.span, e.span));
        }
        if a.ipa_sequence() != e.ipa_sequence() {
            return Err(format!(
                "{at}: IPA {:?} vs {:?}",
                a.ipa_sequence(),
                e.ipa_sequence()
            ));
        }
        for (sa, se) in a.subwords.iter().zip(&e.subwords) {
            if !close(sa.span.begin, se.span.begin, boundary_tolerance)
                || !close(sa.span.end, se.span.end, boundary_tolerance)
            {
                return Err(format!("{at}: subword {:?} vs {:?}", sa.span, se.span));
            }
        }
    }
    Ok(())
}
