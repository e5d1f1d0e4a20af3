use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vocalex_core::audio::{sonority_envelope, AudioClip, EnvelopeConfig};
use vocalex_core::detect::{
    extract_sentences, segment_words, EnergyDetector, SegmentationConfig, WordTypeScorer,
};
use vocalex_core::pipeline::{segment_clip, PipelineSettings};
use vocalex_core::subword::{segment_subwords, OscillatorParams};
use vocalex_core::synth::{posterior_fixture, scripted_posterior, silence, tone, FrameKind};
use vocalex_core::TimeSpan;

const SR: u32 = 16000;

struct AlwaysBark;

impl WordTypeScorer for AlwaysBark {
    fn score(&self, _: &AudioClip) -> vocalex_core::Result<Vec<f64>> {
        Ok(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }
}

fn within(a: &TimeSpan, b: &TimeSpan, tol: f64) -> bool {
    (a.begin - b.begin).abs() <= tol && (a.end - b.end).abs() <= tol
}

#[test]
fn posterior_fixtures_recover_sentences_and_words() {
    let cfg = SegmentationConfig::default();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 1..=10 {
            let fx = posterior_fixture(&mut rng, k);
            let hop = fx.posterior.hop();
            let got = extract_sentences(&fx.posterior, &cfg).unwrap();
            assert_eq!(got.len(), fx.sentences.len(), "seed {seed} k {k}");
            for (span, (expected, words)) in got.iter().zip(&fx.sentences) {
                assert!(within(span, expected, hop), "{span:?} vs {expected:?}");
                let w = segment_words(&fx.posterior, span, &cfg).unwrap();
                assert_eq!(w.len(), words.len());
                for (a, b) in w.iter().zip(words) {
                    assert!(within(a, b, hop));
                }
            }
        }
    }
}

#[test]
fn speech_contaminated_run_yields_nothing() {
    let p = scripted_posterior(
        &[
            (FrameKind::Silence, 5),
            (FrameKind::SpeechContaminated, 10),
            (FrameKind::Silence, 5),
        ],
        0.1,
    );
    assert!(extract_sentences(&p, &SegmentationConfig::default())
        .unwrap()
        .is_empty());
}

#[test]
fn three_bursts_are_one_sentence_of_three_words() {
    let mut s = silence(0.5, SR);
    for _ in 0..3 {
        s.extend(tone(700.0, 0.2, 0.5, SR));
        s.extend(silence(0.3, SR));
    }
    s.extend(silence(0.5, SR));
    let clip = AudioClip::new(s, SR).unwrap();
    let settings = PipelineSettings::default();
    let seg = segment_clip(
        "v",
        &clip,
        None,
        &EnergyDetector::default(),
        &AlwaysBark,
        &settings,
    )
    .unwrap();
    assert_eq!(seg.sentences.len(), 1);
    let words = &seg.sentences[0].words;
    assert_eq!(words.len(), 3);
    for (i, w) in words.iter().enumerate() {
        let begin = 0.5 + 0.5 * i as f64;
        assert!(
            within(&w.span, &TimeSpan::new(begin, begin + 0.2).unwrap(), 0.1),
            "{w:?}"
        );
    }
}

#[test]
fn silent_clip_has_no_sentences() {
    let clip = AudioClip::new(silence(3.0, SR), SR).unwrap();
    let settings = PipelineSettings::default();
    let seg = segment_clip(
        "v",
        &clip,
        None,
        &EnergyDetector::default(),
        &AlwaysBark,
        &settings,
    )
    .unwrap();
    assert!(seg.sentences.is_empty());
}

fn subwords(samples: Vec<f64>, params: &OscillatorParams) -> Vec<TimeSpan> {
    let clip = AudioClip::new(samples, SR).unwrap();
    let env = sonority_envelope(&clip, &EnvelopeConfig::default()).unwrap();
    segment_subwords(&TimeSpan::new(0.0, clip.duration()).unwrap(), &env, params).unwrap()
}

#[test]
fn two_bursts_split_near_the_gap_center() {
    for (burst, gap) in [(0.15, 0.08), (0.2, 0.1), (0.25, 0.15), (0.3, 0.2)] {
        let mut s = tone(600.0, burst, 0.5, SR);
        s.extend(silence(gap, SR));
        s.extend(tone(600.0, burst, 0.5, SR));
        let spans = subwords(s, &OscillatorParams::default());
        assert_eq!(spans.len(), 2, "burst {burst} gap {gap}: {spans:?}");
        assert!(
            (spans[0].end - (burst + gap / 2.0)).abs() <= 0.025,
            "{spans:?}"
        );
    }
}

#[test]
fn subword_count_is_monotone_in_min_duration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let mut s = Vec::new();
        for _ in 0..rng.random_range(2..=5) {
            s.extend(tone(
                500.0,
                rng.random_range(0.05..0.25),
                rng.random_range(0.2..0.6),
                SR,
            ));
            s.extend(silence(rng.random_range(0.03..0.12), SR));
        }
        let mut prev = usize::MAX;
        for k in 1..=10 {
            let params = OscillatorParams {
                min_subword_duration: 0.03 * k as f64,
                ..OscillatorParams::default()
            };
            let spans = subwords(s.clone(), &params);
            assert!(spans.len() <= prev);
            assert!(spans.windows(2).all(|w| w[0].end == w[1].begin));
            prev = spans.len();
        }
    }
}
