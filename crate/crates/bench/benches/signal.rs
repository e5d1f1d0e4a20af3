use criterion::{black_box, criterion_group, criterion_main, Criterion};
use vocalex_core::audio::{
    frame_features, sonority_envelope, AudioClip, EnvelopeConfig, FeatureConfig,
};
use vocalex_core::subword::{oscillator_displacement, segment_subwords, OscillatorParams};
use vocalex_core::synth::{fixture_bundle, silence, tone, FIXTURE_SAMPLE_RATE as SR};
use vocalex_core::TimeSpan;

fn clip() -> AudioClip {
    let mut s = Vec::new();
    for k in 0..5 {
        s.extend(tone(300.0 + 200.0 * k as f64, 0.25, 0.5, SR));
        s.extend(silence(0.15, SR));
    }
    AudioClip::new(s, SR).unwrap()
}

fn front_end(c: &mut Criterion) {
    let clip = clip();
    let features = FeatureConfig::default();
    let envelope = EnvelopeConfig::default();
    let params = OscillatorParams::default();
    c.bench_function("frame_features_2s", |b| {
        b.iter(|| frame_features(black_box(&clip), &features).unwrap())
    });
    c.bench_function("sonority_envelope_2s", |b| {
        b.iter(|| sonority_envelope(black_box(&clip), &envelope).unwrap())
    });
    let env = sonority_envelope(&clip, &envelope).unwrap();
    c.bench_function("oscillator_2s", |b| {
        b.iter(|| oscillator_displacement(black_box(&env), &params))
    });
    let word = TimeSpan::new(0.0, clip.duration()).unwrap();
    c.bench_function("segment_subwords_2s", |b| {
        b.iter(|| segment_subwords(&word, black_box(&env), &params).unwrap())
    });
}

fn fixture(c: &mut Criterion) {
    c.bench_function("fixture_bundle", |b| b.iter(|| fixture_bundle().unwrap()));
}

criterion_group!(benches, front_end, fixture);
criterion_main!(benches);
