//! Audio ingestion, framing, log band energies and the sonority envelope.

use std::f64::consts::PI;
use std::io::{Read, Seek, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::corpus::TimeSpan;
use crate::error::{Error, Result};

pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Floor applied to band energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// Mono audio normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::InvalidClip(format!(
                "sample rate {sample_rate} Hz below {MIN_SAMPLE_RATE} Hz"
            )));
        }
        if let Some(bad) = samples
            .iter()
            .find(|s| !s.is_finite() || s.abs() > 1.0 + 1e-9)
        {
            return Err(Error::InvalidClip(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sub-clip covering `span` (seconds relative to the clip start),
    /// clamped to the available samples.
    pub fn slice(&self, span: &TimeSpan) -> Result<AudioClip> {
        let sr = self.sample_rate as f64;
        let start = ((span.begin * sr).round() as usize).min(self.samples.len());
        let end = ((span.end * sr).round() as usize).min(self.samples.len());
        if end <= start {
            return Err(Error::ClipTooShort {
                duration: 0.0,
                required: span.duration(),
            });
        }
        AudioClip::new(self.samples[start..end].to_vec(), self.sample_rate)
    }
}

/// Decodes RIFF/WAVE with 16-bit integer or 32-bit float PCM. Stereo and
/// other multi-channel layouts are averaged to mono.
pub fn load_wav<R: Read>(source: R) -> Result<AudioClip> {
    let reader = hound::WavReader::new(source).map_err(wav_error)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::InvalidWav("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_error)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_error)?,
        (format, bits) => {
            return Err(Error::UnsupportedCodec(format!(
                "{bits}-bit {}",
                match format {
                    hound::SampleFormat::Int => "integer PCM",
                    hound::SampleFormat::Float => "float PCM",
                }
            )))
        }
    };
    if interleaved.len() < channels {
        return Err(Error::EmptyAudio);
    }
    let mono = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioClip::new(mono, spec.sample_rate)
}

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io)
            if matches!(
                io.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other
            ) =>
        {
            Error::InvalidWav(format!("truncated: {io}"))
        }
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedCodec("unsupported WAV encoding".into()),
        other => Error::InvalidWav(other.to_string()),
    }
}

/// Writes a mono 16-bit PCM WAV.
pub fn write_wav<W: Write + Seek>(clip: &AudioClip, sink: W) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::new(sink, spec).map_err(wav_error)?;
    for &s in &clip.samples {
        let v = (s * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wav_error)?;
    }
    writer.finalize().map_err(wav_error)?;
    Ok(())
}

/// Frame `i` covers `[i * hop, i * hop + frame_length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameGrid {
    pub frame_length: f64,
    pub hop: f64,
}

impl Default for FrameGrid {
    fn default() -> Self {
        Self {
            frame_length: 0.2,
            hop: 0.1,
        }
    }
}

impl FrameGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop > 0.0 && self.frame_length >= self.hop) {
            return Err(Error::Config(format!(
                "frame grid needs hop > 0 and frame_length >= hop, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        ((self.frame_length * sample_rate as f64).round() as usize).max(1)
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop * sample_rate as f64).round() as usize).max(1)
    }

    /// `floor((duration - frame_length) / hop) + 1`, evaluated in samples.
    pub fn frame_count(&self, n_samples: usize, sample_rate: u32) -> usize {
        let frame = self.frame_samples(sample_rate);
        if n_samples < frame {
            return 0;
        }
        (n_samples - frame) / self.hop_samples(sample_rate) + 1
    }
}

/// Fixed-dimension embedding of one frame (or a pooled clip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn euclidean(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Element-wise mean; `None` for an empty set or mixed dimensions.
    pub fn mean<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> Option<FeatureVector> {
        let mut iter = vectors.into_iter();
        let first = iter.next()?;
        let mut acc = first.0.clone();
        let mut n = 1usize;
        for v in iter {
            if v.dim() != acc.len() {
                return None;
            }
            for (a, x) in acc.iter_mut().zip(&v.0) {
                *a += x;
            }
            n += 1;
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        Some(FeatureVector(acc))
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters over the non-negative FFT bins.
#[derive(Debug, Clone)]
pub struct MelFilterBank {
    weights: Vec<Vec<f64>>,
    centers: Vec<f64>,
}

impl MelFilterBank {
    pub fn new(n_bands: usize, fmin: f64, fmax: f64, n_fft: usize, sample_rate: u32) -> Self {
        let n_bins = n_fft / 2 + 1;
        let bin_hz = sample_rate as f64 / n_fft as f64;
        let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges: Vec<f64> = (0..n_bands + 2)
            .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_bands + 1) as f64))
            .collect();
        let mut weights = Vec::with_capacity(n_bands);
        let mut centers = Vec::with_capacity(n_bands);
        for b in 0..n_bands {
            let (lo, c, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            let mut row: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= c {
                        (f - lo) / (c - lo)
                    } else {
                        (hi - f) / (hi - c)
                    }
                })
                .collect();
            // Narrow low bands may fall between bins; keep them alive.
            if row.iter().all(|&w| w == 0.0) {
                let nearest = ((c / bin_hz).round() as usize).min(n_bins - 1);
                row[nearest] = 1.0;
            }
            weights.push(row);
            centers.push(c);
        }
        Self { weights, centers }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn n_bands(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// Hann-windowed power spectra of fixed-length frames.
struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    buffer: Vec<Complex<f64>>,
}

impl SpectrumAnalyzer {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let window = hann(n);
        Self {
            fft,
            window,
            buffer: vec![Complex::default(); n],
        }
    }

    /// `|X_k|^2 / N` for `k = 0..=N/2`; `frame` is zero-padded to N.
    fn power(&mut self, frame: &[f64]) -> Vec<f64> {
        let n = self.window.len();
        for (i, slot) in self.buffer.iter_mut().enumerate() {
            let x = frame.get(i).copied().unwrap_or(0.0);
            *slot = Complex::new(x * self.window[i], 0.0);
        }
        self.fft.process(&mut self.buffer);
        self.buffer[..n / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr() / n as f64)
            .collect()
    }
}

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Front-end settings for log band-energy features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub grid: FrameGrid,
    pub n_bands: usize,
    pub fmin: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            grid: FrameGrid::default(),
            n_bands: 40,
            fmin: 50.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n_bands == 0 || self.fmin.is_nan() || self.fmin < 0.0 {
            return Err(Error::Config(
                "features need n_bands > 0 and fmin >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn filter_bank(&self, sample_rate: u32) -> MelFilterBank {
        MelFilterBank::new(
            self.n_bands,
            self.fmin,
            sample_rate as f64 / 2.0,
            self.grid.frame_samples(sample_rate),
            sample_rate,
        )
    }
}

/// One log band-energy vector per frame of `config.grid`.
pub fn frame_features(clip: &AudioClip, config: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    config.validate()?;
    let sr = clip.sample_rate;
    let count = config.grid.frame_count(clip.samples.len(), sr);
    if count == 0 {
        return Err(Error::ClipTooShort {
            duration: clip.duration(),
            required: config.grid.frame_length,
        });
    }
    let frame = config.grid.frame_samples(sr);
    let hop = config.grid.hop_samples(sr);
    let bank = config.filter_bank(sr);
    let mut analyzer = SpectrumAnalyzer::new(frame);
    Ok((0..count)
        .map(|i| {
            let start = i * hop;
            let power = analyzer.power(&clip.samples[start..start + frame]);
            FeatureVector(
                bank.apply(&power)
                    .into_iter()
                    .map(|e| e.max(LOG_FLOOR).ln())
                    .collect(),
            )
        })
        .collect())
}

/// Mean of the frame features. Clips shorter than one frame are zero-padded
/// to a single frame.
pub fn pooled_features(clip: &AudioClip, config: &FeatureConfig) -> Result<FeatureVector> {
    let frame = config.grid.frame_samples(clip.sample_rate);
    let frames = if clip.samples.len() < frame {
        let mut padded = clip.samples.clone();
        padded.resize(frame, 0.0);
        frame_features(&AudioClip::new(padded, clip.sample_rate)?, config)?
    } else {
        frame_features(clip, config)?
    };
    Ok(FeatureVector::mean(&frames).expect("at least one frame"))
}

/// Settings of the band-weighted energy trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Analysis window in seconds.
    pub frame_length: f64,
    /// Envelope sample period in seconds.
    pub hop: f64,
    pub n_bands: usize,
    pub fmin: f64,
    /// Bands centered inside `[sonorant_low, sonorant_high]` get weight 1.
    pub sonorant_low: f64,
    pub sonorant_high: f64,
    /// Weight of bands outside the sonorant range.
    pub off_band_weight: f64,
    /// -3 dB point of the Gaussian modulation low-pass, in Hz.
    pub cutoff: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            frame_length: 0.02,
            hop: 0.005,
            n_bands: 24,
            fmin: 50.0,
            sonorant_low: 200.0,
            sonorant_high: 4000.0,
            off_band_weight: 0.25,
            cutoff: 10.0,
        }
    }
}

impl EnvelopeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.hop > 0.0
            && self.frame_length >= self.hop
            && self.n_bands > 0
            && self.cutoff > 0.0
            && self.off_band_weight >= 0.0
            && self.sonorant_high > self.sonorant_low;
        if !ok {
            return Err(Error::Config(format!("invalid envelope config {self:?}")));
        }
        Ok(())
    }
}

/// Non-negative energy trace sampled every `1 / rate` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SonorityEnvelope {
    pub values: Vec<f64>,
    pub rate: f64,
}

impl SonorityEnvelope {
    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.rate
    }
}

/// Band-weighted short-time energy, low-passed with a zero-phase Gaussian
/// kernel. Sample `j` is centered at `j * hop`.
pub fn sonority_envelope(clip: &AudioClip, config: &EnvelopeConfig) -> Result<SonorityEnvelope> {
    config.validate()?;
    let sr = clip.sample_rate;
    let frame = ((config.frame_length * sr as f64).round() as usize).max(1);
    let hop = ((config.hop * sr as f64).round() as usize).max(1);
    let n = clip.samples.len();
    let count = n.div_ceil(hop);
    let bank = MelFilterBank::new(config.n_bands, config.fmin, sr as f64 / 2.0, frame, sr);
    let band_weights: Vec<f64> = bank
        .centers()
        .iter()
        .map(|&c| {
            if (config.sonorant_low..=config.sonorant_high).contains(&c) {
                1.0
            } else {
                config.off_band_weight
            }
        })
        .collect();

    let mut analyzer = SpectrumAnalyzer::new(frame);
    let mut window = vec![0.0; frame];
    let raw: Vec<f64> = (0..count)
        .map(|j| {
            let start = (j * hop) as isize - (frame / 2) as isize;
            for (k, slot) in window.iter_mut().enumerate() {
                let idx = start + k as isize;
                *slot = if idx >= 0 && (idx as usize) < n {
                    clip.samples[idx as usize]
                } else {
                    0.0
                };
            }
            let energies = bank.apply(&analyzer.power(&window));
            energies
                .iter()
                .zip(&band_weights)
                .map(|(e, w)| e * w)
                .sum::<f64>()
        })
        .collect();

    let rate = sr as f64 / hop as f64;
    Ok(SonorityEnvelope {
        values: gaussian_lowpass(&raw, rate, config.cutoff),
        rate,
    })
}

/// Gaussian smoothing whose magnitude response is 1/sqrt(2) at `cutoff`.
/// The kernel is renormalized at the edges so constants pass unchanged.
fn gaussian_lowpass(values: &[f64], rate: f64, cutoff: f64) -> Vec<f64> {
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * cutoff) * rate;
    let radius = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (k, w) in (-radius..=radius).zip(&kernel) {
                let j = i + k;
                if (0..n).contains(&j) {
                    acc += w * values[j as usize];
                    norm += w;
                }
            }
            (acc / norm).max(0.0)
        })
        .collect()
}
