//! Subword boundaries from a sonority-driven oscillator, and vowel
//! transcription by nearest reference embedding.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::audio::{
    pooled_features, AudioClip, FeatureConfig, FeatureVector, FrameGrid, SonorityEnvelope,
};
use crate::corpus::{TimeSpan, TIME_EPSILON};
use crate::error::{Error, Result};
use crate::labels::{IpaInventory, IpaSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatorParams {
    /// Undamped natural frequency in Hz.
    pub natural_frequency: f64,
    pub damping_ratio: f64,
    pub min_subword_duration: f64,
    /// Minimum valley depth, as a fraction of the peak displacement, for a
    /// displacement minimum to become a boundary.
    pub min_valley_depth: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            natural_frequency: 3.0,
            damping_ratio: 0.3,
            min_subword_duration: 0.08,
            min_valley_depth: 0.3,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.natural_frequency > 0.0
            && self.damping_ratio > 0.0
            && self.damping_ratio < 1.0
            && self.min_subword_duration > 0.0
            && (0.0..=1.0).contains(&self.min_valley_depth);
        if !ok {
            return Err(Error::Config(format!("invalid oscillator params {self:?}")));
        }
        Ok(())
    }
}

/// Integrates `x'' + 2ζω x' + ω² x = ω² u(t)` with RK4 over a sampled drive,
/// starting at rest on the first drive value.
fn oscillate(drive: &[f64], rate: f64, params: &OscillatorParams) -> Vec<f64> {
    let omega = 2.0 * std::f64::consts::PI * params.natural_frequency;
    let zeta = params.damping_ratio;
    let dt = 1.0 / rate;
    let accel = |x: f64, v: f64, u: f64| omega * omega * (u - x) - 2.0 * zeta * omega * v;

    let mut out = Vec::with_capacity(drive.len());
    let Some(&first) = drive.first() else {
        return out;
    };
    let (mut x, mut v) = (first, 0.0);
    out.push(x);
    for w in drive.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        let um = 0.5 * (u0 + u1);
        let (k1x, k1v) = (v, accel(x, v, u0));
        let (k2x, k2v) = (
            v + 0.5 * dt * k1v,
            accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, um),
        );
        let (k3x, k3v) = (
            v + 0.5 * dt * k2v,
            accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, um),
        );
        let (k4x, k4v) = (v + dt * k3v, accel(x + dt * k3x, v + dt * k3v, u1));
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push(x);
    }
    out
}

/// Oscillator displacement for a normalized envelope, run forward and then
/// backward in time so the response carries no phase lag.
pub fn oscillator_displacement(envelope: &SonorityEnvelope, params: &OscillatorParams) -> Vec<f64> {
    let peak = envelope.values.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return vec![0.0; envelope.values.len()];
    }
    let drive: Vec<f64> = envelope.values.iter().map(|v| v / peak).collect();
    let mut forward = oscillate(&drive, envelope.rate, params);
    forward.reverse();
    let mut both = oscillate(&forward, envelope.rate, params);
    both.reverse();
    both
}

#[derive(Debug, Clone, Copy)]
struct Boundary {
    index: usize,
    depth: f64,
}

/// Interior displacement minima with their valley depth relative to the
/// global peak. Plateaus report their first sample.
fn valley_candidates(y: &[f64]) -> Vec<Boundary> {
    let peak = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak.is_nan() || peak <= 0.0 || y.len() < 3 {
        return Vec::new();
    }
    let mut minima = Vec::new();
    let mut i = 1;
    while i + 1 < y.len() {
        if y[i] < y[i - 1] {
            let mut j = i;
            while j + 1 < y.len() && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < y.len() && y[j + 1] > y[i] {
                minima.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let mut out = Vec::with_capacity(minima.len());
    for (k, &m) in minima.iter().enumerate() {
        let left_from = if k == 0 { 0 } else { minima[k - 1] };
        let right_to = minima.get(k + 1).copied().unwrap_or(y.len() - 1);
        let left = y[left_from..=m]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let right = y[m..=right_to]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(Boundary {
            index: m,
            depth: (left.min(right) - y[m]) / peak,
        });
    }
    out
}

/// Subword spans partitioning `word`. `envelope` must be computed from the
/// word's own clip, so sample `j` sits at `word.begin + j / rate`.
pub fn segment_subwords(
    word: &TimeSpan,
    envelope: &SonorityEnvelope,
    params: &OscillatorParams,
) -> Result<Vec<TimeSpan>> {
    params.validate()?;
    if word.duration() < params.min_subword_duration - TIME_EPSILON {
        return Err(Error::ClipTooShort {
            duration: word.duration(),
            required: params.min_subword_duration,
        });
    }
    let y = oscillator_displacement(envelope, params);
    let mut cuts: Vec<(f64, f64)> = valley_candidates(&y)
        .into_iter()
        .filter(|b| b.depth >= params.min_valley_depth)
        .map(|b| (word.begin + b.index as f64 / envelope.rate, b.depth))
        .filter(|&(t, _)| t > word.begin + TIME_EPSILON && t < word.end - TIME_EPSILON)
        .collect();

    // Absorb the shortest too-short segment across its weaker boundary until
    // none remain. The merge order ignores the threshold, which makes the
    // final count monotone in `min_subword_duration`.
    loop {
        let edges: Vec<f64> = std::iter::once(word.begin)
            .chain(cuts.iter().map(|c| c.0))
            .chain(std::iter::once(word.end))
            .collect();
        let Some((shortest, len)) = edges.windows(2).map(|e| e[1] - e[0]).enumerate().fold(
            None,
            |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, b)) if d >= b => best,
                _ => Some((i, d)),
            },
        ) else {
            break;
        };
        if cuts.is_empty() || len >= params.min_subword_duration - TIME_EPSILON {
            break;
        }
        // segment `shortest` is bounded by cuts[shortest - 1] and cuts[shortest]
        let left = shortest.checked_sub(1);
        let right = (shortest < cuts.len()).then_some(shortest);
        let drop = match (left, right) {
            (Some(l), Some(r)) => {
                if cuts[l].1 <= cuts[r].1 {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("cuts is non-empty"),
        };
        cuts.remove(drop);
    }

    let mut spans = Vec::with_capacity(cuts.len() + 1);
    let mut begin = word.begin;
    for &(t, _) in &cuts {
        spans.push(TimeSpan { begin, end: t });
        begin = t;
    }
    spans.push(TimeSpan {
        begin,
        end: word.end,
    });
    Ok(spans)
}

/// Averaged reference embedding per IPA vowel.
#[derive(Debug, Clone, PartialEq)]
pub struct IpaReferenceTable {
    entries: Vec<(IpaSymbol, FeatureVector)>,
    dim: usize,
    pub provenance: String,
    /// Rate the references were extracted at, when known.
    pub sample_rate: Option<u32>,
}

impl IpaReferenceTable {
    pub fn new(
        entries: Vec<(IpaSymbol, FeatureVector)>,
        provenance: impl Into<String>,
        sample_rate: Option<u32>,
    ) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::TooFewEntries);
        }
        let dim = entries[0].1.dim();
        if dim == 0 {
            return Err(Error::Config("IPA table vectors must be non-empty".into()));
        }
        for (i, (sym, vec)) in entries.iter().enumerate() {
            if vec.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: vec.dim(),
                });
            }
            if vec.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "IPA table: non-finite entry for {sym}"
                )));
            }
            for (other, other_vec) in &entries[..i] {
                if other == sym {
                    return Err(Error::DuplicateSymbol(sym.to_string()));
                }
                if other_vec == vec {
                    return Err(Error::NonDistinctReferences(
                        other.to_string(),
                        sym.to_string(),
                    ));
                }
            }
        }
        Ok(Self {
            entries,
            dim,
            provenance: provenance.into(),
            sample_rate,
        })
    }

    /// Builds a table by pooling reference clips per symbol and averaging.
    pub fn from_reference_clips(
        clips: &[(IpaSymbol, AudioClip)],
        features: &FeatureConfig,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let mut order: Vec<IpaSymbol> = Vec::new();
        let mut pooled: Vec<Vec<FeatureVector>> = Vec::new();
        let mut rate = None;
        for (sym, clip) in clips {
            match rate {
                None => rate = Some(clip.sample_rate()),
                Some(r) if r != clip.sample_rate() => {
                    return Err(Error::SampleRateMismatch {
                        expected: r,
                        actual: clip.sample_rate(),
                    })
                }
                Some(_) => {}
            }
            let slot = match order.iter().position(|s| s == sym) {
                Some(i) => i,
                None => {
                    order.push(sym.clone());
                    pooled.push(Vec::new());
                    order.len() - 1
                }
            };
            pooled[slot].push(pooled_features(clip, features)?);
        }
        let entries = order
            .into_iter()
            .zip(pooled)
            .map(|(s, vs)| (s, FeatureVector::mean(&vs).expect("non-empty group")))
            .collect();
        Self::new(entries, provenance, rate)
    }

    pub fn entries(&self) -> &[(IpaSymbol, FeatureVector)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn inventory(&self) -> IpaInventory {
        IpaInventory::new(self.entries.iter().map(|(s, _)| s.clone()).collect())
            .expect("table symbols are unique")
    }

    /// Nearest reference by Euclidean distance, ties by table order.
    pub fn nearest(&self, query: &FeatureVector) -> Result<(IpaSymbol, f64)> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        let mut best = (0, f64::INFINITY);
        for (i, (_, r)) in self.entries.iter().enumerate() {
            let d = r.euclidean(query);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok((self.entries[best.0].0.clone(), best.1))
    }
}

/// Reads `symbol,v0,...,v{dim-1}`. Leading `# provenance: ...` and
/// `# sample_rate: N` comment lines are recognized; other comments ignored.
pub fn load_ipa_table<R: Read>(mut source: R) -> Result<IpaReferenceTable> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut provenance = Vec::new();
    let mut sample_rate = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            let comment = comment.trim();
            if let Some(p) = comment.strip_prefix("provenance:") {
                provenance.push(p.trim().to_string());
            } else if let Some(r) = comment.strip_prefix("sample_rate:") {
                sample_rate = Some(r.trim().parse::<u32>().map_err(|e| {
                    Error::Config(format!("IPA table: bad sample_rate comment: {e}"))
                })?);
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if body.is_empty() {
        return Err(Error::TooFewEntries);
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("symbol") {
        return Err(Error::Config(
            "IPA table: first column must be `symbol`".into(),
        ));
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut fields = record.iter();
        let symbol = IpaSymbol::new(fields.next().unwrap_or_default())?;
        let values = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::malformed(i + 2, e.to_string()))?;
        entries.push((symbol, FeatureVector(values)));
    }
    if let Some((_, v)) = entries.first() {
        if v.dim() + 1 != headers.len() {
            return Err(Error::DimensionMismatch {
                expected: headers.len() - 1,
                actual: v.dim(),
            });
        }
    }
    IpaReferenceTable::new(entries, provenance.join(" "), sample_rate)
}

pub fn write_ipa_table<W: Write>(table: &IpaReferenceTable, mut sink: W) -> Result<()> {
    if !table.provenance.is_empty() {
        writeln!(sink, "# provenance: {}", table.provenance)?;
    }
    if let Some(rate) = table.sample_rate {
        writeln!(sink, "# sample_rate: {rate}")?;
    }
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["symbol".to_string()];
    header.extend((0..table.dim).map(|i| format!("v{i}")));
    writer.write_record(&header)?;
    for (sym, vec) in &table.entries {
        let mut row = vec![sym.to_string()];
        row.extend(vec.values().iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Feature front-end used for transcription: short frames so that subwords
/// of a few tens of milliseconds still yield several frames.
pub fn transcription_features() -> FeatureConfig {
    FeatureConfig {
        grid: FrameGrid {
            frame_length: 0.025,
            hop: 0.01,
        },
        ..FeatureConfig::default()
    }
}

/// Pools the subword clip and returns the nearest table symbol with its
/// distance.
pub fn transcribe_subword(
    clip: &AudioClip,
    table: &IpaReferenceTable,
    features: &FeatureConfig,
) -> Result<(IpaSymbol, f64)> {
    if let Some(rate) = table.sample_rate {
        if rate != clip.sample_rate() {
            return Err(Error::SampleRateMismatch {
                expected: rate,
                actual: clip.sample_rate(),
            });
        }
    }
    table.nearest(&pooled_features(clip, features)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{sonority_envelope, EnvelopeConfig};
    use std::f64::consts::PI;

    const SR: u32 = 16000;

    fn tone(freq: f64, seconds: f64, amp: f64) -> Vec<f64> {
        let n = (seconds * SR as f64).round() as usize;
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / SR as f64).sin())
            .collect()
    }

    fn split(samples: Vec<f64>, params: &OscillatorParams) -> Vec<TimeSpan> {
        let clip = AudioClip::new(samples, SR).unwrap();
        let env = sonority_envelope(&clip, &EnvelopeConfig::default()).unwrap();
        let word = TimeSpan::new(0.0, clip.duration()).unwrap();
        segment_subwords(&word, &env, params).unwrap()
    }

    fn sym(s: &str) -> IpaSymbol {
        IpaSymbol::new(s).unwrap()
    }

    #[test]
    fn constant_drive_settles_without_minima() {
        let y = oscillate(&[1.0; 400], 200.0, &OscillatorParams::default());
        assert!(y.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_lobe_one_subword() {
        // raised-cosine amplitude over a 400 ms tone
        let n = (0.4 * SR as f64) as usize;
        let s: Vec<f64> = tone(600.0, 0.4, 0.6)
            .into_iter()
            .enumerate()
            .map(|(i, x)| x * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()))
            .collect();
        let spans = split(s, &OscillatorParams::default());
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0], TimeSpan::new(0.0, 0.4).unwrap());
    }

    #[test]
    fn constant_tone_one_subword() {
        let spans = split(tone(600.0, 0.8, 0.5), &OscillatorParams::default());
        assert_eq!(spans.len(), 1);
    }

    #[test]
    fn two_bursts_split_at_valley() {
        let mut s = tone(600.0, 0.2, 0.5);
        s.extend(std::iter::repeat_n(0.0, (0.1 * SR as f64) as usize));
        s.extend(tone(600.0, 0.2, 0.5));
        let spans = split(s, &OscillatorParams::default());
        assert_eq!(spans.len(), 2, "{spans:?}");
        assert!((spans[0].end - 0.25).abs() <= 0.025, "{spans:?}");
        assert_eq!(spans[0].end, spans[1].begin);
        assert_eq!(spans[1].end, 0.5);
    }

    #[test]
    fn too_short_word() {
        let env = SonorityEnvelope {
            values: vec![1.0; 4],
            rate: 200.0,
        };
        let word = TimeSpan::new(0.0, 0.02).unwrap();
        assert!(matches!(
            segment_subwords(&word, &env, &OscillatorParams::default()),
            Err(Error::ClipTooShort { .. })
        ));
    }

    #[test]
    fn exact_reference_distance_zero() {
        let table = IpaReferenceTable::new(
            vec![
                (sym("a"), FeatureVector(vec![1.0, 0.0])),
                (sym("e"), FeatureVector(vec![0.0, 1.0])),
            ],
            "",
            None,
        )
        .unwrap();
        let (s, d) = table.nearest(&FeatureVector(vec![1.0, 0.0])).unwrap();
        assert_eq!(s, sym("a"));
        assert_eq!(d, 0.0);
        // equidistant: first in order
        let (s, _) = table.nearest(&FeatureVector(vec![0.5, 0.5])).unwrap();
        assert_eq!(s, sym("a"));
        assert!(matches!(
            table.nearest(&FeatureVector(vec![1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn table_file_validation() {
        let rows: String = (0..20)
            .map(|i| {
                let v: Vec<String> = (0..40)
                    .map(|j| if i == j { "1" } else { "0" }.to_string())
                    .collect();
                format!("{},{}\n", crate::labels::DEFAULT_IPA_VOWELS[i], v.join(","))
            })
            .collect();
        let header: Vec<String> = (0..40).map(|i| format!("v{i}")).collect();
        let text = format!(
            "# provenance: unit test\nsymbol,{}\n{rows}",
            header.join(",")
        );
        let table = load_ipa_table(text.as_bytes()).unwrap();
        assert_eq!(table.len(), 20);
        assert_eq!(table.dim(), 40);
        assert_eq!(table.provenance, "unit test");

        let dup = "symbol,v0,v1\na,1,0\ne,1,0\n";
        assert!(matches!(
            load_ipa_table(dup.as_bytes()),
            Err(Error::NonDistinctReferences(..))
        ));
        let err = load_ipa_table("".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("fewer than 2 entries"));
        let same = "symbol,v0\na,1\na,2\n";
        assert!(matches!(
            load_ipa_table(same.as_bytes()),
            Err(Error::DuplicateSymbol(_))
        ));
        let ragged = "symbol,v0,v1\na,1,0\ne,1\n";
        assert!(matches!(
            load_ipa_table(ragged.as_bytes()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn table_write_read() {
        let table = IpaReferenceTable::new(
            vec![
                (sym("ə"), FeatureVector(vec![0.25, -1.5])),
                (sym("œ"), FeatureVector(vec![3.0, 1e-7])),
            ],
            "synthetic",
            Some(16000),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_ipa_table(&table, &mut buf).unwrap();
        assert_eq!(load_ipa_table(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn transcribes_reference_tones() {
        let cfg = transcription_features();
        let clips = vec![
            (sym("a"), AudioClip::new(tone(500.0, 0.2, 0.5), SR).unwrap()),
            (
                sym("e"),
                AudioClip::new(tone(1500.0, 0.2, 0.5), SR).unwrap(),
            ),
            (
                sym("u"),
                AudioClip::new(tone(3000.0, 0.2, 0.5), SR).unwrap(),
            ),
        ];
        let table = IpaReferenceTable::from_reference_clips(&clips, &cfg, "tones").unwrap();
        for (s, clip) in &clips {
            let (got, d) = transcribe_subword(clip, &table, &cfg).unwrap();
            assert_eq!(&got, s);
            assert_eq!(d, 0.0);
        }
        let shorter = AudioClip::new(tone(1500.0, 0.12, 0.4), SR).unwrap();
        assert_eq!(
            transcribe_subword(&shorter, &table, &cfg).unwrap().0,
            sym("e")
        );
    }
}
