//! Location and activity fusion for a word.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Quadruplet, Subword, TimeSpan};
use crate::detect::WordSpan;
use crate::error::{Error, Result};
use crate::labels::{argmax_first, ActivityLabel, Label, LocationLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationObservation {
    pub timestamp: f64,
    /// One score per [`LocationLabel`], declaration order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityObservation {
    pub window: TimeSpan,
    /// One score per [`ActivityLabel`], declaration order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LocationMode {
    /// Most frequent per-frame argmax; ties by logit sum, then enum order.
    MajorityVote,
    /// Argmax of the element-wise score sum.
    #[default]
    LogitSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub n_frames: usize,
    pub location_mode: LocationMode,
    pub activity_pad: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            n_frames: 5,
            location_mode: LocationMode::LogitSum,
            activity_pad: 1.0,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 || self.activity_pad.is_nan() || self.activity_pad < 0.0 {
            return Err(Error::Config(
                "fusion needs n_frames >= 1 and activity_pad >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// `n` timestamps spread uniformly over `[begin, end]`, both included;
/// `n == 1` gives the midpoint.
pub fn sample_frame_times(span: &TimeSpan, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("frame count must be at least 1".into()));
    }
    if span.begin.is_nan() || span.end.is_nan() || span.end <= span.begin {
        return Err(Error::InvalidSpan {
            begin: span.begin,
            end: span.end,
        });
    }
    if n == 1 {
        return Ok(vec![span.begin + 0.5 * span.duration()]);
    }
    let step = span.duration() / (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            if k == n - 1 {
                span.end
            } else {
                span.begin + k as f64 * step
            }
        })
        .collect())
}

fn check_scores<L: Label>(scores: &[f64]) -> Result<()> {
    if scores.len() != L::count() {
        return Err(Error::DimensionMismatch {
            expected: L::count(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Config(format!("non-finite {} score", L::KIND)));
    }
    Ok(())
}

/// Per-label vote counts and score sums behind a location decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationDecision {
    pub label: LocationLabel,
    pub votes: Vec<u32>,
    pub sums: Vec<f64>,
}

pub fn decide_location(
    observations: &[LocationObservation],
    mode: LocationMode,
) -> Result<LocationDecision> {
    if observations.is_empty() {
        return Err(Error::NoObservations);
    }
    let n = LocationLabel::count();
    let mut votes = vec![0u32; n];
    let mut sums = vec![0.0; n];
    for obs in observations {
        check_scores::<LocationLabel>(&obs.scores)?;
        votes[argmax_first(&obs.scores).expect("finite scores")] += 1;
        for (s, x) in sums.iter_mut().zip(&obs.scores) {
            *s += x;
        }
    }
    let index = match mode {
        LocationMode::LogitSum => argmax_first(&sums).expect("non-empty"),
        LocationMode::MajorityVote => {
            let top = *votes.iter().max().expect("non-empty");
            let masked: Vec<f64> = sums
                .iter()
                .zip(&votes)
                .map(|(&s, &v)| if v == top { s } else { f64::NEG_INFINITY })
                .collect();
            argmax_first(&masked).expect("at least one label holds the top vote")
        }
    };
    Ok(LocationDecision {
        label: LocationLabel::ALL[index],
        votes,
        sums,
    })
}

pub fn fuse_location(
    observations: &[LocationObservation],
    config: &FusionConfig,
) -> Result<LocationLabel> {
    decide_location(observations, config.location_mode).map(|d| d.label)
}

/// `[max(0, begin - pad), end + pad]`. Negative pads count as zero.
pub fn activity_window(span: &TimeSpan, pad: f64) -> TimeSpan {
    let pad = pad.max(0.0);
    TimeSpan {
        begin: (span.begin - pad).max(0.0),
        end: span.end + pad,
    }
}

/// Argmax activity, ties by enum order; `None` yields `Unknown`.
pub fn fuse_activity(observation: Option<&ActivityObservation>) -> Result<ActivityLabel> {
    match observation {
        None => Ok(ActivityLabel::Unknown),
        Some(obs) => {
            check_scores::<ActivityLabel>(&obs.scores)?;
            Ok(ActivityLabel::ALL[argmax_first(&obs.scores).expect("finite scores")])
        }
    }
}

/// Identity and provenance fields copied onto a fused quadruplet.
#[derive(Debug, Clone, PartialEq)]
pub struct WordIdentity {
    pub sentence_id: String,
    pub index_in_sentence: u32,
    pub video_id: String,
    pub dog_id: Option<String>,
}

/// Builds the quadruplet for one word. Without location observations the
/// location falls back to `Others`; without an activity observation the
/// activity is `Unknown`.
pub fn fuse_quadruplet(
    word: &WordSpan,
    subwords: Vec<Subword>,
    location_observations: &[LocationObservation],
    activity_observation: Option<&ActivityObservation>,
    config: &FusionConfig,
    identity: WordIdentity,
) -> Result<Quadruplet> {
    config.validate()?;
    let location = if location_observations.is_empty() {
        LocationLabel::Others
    } else {
        fuse_location(location_observations, config)?
    };
    Ok(Quadruplet {
        word: word.word,
        subwords,
        location,
        activity: fuse_activity(activity_observation)?,
        span: word.span,
        sentence_id: identity.sentence_id,
        index_in_sentence: identity.index_in_sentence,
        video_id: identity.video_id,
        dog_id: identity.dog_id,
    })
}

/// Observations whose timestamp lies within `span` widened by `tolerance`.
pub fn location_observations_for(
    all: &[LocationObservation],
    span: &TimeSpan,
    tolerance: f64,
) -> Vec<LocationObservation> {
    all.iter()
        .filter(|o| o.timestamp >= span.begin - tolerance && o.timestamp <= span.end + tolerance)
        .cloned()
        .collect()
}

/// The observation whose window matches `window` to within `tolerance` at
/// both ends; the closest one wins.
pub fn activity_observation_for<'a>(
    all: &'a [ActivityObservation],
    window: &TimeSpan,
    tolerance: f64,
) -> Option<&'a ActivityObservation> {
    all.iter()
        .map(|o| {
            let err = (o.window.begin - window.begin)
                .abs()
                .max((o.window.end - window.end).abs());
            (o, err)
        })
        .filter(|&(_, err)| err <= tolerance)
        .fold(
            None,
            |best: Option<(&ActivityObservation, f64)>, cand| match best {
                Some((_, e)) if cand.1 >= e => best,
                _ => Some(cand),
            },
        )
        .map(|(o, _)| o)
}

/// Maps header names to label positions; every label must appear once.
fn label_columns<L: Label>(headers: &[&str]) -> Result<Vec<usize>> {
    let mut positions = vec![usize::MAX; L::count()];
    for (col, name) in headers.iter().enumerate() {
        let label =
            L::all()
                .iter()
                .find(|l| l.name() == *name)
                .ok_or_else(|| Error::UnknownSymbol {
                    kind: L::KIND,
                    symbol: name.to_string(),
                })?;
        if positions[label.index()] != usize::MAX {
            return Err(Error::Config(format!("duplicate column {name}")));
        }
        positions[label.index()] = col;
    }
    if let Some(missing) = positions.iter().position(|&p| p == usize::MAX) {
        return Err(Error::Config(format!(
            "missing {} column {}",
            L::KIND,
            L::all()[missing].name()
        )));
    }
    Ok(positions)
}

fn read_numeric_csv<R: Read>(source: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = record?
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::malformed(i + 2, e.to_string()))?;
        if row.len() != headers.len() {
            return Err(Error::malformed(i + 2, "wrong number of fields"));
        }
        rows.push(row);
    }
    Ok((headers, rows))
}

/// Reads `timestamp,<location label scores...>`.
pub fn read_location_csv<R: Read>(source: R) -> Result<Vec<LocationObservation>> {
    let (headers, rows) = read_numeric_csv(source)?;
    if headers.first().map(String::as_str) != Some("timestamp") {
        return Err(Error::Config(
            "location CSV must start with `timestamp`".into(),
        ));
    }
    let names: Vec<&str> = headers[1..].iter().map(String::as_str).collect();
    let cols = label_columns::<LocationLabel>(&names)?;
    rows.into_iter()
        .map(|row| {
            let obs = LocationObservation {
                timestamp: row[0],
                scores: cols.iter().map(|&c| row[c + 1]).collect(),
            };
            check_scores::<LocationLabel>(&obs.scores)?;
            Ok(obs)
        })
        .collect()
}

/// Reads `begin,end,<activity label scores...>`.
pub fn read_activity_csv<R: Read>(source: R) -> Result<Vec<ActivityObservation>> {
    let (headers, rows) = read_numeric_csv(source)?;
    if headers.len() < 2 || headers[0] != "begin" || headers[1] != "end" {
        return Err(Error::Config(
            "activity CSV must start with `begin,end`".into(),
        ));
    }
    let names: Vec<&str> = headers[2..].iter().map(String::as_str).collect();
    let cols = label_columns::<ActivityLabel>(&names)?;
    rows.into_iter()
        .map(|row| {
            let obs = ActivityObservation {
                window: TimeSpan::new(row[0], row[1])?,
                scores: cols.iter().map(|&c| row[c + 2]).collect(),
            };
            check_scores::<ActivityLabel>(&obs.scores)?;
            Ok(obs)
        })
        .collect()
}

/// Writes observations in the layout read by [`read_location_csv`].
pub fn write_location_csv<W: Write>(observations: &[LocationObservation], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["timestamp".to_string()];
    header.extend(LocationLabel::ALL.iter().map(|l| l.name().to_string()));
    w.write_record(&header)?;
    for o in observations {
        check_scores::<LocationLabel>(&o.scores)?;
        let mut row = vec![o.timestamp.to_string()];
        row.extend(o.scores.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes observations in the layout read by [`read_activity_csv`].
pub fn write_activity_csv<W: Write>(observations: &[ActivityObservation], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["begin".to_string(), "end".to_string()];
    header.extend(ActivityLabel::ALL.iter().map(|l| l.name().to_string()));
    w.write_record(&header)?;
    for o in observations {
        check_scores::<ActivityLabel>(&o.scores)?;
        let mut row = vec![o.window.begin.to_string(), o.window.end.to_string()];
        row.extend(o.scores.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
