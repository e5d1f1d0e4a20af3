//! Quadruplet corpus: data model, validation and line-delimited JSON I/O.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{ActivityLabel, IpaInventory, IpaSymbol, Label, LocationLabel, WordType};

/// Slack applied to containment and ordering checks on timestamps.
pub const TIME_EPSILON: f64 = 1e-9;

/// Half-open interval in seconds with `end > begin >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub begin: f64,
    pub end: f64,
}

impl TimeSpan {
    pub fn new(begin: f64, end: f64) -> Result<Self> {
        if !(begin.is_finite() && end.is_finite()) || begin < 0.0 || end <= begin {
            return Err(Error::InvalidSpan { begin, end });
        }
        Ok(Self { begin, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.begin
    }

    pub fn contains(&self, other: &TimeSpan) -> bool {
        other.begin >= self.begin - TIME_EPSILON && other.end <= self.end + TIME_EPSILON
    }

    pub fn overlaps(&self, other: &TimeSpan) -> bool {
        self.begin < other.end - TIME_EPSILON && other.begin < self.end - TIME_EPSILON
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subword {
    pub span: TimeSpan,
    pub symbol: IpaSymbol,
    /// Match distance to the reference embedding of `symbol`.
    pub distance: f64,
}

/// One vocalization event with its acoustic and contextual labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadruplet {
    pub word: WordType,
    pub subwords: Vec<Subword>,
    pub location: LocationLabel,
    pub activity: ActivityLabel,
    pub span: TimeSpan,
    pub sentence_id: String,
    pub index_in_sentence: u32,
    pub video_id: String,
    pub dog_id: Option<String>,
}

impl Quadruplet {
    /// The subword symbols in order.
    pub fn ipa_sequence(&self) -> Vec<&IpaSymbol> {
        self.subwords.iter().map(|s| &s.symbol).collect()
    }

    fn check_subwords(&self) -> std::result::Result<(), String> {
        for (i, sw) in self.subwords.iter().enumerate() {
            if !(sw.distance.is_finite() && sw.distance >= 0.0) {
                return Err(format!("subword {i}: distance must be finite and >= 0"));
            }
            if !self.span.contains(&sw.span) {
                return Err(format!("subword {i}: span outside word span"));
            }
        }
        Ok(())
    }

    fn subwords_overlap(&self) -> bool {
        self.subwords
            .windows(2)
            .any(|w| w[0].span.end > w[1].span.begin + TIME_EPSILON)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub id: String,
    pub video_id: String,
    pub quadruplets: Vec<Quadruplet>,
}

/// Quadruplets grouped by sentence, each sentence ordered by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadrupletCorpus {
    sentences: Vec<Sentence>,
}

impl QuadrupletCorpus {
    /// Groups quadruplets into sentences (first-appearance order) and
    /// validates every record.
    pub fn new(quadruplets: Vec<Quadruplet>) -> Result<Self> {
        Self::build(quadruplets.into_iter().enumerate().map(|(i, q)| (i + 1, q)))
    }

    fn build(records: impl IntoIterator<Item = (usize, Quadruplet)>) -> Result<Self> {
        let mut sentences: Vec<Sentence> = Vec::new();
        let mut by_id: HashMap<String, usize> = HashMap::new();
        let mut seen: HashMap<(String, u32), usize> = HashMap::new();

        for (line, q) in records {
            q.check_subwords().map_err(|m| Error::malformed(line, m))?;
            if q.subwords_overlap() {
                return Err(Error::OverlappingSubwords { line });
            }
            let key = (q.sentence_id.clone(), q.index_in_sentence);
            if seen.insert(key, line).is_some() {
                return Err(Error::DuplicateIndex {
                    line,
                    sentence_id: q.sentence_id.clone(),
                    index: q.index_in_sentence,
                });
            }
            let slot = *by_id.entry(q.sentence_id.clone()).or_insert_with(|| {
                sentences.push(Sentence {
                    id: q.sentence_id.clone(),
                    video_id: q.video_id.clone(),
                    quadruplets: Vec::new(),
                });
                sentences.len() - 1
            });
            let sentence = &mut sentences[slot];
            if sentence.video_id != q.video_id {
                return Err(Error::malformed(
                    line,
                    format!("sentence {:?} spans multiple videos", q.sentence_id),
                ));
            }
            sentence.quadruplets.push(q);
        }

        for s in &mut sentences {
            s.quadruplets.sort_by_key(|q| q.index_in_sentence);
        }
        Ok(Self { sentences })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn quadruplets(&self) -> impl Iterator<Item = &Quadruplet> + '_ {
        self.sentences.iter().flat_map(|s| s.quadruplets.iter())
    }

    pub fn len(&self) -> usize {
        self.sentences.iter().map(|s| s.quadruplets.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn video_count(&self) -> usize {
        self.sentences
            .iter()
            .map(|s| s.video_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn subword_count(&self) -> usize {
        self.quadruplets().map(|q| q.subwords.len()).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubwordRecord {
    begin: f64,
    end: f64,
    ipa: String,
    distance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    video_id: String,
    sentence_id: String,
    index: u32,
    begin: f64,
    end: f64,
    word: String,
    subwords: Vec<SubwordRecord>,
    location: String,
    activity: String,
    dog_id: Option<String>,
}

fn parse_label<L: Label + std::str::FromStr<Err = Error>>(line: usize, s: &str) -> Result<L> {
    s.parse::<L>().map_err(|_| Error::UnknownSymbolAt {
        line,
        kind: L::KIND,
        symbol: s.to_string(),
    })
}

impl Record {
    fn into_quadruplet(self, line: usize, inventory: &IpaInventory) -> Result<Quadruplet> {
        let span = TimeSpan::new(self.begin, self.end)
            .map_err(|e| Error::malformed(line, e.to_string()))?;
        let subwords =
            self.subwords
                .into_iter()
                .map(|sw| {
                    let symbol = inventory.lookup(&sw.ipa).cloned().ok_or_else(|| {
                        Error::UnknownSymbolAt {
                            line,
                            kind: "IPA symbol",
                            symbol: sw.ipa.clone(),
                        }
                    })?;
                    let span = TimeSpan::new(sw.begin, sw.end)
                        .map_err(|e| Error::malformed(line, format!("subword: {e}")))?;
                    Ok(Subword {
                        span,
                        symbol,
                        distance: sw.distance,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        Ok(Quadruplet {
            word: parse_label(line, &self.word)?,
            subwords,
            location: parse_label(line, &self.location)?,
            activity: parse_label(line, &self.activity)?,
            span,
            sentence_id: self.sentence_id,
            index_in_sentence: self.index,
            video_id: self.video_id,
            dog_id: self.dog_id,
        })
    }

    fn from_quadruplet(q: &Quadruplet) -> Self {
        Self {
            video_id: q.video_id.clone(),
            sentence_id: q.sentence_id.clone(),
            index: q.index_in_sentence,
            begin: q.span.begin,
            end: q.span.end,
            word: q.word.name().to_string(),
            subwords: q
                .subwords
                .iter()
                .map(|sw| SubwordRecord {
                    begin: sw.span.begin,
                    end: sw.span.end,
                    ipa: sw.symbol.as_str().to_string(),
                    distance: sw.distance,
                })
                .collect(),
            location: q.location.name().to_string(),
            activity: q.activity.name().to_string(),
            dog_id: q.dog_id.clone(),
        }
    }
}

/// Reads a line-delimited JSON corpus. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_corpus<R: BufRead>(source: R, inventory: &IpaInventory) -> Result<QuadrupletCorpus> {
    let mut records = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::malformed(line_no, e.to_string()))?;
        records.push((line_no, record.into_quadruplet(line_no, inventory)?));
    }
    QuadrupletCorpus::build(records)
}

pub fn write_corpus<W: Write>(corpus: &QuadrupletCorpus, mut sink: W) -> Result<()> {
    for q in corpus.quadruplets() {
        serde_json::to_writer(&mut sink, &Record::from_quadruplet(q))?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelCount {
    pub label: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub quadruplets: usize,
    pub sentences: usize,
    pub videos: usize,
    pub subwords: usize,
    pub words: Vec<LabelCount>,
    pub locations: Vec<LabelCount>,
    pub activities: Vec<LabelCount>,
    pub ipa: Vec<LabelCount>,
}

fn label_counts<L: Label>(values: impl Iterator<Item = L>) -> Vec<LabelCount> {
    let mut counts = vec![0u64; L::count()];
    for v in values {
        counts[v.index()] += 1;
    }
    L::all()
        .iter()
        .zip(counts)
        .map(|(l, count)| LabelCount {
            label: l.name().to_string(),
            count,
        })
        .collect()
}

pub fn corpus_summary(corpus: &QuadrupletCorpus, inventory: &IpaInventory) -> CorpusSummary {
    let mut ipa: Vec<LabelCount> = inventory
        .symbols()
        .iter()
        .map(|s| LabelCount {
            label: s.to_string(),
            count: 0,
        })
        .collect();
    for sw in corpus.quadruplets().flat_map(|q| q.subwords.iter()) {
        match inventory.position(sw.symbol.as_str()) {
            Some(i) => ipa[i].count += 1,
            None => ipa.push(LabelCount {
                label: sw.symbol.to_string(),
                count: 1,
            }),
        }
    }
    CorpusSummary {
        quadruplets: corpus.len(),
        sentences: corpus.sentence_count(),
        videos: corpus.video_count(),
        subwords: corpus.subword_count(),
        words: label_counts(corpus.quadruplets().map(|q| q.word)),
        locations: label_counts(corpus.quadruplets().map(|q| q.location)),
        activities: label_counts(corpus.quadruplets().map(|q| q.activity)),
        ipa,
    }
}
