//! Report emission for the analysis suite.
//!
//! Each analysis renders to a CSV table plus a JSON sidecar carrying the
//! counts, marginals, thresholds and the caller's effective configuration.
//! Rendering is pure and deterministic; absent cells are written as `NA`.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::QuadrupletCorpus;
use crate::error::{Error, Result};
use crate::labels::{ActivityLabel, IpaInventory, WordType};
use crate::stats::{
    self, AnalysisOptions, BigramContext, Dimension, DurationStats, LiftMatrix, SubwordGroup,
    TransitionDirection, TransitionTable,
};

pub const NA: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Priors,
    WordLocation,
    WordActivity,
    WordContext,
    BigramContext,
    WordTransition,
    Durations,
    Subwords,
}

impl AnalysisKind {
    /// The standard report set written by `--all`.
    pub const STANDARD: [AnalysisKind; 7] = [
        AnalysisKind::Priors,
        AnalysisKind::WordLocation,
        AnalysisKind::WordActivity,
        AnalysisKind::WordContext,
        AnalysisKind::BigramContext,
        AnalysisKind::WordTransition,
        AnalysisKind::Durations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalysisKind::Priors => "priors",
            AnalysisKind::WordLocation => "word_location",
            AnalysisKind::WordActivity => "word_activity",
            AnalysisKind::WordContext => "word_context",
            AnalysisKind::BigramContext => "bigram_context",
            AnalysisKind::WordTransition => "word_transition",
            AnalysisKind::Durations => "durations",
            AnalysisKind::Subwords => "subwords",
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            AnalysisKind::Priors => "priors",
            AnalysisKind::WordLocation => "word_location_lift",
            AnalysisKind::WordActivity => "word_activity_lift",
            AnalysisKind::WordContext => "word_context_lift",
            AnalysisKind::BigramContext => "bigram_context_lift",
            AnalysisKind::WordTransition => "word_transition",
            AnalysisKind::Durations => "durations",
            AnalysisKind::Subwords => "subword_distribution",
        }
    }
}

impl FromStr for AnalysisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnalysisKind::STANDARD
            .iter()
            .chain(&[AnalysisKind::Subwords])
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown analysis {s:?}")))
    }
}

/// Thresholds and filters for the analysis stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub exclude_unknown_activity: bool,
    pub exclude_no_dog: bool,
    pub bigram_context: BigramContext,
    pub min_context_count: u64,
    pub min_bigram_count: u64,
    pub transition_direction: TransitionDirection,
    pub normalize_transitions: bool,
    /// Word types for the subword report; empty means every observed type.
    pub subword_word_types: Vec<WordType>,
    pub subword_top_k: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            exclude_unknown_activity: false,
            exclude_no_dog: false,
            bigram_context: BigramContext::SecondWord,
            min_context_count: stats::DEFAULT_MIN_CONTEXT_COUNT,
            min_bigram_count: stats::DEFAULT_MIN_BIGRAM_COUNT,
            transition_direction: TransitionDirection::NextGivenPrevious,
            normalize_transitions: false,
            subword_word_types: Vec::new(),
            subword_top_k: 10,
        }
    }
}

impl AnalysisConfig {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            exclude_unknown_activity: self.exclude_unknown_activity,
            exclude_no_dog: self.exclude_no_dog,
            bigram_context: self.bigram_context,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subword_top_k == 0 {
            return Err(Error::Config("subword_top_k must be positive".into()));
        }
        Ok(())
    }
}

/// One rendered report.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: AnalysisKind,
    pub csv: String,
    pub sidecar: Value,
}

impl Report {
    pub fn csv_name(&self) -> String {
        format!("{}.csv", self.kind.file_stem())
    }

    pub fn sidecar_name(&self) -> String {
        format!("{}.json", self.kind.file_stem())
    }
}

fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn names<T: Display>(items: &[T]) -> Vec<String> {
    items.iter().map(ToString::to_string).collect()
}

fn render_matrix<R: Display, C: Display>(corner: &str, m: &LiftMatrix<R, C>) -> Result<String> {
    let header = std::iter::once(corner.to_string()).chain(names(&m.cols));
    let body = m.rows.iter().zip(&m.lift).map(|(r, cells)| {
        std::iter::once(r.to_string())
            .chain(cells.iter().map(|&c| cell(c)))
            .collect()
    });
    csv_string(std::iter::once(header.collect()).chain(body))
}

fn matrix_sidecar<R: Display, C: Display>(
    kind: AnalysisKind,
    m: &LiftMatrix<R, C>,
    config: &Value,
) -> Value {
    json!({
        "analysis": kind.name(),
        "rows": names(&m.rows),
        "cols": names(&m.cols),
        "joint_counts": m.joint,
        "row_counts": m.row_counts,
        "col_counts": m.col_counts,
        "total": m.total,
        "row_threshold": m.row_threshold,
        "col_threshold": m.col_threshold,
        "config": config,
    })
}

fn matrix_report<R: Display, C: Display>(
    kind: AnalysisKind,
    corner: &str,
    m: &LiftMatrix<R, C>,
    config: &Value,
) -> Result<Report> {
    Ok(Report {
        kind,
        csv: render_matrix(corner, m)?,
        sidecar: matrix_sidecar(kind, m, config),
    })
}

fn priors_report(
    corpus: &QuadrupletCorpus,
    inventory: &IpaInventory,
    options: &AnalysisOptions,
    config: &Value,
) -> Result<Report> {
    let mut rows = vec![vec![
        "dimension".to_string(),
        "label".into(),
        "count".into(),
        "probability".into(),
    ]];
    let mut totals = serde_json::Map::new();
    for dim in Dimension::ALL {
        let d = match stats::prior(corpus, dim, options, inventory) {
            Ok(d) => d,
            // a dimension with no tokens (e.g. no subwords) is omitted
            Err(Error::EmptyCorpus) if !corpus.is_empty() => {
                totals.insert(dim.name().into(), json!(0));
                continue;
            }
            Err(e) => return Err(e),
        };
        totals.insert(dim.name().into(), json!(d.total));
        for (i, label) in d.domain.iter().enumerate() {
            rows.push(vec![
                dim.name().to_string(),
                label.clone(),
                d.counts[i].to_string(),
                d.probability_at(i).to_string(),
            ]);
        }
    }
    Ok(Report {
        kind: AnalysisKind::Priors,
        csv: csv_string(rows)?,
        sidecar: json!({
            "analysis": AnalysisKind::Priors.name(),
            "totals": totals,
            "config": config,
        }),
    })
}

pub fn direction_label(direction: TransitionDirection) -> &'static str {
    match direction {
        TransitionDirection::NextGivenPrevious => "P(w2|w1)",
        TransitionDirection::PreviousGivenNext => "P(w1|w2)",
    }
}

fn transition_report(t: &TransitionTable, config: &Value) -> Result<Report> {
    let label = if t.normalized_by_prior {
        format!("{}/P(predicted)", direction_label(t.direction))
    } else {
        direction_label(t.direction).to_string()
    };
    let header = std::iter::once(label.clone())
        .chain(names(WordType::ALL))
        .collect();
    let body = WordType::ALL.iter().zip(&t.values).map(|(w, cells)| {
        std::iter::once(w.to_string())
            .chain(cells.iter().map(|&c| cell(c)))
            .collect()
    });
    Ok(Report {
        kind: AnalysisKind::WordTransition,
        csv: csv_string(std::iter::once(header).chain(body))?,
        sidecar: json!({
            "analysis": AnalysisKind::WordTransition.name(),
            "direction": direction_label(t.direction),
            "rows_are": "conditioning word",
            "cols_are": "predicted word",
            "normalized_by_prior": t.normalized_by_prior,
            "labels": names(WordType::ALL),
            "counts": t.counts,
            "row_counts": t.row_counts,
            "word_counts": t.word_counts,
            "total_words": t.total_words,
            "config": config,
        }),
    })
}

fn durations_report(d: &DurationStats, config: &Value) -> Result<Report> {
    let mut rows = vec![vec![
        "kind".to_string(),
        "label".into(),
        "count".into(),
        "mean".into(),
        "std_across_word_types".into(),
    ]];
    for w in &d.words {
        rows.push(vec![
            "word".into(),
            w.word.to_string(),
            w.count.to_string(),
            w.mean.to_string(),
            NA.into(),
        ]);
    }
    for s in &d.ipa {
        rows.push(vec![
            "ipa".into(),
            s.symbol.to_string(),
            s.count.to_string(),
            s.mean.to_string(),
            s.std_across_word_types.to_string(),
        ]);
    }
    Ok(Report {
        kind: AnalysisKind::Durations,
        csv: csv_string(rows)?,
        sidecar: json!({
            "analysis": AnalysisKind::Durations.name(),
            "word_types": d.words.iter().map(|w| json!({"label": w.word.to_string(), "count": w.count})).collect::<Vec<_>>(),
            "ipa": d.ipa.iter().map(|s| json!({"label": s.symbol.to_string(), "count": s.count, "word_types": s.word_types})).collect::<Vec<_>>(),
            "config": config,
        }),
    })
}

fn subword_report(
    corpus: &QuadrupletCorpus,
    cfg: &AnalysisConfig,
    config: &Value,
) -> Result<Report> {
    let types: Vec<WordType> = if cfg.subword_word_types.is_empty() {
        WordType::ALL
            .iter()
            .copied()
            .filter(|w| corpus.quadruplets().any(|q| q.word == *w))
            .collect()
    } else {
        cfg.subword_word_types.clone()
    };
    let mut header = vec![
        "word".to_string(),
        "rank".into(),
        "sequence".into(),
        "count".into(),
        "distinct_dogs".into(),
    ];
    header.extend(names(ActivityLabel::ALL));
    let mut rows = vec![header];
    let mut groups_json = Vec::new();
    for w in types {
        let groups: Vec<SubwordGroup> =
            stats::subword_activity_distribution(corpus, w, cfg.subword_top_k, &cfg.options())?;
        for (rank, g) in groups.iter().enumerate() {
            let seq = names(&g.sequence).join(" ");
            let mut row = vec![
                w.to_string(),
                (rank + 1).to_string(),
                seq.clone(),
                g.count.to_string(),
                g.distinct_dogs
                    .map_or_else(|| NA.to_string(), |n| n.to_string()),
            ];
            row.extend(g.activities.probabilities().iter().map(f64::to_string));
            rows.push(row);
            groups_json.push(json!({
                "word": w.to_string(),
                "sequence": seq,
                "activity_counts": g.activities.counts,
            }));
        }
    }
    Ok(Report {
        kind: AnalysisKind::Subwords,
        csv: csv_string(rows)?,
        sidecar: json!({
            "analysis": AnalysisKind::Subwords.name(),
            "top_k": cfg.subword_top_k,
            "activities": names(ActivityLabel::ALL),
            "groups": groups_json,
            "config": config,
        }),
    })
}

/// Renders the requested analyses in the order given. `config` is embedded
/// verbatim in every sidecar.
pub fn render_reports(
    corpus: &QuadrupletCorpus,
    inventory: &IpaInventory,
    kinds: &[AnalysisKind],
    cfg: &AnalysisConfig,
    config: &Value,
) -> Result<Vec<Report>> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let options = cfg.options();
    kinds
        .iter()
        .map(|&kind| match kind {
            AnalysisKind::Priors => priors_report(corpus, inventory, &options, config),
            AnalysisKind::WordLocation => {
                matrix_report(kind, "word", &stats::lift_word_location(corpus)?, config)
            }
            AnalysisKind::WordActivity => matrix_report(
                kind,
                "word",
                &stats::lift_word_activity(corpus, &options)?,
                config,
            ),
            AnalysisKind::WordContext => matrix_report(
                kind,
                "word",
                &stats::lift_word_context(corpus, cfg.min_context_count, &options)?,
                config,
            ),
            AnalysisKind::BigramContext => matrix_report(
                kind,
                "bigram",
                &stats::bigram_context_lift(corpus, cfg.min_bigram_count, &options)?,
                config,
            ),
            AnalysisKind::WordTransition => transition_report(
                &stats::word_transition_table(
                    corpus,
                    cfg.transition_direction,
                    cfg.normalize_transitions,
                ),
                config,
            ),
            AnalysisKind::Durations => {
                durations_report(&stats::duration_stats(corpus, inventory)?, config)
            }
            AnalysisKind::Subwords => subword_report(corpus, cfg, config),
        })
        .collect()
}

/// Writes each report's CSV and sidecar into `dir`, returning the paths in
/// write order.
pub fn write_reports(reports: &[Report], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for r in reports {
        let csv = dir.join(r.csv_name());
        fs::write(&csv, &r.csv)?;
        let side = dir.join(r.sidecar_name());
        let mut text = serde_json::to_string_pretty(&r.sidecar)?;
        text.push('\n');
        fs::write(&side, text)?;
        paths.push(csv);
        paths.push(side);
    }
    Ok(paths)
}
