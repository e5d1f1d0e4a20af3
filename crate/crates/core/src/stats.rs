//! Priors, lift matrices, bigram analyses, subword distributions, duration
//! tables and classifier evaluation.
//!
//! Every ratio is evaluated as one division of exact integer products, so a
//! cell is the correctly rounded value of its rational definition. No
//! smoothing is applied: a row or column with a zero marginal, or one that
//! fails its occurrence threshold, is `None` ("absent"), while a pair that
//! never co-occurred under present marginals has lift `0.0`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Quadruplet, QuadrupletCorpus};
use crate::error::{Error, Result};
use crate::labels::{
    ActivityLabel, Bigram, ContextPair, IpaInventory, IpaSymbol, Label, LocationLabel, WordType,
};

/// Default occurrence threshold for word-context lift (strictly exceeded).
pub const DEFAULT_MIN_CONTEXT_COUNT: u64 = 100;
/// Default occurrence threshold for bigram-context lift (strictly exceeded).
pub const DEFAULT_MIN_BIGRAM_COUNT: u64 = 10;

/// Which word of a bigram supplies the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BigramContext {
    FirstWord,
    #[default]
    SecondWord,
}

/// Filters shared by the activity-bearing analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub exclude_unknown_activity: bool,
    pub exclude_no_dog: bool,
    pub bigram_context: BigramContext,
}

impl AnalysisOptions {
    pub fn includes(&self, activity: ActivityLabel) -> bool {
        !(self.exclude_unknown_activity && activity == ActivityLabel::Unknown
            || self.exclude_no_dog && activity == ActivityLabel::NoDog)
    }
}

fn ratio(numerator: u128, denominator: u128) -> f64 {
    numerator as f64 / denominator as f64
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Empirical distribution over an ordered domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution<K> {
    pub domain: Vec<K>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl<K: PartialEq> Distribution<K> {
    fn from_counts(domain: Vec<K>, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self {
            domain,
            counts,
            total,
        }
    }

    /// `count / total`; zero when the distribution is empty.
    pub fn probability_at(&self, i: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            ratio(self.counts[i] as u128, self.total as u128)
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.domain.len())
            .map(|i| self.probability_at(i))
            .collect()
    }

    pub fn count(&self, key: &K) -> u64 {
        self.domain
            .iter()
            .position(|k| k == key)
            .map_or(0, |i| self.counts[i])
    }

    pub fn probability(&self, key: &K) -> f64 {
        self.domain
            .iter()
            .position(|k| k == key)
            .map_or(0.0, |i| self.probability_at(i))
    }

    pub fn map_keys<T>(&self, f: impl Fn(&K) -> T) -> Distribution<T> {
        Distribution {
            domain: self.domain.iter().map(f).collect(),
            counts: self.counts.clone(),
            total: self.total,
        }
    }
}

fn label_distribution<L: Label>(values: impl Iterator<Item = L>) -> Distribution<L> {
    let mut counts = vec![0u64; L::count()];
    for v in values {
        counts[v.index()] += 1;
    }
    Distribution::from_counts(L::all().to_vec(), counts)
}

fn context_index(pair: ContextPair) -> usize {
    pair.location.index() * ActivityLabel::count() + pair.activity.index()
}

fn all_context_pairs() -> Vec<ContextPair> {
    LocationLabel::ALL
        .iter()
        .flat_map(|&l| {
            ActivityLabel::ALL
                .iter()
                .map(move |&a| ContextPair::new(l, a))
        })
        .collect()
}

fn context_of(q: &Quadruplet) -> ContextPair {
    ContextPair::new(q.location, q.activity)
}

fn non_empty(corpus: &QuadrupletCorpus) -> Result<()> {
    if corpus.is_empty() {
        Err(Error::EmptyCorpus)
    } else {
        Ok(())
    }
}

pub fn word_prior(corpus: &QuadrupletCorpus) -> Result<Distribution<WordType>> {
    non_empty(corpus)?;
    Ok(label_distribution(corpus.quadruplets().map(|q| q.word)))
}

pub fn location_prior(corpus: &QuadrupletCorpus) -> Result<Distribution<LocationLabel>> {
    non_empty(corpus)?;
    Ok(label_distribution(corpus.quadruplets().map(|q| q.location)))
}

pub fn activity_prior(
    corpus: &QuadrupletCorpus,
    options: &AnalysisOptions,
) -> Result<Distribution<ActivityLabel>> {
    non_empty(corpus)?;
    let d = label_distribution(
        corpus
            .quadruplets()
            .map(|q| q.activity)
            .filter(|&a| options.includes(a)),
    );
    if d.total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(d)
}

/// Joint (location, activity) prior over all 165 pairs, location-major.
pub fn context_prior(
    corpus: &QuadrupletCorpus,
    options: &AnalysisOptions,
) -> Result<Distribution<ContextPair>> {
    non_empty(corpus)?;
    let mut counts = vec![0u64; LocationLabel::count() * ActivityLabel::count()];
    for q in corpus
        .quadruplets()
        .filter(|q| options.includes(q.activity))
    {
        counts[context_index(context_of(q))] += 1;
    }
    let d = Distribution::from_counts(all_context_pairs(), counts);
    if d.total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(d)
}

/// IPA prior over subword tokens, in inventory order.
pub fn ipa_prior(
    corpus: &QuadrupletCorpus,
    inventory: &IpaInventory,
) -> Result<Distribution<IpaSymbol>> {
    let mut domain: Vec<IpaSymbol> = inventory.symbols().to_vec();
    let mut counts = vec![0u64; domain.len()];
    for sw in corpus.quadruplets().flat_map(|q| q.subwords.iter()) {
        match domain.iter().position(|s| s == &sw.symbol) {
            Some(i) => counts[i] += 1,
            None => {
                domain.push(sw.symbol.clone());
                counts.push(1);
            }
        }
    }
    let d = Distribution::from_counts(domain, counts);
    if d.total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Word,
    Location,
    Activity,
    Ipa,
    ContextPair,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Word,
        Dimension::Location,
        Dimension::Activity,
        Dimension::Ipa,
        Dimension::ContextPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Word => "word",
            Dimension::Location => "location",
            Dimension::Activity => "activity",
            Dimension::Ipa => "ipa",
            Dimension::ContextPair => "context",
        }
    }
}

/// Prior along one dimension with labels rendered as strings.
pub fn prior(
    corpus: &QuadrupletCorpus,
    dimension: Dimension,
    options: &AnalysisOptions,
    inventory: &IpaInventory,
) -> Result<Distribution<String>> {
    let name = |k: &dyn std::fmt::Display| k.to_string();
    Ok(match dimension {
        Dimension::Word => word_prior(corpus)?.map_keys(|k| name(k)),
        Dimension::Location => location_prior(corpus)?.map_keys(|k| name(k)),
        Dimension::Activity => activity_prior(corpus, options)?.map_keys(|k| name(k)),
        Dimension::Ipa => ipa_prior(corpus, inventory)?.map_keys(|k| name(k)),
        Dimension::ContextPair => context_prior(corpus, options)?.map_keys(|k| name(k)),
    })
}

/// `P(col | row) / P(col)` with the counts it was computed from.
///
/// `total` is the population over which the column prior is taken. For the
/// word matrices that is also the population of the rows; for bigram rows it
/// is the quadruplet count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftMatrix<R, C> {
    pub rows: Vec<R>,
    pub cols: Vec<C>,
    pub joint: Vec<Vec<u64>>,
    pub row_counts: Vec<u64>,
    pub col_counts: Vec<u64>,
    pub total: u64,
    pub row_threshold: Option<u64>,
    pub col_threshold: Option<u64>,
    pub lift: Vec<Vec<Option<f64>>>,
}

impl<R, C> LiftMatrix<R, C> {
    #[allow(clippy::too_many_arguments)]
    fn build(
        rows: Vec<R>,
        cols: Vec<C>,
        joint: Vec<Vec<u64>>,
        row_counts: Vec<u64>,
        col_counts: Vec<u64>,
        total: u64,
        row_threshold: Option<u64>,
        col_threshold: Option<u64>,
    ) -> Self {
        let passes =
            |count: u64, threshold: Option<u64>| count > 0 && threshold.is_none_or(|t| count > t);
        let lift = joint
            .iter()
            .zip(&row_counts)
            .map(|(row, &rc)| {
                row.iter()
                    .zip(&col_counts)
                    .map(|(&j, &cc)| {
                        (passes(rc, row_threshold) && passes(cc, col_threshold))
                            .then(|| ratio(j as u128 * total as u128, rc as u128 * cc as u128))
                    })
                    .collect()
            })
            .collect();
        Self {
            rows,
            cols,
            joint,
            row_counts,
            col_counts,
            total,
            row_threshold,
            col_threshold,
            lift,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.lift[row][col]
    }

    pub fn present_cells(&self) -> usize {
        self.lift.iter().flatten().filter(|c| c.is_some()).count()
    }

    /// `P(col | row)` for present cells.
    pub fn conditional(&self, row: usize, col: usize) -> Option<f64> {
        self.lift[row][col]
            .map(|_| ratio(self.joint[row][col] as u128, self.row_counts[row] as u128))
    }

    /// `P(col)` over the prior population.
    pub fn col_prior(&self, col: usize) -> f64 {
        ratio(self.col_counts[col] as u128, self.total as u128)
    }
}

impl<R: PartialEq, C: PartialEq> LiftMatrix<R, C> {
    pub fn lift_of(&self, row: &R, col: &C) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        self.lift[r][c]
    }

    pub fn row_index(&self, row: &R) -> Option<usize> {
        self.rows.iter().position(|x| x == row)
    }

    pub fn col_index(&self, col: &C) -> Option<usize> {
        self.cols.iter().position(|x| x == col)
    }
}

fn word_lift<C: Label>(quads: impl Iterator<Item = (WordType, C)>) -> LiftMatrix<WordType, C> {
    let mut joint = vec![vec![0u64; C::count()]; WordType::count()];
    let mut rows = vec![0u64; WordType::count()];
    let mut cols = vec![0u64; C::count()];
    let mut total = 0;
    for (w, c) in quads {
        joint[w.index()][c.index()] += 1;
        rows[w.index()] += 1;
        cols[c.index()] += 1;
        total += 1;
    }
    LiftMatrix::build(
        WordType::ALL.to_vec(),
        C::all().to_vec(),
        joint,
        rows,
        cols,
        total,
        None,
        None,
    )
}

/// `P(location | word) / P(location)`.
pub fn lift_word_location(
    corpus: &QuadrupletCorpus,
) -> Result<LiftMatrix<WordType, LocationLabel>> {
    non_empty(corpus)?;
    Ok(word_lift(
        corpus.quadruplets().map(|q| (q.word, q.location)),
    ))
}

/// `P(activity | word) / P(activity)` over the included activities.
pub fn lift_word_activity(
    corpus: &QuadrupletCorpus,
    options: &AnalysisOptions,
) -> Result<LiftMatrix<WordType, ActivityLabel>> {
    non_empty(corpus)?;
    Ok(word_lift(
        corpus
            .quadruplets()
            .filter(|q| options.includes(q.activity))
            .map(|q| (q.word, q.activity)),
    ))
}

/// `P((location, activity) | word) / P((location, activity))`. Columns are
/// the observed context pairs; pairs occurring `min_count` times or fewer
/// are absent.
pub fn lift_word_context(
    corpus: &QuadrupletCorpus,
    min_count: u64,
    options: &AnalysisOptions,
) -> Result<LiftMatrix<WordType, ContextPair>> {
    non_empty(corpus)?;
    let quads: Vec<&Quadruplet> = corpus
        .quadruplets()
        .filter(|q| options.includes(q.activity))
        .collect();
    let cols: Vec<ContextPair> = quads
        .iter()
        .map(|q| context_of(q))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut joint = vec![vec![0u64; cols.len()]; WordType::count()];
    let mut row_counts = vec![0u64; WordType::count()];
    let mut col_counts = vec![0u64; cols.len()];
    for q in &quads {
        let c = cols.binary_search(&context_of(q)).expect("observed pair");
        joint[q.word.index()][c] += 1;
        row_counts[q.word.index()] += 1;
        col_counts[c] += 1;
    }
    Ok(LiftMatrix::build(
        WordType::ALL.to_vec(),
        cols,
        joint,
        row_counts,
        col_counts,
        quads.len() as u64,
        None,
        Some(min_count),
    ))
}

/// Adjacent differing-type word pairs within each sentence, each with the
/// context of the word chosen by `attribution`.
pub fn extract_bigrams(
    corpus: &QuadrupletCorpus,
    attribution: BigramContext,
) -> Vec<(Bigram, ContextPair)> {
    corpus
        .sentences()
        .iter()
        .flat_map(|s| s.quadruplets.windows(2))
        .filter_map(|pair| {
            let bigram = Bigram::new(pair[0].word, pair[1].word)?;
            let source = match attribution {
                BigramContext::FirstWord => &pair[0],
                BigramContext::SecondWord => &pair[1],
            };
            Some((bigram, context_of(source)))
        })
        .collect()
}

/// `P((location, activity) | bigram) / P((location, activity))`, with the
/// context prior taken over all included quadruplets. Bigrams occurring
/// `min_count` times or fewer are absent.
pub fn bigram_context_lift(
    corpus: &QuadrupletCorpus,
    min_count: u64,
    options: &AnalysisOptions,
) -> Result<LiftMatrix<Bigram, ContextPair>> {
    let mut prior_counts: BTreeMap<ContextPair, u64> = BTreeMap::new();
    let mut total = 0u64;
    for q in corpus
        .quadruplets()
        .filter(|q| options.includes(q.activity))
    {
        *prior_counts.entry(context_of(q)).or_default() += 1;
        total += 1;
    }
    let cols: Vec<ContextPair> = prior_counts.keys().copied().collect();
    let col_counts: Vec<u64> = prior_counts.values().copied().collect();

    let bigrams: Vec<(Bigram, ContextPair)> = extract_bigrams(corpus, options.bigram_context)
        .into_iter()
        .filter(|(_, c)| options.includes(c.activity))
        .collect();
    let rows: Vec<Bigram> = bigrams
        .iter()
        .map(|(b, _)| *b)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut joint = vec![vec![0u64; cols.len()]; rows.len()];
    let mut row_counts = vec![0u64; rows.len()];
    for (b, c) in &bigrams {
        let r = rows.binary_search(b).expect("observed bigram");
        let c = cols
            .binary_search(c)
            .expect("context of an included quadruplet");
        joint[r][c] += 1;
        row_counts[r] += 1;
    }
    Ok(LiftMatrix::build(
        rows,
        cols,
        joint,
        row_counts,
        col_counts,
        total,
        Some(min_count),
        None,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TransitionDirection {
    /// `P(w2 | w1)`: rows are the first word, columns the following word.
    #[default]
    NextGivenPrevious,
    /// `P(w1 | w2)`: rows are the second word, columns the preceding word.
    PreviousGivenNext,
}

/// Conditional probabilities between consecutive differing words. Rows are
/// the conditioning word, columns the predicted word; the diagonal and rows
/// without any transition are absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable {
    pub direction: TransitionDirection,
    pub normalized_by_prior: bool,
    /// `counts[r][c]`: transitions between conditioning word `r` and
    /// predicted word `c`.
    pub counts: Vec<Vec<u64>>,
    pub row_counts: Vec<u64>,
    pub word_counts: Vec<u64>,
    pub total_words: u64,
    pub values: Vec<Vec<Option<f64>>>,
}

impl TransitionTable {
    pub fn get(&self, conditioning: WordType, predicted: WordType) -> Option<f64> {
        self.values[conditioning.index()][predicted.index()]
    }
}

/// Bigram transition probabilities. With `normalize_by_prior` each cell is
/// divided by the prior of the predicted word.
pub fn word_transition_table(
    corpus: &QuadrupletCorpus,
    direction: TransitionDirection,
    normalize_by_prior: bool,
) -> TransitionTable {
    let n = WordType::count();
    let mut counts = vec![vec![0u64; n]; n];
    for (b, _) in extract_bigrams(corpus, BigramContext::SecondWord) {
        let (r, c) = match direction {
            TransitionDirection::NextGivenPrevious => (b.first, b.second),
            TransitionDirection::PreviousGivenNext => (b.second, b.first),
        };
        counts[r.index()][c.index()] += 1;
    }
    let row_counts: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let mut word_counts = vec![0u64; n];
    for q in corpus.quadruplets() {
        word_counts[q.word.index()] += 1;
    }
    let total_words = corpus.len() as u64;
    let values = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    if r == c || row_counts[r] == 0 {
                        return None;
                    }
                    let (num, den) = (counts[r][c] as u128, row_counts[r] as u128);
                    if normalize_by_prior {
                        (word_counts[c] > 0)
                            .then(|| ratio(num * total_words as u128, den * word_counts[c] as u128))
                    } else {
                        Some(ratio(num, den))
                    }
                })
                .collect()
        })
        .collect();
    TransitionTable {
        direction,
        normalized_by_prior: normalize_by_prior,
        counts,
        row_counts,
        word_counts,
        total_words,
        values,
    }
}

/// Activity distribution of one IPA transcript within a word type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubwordGroup {
    pub sequence: Vec<IpaSymbol>,
    pub count: u64,
    pub activities: Distribution<ActivityLabel>,
    /// Distinct dogs among members carrying a dog id; `None` if none do.
    pub distinct_dogs: Option<usize>,
}

/// Groups `word_type` quadruplets by exact IPA sequence and keeps the
/// `top_k` most frequent (count ties by lexicographic sequence order).
pub fn subword_activity_distribution(
    corpus: &QuadrupletCorpus,
    word_type: WordType,
    top_k: usize,
    options: &AnalysisOptions,
) -> Result<Vec<SubwordGroup>> {
    if !corpus.quadruplets().any(|q| q.word == word_type) {
        return Err(Error::WordTypeAbsent(word_type.to_string()));
    }
    // per sequence: activity counts, dog ids, whether any member had one
    type Tally<'a> = (Vec<u64>, BTreeSet<&'a str>, bool);
    let mut groups: BTreeMap<Vec<IpaSymbol>, Tally> = BTreeMap::new();
    for q in corpus
        .quadruplets()
        .filter(|q| q.word == word_type && options.includes(q.activity))
    {
        let seq: Vec<IpaSymbol> = q.subwords.iter().map(|s| s.symbol.clone()).collect();
        let entry = groups
            .entry(seq)
            .or_insert_with(|| (vec![0; ActivityLabel::count()], BTreeSet::new(), false));
        entry.0[q.activity.index()] += 1;
        if let Some(dog) = &q.dog_id {
            entry.1.insert(dog.as_str());
            entry.2 = true;
        }
    }
    let mut out: Vec<SubwordGroup> = groups
        .into_iter()
        .map(|(sequence, (counts, dogs, any_dog))| {
            let activities = Distribution::from_counts(ActivityLabel::ALL.to_vec(), counts);
            SubwordGroup {
                sequence,
                count: activities.total,
                activities,
                distinct_dogs: any_dog.then_some(dogs.len()),
            }
        })
        .collect();
    // BTreeMap iteration is already lexicographic; a stable sort keeps it
    // for equal counts.
    out.sort_by_key(|g| std::cmp::Reverse(g.count));
    out.truncate(top_k);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordDuration {
    pub word: WordType,
    pub count: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpaDuration {
    pub symbol: IpaSymbol,
    pub count: u64,
    pub mean: f64,
    /// Population standard deviation of the per-word-type mean durations.
    pub std_across_word_types: f64,
    pub word_types: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationStats {
    pub words: Vec<WordDuration>,
    pub ipa: Vec<IpaDuration>,
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Mean durations per word type and per IPA symbol. IPA symbols are listed
/// in inventory order, then any others in lexicographic order.
pub fn duration_stats(
    corpus: &QuadrupletCorpus,
    inventory: &IpaInventory,
) -> Result<DurationStats> {
    non_empty(corpus)?;
    let mut per_word: Vec<Vec<f64>> = vec![Vec::new(); WordType::count()];
    let mut per_symbol: BTreeMap<&IpaSymbol, Vec<Vec<f64>>> = BTreeMap::new();
    for q in corpus.quadruplets() {
        per_word[q.word.index()].push(q.span.duration());
        for sw in &q.subwords {
            per_symbol
                .entry(&sw.symbol)
                .or_insert_with(|| vec![Vec::new(); WordType::count()])[q.word.index()]
            .push(sw.span.duration());
        }
    }
    let words = WordType::ALL
        .iter()
        .zip(&per_word)
        .filter(|(_, d)| !d.is_empty())
        .map(|(&word, d)| WordDuration {
            word,
            count: d.len() as u64,
            mean: mean(d),
        })
        .collect();

    let mut symbols: Vec<&IpaSymbol> = per_symbol.keys().copied().collect();
    symbols.sort_by_key(|s| {
        (
            inventory.position(s.as_str()).unwrap_or(usize::MAX),
            (*s).clone(),
        )
    });
    let ipa = symbols
        .into_iter()
        .map(|symbol| {
            let by_type = &per_symbol[symbol];
            let all: Vec<f64> = by_type.iter().flatten().copied().collect();
            let type_means: Vec<f64> = by_type
                .iter()
                .filter(|d| !d.is_empty())
                .map(|d| mean(d))
                .collect();
            let center = mean(&type_means);
            let variance = mean(
                &type_means
                    .iter()
                    .map(|m| (m - center) * (m - center))
                    .collect::<Vec<_>>(),
            );
            IpaDuration {
                symbol: symbol.clone(),
                count: all.len() as u64,
                mean: mean(&all),
                std_across_word_types: if type_means.len() == 1 {
                    0.0
                } else {
                    variance.sqrt()
                },
                word_types: type_means.len(),
            }
        })
        .collect();
    Ok(DurationStats { words, ipa })
}

/// `counts[gold][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix<L> {
    pub labels: Vec<L>,
    pub counts: Vec<Vec<u64>>,
}

impl<L> ConfusionMatrix<L> {
    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().flatten().sum();
        let hit: u64 = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        if total == 0 {
            0.0
        } else {
            ratio(hit as u128, total as u128)
        }
    }
}

pub fn confusion_matrix<L: Label>(predictions: &[L], gold: &[L]) -> Result<ConfusionMatrix<L>> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch(predictions.len(), gold.len()));
    }
    let mut counts = vec![vec![0u64; L::count()]; L::count()];
    for (p, g) in predictions.iter().zip(gold) {
        counts[g.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix {
        labels: L::all().to_vec(),
        counts,
    })
}

/// Fraction of rows whose gold label ranks among the `k` highest scores.
/// Equal scores rank by label order.
pub fn topk_accuracy<L: Label>(scores: &[Vec<f64>], gold: &[L], k: usize) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch(scores.len(), gold.len()));
    }
    if k == 0 || k > L::count() {
        return Err(Error::Config(format!("k must be in 1..={}", L::count())));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0u64;
    for (row, g) in scores.iter().zip(gold) {
        if row.len() != L::count() {
            return Err(Error::DimensionMismatch {
                expected: L::count(),
                actual: row.len(),
            });
        }
        let gi = g.index();
        let target = row[gi];
        let rank = row
            .iter()
            .enumerate()
            .filter(|&(i, &s)| s > target || (s == target && i < gi))
            .count();
        if rank < k {
            hits += 1;
        }
    }
    Ok(ratio(hits as u128, gold.len() as u128))
}
