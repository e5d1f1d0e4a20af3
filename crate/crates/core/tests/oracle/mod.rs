//! Brute-force tally oracle in exact rational arithmetic.
//!
//! Works on its own flattened record list and regroups sentences itself, so
//! it shares no counting code with the engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use vocalex_core::{Label, QuadrupletCorpus};

pub type Rat = BigRational;

/// `((w1, w2), (location, activity))` cells of the bigram-context lift.
pub type BigramCells = BTreeMap<((usize, usize), (usize, usize)), Option<Rat>>;

#[derive(Debug, Clone)]
pub struct Rec {
    pub word: usize,
    pub loc: usize,
    pub act: usize,
    pub sentence: String,
    pub index: u32,
    pub begin: f64,
    pub end: f64,
    /// `(symbol, begin, end)`
    pub subwords: Vec<(String, f64, f64)>,
    pub dog: Option<String>,
}

pub fn flatten(corpus: &QuadrupletCorpus) -> Vec<Rec> {
    corpus
        .quadruplets()
        .map(|q| Rec {
            word: q.word.index(),
            loc: q.location.index(),
            act: q.activity.index(),
            sentence: q.sentence_id.clone(),
            index: q.index_in_sentence,
            begin: q.span.begin,
            end: q.span.end,
            subwords: q
                .subwords
                .iter()
                .map(|s| (s.symbol.to_string(), s.span.begin, s.span.end))
                .collect(),
            dog: q.dog_id.clone(),
        })
        .collect()
}

pub fn int(n: usize) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn exact(x: f64) -> Rat {
    Rat::from_float(x).expect("finite")
}

/// `|engine - truth| <= 1e-12 |truth|`, evaluated exactly.
pub fn rel_close(engine: f64, truth: &Rat) -> bool {
    if !engine.is_finite() {
        return false;
    }
    let diff = (exact(engine) - truth).abs();
    let tol = truth.abs() * Rat::new(BigInt::from(1), BigInt::from(1_000_000_000_000u64));
    diff <= tol
}

pub fn opt_close(engine: Option<f64>, truth: &Option<Rat>) -> bool {
    match (engine, truth) {
        (None, None) => true,
        (Some(e), Some(t)) => rel_close(e, t),
        _ => false,
    }
}

/// Probability of each of `n` values of `key` over the records it maps;
/// `None` if no record maps.
pub fn prior(recs: &[Rec], n: usize, key: impl Fn(&Rec) -> Option<usize>) -> Option<Vec<Rat>> {
    let keyed: Vec<usize> = recs.iter().filter_map(&key).collect();
    if keyed.is_empty() {
        return None;
    }
    Some(
        (0..n)
            .map(|v| int(keyed.iter().filter(|&&k| k == v).count()) / int(keyed.len()))
            .collect(),
    )
}

/// IPA token probabilities keyed by symbol.
pub fn ipa_prior(recs: &[Rec]) -> BTreeMap<String, Rat> {
    let tokens: Vec<&str> = recs
        .iter()
        .flat_map(|r| r.subwords.iter().map(|s| s.0.as_str()))
        .collect();
    let symbols: BTreeSet<&str> = tokens.iter().copied().collect();
    symbols
        .into_iter()
        .map(|s| {
            (
                s.to_string(),
                int(tokens.iter().filter(|&&t| t == s).count()) / int(tokens.len()),
            )
        })
        .collect()
}

fn tally<K: Ord>(keys: impl Iterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

fn get<K: Ord>(m: &BTreeMap<K, usize>, k: &K) -> usize {
    m.get(k).copied().unwrap_or(0)
}

/// `(joint / row) / (col / total)`, or `None` on a zero marginal.
fn lift(joint: usize, row: usize, col: usize, total: usize) -> Option<Rat> {
    (row > 0 && col > 0).then(|| (int(joint) / int(row)) / (int(col) / int(total)))
}

/// Word-by-column lift over the records passing `include`.
pub fn word_lift(
    recs: &[Rec],
    n_cols: usize,
    col: impl Fn(&Rec) -> usize,
    include: impl Fn(&Rec) -> bool,
) -> Vec<Vec<Option<Rat>>> {
    let kept: Vec<&Rec> = recs.iter().filter(|r| include(r)).collect();
    let words = tally(kept.iter().map(|r| r.word));
    let cols = tally(kept.iter().map(|r| col(r)));
    let joint = tally(kept.iter().map(|r| (r.word, col(r))));
    (0..6)
        .map(|w| {
            (0..n_cols)
                .map(|c| {
                    lift(
                        get(&joint, &(w, c)),
                        get(&words, &w),
                        get(&cols, &c),
                        kept.len(),
                    )
                })
                .collect()
        })
        .collect()
}

/// Word-by-context-pair lift; keys are the observed pairs.
pub fn context_lift(
    recs: &[Rec],
    min_count: usize,
    include: impl Fn(&Rec) -> bool,
) -> BTreeMap<(usize, (usize, usize)), Option<Rat>> {
    let kept: Vec<&Rec> = recs.iter().filter(|r| include(r)).collect();
    let words = tally(kept.iter().map(|r| r.word));
    let pairs = tally(kept.iter().map(|r| (r.loc, r.act)));
    let joint = tally(kept.iter().map(|r| (r.word, (r.loc, r.act))));
    let mut out = BTreeMap::new();
    for w in 0..6 {
        for (&p, &cp) in &pairs {
            let v = if cp <= min_count {
                None
            } else {
                lift(get(&joint, &(w, p)), get(&words, &w), cp, kept.len())
            };
            out.insert((w, p), v);
        }
    }
    out
}

/// Sentences in index order, regrouped from scratch.
pub fn sentences(recs: &[Rec]) -> Vec<Vec<&Rec>> {
    let mut by_id: BTreeMap<&str, Vec<&Rec>> = BTreeMap::new();
    for r in recs {
        by_id.entry(r.sentence.as_str()).or_default().push(r);
    }
    by_id
        .into_values()
        .map(|mut v| {
            v.sort_by_key(|r| r.index);
            v
        })
        .collect()
}

/// `((w1, w2), context)` for adjacent differing words; context from the
/// second word, or the first when `first_context`.
pub fn bigrams(recs: &[Rec], first_context: bool) -> Vec<((usize, usize), (usize, usize))> {
    let mut out = Vec::new();
    for s in sentences(recs) {
        for i in 1..s.len() {
            let (a, b) = (s[i - 1], s[i]);
            if a.word != b.word {
                let src = if first_context { a } else { b };
                out.push(((a.word, b.word), (src.loc, src.act)));
            }
        }
    }
    out
}

/// Bigram-by-context lift with the context prior over all included records.
pub fn bigram_lift(
    recs: &[Rec],
    min_count: usize,
    first_context: bool,
    include_act: impl Fn(usize) -> bool,
) -> BigramCells {
    let kept: Vec<&Rec> = recs.iter().filter(|r| include_act(r.act)).collect();
    let pairs = tally(kept.iter().map(|r| (r.loc, r.act)));
    let bg: Vec<_> = bigrams(recs, first_context)
        .into_iter()
        .filter(|(_, c)| include_act(c.1))
        .collect();
    let rows = tally(bg.iter().map(|b| b.0));
    let joint = tally(bg.iter().copied());
    let mut out = BTreeMap::new();
    for (&b, &cb) in &rows {
        for (&p, &cp) in &pairs {
            let v = if cb > min_count {
                lift(get(&joint, &(b, p)), cb, cp, kept.len())
            } else {
                None
            };
            out.insert((b, p), v);
        }
    }
    out
}

/// `[conditioning][predicted]` transition probabilities.
pub fn transitions(
    recs: &[Rec],
    next_given_previous: bool,
    normalize: bool,
) -> Vec<Vec<Option<Rat>>> {
    let bg = bigrams(recs, false);
    let n = recs.len();
    (0..6)
        .map(|r| {
            (0..6)
                .map(|c| {
                    if r == c {
                        return None;
                    }
                    let pair = |x: &((usize, usize), (usize, usize))| {
                        if next_given_previous {
                            x.0
                        } else {
                            (x.0 .1, x.0 .0)
                        }
                    };
                    let row_total = bg.iter().filter(|x| pair(x).0 == r).count();
                    if row_total == 0 {
                        return None;
                    }
                    let hits = bg.iter().filter(|x| pair(x) == (r, c)).count();
                    let p = int(hits) / int(row_total);
                    if normalize {
                        let wc = recs.iter().filter(|q| q.word == c).count();
                        (wc > 0).then(|| p / (int(wc) / int(n)))
                    } else {
                        Some(p)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub sequence: Vec<String>,
    pub count: usize,
    pub activity_counts: Vec<usize>,
    pub dogs: Option<usize>,
}

/// Top-`k` IPA sequence groups of `word`, count descending then sequence.
pub fn subword_groups(
    recs: &[Rec],
    word: usize,
    top_k: usize,
    include_act: impl Fn(usize) -> bool,
) -> Vec<Group> {
    let members: Vec<&Rec> = recs
        .iter()
        .filter(|r| r.word == word && include_act(r.act))
        .collect();
    let seqs: BTreeSet<Vec<String>> = members
        .iter()
        .map(|r| r.subwords.iter().map(|s| s.0.clone()).collect())
        .collect();
    let mut groups: Vec<Group> = seqs
        .into_iter()
        .map(|seq| {
            let of: Vec<&&Rec> = members
                .iter()
                .filter(|r| r.subwords.iter().map(|s| &s.0).eq(seq.iter()))
                .collect();
            let dogs: BTreeSet<&String> = of.iter().filter_map(|r| r.dog.as_ref()).collect();
            Group {
                count: of.len(),
                activity_counts: (0..15)
                    .map(|a| of.iter().filter(|r| r.act == a).count())
                    .collect(),
                dogs: (!dogs.is_empty()).then_some(dogs.len()),
                sequence: seq,
            }
        })
        .collect();
    // selection sort keeps the rule explicit: larger count first, then
    // the lexicographically smaller sequence
    let mut out = Vec::new();
    while out.len() < top_k && !groups.is_empty() {
        let mut best = 0;
        for i in 1..groups.len() {
            let (g, b) = (&groups[i], &groups[best]);
            if g.count > b.count || (g.count == b.count && g.sequence < b.sequence) {
                best = i;
            }
        }
        out.push(groups.remove(best));
    }
    out
}

fn mean(values: &[Rat]) -> Rat {
    values.iter().fold(Rat::zero(), |a, b| a + b) / int(values.len())
}

/// Exact mean word duration per word type present.
pub fn word_duration_means(recs: &[Rec]) -> Vec<(usize, usize, Rat)> {
    (0..6)
        .filter_map(|w| {
            let d: Vec<Rat> = recs
                .iter()
                .filter(|r| r.word == w)
                .map(|r| exact(r.end - r.begin))
                .collect();
            (!d.is_empty()).then(|| (w, d.len(), mean(&d)))
        })
        .collect()
}

/// Per symbol: count, exact mean duration and exact population variance of
/// per-word-type means.
pub fn ipa_durations(recs: &[Rec]) -> BTreeMap<String, (usize, Rat, Rat)> {
    let mut per: BTreeMap<String, Vec<Vec<Rat>>> = BTreeMap::new();
    for r in recs {
        for (sym, b, e) in &r.subwords {
            per.entry(sym.clone())
                .or_insert_with(|| vec![Vec::new(); 6])[r.word]
                .push(exact(e - b));
        }
    }
    per.into_iter()
        .map(|(sym, by_type)| {
            let all: Vec<Rat> = by_type.iter().flatten().cloned().collect();
            let means: Vec<Rat> = by_type
                .iter()
                .filter(|d| !d.is_empty())
                .map(|d| mean(d))
                .collect();
            let m = mean(&means);
            let var = mean(
                &means
                    .iter()
                    .map(|x| (x - &m) * (x - &m))
                    .collect::<Vec<_>>(),
            );
            (sym, (all.len(), mean(&all), var))
        })
        .collect()
}

/// `sqrt` of an exact variance, for comparison with an engine std-dev.
pub fn std_of(var: &Rat) -> f64 {
    var.to_f64().expect("finite").sqrt()
}

use vocalex_core::stats::{self, AnalysisOptions, BigramContext, TransitionDirection};
use vocalex_core::{ActivityLabel, IpaInventory, WordType};

fn mismatch(what: &str, detail: impl std::fmt::Debug) -> String {
    format!("{what}: {detail:?}")
}

/// Checks one option set; returns the number of values compared.
pub fn check_options(
    corpus: &QuadrupletCorpus,
    inventory: &IpaInventory,
    opts: &AnalysisOptions,
    min_context: u64,
    min_bigram: u64,
) -> Result<usize, String> {
    let recs = flatten(corpus);
    let inc_act = |a: usize| opts.includes(ActivityLabel::ALL[a]);
    let mut checked = 0usize;

    // priors
    let wp = stats::word_prior(corpus).map_err(|e| e.to_string())?;
    let lp = stats::location_prior(corpus).map_err(|e| e.to_string())?;
    let truth_w = prior(&recs, 6, |r| Some(r.word)).expect("non-empty");
    let truth_l = prior(&recs, 11, |r| Some(r.loc)).expect("non-empty");
    for (i, t) in truth_w.iter().enumerate() {
        if !rel_close(wp.probability_at(i), t) {
            return Err(mismatch("word prior", (i, wp.probability_at(i), t)));
        }
    }
    for (i, t) in truth_l.iter().enumerate() {
        if !rel_close(lp.probability_at(i), t) {
            return Err(mismatch("location prior", (i, lp.probability_at(i), t)));
        }
    }
    checked += 17;
    if let Some(truth_a) = prior(&recs, 15, |r| inc_act(r.act).then_some(r.act)) {
        let ap = stats::activity_prior(corpus, opts).map_err(|e| e.to_string())?;
        for (i, t) in truth_a.iter().enumerate() {
            if !rel_close(ap.probability_at(i), t) {
                return Err(mismatch("activity prior", (i, ap.probability_at(i), t)));
            }
        }
        let cp = stats::context_prior(corpus, opts).map_err(|e| e.to_string())?;
        let truth_c =
            prior(&recs, 165, |r| inc_act(r.act).then_some(r.loc * 15 + r.act)).expect("non-empty");
        for (i, t) in truth_c.iter().enumerate() {
            if !rel_close(cp.probability_at(i), t) {
                return Err(mismatch("context prior", (i, cp.probability_at(i), t)));
            }
        }
        checked += 180;
    }
    let truth_ipa = ipa_prior(&recs);
    if !truth_ipa.is_empty() {
        let ip = stats::ipa_prior(corpus, inventory).map_err(|e| e.to_string())?;
        for (i, sym) in ip.domain.iter().enumerate() {
            let t = truth_ipa
                .get(sym.as_str())
                .cloned()
                .unwrap_or_else(Rat::zero);
            if !rel_close(ip.probability_at(i), &t) {
                return Err(mismatch("ipa prior", (sym, ip.probability_at(i), t)));
            }
            checked += 1;
        }
    }

    // word-location and word-activity
    let m = stats::lift_word_location(corpus).map_err(|e| e.to_string())?;
    let truth = word_lift(&recs, 11, |r| r.loc, |_| true);
    for (w, row) in truth.iter().enumerate() {
        for (c, t) in row.iter().enumerate() {
            if !opt_close(m.get(w, c), t) {
                return Err(mismatch("word-location lift", (w, c, m.get(w, c), t)));
            }
            checked += 1;
        }
    }
    if recs.iter().any(|r| inc_act(r.act)) {
        let m = stats::lift_word_activity(corpus, opts).map_err(|e| e.to_string())?;
        let truth = word_lift(&recs, 15, |r| r.act, |r| inc_act(r.act));
        for (w, row) in truth.iter().enumerate() {
            for (c, t) in row.iter().enumerate() {
                if !opt_close(m.get(w, c), t) {
                    return Err(mismatch("word-activity lift", (w, c, m.get(w, c), t)));
                }
                checked += 1;
            }
        }
    }

    // word-context
    let m = stats::lift_word_context(corpus, min_context, opts).map_err(|e| e.to_string())?;
    let truth = context_lift(&recs, min_context as usize, |r| inc_act(r.act));
    let cols: BTreeSet<(usize, usize)> = truth.keys().map(|k| k.1).collect();
    if m.cols.len() != cols.len() {
        return Err(mismatch("word-context columns", (m.cols.len(), cols.len())));
    }
    for ((w, (l, a)), t) in &truth {
        let col = vocalex_core::ContextPair::new(
            vocalex_core::LocationLabel::ALL[*l],
            ActivityLabel::ALL[*a],
        );
        let got = m.lift_of(&WordType::ALL[*w], &col);
        if !opt_close(got, t) {
            return Err(mismatch("word-context lift", (w, l, a, got, t)));
        }
        checked += 1;
    }

    // bigram-context
    let first = opts.bigram_context == BigramContext::FirstWord;
    let m = stats::bigram_context_lift(corpus, min_bigram, opts).map_err(|e| e.to_string())?;
    let truth = bigram_lift(&recs, min_bigram as usize, first, inc_act);
    let rows: BTreeSet<(usize, usize)> = truth.keys().map(|k| k.0).collect();
    if m.rows.len() != rows.len() {
        return Err(mismatch("bigram rows", (m.rows.len(), rows.len())));
    }
    for (((w1, w2), (l, a)), t) in &truth {
        let row =
            vocalex_core::Bigram::new(WordType::ALL[*w1], WordType::ALL[*w2]).expect("distinct");
        let col = vocalex_core::ContextPair::new(
            vocalex_core::LocationLabel::ALL[*l],
            ActivityLabel::ALL[*a],
        );
        let got = m.lift_of(&row, &col);
        if !opt_close(got, t) {
            return Err(mismatch("bigram-context lift", (w1, w2, l, a, got, t)));
        }
        checked += 1;
    }
    let extracted = stats::extract_bigrams(corpus, opts.bigram_context);
    if extracted.len() != bigrams(&recs, first).len() {
        return Err(mismatch(
            "bigram count",
            (extracted.len(), bigrams(&recs, first).len()),
        ));
    }

    // transitions
    for (dir, next) in [
        (TransitionDirection::NextGivenPrevious, true),
        (TransitionDirection::PreviousGivenNext, false),
    ] {
        for normalize in [false, true] {
            let table = stats::word_transition_table(corpus, dir, normalize);
            let truth = transitions(&recs, next, normalize);
            for (r, row) in truth.iter().enumerate() {
                for (c, t) in row.iter().enumerate() {
                    let got = table.get(WordType::ALL[r], WordType::ALL[c]);
                    if !opt_close(got, t) {
                        return Err(mismatch("transition", (dir, normalize, r, c, got, t)));
                    }
                    checked += 1;
                }
            }
        }
    }

    // subword groups
    for (w, &word) in WordType::ALL.iter().enumerate() {
        let got = match stats::subword_activity_distribution(corpus, word, 5, opts) {
            Ok(g) => g,
            Err(_) if !recs.iter().any(|r| r.word == w) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let truth = subword_groups(&recs, w, 5, inc_act);
        if got.len() != truth.len() {
            return Err(mismatch(
                "subword group count",
                (word, got.len(), truth.len()),
            ));
        }
        for (g, t) in got.iter().zip(&truth) {
            let seq: Vec<String> = g.sequence.iter().map(|s| s.to_string()).collect();
            if seq != t.sequence
                || g.count as usize != t.count
                || g.distinct_dogs != t.dogs
                || g.activities
                    .counts
                    .iter()
                    .map(|&c| c as usize)
                    .ne(t.activity_counts.iter().copied())
            {
                return Err(mismatch("subword group", (word, g, t)));
            }
            for (a, &c) in t.activity_counts.iter().enumerate() {
                if !rel_close(g.activities.probability_at(a), &(int(c) / int(t.count))) {
                    return Err(mismatch("subword activity probability", (word, a)));
                }
            }
            checked += 1;
        }
    }

    // durations
    let d = stats::duration_stats(corpus, inventory).map_err(|e| e.to_string())?;
    let truth = word_duration_means(&recs);
    if d.words.len() != truth.len() {
        return Err(mismatch("word duration rows", (d.words.len(), truth.len())));
    }
    for (got, (w, n, mean)) in d.words.iter().zip(&truth) {
        if got.word.index() != *w || got.count as usize != *n || !rel_close(got.mean, mean) {
            return Err(mismatch("word duration", (got, w, n, mean)));
        }
        checked += 1;
    }
    let truth = ipa_durations(&recs);
    for got in &d.ipa {
        let Some((n, mean, var)) = truth.get(got.symbol.as_str()) else {
            if got.count == 0 {
                continue;
            }
            return Err(mismatch("unexpected ipa duration", got));
        };
        // the std-dev is compared on the scale of the mean duration, since
        // near-equal type means make its relative error unbounded
        let std_truth = std_of(var);
        let scale = mean.to_f64().expect("finite");
        if got.count as usize != *n
            || !rel_close(got.mean, mean)
            || (got.std_across_word_types - std_truth).abs() > 1e-12 * scale
        {
            return Err(mismatch("ipa duration", (got, n, mean, std_truth)));
        }
        checked += 1;
    }
    Ok(checked)
}

/// All analyses under the option sets exercised by the tests.
pub fn check_corpus(corpus: &QuadrupletCorpus, inventory: &IpaInventory) -> Result<usize, String> {
    let mut checked = 0;
    for (opts, ctx, bg) in [
        (AnalysisOptions::default(), 100, 10),
        (
            AnalysisOptions {
                exclude_unknown_activity: true,
                exclude_no_dog: false,
                bigram_context: BigramContext::FirstWord,
            },
            3,
            1,
        ),
        (
            AnalysisOptions {
                exclude_unknown_activity: false,
                exclude_no_dog: true,
                bigram_context: BigramContext::SecondWord,
            },
            0,
            0,
        ),
    ] {
        checked += check_options(corpus, inventory, &opts, ctx, bg)?;
    }
    Ok(checked)
}
