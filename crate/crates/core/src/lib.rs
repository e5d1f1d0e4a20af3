//! Vocalization corpus construction and context statistics.
//!
//! Raw recordings are segmented into sentences and words, words are split
//! into vowel-like subwords and transcribed, and each word is fused with its
//! location and activity into a quadruplet. The [`stats`] module computes
//! prior-normalized lift matrices, bigram analyses and duration tables over
//! the resulting corpus.

pub mod audio;
pub mod context;
pub mod corpus;
pub mod detect;
pub mod error;
pub mod labels;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod subword;
pub mod synth;

pub use corpus::{
    corpus_summary, parse_corpus, write_corpus, CorpusSummary, Quadruplet, QuadrupletCorpus,
    Sentence, Subword, TimeSpan,
};
pub use error::{Error, Result};
pub use labels::{
    ActivityLabel, Bigram, ContextPair, IpaInventory, IpaSymbol, Label, LocationLabel, WordType,
};
