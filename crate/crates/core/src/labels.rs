//! Closed label vocabularies for words and their surrounding context.
//!
//! Every enumeration keeps a fixed declaration order. That order is the
//! tie-break everywhere in the toolkit, so pipelines stay reproducible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A categorical label with a fixed, ordered inventory.
pub trait Label: Copy + Eq + Ord + fmt::Debug + 'static {
    const KIND: &'static str;

    fn all() -> &'static [Self];

    fn index(self) -> usize;

    fn name(self) -> &'static str;

    fn count() -> usize {
        Self::all().len()
    }

    fn from_index(i: usize) -> Option<Self> {
        Self::all().get(i).copied()
    }
}

macro_rules! closed_label {
    ($(#[$meta:meta])* $name:ident, $kind:literal, [$($variant:ident),+ $(,)?]) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
        }

        impl Label for $name {
            const KIND: &'static str = $kind;

            fn all() -> &'static [Self] {
                Self::ALL
            }

            fn index(self) -> usize {
                self as usize
            }

            fn name(self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant)),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    _ => Err(Error::UnknownSymbol { kind: $kind, symbol: s.to_string() }),
                }
            }
        }
    };
}

closed_label!(
    /// The six vocalization patterns a word can be classified as.
    WordType,
    "word type",
    [Bark, BowWow, Whimper, Growl, Howl, Yip]
);

closed_label!(
    LocationLabel,
    "location",
    [
        LivingRoom,
        FoodNearby,
        Grass,
        Cage,
        Road,
        Bathroom,
        Snowfield,
        Beach,
        Square,
        VehicleCabin,
        Others,
    ]
);

closed_label!(
    /// Dog activity categories. `Unknown` and `NoDog` are regular members.
    ActivityLabel,
    "activity",
    [
        MountOrHumpBeg,
        PlayWithPeople,
        Sit,
        LayDown,
        Walk,
        Sniff,
        Eat,
        Stand,
        TakeAShower,
        NoDog,
        Run,
        BeTouched,
        Unknown,
        FightWithDogs,
        ShowTeethOrBite,
    ]
);

/// Joint (location, activity) context treated as one categorical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextPair {
    pub location: LocationLabel,
    pub activity: ActivityLabel,
}

impl ContextPair {
    pub fn new(location: LocationLabel, activity: ActivityLabel) -> Self {
        Self { location, activity }
    }
}

impl fmt::Display for ContextPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.location, self.activity)
    }
}

/// Two consecutive words of differing type within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bigram {
    pub first: WordType,
    pub second: WordType,
}

impl Bigram {
    /// Returns `None` when both words share a type.
    pub fn new(first: WordType, second: WordType) -> Option<Self> {
        (first != second).then_some(Self { first, second })
    }
}

impl fmt::Display for Bigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.first, self.second)
    }
}

macro_rules! serialize_as_display {
    ($($name:ident),*) => {$(
        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
    )*};
}

serialize_as_display!(ContextPair, Bigram);

/// One IPA vowel symbol, e.g. `a` or `ə`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IpaSymbol(String);

impl IpaSymbol {
    pub fn new(symbol: impl Into<String>) -> Result<Self, Error> {
        let symbol = symbol.into();
        let trimmed = symbol.trim();
        if trimmed.is_empty() || trimmed.contains([',', '"']) {
            return Err(Error::UnknownSymbol {
                kind: "IPA symbol",
                symbol,
            });
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IpaSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The 20 vowel symbols of the reference dataset's inventory.
pub const DEFAULT_IPA_VOWELS: [&str; 20] = [
    "u", "æ", "ɜ", "ʉ", "ɯ", "ɐ", "a", "ɵ", "ɶ", "ə", "ʊ", "ɪ", "ɒ", "ɛ", "ʌ", "ɑ", "œ", "ɔ", "ɨ",
    "e",
];

/// Ordered set of IPA symbols admitted in one corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpaInventory {
    symbols: Vec<IpaSymbol>,
}

impl IpaInventory {
    pub fn new(symbols: Vec<IpaSymbol>) -> Result<Self, Error> {
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::DuplicateSymbol(s.to_string()));
            }
        }
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &[IpaSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn position(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.as_str() == symbol)
    }

    pub fn lookup(&self, symbol: &str) -> Option<&IpaSymbol> {
        self.symbols.iter().find(|s| s.as_str() == symbol)
    }
}

impl Default for IpaInventory {
    fn default() -> Self {
        Self {
            symbols: DEFAULT_IPA_VOWELS
                .iter()
                .map(|s| IpaSymbol(s.to_string()))
                .collect(),
        }
    }
}

/// Index of the maximum element, ties resolved towards the lowest index.
///
/// Returns `None` on an empty slice or when every element is NaN.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
