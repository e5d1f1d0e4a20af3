#![allow(dead_code)]

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vocalex_core::audio::{write_wav, AudioClip};
use vocalex_core::{
    write_corpus, ActivityLabel, IpaSymbol, LocationLabel, Quadruplet, QuadrupletCorpus, Subword,
    TimeSpan, WordType,
};

pub fn vocalex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vocalex"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("UTF-8 path")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn write_clip(path: &Path, samples: Vec<f64>, rate: u32) {
    let clip = AudioClip::new(samples, rate).expect("valid clip");
    write_wav(&clip, File::create(path).expect("create wav")).expect("write wav");
}

/// Writes the fixture bundle and its `pipeline.toml` into `dir`.
pub fn fixture(dir: &Path) -> PathBuf {
    let out = vocalex(&["fixture", "--out", p(dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    dir.join("pipeline.toml")
}

/// Ten quadruplets in three sentences with hand-picked labels.
pub fn hand_corpus() -> QuadrupletCorpus {
    use ActivityLabel::*;
    use LocationLabel::*;
    use WordType::*;
    let rows = [
        ("a", Bark, Grass, Walk, &["a", "ə"][..]),
        ("a", Howl, Grass, Walk, &["u"]),
        ("a", Bark, Road, Sniff, &["a"]),
        ("a", Yip, Road, Sniff, &["ɪ"]),
        ("b", Growl, Cage, Sit, &["ə", "ə"]),
        ("b", Bark, Cage, Sit, &["a"]),
        ("b", Whimper, LivingRoom, Unknown, &["ɪ", "u"]),
        ("c", Howl, Snowfield, Stand, &["u"]),
        ("c", Howl, Snowfield, Stand, &["u", "a"]),
        ("c", BowWow, Beach, Run, &["a", "a"]),
    ];
    let mut index = std::collections::BTreeMap::new();
    let quads = rows
        .iter()
        .enumerate()
        .map(|(k, &(s, word, location, activity, ipa))| {
            let i: &mut u32 = index.entry(s).or_default();
            let begin = k as f64;
            let width = 0.1 * (k % 3 + 1) as f64;
            let subwords = ipa
                .iter()
                .enumerate()
                .map(|(j, sym)| Subword {
                    span: TimeSpan::new(begin + j as f64 * width, begin + (j + 1) as f64 * width)
                        .unwrap(),
                    symbol: IpaSymbol::new(*sym).unwrap(),
                    distance: 0.5,
                })
                .collect::<Vec<_>>();
            let q = Quadruplet {
                word,
                location,
                activity,
                span: TimeSpan::new(begin, begin + width * subwords.len() as f64).unwrap(),
                subwords,
                sentence_id: s.to_string(),
                index_in_sentence: *i,
                video_id: "hand".into(),
                dog_id: Some(format!("dog-{s}")),
            };
            *i += 1;
            q
        })
        .collect();
    QuadrupletCorpus::new(quads).unwrap()
}

pub fn write_hand_corpus(path: &Path) {
    let mut bytes = Vec::new();
    write_corpus(&hand_corpus(), &mut bytes).unwrap();
    fs::write(path, bytes).unwrap();
}

/// Byte contents of every file in `dir`, sorted by name.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}
