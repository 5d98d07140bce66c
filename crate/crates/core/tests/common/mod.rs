#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn laysumm() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_laysumm"));
    cmd.env_remove("LAYSUMM_SCORERS").env_remove("LAYSUMM_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    laysumm().args(args).output().expect("laysumm runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

const WORDS: &[&str] = &[
    "the",
    "cell",
    "protein",
    "grows",
    "quickly",
    "in",
    "warm",
    "water",
    "researchers",
    "measured",
    "a",
    "signal",
    "mitochondria",
    "evolutionary",
    "gene",
    "we",
    "found",
    "that",
    "bacteria",
    "spread",
    "between",
    "fish",
    "and",
    "environment",
    "is",
    "complicated",
];

/// Random prose of 1 to 6 sentences, each 1 to 12 words, ending in periods.
pub fn random_text<R: Rng>(rng: &mut R) -> String {
    let sentences = rng.gen_range(1..=6);
    let mut out = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let len = rng.gen_range(1..=12);
        let words: Vec<&str> = (0..len)
            .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
            .collect();
        let mut s = words.join(" ");
        s[..1].make_ascii_uppercase();
        s.push('.');
        out.push(s);
    }
    out.join(" ")
}

/// Token sequence over `alphabet` symbols with length in `0..=max_len`.
pub fn random_tokens<R: Rng>(rng: &mut R, max_len: usize, alphabet: u8) -> Vec<u8> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..alphabet)).collect()
}
