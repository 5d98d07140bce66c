//! Flesch-Kincaid Grade Level, Dale-Chall Readability Score and Coleman-Liau
//! Index, all computed from the counts in [`TokenizedText`].
//!
//! | metric | formula |
//! |--------|---------|
//! | FKGL   | `0.39 * words/sentences + 11.8 * syllables/words - 15.59` |
//! | DCRS   | `0.1579 * PDW + 0.0496 * words/sentences` (+ `3.6365` when PDW > 5) |
//! | CLI    | `0.0588 * L - 0.296 * S - 15.8` |
//!
//! PDW is the percentage of difficult words, L letters per 100 words and S
//! sentences per 100 words. Lower is easier for all three.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{data_lines, tokenize, TokenizedText};

static DALE_CHALL: LazyLock<FamiliarWordList> = LazyLock::new(|| {
    FamiliarWordList::parse(include_str!("../data/dale_chall.txt"))
        .expect("bundled Dale-Chall list is valid")
});

const DCRS_ADJUSTMENT: f64 = 3.6365;
const DCRS_PDW_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityScores {
    pub fkgl: f64,
    pub dcrs: f64,
    pub cli: f64,
}

/// Words known to most fourth graders.
#[derive(Debug, Clone)]
pub struct FamiliarWordList {
    entries: HashSet<String>,
}

impl FamiliarWordList {
    /// The bundled Dale-Chall list (2,941 entries).
    pub fn dale_chall() -> &'static FamiliarWordList {
        &DALE_CHALL
    }

    /// Parses one lowercase word per line; blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashSet::new();
        for (line, word) in data_lines(text) {
            if word.chars().any(char::is_uppercase) {
                return Err(Error::InvalidWordList(format!(
                    "line {line}: entry {word:?} is not lowercase"
                )));
            }
            if !entries.insert(word.to_string()) {
                return Err(Error::InvalidWordList(format!(
                    "line {line}: duplicate entry {word:?}"
                )));
            }
        }
        if entries.is_empty() {
            return Err(Error::InvalidWordList("list is empty".into()));
        }
        Ok(FamiliarWordList { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    /// Whether a lowercase token is familiar, either as is or as a regular
    /// inflection (`-s`, `-es`, `-ed`, `-ing`, `-d`) of a listed word.
    pub fn is_familiar(&self, lower: &str) -> bool {
        self.contains(lower) || inflection_bases(lower).any(|base| self.contains(&base))
    }
}

/// Candidate base forms after stripping one inflectional suffix, with final-e
/// restoration (`making` -> `make`) and undoubling (`running` -> `run`).
fn inflection_bases(word: &str) -> impl Iterator<Item = String> + '_ {
    ["ing", "ed", "es", "s", "d"]
        .into_iter()
        .filter_map(move |suffix| word.strip_suffix(suffix))
        .filter(|stem| stem.chars().count() >= 2)
        .flat_map(|stem| {
            let mut forms = vec![stem.to_string(), format!("{stem}e")];
            let chars: Vec<char> = stem.chars().collect();
            let n = chars.len();
            if n >= 3 && chars[n - 1] == chars[n - 2] && !"aeiou".contains(chars[n - 1]) {
                forms.push(chars[..n - 1].iter().collect());
            }
            forms
        })
}

fn words_per_sentence(text: &TokenizedText) -> f64 {
    text.word_count() as f64 / text.sentence_count() as f64
}

fn non_empty(text: &TokenizedText) -> Result<()> {
    if text.word_count() == 0 {
        Err(Error::EmptyText)
    } else {
        Ok(())
    }
}

pub fn fkgl(text: &TokenizedText) -> Result<f64> {
    non_empty(text)?;
    let syllables_per_word = text.syllable_count() as f64 / text.word_count() as f64;
    Ok(0.39 * words_per_sentence(text) + 11.8 * syllables_per_word - 15.59)
}

/// Percentage of words absent from the familiar list. Tokens without letters
/// (numbers) count as familiar.
pub fn percent_difficult_words(text: &TokenizedText, list: &FamiliarWordList) -> f64 {
    let difficult = text
        .tokens()
        .iter()
        .filter(|t| t.has_letter() && !list.is_familiar(&t.lower))
        .count();
    100.0 * difficult as f64 / text.word_count() as f64
}

pub fn dcrs(text: &TokenizedText, list: &FamiliarWordList) -> Result<f64> {
    non_empty(text)?;
    if list.is_empty() {
        return Err(Error::InvalidWordList("list is empty".into()));
    }
    let pdw = percent_difficult_words(text, list);
    let mut score = 0.1579 * pdw + 0.0496 * words_per_sentence(text);
    if pdw > DCRS_PDW_THRESHOLD {
        score += DCRS_ADJUSTMENT;
    }
    Ok(score)
}

pub fn cli(text: &TokenizedText) -> Result<f64> {
    non_empty(text)?;
    let words = text.word_count() as f64;
    let letters_per_100 = 100.0 * text.letter_count() as f64 / words;
    let sentences_per_100 = 100.0 * text.sentence_count() as f64 / words;
    Ok(0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8)
}

/// Tokenizes once and computes all three indices on the same counts.
pub fn readability_all(text: &str, list: &FamiliarWordList) -> Result<ReadabilityScores> {
    let tokens = tokenize(text)?;
    Ok(ReadabilityScores {
        fkgl: fkgl(&tokens)?,
        dcrs: dcrs(&tokens, list)?,
        cli: cli(&tokens)?,
    })
}
