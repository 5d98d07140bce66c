//! Word, sentence, letter and syllable counting shared by the readability
//! metrics.
//!
//! Words are maximal runs of letters and digits, optionally joined by internal
//! apostrophes or hyphens (`don't`, `well-known`, `COVID-19`). Everything else
//! is punctuation and never part of a token.
//!
//! A sentence ends at a run of `.`, `!` or `?` that is followed by whitespace
//! and an uppercase letter, or by the end of the text. Optional closing quotes
//! or brackets may sit between the terminal mark and the whitespace, and
//! optional opening quotes or brackets between the whitespace and the capital.
//! A single period ending a known abbreviation (`Fig.`, `et al.`, `e.g.`) never
//! closes a sentence. Input is NFC-normalized first.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::sync::LazyLock;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

static SYLLABLE_EXCEPTIONS: LazyLock<HashMap<String, usize>> = LazyLock::new(|| {
    parse_syllable_table(include_str!("../data/syllable_exceptions.txt"))
        .expect("bundled syllable table is well-formed")
});

static ABBREVIATIONS: LazyLock<HashSet<String>> =
    LazyLock::new(|| parse_word_lines(include_str!("../data/abbreviations.txt")));

/// One word token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Lowercase form with typographic apostrophes folded to `'`.
    pub lower: String,
}

impl Token {
    fn new(text: String) -> Self {
        let lower = fold_word(&text);
        Token { text, lower }
    }

    pub fn letter_count(&self) -> usize {
        self.text.chars().filter(|c| c.is_alphabetic()).count()
    }

    pub fn has_letter(&self) -> bool {
        self.text.chars().any(char::is_alphabetic)
    }

    pub fn syllables(&self) -> usize {
        token_syllables(&self.lower)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    tokens: Vec<Token>,
    sentences: Vec<Range<usize>>,
    letter_count: usize,
}

impl TokenizedText {
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Token-index ranges, disjoint and contiguous, covering every token.
    pub fn sentences(&self) -> &[Range<usize>] {
        &self.sentences
    }

    pub fn word_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn letter_count(&self) -> usize {
        self.letter_count
    }

    pub fn syllable_count(&self) -> usize {
        self.tokens.iter().map(Token::syllables).sum()
    }

    pub fn sentence_tokens(&self, index: usize) -> &[Token] {
        &self.tokens[self.sentences[index].clone()]
    }
}

pub fn tokenize(text: &str) -> Result<TokenizedText> {
    let chars: Vec<char> = text.nfc().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut cuts = Vec::new();

    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c.is_alphanumeric() {
            let start = i;
            i += 1;
            loop {
                if i < n && chars[i].is_alphanumeric() {
                    i += 1;
                } else if i + 1 < n && is_joiner(chars[i]) && chars[i + 1].is_alphanumeric() {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(Token::new(chars[start..i].iter().collect()));
        } else if is_terminal(c) {
            let start = i;
            while i < n && is_terminal(chars[i]) {
                i += 1;
            }
            if closes_sentence(&chars, start, i) && cuts.last().copied().unwrap_or(0) < tokens.len()
            {
                cuts.push(tokens.len());
            }
        } else {
            i += 1;
        }
    }

    if tokens.is_empty() {
        return Err(Error::EmptyText);
    }

    let mut sentences = Vec::with_capacity(cuts.len() + 1);
    let mut begin = 0;
    for cut in cuts.into_iter().chain(std::iter::once(tokens.len())) {
        if cut > begin {
            sentences.push(begin..cut);
            begin = cut;
        }
    }
    let letter_count = tokens.iter().map(Token::letter_count).sum();

    Ok(TokenizedText {
        tokens,
        sentences,
        letter_count,
    })
}

/// Syllables in a single word. The word must contain at least one letter.
pub fn count_syllables(word: &str) -> Result<usize> {
    if !word.chars().any(char::is_alphabetic) {
        return Err(Error::InvalidWord(word.to_string()));
    }
    let folded: String = fold_word(&word.nfc().collect::<String>());
    Ok(token_syllables(&folded))
}

/// Syllables of an already lowercased token. Hyphenated compounds are summed
/// part by part; every maximal digit run counts as one syllable.
pub(crate) fn token_syllables(lower: &str) -> usize {
    if let Some(&n) = SYLLABLE_EXCEPTIONS.get(lower) {
        return n;
    }
    let total: usize = lower
        .split(is_hyphen)
        .filter(|part| !part.is_empty())
        .map(part_syllables)
        .sum();
    total.max(1)
}

fn part_syllables(part: &str) -> usize {
    if let Some(&n) = SYLLABLE_EXCEPTIONS.get(part) {
        return n;
    }
    let mut digit_groups = 0;
    let mut in_digits = false;
    for c in part.chars() {
        let digit = c.is_numeric();
        if digit && !in_digits {
            digit_groups += 1;
        }
        in_digits = digit;
    }
    let letters: String = part.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        digit_groups
    } else {
        vowel_group_syllables(&letters) + digit_groups
    }
}

/// Vowel-group heuristic: count maximal runs of a, e, i, o, u, y; drop one
/// for a silent final `e` after a consonant, except the consonant + `le`
/// ending; never below one.
fn vowel_group_syllables(word: &str) -> usize {
    let chars: Vec<char> = word.chars().collect();
    let mut groups: usize = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    if n > 1 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]) {
        let consonant_le = chars[n - 2] == 'l' && n > 2 && !is_vowel(chars[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

fn is_joiner(c: char) -> bool {
    is_apostrophe(c) || is_hyphen(c)
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}')
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{bb}'
    )
}

fn is_opening(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | '(' | '[' | '{' | '\u{201c}' | '\u{2018}' | '\u{ab}'
    )
}

fn closes_sentence(chars: &[char], start: usize, end: usize) -> bool {
    let n = chars.len();
    let mut j = end;
    while j < n && is_closing(chars[j]) {
        j += 1;
    }
    let mut k = j;
    while k < n && chars[k].is_whitespace() {
        k += 1;
    }
    if k == n {
        return true;
    }
    if k == j {
        return false;
    }
    while k < n && is_opening(chars[k]) {
        k += 1;
    }
    if k == n || !chars[k].is_uppercase() {
        return false;
    }
    !(end - start == 1 && chars[start] == '.' && ends_abbreviation(chars, start))
}

/// Whether the whitespace-delimited chunk ending at the period `dot` is a
/// known abbreviation.
fn ends_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut s = dot;
    while s > 0 && !chars[s - 1].is_whitespace() {
        s -= 1;
    }
    while s < dot && is_opening(chars[s]) {
        s += 1;
    }
    let chunk: String = chars[s..=dot].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&chunk)
}

fn fold_word(word: &str) -> String {
    word.to_lowercase().replace('\u{2019}', "'")
}

/// Non-empty, non-comment lines of a one-entry-per-line data file.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_word_lines(text: &str) -> HashSet<String> {
    data_lines(text).map(|(_, l)| l.to_lowercase()).collect()
}

fn parse_syllable_table(text: &str) -> Result<HashMap<String, usize>> {
    let mut table = HashMap::new();
    for (line, entry) in data_lines(text) {
        let malformed = |reason: &str| Error::MalformedRecord {
            line,
            reason: reason.to_string(),
        };
        let (word, count) = entry
            .split_once(char::is_whitespace)
            .ok_or_else(|| malformed("expected `<word> <syllables>`"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| malformed("syllable count is not an integer"))?;
        if count == 0 {
            return Err(malformed("syllable count must be positive"));
        }
        table.insert(word.to_lowercase(), count);
    }
    Ok(table)
}
