//! ROUGE-1, ROUGE-2 and sentence-level ROUGE-L.

use std::collections::HashMap;
use std::hash::Hash;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_overlap(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        if candidate_total == 0 || reference_total == 0 {
            return Prf::default();
        }
        let precision = overlap as f64 / candidate_total as f64;
        let recall = overlap as f64 / reference_total as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub r1: Prf,
    pub r2: Prf,
    pub rl: Prf,
}

impl RougeScores {
    /// Flattened `rouge1_f1`, `rouge1_precision`, ... pairs.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        [
            ("rouge1", self.r1),
            ("rouge2", self.r2),
            ("rougeL", self.rl),
        ]
        .into_iter()
        .flat_map(|(name, prf)| {
            [
                (format!("{name}_f1"), prf.f1),
                (format!("{name}_precision"), prf.precision),
                (format!("{name}_recall"), prf.recall),
            ]
        })
        .collect()
    }
}

/// Lowercases, splits on every non-alphanumeric character and drops empty
/// pieces. With `stemming`, each token is reduced by the English Snowball
/// (Porter2) stemmer.
pub fn relevance_tokens(text: &str, stemming: bool) -> Vec<String> {
    let lower = text.to_lowercase();
    let tokens = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty());
    if stemming {
        let stemmer = Stemmer::create(Algorithm::English);
        tokens.map(|t| stemmer.stem(t).into_owned()).collect()
    } else {
        tokens.map(str::to_string).collect()
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap: each distinct n-gram contributes
/// `min(count in candidate, count in reference)`.
pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> Result<Prf> {
    if n == 0 {
        return Err(Error::InvalidParameter("ROUGE-N requires n >= 1".into()));
    }
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    let total = |len: usize| (len + 1).saturating_sub(n);
    Ok(Prf::from_overlap(
        overlap,
        total(candidate.len()),
        total(reference.len()),
    ))
}

/// Length of the longest common subsequence, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> Prf {
    Prf::from_overlap(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

pub fn rouge_all(candidate: &str, reference: &str, stemming: bool) -> RougeScores {
    let c = relevance_tokens(candidate, stemming);
    let r = relevance_tokens(reference, stemming);
    RougeScores {
        r1: rouge_n(&c, &r, 1).expect("n = 1 is valid"),
        r2: rouge_n(&c, &r, 2).expect("n = 2 is valid"),
        rl: rouge_l(&c, &r),
    }
}
