//! Few-shot exemplar ranking: training examples are ordered by the average
//! normalized readability and factuality of their reference lay summaries and
//! the top `k` become the exemplars of a few-shot prompt.
//!
//! Unlike selection, normalization here spans the whole corpus.

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document};
use crate::des::{mean, normalize_pool, MetricVector, DEFAULT_DEGENERATE};
use crate::error::{Error, Result};
use crate::pipeline::{exemplar_metrics, RunOptions};
use crate::scorer::Registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedExample {
    pub document_id: String,
    pub rank: usize,
    pub rank_score: f64,
}

/// How normalized metrics are averaged into a rank score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Unweighted mean over every metric.
    #[default]
    Flat,
    /// `(R + F) / 2` over the two group means.
    Grouped,
}

impl std::str::FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(RankMode::Flat),
            "grouped" => Ok(RankMode::Grouped),
            _ => Err(Error::InvalidParameter(format!(
                "unknown rank mode {s:?} (expected flat or grouped)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotConfig {
    pub k: usize,
    pub dataset: Dataset,
}

impl FewShotConfig {
    pub fn new(k: usize, dataset: Dataset) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(FewShotConfig { k, dataset })
    }

    pub fn preset(dataset: Dataset) -> Self {
        let k = match dataset {
            Dataset::Elife => 2,
            Dataset::Plos => 3,
        };
        FewShotConfig { k, dataset }
    }
}

/// Ranks examples given their raw metric vectors; `candidate_id` holds the
/// document id. Readability is negated before normalization.
pub fn rank_metric_vectors(vectors: &[MetricVector], mode: RankMode) -> Result<Vec<RankedExample>> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot rank an empty corpus".into(),
        ));
    }
    let normalized = normalize_pool(vectors, true, DEFAULT_DEGENERATE)?;
    let first = &vectors[0];
    if mode == RankMode::Grouped && (first.readability.is_empty() || first.factuality.is_empty()) {
        return Err(Error::InvalidPool(
            "grouped ranking needs both readability and factuality metrics".into(),
        ));
    }
    let mut scored: Vec<(String, f64)> = vectors
        .iter()
        .zip(normalized)
        .map(|(v, (readability, factuality))| {
            let score = match mode {
                RankMode::Flat => {
                    let all: Vec<f64> = readability
                        .values()
                        .chain(factuality.values())
                        .copied()
                        .collect();
                    all.iter().sum::<f64>() / all.len().max(1) as f64
                }
                RankMode::Grouped => (mean(&readability) + mean(&factuality)) / 2.0,
            };
            (v.candidate_id.clone(), score)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (document_id, rank_score))| RankedExample {
            document_id,
            rank: i + 1,
            rank_score,
        })
        .collect())
}

/// Scores every lay summary (readability natively, factuality through the
/// registry's factuality scorers) and ranks the corpus.
pub fn rank_examples(
    corpus: &[Document],
    registry: &Registry,
    mode: RankMode,
    options: &RunOptions,
) -> Result<Vec<RankedExample>> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot rank an empty corpus".into(),
        ));
    }
    let vectors = exemplar_metrics(corpus, registry, options)?;
    rank_metric_vectors(&vectors, mode)
}

/// Ids of ranks `1..=k`, best first.
pub fn top_k(ranked: &[RankedExample], config: &FewShotConfig) -> Result<Vec<String>> {
    if config.k == 0 || config.k > ranked.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {} but {} ranked examples",
            config.k,
            ranked.len()
        )));
    }
    let mut by_rank: Vec<&RankedExample> = ranked.iter().collect();
    by_rank.sort_by_key(|r| r.rank);
    Ok(by_rank[..config.k]
        .iter()
        .map(|r| r.document_id.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec5(id: &str, v: [f64; 5]) -> MetricVector {
        MetricVector::new(id)
            .with_readability("fkgl", v[0])
            .with_readability("dcrs", v[1])
            .with_readability("cli", v[2])
            .with_factuality("alignscore", v[3])
            .with_factuality("summac", v[4])
    }

    fn worked() -> Vec<MetricVector> {
        vec![
            vec5("C3", [14.0, 10.0, 13.0, 0.7, 0.6]),
            vec5("C2", [12.0, 9.0, 14.0, 0.8, 0.7]),
            vec5("C1", [10.0, 8.0, 12.0, 0.6, 0.5]),
        ]
    }

    #[test]
    fn worked_example_tie_goes_to_smaller_id() {
        let ranked = rank_metric_vectors(&worked(), RankMode::Flat).unwrap();
        let ids: Vec<_> = ranked.iter().map(|r| r.document_id.as_str()).collect();
        assert_eq!(ids, ["C1", "C2", "C3"]);
        assert_eq!(ranked[0].rank_score, ranked[1].rank_score);
        assert!((ranked[0].rank_score - 0.6).abs() < 1e-12);
        assert!((ranked[2].rank_score - 0.3).abs() < 1e-12);
        assert_eq!(ranked.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn grouped_mode_differs() {
        let ranked = rank_metric_vectors(&worked(), RankMode::Grouped).unwrap();
        // C1: (1 + 0) / 2, C2: (1/3 + 1) / 2, C3: (1/6 + 1/2) / 2
        assert_eq!(ranked[0].document_id, "C2");
        assert!((ranked[0].rank_score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_example_ranks_first() {
        let v = vec![
            vec5("b", [12.0, 9.0, 12.0, 0.5, 0.5]),
            vec5("a", [8.0, 6.0, 9.0, 0.9, 0.9]),
            vec5("c", [11.0, 9.5, 13.0, 0.6, 0.4]),
        ];
        assert_eq!(
            rank_metric_vectors(&v, RankMode::Flat).unwrap()[0].document_id,
            "a"
        );
    }

    #[test]
    fn identical_examples_are_degenerate() {
        let v = vec![vec5("y", [1.0; 5]), vec5("x", [1.0; 5])];
        let ranked = rank_metric_vectors(&v, RankMode::Flat).unwrap();
        assert_eq!(ranked[0].document_id, "x");
        assert!(ranked.iter().all(|r| r.rank_score == 0.5));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(rank_metric_vectors(&[], RankMode::Flat).is_err());
        assert!(rank_examples(
            &[],
            &Registry::default(),
            RankMode::Flat,
            &RunOptions::default()
        )
        .is_err());
    }

    #[test]
    fn top_k_presets_and_bounds() {
        assert_eq!(FewShotConfig::preset(Dataset::Elife).k, 2);
        assert_eq!(FewShotConfig::preset(Dataset::Plos).k, 3);
        let ranked = rank_metric_vectors(&worked(), RankMode::Flat).unwrap();
        let elife = FewShotConfig::preset(Dataset::Elife);
        assert_eq!(top_k(&ranked, &elife).unwrap(), ["C1", "C2"]);
        let plos = FewShotConfig::preset(Dataset::Plos);
        assert_eq!(top_k(&ranked, &plos).unwrap(), ["C1", "C2", "C3"]);
        let too_many = FewShotConfig::new(4, Dataset::Plos).unwrap();
        assert!(matches!(
            top_k(&ranked, &too_many),
            Err(Error::InvalidParameter(_))
        ));
        assert!(FewShotConfig::new(0, Dataset::Plos).is_err());
    }

    #[test]
    fn ranks_real_lay_summaries_with_mock_scorers() {
        let docs: Vec<Document> = [
            ("a", "Cells divide."),
            (
                "b",
                "The extraordinarily heterogeneous mitochondrial populations proliferate.",
            ),
            ("c", "Genes tell cells what to do. Cells listen."),
        ]
        .iter()
        .map(|(id, lay)| {
            let mut d = Document::new(*id, "Cells divide and genes control cells.", Dataset::Plos);
            d.lay_summary = Some(lay.to_string());
            d
        })
        .collect();
        let registry =
            Registry::parse("[[scorer]]\nname='o'\ntransport='mock'\naddress='token-overlap'\n")
                .unwrap();
        let ranked =
            rank_examples(&docs, &registry, RankMode::Flat, &RunOptions::default()).unwrap();
        assert_eq!(ranked.len(), 3);
        assert_eq!(ranked[2].document_id, "b");
    }
}
