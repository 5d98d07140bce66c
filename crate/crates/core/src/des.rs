//! Dynamic Expert Selection: picks one summary out of a pool of candidates
//! for the same article.
//!
//! Readability metrics (lower is easier) are negated, every metric is min-max
//! normalized across the pool, and the per-group means `R` and `F` are
//! combined as `S = w_r * R + w_f * F`. The candidate with the largest `S` is
//! chosen; exact ties go to the earliest candidate in input order.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type MetricMap = BTreeMap<String, f64>;

/// Raw metric values for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub candidate_id: String,
    pub readability: MetricMap,
    pub factuality: MetricMap,
}

impl MetricVector {
    pub fn new(candidate_id: impl Into<String>) -> Self {
        MetricVector {
            candidate_id: candidate_id.into(),
            readability: MetricMap::new(),
            factuality: MetricMap::new(),
        }
    }

    pub fn with_readability(mut self, name: &str, value: f64) -> Self {
        self.readability.insert(name.to_string(), value);
        self
    }

    pub fn with_factuality(mut self, name: &str, value: f64) -> Self {
        self.factuality.insert(name.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Earliest candidate in input order.
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub w_readability: f64,
    pub w_factuality: f64,
    #[serde(default = "default_negate")]
    pub negate_readability: bool,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default = "default_degenerate")]
    pub degenerate_norm_value: f64,
}

fn default_negate() -> bool {
    true
}

fn default_degenerate() -> f64 {
    DEFAULT_DEGENERATE
}

pub const DEFAULT_DEGENERATE: f64 = 0.5;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

impl SelectionConfig {
    pub fn with_weights(w_readability: f64, w_factuality: f64) -> Result<Self> {
        let config = SelectionConfig {
            w_readability,
            w_factuality,
            negate_readability: true,
            tie_break: TieBreak::LowestIndex,
            degenerate_norm_value: DEFAULT_DEGENERATE,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn elife() -> Self {
        Self::with_weights(0.675, 0.325).expect("preset weights are valid")
    }

    pub fn plos() -> Self {
        Self::with_weights(0.25, 0.75).expect("preset weights are valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "elife" => Ok(Self::elife()),
            "plos" => Ok(Self::plos()),
            _ => Err(Error::InvalidParameter(format!(
                "unknown selection preset {name:?} (expected elife or plos)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(self.w_readability) || !unit(self.w_factuality) {
            return Err(Error::InvalidParameter(format!(
                "weights must lie in [0, 1], got ({}, {})",
                self.w_readability, self.w_factuality
            )));
        }
        if (self.w_readability + self.w_factuality - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1, got {} + {}",
                self.w_readability, self.w_factuality
            )));
        }
        if !unit(self.degenerate_norm_value) {
            return Err(Error::InvalidParameter(format!(
                "degenerate normalization value must lie in [0, 1], got {}",
                self.degenerate_norm_value
            )));
        }
        Ok(())
    }
}

pub fn selection_presets() -> BTreeMap<&'static str, SelectionConfig> {
    BTreeMap::from([
        ("elife", SelectionConfig::elife()),
        ("plos", SelectionConfig::plos()),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate_id: String,
    pub readability: MetricMap,
    pub factuality: MetricMap,
    #[serde(rename = "R")]
    pub readability_mean: f64,
    #[serde(rename = "F")]
    pub factuality_mean: f64,
    #[serde(rename = "S")]
    pub overall_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_candidate_id: String,
    pub per_candidate: Vec<CandidateScore>,
}

impl SelectionResult {
    pub fn chosen(&self) -> &CandidateScore {
        self.per_candidate
            .iter()
            .find(|c| c.candidate_id == self.chosen_candidate_id)
            .expect("chosen candidate is in the pool")
    }
}

/// `(v - min) / (max - min)` for each value; `degenerate_value` everywhere
/// when all values are equal.
pub fn normalize_minmax(values: &[f64], degenerate_value: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot normalize an empty list".into(),
        ));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite value {v}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![degenerate_value; values.len()]);
    }
    let span = max - min;
    Ok(values.iter().map(|v| (v - min) / span).collect())
}

/// Normalized readability and factuality maps, one pair per input vector.
pub type NormalizedGroups = Vec<(MetricMap, MetricMap)>;

/// Checks that the vectors form a valid pool and normalizes every metric
/// across it, negating readability first when asked.
pub fn normalize_pool(
    vectors: &[MetricVector],
    negate_readability: bool,
    degenerate_value: f64,
) -> Result<NormalizedGroups> {
    check_pool(vectors)?;
    let mut out: NormalizedGroups = vec![Default::default(); vectors.len()];
    let first = &vectors[0];
    for name in first.readability.keys() {
        let raw: Vec<f64> = vectors
            .iter()
            .map(|v| {
                let x = v.readability[name];
                if negate_readability {
                    -x
                } else {
                    x
                }
            })
            .collect();
        let normalized = normalize_metric(&raw, name, vectors, degenerate_value)?;
        for (slot, value) in out.iter_mut().zip(normalized) {
            slot.0.insert(name.clone(), value);
        }
    }
    for name in first.factuality.keys() {
        let raw: Vec<f64> = vectors.iter().map(|v| v.factuality[name]).collect();
        let normalized = normalize_metric(&raw, name, vectors, degenerate_value)?;
        for (slot, value) in out.iter_mut().zip(normalized) {
            slot.1.insert(name.clone(), value);
        }
    }
    Ok(out)
}

fn normalize_metric(
    raw: &[f64],
    name: &str,
    vectors: &[MetricVector],
    degenerate_value: f64,
) -> Result<Vec<f64>> {
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "candidate {:?}: metric {name:?} is not finite",
            vectors[i].candidate_id
        )));
    }
    normalize_minmax(raw, degenerate_value)
}

fn check_pool(vectors: &[MetricVector]) -> Result<()> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidParameter("candidate pool is empty".into()))?;
    let mut ids = HashSet::new();
    for v in vectors {
        if !ids.insert(v.candidate_id.as_str()) {
            return Err(Error::InvalidPool(format!(
                "duplicate candidate id {:?}",
                v.candidate_id
            )));
        }
        let same = |a: &MetricMap, b: &MetricMap| a.keys().eq(b.keys());
        if !same(&v.readability, &first.readability) || !same(&v.factuality, &first.factuality) {
            return Err(Error::InvalidPool(format!(
                "candidate {:?} has metrics {:?} / {:?}, expected {:?} / {:?}",
                v.candidate_id,
                v.readability.keys().collect::<Vec<_>>(),
                v.factuality.keys().collect::<Vec<_>>(),
                first.readability.keys().collect::<Vec<_>>(),
                first.factuality.keys().collect::<Vec<_>>(),
            )));
        }
    }
    Ok(())
}

/// Mean of the values; 0 for an empty group.
pub(crate) fn mean(values: &MetricMap) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.values().sum::<f64>() / values.len() as f64
    }
}

/// Index of the first maximum.
pub(crate) fn first_argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select(candidates: &[MetricVector], config: &SelectionConfig) -> Result<SelectionResult> {
    config.validate()?;
    let normalized = normalize_pool(
        candidates,
        config.negate_readability,
        config.degenerate_norm_value,
    )?;
    let first = &candidates[0];
    for (group, metrics, weight) in [
        ("readability", &first.readability, config.w_readability),
        ("factuality", &first.factuality, config.w_factuality),
    ] {
        if metrics.is_empty() && weight > 0.0 {
            return Err(Error::InvalidPool(format!(
                "no {group} metrics but {group} weight is {weight}"
            )));
        }
    }

    let per_candidate: Vec<CandidateScore> = candidates
        .iter()
        .zip(normalized)
        .map(|(v, (readability, factuality))| {
            let r = mean(&readability);
            let f = mean(&factuality);
            CandidateScore {
                candidate_id: v.candidate_id.clone(),
                readability,
                factuality,
                readability_mean: r,
                factuality_mean: f,
                overall_score: config.w_readability * r + config.w_factuality * f,
            }
        })
        .collect();
    let chosen = match config.tie_break {
        TieBreak::LowestIndex => first_argmax(per_candidate.iter().map(|c| c.overall_score)),
    }
    .expect("pool is non-empty");
    Ok(SelectionResult {
        chosen_candidate_id: per_candidate[chosen].candidate_id.clone(),
        per_candidate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_pool() -> Vec<MetricVector> {
        let rows = [
            ("C1", [10.0, 8.0, 12.0, 0.6, 0.5]),
            ("C2", [12.0, 9.0, 14.0, 0.8, 0.7]),
            ("C3", [14.0, 10.0, 13.0, 0.7, 0.6]),
        ];
        rows.iter()
            .map(|(id, v)| {
                MetricVector::new(*id)
                    .with_readability("fkgl", v[0])
                    .with_readability("dcrs", v[1])
                    .with_readability("cli", v[2])
                    .with_factuality("alignscore", v[3])
                    .with_factuality("summac", v[4])
            })
            .collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(
            normalize_minmax(&[2.0, 4.0, 6.0], 0.5).unwrap(),
            [0.0, 0.5, 1.0]
        );
        assert_eq!(normalize_minmax(&[5.0; 3], 0.5).unwrap(), [0.5; 3]);
        assert_eq!(
            normalize_minmax(&[-14.0, -12.0, -10.0], 0.5).unwrap(),
            [0.0, 0.5, 1.0]
        );
        assert!(normalize_minmax(&[], 0.5).is_err());
        assert!(normalize_minmax(&[1.0, f64::NAN], 0.5).is_err());
    }

    #[test]
    fn worked_example_elife_and_plos() {
        let pool = worked_pool();
        let elife = select(&pool, &SelectionConfig::elife()).unwrap();
        let s: Vec<f64> = elife
            .per_candidate
            .iter()
            .map(|c| c.overall_score)
            .collect();
        assert!(
            close(s[0], 0.675) && close(s[1], 0.55) && close(s[2], 0.275),
            "{s:?}"
        );
        assert_eq!(elife.chosen_candidate_id, "C1");

        let plos = select(&pool, &SelectionConfig::plos()).unwrap();
        let s: Vec<f64> = plos.per_candidate.iter().map(|c| c.overall_score).collect();
        assert!(close(s[0], 0.25) && close(s[1], 5.0 / 6.0) && close(s[2], 5.0 / 12.0));
        assert_eq!(plos.chosen_candidate_id, "C2");
        assert!(close(plos.chosen().factuality_mean, 1.0));
    }

    #[test]
    fn single_candidate_gets_degenerate_score() {
        let pool = &worked_pool()[..1];
        let r = select(pool, &SelectionConfig::plos()).unwrap();
        assert_eq!(r.chosen_candidate_id, "C1");
        assert_eq!(r.per_candidate[0].overall_score, 0.5);
    }

    #[test]
    fn ties_go_to_first_candidate() {
        let pool: Vec<_> = ["b", "a"]
            .iter()
            .map(|id| {
                MetricVector::new(*id)
                    .with_readability("fkgl", 3.0)
                    .with_factuality("x", 0.2)
            })
            .collect();
        assert_eq!(
            select(&pool, &SelectionConfig::elife())
                .unwrap()
                .chosen_candidate_id,
            "b"
        );
    }

    #[test]
    fn invalid_pools() {
        let mut pool = worked_pool();
        pool[1].factuality.remove("summac");
        assert!(matches!(
            select(&pool, &SelectionConfig::elife()),
            Err(Error::InvalidPool(_))
        ));

        let mut pool = worked_pool();
        pool[2].candidate_id = "C1".into();
        assert!(matches!(
            select(&pool, &SelectionConfig::elife()),
            Err(Error::InvalidPool(_))
        ));

        assert!(matches!(
            select(&[], &SelectionConfig::elife()),
            Err(Error::InvalidParameter(_))
        ));

        let mut pool = worked_pool();
        pool[0].readability.insert("fkgl".into(), f64::INFINITY);
        assert!(matches!(
            select(&pool, &SelectionConfig::elife()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn empty_group_needs_zero_weight() {
        let pool: Vec<_> = [("a", 8.0), ("b", 12.0)]
            .iter()
            .map(|(id, v)| MetricVector::new(*id).with_readability("fkgl", *v))
            .collect();
        assert!(matches!(
            select(&pool, &SelectionConfig::elife()),
            Err(Error::InvalidPool(_))
        ));
        let r = select(&pool, &SelectionConfig::with_weights(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.chosen_candidate_id, "a");
    }

    #[test]
    fn config_validation() {
        assert!(SelectionConfig::with_weights(0.5, 0.6).is_err());
        assert!(SelectionConfig::with_weights(-0.5, 1.5).is_err());
        assert!(SelectionConfig::with_weights(0.3, 0.7).is_ok());
        let mut c = SelectionConfig::elife();
        c.degenerate_norm_value = 2.0;
        assert!(c.validate().is_err());
        assert!(SelectionConfig::preset("PLOS").is_ok());
        assert!(SelectionConfig::preset("arxiv").is_err());
    }

    #[test]
    fn presets() {
        let p = selection_presets();
        assert_eq!(p.keys().copied().collect::<Vec<_>>(), ["elife", "plos"]);
        assert_eq!(p["elife"].w_readability, 0.675);
        assert_eq!(p["elife"].w_factuality, 0.325);
        assert_eq!(p["plos"].w_readability, 0.25);
        assert_eq!(p["plos"].w_factuality, 0.75);
        assert!(p.values().all(|c| c.negate_readability));
    }

    #[test]
    fn without_negation_higher_readability_wins() {
        let mut c = SelectionConfig::with_weights(1.0, 0.0).unwrap();
        c.negate_readability = false;
        assert_eq!(
            select(&worked_pool(), &c).unwrap().chosen_candidate_id,
            "C3"
        );
    }

    #[test]
    fn argmax_helper() {
        assert_eq!(first_argmax([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(first_argmax(std::iter::empty()), None);
    }
}
