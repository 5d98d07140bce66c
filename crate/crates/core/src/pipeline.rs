//! Batch runs over a corpus: metric battery for candidate summaries, per-document
//! selection, and the few-shot exemplar ranking.
//!
//! Output order never depends on the number of worker threads: records are
//! sorted by document id, then candidate id, before they are returned.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateSummary, Document, MetricsRecord, ResultRecord, SelectionRow};
use crate::des::{self, MetricMap, MetricVector, SelectionConfig};
use crate::error::{Error, Result};
use crate::readability::{readability_all, FamiliarWordList};
use crate::relevance::rouge_all;
use crate::scorer::{MetricGroup, RegisteredScorer, Registry, ScoreOutcome, ScoreRequest};

/// Which document text scorers receive as `source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceField {
    #[default]
    Abstract,
    Article,
}

impl std::str::FromStr for SourceField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abstract" => Ok(SourceField::Abstract),
            "article" => Ok(SourceField::Article),
            _ => Err(Error::InvalidParameter(format!(
                "unknown source field {s:?} (expected abstract or article)"
            ))),
        }
    }
}

impl SourceField {
    pub fn text<'a>(&self, doc: &'a Document) -> Result<&'a str> {
        match self {
            SourceField::Abstract => Ok(&doc.abstract_text),
            SourceField::Article => doc.article.as_deref().ok_or_else(|| Error::MissingField {
                field: "article".into(),
                document: doc.id.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for native metrics; `None` uses rayon's default.
    pub jobs: Option<usize>,
    /// Drop scorers that cannot be reached instead of failing.
    pub skip_missing: bool,
    /// Record per-item failures instead of failing the run.
    pub lenient: bool,
    pub source: SourceField,
    /// Stem tokens before ROUGE.
    pub stemming: bool,
    /// Familiar-word list for DCRS; the bundled Dale-Chall list when unset.
    pub word_list: Option<Arc<FamiliarWordList>>,
}

impl RunOptions {
    pub fn word_list(&self) -> &FamiliarWordList {
        self.word_list
            .as_deref()
            .unwrap_or_else(|| FamiliarWordList::dale_chall())
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(f()),
            Some(0) => Err(Error::InvalidParameter("jobs must be at least 1".into())),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(|pool| pool.install(f))
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}"))),
        }
    }
}

/// One text to send to every scorer.
struct ScorerItem<'a> {
    label: String,
    candidate: &'a str,
    document: &'a Document,
}

/// Outcome of running one scorer over all items: `None` when the scorer was
/// dropped as unavailable.
type ScorerColumn = Option<Vec<std::result::Result<f64, String>>>;

fn run_scorer(
    scorer: &RegisteredScorer,
    items: &[ScorerItem],
    options: &RunOptions,
) -> Result<ScorerColumn> {
    let endpoint = &scorer.endpoint;
    let requests = items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let source = if endpoint.needs_source {
                Some(options.source.text(item.document)?)
            } else {
                None
            };
            let reference = match (endpoint.needs_reference, &item.document.lay_summary) {
                (false, _) => None,
                (true, Some(r)) => Some(r.as_str()),
                (true, None) => {
                    return Err(Error::MissingField {
                        field: "lay_summary".into(),
                        document: item.document.id.clone(),
                    })
                }
            };
            endpoint.request(i.to_string(), item.candidate, source, reference)
        })
        .collect::<Result<Vec<ScoreRequest>>>()?;

    match scorer.pool().score_batch(&requests) {
        Ok(responses) => Ok(Some(
            responses
                .into_iter()
                .map(|r| match r.outcome {
                    ScoreOutcome::Score(s) => Ok(s),
                    ScoreOutcome::Error(e) => Err(e),
                })
                .collect(),
        )),
        Err(e) if options.skip_missing && e.is_unavailable() => {
            tracing::warn!("dropping scorer {:?}: {e}", endpoint.name);
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutput {
    pub records: Vec<MetricsRecord>,
    /// Scorers dropped as unreachable under `skip_missing`.
    pub dropped_scorers: Vec<String>,
    /// Number of per-candidate metric failures recorded under `lenient`.
    pub failures: usize,
}

fn index_documents(documents: &[Document]) -> HashMap<&str, &Document> {
    documents.iter().map(|d| (d.id.as_str(), d)).collect()
}

/// Native readability and ROUGE (against the lay summary when present) plus
/// every registered scorer, for each candidate.
pub fn score_candidates(
    documents: &[Document],
    candidates: &[CandidateSummary],
    registry: &Registry,
    options: &RunOptions,
) -> Result<ScoreOutput> {
    let by_id = index_documents(documents);
    let mut sorted: Vec<&CandidateSummary> = candidates.iter().collect();
    sorted
        .sort_by(|a, b| (&a.document_id, &a.candidate_id).cmp(&(&b.document_id, &b.candidate_id)));
    let items = sorted
        .iter()
        .map(|c| {
            let document = by_id.get(c.document_id.as_str()).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "candidate {:?} refers to unknown document {:?}",
                    c.candidate_id, c.document_id
                ))
            })?;
            Ok(ScorerItem {
                label: format!("{}/{}", c.document_id, c.candidate_id),
                candidate: &c.text,
                document,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<Result<MetricsRecord>> = options.install(|| {
        sorted
            .par_iter()
            .zip(items.par_iter())
            .map(|(c, item)| native_metrics(c, item.document, options))
            .collect()
    })?;
    let mut records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let mut dropped_scorers = Vec::new();
    for scorer in registry.scorers() {
        let Some(column) = run_scorer(scorer, &items, options)? else {
            dropped_scorers.push(scorer.name().to_string());
            continue;
        };
        for ((record, item), outcome) in records.iter_mut().zip(&items).zip(column) {
            let name = scorer.name().to_string();
            match outcome {
                Ok(v) => {
                    let target = match scorer.group {
                        MetricGroup::Factuality => &mut record.factuality,
                        MetricGroup::Extra => &mut record.extra,
                    };
                    target.insert(name, v);
                }
                Err(message) if options.lenient => {
                    record.errors.insert(name, message);
                }
                Err(message) => {
                    return Err(Error::Scorer {
                        scorer: name,
                        item: item.label.clone(),
                        message,
                    })
                }
            }
        }
    }

    let failures: usize = records.iter().map(|r| r.errors.len()).sum();
    Ok(ScoreOutput {
        records,
        dropped_scorers,
        failures,
    })
}

fn native_metrics(
    candidate: &CandidateSummary,
    document: &Document,
    options: &RunOptions,
) -> Result<MetricsRecord> {
    let mut record = MetricsRecord {
        document_id: candidate.document_id.clone(),
        candidate_id: candidate.candidate_id.clone(),
        strategy: candidate.strategy.clone(),
        readability: MetricMap::new(),
        factuality: MetricMap::new(),
        extra: MetricMap::new(),
        errors: BTreeMap::new(),
    };
    match readability_all(&candidate.text, options.word_list()) {
        Ok(r) => {
            record.readability.insert("fkgl".into(), r.fkgl);
            record.readability.insert("dcrs".into(), r.dcrs);
            record.readability.insert("cli".into(), r.cli);
        }
        Err(e) if options.lenient => {
            record.errors.insert("readability".into(), e.to_string());
        }
        Err(e) => {
            return Err(Error::InvalidParameter(format!(
                "candidate {}/{}: {e}",
                candidate.document_id, candidate.candidate_id
            )))
        }
    }
    if let Some(reference) = &document.lay_summary {
        let rouge = rouge_all(&candidate.text, reference, options.stemming);
        for (name, value) in rouge.named_values() {
            record.extra.insert(name.to_string(), value);
        }
    }
    Ok(record)
}

/// Selection records for every document, in document id order, and the number
/// of selections each strategy won.
pub fn select_documents(
    records: &[MetricsRecord],
    config: &SelectionConfig,
    options: &RunOptions,
) -> Result<(Vec<ResultRecord>, BTreeMap<String, usize>)> {
    config.validate()?;
    let mut pools: BTreeMap<&str, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        pools.entry(r.document_id.as_str()).or_default().push(r);
    }
    let pools: Vec<(&str, Vec<&MetricsRecord>)> = pools
        .into_iter()
        .map(|(id, mut pool)| {
            pool.sort_by(|a, b| a.candidate_id.cmp(&b.candidate_id));
            (id, pool)
        })
        .collect();

    let results: Vec<Result<ResultRecord>> = options.install(|| {
        pools
            .par_iter()
            .map(|(id, pool)| select_pool(id, pool, config))
            .collect()
    })?;

    let mut out = Vec::with_capacity(results.len());
    let mut wins: BTreeMap<String, usize> = BTreeMap::new();
    for result in results {
        let record = match result {
            Ok(r) => r,
            Err(e) if options.lenient => {
                tracing::warn!("{e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        if let ResultRecord::Selection {
            chosen_strategy, ..
        } = &record
        {
            *wins.entry(chosen_strategy.clone()).or_default() += 1;
        }
        out.push(record);
    }
    Ok((out, wins))
}

fn select_pool(
    document_id: &str,
    pool: &[&MetricsRecord],
    config: &SelectionConfig,
) -> Result<ResultRecord> {
    let in_document = |e: Error| match e {
        Error::InvalidPool(m) => Error::InvalidPool(format!("document {document_id:?}: {m}")),
        Error::InvalidParameter(m) => {
            Error::InvalidParameter(format!("document {document_id:?}: {m}"))
        }
        other => other,
    };
    if let Some(r) = pool.iter().find(|r| !r.errors.is_empty()) {
        return Err(Error::InvalidPool(format!(
            "document {document_id:?}: candidate {:?} has failed metrics {:?}",
            r.candidate_id,
            r.errors.keys().collect::<Vec<_>>()
        )));
    }
    if pool.len() == 1 {
        tracing::info!("document {document_id:?} has a single candidate");
    }
    let vectors: Vec<MetricVector> = pool
        .iter()
        .map(|r| MetricVector {
            candidate_id: r.candidate_id.clone(),
            readability: r.readability.clone(),
            factuality: r.factuality.clone(),
        })
        .collect();
    let result = des::select(&vectors, config).map_err(in_document)?;
    let rows: Vec<SelectionRow> = pool
        .iter()
        .zip(result.per_candidate)
        .map(|(raw, scored)| SelectionRow {
            chosen: scored.candidate_id == result.chosen_candidate_id,
            candidate_id: scored.candidate_id,
            strategy: raw.strategy.clone(),
            raw_readability: raw.readability.clone(),
            raw_factuality: raw.factuality.clone(),
            readability: scored.readability,
            factuality: scored.factuality,
            readability_mean: scored.readability_mean,
            factuality_mean: scored.factuality_mean,
            overall_score: scored.overall_score,
        })
        .collect();
    let chosen_strategy = rows
        .iter()
        .find(|r| r.chosen)
        .map(|r| r.strategy.clone())
        .expect("one row is chosen");
    Ok(ResultRecord::Selection {
        document_id: document_id.to_string(),
        chosen_candidate_id: result.chosen_candidate_id,
        chosen_strategy,
        candidates: rows,
    })
}

/// Raw metric vectors for the lay summaries of a training corpus, keyed by
/// document id, in document id order. Only factuality scorers are used.
pub fn exemplar_metrics(
    documents: &[Document],
    registry: &Registry,
    options: &RunOptions,
) -> Result<Vec<MetricVector>> {
    let mut docs: Vec<&Document> = documents.iter().collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut seen = HashSet::new();
    let items = docs
        .iter()
        .map(|d| {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate document id {:?}",
                    d.id
                )));
            }
            let lay = d
                .lay_summary
                .as_deref()
                .ok_or_else(|| Error::MissingField {
                    field: "lay_summary".into(),
                    document: d.id.clone(),
                })?;
            Ok(ScorerItem {
                label: d.id.clone(),
                candidate: lay,
                document: d,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let readability: Vec<Result<MetricVector>> = options.install(|| {
        items
            .par_iter()
            .map(|item| {
                let r = readability_all(item.candidate, options.word_list()).map_err(|e| {
                    Error::MissingField {
                        field: format!("lay_summary ({e})"),
                        document: item.label.clone(),
                    }
                })?;
                Ok(MetricVector::new(item.label.clone())
                    .with_readability("fkgl", r.fkgl)
                    .with_readability("dcrs", r.dcrs)
                    .with_readability("cli", r.cli))
            })
            .collect()
    })?;
    let mut vectors: Vec<Option<MetricVector>> = Vec::with_capacity(items.len());
    for v in readability {
        match v {
            Ok(v) => vectors.push(Some(v)),
            Err(e) if options.lenient => {
                tracing::warn!("skipping exemplar: {e}");
                vectors.push(None);
            }
            Err(e) => return Err(e),
        }
    }

    for scorer in registry.in_group(MetricGroup::Factuality) {
        let Some(column) = run_scorer(scorer, &items, options)? else {
            continue;
        };
        for ((slot, item), outcome) in vectors.iter_mut().zip(&items).zip(column) {
            let Some(vector) = slot else { continue };
            match outcome {
                Ok(v) => {
                    vector.factuality.insert(scorer.name().to_string(), v);
                }
                Err(message) if options.lenient => {
                    tracing::warn!(
                        "skipping exemplar {:?}: {}: {message}",
                        item.label,
                        scorer.name()
                    );
                    *slot = None;
                }
                Err(message) => {
                    return Err(Error::Scorer {
                        scorer: scorer.name().to_string(),
                        item: item.label.clone(),
                        message,
                    })
                }
            }
        }
    }
    Ok(vectors.into_iter().flatten().collect())
}
