//! JSONL ingestion of PLOS/eLife-shaped corpora and candidate summaries, and
//! persistence of scores, selections, rankings and prompts.
//!
//! Two corpus layouts are accepted per line:
//!
//! * shared-task layout: `{"id", "article", "headings", "keywords",
//!   "lay_summary"}` where `article` holds the sections joined by a delimiter
//!   (default `"\n"`) in the same order as `headings`. The first section is the
//!   abstract. The introduction is the first section whose heading mentions
//!   "introduction", else the second section.
//! * explicit layout: `{"id", "abstract", "introduction", ...}`. An explicit
//!   `abstract` or `introduction` always wins over one cut from `article`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::des::MetricMap;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SECTION_DELIMITER: &str = "\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Plos,
    Elife,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Elife, Dataset::Plos];

    pub fn name(&self) -> &'static str {
        match self {
            Dataset::Plos => "plos",
            Dataset::Elife => "elife",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plos" => Ok(Dataset::Plos),
            "elife" => Ok(Dataset::Elife),
            _ => Err(Error::InvalidParameter(format!(
                "unknown dataset {s:?} (expected plos or elife)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub introduction: Option<String>,
    pub article: Option<String>,
    pub lay_summary: Option<String>,
    pub headings: Option<Vec<String>>,
    pub keywords: Option<Vec<String>>,
    pub dataset: Dataset,
}

impl Document {
    pub fn new(id: impl Into<String>, abstract_text: impl Into<String>, dataset: Dataset) -> Self {
        Document {
            id: id.into(),
            abstract_text: abstract_text.into(),
            introduction: None,
            article: None,
            lay_summary: None,
            headings: None,
            keywords: None,
            dataset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub document_id: String,
    pub candidate_id: String,
    pub strategy: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// The first bad line fails the whole load.
    #[default]
    Strict,
    /// Bad lines are skipped and reported.
    Lenient,
}

/// Records that loaded, plus the rejects skipped in lenient mode.
#[derive(Debug)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub rejected: Vec<Error>,
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub dataset: Dataset,
    pub section_delimiter: String,
    pub mode: LoadMode,
}

impl CorpusOptions {
    pub fn new(dataset: Dataset) -> Self {
        CorpusOptions {
            dataset,
            section_delimiter: DEFAULT_SECTION_DELIMITER.to_string(),
            mode: LoadMode::Strict,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawDocument {
    id: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    introduction: Option<String>,
    article: Option<String>,
    lay_summary: Option<String>,
    headings: Option<Vec<String>>,
    keywords: Option<Vec<String>>,
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

impl RawDocument {
    fn into_document(self, line: usize, options: &CorpusOptions) -> Result<Document> {
        let id = non_blank(self.id).ok_or_else(|| Error::MalformedRecord {
            line,
            reason: "missing or empty `id`".into(),
        })?;
        let article = non_blank(self.article);
        let sections: Vec<&str> = match &article {
            Some(a) if !options.section_delimiter.is_empty() => a
                .split(options.section_delimiter.as_str())
                .map(str::trim)
                .collect(),
            Some(a) => vec![a.trim()],
            None => Vec::new(),
        };
        if let (Some(headings), false) = (&self.headings, sections.is_empty()) {
            if !headings.is_empty() && headings.len() != sections.len() {
                return Err(Error::MalformedRecord {
                    line,
                    reason: format!(
                        "document {id:?}: {} headings for {} article sections",
                        headings.len(),
                        sections.len()
                    ),
                });
            }
        }

        let abstract_text = non_blank(self.abstract_text)
            .or_else(|| sections.first().map(|s| s.to_string()))
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::MissingAbstract {
                id: id.clone(),
                line,
            })?;
        let introduction = non_blank(self.introduction).or_else(|| {
            let by_heading = self.headings.as_ref().and_then(|h| {
                h.iter()
                    .position(|h| h.to_lowercase().contains("introduction"))
                    .filter(|&i| i > 0)
            });
            by_heading
                .or(Some(1))
                .and_then(|i| sections.get(i))
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string())
        });

        Ok(Document {
            id,
            abstract_text,
            introduction,
            article,
            lay_summary: non_blank(self.lay_summary),
            headings: self.headings,
            keywords: self.keywords,
            dataset: options.dataset,
        })
    }
}

/// Non-blank lines with their 1-based line numbers.
fn jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn parse_line<T: for<'de> Deserialize<'de>>(line: usize, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::MalformedRecord {
        line,
        reason: e.to_string(),
    })
}

/// Collects per-line results, failing on the first reject in strict mode.
fn gather<T>(mode: LoadMode, results: impl IntoIterator<Item = Result<T>>) -> Result<Loaded<T>> {
    let mut loaded = Loaded {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    for result in results {
        match result {
            Ok(record) => loaded.records.push(record),
            Err(e) if e.class() == crate::ErrorClass::Io => return Err(e),
            Err(e) if mode == LoadMode::Strict => return Err(e),
            Err(e) => {
                tracing::warn!("skipping record: {e}");
                loaded.rejected.push(e);
            }
        }
    }
    Ok(loaded)
}

pub fn load_corpus(path: impl AsRef<Path>, options: &CorpusOptions) -> Result<Loaded<Document>> {
    let lines = jsonl_lines(path.as_ref())?;
    let mut seen = HashSet::new();
    let results = lines.iter().map(|(line, text)| {
        let raw: RawDocument = parse_line(*line, text)?;
        let doc = raw.into_document(*line, options)?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId {
                id: doc.id,
                line: *line,
            });
        }
        Ok(doc)
    });
    gather(options.mode, results.collect::<Vec<_>>())
}

#[derive(Debug, Deserialize)]
struct RawCandidate {
    document_id: String,
    candidate_id: String,
    strategy: String,
    text: String,
}

pub fn load_candidates(path: impl AsRef<Path>, mode: LoadMode) -> Result<Loaded<CandidateSummary>> {
    let lines = jsonl_lines(path.as_ref())?;
    let mut seen = HashSet::new();
    let results = lines.iter().map(|(line, text)| {
        let raw: RawCandidate = parse_line(*line, text)?;
        for (field, value) in [
            ("document_id", &raw.document_id),
            ("candidate_id", &raw.candidate_id),
        ] {
            if value.trim().is_empty() {
                return Err(Error::MalformedRecord {
                    line: *line,
                    reason: format!("empty `{field}`"),
                });
            }
        }
        if raw.text.trim().is_empty() {
            return Err(Error::at_line(*line, Error::EmptyText));
        }
        if !seen.insert((raw.document_id.clone(), raw.candidate_id.clone())) {
            return Err(Error::DuplicateId {
                id: format!("{}/{}", raw.document_id, raw.candidate_id),
                line: *line,
            });
        }
        Ok(CandidateSummary {
            document_id: raw.document_id,
            candidate_id: raw.candidate_id,
            strategy: raw.strategy,
            text: raw.text,
        })
    });
    gather(mode, results.collect::<Vec<_>>())
}

/// Candidates grouped by document id, groups sorted by id and each group in
/// file order.
pub fn group_candidates(candidates: &[CandidateSummary]) -> BTreeMap<&str, Vec<&CandidateSummary>> {
    let mut groups: BTreeMap<&str, Vec<&CandidateSummary>> = BTreeMap::new();
    for c in candidates {
        groups.entry(c.document_id.as_str()).or_default().push(c);
    }
    groups
}

pub fn save_candidates(path: impl AsRef<Path>, candidates: &[CandidateSummary]) -> Result<()> {
    write_jsonl(path.as_ref(), candidates)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Values behind one scored candidate. Metrics that failed for this candidate
/// are absent from their map and listed in `errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub document_id: String,
    pub candidate_id: String,
    pub strategy: String,
    pub readability: MetricMap,
    pub factuality: MetricMap,
    pub extra: MetricMap,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub candidate_id: String,
    pub strategy: String,
    pub raw_readability: MetricMap,
    pub raw_factuality: MetricMap,
    pub readability: MetricMap,
    pub factuality: MetricMap,
    #[serde(rename = "R")]
    pub readability_mean: f64,
    #[serde(rename = "F")]
    pub factuality_mean: f64,
    #[serde(rename = "S")]
    pub overall_score: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ResultRecord {
    Header {
        schema_version: u32,
        tool_version: String,
        command: String,
        effective_config: serde_json::Value,
        effective_config_digest: String,
    },
    Metrics(MetricsRecord),
    Selection {
        document_id: String,
        chosen_candidate_id: String,
        chosen_strategy: String,
        candidates: Vec<SelectionRow>,
    },
    Ranking {
        document_id: String,
        rank: usize,
        rank_score: f64,
    },
    TopK {
        dataset: Dataset,
        k: usize,
        document_ids: Vec<String>,
    },
    Prompt {
        document_id: String,
        template: String,
        exemplar_ids: Vec<String>,
        prompt_text: String,
    },
}

impl ResultRecord {
    /// Header record for `command`, carrying the config and its SHA-256.
    pub fn header(command: &str, effective_config: serde_json::Value) -> Self {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(&effective_config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        ResultRecord::Header {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            effective_config,
            effective_config_digest: format!("sha256:{}", hex::encode(digest.as_slice())),
        }
    }
}

pub fn save_results(path: impl AsRef<Path>, results: &[ResultRecord]) -> Result<()> {
    write_jsonl(path.as_ref(), results)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    jsonl_lines(path.as_ref())?
        .iter()
        .map(|(line, text)| parse_line(*line, text))
        .collect()
}
