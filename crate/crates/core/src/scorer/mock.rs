//! Deterministic in-process scorers for tests and dry runs, and a stdio
//! server that speaks the wire protocol with them.
//!
//! Formulas:
//!
//! * `constant:<v>` (or `constant(<v>)`): always `v`.
//! * `length-ratio`: candidate word count over source word count, clamped to
//!   `[0, 1]`. A source with no words yields an error response.
//! * `token-overlap`: share of distinct candidate tokens that also occur in the
//!   source. A candidate with no tokens yields an error response.
//!
//! Words and tokens follow [`relevance_tokens`] without stemming.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::relevance::relevance_tokens;

use super::protocol::{ScoreRequest, ScoreResponse};
use super::{Connection, ScoreRange, ScorerEndpoint, Transport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockFormula {
    Constant(f64),
    LengthRatio,
    TokenOverlap,
}

impl MockFormula {
    pub fn needs_source(&self) -> bool {
        !matches!(self, MockFormula::Constant(_))
    }

    pub fn score(&self, request: &ScoreRequest) -> ScoreResponse {
        let id = request.request_id.clone();
        match *self {
            MockFormula::Constant(v) => ScoreResponse::score(id, v),
            MockFormula::LengthRatio => {
                let source = request.source.as_deref().unwrap_or("");
                let source_words = relevance_tokens(source, false).len();
                if source_words == 0 {
                    return ScoreResponse::error(id, "source has no words");
                }
                let words = relevance_tokens(&request.candidate, false).len();
                ScoreResponse::score(id, (words as f64 / source_words as f64).clamp(0.0, 1.0))
            }
            MockFormula::TokenOverlap => {
                let candidate: HashSet<String> = relevance_tokens(&request.candidate, false)
                    .into_iter()
                    .collect();
                if candidate.is_empty() {
                    return ScoreResponse::error(id, "candidate has no tokens");
                }
                let source: HashSet<String> =
                    relevance_tokens(request.source.as_deref().unwrap_or(""), false)
                        .into_iter()
                        .collect();
                let shared = candidate.intersection(&source).count();
                ScoreResponse::score(id, shared as f64 / candidate.len() as f64)
            }
        }
    }
}

impl FromStr for MockFormula {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "length-ratio" => return Ok(MockFormula::LengthRatio),
            "token-overlap" => return Ok(MockFormula::TokenOverlap),
            _ => {}
        }
        let value = spec
            .strip_prefix("constant:")
            .or_else(|| {
                spec.strip_prefix("constant(")
                    .and_then(|rest| rest.strip_suffix(')'))
            })
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mock scorer {spec:?}")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad constant in {spec:?}")))?;
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("bad constant in {spec:?}")));
        }
        Ok(MockFormula::Constant(v))
    }
}

impl fmt::Display for MockFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockFormula::Constant(v) => write!(f, "constant:{v}"),
            MockFormula::LengthRatio => f.write_str("length-ratio"),
            MockFormula::TokenOverlap => f.write_str("token-overlap"),
        }
    }
}

/// An in-process endpoint named after its formula, declared `[0, 1]`-ranged.
pub fn mock_scorer(spec: &str) -> Result<ScorerEndpoint> {
    let formula: MockFormula = spec.parse()?;
    Ok(ScorerEndpoint {
        name: formula.to_string(),
        transport: Transport::Mock,
        address: formula.to_string(),
        timeout: Duration::from_secs(1),
        needs_source: formula.needs_source(),
        needs_reference: false,
        range: Some(ScoreRange::UNIT),
        window: super::DEFAULT_WINDOW,
    })
}

pub(crate) struct MockConnection {
    formula: MockFormula,
}

impl MockConnection {
    pub(crate) fn new(formula: MockFormula) -> Self {
        MockConnection { formula }
    }
}

impl Connection for MockConnection {
    fn exchange(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        Ok(requests.iter().map(|r| self.formula.score(r)).collect())
    }
}

/// Knobs for exercising client failure paths against [`serve`].
#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Exit after answering this many requests.
    pub exit_after: Option<usize>,
    /// Sleep before each response.
    pub delay: Option<Duration>,
}

/// Answers request lines from `input` on `output` until EOF. Lines that do not
/// parse get an error response, with id `"unknown"` when none can be read.
pub fn serve<R: BufRead, W: Write>(
    formula: MockFormula,
    input: R,
    mut output: W,
    options: &ServeOptions,
) -> std::io::Result<()> {
    for (answered, line) in input.lines().enumerate() {
        if options.exit_after.is_some_and(|n| answered >= n) {
            break;
        }
        let line = line?;
        let response = match serde_json::from_str::<ScoreRequest>(&line) {
            Ok(request) => formula.score(&request),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|id| id.as_str()).map(String::from))
                    .unwrap_or_else(|| "unknown".to_string());
                ScoreResponse::error(id, format!("malformed request: {e}"))
            }
        };
        if let Some(delay) = options.delay {
            std::thread::sleep(delay);
        }
        output.write_all(response.to_line().as_bytes())?;
        output.flush()?;
    }
    Ok(())
}
