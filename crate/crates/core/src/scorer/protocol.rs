//! Newline-delimited JSON wire format spoken by external scorers.
//!
//! Each request is one compact JSON object followed by `\n`:
//!
//! ```text
//! {"id":"d1/c2","candidate":"...","source":"..."}
//! ```
//!
//! `source` and `reference` appear only when the scorer asks for them. Each
//! response echoes the id and carries either a score or an error message:
//!
//! ```text
//! {"id":"d1/c2","score":0.81}
//! {"id":"d1/c3","error":"input too long"}
//! ```
//!
//! Responses may arrive in any order. Unknown response keys are ignored.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    #[serde(rename = "id")]
    pub request_id: String,
    pub candidate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl ScoreRequest {
    pub fn new(request_id: impl Into<String>, candidate: impl Into<String>) -> Self {
        ScoreRequest {
            request_id: request_id.into(),
            candidate: candidate.into(),
            source: None,
            reference: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn with_reference(mut self, reference: impl Into<String>) -> Self {
        self.reference = Some(reference.into());
        self
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("request serializes");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreOutcome {
    Score(f64),
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResponse {
    pub request_id: String,
    pub outcome: ScoreOutcome,
}

impl ScoreResponse {
    pub fn score(request_id: impl Into<String>, score: f64) -> Self {
        ScoreResponse {
            request_id: request_id.into(),
            outcome: ScoreOutcome::Score(score),
        }
    }

    pub fn error(request_id: impl Into<String>, message: impl Into<String>) -> Self {
        ScoreResponse {
            request_id: request_id.into(),
            outcome: ScoreOutcome::Error(message.into()),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            ScoreOutcome::Score(s) => Some(s),
            ScoreOutcome::Error(_) => None,
        }
    }

    pub fn error_message(&self) -> Option<&str> {
        match &self.outcome {
            ScoreOutcome::Score(_) => None,
            ScoreOutcome::Error(e) => Some(e),
        }
    }

    pub fn to_line(&self) -> String {
        let wire = WireResponse::from(self);
        let mut line = serde_json::to_string(&wire).expect("response serializes");
        line.push('\n');
        line
    }

    /// Parses one response line. The error string describes what was wrong.
    pub fn parse_line(line: &str) -> Result<Self, String> {
        let wire: WireResponse =
            serde_json::from_str(line).map_err(|e| format!("invalid response JSON: {e}"))?;
        wire.try_into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct WireResponse {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl From<&ScoreResponse> for WireResponse {
    fn from(r: &ScoreResponse) -> Self {
        let (score, error) = match &r.outcome {
            ScoreOutcome::Score(s) => (Some(*s), None),
            ScoreOutcome::Error(e) => (None, Some(e.clone())),
        };
        WireResponse {
            id: r.request_id.clone(),
            score,
            error,
        }
    }
}

impl TryFrom<WireResponse> for ScoreResponse {
    type Error = String;

    fn try_from(w: WireResponse) -> Result<Self, String> {
        let outcome = match (w.score, w.error) {
            (Some(s), None) => ScoreOutcome::Score(s),
            (None, Some(e)) => ScoreOutcome::Error(e),
            (Some(_), Some(_)) => {
                return Err(format!("response {:?} has both score and error", w.id))
            }
            (None, None) => return Err(format!("response {:?} has neither score nor error", w.id)),
        };
        Ok(ScoreResponse {
            request_id: w.id,
            outcome,
        })
    }
}
