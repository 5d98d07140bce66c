use std::time::Duration;

use crate::error::{Error, Result};

use super::protocol::{ScoreRequest, ScoreResponse, WireResponse};
use super::Connection;

/// POSTs each window as a JSON array and expects a JSON array back.
pub(crate) struct HttpConnection {
    name: String,
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl HttpConnection {
    pub(crate) fn new(name: &str, url: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        HttpConnection {
            name: name.to_string(),
            url: url.to_string(),
            timeout,
            agent,
        }
    }

    fn map_error(&self, e: ureq::Error) -> Error {
        match e {
            ureq::Error::Timeout(_) => Error::Timeout {
                scorer: self.name.clone(),
                timeout: self.timeout,
            },
            ureq::Error::StatusCode(code) => Error::Transport {
                scorer: self.name.clone(),
                message: format!("{} answered HTTP {code}", self.url),
            },
            other => Error::Transport {
                scorer: self.name.clone(),
                message: format!("{}: {other}", self.url),
            },
        }
    }
}

impl Connection for HttpConnection {
    fn exchange(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        let body = serde_json::to_string(requests).expect("requests serialize");
        let mut response = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| self.map_error(e))?;
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| self.map_error(e))?;
        let protocol = |message: String| Error::Protocol {
            scorer: self.name.clone(),
            message,
        };
        let wire: Vec<WireResponse> = serde_json::from_str(&text)
            .map_err(|e| protocol(format!("response is not a JSON array of results: {e}")))?;
        wire.into_iter()
            .map(|w| ScoreResponse::try_from(w).map_err(protocol))
            .collect()
    }
}
