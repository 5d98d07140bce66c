//! Clients for external scorers (AlignScore, SummaC, BERTScore, LENS, ...)
//! reached over a small line-oriented JSON protocol, see [`protocol`].
//!
//! A [`ScorerEndpoint`] describes how to reach one scorer and which inputs it
//! takes. [`score_batch`] opens a connection, sends requests in windows of
//! `endpoint.window`, and returns one response per request in request order.
//! Per-request failures come back as error responses; a dead process, refused
//! connection, timeout or malformed line fails the whole batch.

use std::collections::HashSet;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod http;
pub mod mock;
pub mod protocol;
pub mod registry;
mod subprocess;

pub use mock::{mock_scorer, MockFormula};
pub use protocol::{ScoreOutcome, ScoreRequest, ScoreResponse};
pub use registry::{MetricGroup, RegisteredScorer, Registry, ScorerSpec};

pub const DEFAULT_WINDOW: usize = 8;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    Subprocess,
    Http,
    /// In-process deterministic scorer; `address` holds the formula.
    Mock,
}

/// Declared closed interval of valid scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl ScoreRange {
    pub const UNIT: ScoreRange = ScoreRange { min: 0.0, max: 1.0 };

    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerEndpoint {
    pub name: String,
    pub transport: Transport,
    /// Command line for subprocess scorers, URL for HTTP ones.
    pub address: String,
    pub timeout: Duration,
    pub needs_source: bool,
    pub needs_reference: bool,
    pub range: Option<ScoreRange>,
    /// Requests in flight before the client waits for answers.
    pub window: usize,
}

impl ScorerEndpoint {
    /// Builds a request carrying exactly the inputs this scorer takes.
    pub fn request(
        &self,
        request_id: impl Into<String>,
        candidate: &str,
        source: Option<&str>,
        reference: Option<&str>,
    ) -> Result<ScoreRequest> {
        let request_id = request_id.into();
        let mut request = ScoreRequest::new(request_id.clone(), candidate);
        if self.needs_source {
            let source = source.ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "scorer {:?} needs a source text for request {request_id:?}",
                    self.name
                ))
            })?;
            request = request.with_source(source);
        }
        if self.needs_reference {
            let reference = reference.ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "scorer {:?} needs a reference text for request {request_id:?}",
                    self.name
                ))
            })?;
            request = request.with_reference(reference);
        }
        Ok(request)
    }

    pub fn check_request(&self, request: &ScoreRequest) -> Result<()> {
        let fail = |what: &str| {
            Err(Error::InvalidParameter(format!(
                "request {:?} for scorer {:?}: {what}",
                request.request_id, self.name
            )))
        };
        if request.candidate.trim().is_empty() {
            return fail("candidate text is empty");
        }
        if request.source.is_some() != self.needs_source {
            return fail(if self.needs_source {
                "source text is required"
            } else {
                "source text is not accepted"
            });
        }
        if request.reference.is_some() != self.needs_reference {
            return fail(if self.needs_reference {
                "reference text is required"
            } else {
                "reference text is not accepted"
            });
        }
        Ok(())
    }

    pub fn connect(&self) -> Result<ScorerClient> {
        let connection: Box<dyn Connection> = match self.transport {
            Transport::Subprocess => Box::new(subprocess::SubprocessConnection::spawn(
                &self.name,
                &self.address,
                self.timeout,
            )?),
            Transport::Http => Box::new(http::HttpConnection::new(
                &self.name,
                &self.address,
                self.timeout,
            )),
            Transport::Mock => Box::new(mock::MockConnection::new(self.address.parse()?)),
        };
        Ok(ScorerClient {
            endpoint: self.clone(),
            connection,
        })
    }

    fn protocol_error(&self, message: String) -> Error {
        Error::Protocol {
            scorer: self.name.clone(),
            message,
        }
    }

    /// Matches a window of responses to its requests by id and checks scores
    /// against the declared range. Returns responses in request order.
    fn reconcile(
        &self,
        requests: &[ScoreRequest],
        responses: Vec<ScoreResponse>,
    ) -> Result<Vec<ScoreResponse>> {
        let mut slots: Vec<Option<ScoreResponse>> = vec![None; requests.len()];
        for response in responses {
            let index = requests
                .iter()
                .position(|r| r.request_id == response.request_id)
                .ok_or_else(|| {
                    self.protocol_error(format!("unexpected response id {:?}", response.request_id))
                })?;
            if slots[index].is_some() {
                return Err(self.protocol_error(format!(
                    "duplicate response for id {:?}",
                    response.request_id
                )));
            }
            if let ScoreOutcome::Score(score) = response.outcome {
                if !score.is_finite() {
                    return Err(self.protocol_error(format!(
                        "non-finite score for id {:?}",
                        response.request_id
                    )));
                }
                if let Some(range) = self.range {
                    if !range.contains(score) {
                        return Err(self.protocol_error(format!(
                            "score {score} for id {:?} outside declared range [{}, {}]",
                            response.request_id, range.min, range.max
                        )));
                    }
                }
            }
            slots[index] = Some(response);
        }
        slots
            .into_iter()
            .zip(requests)
            .map(|(slot, request)| {
                slot.ok_or_else(|| {
                    self.protocol_error(format!("no response for id {:?}", request.request_id))
                })
            })
            .collect()
    }

    fn check_batch(&self, requests: &[ScoreRequest]) -> Result<()> {
        let mut seen = HashSet::new();
        for request in requests {
            self.check_request(request)?;
            if !seen.insert(request.request_id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate request id {:?}",
                    request.request_id
                )));
            }
        }
        Ok(())
    }
}

/// One live channel to a scorer. Sends a window, then reads exactly one
/// response line per request in it.
pub(crate) trait Connection: Send {
    fn exchange(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>>;
}

/// A single connection. Not shareable between workers; see [`ScorerPool`].
pub struct ScorerClient {
    endpoint: ScorerEndpoint,
    connection: Box<dyn Connection>,
}

impl ScorerClient {
    pub fn endpoint(&self) -> &ScorerEndpoint {
        &self.endpoint
    }

    pub fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        self.endpoint.check_batch(requests)?;
        let mut out = Vec::with_capacity(requests.len());
        for window in requests.chunks(self.endpoint.window.max(1)) {
            out.extend(self.exchange_window(window)?);
        }
        Ok(out)
    }

    fn exchange_window(&mut self, window: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        let responses = self.connection.exchange(window)?;
        self.endpoint.reconcile(window, responses)
    }
}

pub fn score_batch(
    endpoint: &ScorerEndpoint,
    requests: &[ScoreRequest],
) -> Result<Vec<ScoreResponse>> {
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    endpoint.check_batch(requests)?;
    endpoint.connect()?.score_batch(requests)
}

/// Several connections to one scorer. Windows of a batch are spread over the
/// connections, each used by one worker thread at a time.
pub struct ScorerPool {
    endpoint: ScorerEndpoint,
    size: usize,
    clients: Mutex<Vec<ScorerClient>>,
}

impl ScorerPool {
    /// Connections are opened on first use, so an unreachable scorer surfaces
    /// as a batch error rather than here.
    pub fn new(endpoint: ScorerEndpoint, size: usize) -> Self {
        ScorerPool {
            endpoint,
            size: size.max(1),
            clients: Mutex::new(Vec::new()),
        }
    }

    pub fn endpoint(&self) -> &ScorerEndpoint {
        &self.endpoint
    }

    pub fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        self.endpoint.check_batch(requests)?;
        let windows: Vec<&[ScoreRequest]> = requests.chunks(self.endpoint.window.max(1)).collect();

        let mut clients = self.clients.lock().unwrap_or_else(|e| e.into_inner());
        let wanted = self.size.min(windows.len());
        while clients.len() < wanted {
            clients.push(self.endpoint.connect()?);
        }

        let (work_tx, work_rx) = crossbeam_channel::unbounded();
        for item in windows.iter().enumerate() {
            work_tx.send(item).expect("receiver alive");
        }
        drop(work_tx);

        let mut results: Vec<Option<Result<Vec<ScoreResponse>>>> =
            (0..windows.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let (done_tx, done_rx) = crossbeam_channel::unbounded();
            for client in clients.iter_mut().take(wanted) {
                let work_rx = work_rx.clone();
                let done_tx = done_tx.clone();
                scope.spawn(move || {
                    for (index, window) in work_rx.iter() {
                        let result = client.exchange_window(window);
                        let failed = result.is_err();
                        let _ = done_tx.send((index, result));
                        if failed {
                            break;
                        }
                    }
                });
            }
            drop(done_tx);
            for (index, result) in done_rx.iter() {
                results[index] = Some(result);
            }
        });

        let mut out = Vec::with_capacity(requests.len());
        let mut first_error = None;
        for result in results {
            match result {
                Some(Ok(responses)) => out.extend(responses),
                Some(Err(e)) => {
                    first_error.get_or_insert(e);
                }
                None => {}
            }
        }
        if let Some(e) = first_error {
            // Connections may be half-way through a window; start fresh next time.
            clients.clear();
            return Err(e);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap_requests(n: usize) -> Vec<ScoreRequest> {
        (0..n)
            .map(|i| {
                ScoreRequest::new(format!("r{i}"), format!("w{i} shared"))
                    .with_source("shared source words")
            })
            .collect()
    }

    #[test]
    fn request_builder_respects_flags() {
        let e = mock_scorer("token-overlap").unwrap();
        let r = e.request("1", "cand", Some("src"), Some("ref")).unwrap();
        assert_eq!(r.source.as_deref(), Some("src"));
        assert_eq!(r.reference, None);
        assert!(matches!(
            e.request("1", "cand", None, None),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn missing_source_is_rejected_client_side() {
        let e = mock_scorer("length-ratio").unwrap();
        let err = score_batch(&e, &[ScoreRequest::new("1", "text")]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{err}");
    }

    #[test]
    fn unexpected_inputs_are_rejected() {
        let e = mock_scorer("constant:0.7").unwrap();
        let err = score_batch(&e, &[ScoreRequest::new("1", "t").with_source("s")]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
        let err = score_batch(&e, &[ScoreRequest::new("1", "  ")]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn duplicate_request_ids_are_rejected() {
        let e = mock_scorer("constant:0.7").unwrap();
        let reqs = [ScoreRequest::new("1", "a"), ScoreRequest::new("1", "b")];
        assert!(matches!(
            score_batch(&e, &reqs),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn out_of_range_score_is_a_protocol_error() {
        let e = mock_scorer("constant:1.5").unwrap();
        let err = score_batch(&e, &[ScoreRequest::new("1", "a")]).unwrap_err();
        assert!(matches!(err, Error::Protocol { .. }), "{err}");
        let mut unbounded = e.clone();
        unbounded.range = None;
        assert_eq!(
            score_batch(&unbounded, &[ScoreRequest::new("1", "a")]).unwrap()[0].value(),
            Some(1.5)
        );
    }

    #[test]
    fn reconcile_reorders_and_validates() {
        let e = mock_scorer("constant:0.5").unwrap();
        let reqs = [ScoreRequest::new("a", "x"), ScoreRequest::new("b", "y")];
        let out = e
            .reconcile(
                &reqs,
                vec![
                    ScoreResponse::score("b", 0.2),
                    ScoreResponse::score("a", 0.1),
                ],
            )
            .unwrap();
        assert_eq!(out[0].request_id, "a");
        assert_eq!(out[1].value(), Some(0.2));
        assert!(e
            .reconcile(&reqs, vec![ScoreResponse::score("a", 0.1)])
            .is_err());
        assert!(e
            .reconcile(
                &reqs,
                vec![
                    ScoreResponse::score("a", 0.1),
                    ScoreResponse::score("a", 0.1)
                ]
            )
            .is_err());
        assert!(e
            .reconcile(&reqs[..1], vec![ScoreResponse::score("zzz", 0.1)])
            .is_err());
        assert!(e
            .reconcile(&reqs[..1], vec![ScoreResponse::score("a", f64::NAN)])
            .is_err());
    }

    #[test]
    fn pool_matches_single_client() {
        let mut e = mock_scorer("token-overlap").unwrap();
        e.window = 3;
        let reqs = overlap_requests(20);
        let single = score_batch(&e, &reqs).unwrap();
        let pool = ScorerPool::new(e, 4);
        assert_eq!(pool.score_batch(&reqs).unwrap(), single);
        // reusable
        assert_eq!(pool.score_batch(&reqs).unwrap(), single);
        assert!(pool.score_batch(&[]).unwrap().is_empty());
    }
}
