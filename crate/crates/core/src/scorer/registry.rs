//! Scorer registry loaded from TOML.
//!
//! ```toml
//! [[scorer]]
//! name = "alignscore"
//! group = "factuality"
//! transport = "subprocess"
//! address = "python -m laysumm_scorers --scorer alignscore"
//! needs_source = true
//! range = [0.0, 1.0]
//!
//! [[scorer]]
//! name = "overlap"
//! group = "factuality"
//! transport = "mock"
//! address = "token-overlap"
//! ```
//!
//! Scorers in the `factuality` group feed selection and ranking; `extra`
//! scorers (BERTScore, LENS, ...) are recorded alongside but never weighed.
//! Mock scorers take their input flags from the formula.

use std::collections::HashSet;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    MockFormula, ScoreRange, ScorerEndpoint, ScorerPool, Transport, DEFAULT_TIMEOUT, DEFAULT_WINDOW,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricGroup {
    #[default]
    Factuality,
    Extra,
}

/// One `[[scorer]]` entry as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSpec {
    pub name: String,
    #[serde(default)]
    pub group: MetricGroup,
    pub transport: Transport,
    pub address: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub needs_source: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub needs_reference: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
}

impl ScorerSpec {
    fn resolve(&self) -> Result<RegisteredScorer> {
        let bad = |what: String| Error::InvalidParameter(format!("scorer {:?}: {what}", self.name));
        if self.name.trim().is_empty() {
            return Err(Error::InvalidParameter("scorer name is empty".into()));
        }
        if self.address.trim().is_empty() {
            return Err(bad("address is empty".into()));
        }
        let timeout = match self.timeout_secs {
            None => DEFAULT_TIMEOUT,
            Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
            Some(s) => return Err(bad(format!("timeout_secs must be positive, got {s}"))),
        };
        let range = match self.range {
            Some([min, max]) if min.is_finite() && max.is_finite() && min <= max => {
                Some(ScoreRange { min, max })
            }
            Some([min, max]) => return Err(bad(format!("invalid range [{min}, {max}]"))),
            None => None,
        };
        let window = self.window.unwrap_or(DEFAULT_WINDOW);
        let pool_size = self.pool_size.unwrap_or(1);
        if window == 0 || pool_size == 0 {
            return Err(bad("window and pool_size must be at least 1".into()));
        }

        let mut endpoint = ScorerEndpoint {
            name: self.name.clone(),
            transport: self.transport,
            address: self.address.clone(),
            timeout,
            needs_source: self.needs_source.unwrap_or(false),
            needs_reference: self.needs_reference.unwrap_or(false),
            range,
            window,
        };
        if self.transport == Transport::Mock {
            let formula: MockFormula = self.address.parse()?;
            if self
                .needs_source
                .is_some_and(|v| v != formula.needs_source())
                || self.needs_reference == Some(true)
            {
                return Err(bad(format!(
                    "input flags contradict mock formula {formula}"
                )));
            }
            endpoint.needs_source = formula.needs_source();
            endpoint.range = range.or(Some(ScoreRange::UNIT));
        }
        Ok(RegisteredScorer {
            endpoint,
            group: self.group,
            pool_size,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisteredScorer {
    pub endpoint: ScorerEndpoint,
    pub group: MetricGroup,
    pub pool_size: usize,
}

impl RegisteredScorer {
    pub fn name(&self) -> &str {
        &self.endpoint.name
    }

    pub fn pool(&self) -> ScorerPool {
        ScorerPool::new(self.endpoint.clone(), self.pool_size)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    #[serde(default)]
    scorer: Vec<ScorerSpec>,
}

/// Validated, immutable list of scorers in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    specs: Vec<ScorerSpec>,
    scorers: Vec<RegisteredScorer>,
}

impl Registry {
    pub fn parse(text: &str) -> Result<Self> {
        let file: RegistryFile = toml::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("scorer registry: {e}")))?;
        Self::from_specs(file.scorer)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn from_specs(specs: Vec<ScorerSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut scorers = Vec::with_capacity(specs.len());
        for spec in &specs {
            let scorer = spec.resolve()?;
            if !seen.insert(scorer.endpoint.name.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate scorer name {:?}",
                    scorer.endpoint.name
                )));
            }
            scorers.push(scorer);
        }
        Ok(Registry { specs, scorers })
    }

    pub fn scorers(&self) -> &[RegisteredScorer] {
        &self.scorers
    }

    /// The entries as written, for echoing into output headers.
    pub fn specs(&self) -> &[ScorerSpec] {
        &self.specs
    }

    pub fn get(&self, name: &str) -> Option<&RegisteredScorer> {
        self.scorers.iter().find(|s| s.endpoint.name == name)
    }

    pub fn in_group(&self, group: MetricGroup) -> impl Iterator<Item = &RegisteredScorer> {
        self.scorers.iter().filter(move |s| s.group == group)
    }

    pub fn is_empty(&self) -> bool {
        self.scorers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.scorers.len()
    }

    /// Drops scorers by name, keeping the order of the rest.
    pub fn without(&self, names: &HashSet<String>) -> Registry {
        let keep: Vec<usize> = (0..self.scorers.len())
            .filter(|&i| !names.contains(&self.scorers[i].endpoint.name))
            .collect();
        Registry {
            specs: keep.iter().map(|&i| self.specs[i].clone()).collect(),
            scorers: keep.iter().map(|&i| self.scorers[i].clone()).collect(),
        }
    }
}
