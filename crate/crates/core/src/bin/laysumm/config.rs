use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use laysumm::corpus::{CorpusOptions, Dataset, LoadMode, DEFAULT_SECTION_DELIMITER};
use laysumm::des::SelectionConfig;
use laysumm::fewshot::RankMode;
use laysumm::pipeline::{RunOptions, SourceField};
use laysumm::scorer::Registry;
use laysumm::{Error, FamiliarWordList, Result};

pub const SCORERS_ENV: &str = "LAYSUMM_SCORERS";

/// Optional settings from `--config`. Flags override these; these override
/// built-in presets.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<Dataset>,
    pub preset: Option<Dataset>,
    pub w_readability: Option<f64>,
    pub w_factuality: Option<f64>,
    pub jobs: Option<usize>,
    pub scorers: Option<PathBuf>,
    pub skip_missing: Option<bool>,
    pub lenient: Option<bool>,
    pub source: Option<SourceField>,
    pub stemming: Option<bool>,
    pub section_delimiter: Option<String>,
    pub word_list: Option<PathBuf>,
    pub rank_mode: Option<RankMode>,
    pub k: Option<usize>,
    pub template: Option<String>,
    pub format: Option<String>,
    pub formats: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
    }
}

/// Settings shared by the commands after precedence is applied. Everything
/// here except `jobs` is echoed into output headers.
#[derive(Debug, Clone, Serialize)]
pub struct Common {
    pub dataset: Dataset,
    #[serde(skip)]
    pub jobs: Option<usize>,
    pub skip_missing: bool,
    pub lenient: bool,
    pub source: SourceField,
    pub stemming: bool,
    pub section_delimiter: String,
    pub word_list: Option<PathBuf>,
    pub scorers: Option<PathBuf>,
}

pub struct CommonFlags<'a> {
    pub dataset: Option<Dataset>,
    pub jobs: Option<usize>,
    pub skip_missing: bool,
    pub lenient: bool,
    pub source: Option<SourceField>,
    pub stemming: bool,
    pub section_delimiter: Option<&'a str>,
    pub word_list: Option<&'a Path>,
    pub scorers: Option<&'a Path>,
}

impl Common {
    pub fn resolve(flags: CommonFlags, file: &FileConfig) -> Result<Self> {
        let dataset = flags
            .dataset
            .or(file.dataset)
            .or(file.preset)
            .ok_or_else(|| Error::InvalidParameter("no dataset given (use --dataset)".into()))?;
        let scorers = flags
            .scorers
            .map(Path::to_path_buf)
            .or_else(|| {
                std::env::var_os(SCORERS_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            })
            .or_else(|| file.scorers.clone());
        Ok(Common {
            dataset,
            jobs: flags.jobs.or(file.jobs),
            skip_missing: flags.skip_missing || file.skip_missing.unwrap_or(false),
            lenient: flags.lenient || file.lenient.unwrap_or(false),
            source: flags.source.or(file.source).unwrap_or_default(),
            stemming: flags.stemming || file.stemming.unwrap_or(false),
            section_delimiter: flags
                .section_delimiter
                .map(str::to_string)
                .or_else(|| file.section_delimiter.clone())
                .unwrap_or_else(|| DEFAULT_SECTION_DELIMITER.to_string()),
            word_list: flags
                .word_list
                .map(Path::to_path_buf)
                .or_else(|| file.word_list.clone()),
            scorers,
        })
    }

    pub fn load_mode(&self) -> LoadMode {
        if self.lenient {
            LoadMode::Lenient
        } else {
            LoadMode::Strict
        }
    }

    pub fn corpus_options(&self) -> CorpusOptions {
        CorpusOptions {
            dataset: self.dataset,
            section_delimiter: self.section_delimiter.clone(),
            mode: self.load_mode(),
        }
    }

    pub fn run_options(&self) -> Result<RunOptions> {
        let word_list = match &self.word_list {
            Some(path) => Some(std::sync::Arc::new(FamiliarWordList::load(path)?)),
            None => None,
        };
        Ok(RunOptions {
            jobs: self.jobs,
            skip_missing: self.skip_missing,
            lenient: self.lenient,
            source: self.source,
            stemming: self.stemming,
            word_list,
        })
    }

    pub fn registry(&self) -> Result<Registry> {
        match &self.scorers {
            Some(path) => Registry::load(path),
            None => Ok(Registry::default()),
        }
    }
}

/// Explicit weights win over a preset; a lone weight implies its complement.
pub fn selection_config(
    preset: Option<Dataset>,
    w_readability: Option<f64>,
    w_factuality: Option<f64>,
    file: &FileConfig,
    dataset: Option<Dataset>,
) -> Result<SelectionConfig> {
    let w_r = w_readability.or(file.w_readability);
    let w_f = w_factuality.or(file.w_factuality);
    match (w_r, w_f) {
        (Some(r), Some(f)) => SelectionConfig::with_weights(r, f),
        (Some(r), None) => SelectionConfig::with_weights(r, 1.0 - r),
        (None, Some(f)) => SelectionConfig::with_weights(1.0 - f, f),
        (None, None) => {
            let preset = preset
                .or(file.preset)
                .or(dataset)
                .or(file.dataset)
                .ok_or_else(|| {
                    Error::InvalidParameter(
                        "no weights given (use --preset or --w-readability/--w-factuality)".into(),
                    )
                })?;
            Ok(match preset {
                Dataset::Elife => SelectionConfig::elife(),
                Dataset::Plos => SelectionConfig::plos(),
            })
        }
    }
}
