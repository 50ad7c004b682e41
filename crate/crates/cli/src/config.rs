//! Layered configuration: flag > environment > config file > default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use consens::provider::{LogBase, DEFAULT_MAX_IN_FLIGHT, DEFAULT_TIMEOUT_MS};
use thiserror::Error;

pub const API_KEY_ENV: &str = "CONSENS_API_KEY";
const ENV_PREFIX: &str = "CONSENS_";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{source_name}: unknown setting {key:?}")]
    UnknownKey { source_name: String, key: String },
    #[error("{source_name}: invalid value {value:?} for {key}: {message}")]
    InvalidValue {
        source_name: String,
        key: String,
        value: String,
        message: String,
    },
    #[error("{0}: the API key is read from the CONSENS_API_KEY environment variable only")]
    SecretInFile(String),
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
    #[error("provider `remote` needs a scoring URL (--scoring-url or CONSENS_SCORING_URL)")]
    MissingScoringUrl,
    #[error("provider `reference` needs a training corpus (--corpus or CONSENS_CORPUS)")]
    MissingCorpus,
    #[error("the similarity baseline needs an embedding URL (--embedding-url or CONSENS_EMBEDDING_URL)")]
    MissingEmbeddingUrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ProviderKind {
    #[default]
    Remote,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "remote" => Ok(Self::Remote),
            "reference" => Ok(Self::Reference),
            _ => Err("expected `remote` or `reference`".into()),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            _ => Err("expected `json`, `csv` or `text`".into()),
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Remote => "remote",
            Self::Reference => "reference",
        })
    }
}

/// One source of settings. Every field is optional so layers can be stacked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    pub provider: Option<ProviderKind>,
    pub scoring_url: Option<String>,
    pub scoring_timeout_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub model: Option<String>,
    pub log_base: Option<LogBase>,
    pub stoplist: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub reference_alpha: Option<f64>,
    pub embedding_url: Option<String>,
    pub embedding_model: Option<String>,
    pub output: Option<OutputFormat>,
    pub workers: Option<usize>,
}

/// Keys accepted in the config file; the environment uses the same names,
/// upper-cased and prefixed with `CONSENS_`.
pub const KEYS: &[&str] = &[
    "provider",
    "scoring_url",
    "scoring_timeout_ms",
    "max_in_flight",
    "model",
    "log_base",
    "stoplist",
    "corpus",
    "reference_alpha",
    "embedding_url",
    "embedding_model",
    "output",
    "workers",
];

fn parse<T: FromStr>(source_name: &str, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        source_name: source_name.into(),
        key: key.into(),
        value: value.into(),
        message: e.to_string(),
    })
}

fn positive(source_name: &str, key: &str, value: &str) -> Result<usize, ConfigError> {
    match parse::<usize>(source_name, key, value)? {
        0 => Err(ConfigError::InvalidValue {
            source_name: source_name.into(),
            key: key.into(),
            value: value.into(),
            message: "must be at least 1".into(),
        }),
        n => Ok(n),
    }
}

impl Layer {
    pub fn set(&mut self, source_name: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let s = source_name;
        match key {
            "provider" => self.provider = Some(parse(s, key, value)?),
            "scoring_url" => self.scoring_url = Some(value.into()),
            "scoring_timeout_ms" => self.scoring_timeout_ms = Some(parse(s, key, value)?),
            "max_in_flight" => self.max_in_flight = Some(positive(s, key, value)?),
            "model" => self.model = Some(value.into()),
            "log_base" => self.log_base = Some(parse(s, key, value)?),
            "stoplist" => self.stoplist = Some(value.into()),
            "corpus" => self.corpus = Some(value.into()),
            "reference_alpha" => self.reference_alpha = Some(parse(s, key, value)?),
            "embedding_url" => self.embedding_url = Some(value.into()),
            "embedding_model" => self.embedding_model = Some(value.into()),
            "output" => self.output = Some(parse(s, key, value)?),
            "workers" => self.workers = Some(positive(s, key, value)?),
            "api_key" => return Err(ConfigError::SecretInFile(s.into())),
            _ => {
                return Err(ConfigError::UnknownKey {
                    source_name: s.into(),
                    key: key.into(),
                })
            }
        }
        Ok(())
    }

    /// Reads `CONSENS_<KEY>` for every key through `get`.
    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut layer = Layer::default();
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Some(value) = get(&var).filter(|v| !v.is_empty()) {
                layer.set(&var, key, &value)?;
            }
        }
        Ok(layer)
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped;
    /// values may be wrapped in double quotes.
    pub fn from_file_text(path: &str, text: &str) -> Result<Self, ConfigError> {
        let mut layer = Layer::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                path: path.into(),
                line: i + 1,
            })?;
            let key = key.trim();
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            layer.set(&format!("{path}:{}", i + 1), key, value)?;
        }
        Ok(layer)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: display.clone(),
            message: e.to_string(),
        })?;
        Self::from_file_text(&display, &text)
    }

    /// Fields of `self` win; unset ones fall through to `lower`.
    pub fn over(self, lower: Layer) -> Layer {
        Layer {
            provider: self.provider.or(lower.provider),
            scoring_url: self.scoring_url.or(lower.scoring_url),
            scoring_timeout_ms: self.scoring_timeout_ms.or(lower.scoring_timeout_ms),
            max_in_flight: self.max_in_flight.or(lower.max_in_flight),
            model: self.model.or(lower.model),
            log_base: self.log_base.or(lower.log_base),
            stoplist: self.stoplist.or(lower.stoplist),
            corpus: self.corpus.or(lower.corpus),
            reference_alpha: self.reference_alpha.or(lower.reference_alpha),
            embedding_url: self.embedding_url.or(lower.embedding_url),
            embedding_model: self.embedding_model.or(lower.embedding_model),
            output: self.output.or(lower.output),
            workers: self.workers.or(lower.workers),
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub provider_kind: ProviderKind,
    pub scoring_url: Option<String>,
    pub scoring_timeout_ms: u64,
    pub max_in_flight: usize,
    pub model: Option<String>,
    pub log_base: LogBase,
    pub stoplist_path: Option<PathBuf>,
    pub reference_corpus_path: Option<PathBuf>,
    pub reference_alpha: f64,
    pub embedding_url: Option<String>,
    pub embedding_model: Option<String>,
    pub output_format: OutputFormat,
    pub workers: Option<usize>,
    pub api_key: Option<String>,
}

impl CliConfig {
    pub fn resolve(
        flags: Layer,
        env: Layer,
        file: Layer,
        api_key: Option<String>,
    ) -> CliConfig {
        let l = flags.over(env).over(file);
        CliConfig {
            provider_kind: l.provider.unwrap_or_default(),
            scoring_url: l.scoring_url,
            scoring_timeout_ms: l.scoring_timeout_ms.unwrap_or(DEFAULT_TIMEOUT_MS),
            max_in_flight: l.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT),
            model: l.model,
            log_base: l.log_base.unwrap_or(LogBase::E),
            stoplist_path: l.stoplist,
            reference_corpus_path: l.corpus,
            reference_alpha: l.reference_alpha.unwrap_or(1.0),
            embedding_url: l.embedding_url,
            embedding_model: l.embedding_model,
            output_format: l.output.unwrap_or_default(),
            workers: l.workers,
            api_key: api_key.filter(|k| !k.is_empty()),
        }
    }

    /// The provider invariants: `reference` needs a corpus, `remote` a URL.
    pub fn check_provider(&self) -> Result<(), ConfigError> {
        match self.provider_kind {
            ProviderKind::Remote if self.scoring_url.is_none() => Err(ConfigError::MissingScoringUrl),
            ProviderKind::Reference if self.reference_corpus_path.is_none() => {
                Err(ConfigError::MissingCorpus)
            }
            _ => Ok(()),
        }
    }
}
