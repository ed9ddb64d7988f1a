//! Layered settings: built-in defaults, then a TOML file, then
//! environment variables, then command-line flags. Every key can be set at
//! every layer; the layers are merged as TOML tables before the result is
//! deserialized and validated once.

use std::path::{Path, PathBuf};
use std::time::Duration;

use opinion_core::backend::{BackendKind, GenerationParams, RemoteConfig};
use opinion_core::prompt::StopSequences;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

pub const ENV_CONFIG: &str = "OPINION_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "opinion.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Str,
    Float,
    Int,
    Bool,
}

/// Every settable key, the environment variable that mirrors it, and how
/// to read a raw string for it.
const KEYS: &[(&str, &str, Kind)] = &[
    ("dump_dir", "OPINION_DUMP_DIR", Kind::Str),
    ("corpus_path", "OPINION_CORPUS", Kind::Str),
    ("scale", "OPINION_SCALE", Kind::Float),
    ("backend.kind", "OPINION_BACKEND", Kind::Str),
    ("backend.endpoint_url", "OPINION_ENDPOINT_URL", Kind::Str),
    ("backend.endpoint_token", "OPINION_ENDPOINT_TOKEN", Kind::Str),
    ("backend.openai_compat", "OPINION_OPENAI_COMPAT", Kind::Bool),
    ("backend.model", "OPINION_MODEL", Kind::Str),
    ("backend.timeout_secs", "OPINION_TIMEOUT_SECS", Kind::Float),
    ("backend.retries", "OPINION_RETRIES", Kind::Int),
    ("backend.max_in_flight", "OPINION_MAX_IN_FLIGHT", Kind::Int),
    ("backend.sentinel", "OPINION_SENTINEL", Kind::Str),
    ("generation.max_tokens", "OPINION_MAX_TOKENS", Kind::Int),
    ("generation.temperature", "OPINION_TEMPERATURE", Kind::Float),
    ("serve.host", "OPINION_HOST", Kind::Str),
    ("serve.port", "OPINION_PORT", Kind::Int),
    ("serve.store", "OPINION_STORE", Kind::Str),
    ("serve.fan_out", "OPINION_FAN_OUT", Kind::Int),
    ("serve.per_bias_timeout_secs", "OPINION_PER_BIAS_TIMEOUT_SECS", Kind::Float),
    ("eval.parallelism", "OPINION_EVAL_PARALLELISM", Kind::Int),
    ("eval.lexicon", "OPINION_LEXICON", Kind::Str),
    ("eval.classifier_url", "OPINION_CLASSIFIER_URL", Kind::Str),
    ("eval.regard_url", "OPINION_REGARD_URL", Kind::Str),
];

/// The environment variable for a key, if it has one.
pub fn env_var_for(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, e, _)| *e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dump_dir: PathBuf,
    pub corpus_path: PathBuf,
    pub scale: f64,
    pub backend: BackendSettings,
    pub generation: GenerationSettings,
    pub serve: ServeSettings,
    pub eval: EvalSettings,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dump_dir: "dump".into(),
            corpus_path: "corpus.ndjson".into(),
            scale: 1.0,
            backend: BackendSettings::default(),
            generation: GenerationSettings::default(),
            serve: ServeSettings::default(),
            eval: EvalSettings::default(),
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub kind: String,
    pub endpoint_url: Option<String>,
    pub endpoint_token: Option<String>,
    pub openai_compat: bool,
    pub model: Option<String>,
    pub timeout_secs: f64,
    pub retries: u32,
    pub max_in_flight: usize,
    /// Extra end-of-text marker the model emits, besides the turn delimiter.
    pub sentinel: Option<String>,
}

impl std::fmt::Debug for BackendSettings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendSettings")
            .field("kind", &self.kind)
            .field("endpoint_url", &self.endpoint_url)
            .field("endpoint_token", &self.endpoint_token.as_ref().map(|_| "<redacted>"))
            .field("openai_compat", &self.openai_compat)
            .field("model", &self.model)
            .field("timeout_secs", &self.timeout_secs)
            .field("retries", &self.retries)
            .field("max_in_flight", &self.max_in_flight)
            .field("sentinel", &self.sentinel)
            .finish()
    }
}

impl Default for BackendSettings {
    fn default() -> Self {
        BackendSettings {
            kind: "retrieval".into(),
            endpoint_url: None,
            endpoint_token: None,
            openai_compat: false,
            model: None,
            timeout_secs: 30.0,
            retries: 2,
            max_in_flight: 8,
            sentinel: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSettings {
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        let p = GenerationParams::default();
        GenerationSettings {
            max_tokens: p.max_tokens,
            temperature: p.temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSettings {
    pub host: String,
    pub port: u16,
    pub store: PathBuf,
    pub fan_out: usize,
    pub per_bias_timeout_secs: f64,
}

impl Default for ServeSettings {
    fn default() -> Self {
        ServeSettings {
            host: "127.0.0.1".into(),
            port: 8080,
            store: "conversations.ndjson".into(),
            fan_out: 4,
            per_bias_timeout_secs: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub parallelism: usize,
    pub lexicon: Option<PathBuf>,
    pub classifier_url: Option<String>,
    /// Defaults to `classifier_url`.
    pub regard_url: Option<String>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            parallelism: 8,
            lexicon: None,
            classifier_url: None,
            regard_url: None,
        }
    }
}

fn coerce(key: &str, kind: Kind, raw: &str) -> Result<Value, ConfigError> {
    let bad = |what: &str| ConfigError::invalid(key, format!("expected {what}, got {raw:?}"));
    Ok(match kind {
        Kind::Str => Value::String(raw.to_string()),
        Kind::Float => Value::Float(raw.trim().parse().map_err(|_| bad("a number"))?),
        Kind::Int => Value::Integer(raw.trim().parse().map_err(|_| bad("an integer"))?),
        Kind::Bool => Value::Boolean(match raw.trim() {
            "1" | "true" | "yes" => true,
            "0" | "false" | "no" => false,
            _ => return Err(bad("a boolean")),
        }),
    })
}

fn set_dotted(table: &mut Table, key: &str, value: Value) {
    match key.split_once('.') {
        None => {
            table.insert(key.to_string(), value);
        }
        Some((section, rest)) => {
            let entry = table.entry(section.to_string()).or_insert_with(|| Value::Table(Table::new()));
            if !entry.is_table() {
                *entry = Value::Table(Table::new());
            }
            set_dotted(entry.as_table_mut().unwrap(), rest, value);
        }
    }
}

/// Picks the config file: an explicit path must exist; otherwise
/// `OPINION_CONFIG`, then `opinion.toml` in the working directory if present.
pub fn locate(explicit: Option<&Path>, env: &dyn Fn(&str) -> Option<String>) -> Option<(PathBuf, bool)> {
    if let Some(p) = explicit {
        return Some((p.to_path_buf(), true));
    }
    if let Some(p) = env(ENV_CONFIG) {
        return Some((PathBuf::from(p), true));
    }
    let default = PathBuf::from(DEFAULT_CONFIG_FILE);
    default.exists().then_some((default, false))
}

/// Resolves the final settings. `flags` holds (dotted key, raw value) pairs
/// for options given on the command line.
pub fn load(
    file: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    flags: &[(&str, String)],
) -> Result<Config, ConfigError> {
    let mut merged = match file {
        None => Table::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            text.parse::<Table>().map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        }
    };
    for (key, var, kind) in KEYS {
        if let Some(raw) = env(var) {
            set_dotted(&mut merged, key, coerce(key, *kind, &raw)?);
        }
    }
    for (key, raw) in flags {
        let kind = KEYS
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, _, kind)| *kind)
            .unwrap_or_else(|| panic!("flag mapped to unknown key {key}"));
        set_dotted(&mut merged, key, coerce(key, kind, raw)?);
    }

    let config: Config = Value::Table(merged).try_into().map_err(|e: toml::de::Error| {
        ConfigError::Parse {
            path: file.map(Path::to_path_buf).unwrap_or_else(|| "<settings>".into()),
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(ConfigError::invalid("scale", format!("must be in (0, 1], got {}", self.scale)));
        }
        let kind = self.backend_kind()?;
        if kind == BackendKind::Remote && self.backend.endpoint_url.as_deref().is_none_or(str::is_empty) {
            return Err(ConfigError::invalid("backend.endpoint_url", "required for the remote backend"));
        }
        for (key, path) in [
            ("dump_dir", &self.dump_dir),
            ("corpus_path", &self.corpus_path),
            ("serve.store", &self.serve.store),
        ] {
            if path.as_os_str().is_empty() {
                return Err(ConfigError::invalid(key, "must not be empty"));
            }
        }
        if self.backend.timeout_secs.is_nan() || self.backend.timeout_secs <= 0.0 {
            return Err(ConfigError::invalid("backend.timeout_secs", "must be positive"));
        }
        if self.serve.per_bias_timeout_secs.is_nan() || self.serve.per_bias_timeout_secs <= 0.0 {
            return Err(ConfigError::invalid("serve.per_bias_timeout_secs", "must be positive"));
        }
        if self.backend.max_in_flight == 0 {
            return Err(ConfigError::invalid("backend.max_in_flight", "must be at least 1"));
        }
        if self.serve.fan_out == 0 {
            return Err(ConfigError::invalid("serve.fan_out", "must be at least 1"));
        }
        self.generation_params()
            .validate()
            .map_err(|e| ConfigError::invalid("generation", e.to_string()))?;
        Ok(())
    }

    pub fn backend_kind(&self) -> Result<BackendKind, ConfigError> {
        self.backend.kind.parse().map_err(|_| {
            ConfigError::invalid("backend.kind", format!("expected remote or retrieval, got {:?}", self.backend.kind))
        })
    }

    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            max_tokens: self.generation.max_tokens,
            temperature: self.generation.temperature,
            stop: StopSequences::with_sentinel(self.backend.sentinel.as_deref()).as_slice().to_vec(),
        }
    }

    pub fn remote_config(&self) -> RemoteConfig {
        let mut rc = RemoteConfig::new(self.backend.endpoint_url.clone().unwrap_or_default());
        rc.token = self.backend.endpoint_token.clone();
        rc.openai_compat = self.backend.openai_compat;
        rc.model = self.backend.model.clone();
        rc.timeout = Duration::from_secs_f64(self.backend.timeout_secs);
        rc.retries = self.backend.retries;
        rc.max_in_flight = self.backend.max_in_flight;
        rc
    }
}
