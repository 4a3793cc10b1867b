//! Resolved run configuration: defaults, `key = value` config files, and
//! the echo written next to command outputs so any run can be reproduced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::classifier::{Hyperparams, TrainMode};
use crate::error::{Error, Result};

/// Every tunable the CLI understands, fully resolved. Precedence when
/// building one: defaults, then the `BIZFAIR_SEED` environment variable,
/// then a `--config` file, then explicit command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub test_frac: f64,
    pub min_samples: usize,
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub window: usize,
    pub vocab_min_count: u64,
    /// 0 disables hash-bucket embeddings for unknown tokens.
    pub hash_buckets: usize,
    pub mode: TrainMode,
    pub k: Vec<usize>,
    pub approach: u8,
    pub n_probes: usize,
    pub min_count: usize,
    pub runs: usize,
    pub json: bool,
    pub high_level: bool,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub names_male: Option<PathBuf>,
    pub names_female: Option<PathBuf>,
    pub dict: Option<PathBuf>,
    pub lists: Option<PathBuf>,
    pub text: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 42,
            test_frac: 0.1,
            min_samples: 100,
            dim: 100,
            lr: 0.2,
            epochs: 6,
            window: 5,
            vocab_min_count: 1,
            hash_buckets: 0,
            mode: TrainMode::Raw,
            k: vec![1, 2],
            approach: 1,
            n_probes: 10_000,
            min_count: 5,
            runs: 10,
            json: false,
            high_level: false,
            input: None,
            out: None,
            model: None,
            models: None,
            labels: None,
            names_male: None,
            names_female: None,
            dict: None,
            lists: None,
            text: None,
        }
    }
}

pub const SEED_ENV: &str = "BIZFAIR_SEED";

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "invalid value {other:?} for {key} (expected true or false)"
        ))),
    }
}

pub fn parse_k_list(value: &str) -> Result<Vec<usize>> {
    let ks: Result<Vec<usize>> = value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid k list {value:?}")))
        })
        .collect();
    let ks = ks?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config(format!("invalid k list {value:?}")));
    }
    Ok(ks)
}

impl Settings {
    /// Defaults with the environment seed fallback applied.
    pub fn base() -> Settings {
        let mut settings = Settings::default();
        if let Ok(value) = std::env::var(SEED_ENV) {
            if let Ok(seed) = value.trim().parse() {
                settings.seed = seed;
            }
        }
        settings
    }

    /// Apply one configuration key. Unknown keys are errors so typos in a
    /// config file cannot silently change a run.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "command" => {} // informational; checked by the caller
            "seed" => self.seed = parse(key, v)?,
            "test_frac" => self.test_frac = parse(key, v)?,
            "min_samples" => self.min_samples = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "window" => self.window = parse(key, v)?,
            "vocab_min_count" => self.vocab_min_count = parse(key, v)?,
            "hash_buckets" => self.hash_buckets = parse(key, v)?,
            "mode" => self.mode = TrainMode::parse(v)?,
            "k" => self.k = parse_k_list(v)?,
            "approach" => self.approach = parse(key, v)?,
            "n" => self.n_probes = parse(key, v)?,
            "min_count" => self.min_count = parse(key, v)?,
            "runs" => self.runs = parse(key, v)?,
            "json" => self.json = parse_bool(key, v)?,
            "high_level" => self.high_level = parse_bool(key, v)?,
            "input" => self.input = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "model" => self.model = Some(PathBuf::from(v)),
            "models" => self.models = Some(PathBuf::from(v)),
            "labels" => self.labels = Some(PathBuf::from(v)),
            "names_male" => self.names_male = Some(PathBuf::from(v)),
            "names_female" => self.names_female = Some(PathBuf::from(v)),
            "dict" => self.dict = Some(PathBuf::from(v)),
            "lists" => self.lists = Some(PathBuf::from(v)),
            "text" => self.text = Some(value.trim_start().to_string()),
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Load `key = value` lines from a config file. Blank lines and lines
    /// starting with `#` are ignored. Returns the command recorded in the
    /// file, if any.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<Option<String>> {
        let content = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut command = None;
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if key == "command" {
                command = Some(value.trim().to_string());
            }
            self.apply_kv(key, value)?;
        }
        Ok(command)
    }

    /// The full resolved configuration as sorted `key = value` lines.
    pub fn echo(&self, command: &str) -> String {
        let mut pairs: Vec<(&str, String)> = vec![
            ("command", command.to_string()),
            ("seed", self.seed.to_string()),
            ("test_frac", self.test_frac.to_string()),
            ("min_samples", self.min_samples.to_string()),
            ("dim", self.dim.to_string()),
            ("lr", self.lr.to_string()),
            ("epochs", self.epochs.to_string()),
            ("window", self.window.to_string()),
            ("vocab_min_count", self.vocab_min_count.to_string()),
            ("hash_buckets", self.hash_buckets.to_string()),
            ("mode", self.mode.to_string()),
            (
                "k",
                self.k
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("approach", self.approach.to_string()),
            ("n", self.n_probes.to_string()),
            ("min_count", self.min_count.to_string()),
            ("runs", self.runs.to_string()),
            ("json", self.json.to_string()),
            ("high_level", self.high_level.to_string()),
        ];
        let mut path = |key: &'static str, value: &Option<PathBuf>| {
            if let Some(value) = value {
                pairs.push((key, value.display().to_string()));
            }
        };
        path("input", &self.input);
        path("out", &self.out);
        path("model", &self.model);
        path("models", &self.models);
        path("labels", &self.labels);
        path("names_male", &self.names_male);
        path("names_female", &self.names_female);
        path("dict", &self.dict);
        path("lists", &self.lists);
        if let Some(text) = &self.text {
            pairs.push(("text", text.clone()));
        }
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (key, value) in pairs {
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            dim: self.dim,
            lr: self.lr,
            epochs: self.epochs,
            window: self.window,
            min_count: self.vocab_min_count,
            bucket_count: if self.hash_buckets > 0 {
                self.hash_buckets
            } else {
                Hyperparams::default().bucket_count
            },
            use_hash_buckets: self.hash_buckets > 0,
            seed: self.seed,
        }
    }

    pub fn require(&self, field: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
        field
            .clone()
            .ok_or_else(|| Error::Config(format!("missing required option --{flag}")))
    }
}
