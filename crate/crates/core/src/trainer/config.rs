use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::{DEFAULT_NOISE_POWER, DEFAULT_NOISE_TABLE_SIZE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Cbow,
    SkipGram,
}

impl Mode {
    pub fn default_lr(self) -> f64 {
        match self {
            Mode::Cbow => 0.05,
            Mode::SkipGram => 0.025,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbow => "cbow",
            Mode::SkipGram => "skipgram",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbow" => Ok(Mode::Cbow),
            "skipgram" | "skip-gram" | "sg" => Ok(Mode::SkipGram),
            _ => Err("expected `cbow` or `skipgram`".into()),
        }
    }
}

/// The four model variants compared in the evaluation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cbow,
    SkipGram,
    FastTextSkip,
    FastTextCbow,
}

impl ModelKind {
    pub fn mode_and_subword(self) -> (Mode, bool) {
        match self {
            ModelKind::Cbow => (Mode::Cbow, false),
            ModelKind::SkipGram => (Mode::SkipGram, false),
            ModelKind::FastTextSkip => (Mode::SkipGram, true),
            ModelKind::FastTextCbow => (Mode::Cbow, true),
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cbow" => Ok(ModelKind::Cbow),
            "skipgram" | "skip-gram" => Ok(ModelKind::SkipGram),
            "fasttext-skip" | "fasttext-skipgram" => Ok(ModelKind::FastTextSkip),
            "fasttext-cbow" => Ok(ModelKind::FastTextCbow),
            _ => Err(format!(
                "unknown model `{s}` (expected cbow, skipgram, fasttext-skip or fasttext-cbow)"
            )),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub mode: Mode,
    pub subword: bool,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub epochs: usize,
    pub min_count: u64,
    pub subsample_t: f64,
    pub minn: usize,
    pub maxn: usize,
    pub buckets: usize,
    pub seed: u64,
    pub workers: usize,
    pub noise_power: f64,
    pub noise_table_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::for_mode(Mode::SkipGram)
    }
}

const KEYS: &[&str] = &[
    "mode",
    "subword",
    "dim",
    "window",
    "negatives",
    "initial_lr",
    "epochs",
    "min_count",
    "subsample_t",
    "minn",
    "maxn",
    "buckets",
    "seed",
    "workers",
    "noise_power",
    "noise_table_size",
];

impl ModelConfig {
    pub fn for_mode(mode: Mode) -> Self {
        ModelConfig {
            mode,
            subword: false,
            dim: 300,
            window: 5,
            negatives: 5,
            initial_lr: mode.default_lr(),
            epochs: 5,
            min_count: 10,
            subsample_t: 1e-4,
            minn: 3,
            maxn: 6,
            buckets: 2_000_000,
            seed: 1,
            workers: 1,
            noise_power: DEFAULT_NOISE_POWER,
            noise_table_size: DEFAULT_NOISE_TABLE_SIZE,
        }
    }

    pub fn for_model(kind: ModelKind) -> Self {
        let (mode, subword) = kind.mode_and_subword();
        ModelConfig {
            subword,
            ..ModelConfig::for_mode(mode)
        }
    }

    /// Build a configuration from ordered `key=value` assignments. Later
    /// assignments win. When `initial_lr` is never assigned it follows the
    /// final mode's default.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = ModelConfig::default();
        let mut lr_set = false;
        for (key, value) in pairs {
            cfg.set(key, value)?;
            lr_set |= key == "initial_lr";
        }
        if !lr_set {
            cfg.initial_lr = cfg.mode.default_lr();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assign a single key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            value.parse::<T>().map_err(|e| Error::InvalidConfigValue {
                key: key.into(),
                value: value.into(),
                reason: e.to_string(),
            })
        }
        match key {
            "mode" => self.mode = parse(key, value)?,
            "subword" => {
                self.subword = match value {
                    "on" | "true" | "1" | "yes" => true,
                    "off" | "false" | "0" | "no" => false,
                    _ => {
                        return Err(Error::InvalidConfigValue {
                            key: key.into(),
                            value: value.into(),
                            reason: "expected on/off".into(),
                        })
                    }
                }
            }
            "dim" => self.dim = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "negatives" => self.negatives = parse(key, value)?,
            "initial_lr" => self.initial_lr = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "min_count" => self.min_count = parse(key, value)?,
            "subsample_t" => self.subsample_t = parse(key, value)?,
            "minn" => self.minn = parse(key, value)?,
            "maxn" => self.maxn = parse(key, value)?,
            "buckets" => self.buckets = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "noise_power" => self.noise_power = parse(key, value)?,
            "noise_table_size" => self.noise_table_size = parse(key, value)?,
            _ => {
                return Err(Error::UnknownConfigKey {
                    key: key.into(),
                    line: None,
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("workers", self.workers),
            ("noise_table_size", self.noise_table_size),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be at least 1")));
            }
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::Config("initial_lr must be positive".into()));
        }
        if !(self.subsample_t > 0.0) {
            return Err(Error::Config("subsample_t must be positive".into()));
        }
        if self.subword {
            if self.minn == 0 || self.minn > self.maxn {
                return Err(Error::Config(format!(
                    "need 1 <= minn <= maxn, got minn={} maxn={}",
                    self.minn, self.maxn
                )));
            }
            if self.buckets == 0 {
                return Err(Error::Config("buckets must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Number of n-gram bucket rows in the input matrix.
    pub fn bucket_rows(&self) -> usize {
        if self.subword {
            self.buckets
        } else {
            0
        }
    }

    /// Parse a flat `key=value` file. Blank lines and `#` comments are
    /// ignored.
    pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
        let mut pairs = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, format!("expected key=value, got `{line}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::UnknownConfigKey {
                    key: key.into(),
                    line: Some(n + 1),
                });
            }
            pairs.push((key.to_owned(), value.trim().to_owned()));
        }
        Ok(pairs)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let pairs = Self::read_pairs(reader)?;
        Self::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "mode={}", self.mode)?;
        writeln!(out, "subword={}", if self.subword { "on" } else { "off" })?;
        writeln!(out, "dim={}", self.dim)?;
        writeln!(out, "window={}", self.window)?;
        writeln!(out, "negatives={}", self.negatives)?;
        writeln!(out, "initial_lr={}", self.initial_lr)?;
        writeln!(out, "epochs={}", self.epochs)?;
        writeln!(out, "min_count={}", self.min_count)?;
        writeln!(out, "subsample_t={}", self.subsample_t)?;
        writeln!(out, "minn={}", self.minn)?;
        writeln!(out, "maxn={}", self.maxn)?;
        writeln!(out, "buckets={}", self.buckets)?;
        writeln!(out, "seed={}", self.seed)?;
        writeln!(out, "workers={}", self.workers)?;
        writeln!(out, "noise_power={}", self.noise_power)?;
        writeln!(out, "noise_table_size={}", self.noise_table_size)?;
        Ok(())
    }
}
