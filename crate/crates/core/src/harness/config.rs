use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::cpda::{DEFAULT_CAP, DEFAULT_EPSILON};

pub const SEED_ENV: &str = "HOMSMITH_SEED";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("epsilon must be a nonnegative number")]
    Epsilon,
    #[error("{SEED_ENV} is not an unsigned integer: `{0}`")]
    EnvSeed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub benchmark: String,
    pub seed: u64,
    /// Sampled first-order mutants per element for the CPDA model; `None`
    /// uses the benchmark's own setting.
    pub per_element: Option<usize>,
    pub budget: usize,
    pub pairs_per_bucket: usize,
    pub homs_per_pair: usize,
    pub rq1_trials: usize,
    pub rq2_trials: usize,
    pub epsilon: f64,
    pub cap: usize,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub no_build: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            benchmark: "billscar".into(),
            seed: 0,
            per_element: None,
            budget: 1000,
            pairs_per_bucket: 5,
            homs_per_pair: 100,
            rq1_trials: 10,
            rq2_trials: 5,
            epsilon: DEFAULT_EPSILON,
            cap: DEFAULT_CAP,
            out: PathBuf::from("results"),
            jobs: None,
            no_build: false,
        }
    }
}

/// Values given explicitly, by flags or a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverrides {
    pub benchmark: Option<String>,
    pub seed: Option<u64>,
    pub per_element: Option<usize>,
    pub budget: Option<usize>,
    pub pairs_per_bucket: Option<usize>,
    pub homs_per_pair: Option<usize>,
    pub rq1_trials: Option<usize>,
    pub rq2_trials: Option<usize>,
    pub epsilon: Option<f64>,
    pub cap: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub no_build: Option<bool>,
}

fn value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Value {
        key: key.into(),
        value: v.into(),
    })
}

/// Parses `key = value` lines. `#` and `;` start comments, `[section]`
/// headers are ignored.
pub fn parse_config(text: &str) -> Result<ConfigOverrides, ConfigError> {
    let mut o = ConfigOverrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with('#')
            || line.starts_with(';')
            || line.starts_with('[')
        {
            continue;
        }
        let syntax = |message: &str| ConfigError::Syntax {
            line: i + 1,
            message: message.into(),
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| syntax("expected `key = value`"))?;
        let (k, v) = (k.trim().replace('-', "_"), v.trim());
        match k.as_str() {
            "benchmark" => o.benchmark = Some(v.into()),
            "seed" => o.seed = Some(value(&k, v)?),
            "per_element" => o.per_element = Some(value(&k, v)?),
            "budget" => o.budget = Some(value(&k, v)?),
            "pairs_per_bucket" => o.pairs_per_bucket = Some(value(&k, v)?),
            "homs_per_pair" => o.homs_per_pair = Some(value(&k, v)?),
            "rq1_trials" => o.rq1_trials = Some(value(&k, v)?),
            "rq2_trials" | "trials" => o.rq2_trials = Some(value(&k, v)?),
            "epsilon" => o.epsilon = Some(value(&k, v)?),
            "cap" => o.cap = Some(value(&k, v)?),
            "out" => o.out = Some(v.into()),
            "jobs" => o.jobs = Some(value(&k, v)?),
            "no_build" => o.no_build = Some(value(&k, v)?),
            other => return Err(syntax(&format!("unknown key `{other}`"))),
        }
    }
    Ok(o)
}

impl ExperimentConfig {
    /// Flags win over the file; the environment seed is used only when
    /// neither gives one.
    pub fn resolve(
        flags: &ConfigOverrides,
        file: Option<&ConfigOverrides>,
        env_seed: Option<&str>,
    ) -> Result<ExperimentConfig, ConfigError> {
        let empty = ConfigOverrides::default();
        let file = file.unwrap_or(&empty);
        let d = ExperimentConfig::default();
        macro_rules! pick {
            ($f:ident) => {
                flags.$f.clone().or_else(|| file.$f.clone())
            };
        }
        let seed = match pick!(seed) {
            Some(s) => s,
            None => match env_seed {
                Some(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| ConfigError::EnvSeed(s.into()))?,
                None => d.seed,
            },
        };
        let cfg = ExperimentConfig {
            benchmark: pick!(benchmark).unwrap_or(d.benchmark),
            seed,
            per_element: pick!(per_element),
            budget: pick!(budget).unwrap_or(d.budget),
            pairs_per_bucket: pick!(pairs_per_bucket).unwrap_or(d.pairs_per_bucket),
            homs_per_pair: pick!(homs_per_pair).unwrap_or(d.homs_per_pair),
            rq1_trials: pick!(rq1_trials).unwrap_or(d.rq1_trials),
            rq2_trials: pick!(rq2_trials).unwrap_or(d.rq2_trials),
            epsilon: pick!(epsilon).unwrap_or(d.epsilon),
            cap: pick!(cap).unwrap_or(d.cap),
            out: pick!(out).unwrap_or(d.out),
            jobs: pick!(jobs),
            no_build: pick!(no_build).unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("per_element", self.per_element.unwrap_or(1)),
            ("budget", self.budget),
            ("pairs_per_bucket", self.pairs_per_bucket),
            ("homs_per_pair", self.homs_per_pair),
            ("rq1_trials", self.rq1_trials),
            ("rq2_trials", self.rq2_trials),
            ("jobs", self.jobs.unwrap_or(1)),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::Epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file =
            parse_config("[run]\n# comment\nseed = 5\nbudget = 200\nper-element = 7\n").unwrap();
        let flags = ConfigOverrides {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(&flags, Some(&file), Some("3")).unwrap();
        assert_eq!((cfg.seed, cfg.budget, cfg.per_element), (9, 200, Some(7)));
        let cfg =
            ExperimentConfig::resolve(&ConfigOverrides::default(), Some(&file), Some("3")).unwrap();
        assert_eq!(cfg.seed, 5);
        let cfg = ExperimentConfig::resolve(&ConfigOverrides::default(), None, Some("3")).unwrap();
        assert_eq!(cfg.seed, 3);
        let cfg = ExperimentConfig::resolve(&ConfigOverrides::default(), None, None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_config("seed 5"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("colour = red"),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            parse_config("budget = lots"),
            Err(ConfigError::Value { .. })
        ));
        let zero = ConfigOverrides {
            budget: Some(0),
            ..Default::default()
        };
        assert_eq!(
            ExperimentConfig::resolve(&zero, None, None),
            Err(ConfigError::NotPositive("budget"))
        );
        assert!(matches!(
            ExperimentConfig::resolve(&ConfigOverrides::default(), None, Some("x")),
            Err(ConfigError::EnvSeed(_))
        ));
    }
}
