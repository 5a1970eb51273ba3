//! Run configuration: defaults, an optional TOML file, and command-line
//! overrides, merged in that order of increasing precedence.
//!
//! The file path comes from `--config`, else from `$QTWIST_CONFIG`.
//! Complex values may be written as a number, as `[re, im]`, or as a
//! string such as `"0.3+0.1i"`.

use crate::qkz::WeightConfig;
use crate::twistor::ModelParams;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONFIG_ENV: &str = "QTWIST_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("invalid value for {key}: {msg}")]
    BadValue { key: &'static str, msg: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl ComplexInput {
    fn resolve(&self, key: &'static str) -> Result<C64, ConfigError> {
        match self {
            ComplexInput::Real(x) => Ok(C64::new(*x, 0.0)),
            ComplexInput::Pair([a, b]) => Ok(C64::new(*a, *b)),
            ComplexInput::Text(s) => parse_complex(s).map_err(|msg| ConfigError::BadValue { key, msg }),
        }
    }
}

/// Parses `0.5`, `0.3+0.1i`, `-2i` or `0.3,0.1`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once(',') {
        let re = a.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?;
        let im = b.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?;
        return Ok(C64::new(re, im));
    }
    t.parse::<C64>().map_err(|e| format!("{s:?}: {e}"))
}

/// One layer of settings; every field optional so layers can be merged.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub q: Option<ComplexInput>,
    pub eps: Option<ComplexInput>,
    pub u: Option<ComplexInput>,
    pub k: Option<ComplexInput>,
    pub g: Option<f64>,
    pub order_x: Option<usize>,
    pub order_eps: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub m_source: Option<f64>,
    pub m_sink: Option<f64>,
    pub format: Option<OutputFormat>,
    pub output: Option<PathBuf>,
    pub golden: Option<PathBuf>,
}

impl Layer {
    /// `self` where set, `other` otherwise.
    pub fn over(self, other: Layer) -> Layer {
        Layer {
            q: self.q.or(other.q),
            eps: self.eps.or(other.eps),
            u: self.u.or(other.u),
            k: self.k.or(other.k),
            g: self.g.or(other.g),
            order_x: self.order_x.or(other.order_x),
            order_eps: self.order_eps.or(other.order_eps),
            tol: self.tol.or(other.tol),
            seed: self.seed.or(other.seed),
            m_source: self.m_source.or(other.m_source),
            m_sink: self.m_sink.or(other.m_sink),
            format: self.format.or(other.format),
            output: self.output.or(other.output),
            golden: self.golden.or(other.golden),
        }
    }

    pub fn from_file(path: &Path) -> Result<Layer, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.into(), source })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub weights: WeightConfig,
    pub seed: u64,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub golden: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 7;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelParams::default(),
            weights: WeightConfig::default(),
            seed: DEFAULT_SEED,
            format: OutputFormat::Json,
            output: None,
            golden: None,
        }
    }
}

impl RunConfig {
    /// Flags over the config file over defaults. `config_path` is the
    /// `--config` flag; without it `$QTWIST_CONFIG` is consulted.
    pub fn resolve(flags: Layer, config_path: Option<&Path>) -> Result<RunConfig, ConfigError> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let path = config_path.map(Path::to_path_buf).or(env_path);
        let file = match path {
            Some(p) => Layer::from_file(&p)?,
            None => Layer::default(),
        };
        Self::from_layer(flags.over(file))
    }

    pub fn from_layer(l: Layer) -> Result<RunConfig, ConfigError> {
        let d = RunConfig::default();
        let cx = |v: Option<ComplexInput>, key, dv| v.map(|c| c.resolve(key)).transpose().map(|o| o.unwrap_or(dv));
        let model = ModelParams {
            q: cx(l.q, "q", d.model.q)?,
            eps: cx(l.eps, "eps", d.model.eps)?,
            u: cx(l.u, "u", d.model.u)?,
            k: cx(l.k, "k", d.model.k)?,
            g: l.g.unwrap_or(d.model.g),
            order_x: l.order_x.unwrap_or(d.model.order_x),
            order_eps: l.order_eps.unwrap_or(d.model.order_eps),
            tol: l.tol.unwrap_or(d.model.tol),
        };
        model.validate().map_err(|e| ConfigError::BadValue { key: "parameters", msg: e.to_string() })?;
        Ok(RunConfig {
            model,
            weights: WeightConfig {
                m_source: l.m_source.unwrap_or(d.weights.m_source),
                m_sink: l.m_sink.unwrap_or(d.weights.m_sink),
            },
            seed: l.seed.unwrap_or(d.seed),
            format: l.format.unwrap_or(d.format),
            output: l.output,
            golden: l.golden,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::from_layer(Layer::default()).unwrap();
        let m = &c.model;
        assert_eq!((m.q, m.eps, m.u, m.k), (C64::new(0.5, 0.0), C64::new(0.2, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.0)));
        assert_eq!((m.g, m.order_x, m.order_eps, m.tol), (2.0, 32, 4, 1e-8));
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), C64::new(0.3, 0.1));
        assert_eq!(parse_complex("0.3, -0.1").unwrap(), C64::new(0.3, -0.1));
        assert_eq!(parse_complex("2").unwrap(), C64::new(2.0, 0.0));
        assert!(parse_complex("abc").is_err());
        let l: Layer = toml::from_str("q = [0.3, 0.1]\neps = \"0.1i\"\nk = 1\n").unwrap();
        let c = RunConfig::from_layer(l).unwrap();
        assert_eq!((c.model.q, c.model.eps, c.model.k), (C64::new(0.3, 0.1), C64::new(0.0, 0.1), C64::new(1.0, 0.0)));
    }

    #[test]
    fn flags_win_over_file() {
        let file: Layer = toml::from_str("q = 0.3\norder_x = 10\n").unwrap();
        let flags = Layer { q: Some(ComplexInput::Real(0.7)), ..Layer::default() };
        let c = RunConfig::from_layer(flags.over(file)).unwrap();
        assert_eq!(c.model.q, C64::new(0.7, 0.0));
        assert_eq!(c.model.order_x, 10);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_domains() {
        assert!(toml::from_str::<Layer>("qq = 1\n").is_err());
        let l = Layer { eps: Some(ComplexInput::Real(1.5)), ..Layer::default() };
        assert!(RunConfig::from_layer(l).is_err());
    }
}
