//! Run configuration: defaults, then a config file, then flags.

use std::path::{Path, PathBuf};

use qosc::export::Format;
use qosc::qcore::defaults;
use qosc::DeformationContext;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub q: f64,
    pub fock_dim: usize,
    pub lattice_depth: usize,
    pub tail_tol: f64,
    pub match_tol: f64,
    pub output_format: Format,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q: 0.5,
            fock_dim: defaults::fock_dim(),
            lattice_depth: defaults::lattice_depth(),
            tail_tol: defaults::tail_tol(),
            match_tol: defaults::match_tol(),
            output_format: Format::Csv,
            output_path: None,
            seed: 0,
        }
    }
}

/// A partial configuration; unset fields keep the value underneath.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub q: Option<f64>,
    #[serde(alias = "fock-dim")]
    pub fock_dim: Option<usize>,
    #[serde(alias = "lattice-depth")]
    pub lattice_depth: Option<usize>,
    #[serde(alias = "tol", alias = "tail-tol")]
    pub tail_tol: Option<f64>,
    #[serde(alias = "match-tol")]
    pub match_tol: Option<f64>,
    #[serde(alias = "format")]
    pub output_format: Option<Format>,
    #[serde(alias = "out")]
    pub output_path: Option<PathBuf>,
    pub seed: Option<i64>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| bad(format!("line {line}: cannot parse `{value}` for `{key}`")))
}

impl ConfigPatch {
    /// Parse `key = value` lines (`#` starts a comment) or a JSON object.
    pub fn parse(text: &str) -> Result<ConfigPatch, CliError> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| bad(format!("config JSON: {e}")));
        }
        let mut patch = ConfigPatch::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(format!("line {line}: expected key=value, got `{content}`")))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim().trim_matches('"');
            match key.as_str() {
                "q" => patch.q = Some(parse_value(&key, value, line)?),
                "fock_dim" => patch.fock_dim = Some(parse_value(&key, value, line)?),
                "lattice_depth" => patch.lattice_depth = Some(parse_value(&key, value, line)?),
                "tail_tol" | "tol" => patch.tail_tol = Some(parse_value(&key, value, line)?),
                "match_tol" => patch.match_tol = Some(parse_value(&key, value, line)?),
                "output_format" | "format" => {
                    patch.output_format = Some(value.parse().map_err(|e: qosc::Error| bad(format!("line {line}: {e}")))?)
                }
                "output_path" | "out" => patch.output_path = Some(PathBuf::from(value)),
                "seed" => patch.seed = Some(parse_value(&key, value, line)?),
                other => return Err(bad(format!("line {line}: unknown key `{other}`"))),
            }
        }
        Ok(patch)
    }

    pub fn from_file(path: &Path) -> Result<ConfigPatch, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ConfigPatch::parse(&text)
    }
}

impl RunConfig {
    /// Overlay `patch`, checking the seed sign.
    pub fn apply(mut self, patch: ConfigPatch) -> Result<RunConfig, CliError> {
        if let Some(v) = patch.q {
            self.q = v;
        }
        if let Some(v) = patch.fock_dim {
            self.fock_dim = v;
        }
        if let Some(v) = patch.lattice_depth {
            self.lattice_depth = v;
        }
        if let Some(v) = patch.tail_tol {
            self.tail_tol = v;
        }
        if let Some(v) = patch.match_tol {
            self.match_tol = v;
        }
        if let Some(v) = patch.output_format {
            self.output_format = v;
        }
        if let Some(v) = patch.output_path {
            self.output_path = Some(v);
        }
        if let Some(v) = patch.seed {
            self.seed = u64::try_from(v).map_err(|_| bad(format!("seed must be non-negative, got {v}")))?;
        }
        Ok(self)
    }

    /// The validated deformation context.
    pub fn context(&self) -> Result<DeformationContext, CliError> {
        Ok(DeformationContext::new(self.q)?
            .with_fock_dim(self.fock_dim)?
            .with_lattice_depth(self.lattice_depth)?
            .with_tail_tol(self.tail_tol)?
            .with_match_tol(self.match_tol)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = ConfigPatch::parse("# run\nq = 0.8\nfock-dim=120\nformat = json\nseed=7 # trailing\n").unwrap();
        let js = ConfigPatch::parse(r#"{"q": 0.8, "fock_dim": 120, "output_format": "json", "seed": 7}"#).unwrap();
        assert_eq!(kv, js);
        let cfg = RunConfig::default().apply(kv).unwrap();
        assert_eq!(cfg.q, 0.8);
        assert_eq!(cfg.fock_dim, 120);
        assert_eq!(cfg.output_format, Format::Json);
        assert_eq!(cfg.lattice_depth, 32);
    }

    #[test]
    fn rejects_unknown_keys_and_negative_seed() {
        assert!(ConfigPatch::parse("qq = 0.5").is_err());
        assert!(ConfigPatch::parse("q 0.5").is_err());
        assert!(ConfigPatch::parse(r#"{"depth": 3}"#).is_err());
        let patch = ConfigPatch::parse("seed = -1").unwrap();
        assert!(RunConfig::default().apply(patch).is_err());
    }

    #[test]
    fn invalid_q_is_named() {
        for q in [0.0, 1.0, -0.2, 1.5] {
            let cfg = RunConfig { q, ..RunConfig::default() };
            let msg = cfg.context().unwrap_err().to_string();
            assert!(msg.contains("q"), "{msg}");
            assert!(msg.contains("(0, 1)"), "{msg}");
        }
    }
}
