//! Line-oriented `key = value` run configuration with `[section]` headers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::CliError;

/// Keys accepted in each section.
const KNOWN: &[(&str, &[&str])] = &[
    ("run", &["subcommand", "seed", "out", "workers", "strict"]),
    ("graph", &["family", "radius", "subgroup", "vertex_cap", "vertices", "extra"]),
    ("kernel", &["hold", "weights"]),
    ("walk", &["n_max", "samples"]),
    ("cospectral", &["target", "n_max", "p", "samples", "route", "power", "power_iters"]),
    ("percolation", &["p"]),
    ("scan", &["p_grid", "n_max", "samples", "route", "ram_bracket", "steps", "xi_p", "xi_dist", "xi_samples"]),
    ("two-three", &["relation", "transition", "points", "instances", "k_max", "hold"]),
    ("walk-growth", &["n_max", "graphs"]),
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: BTreeMap<(String, String), String>,
    lines: BTreeMap<(String, String), usize>,
}

impl PartialEq for RunConfig {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CliError::Config { line: line_no, message };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header `{line}`")))?
                    .trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(err(format!("unknown section `{name}`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.as_deref().ok_or_else(|| err(format!("key `{key}` outside a section")))?;
            let allowed = KNOWN.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(err(format!("unknown key `{key}` in section [{sec}]")));
            }
            let id = (sec.to_string(), key.to_string());
            if cfg.entries.contains_key(&id) {
                return Err(err(format!("duplicate key `{key}` in section [{sec}]")));
            }
            cfg.entries.insert(id.clone(), value.to_string());
            cfg.lines.insert(id, line_no);
        }
        Ok(cfg)
    }

    /// Canonical text: sections and keys sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for ((sec, key), value) in &self.entries {
            if current != Some(sec.as_str()) {
                if current.is_some() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                current = Some(sec);
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.entries.insert((section.into(), key.into()), value.into());
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.lines
            .get(&(section.to_string(), key.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// Typed value, `None` when absent.
    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| CliError::Config {
                line: self.line_of(section, key),
                message: format!("[{section}] {key} = `{v}`: {e}"),
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)?.ok_or_else(|| CliError::Config {
            line: 0,
            message: format!("missing [{section}] {key}"),
        })
    }

    /// Comma-separated list of numbers.
    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse().map_err(|e| CliError::Config {
                    line: self.line_of(section, key),
                    message: format!("[{section}] {key}: `{}`: {e}", s.trim()),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    pub fn seed(&self) -> Result<Option<u64>, CliError> {
        self.get("run", "seed")
    }

    pub fn require_seed(&self, what: &str) -> Result<u64, CliError> {
        self.seed()?.ok_or_else(|| CliError::Config {
            line: 0,
            message: format!("{what} is stochastic: [run] seed (or --seed) is required"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let text = "# demo\n[graph]\nradius = 4\nfamily = free(2)\n\n[run]\nseed=3\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.raw("graph", "family"), Some("free(2)"));
        let again = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_text(), c.to_text());
        assert!(c.to_text().starts_with("[graph]\nfamily = free(2)\nradius = 4\n\n[run]\n"));
    }

    #[test]
    fn errors_carry_lines() {
        let e = RunConfig::parse("[graph]\nradius = 4\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, CliError::Config { line: 3, .. }));
        let e = RunConfig::parse("radius = 4\n").unwrap_err();
        assert!(matches!(e, CliError::Config { line: 1, .. }));
        let c = RunConfig::parse("[graph]\n\nradius = x\n").unwrap();
        let e = c.get::<usize>("graph", "radius").unwrap_err();
        assert!(matches!(e, CliError::Config { line: 3, .. }));
    }
}
