//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ned_core::lookup::{CandidateMode, FuzzOptions, HeurConfig};
use ned_core::par::Execution;
use ned_core::wordexpert::{MatchMode, ResolveConfig, SpanMode, TrainConfig};

use crate::CliError;

pub const PATH_KEYS: &[&str] = &[
    "pages",
    "redirects",
    "links",
    "kb",
    "corpus",
    "queries",
    "gold",
    "docs",
    "annotations",
    "canonical",
    "dictionary",
    "models",
    "answers",
    "ranked",
];

const VALUE_KEYS: &[&str] = &[
    "cascade",
    "span_mode",
    "match_mode",
    "classifier",
    "expand",
    "heur_max_total_links",
    "heur_max_string_links",
    "heur_min_score",
    "heur_max_edit_ratio",
    "heur_short_len",
    "fuzz_max_distance",
    "l2_strength",
    "max_iterations",
    "tolerance",
    "workers",
];

fn is_known(key: &str) -> bool {
    PATH_KEYS.contains(&key) || VALUE_KEYS.contains(&key)
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !is_known(k) {
            return Err(CliError::Usage(format!(
                "{origin}:{}: unknown config key {k:?}",
                i + 1
            )));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    paths: BTreeMap<String, PathBuf>,
    pub cascade: CandidateMode,
    pub span_mode: SpanMode,
    pub match_mode: MatchMode,
    pub classifier: bool,
    pub expand: bool,
    pub heur: HeurConfig,
    pub fuzz_max_distance: Option<usize>,
    pub train: TrainConfig,
    pub workers: Option<usize>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid boolean {v:?} for {key}"))),
    }
}

impl RunConfig {
    /// Layers `file` under `flags` over the defaults.
    pub fn resolve(
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let mut merged = file;
        merged.extend(flags);
        let mut cfg = RunConfig {
            paths: BTreeMap::new(),
            cascade: CandidateMode::Lnrm,
            span_mode: SpanMode::T100,
            match_mode: MatchMode::Lex,
            classifier: true,
            expand: false,
            heur: HeurConfig::default(),
            fuzz_max_distance: None,
            train: TrainConfig::default(),
            workers: None,
        };
        for (k, v) in &merged {
            let k = k.as_str();
            match k {
                _ if PATH_KEYS.contains(&k) => {
                    cfg.paths.insert(k.to_string(), PathBuf::from(v));
                }
                "cascade" => {
                    cfg.cascade = CandidateMode::parse(v).ok_or_else(|| {
                        CliError::Usage(format!(
                            "cascade must be EXCT, LNRM, FUZZ or HEUR, got {v:?}"
                        ))
                    })?
                }
                "span_mode" => {
                    cfg.span_mode = SpanMode::parse(v).ok_or_else(|| {
                        CliError::Usage(format!("span_mode must be T100, SENT or PARA, got {v:?}"))
                    })?
                }
                "match_mode" => {
                    cfg.match_mode = MatchMode::parse(v).ok_or_else(|| {
                        CliError::Usage(format!("match_mode must be LEX or SENSE, got {v:?}"))
                    })?
                }
                "classifier" => cfg.classifier = parse_bool(k, v)?,
                "expand" => cfg.expand = parse_bool(k, v)?,
                "heur_max_total_links" => cfg.heur.max_total_links = parse(k, v)?,
                "heur_max_string_links" => cfg.heur.max_string_links = parse(k, v)?,
                "heur_min_score" => cfg.heur.min_score = parse(k, v)?,
                "heur_max_edit_ratio" => cfg.heur.max_edit_ratio = parse(k, v)?,
                "heur_short_len" => cfg.heur.short_len = parse(k, v)?,
                "fuzz_max_distance" => cfg.fuzz_max_distance = Some(parse(k, v)?),
                "l2_strength" => {
                    let l2: f64 = parse(k, v)?;
                    if !(l2 > 0.0 && l2.is_finite()) {
                        return Err(CliError::Usage("l2_strength must be positive".into()));
                    }
                    cfg.train.l2_strength = l2;
                }
                "max_iterations" => cfg.train.max_iterations = parse(k, v)?,
                "tolerance" => cfg.train.tolerance = parse(k, v)?,
                "workers" => {
                    let n: usize = parse(k, v)?;
                    if n == 0 {
                        return Err(CliError::Usage("workers must be at least 1".into()));
                    }
                    cfg.workers = Some(n);
                }
                _ => return Err(CliError::Usage(format!("unknown config key {k:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    /// Path for an input that must exist.
    pub fn input(&self, key: &str) -> Result<&Path, CliError> {
        let p = self.path(key).ok_or_else(|| {
            CliError::Usage(format!(
                "missing required setting {key} (flag --{key} or config key)"
            ))
        })?;
        if !p.exists() {
            return Err(CliError::Usage(format!(
                "{key}: {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    }

    pub fn read(&self, key: &str) -> Result<String, CliError> {
        let p = self.input(key)?;
        fs::read_to_string(p).map_err(|e| CliError::Io(p.to_path_buf(), e))
    }

    pub fn read_optional(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.path(key) {
            Some(_) => self.read(key).map(Some),
            None => Ok(None),
        }
    }

    pub fn execution(&self) -> Execution {
        match self.workers {
            Some(1) => Execution::Sequential,
            _ => Execution::Parallel,
        }
    }

    pub fn fuzz(&self) -> FuzzOptions {
        FuzzOptions {
            max_distance: self.fuzz_max_distance,
            exec: self.execution(),
        }
    }

    pub fn resolve_config(&self) -> ResolveConfig {
        ResolveConfig {
            span_mode: self.span_mode,
            use_classifier: self.classifier,
            expand: self.expand,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn flags_override_file_over_defaults() {
        let file = parse_kv(
            "# comment\ncascade = HEUR\nl2_strength=2\nspan_mode = sent\n",
            "cfg",
        )
        .unwrap();
        let cfg = RunConfig::resolve(file, kv(&[("cascade", "EXCT")])).unwrap();
        assert_eq!(cfg.cascade, CandidateMode::Exct);
        assert_eq!(cfg.train.l2_strength, 2.0);
        assert_eq!(cfg.span_mode, SpanMode::Sent);
        assert_eq!(cfg.match_mode, MatchMode::Lex);
        assert_eq!(cfg.heur, HeurConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse_kv("nonsense\n", "cfg").is_err());
        assert!(parse_kv("colour = red\n", "cfg").is_err());
        for (k, v) in [
            ("cascade", "GOOG"),
            ("workers", "0"),
            ("l2_strength", "-1"),
            ("classifier", "maybe"),
        ] {
            assert!(
                RunConfig::resolve(kv(&[(k, v)]), BTreeMap::new()).is_err(),
                "{k}={v}"
            );
        }
    }
}
