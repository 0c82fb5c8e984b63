//! Flat `key = value` scenario files and live-trial snapshots.
//!
//! ```text
//! # tutoring scenario
//! truth.m = 6
//! truth.b = 1
//! truth.noise_std = 0.1
//! kernel.length_scale = 2
//! weights.lambda1 = 30
//! weights.lambda2 = 10
//! domain.lo = 0
//! domain.hi = 12
//! budget = 12
//! seed = 42
//! warm_start = prior_data.csv
//! ```
//!
//! `grid.step` (0.01) and `kernel.signal_amplitude` (1) are optional; every
//! other key is required. Warm-start data may be given as a path to an `x,y`
//! CSV (resolved against the config's directory) or inline as a
//! `[warm_start]` block of `x,y` lines. Live snapshots append a
//! `live.pending_x` key and an `[observations]` block.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::acquisition::UtilityWeights;
use crate::gp::{KernelSpec, ObservationSet};
use crate::trial::{GroundTruth, LiveState, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: `{key}`: {message}")]
    Parse { line: usize, key: String, message: String },

    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn parse(line: usize, key: &str, message: impl Into<String>) -> Self {
        ConfigError::Parse {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn validation(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

const REQUIRED: [&str; 10] = [
    "truth.m",
    "truth.b",
    "truth.noise_std",
    "kernel.length_scale",
    "weights.lambda1",
    "weights.lambda2",
    "domain.lo",
    "domain.hi",
    "budget",
    "seed",
];
const OPTIONAL: [&str; 3] = ["kernel.signal_amplitude", "grid.step", "warm_start"];
const LIVE_PENDING: &str = "live.pending_x";
const WARM_SECTION: &str = "warm_start";
const OBS_SECTION: &str = "observations";

#[derive(Debug, Default)]
struct RawDocument {
    values: BTreeMap<String, (usize, String)>,
    sections: BTreeMap<String, Vec<(usize, f64, f64)>>,
}

fn parse_pair(line: usize, text: &str, what: &str) -> Result<(f64, f64), ConfigError> {
    let mut parts = text.split(',').map(str::trim);
    let (Some(x), Some(y), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(ConfigError::parse(line, what, format!("expected `x,y`, found `{text}`")));
    };
    let num = |s: &str| -> Result<f64, ConfigError> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ConfigError::parse(line, what, format!("`{s}` is not a finite number")))
    };
    Ok((num(x)?, num(y)?))
}

fn tokenize(text: &str, allowed_keys: &[&str], allowed_sections: &[&str]) -> Result<RawDocument, ConfigError> {
    let mut doc = RawDocument::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !allowed_sections.contains(&name) {
                return Err(ConfigError::parse(line, name, "unknown section"));
            }
            if doc.sections.contains_key(name) {
                return Err(ConfigError::parse(line, name, "duplicate section"));
            }
            doc.sections.insert(name.to_string(), Vec::new());
            section = Some(name.to_string());
            continue;
        }
        if let Some(name) = &section {
            if content == "x,y" {
                continue;
            }
            let (x, y) = parse_pair(line, content, name)?;
            doc.sections.get_mut(name).expect("section registered").push((line, x, y));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::parse(line, content, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if !allowed_keys.contains(&key) {
            return Err(ConfigError::parse(line, key, "unknown key"));
        }
        if doc.values.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::parse(line, key, "duplicate key"));
        }
    }
    Ok(doc)
}

impl RawDocument {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn require(&self, key: &str) -> Result<&(usize, String), ConfigError> {
        self.raw(key)
            .ok_or_else(|| ConfigError::validation(key, "missing required key"))
    }

    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        let (line, v) = self.require(key)?;
        parse_real(*line, key, v)
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            Some((line, v)) => parse_real(*line, key, v),
            None => Ok(default),
        }
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let (line, v) = self.require(key)?;
        v.parse()
            .map_err(|_| ConfigError::parse(*line, key, format!("`{v}` is not a non-negative integer")))
    }

    fn observations(&self, section: &str) -> Result<Option<ObservationSet>, ConfigError> {
        let Some(rows) = self.sections.get(section) else {
            return Ok(None);
        };
        let mut set = ObservationSet::new();
        for &(line, x, y) in rows {
            set.push(x, y)
                .map_err(|e| ConfigError::parse(line, section, e.to_string()))?;
        }
        Ok(Some(set))
    }
}

fn parse_real(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let parsed: f64 = v
        .parse()
        .map_err(|_| ConfigError::parse(line, key, format!("`{v}` is not a number")))?;
    if parsed.is_finite() {
        Ok(parsed)
    } else {
        Err(ConfigError::parse(line, key, format!("`{v}` is not finite")))
    }
}

/// Reads a two-column `x,y` CSV with an optional header line.
pub fn read_observations_csv(text: &str) -> Result<ObservationSet, ConfigError> {
    let mut set = ObservationSet::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') || (i == 0 && content == "x,y") {
            continue;
        }
        let (x, y) = parse_pair(i + 1, content, "warm_start")?;
        set.push(x, y)
            .map_err(|e| ConfigError::parse(i + 1, "warm_start", e.to_string()))?;
    }
    Ok(set)
}

fn scenario_from(doc: &RawDocument, base_dir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    for key in REQUIRED {
        doc.require(key)?;
    }

    let inline = doc.observations(WARM_SECTION)?;
    let from_file = match doc.raw("warm_start") {
        Some((line, path)) => {
            if inline.is_some() {
                return Err(ConfigError::parse(
                    *line,
                    "warm_start",
                    "give warm-start data either as a path or as a [warm_start] block, not both",
                ));
            }
            let path = match base_dir {
                Some(dir) => dir.join(path),
                None => PathBuf::from(path),
            };
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            Some(read_observations_csv(&text)?)
        }
        None => None,
    };

    let config = ScenarioConfig {
        truth: GroundTruth {
            midpoint: doc.real("truth.m")?,
            intercept: doc.real("truth.b")?,
            noise_std: doc.real("truth.noise_std")?,
        },
        kernel: KernelSpec {
            length_scale: doc.real("kernel.length_scale")?,
            signal_amplitude: doc.real_or("kernel.signal_amplitude", 1.0)?,
        },
        weights: UtilityWeights {
            lambda1: doc.real("weights.lambda1")?,
            lambda2: doc.real("weights.lambda2")?,
        },
        domain_lo: doc.real("domain.lo")?,
        domain_hi: doc.real("domain.hi")?,
        budget: doc.integer("budget")?,
        grid_step: doc.real_or("grid.step", 0.01)?,
        seed: doc.integer("seed")?,
        warm_start: inline.or(from_file),
    };
    config
        .validate()
        .map_err(|e| ConfigError::validation(&e.field, e.reason))?;
    Ok(config)
}

fn config_keys() -> Vec<&'static str> {
    REQUIRED.iter().chain(OPTIONAL.iter()).copied().collect()
}

/// Parses and validates a scenario. Relative `warm_start` paths resolve
/// against `base_dir` when given.
pub fn parse_config_in(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    let doc = tokenize(text, &config_keys(), &[WARM_SECTION])?;
    scenario_from(&doc, base_dir)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_in(text, None)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_in(&text, path.parent())
}

fn write_block(out: &mut String, name: &str, set: &ObservationSet) {
    out.push_str(&format!("[{name}]\nx,y\n"));
    for p in set.points() {
        out.push_str(&format!("{},{}\n", p.x, p.y));
    }
}

/// Serializes a scenario; warm-start data is written inline.
pub fn to_config_text(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    kv("truth.m", config.truth.midpoint.to_string());
    kv("truth.b", config.truth.intercept.to_string());
    kv("truth.noise_std", config.truth.noise_std.to_string());
    kv("kernel.length_scale", config.kernel.length_scale.to_string());
    kv("kernel.signal_amplitude", config.kernel.signal_amplitude.to_string());
    kv("weights.lambda1", config.weights.lambda1.to_string());
    kv("weights.lambda2", config.weights.lambda2.to_string());
    kv("domain.lo", config.domain_lo.to_string());
    kv("domain.hi", config.domain_hi.to_string());
    kv("budget", config.budget.to_string());
    kv("grid.step", config.grid_step.to_string());
    kv("seed", config.seed.to_string());
    if let Some(warm) = &config.warm_start {
        write_block(&mut out, WARM_SECTION, warm);
    }
    out
}

pub fn to_live_snapshot(state: &LiveState) -> String {
    let mut out = to_config_text(&state.config);
    // Keys must precede blocks, so splice the pending dose in before any block.
    let split = out.find('[').unwrap_or(out.len());
    if let Some(x) = state.pending_x {
        out.insert_str(split, &format!("{LIVE_PENDING} = {x}\n"));
    }
    write_block(&mut out, OBS_SECTION, &state.observations);
    out
}

pub fn parse_live_snapshot(text: &str) -> Result<LiveState, ConfigError> {
    let mut keys = config_keys();
    keys.push(LIVE_PENDING);
    let doc = tokenize(text, &keys, &[WARM_SECTION, OBS_SECTION])?;
    let config = scenario_from(&doc, None)?;
    let observations = doc.observations(OBS_SECTION)?.unwrap_or_default();
    let pending_x = match doc.raw(LIVE_PENDING) {
        Some((line, v)) => Some(parse_real(*line, LIVE_PENDING, v)?),
        None => None,
    };
    if observations.len() > config.budget {
        return Err(ConfigError::validation(OBS_SECTION, "more observations than the budget"));
    }
    if pending_x.is_none() && observations.len() < config.budget {
        return Err(ConfigError::validation(LIVE_PENDING, "unfinished trial has no pending dose"));
    }
    if pending_x.is_some() && observations.len() >= config.budget {
        return Err(ConfigError::validation(LIVE_PENDING, "completed trial cannot have a pending dose"));
    }
    if let Some(x) = pending_x {
        if !(config.domain_lo..=config.domain_hi).contains(&x) {
            return Err(ConfigError::validation(LIVE_PENDING, format!("dose {x} outside the domain")));
        }
    }
    Ok(LiveState {
        config,
        observations,
        pending_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = include_str!("../configs/paper.cfg");

    #[test]
    fn reference_scenario() {
        let cfg = parse_config(REFERENCE).unwrap();
        let expected = ScenarioConfig {
            seed: cfg.seed,
            ..ScenarioConfig::default()
        };
        assert_eq!(cfg, expected);
        assert_eq!(cfg.truth.midpoint, 6.0);
        assert_eq!(cfg.kernel.length_scale, 2.0);
        assert_eq!((cfg.weights.lambda1, cfg.weights.lambda2), (30.0, 10.0));
        assert_eq!(cfg.budget, 12);
    }

    #[test]
    fn missing_budget_named() {
        let text: String = REFERENCE
            .lines()
            .filter(|l| !l.starts_with("budget"))
            .map(|l| format!("{l}\n"))
            .collect();
        match parse_config(&text) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "budget"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_domain_rejected() {
        let text = REFERENCE
            .replace("domain.lo = 0", "domain.lo = 12")
            .replace("domain.hi = 12", "domain.hi = 0");
        assert!(matches!(parse_config(&text), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn unknown_key_and_bad_value_report_line() {
        let err = parse_config(&format!("{REFERENCE}\nbogus = 1\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { ref key, .. } if key == "bogus"));
        let err = parse_config(&REFERENCE.replace("truth.b = 1", "truth.b = one")).unwrap_err();
        match err {
            ConfigError::Parse { line, key, .. } => {
                assert_eq!(key, "truth.b");
                assert!(line > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inline_warm_start_round_trips() {
        let cfg = ScenarioConfig {
            warm_start: Some(ObservationSet::from_pairs([(1.5, 1.01), (6.0, 1.5)]).unwrap()),
            ..ScenarioConfig::default()
        };
        let text = to_config_text(&cfg);
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn warm_start_file_resolves_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("warm.csv"), "x,y\n2,1.1\n7,1.7\n").unwrap();
        let path = dir.path().join("s.cfg");
        std::fs::write(&path, format!("{REFERENCE}warm_start = warm.csv\n")).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.warm_start.unwrap().len(), 2);
    }

    #[test]
    fn snapshot_requires_consistent_pending_state() {
        let cfg = ScenarioConfig::default();
        let state = LiveState {
            config: cfg,
            observations: ObservationSet::new(),
            pending_x: None,
        };
        assert!(parse_live_snapshot(&to_live_snapshot(&state)).is_err());
    }
}
