//! Scenario configuration in a flat `key = value` text format.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Every
//! key has a single fixed unit:
//!
//! | key | meaning | unit |
//! |-----|---------|------|
//! | `mode` | `cac` or `no_cac` | |
//! | `C` | CAC threshold | connections |
//! | `C_tr` | truncation level without CAC | connections |
//! | `L` | queue capacity | packets |
//! | `A` | per-connection arrival cap | packets/frame |
//! | `S` | allocated subchannels | |
//! | `rho` | connection arrival rate | connections/minute |
//! | `mean_holding` | mean connection duration | minutes |
//! | `frame_ms` | frame duration (optional, 1) | milliseconds |
//! | `q01`, `q10` | MMPP phase switching rates | per frame |
//! | `lambda0`, `lambda1` | per-connection packet rate by phase | packets/frame |
//! | `mean_snr_db` | mean SNR per subchannel | dB |
//! | `fading` | `nakagami` or `deterministic` | |
//! | `nakagami_m` | Nakagami shape (optional, 1) | |
//! | `amc_thresholds_db` | comma-separated SNR thresholds | dB |
//! | `amc_packets` | comma-separated packets per subchannel per rate | packets |
//! | `metric_mode` | `consistent` or `paper_literal` (optional) | |
//! | `solver` | `auto`, `direct` or `power` (optional) | |
//! | `tol` | stationary residual bound (optional, 1e-10) | |
//! | `max_iterations` | power-iteration cap (optional) | |
//! | `state_budget` | largest allowed chain (optional) | states |

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use crate::chain::{SolveMethod, SolveOptions};
use crate::channel::{AmcTable, ChannelModel, Fading};
use crate::error::{Error, Result};
use crate::metrics::MetricMode;
use crate::mmpp::MmppParams;
use crate::traffic::{AdmissionMode, ConnectionParams};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigErrorKind {
    UnknownKey,
    MissingRequiredKey,
    DuplicateKey,
    Malformed(String),
    InvariantViolation(String),
}

/// A problem with one key, with the line it appeared on when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        match &self.kind {
            ConfigErrorKind::UnknownKey => write!(f, "unknown key `{}`", self.key),
            ConfigErrorKind::MissingRequiredKey => write!(f, "missing required key `{}`", self.key),
            ConfigErrorKind::DuplicateKey => write!(f, "duplicate key `{}`", self.key),
            ConfigErrorKind::Malformed(msg) => write!(f, "`{}`: {msg}", self.key),
            ConfigErrorKind::InvariantViolation(msg) => write!(f, "`{}`: {msg}", self.key),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iterations: usize,
    pub state_budget: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverSettings {
            method: o.method,
            tol: o.tol,
            max_iterations: o.max_iterations,
            state_budget: 200_000,
        }
    }
}

impl SolverSettings {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            method: self.method,
            tol: self.tol,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub mode: AdmissionMode,
    /// `C`.
    pub cac_threshold: usize,
    /// `C_tr`.
    pub truncation_level: usize,
    /// `L`.
    pub queue_capacity: usize,
    /// `A`.
    pub arrival_cap: usize,
    /// Connections per minute.
    pub rho: f64,
    /// Minutes.
    pub mean_holding: f64,
    pub frame_ms: f64,
    pub mmpp: MmppParams,
    pub channel: ChannelModel,
    pub amc: AmcTable,
    pub metric_mode: MetricMode,
    pub solver: SolverSettings,
}

struct KeyInfo {
    name: &'static str,
    required: bool,
    comment: &'static str,
}

const KEYS: &[KeyInfo] = &[
    KeyInfo { name: "mode", required: true, comment: "admission policy: cac | no_cac" },
    KeyInfo { name: "C", required: true, comment: "CAC threshold, connections" },
    KeyInfo { name: "C_tr", required: true, comment: "connection truncation level without CAC" },
    KeyInfo { name: "L", required: true, comment: "queue capacity, packets" },
    KeyInfo { name: "A", required: true, comment: "max packets per connection per frame" },
    KeyInfo { name: "S", required: true, comment: "allocated subchannels" },
    KeyInfo { name: "rho", required: true, comment: "connection arrival rate, connections/minute" },
    KeyInfo { name: "mean_holding", required: true, comment: "mean connection duration, minutes" },
    KeyInfo { name: "frame_ms", required: false, comment: "frame duration, milliseconds" },
    KeyInfo { name: "q01", required: true, comment: "MMPP phase 0 -> 1 rate, per frame" },
    KeyInfo { name: "q10", required: true, comment: "MMPP phase 1 -> 0 rate, per frame" },
    KeyInfo { name: "lambda0", required: true, comment: "packets/frame per connection in phase 0" },
    KeyInfo { name: "lambda1", required: true, comment: "packets/frame per connection in phase 1" },
    KeyInfo { name: "mean_snr_db", required: true, comment: "mean SNR per subchannel, dB" },
    KeyInfo { name: "fading", required: true, comment: "nakagami | deterministic" },
    KeyInfo { name: "nakagami_m", required: false, comment: "Nakagami shape m >= 0.5 (1 = Rayleigh)" },
    KeyInfo { name: "amc_thresholds_db", required: true, comment: "rate ID SNR thresholds, dB, increasing" },
    KeyInfo { name: "amc_packets", required: true, comment: "packets per subchannel per frame for each rate ID" },
    KeyInfo { name: "metric_mode", required: false, comment: "consistent | paper_literal" },
    KeyInfo { name: "solver", required: false, comment: "auto | direct | power" },
    KeyInfo { name: "tol", required: false, comment: "stationary residual bound, 1-norm" },
    KeyInfo { name: "max_iterations", required: false, comment: "power iteration cap" },
    KeyInfo { name: "state_budget", required: false, comment: "largest chain the analyzer will build, states" },
];

/// Keys whose values are single numbers and may be swept.
pub fn numeric_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter()
        .map(|k| k.name)
        .filter(|k| !matches!(*k, "mode" | "fading" | "amc_thresholds_db" | "amc_packets" | "metric_mode" | "solver"))
}

fn is_integer_key(key: &str) -> bool {
    matches!(key, "C" | "C_tr" | "L" | "A" | "S" | "max_iterations" | "state_budget")
}

impl SystemConfig {
    /// The reference scenario: 5 subchannels at 5 dB mean SNR, L = 150,
    /// A = 30, 0.4 connections/minute with 10-minute holding, 1 and 2
    /// packets/frame in the two MMPP phases, C = 10 and C_tr = 25. The MMPP
    /// switching rates and the AMC table above rate ID 0 are defaults.
    pub fn reference_defaults() -> Self {
        SystemConfig {
            mode: AdmissionMode::Cac,
            cac_threshold: 10,
            truncation_level: 25,
            queue_capacity: 150,
            arrival_cap: 30,
            rho: 0.4,
            mean_holding: 10.0,
            frame_ms: 1.0,
            mmpp: MmppParams {
                q01: 0.2,
                q10: 0.2,
                lambda0: 1.0,
                lambda1: 2.0,
            },
            channel: ChannelModel {
                mean_snr_db: 5.0,
                fading: Fading::Nakagami { m: 1.0 },
                subchannels: 5,
            },
            amc: AmcTable::default_802_16(),
            metric_mode: MetricMode::Consistent,
            solver: SolverSettings::default(),
        }
    }

    /// `C` under CAC, `C_tr` without.
    pub fn max_connections(&self) -> usize {
        match self.mode {
            AdmissionMode::Cac => self.cac_threshold,
            AdmissionMode::NoCac => self.truncation_level,
        }
    }

    pub fn frame_minutes(&self) -> f64 {
        self.frame_ms / 60_000.0
    }

    pub fn connection_params(&self) -> ConnectionParams {
        ConnectionParams {
            rho: self.rho,
            mean_holding: self.mean_holding,
            frame: self.frame_minutes(),
            threshold: self.max_connections(),
            mode: self.mode,
        }
    }

    pub fn with_mode(&self, mode: AdmissionMode) -> Self {
        SystemConfig {
            mode,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let errors = self.invariant_errors(&BTreeMap::new());
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    fn invariant_errors(&self, lines: &BTreeMap<String, usize>) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        let mut fail = |key: &str, msg: String| {
            errors.push(ConfigError {
                line: lines.get(key).copied(),
                key: key.to_string(),
                kind: ConfigErrorKind::InvariantViolation(msg),
            })
        };
        if self.cac_threshold < 1 {
            fail("C", "must be >= 1".into());
        }
        if self.truncation_level < 1 {
            fail("C_tr", "must be >= 1".into());
        }
        if self.arrival_cap < 1 {
            fail("A", "must be >= 1".into());
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            fail("rho", "must be finite and >= 0".into());
        }
        if !(self.mean_holding > 0.0 && self.mean_holding.is_finite()) {
            fail("mean_holding", "must be finite and > 0".into());
        }
        if !(self.frame_ms > 0.0 && self.frame_ms.is_finite()) {
            fail("frame_ms", "must be finite and > 0".into());
        }
        for (key, v) in [
            ("q01", self.mmpp.q01),
            ("q10", self.mmpp.q10),
            ("lambda0", self.mmpp.lambda0),
            ("lambda1", self.mmpp.lambda1),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                fail(key, "must be finite and >= 0".into());
            }
        }
        if self.mmpp.q01 + self.mmpp.q10 <= 0.0 {
            fail("q10", "q01 + q10 must be positive".into());
        }
        if !self.channel.mean_snr_db.is_finite() {
            fail("mean_snr_db", "must be finite".into());
        }
        if let Fading::Nakagami { m } = self.channel.fading {
            if !(m >= 0.5 && m.is_finite()) {
                fail("nakagami_m", "must be >= 0.5".into());
            }
        }
        if !(self.solver.tol > 0.0) {
            fail("tol", "must be > 0".into());
        }
        if self.solver.max_iterations < 1 {
            fail("max_iterations", "must be >= 1".into());
        }
        errors
    }

    /// Serializes every key, one per line, with unit comments. Parsing the
    /// output yields an identical config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for info in KEYS {
            if let Some(value) = self.value_of(info.name) {
                let _ = writeln!(out, "# {}", info.comment);
                let _ = writeln!(out, "{} = {}", info.name, value);
            }
        }
        out
    }

    /// Annotated file written by `init`.
    pub fn reference_defaults_text() -> String {
        let mut out = String::new();
        out.push_str("# Reference scenario for threshold CAC at an OFDMA subscriber station.\n");
        out.push_str("# Switching rates q01/q10 and the AMC table above rate ID 0 are\n");
        out.push_str("# conventional defaults, not measured values.\n\n");
        out.push_str(&SystemConfig::reference_defaults().to_config_string());
        out
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let join = |v: Vec<String>| v.join(", ");
        Some(match key {
            "mode" => self.mode.as_str().to_string(),
            "C" => self.cac_threshold.to_string(),
            "C_tr" => self.truncation_level.to_string(),
            "L" => self.queue_capacity.to_string(),
            "A" => self.arrival_cap.to_string(),
            "S" => self.channel.subchannels.to_string(),
            "rho" => self.rho.to_string(),
            "mean_holding" => self.mean_holding.to_string(),
            "frame_ms" => self.frame_ms.to_string(),
            "q01" => self.mmpp.q01.to_string(),
            "q10" => self.mmpp.q10.to_string(),
            "lambda0" => self.mmpp.lambda0.to_string(),
            "lambda1" => self.mmpp.lambda1.to_string(),
            "mean_snr_db" => self.channel.mean_snr_db.to_string(),
            "fading" => match self.channel.fading {
                Fading::Deterministic => "deterministic".into(),
                Fading::Nakagami { .. } => "nakagami".into(),
            },
            "nakagami_m" => match self.channel.fading {
                Fading::Nakagami { m } => m.to_string(),
                Fading::Deterministic => return None,
            },
            "amc_thresholds_db" => join(self.amc.thresholds_db().iter().map(f64::to_string).collect()),
            "amc_packets" => join(self.amc.packets_per_rate().iter().map(u32::to_string).collect()),
            "metric_mode" => self.metric_mode.as_str().to_string(),
            "solver" => self.solver.method.as_str().to_string(),
            "tol" => self.solver.tol.to_string(),
            "max_iterations" => self.solver.max_iterations.to_string(),
            "state_budget" => self.solver.state_budget.to_string(),
            _ => return None,
        })
    }

    /// Returns a copy with one numeric key replaced, revalidated.
    pub fn with_override(&self, key: &str, value: f64) -> Result<SystemConfig> {
        if !numeric_keys().any(|k| k == key) {
            return Err(Error::Sweep(format!("`{key}` is not a numeric configuration key")));
        }
        let text = if is_integer_key(key) {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Sweep(format!("`{key}` needs a nonnegative integer, got {value}")));
            }
            format!("{}", value as u64)
        } else {
            value.to_string()
        };
        let mut fields = self.to_fields();
        if key == "nakagami_m" && !fields.contains_key("nakagami_m") {
            return Err(Error::Sweep("nakagami_m applies only to nakagami fading".into()));
        }
        fields.insert(key.to_string(), text);
        let rendered: String = fields.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        parse_config(&rendered)
    }

    fn to_fields(&self) -> BTreeMap<String, String> {
        KEYS.iter()
            .filter_map(|k| self.value_of(k.name).map(|v| (k.name.to_string(), v)))
            .collect()
    }
}

/// Parses and validates a config, reporting every problem found.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut errors = Vec::new();
    let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line_no),
                key: line.to_string(),
                kind: ConfigErrorKind::Malformed("expected `key = value`".into()),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|k| k.name == key) {
            errors.push(ConfigError {
                line: Some(line_no),
                key: key.to_string(),
                kind: ConfigErrorKind::UnknownKey,
            });
            continue;
        }
        if values.contains_key(key) {
            errors.push(ConfigError {
                line: Some(line_no),
                key: key.to_string(),
                kind: ConfigErrorKind::DuplicateKey,
            });
            continue;
        }
        values.insert(key.to_string(), (line_no, value.to_string()));
    }
    for info in KEYS.iter().filter(|k| k.required) {
        if !values.contains_key(info.name) {
            errors.push(ConfigError {
                line: None,
                key: info.name.to_string(),
                kind: ConfigErrorKind::MissingRequiredKey,
            });
        }
    }

    let mut reader = FieldReader {
        values: &values,
        errors: &mut errors,
    };
    let defaults = SolverSettings::default();
    let fading_name: String = reader.parsed("fading", String::new(), |s| match s {
        "nakagami" | "deterministic" => Ok(s.to_string()),
        other => Err(format!("expected nakagami or deterministic, got `{other}`")),
    });
    let m = reader.float("nakagami_m", 1.0);
    let fading = if fading_name == "deterministic" {
        Fading::Deterministic
    } else {
        Fading::Nakagami { m }
    };
    let thresholds = reader.parsed("amc_thresholds_db", Vec::new(), |s| parse_list::<f64>(s));
    let packets = reader.parsed("amc_packets", Vec::new(), |s| parse_list::<u32>(s));
    let config = SystemConfig {
        mode: reader.parsed("mode", AdmissionMode::Cac, |s| s.parse()),
        cac_threshold: reader.count("C", 1),
        truncation_level: reader.count("C_tr", 1),
        queue_capacity: reader.count("L", 0),
        arrival_cap: reader.count("A", 1),
        rho: reader.float("rho", 0.0),
        mean_holding: reader.float("mean_holding", 1.0),
        frame_ms: reader.float("frame_ms", 1.0),
        mmpp: MmppParams {
            q01: reader.float("q01", 1.0),
            q10: reader.float("q10", 1.0),
            lambda0: reader.float("lambda0", 0.0),
            lambda1: reader.float("lambda1", 0.0),
        },
        channel: ChannelModel {
            mean_snr_db: reader.float("mean_snr_db", 0.0),
            fading,
            subchannels: reader.count("S", 0) as u32,
        },
        amc: match AmcTable::new(thresholds.clone(), packets) {
            Ok(t) => t,
            Err(e) => {
                if values.contains_key("amc_thresholds_db") && values.contains_key("amc_packets") && !thresholds.is_empty() {
                    reader.invariant("amc_thresholds_db", e.to_string());
                }
                AmcTable::default_802_16()
            }
        },
        metric_mode: reader.parsed("metric_mode", MetricMode::Consistent, |s| s.parse()),
        solver: SolverSettings {
            method: reader.parsed("solver", defaults.method, |s| s.parse()),
            tol: reader.float("tol", defaults.tol),
            max_iterations: reader.count("max_iterations", defaults.max_iterations),
            state_budget: reader.count("state_budget", defaults.state_budget),
        },
    };
    let lines: BTreeMap<String, usize> = values.iter().map(|(k, (l, _))| (k.clone(), *l)).collect();
    // Only check cross-field invariants on fields that parsed cleanly.
    let bad: Vec<String> = errors.iter().map(|e| e.key.clone()).collect();
    errors.extend(
        config
            .invariant_errors(&lines)
            .into_iter()
            .filter(|e| !bad.contains(&e.key)),
    );
    if errors.is_empty() {
        Ok(config)
    } else {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(Error::Config(errors))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| format!("cannot parse list item `{}`", item.trim()))
        })
        .collect()
}

struct FieldReader<'a> {
    values: &'a BTreeMap<String, (usize, String)>,
    errors: &'a mut Vec<ConfigError>,
}

impl FieldReader<'_> {
    fn parsed<T, E: ToString>(
        &mut self,
        key: &str,
        fallback: T,
        parse: impl FnOnce(&str) -> std::result::Result<T, E>,
    ) -> T {
        let Some((line, raw)) = self.values.get(key) else {
            return fallback;
        };
        match parse(raw) {
            Ok(v) => v,
            Err(e) => {
                self.errors.push(ConfigError {
                    line: Some(*line),
                    key: key.to_string(),
                    kind: ConfigErrorKind::Malformed(e.to_string()),
                });
                fallback
            }
        }
    }

    fn float(&mut self, key: &str, fallback: f64) -> f64 {
        self.parsed(key, fallback, |s| {
            s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`"))
        })
    }

    /// Nonnegative integer; negative values are invariant violations.
    fn count(&mut self, key: &str, fallback: usize) -> usize {
        let Some((line, raw)) = self.values.get(key) else {
            return fallback;
        };
        match raw.parse::<i64>() {
            Ok(v) if v >= 0 => v as usize,
            Ok(v) => {
                self.errors.push(ConfigError {
                    line: Some(*line),
                    key: key.to_string(),
                    kind: ConfigErrorKind::InvariantViolation(format!("must be >= 0, got {v}")),
                });
                fallback
            }
            Err(_) => {
                self.errors.push(ConfigError {
                    line: Some(*line),
                    key: key.to_string(),
                    kind: ConfigErrorKind::Malformed(format!("expected an integer, got `{raw}`")),
                });
                fallback
            }
        }
    }

    fn invariant(&mut self, key: &str, msg: String) {
        self.errors.push(ConfigError {
            line: self.values.get(key).map(|(l, _)| *l),
            key: key.to_string(),
            kind: ConfigErrorKind::InvariantViolation(msg),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config_errors(text: &str) -> Vec<ConfigError> {
        match parse_config(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn reference_defaults_file() {
        let c = parse_config(&SystemConfig::reference_defaults_text()).unwrap();
        assert_eq!(c, SystemConfig::reference_defaults());
        assert_eq!(c.queue_capacity, 150);
        assert_eq!(c.arrival_cap, 30);
        assert_eq!(c.channel.subchannels, 5);
        assert_eq!(c.rho, 0.4);
        assert_eq!(c.mean_holding, 10.0);
        assert_eq!((c.mmpp.lambda0, c.mmpp.lambda1), (1.0, 2.0));
        assert_eq!(c.channel.mean_snr_db, 5.0);
        assert_eq!(c.truncation_level, 25);
    }

    #[test]
    fn empty_file_lists_every_required_key() {
        let errs = config_errors("");
        let missing: Vec<&str> = errs
            .iter()
            .filter(|e| e.kind == ConfigErrorKind::MissingRequiredKey)
            .map(|e| e.key.as_str())
            .collect();
        let required: Vec<&str> = KEYS.iter().filter(|k| k.required).map(|k| k.name).collect();
        assert_eq!(missing, required);
        assert_eq!(errs.len(), required.len());
    }

    #[test]
    fn negative_queue_names_l() {
        let text = SystemConfig::reference_defaults_text().replace("L = 150", "L = -1");
        let errs = config_errors(&text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].key, "L");
        assert!(matches!(errs[0].kind, ConfigErrorKind::InvariantViolation(_)));
        assert!(errs[0].line.is_some());
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let mut text = SystemConfig::reference_defaults_text();
        text.push_str("colour = blue\nrho = 0.5\n");
        let errs = config_errors(&text);
        assert!(errs.iter().any(|e| e.key == "colour" && e.kind == ConfigErrorKind::UnknownKey));
        assert!(errs.iter().any(|e| e.key == "rho" && e.kind == ConfigErrorKind::DuplicateKey));
    }

    #[test]
    fn bad_values_name_their_keys() {
        let text = SystemConfig::reference_defaults_text()
            .replace("mode = cac", "mode = sometimes")
            .replace("nakagami_m = 1", "nakagami_m = 0.2")
            .replace("amc_packets = 1, 2, 3, 4, 6, 8, 9", "amc_packets = 1, 2");
        let errs = config_errors(&text);
        let keys: Vec<&str> = errs.iter().map(|e| e.key.as_str()).collect();
        assert!(keys.contains(&"mode"), "{keys:?}");
        assert!(keys.contains(&"nakagami_m"), "{keys:?}");
        assert!(keys.contains(&"amc_thresholds_db"), "{keys:?}");
    }

    #[test]
    fn override_revalidates() {
        let c = SystemConfig::reference_defaults();
        assert_eq!(c.with_override("rho", 0.7).unwrap().rho, 0.7);
        assert_eq!(c.with_override("C", 12.0).unwrap().cac_threshold, 12);
        assert!(c.with_override("C", 1.5).is_err());
        assert!(c.with_override("fading", 1.0).is_err());
        assert!(c.with_override("mean_holding", -1.0).is_err());
    }

    fn arb_config() -> impl Strategy<Value = SystemConfig> {
        (
            (any::<bool>(), 1usize..40, 1usize..60, 0usize..300, 1usize..40),
            (0.0f64..10.0, 0.01f64..100.0, 0.1f64..10.0),
            (0.0f64..1.0, 0.001f64..1.0, 0.0f64..5.0, 0.0f64..5.0),
            (-10.0f64..40.0, prop::option::of(0.5f64..10.0), 0u32..16),
            (prop::collection::vec(0.1f64..5.0, 1..8), any::<bool>()),
        )
            .prop_map(|(ints, conn, mmpp, chan, amc)| {
                let (cac, c, ctr, l, a) = ints;
                let mut thr = Vec::new();
                let mut acc = -5.0;
                for gap in &amc.0 {
                    acc += gap;
                    thr.push(acc);
                }
                let packets = (1..=thr.len() as u32).collect();
                SystemConfig {
                    mode: if cac { AdmissionMode::Cac } else { AdmissionMode::NoCac },
                    cac_threshold: c,
                    truncation_level: ctr,
                    queue_capacity: l,
                    arrival_cap: a,
                    rho: conn.0,
                    mean_holding: conn.1,
                    frame_ms: conn.2,
                    mmpp: MmppParams { q01: mmpp.0, q10: mmpp.1, lambda0: mmpp.2, lambda1: mmpp.3 },
                    channel: ChannelModel {
                        mean_snr_db: chan.0,
                        fading: chan.1.map_or(Fading::Deterministic, |m| Fading::Nakagami { m }),
                        subchannels: chan.2,
                    },
                    amc: AmcTable::new(thr, packets).unwrap(),
                    metric_mode: if amc.1 { MetricMode::Consistent } else { MetricMode::PaperLiteral },
                    solver: SolverSettings::default(),
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(c in arb_config()) {
            let text = c.to_config_string();
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}
