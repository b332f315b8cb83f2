//! Plain-text `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::resonator::{build_params, Mode, Overrides, ResonatorParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub overrides: Overrides,
    pub workers: Option<usize>,
    /// Target accuracy for certified analytic evaluations.
    pub accuracy: f64,
    pub output: PathBuf,
    pub seed: u64,
    pub trials: u64,
    pub timing: bool,
    pub max_d: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Explicit,
            a: 1.0 / 9.0,
            d: 1e6,
            overrides: Overrides {
                l: Some(2.0),
                x: Some(200.0),
                ..Default::default()
            },
            workers: None,
            accuracy: 1e-6,
            output: PathBuf::from("reslab-out"),
            seed: 20_240_601,
            trials: 100,
            timing: false,
            max_d: 1e8,
        }
    }
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_f64(field: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| config_err(field, format!("not a number: {v:?}")))?;
    if !x.is_finite() {
        return Err(config_err(field, "must be finite"));
    }
    Ok(x)
}

fn parse_u64(field: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| config_err(field, format!("not a non-negative integer: {v:?}")))
}

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(field, format!("expected true or false, got {v:?}"))),
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults, except that any explicit override clears the default
    /// L and x.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut overrides = Overrides::default();
        let mut any_override = false;
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(&format!("line {}", lineno + 1), "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(config_err(key, "given more than once"));
            }
            match key {
                "mode" => {
                    cfg.mode = match value {
                        "asymptotic" => Mode::Asymptotic,
                        "explicit" => Mode::Explicit,
                        _ => return Err(config_err(key, format!("expected asymptotic or explicit, got {value:?}"))),
                    }
                }
                "a" => cfg.a = parse_f64(key, value)?,
                "D" => cfg.d = parse_f64(key, value)?,
                "L" | "pminus_lo" | "pminus_hi" | "B" | "x" | "Z" => {
                    let v = Some(parse_f64(key, value)?);
                    any_override = true;
                    match key {
                        "L" => overrides.l = v,
                        "pminus_lo" => overrides.pminus_lo = v,
                        "pminus_hi" => overrides.pminus_hi = v,
                        "B" => overrides.b = v,
                        "x" => overrides.x = v,
                        _ => overrides.z = v,
                    }
                }
                "workers" => {
                    let w = parse_u64(key, value)?;
                    if w == 0 {
                        return Err(config_err(key, "must be positive"));
                    }
                    cfg.workers = Some(w as usize);
                }
                "accuracy" => {
                    let v = parse_f64(key, value)?;
                    if !(v > 0.0 && v < 1.0) {
                        return Err(config_err(key, "must lie in (0, 1)"));
                    }
                    cfg.accuracy = v;
                }
                "output" => cfg.output = PathBuf::from(value),
                "seed" => cfg.seed = parse_u64(key, value)?,
                "trials" => cfg.trials = parse_u64(key, value)?,
                "timing" => cfg.timing = parse_bool(key, value)?,
                "max_d" => cfg.max_d = parse_f64(key, value)?,
                _ => return Err(config_err(key, "unknown key")),
            }
        }
        if any_override || cfg.mode == Mode::Asymptotic {
            cfg.overrides = overrides;
        }
        cfg.params()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mode = match self.mode {
            Mode::Asymptotic => "asymptotic",
            Mode::Explicit => "explicit",
        };
        let _ = writeln!(s, "mode = {mode}");
        let _ = writeln!(s, "a = {:?}", self.a);
        let _ = writeln!(s, "D = {:?}", self.d);
        let o = &self.overrides;
        for (k, v) in [
            ("L", o.l),
            ("pminus_lo", o.pminus_lo),
            ("pminus_hi", o.pminus_hi),
            ("B", o.b),
            ("x", o.x),
            ("Z", o.z),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        if let Some(w) = self.workers {
            let _ = writeln!(s, "workers = {w}");
        }
        let _ = writeln!(s, "accuracy = {:?}", self.accuracy);
        let _ = writeln!(s, "output = {}", self.output.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "timing = {}", self.timing);
        let _ = writeln!(s, "max_d = {:?}", self.max_d);
        s
    }

    pub fn params(&self) -> Result<ResonatorParams> {
        if !(self.d.is_finite() && self.d >= 2.0) {
            return Err(config_err("D", "must be at least 2"));
        }
        build_params(self.a, self.d, self.mode, &self.overrides)
    }

    /// sha256 of the fields that determine computed values.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.output = PathBuf::new();
        c.timing = false;
        hex::encode(Sha256::digest(c.emit().as_bytes()))
    }
}

/// Worker count: RESLAB_WORKERS, then the config, then machine parallelism.
pub fn resolve_workers(cfg: &RunConfig, env: Option<&str>) -> Result<usize> {
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(config_err("RESLAB_WORKERS", format!("must be a positive integer, got {v:?}"))),
        };
    }
    Ok(cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_the_desk_config() {
        let c = RunConfig::parse("").unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.l, 2.0);
        assert_eq!(p.x, 200.0);
        assert_eq!(p.b, 200.0);
    }

    #[test]
    fn round_trip() {
        let text = "mode = explicit\na = 0.1\nD = 50000\nL = 1.45 # small band\nx = 20\nB = 20\nworkers = 3\nseed = 7\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.overrides.l, Some(1.45));
        assert_eq!(c.workers, Some(3));
        let again = RunConfig::parse(&c.emit()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.digest(), again.digest());
        let mut w = c.clone();
        w.workers = Some(9);
        assert_eq!(w.digest(), c.digest());
    }

    #[test]
    fn errors_name_the_field() {
        for (text, field) in [
            ("a = abc", "a"),
            ("bogus = 1", "bogus"),
            ("workers = 0", "workers"),
            ("mode = fast", "mode"),
            ("a = 1\na = 2", "a"),
            ("D = 1", "D"),
        ] {
            match RunConfig::parse(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(RunConfig::parse("a = 0.3"), Err(Error::ParamOutOfRange { .. })));
        assert!(matches!(
            RunConfig::parse("mode = asymptotic\na = 0.2\nD = 1e6"),
            Err(Error::DegenerateSchedule { .. })
        ));
    }

    #[test]
    fn worker_resolution() {
        let c = RunConfig::parse("workers = 4").unwrap();
        assert_eq!(resolve_workers(&c, None).unwrap(), 4);
        assert_eq!(resolve_workers(&c, Some("2")).unwrap(), 2);
        assert!(resolve_workers(&c, Some("0")).is_err());
        assert!(resolve_workers(&c, Some("many")).is_err());
    }

    proptest! {
        #[test]
        fn emit_parse_identity(l in 1.3f64..3.0, x in 20f64..400.0, seed in any::<u64>(), trials in 1u64..500) {
            let mut c = RunConfig::default();
            c.overrides = Overrides { l: Some(l), x: Some(x), ..Default::default() };
            c.seed = seed;
            c.trials = trials;
            if c.params().is_ok() {
                prop_assert_eq!(RunConfig::parse(&c.emit()).unwrap(), c);
            }
        }
    }
}
