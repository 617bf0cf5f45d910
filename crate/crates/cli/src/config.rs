//! Run configuration: a single JSON document describing one run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sticky_heat::stochastic::{McMethod, MIN_PATHS};
use sticky_heat::{InitialData, Profile, Regime, TimeGrid};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Sigma,
    Limit,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub graded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub method: McMethod,
    pub seed: u64,
    /// Start point of the estimate.
    pub r: f64,
    /// Time of the estimate.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdBlock {
    pub n_space: usize,
    pub n_time: usize,
}

impl Default for FdBlock {
    fn default() -> Self {
        FdBlock {
            n_space: 400,
            n_time: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probes {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub lattice_sizes: Vec<usize>,
    #[serde(default = "default_lt_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Start point and horizon of the local-time statistic.
    #[serde(default = "default_lt_r")]
    pub r: f64,
    #[serde(default = "default_lt_t")]
    pub t: f64,
}

fn default_lt_r() -> f64 {
    0.5
}

fn default_lt_t() -> f64 {
    1.0
}

fn default_lt_paths() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub regime: RegimeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub u0: Profile,
    pub v0_minus: f64,
    pub v0_plus: f64,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdBlock>,
    #[serde(default)]
    pub outputs: OutputConfig,
    pub probes: Probes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeConfig>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| bad(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn regime(&self) -> Regime {
        match self.regime {
            RegimeKind::Sigma => Regime::Sigma(self.sigma.unwrap_or(f64::NAN)),
            RegimeKind::Limit => Regime::Limit,
            RegimeKind::Dirichlet => Regime::Dirichlet,
        }
    }

    pub fn initial_data(&self) -> Result<InitialData, CliError> {
        InitialData::new(self.u0.clone(), self.v0_minus, self.v0_plus)
            .map_err(|e| bad(e.to_string()))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.grid.t_max, self.grid.n_steps, self.grid.graded)
            .map_err(|e| bad(e.to_string()))
    }

    pub fn fd_block(&self) -> FdBlock {
        self.fd.clone().unwrap_or_default()
    }

    pub fn writes(&self, f: Format) -> bool {
        self.outputs.formats.contains(&f)
    }

    /// Replaces every seed in the config.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(mc) = self.mc.as_mut() {
            mc.seed = seed;
        }
        if let Some(c) = self.converge.as_mut() {
            c.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (self.regime, self.sigma) {
            (RegimeKind::Sigma, None) => return Err(bad("regime 'sigma' requires a value for sigma")),
            (RegimeKind::Sigma, Some(s)) if !(s > 0.0 && s.is_finite()) => {
                return Err(bad(format!("sigma = {s} must be positive")))
            }
            (RegimeKind::Limit | RegimeKind::Dirichlet, Some(_)) => {
                return Err(bad("sigma is only allowed with regime 'sigma'"))
            }
            _ => {}
        }
        self.initial_data()?;
        self.time_grid()?;
        if self.grid.n_steps < 8 {
            return Err(bad("grid.n_steps must be at least 8"));
        }
        let t_max = self.grid.t_max;
        if self.probes.times.is_empty() || self.probes.positions.is_empty() {
            return Err(bad("probes need at least one time and one position"));
        }
        if let Some(t) = self.probes.times.iter().find(|t| !(**t > 0.0 && **t <= t_max)) {
            return Err(bad(format!("probe time {t} is outside (0, {t_max}]")));
        }
        if let Some(r) = self.probes.positions.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(bad(format!("probe position {r} is outside [0, 1]")));
        }
        if let Some(mc) = &self.mc {
            if mc.n_paths < MIN_PATHS {
                return Err(bad(format!(
                    "mc.n_paths = {} is below the minimum of {MIN_PATHS}",
                    mc.n_paths
                )));
            }
            mc.method.validate().map_err(|e| bad(e.to_string()))?;
            if !(0.0..=1.0).contains(&mc.r) {
                return Err(bad(format!("mc.r = {} is outside [0, 1]", mc.r)));
            }
            if !(mc.t > 0.0 && mc.t <= t_max) {
                return Err(bad(format!("mc.t = {} is outside (0, {t_max}]", mc.t)));
            }
        }
        if let Some(fd) = &self.fd {
            if fd.n_space < 8 || fd.n_time < 8 {
                return Err(bad("fd.n_space and fd.n_time must be at least 8"));
            }
        }
        if let Some(c) = &self.converge {
            if let Some(s) = c.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                return Err(bad(format!("converge sigma {s} must be positive")));
            }
            if let Some(n) = c.lattice_sizes.iter().find(|n| **n < 2) {
                return Err(bad(format!("lattice size {n} must be at least 2")));
            }
            if !c.lattice_sizes.is_empty() && c.lattice_sizes.len() < 3 {
                return Err(bad("the local-time table needs at least three lattice sizes"));
            }
            if c.sigmas.is_empty() && c.lattice_sizes.is_empty() {
                return Err(bad("converge needs sigmas or lattice_sizes"));
            }
            if !(0.0..=1.0).contains(&c.r) || !(c.t > 0.0 && c.t.is_finite()) {
                return Err(bad(format!("converge needs r in [0, 1] and t > 0, got r = {}, t = {}", c.r, c.t)));
            }
            if c.n_paths < 2 {
                return Err(bad("converge.n_paths must be at least 2"));
            }
        }
        if self.outputs.formats.is_empty() {
            return Err(bad("outputs.formats must not be empty"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"{
        "regime": "limit",
        "u0": {"kind": "linear", "a": 0.0, "b": 1.0},
        "v0_minus": 0.0,
        "v0_plus": 1.0,
        "grid": {"t_max": 1.0, "n_steps": 64},
        "mc": {"n_paths": 1000, "method": {"kind": "sticky_rw", "n": 50}, "seed": 3, "r": 0.5, "t": 0.5},
        "probes": {"times": [0.5, 1.0], "positions": [0.0, 0.5, 1.0]}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_json(REFERENCE).unwrap();
        assert_eq!(cfg.regime(), Regime::Limit);
        assert_eq!(cfg.outputs, OutputConfig::default());
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sigma_must_match_regime() {
        let missing = REFERENCE.replace("\"limit\"", "\"sigma\"");
        assert!(matches!(RunConfig::from_json(&missing), Err(CliError::Config(_))));
        let extra = REFERENCE.replace("\"regime\": \"limit\"", "\"regime\": \"limit\", \"sigma\": 0.1");
        assert!(RunConfig::from_json(&extra).is_err());
        let ok = REFERENCE.replace("\"regime\": \"limit\"", "\"regime\": \"sigma\", \"sigma\": 0.1");
        assert_eq!(RunConfig::from_json(&ok).unwrap().regime(), Regime::Sigma(0.1));
        let negative = ok.replace("0.1", "-0.1");
        assert!(RunConfig::from_json(&negative).is_err());
    }

    #[test]
    fn ranges_are_enforced() {
        for (from, to) in [
            ("\"n_paths\": 1000", "\"n_paths\": 99"),
            ("\"v0_plus\": 1.0", "\"v0_plus\": 1.5"),
            ("\"b\": 1.0", "\"b\": 2.0"),
            ("[0.5, 1.0]", "[0.5, 2.0]"),
            ("\"n_steps\": 64", "\"n_steps\": 4"),
            ("\"t\": 0.5}", "\"t\": 0.0}"),
        ] {
            let text = REFERENCE.replace(from, to);
            assert_ne!(text, REFERENCE);
            assert!(RunConfig::from_json(&text).is_err(), "{to}");
        }
        assert!(RunConfig::from_json("{").is_err());
        let unknown = REFERENCE.replace("\"v0_minus\"", "\"extra\": 1, \"v0_minus\"");
        assert!(RunConfig::from_json(&unknown).is_err());
    }

    #[test]
    fn seed_override_reaches_every_block() {
        let mut cfg = RunConfig::from_json(REFERENCE).unwrap();
        cfg.converge = Some(ConvergeConfig {
            sigmas: vec![0.1],
            lattice_sizes: vec![],
            n_paths: 10,
            seed: 0,
            r: 0.5,
            t: 1.0,
        });
        cfg.override_seed(99);
        assert_eq!(cfg.mc.as_ref().unwrap().seed, 99);
        assert_eq!(cfg.converge.as_ref().unwrap().seed, 99);
    }
}
