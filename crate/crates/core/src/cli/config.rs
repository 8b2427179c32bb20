use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{PsorOptions, RooftopPath, DEFAULT_KAPPA};
use crate::newton::{doubling_schedule, NewtonOptions};
use crate::presets::Preset;
use crate::torus::{Grid, GridField, TorusGeometry};
use crate::verify::{SuiteOptions, CHECK_NAMES, DEFAULT_A};

/// Declarative experiment description. Every table and key is optional; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Output directory; `--out` overrides it.
    pub out: Option<PathBuf>,
    /// Seed for randomized obstacles; `--seed` overrides it.
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub obstacle: ObstacleConfig,
    pub schedule: ScheduleConfig,
    pub newton: NewtonOptions,
    pub psor: PsorOptions,
    pub envelope: EnvelopeConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Complex dimension, 1 or 2.
    pub n: usize,
    /// Nodes per real axis, a power of two.
    pub res: usize,
    /// Row-major `g_{j kbar}` as `[re, im]` pairs; identity when absent.
    pub metric: Option<Vec<[f64; 2]>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { n: 1, res: 64, metric: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleConfig {
    /// Preset name or `file:<path>`.
    pub spec: String,
    /// Obstacles whose minimum the rooftop envelope sits under.
    pub rooftop: Vec<String>,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        ObstacleConfig {
            spec: "cos-a0.3".into(),
            rooftop: vec!["cos-a0.3-x".into(), "cos-a0.3-y".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Doubling schedule `start, 2 start, ..., stop` unless `betas` is given.
    pub start: f64,
    pub stop: f64,
    pub betas: Option<Vec<f64>>,
    /// Target of `solve`.
    pub beta: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { start: 16.0, stop: 4096.0, betas: None, beta: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeMethod {
    BetaLimit,
    Psor,
    Rooftop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeConfig {
    pub method: EnvelopeMethod,
    /// Contact constant. When absent it is calibrated against the oracle for `n = 1`
    /// and falls back to the default for `n = 2`.
    pub kappa: Option<f64>,
    /// Mollification radius of the rooftop beta path; `2 / N` when absent.
    pub epsilon: Option<f64>,
    pub rooftop_path: RooftopPath,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            method: EnvelopeMethod::Psor,
            kappa: None,
            epsilon: None,
            rooftop_path: RooftopPath::Psor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub a: f64,
    pub plateau_beta: Option<f64>,
    pub noise_floor: f64,
    pub disabled: Vec<String>,
    /// Also run the oracle at `2N` and report how the mass error changes (`n = 1`).
    pub refine: bool,
    /// Read `sweep/` and `oracle/` (or `envelope/`) from this directory instead of computing them.
    pub artifacts: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let s = SuiteOptions::default();
        VerifyConfig {
            a: DEFAULT_A,
            plateau_beta: s.plateau_beta,
            noise_floor: s.noise_floor,
            disabled: Vec::new(),
            refine: false,
            artifacts: None,
        }
    }
}

impl VerifyConfig {
    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            a: self.a,
            plateau_beta: self.plateau_beta,
            noise_floor: self.noise_floor,
            disabled: self.disabled.clone(),
        }
    }
}

/// Schema or consistency violation, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        self.grid()?;
        self.obstacle.spec.parse::<Preset>().map_err(|e| ConfigError(format!("obstacle.spec: {e}")))?;
        for s in &self.obstacle.rooftop {
            s.parse::<Preset>().map_err(|e| ConfigError(format!("obstacle.rooftop: {e}")))?;
        }
        let betas = self.schedule_betas();
        if betas.is_empty() {
            return err("schedule: empty beta schedule".into());
        }
        if betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return err(format!("schedule: betas must be positive, got {betas:?}"));
        }
        if betas.windows(2).any(|w| !(w[1] > w[0])) {
            return err(format!("schedule.betas: must be strictly increasing, got {betas:?}"));
        }
        if let Some(b) = self.schedule.beta {
            if !(b > 0.0) || !b.is_finite() {
                return err(format!("schedule.beta: must be positive, got {b}"));
            }
        }
        if !(self.newton.tol > 0.0) {
            return err("newton.tol: must be positive".into());
        }
        if !(self.psor.tol > 0.0) || !(self.psor.omega > 0.0 && self.psor.omega < 2.0) {
            return err("psor: tol must be positive and omega in (0, 2)".into());
        }
        if let Some(k) = self.envelope.kappa {
            if !(k > 0.0) {
                return err(format!("envelope.kappa: must be positive, got {k}"));
            }
        }
        if let Some(e) = self.envelope.epsilon {
            if !(e >= 0.0) {
                return err(format!("envelope.epsilon: must be >= 0, got {e}"));
            }
        }
        for name in &self.verify.disabled {
            if !CHECK_NAMES.contains(&name.as_str()) && name != super::REFINEMENT_CHECK {
                return err(format!("verify.disabled: unknown check `{name}` (known: {CHECK_NAMES:?})"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<TorusGeometry, ConfigError> {
        let n = self.geometry.n;
        let geom = match &self.geometry.metric {
            None => TorusGeometry::flat(n),
            Some(m) => {
                let entries: Vec<Complex64> = m.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                TorusGeometry::new(n, &entries)
            }
        };
        geom.map_err(|e| ConfigError(format!("geometry: {e}")))
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.geometry()?, self.geometry.res).map_err(|e| ConfigError(format!("geometry.res: {e}")))
    }

    pub fn schedule_betas(&self) -> Vec<f64> {
        match &self.schedule.betas {
            Some(b) => b.clone(),
            None => doubling_schedule(self.schedule.start, self.schedule.stop),
        }
    }

    pub fn obstacle(&self, grid: &Grid) -> crate::Result<GridField> {
        let preset: Preset = self.obstacle.spec.parse()?;
        preset.build(grid, self.seed)
    }

    /// The rooftop obstacles; the `j`-th random preset is seeded with `seed + j`.
    pub fn rooftop_obstacles(&self, grid: &Grid) -> crate::Result<Vec<GridField>> {
        self.obstacle
            .rooftop
            .iter()
            .enumerate()
            .map(|(j, s)| s.parse::<Preset>()?.build(grid, self.seed.wrapping_add(j as u64)))
            .collect()
    }

    pub fn kappa_or_default(&self) -> f64 {
        self.envelope.kappa.unwrap_or(DEFAULT_KAPPA)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = ExperimentConfig::from_toml("[schedule]\nstrat = 16.0\n").unwrap_err();
        assert!(e.0.contains("strat"), "{e}");
        let e = ExperimentConfig::from_toml("[schedule]\nbetas = [4.0, 2.0]\n").unwrap_err();
        assert!(e.0.contains("schedule.betas"), "{e}");
        let e = ExperimentConfig::from_toml("[verify]\ndisabled = [\"nope\"]\n").unwrap_err();
        assert!(e.0.contains("nope"), "{e}");
        assert!(ExperimentConfig::from_toml("[geometry]\nn = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[geometry]\nres = 48\n").is_err());
    }

    #[test]
    fn metric_table() {
        let cfg = ExperimentConfig::from_toml("[geometry]\nn = 1\nmetric = [[2.0, 0.0]]\n").unwrap();
        assert_eq!(cfg.geometry().unwrap().volume(), 2.0);
        assert!(ExperimentConfig::from_toml("[geometry]\nmetric = [[-1.0, 0.0]]\n").is_err());
    }
}
