//! Run configuration: parsing, defaults and validation.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ern_core::evolution::ExactSolution;
use ern_core::scattering::{DataSpec, MapRunConfig, TailStudyConfig};
use ern_core::{BlackHole, Complex64, DataFamily, GridSpec, ModeSpec, Region, Side};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EvolveForward,
    EvolveBackward,
    Roundtrip,
    Scattering,
    Interior,
    Mode,
    #[serde(rename = "theoremB")]
    #[value(name = "theoremB")]
    TailStudy,
    Energies,
    Convergence,
    Regularity,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::EvolveForward => "evolve-forward",
            Scenario::EvolveBackward => "evolve-backward",
            Scenario::Roundtrip => "roundtrip",
            Scenario::Scattering => "scattering",
            Scenario::Interior => "interior",
            Scenario::Mode => "mode",
            Scenario::TailStudy => "theoremB",
            Scenario::Energies => "energies",
            Scenario::Convergence => "convergence",
            Scenario::Regularity => "regularity",
        }
    }
}

fn unit() -> f64 {
    1.0
}

/// Grid extent and cell counts; the region is given at the top level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub n_u: usize,
    pub n_v: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_floor: Option<f64>,
}

impl GridConfig {
    fn default_for(region: Region) -> Self {
        let (u, v, n) = match region {
            Region::Exterior => ((0.0, 40.0), (0.0, 40.0), 160),
            Region::Interior => ((-40.0, -1.0), (1.0, 40.0), 156),
        };
        Self {
            u_min: u.0,
            u_max: u.1,
            v_min: v.0,
            v_max: v.1,
            n_u: n,
            n_v: n,
            r_floor: None,
        }
    }

    pub fn spec(&self, region: Region) -> ern_core::Result<GridSpec> {
        let g = GridSpec::new((self.u_min, self.u_max), (self.v_min, self.v_max), self.n_u, self.n_v, region)?;
        Ok(match self.r_floor {
            Some(f) => g.with_floor(f),
            None => g,
        })
    }

    /// Same extent with the cell counts multiplied by `k`.
    pub fn refined(&self, k: usize) -> Self {
        Self {
            n_u: self.n_u * k,
            n_v: self.n_v * k,
            ..*self
        }
    }
}

/// Window and order of the regularity probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityWindow {
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default = "default_radii")]
    pub radii: (f64, f64),
    #[serde(default = "default_advanced")]
    pub advanced: (f64, f64),
}

fn default_order() -> u32 {
    1
}

fn default_radii() -> (f64, f64) {
    (1.2, 1.6)
}

fn default_advanced() -> (f64, f64) {
    (10.0, 25.0)
}

impl Default for RegularityWindow {
    fn default() -> Self {
        Self {
            order: default_order(),
            radii: default_radii(),
            advanced: default_advanced(),
        }
    }
}

/// Overrides of the tail-study parameters; truncations, mass and ell come
/// from the top level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

/// Configuration as read from disk. After [`RunConfig::resolve`] every
/// optional field the scenario uses is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default = "unit")]
    pub mass: f64,
    #[serde(default)]
    pub ell: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub truncations: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeSpec>,
    /// Cell-count multipliers of the refinement studies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refinements: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_solution: Option<ExactSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<RegularityWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailOptions>,
}

/// Parses a configuration document; errors name the offending key.
pub fn parse_config_str(text: &str) -> CliResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("key `{path}`: {inner}"))
        }
    })
}

pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn bump() -> DataFamily {
    DataFamily::GaussianBump {
        center: 10.0,
        width: 1.5,
        amplitude: 1.0,
    }
}

impl RunConfig {
    /// Fills the scenario defaults and validates the result.
    pub fn resolve(mut self, scenario: Scenario) -> CliResult<RunConfig> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(CliError::Config(format!(
                    "key `scenario`: config names {} but {} was requested",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        self.scenario = Some(scenario);
        let region = *self.region.get_or_insert(match scenario {
            Scenario::Interior => Region::Interior,
            _ => Region::Exterior,
        });
        if self.grid.is_none() {
            let g = GridConfig::default_for(region);
            // The rate-one tail needs h = 1/8 before its decay is resolved
            // across the probe window.
            self.grid = Some(if scenario == Scenario::Regularity { g.refined(2) } else { g });
        }
        if self.data.is_none() {
            self.data = Some(match (scenario, region) {
                (Scenario::EvolveBackward, _) | (Scenario::Regularity, _) => DataSpec::new(
                    DataFamily::ExponentialTail {
                        rate: 1.0,
                        amplitude: 1.0,
                    },
                    Side::Infinity,
                ),
                (_, Region::Interior) => DataSpec::new(bump(), Side::Horizon),
                _ => DataSpec::new(bump(), Side::Infinity),
            });
        }
        match scenario {
            Scenario::Mode if self.mode.is_none() => {
                self.mode = Some(ModeSpec {
                    omega: Complex64::new(0.5, -0.25),
                    f_horizon: Complex64::new(1.0, 0.0),
                    f_infinity: Complex64::new(1.0, 0.0),
                });
            }
            Scenario::Convergence | Scenario::Regularity if self.refinements.is_empty() => {
                self.refinements = vec![1, 2, 4];
            }
            _ => {}
        }
        if scenario == Scenario::Convergence && self.exact_solution.is_none() {
            self.exact_solution = Some(ExactSolution::Time);
        }
        if scenario == Scenario::Regularity && self.regularity.is_none() {
            self.regularity = Some(RegularityWindow::default());
        }
        if scenario == Scenario::TailStudy && self.tail.is_none() {
            self.tail = Some(TailOptions::default());
        }
        self.validate(scenario)?;
        Ok(self)
    }

    fn validate(&self, scenario: Scenario) -> CliResult<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(CliError::Config(format!("key `mass`: must be positive, got {}", self.mass)));
        }
        let map = self.map_config()?;
        map.validate().map_err(invalid)?;
        if let (Some(w), Some(t)) = (self.window, self.truncations.first()) {
            if !(w > map.grid.v_min && w <= *t) {
                return Err(CliError::Config(format!(
                    "key `window`: {w} must lie inside the smallest truncation {t}"
                )));
            }
        }
        if let Some(m) = &self.mode {
            m.validate().map_err(|e| CliError::Config(format!("key `mode`: {e}")))?;
        }
        if self.refinements.contains(&0) || !self.refinements.windows(2).all(|w| w[1] > w[0]) {
            return Err(CliError::Config(format!(
                "key `refinements`: must be positive and strictly increasing, got {:?}",
                self.refinements
            )));
        }
        let region = map.grid.region;
        let wants = match scenario {
            Scenario::Interior => Some(Region::Interior),
            Scenario::Roundtrip | Scenario::Convergence => None,
            _ => Some(Region::Exterior),
        };
        if let Some(r) = wants {
            if r != region {
                return Err(CliError::Config(format!(
                    "key `region`: scenario {} needs the {r:?} region",
                    scenario.name()
                )));
            }
        }
        if scenario == Scenario::TailStudy {
            self.tail_config()?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario.expect("resolved config")
    }

    pub fn region(&self) -> Region {
        self.region.unwrap_or_default()
    }

    pub fn grid_config(&self) -> GridConfig {
        self.grid.unwrap_or_else(|| GridConfig::default_for(self.region()))
    }

    pub fn black_hole(&self) -> CliResult<BlackHole> {
        BlackHole::new(self.mass).map_err(invalid)
    }

    pub fn grid_spec(&self) -> CliResult<GridSpec> {
        let g = self
            .grid_config()
            .spec(self.region())
            .map_err(|e| CliError::Config(format!("key `grid`: {e}")))?;
        g.validate(&self.black_hole()?)
            .map_err(|e| CliError::Config(format!("key `grid`: {e}")))?;
        Ok(g)
    }

    pub fn data_spec(&self) -> DataSpec {
        self.data
            .clone()
            .unwrap_or_else(|| DataSpec::new(bump(), Side::Infinity))
    }

    pub fn map_config(&self) -> CliResult<MapRunConfig> {
        let mut cfg = MapRunConfig::new(self.mass, self.ell, self.grid_spec()?, self.data_spec())
            .with_truncations(self.truncations.clone());
        if let Some(w) = self.window {
            cfg = cfg.with_window(w);
        }
        Ok(cfg)
    }

    pub fn tail_config(&self) -> CliResult<TailStudyConfig> {
        let base = TailStudyConfig::default();
        let o = self.tail.clone().unwrap_or_default();
        let cfg = TailStudyConfig {
            mass: self.mass,
            ell: self.ell,
            spacing: o.spacing.unwrap_or(base.spacing),
            truncations: if self.truncations.is_empty() {
                base.truncations
            } else {
                self.truncations.clone()
            },
            aspect: o.aspect.unwrap_or(base.aspect),
            side: o.side.unwrap_or(base.side),
            exponent: o.exponent.unwrap_or(base.exponent),
            powers: o.powers.clone().unwrap_or(base.powers),
            radius: o.radius.unwrap_or(base.radius),
        };
        if cfg.truncations.len() < 3 {
            return Err(CliError::Config(
                "key `truncations`: the tail study needs at least three truncations".into(),
            ));
        }
        if !(cfg.spacing > 0.0 && cfg.aspect > 1.0 && cfg.exponent > 0.5 && cfg.radius > 1.0) {
            return Err(CliError::Config(format!(
                "key `tail`: need spacing > 0, aspect > 1, exponent > 1/2 and radius > 1, got {o:?}"
            )));
        }
        if !cfg.powers.iter().any(|p| *p < 2.0) || !cfg.powers.iter().any(|p| *p >= 2.0) {
            return Err(CliError::Config(
                "key `tail.powers`: need at least one power below 2 and one at or above 2".into(),
            ));
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical serialization of the resolved config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(r#"{"scenario": "roundtrip"}"#)
            .unwrap()
            .resolve(Scenario::Roundtrip)
            .unwrap();
        assert_eq!(cfg.mass, 1.0);
        assert_eq!(cfg.ell, 0);
        assert_eq!(cfg.region(), Region::Exterior);
        assert!(cfg.grid.is_some() && cfg.data.is_some());
    }

    #[test]
    fn negative_mass_is_rejected() {
        let err = parse_config_str(r#"{"mass": -1}"#)
            .unwrap()
            .resolve(Scenario::Roundtrip)
            .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("mass"), "{err}");
    }

    #[test]
    fn non_monotone_truncations_are_rejected() {
        let err = parse_config_str(r#"{"truncations": [80, 40]}"#)
            .unwrap()
            .resolve(Scenario::EvolveForward)
            .unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn ill_typed_keys_are_named() {
        let err = parse_config_str(r#"{"grid": {"u_min": 0, "v_min": 0, "u_max": 4, "v_max": 4, "n_u": "ten", "n_v": 4}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("grid.n_u"), "{err}");
        let err = parse_config_str(r#"{"grid": {"u_min": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
        assert!(err.to_string().contains("v_min"), "{err}");
        let err = parse_config_str(r#"{"masss": 1}"#).unwrap_err();
        assert!(err.to_string().contains("masss"), "{err}");
    }

    #[test]
    fn real_frequency_modes_are_rejected() {
        let err = parse_config_str(r#"{"mode": {"omega": [0.5, 0.0], "f_horizon": [1, 0], "f_infinity": [1, 0]}}"#)
            .unwrap()
            .resolve(Scenario::Mode)
            .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("mode"), "{err}");
    }

    #[test]
    fn conflicting_scenario_is_rejected() {
        let err = parse_config_str(r#"{"scenario": "mode"}"#)
            .unwrap()
            .resolve(Scenario::Roundtrip)
            .unwrap_err();
        assert!(err.to_string().contains("scenario"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::resolve(parse_config_str("{}").unwrap(), Scenario::Roundtrip).unwrap();
        let b = RunConfig::resolve(parse_config_str("{}").unwrap(), Scenario::Roundtrip).unwrap();
        let c = RunConfig::resolve(parse_config_str(r#"{"ell": 1}"#).unwrap(), Scenario::Roundtrip).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
