//! Run configuration, read from a sectioned TOML file.

use std::path::{Path, PathBuf};

use axilab_core::drift::DriftSpec;
use axilab_core::gamma::DtPolicy;
use axilab_core::liouville::LiouvilleConfig;
use axilab_core::norms::DyadicScaleSet;
use axilab_core::poisson::PoissonSolveConfig;
use axilab_core::verify::{admissible_drift_suite, BlowdownConstants, MIN_SNAPSHOTS};
use axilab_core::Grid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub drift: DriftSpec,
    pub initial: InitialSection,
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub verifier: VerifierSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_len: f64,
}

impl GridSection {
    pub fn build(&self) -> Result<Grid, CliError> {
        Grid::new(self.nr, self.nz, self.r_max, self.z_len).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gamma,
    Ns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallKind {
    #[default]
    Zero,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKind,
    pub t_end: f64,
    pub cadence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<DtPolicy>,
    /// Outer wall data for `Γ`.
    #[serde(default)]
    pub wall: WallKind,
    /// Swirl velocity imposed on the wall by the Navier-Stokes solver.
    #[serde(default)]
    pub wall_swirl: f64,
    #[serde(default)]
    pub poisson: PoissonSolveConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    /// `Γ = A r²`.
    RSquared,
    /// `Γ = 4A r²(1 - r²/r_max²)(sin(2πz/L) + 1/2)`, which changes sign and
    /// vanishes on the axis and the wall.
    SignedBump,
    /// `v = (0, A r, 0)`.
    RigidRotation,
    /// Meridional circulation from the stream `½ r (1 - r²)² sin(2πz)` plus
    /// swirl `A r e^{-4r²}(1 + 0.3 cos 2πz)`.
    Swirling,
}

impl InitialKind {
    pub fn solver(&self) -> Option<SolverKind> {
        match self {
            InitialKind::Zero => None,
            InitialKind::RSquared | InitialKind::SignedBump => Some(SolverKind::Gamma),
            InitialKind::RigidRotation | InitialKind::Swirling => Some(SolverKind::Ns),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Axial position of the anchor `(0, z0, t_end)`.
    pub anchor_z: f64,
    pub scales: DyadicScaleSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liouville: Option<LiouvilleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierSection {
    #[serde(default)]
    pub constants: BlowdownConstants,
    /// Exponent of the mean-value ratio, 2 or 3.
    #[serde(default = "three")]
    pub mean_value_p: f64,
    #[serde(default = "six")]
    pub moser_rungs: usize,
    #[serde(default = "nash_samples")]
    pub nash_samples: usize,
    #[serde(default = "two")]
    pub nash_m: f64,
    #[serde(default = "lp_exponents")]
    pub lp_exponents: Vec<f64>,
}

fn three() -> f64 {
    3.0
}
fn six() -> usize {
    6
}
fn nash_samples() -> usize {
    1000
}
fn two() -> f64 {
    2.0
}
fn lp_exponents() -> Vec<f64> {
    vec![0.5, 0.9]
}

impl Default for VerifierSection {
    fn default() -> Self {
        Self {
            constants: BlowdownConstants::default(),
            mean_value_p: three(),
            moser_rungs: six(),
            nash_samples: nash_samples(),
            nash_m: two(),
            lp_exponents: lp_exponents(),
        }
    }
}

/// Repeats the `Γ` pipeline for named members of the admissible drift suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    pub drifts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("axilab-run"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical text: the re-serialized configuration.
    pub fn canonical(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn hash(&self) -> Result<String, CliError> {
        Ok(hex::encode(Sha256::digest(self.canonical()?.as_bytes())))
    }

    pub fn suite_members(&self) -> Result<Vec<(String, DriftSpec)>, CliError> {
        let Some(suite) = &self.suite else {
            return Ok(Vec::new());
        };
        let known = admissible_drift_suite();
        suite
            .drifts
            .iter()
            .map(|name| {
                known
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(n, s)| (n.to_string(), *s))
                    .ok_or_else(|| CliError::Config(format!("unknown suite drift `{name}`")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = self.grid.build()?;
        let s = &self.solver;
        if !(s.t_end > 0.0 && s.cadence > 0.0 && s.cadence <= s.t_end) {
            return Err(CliError::Config(format!(
                "solver needs 0 < cadence <= t_end, got cadence = {}, t_end = {}",
                s.cadence, s.t_end
            )));
        }
        s.poisson.validate().map_err(CliError::config)?;
        if let Some(want) = self.initial.kind.solver() {
            if want != s.kind {
                return Err(CliError::Config(format!(
                    "initial condition {:?} does not belong to the {:?} solver",
                    self.initial.kind, s.kind
                )));
            }
        }
        if s.kind == SolverKind::Ns && !self.drift.is_zero() {
            return Err(CliError::Config("the Navier-Stokes solver takes no drift".into()));
        }
        if s.kind == SolverKind::Ns && self.suite.is_some() {
            return Err(CliError::Config("a drift suite needs the gamma solver".into()));
        }
        self.suite_members()?;
        let d = &self.diagnostics;
        d.scales.validate().map_err(CliError::config)?;
        d.scales.ensure_diagnostic_safe(&g).map_err(CliError::config)?;
        if 2.0 * d.scales.r0 > 0.5 * g.z_len() + 1e-12 {
            return Err(CliError::Config(format!(
                "largest scale {} needs an axial period of at least {}",
                d.scales.r0,
                4.0 * d.scales.r0
            )));
        }
        let r0 = d.scales.r0;
        if s.kind == SolverKind::Gamma && s.t_end < r0 * r0 * (1.0 - 1e-12) {
            return Err(CliError::Config(format!(
                "t_end = {} does not cover the largest cylinder (needs {})",
                s.t_end,
                r0 * r0
            )));
        }
        // Time integrals run down to the cylinder of radius about r0/2.
        if s.kind == SolverKind::Gamma && s.cadence * MIN_SNAPSHOTS as f64 > 0.25 * r0 * r0 * (1.0 + 1e-12) {
            return Err(CliError::Config(format!(
                "cadence {} gives fewer than {MIN_SNAPSHOTS} snapshots in the cylinder of radius {}",
                s.cadence,
                0.5 * r0
            )));
        }
        let v = &self.verifier;
        v.constants.validate().map_err(CliError::config)?;
        if v.mean_value_p != 2.0 && v.mean_value_p != 3.0 {
            return Err(CliError::Config("verifier.mean_value_p must be 2 or 3".into()));
        }
        if v.moser_rungs > axilab_core::verify::MAX_MOSER_RUNGS {
            return Err(CliError::Config("verifier.moser_rungs must not exceed 6".into()));
        }
        if v.lp_exponents.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(CliError::Config("verifier.lp_exponents must lie in (0, 1)".into()));
        }
        if !(v.nash_m > 0.0) {
            return Err(CliError::Config("verifier.nash_m must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn every_preset_parses_and_hash_is_stable() {
        for (name, text) in presets::ALL {
            let cfg = RunConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = RunConfig::parse(&cfg.canonical().unwrap()).unwrap();
            assert_eq!(cfg, again);
            assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = presets::get("gamma_r2_steady").unwrap().replace("nr = 128", "nr = \"x\"");
        match RunConfig::parse(&text) {
            Err(CliError::Config(m)) => assert!(m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{}\nbogus = 1\n", presets::get("gamma_r2_steady").unwrap());
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn sparse_cadence_is_a_config_error() {
        let text = presets::get("gamma_r2_steady")
            .unwrap()
            .replace("cadence = 0.00048828125", "cadence = 0.03125");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
    }
}
