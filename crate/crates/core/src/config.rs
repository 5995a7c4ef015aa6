//! TOML run configuration.
//!
//! ```toml
//! [vehicle]
//! total_mass = 31.03
//! semi_axes = [0.8, 0.095]
//! added_linear = [0.84, 29.4, 29.4]
//! added_angular = [0.034, 3.43, 3.43]
//! rho = 1026.0
//! # displaced_volume = 0.0302   (derived for neutral buoyancy when omitted)
//!
//! [scenario]
//! duration = 500.0
//! dt = 0.01
//! surge_force = 1.0
//! mass_force = 0.5
//! depth_deep = 20.0
//! depth_shallow = 3.0
//! hydrostatics = "compensated"
//!
//! [scenario.rail]
//! origin = [0.0, 0.0, 0.05]
//! axis = [1.0, 0.0, 0.0]
//! stroke = [-0.05, 0.05]
//!
//! [run]
//! formulation = "newton-euler"
//! output = "remus100.csv"
//! decimate = 1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Formulation, Model, RailSpec, SimState};
use crate::error::ModelError;
use crate::hydrostatics::{HydrostaticEnv, HydrostaticsMode};
use crate::kinematics::{EulerAngles, Pose, Vec3};
use crate::mass::VehicleParams;
use crate::scenario::{remus_params, RemusSource, ScenarioSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io { path: PathBuf, message: String },
    Parse { message: String },
    Validation { line: Option<usize>, invariant: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            ConfigError::Parse { message } => write!(f, "{}", message.trim_end()),
            ConfigError::Validation { line: Some(l), invariant } => write!(f, "line {l}: {invariant}"),
            ConfigError::Validation { line: None, invariant } => write!(f, "{invariant}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    vehicle: RawVehicle,
    scenario: RawScenario,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    total_mass: f64,
    semi_axes: [f64; 2],
    added_linear: [f64; 3],
    added_angular: [f64; 3],
    rho: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
    displaced_volume: Option<f64>,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    duration: f64,
    dt: f64,
    surge_force: f64,
    mass_force: f64,
    depth_deep: f64,
    depth_shallow: f64,
    #[serde(default)]
    hydrostatics: HydrostaticsMode,
    rail: RawRail,
    #[serde(default)]
    initial: RawInitial,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRail {
    origin: [f64; 3],
    axis: [f64; 3],
    stroke: [f64; 2],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default)]
    position: [f64; 3],
    /// Roll, pitch, yaw (rad).
    #[serde(default)]
    attitude: [f64; 3],
    #[serde(default)]
    nu: [f64; 6],
    /// Travel along the rail from its origin (m).
    #[serde(default)]
    rail_position: f64,
    /// Rate of travel along the rail relative to the hull (m/s).
    #[serde(default)]
    rail_rate: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default)]
    formulation: Formulation,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default = "default_decimate")]
    decimate: usize,
    #[serde(default)]
    seed: u64,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            formulation: Formulation::default(),
            output: default_output(),
            decimate: default_decimate(),
            seed: 0,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("trajectory.csv")
}

fn default_decimate() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: RemusSource,
    pub params: VehicleParams,
    pub scenario: ScenarioSpec,
    pub hydrostatics: HydrostaticsMode,
    pub formulation: Formulation,
    pub output: PathBuf,
    pub decimate: usize,
    /// Seed for the randomized checks run by `check`.
    pub seed: u64,
    /// Values filled in by the loader, for the run metadata.
    pub notes: Vec<String>,
}

impl RunConfig {
    pub fn model(&self) -> Result<Model, ModelError> {
        Ok(Model::new(self.params)?
            .with_hydrostatics(self.hydrostatics)
            .with_formulation(self.formulation)
            .with_rail(Some(self.scenario.rail)))
    }
}

pub fn load_config(path: &Path) -> Result<(RunConfig, String), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_owned(), message: e.to_string() })?;
    let cfg = parse_config(&text)?;
    Ok((cfg, text))
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_owned();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        if current == section && k.trim() == key {
            return Some(i + 1);
        }
    }
    None
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse { message: e.to_string() })?;
    let invalid = |section: &str, key: &str, invariant: String| ConfigError::Validation {
        line: locate(text, section, key),
        invariant,
    };

    let v = &raw.vehicle;
    let positive = [("total_mass", v.total_mass), ("rho", v.rho), ("gravity", v.gravity)];
    for (key, value) in positive {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid("vehicle", key, format!("{key} > 0 (got {value})")));
        }
    }
    if !v.semi_axes.iter().all(|x| *x > 0.0 && x.is_finite()) {
        return Err(invalid("vehicle", "semi_axes", "ellipsoid semi-axes a, b > 0".into()));
    }
    for (key, values) in [("added_linear", &v.added_linear[..]), ("added_angular", &v.added_angular[..])] {
        if !values.iter().all(|x| *x >= 0.0 && x.is_finite()) {
            return Err(invalid(
                "vehicle",
                key,
                format!("{key}: added-mass coefficients must be non-negative (M_A = M_A^T >= 0)"),
            ));
        }
    }
    let mut notes = Vec::new();
    if v.displaced_volume.is_none() {
        notes.push(format!(
            "displaced_volume derived for neutral buoyancy: total_mass / rho = {:e} m^3",
            v.total_mass / v.rho
        ));
    }
    let source = RemusSource {
        total_mass: v.total_mass,
        a: v.semi_axes[0],
        b: v.semi_axes[1],
        added_linear: Vec3::from(v.added_linear),
        added_angular: Vec3::from(v.added_angular),
        rho: v.rho,
        gravity: v.gravity,
        displaced_volume: v.displaced_volume,
    };
    let params = remus_params(&source).map_err(|e| invalid("vehicle", "total_mass", e.to_string()))?;
    if let Err(e) = HydrostaticEnv::from_params(&params).check() {
        return Err(invalid("vehicle", "displaced_volume", format!("neutral buoyancy W = B: {e}")));
    }

    let s = &raw.scenario;
    for (key, value) in [("duration", s.duration), ("dt", s.dt)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid("scenario", key, format!("{key} > 0 (got {value})")));
        }
    }
    if !(s.depth_shallow > 0.0) {
        return Err(invalid("scenario", "depth_shallow", "depth_shallow > 0".into()));
    }
    if !(s.depth_shallow < s.depth_deep) {
        return Err(invalid(
            "scenario",
            "depth_shallow",
            format!(
                "depth ordering 0 < depth_shallow < depth_deep violated ({} >= {})",
                s.depth_shallow, s.depth_deep
            ),
        ));
    }
    if !(s.mass_force >= 0.0 && s.mass_force.is_finite()) || !s.surge_force.is_finite() {
        return Err(invalid("scenario", "mass_force", "forces finite, mass_force >= 0".into()));
    }
    let rail = RailSpec {
        origin: Vec3::from(s.rail.origin),
        axis: Vec3::from(s.rail.axis),
        stroke_min: s.rail.stroke[0],
        stroke_max: s.rail.stroke[1],
    };
    if let Err(e) = rail.validate() {
        return Err(invalid("scenario.rail", "axis", e.to_string()));
    }
    let init = &s.initial;
    if !(rail.stroke_min..=rail.stroke_max).contains(&init.rail_position) {
        return Err(invalid(
            "scenario.initial",
            "rail_position",
            "initial rail_position within the rail stroke".into(),
        ));
    }
    let nu = Vector6::from_row_slice(&init.nu);
    let r_p = rail.point(init.rail_position);
    let v = nu.fixed_rows::<3>(0).into_owned();
    let w = nu.fixed_rows::<3>(3).into_owned();
    let initial_state = SimState {
        eta: Pose::new(Vec3::from(init.position), EulerAngles::from_vector(&Vec3::from(init.attitude))),
        r_p,
        nu,
        v_p: v + w.cross(&r_p) + init.rail_rate * rail.axis,
    };
    let scenario = ScenarioSpec {
        duration: s.duration,
        dt: s.dt,
        surge_force: s.surge_force,
        mass_force_magnitude: s.mass_force,
        depth_deep: s.depth_deep,
        depth_shallow: s.depth_shallow,
        rail,
        initial_state,
    };
    if let Err(e) = scenario.validate() {
        return Err(invalid("scenario", "duration", e.to_string()));
    }
    if raw.run.decimate == 0 {
        return Err(invalid("run", "decimate", "decimate >= 1".into()));
    }

    Ok(RunConfig {
        source,
        params,
        scenario,
        hydrostatics: s.hydrostatics,
        formulation: raw.run.formulation,
        output: raw.run.output,
        decimate: raw.run.decimate,
        seed: raw.run.seed,
        notes,
    })
}

/// The shipped Remus 100 configuration.
pub const REMUS100: &str = include_str!("../configs/remus100.toml");

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formulation: Option<Formulation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Overrides {
    /// Apply on top of a loaded config and re-check the scenario.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        let flag = |invariant: String| ConfigError::Validation { line: None, invariant };
        if let Some(f) = self.formulation {
            cfg.formulation = f;
        }
        if let Some(dt) = self.dt {
            cfg.scenario.dt = dt;
        }
        if let Some(d) = self.duration {
            cfg.scenario.duration = d;
        }
        if let Some(n) = self.decimate {
            if n == 0 {
                return Err(flag("--decimate must be >= 1".into()));
            }
            cfg.decimate = n;
        }
        if let Some(out) = &self.output {
            cfg.output = out.clone();
        }
        cfg.scenario.validate().map_err(|e| flag(format!("after command-line overrides: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config() {
        let cfg = parse_config(REMUS100).unwrap();
        let m = cfg.source.total_mass;
        assert!((cfg.params.m_p - m / 6.0).abs() < 1e-12);
        assert_eq!(cfg.scenario.rail.origin.z, 0.05);
        assert_eq!((cfg.scenario.depth_deep, cfg.scenario.depth_shallow), (20.0, 3.0));
        assert_eq!(cfg.scenario.duration, 500.0);
        assert_eq!(cfg.hydrostatics, HydrostaticsMode::Compensated);
        assert_eq!(cfg.scenario.initial_state, SimState::at_rest(Vec3::new(0.0, 0.0, 0.05)));
        assert_eq!(cfg.notes.len(), 1);
        cfg.model().unwrap();
    }

    #[test]
    fn depth_ordering_is_named_with_line() {
        let text = REMUS100.replace("depth_shallow = 3.0", "depth_shallow = 25.0");
        let err = parse_config(&text).unwrap_err();
        let line = REMUS100.lines().position(|l| l.starts_with("depth_shallow")).unwrap() + 1;
        match err {
            ConfigError::Validation { line: Some(l), invariant } => {
                assert_eq!(l, line);
                assert!(invariant.contains("depth_shallow < depth_deep"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = REMUS100.replace("[scenario.rail]", "[scenario.rail]\ncolour = 1");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse { .. })));
        let text = format!("bogus = 1\n{REMUS100}");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        let err = parse_config("[vehicle\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn explicit_volume_must_be_neutral() {
        let text = REMUS100.replace("rho = 1026.0", "rho = 1026.0\ndisplaced_volume = 0.05");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("neutral buoyancy"), "{err}");
        let exact = 31.029384975800244 / 1026.0;
        let text = REMUS100.replace("rho = 1026.0", &format!("rho = 1026.0\ndisplaced_volume = {exact:e}"));
        let cfg = parse_config(&text).unwrap();
        assert!(cfg.notes.is_empty());
    }

    #[test]
    fn other_invariants() {
        let cases = [
            ("dt = 0.01", "dt = -0.01", "dt > 0"),
            ("stroke = [-0.05, 0.05]", "stroke = [0.05, -0.05]", "stroke_min"),
            ("total_mass = 31.029384975800244", "total_mass = 0.0", "total_mass > 0"),
            ("decimate = 1", "decimate = 0", "decimate >= 1"),
        ];
        for (from, to, needle) in cases {
            assert!(REMUS100.contains(from), "{from}");
            let err = parse_config(&REMUS100.replace(from, to)).unwrap_err();
            assert!(err.to_string().contains(needle), "{err}");
        }
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = parse_config(REMUS100).unwrap();
        let o = Overrides { dt: Some(0.02), duration: Some(10.0), ..Default::default() };
        o.apply(&mut cfg).unwrap();
        assert_eq!((cfg.scenario.dt, cfg.scenario.duration), (0.02, 10.0));
        let bad = Overrides { dt: Some(0.03), duration: Some(10.0), ..Default::default() };
        assert!(bad.apply(&mut cfg).is_err());
    }
}
