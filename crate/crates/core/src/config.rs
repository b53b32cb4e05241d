//! Scenario files.
//!
//! Frequencies are in units of κ_H and times in units of 1/κ_H. Layout:
//!
//! ```toml
//! schema_version = 1
//! name = "fig2"
//! output_dir = "runs/fig2"          # optional
//!
//! [node_a]                          # node_b has the same layout
//! g = 1.0                           # mean coupling, |g↑|² + |g↓|² = 2g²
//! branching_ratio = 1.0             # |g↑|² / |g↓|²
//! kappa_h = 1.0
//! kappa_v = 1.0
//! gamma = 0.6
//! delta_zeeman = 0.0
//! birefringence = { omega_b = 0.0, delta_b = 0.0, theta_b = 0.785398 }
//! jones = { kind = "identity" }     # or rotator{angle}, retarder{axis, phase}, matrix{m}
//! # emission_basis = [[[1,0],[0,0]], [[0,0],[1,0]]]   # rows of [re, im]
//!
//! [node_a.drive]
//! rabi_down = 1.0
//! rabi_up = 1.0
//! one_photon_detuning = 0.0
//! # detuning_down / detuning_up override the Raman-resonant defaults
//! envelope = { shape = "sin2", duration = 20.0 }
//!
//! [calibration]                     # all optional
//! enabled = true
//! target_duration = 6.0             # 5%–95% emission time
//! balance_branches = true
//! iterations = 4
//!
//! [landscape]
//! resolution = 256
//! record_steps = 4096
//! tail = 6.0
//! patterns = ["cc"]
//! thresholds = [0.99, 0.999]
//! correction = "node_b"             # or "both_nodes"
//!
//! [study]
//! omega_b = [0.1, 0.333, 0.667, 1.0]   # node-B Ω_B values for `run`
//!
//! [sweep]
//! omega_b = 1.0
//! theta_b = 0.785398
//! delta_b = [0.0, 1.0, 2.0]
//! recalibrate = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::herald::{HeraldPattern, JonesElement};
use crate::landscape::CorrectionScope;
use crate::model::{
    couplings_from_branching, BichromaticDrive, CavityBirefringence, DriveTone, Envelope, Matrix2c, SystemParams, C64,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Complex 2×2 matrix as rows of `[re, im]` pairs.
pub type ComplexMatrix = [[[f64; 2]; 2]; 2];

fn to_matrix(m: &ComplexMatrix) -> Matrix2c {
    let c = |z: [f64; 2]| C64::new(z[0], z[1]);
    Matrix2c::new(c(m[0][0]), c(m[0][1]), c(m[1][0]), c(m[1][1]))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JonesConfig {
    #[default]
    Identity,
    Rotator { angle: f64 },
    Retarder { axis: f64, phase: f64 },
    Matrix { m: ComplexMatrix },
}

impl JonesConfig {
    pub fn element(&self) -> Result<JonesElement> {
        Ok(match self {
            JonesConfig::Identity => JonesElement::identity(),
            JonesConfig::Rotator { angle } => JonesElement::rotator(*angle),
            JonesConfig::Retarder { axis, phase } => JonesElement::retarder(*axis, *phase),
            JonesConfig::Matrix { m } => JonesElement::new(to_matrix(m))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub rabi_down: f64,
    pub rabi_up: f64,
    #[serde(default)]
    pub one_photon_detuning: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_down: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_up: Option<f64>,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub g: f64,
    pub branching_ratio: f64,
    pub kappa_h: f64,
    pub kappa_v: f64,
    pub gamma: f64,
    pub delta_zeeman: f64,
    #[serde(default)]
    pub birefringence: CavityBirefringence,
    #[serde(default)]
    pub jones: JonesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission_basis: Option<ComplexMatrix>,
    pub drive: DriveConfig,
}

impl NodeConfig {
    /// Physical parameters with both tones on Raman resonance unless a
    /// detuning is given explicitly.
    pub fn to_params(&self) -> Result<SystemParams> {
        let mut errs = Vec::new();
        if !(self.g >= 0.0 && self.g.is_finite()) {
            errs.push(FieldError::new("g", "must be non-negative"));
        }
        if !(self.branching_ratio > 0.0 && self.branching_ratio.is_finite()) {
            errs.push(FieldError::new("branching_ratio", "must be positive"));
        }
        if !errs.is_empty() {
            return Err(Error::Invalid(errs));
        }
        let (g_up, g_down) = couplings_from_branching(self.g, self.branching_ratio);
        let tone = |rabi_peak: f64| DriveTone {
            rabi_peak,
            detuning: 0.0,
            envelope: self.drive.envelope,
        };
        let params = SystemParams {
            g_up,
            g_down,
            kappa_h: self.kappa_h,
            kappa_v: self.kappa_v,
            gamma: self.gamma,
            delta_zeeman: self.delta_zeeman,
            excited_offset: 0.0,
            birefringence: self.birefringence,
            drive: BichromaticDrive {
                down: tone(self.drive.rabi_down),
                up: tone(self.drive.rabi_up),
            },
            emission_basis: self.emission_basis.as_ref().map(to_matrix).unwrap_or_else(Matrix2c::identity),
        };
        let mut params = params.retuned(self.drive.one_photon_detuning);
        if let Some(d) = self.drive.detuning_down {
            params.drive.down.detuning = d;
        }
        if let Some(d) = self.drive.detuning_up {
            params.drive.up.detuning = d;
        }
        params.validate()?;
        Ok(params)
    }
}

fn default_true() -> bool {
    true
}
fn default_duration() -> f64 {
    6.0
}
fn default_iterations() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_duration")]
    pub target_duration: f64,
    #[serde(default = "default_true")]
    pub balance_branches: bool,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            target_duration: default_duration(),
            balance_branches: true,
            iterations: default_iterations(),
        }
    }
}

fn default_resolution() -> usize {
    256
}
fn default_record_steps() -> usize {
    4096
}
fn default_tail() -> f64 {
    6.0
}
fn default_patterns() -> Vec<HeraldPattern> {
    vec![HeraldPattern::CC]
}
fn default_thresholds() -> Vec<f64> {
    vec![0.99, 0.999]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_record_steps")]
    pub record_steps: usize,
    #[serde(default = "default_tail")]
    pub tail: f64,
    #[serde(default = "default_patterns")]
    pub patterns: Vec<HeraldPattern>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub correction: CorrectionScope,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            record_steps: default_record_steps(),
            tail: default_tail(),
            patterns: default_patterns(),
            thresholds: default_thresholds(),
            correction: CorrectionScope::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub omega_b: Vec<f64>,
}

fn default_sweep_omega() -> f64 {
    1.0
}
fn default_theta() -> f64 {
    std::f64::consts::FRAC_PI_4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_omega")]
    pub omega_b: f64,
    #[serde(default = "default_theta")]
    pub theta_b: f64,
    pub delta_b: Vec<f64>,
    #[serde(default = "default_true")]
    pub recalibrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub node_a: NodeConfig,
    pub node_b: NodeConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub landscape: LandscapeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn prefixed(prefix: &str, err: Error, out: &mut Vec<FieldError>) {
    match err {
        Error::Invalid(list) => out.extend(list.into_iter().map(|e| FieldError {
            field: format!("{prefix}.{}", e.field),
            message: e.message,
        })),
        other => out.push(FieldError::new(prefix, other.to_string())),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Every invariant of the file, reported together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(FieldError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        for (name, node) in [("node_a", &self.node_a), ("node_b", &self.node_b)] {
            if let Err(e) = node.to_params() {
                prefixed(name, e, &mut errs);
            }
            if let Err(e) = node.jones.element() {
                prefixed(name, e, &mut errs);
            }
        }
        let cal = &self.calibration;
        if !(cal.target_duration > 0.0 && cal.target_duration.is_finite()) {
            errs.push(FieldError::new("calibration.target_duration", "must be positive"));
        }
        let l = &self.landscape;
        if l.resolution < 2 {
            errs.push(FieldError::new("landscape.resolution", "must be at least 2"));
        }
        if l.record_steps < 16 {
            errs.push(FieldError::new("landscape.record_steps", "must be at least 16"));
        }
        let kappa = [self.node_a.kappa_h, self.node_a.kappa_v, self.node_b.kappa_h, self.node_b.kappa_v]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if kappa > 0.0 && !(l.tail >= crate::dynamics::MIN_TAIL / kappa && l.tail.is_finite()) {
            errs.push(FieldError::new(
                "landscape.tail",
                format!("must be at least {}/κ", crate::dynamics::MIN_TAIL),
            ));
        }
        if l.patterns.is_empty() {
            errs.push(FieldError::new("landscape.patterns", "need at least one pattern"));
        }
        if l.thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            errs.push(FieldError::new("landscape.thresholds", "must lie in (0, 1]"));
        }
        if let Some(study) = &self.study {
            if study.omega_b.is_empty() || study.omega_b.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                errs.push(FieldError::new("study.omega_b", "need non-negative values"));
            }
        }
        if let Some(sweep) = &self.sweep {
            if !(sweep.omega_b >= 0.0 && sweep.omega_b.is_finite()) {
                errs.push(FieldError::new("sweep.omega_b", "must be non-negative"));
            }
            let ascending = sweep.delta_b.windows(2).all(|w| w[1] > w[0]);
            if sweep.delta_b.is_empty() || !ascending || sweep.delta_b.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                errs.push(FieldError::new("sweep.delta_b", "need ascending non-negative values"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errs))
        }
    }

    /// Node-B Ω_B values a `run` covers.
    pub fn study_values(&self) -> Vec<f64> {
        match &self.study {
            Some(s) => s.omega_b.clone(),
            None => vec![self.node_b.birefringence.omega_b],
        }
    }
}

pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "fig5-degenerate", "fig5-nondegenerate"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(include_str!("../presets/fig2.toml")),
        "fig3" => Some(include_str!("../presets/fig3.toml")),
        "fig5-degenerate" => Some(include_str!("../presets/fig5-degenerate.toml")),
        "fig5-nondegenerate" => Some(include_str!("../presets/fig5-nondegenerate.toml")),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let text = preset_text(name).ok_or_else(|| {
        Error::Parse(format!("unknown preset '{name}', expected one of {}", PRESET_NAMES.join(", ")))
    })?;
    ScenarioConfig::from_toml(text)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// A preset name or a path to a scenario file.
pub fn load_config_or_preset(spec: &str) -> Result<ScenarioConfig> {
    if preset_text(spec).is_some() {
        return preset(spec);
    }
    load_config(Path::new(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets_load() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
        }
        let fig2 = preset("fig2").unwrap();
        let a = fig2.node_a.to_params().unwrap();
        assert_eq!(a.delta_zeeman, 0.0);
        assert!((a.g_up.norm_sqr() + a.g_down.norm_sqr() - 2.0).abs() < 1e-12);
        assert_eq!(a.kappa_h, 1.0);
        assert!((a.gamma - 0.6).abs() < 1e-15);
        let fig3 = preset("fig3").unwrap().node_a.to_params().unwrap();
        assert_eq!(fig3.delta_zeeman, 5.0);
        assert!((fig3.g_up.norm_sqr() / fig3.g_down.norm_sqr() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_kappa_names_the_field() {
        let text = preset_text("fig2").unwrap().replacen("kappa_h = 1.0", "kappa_h = 0.0", 1);
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        match err {
            Error::Invalid(list) => assert!(list.iter().any(|e| e.field == "node_a.kappa_h"), "{list:?}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reports_every_bad_field() {
        let mut cfg = preset("fig2").unwrap();
        cfg.node_b.gamma = -1.0;
        cfg.node_b.jones = JonesConfig::Matrix {
            m: [[[1.0, 0.0], [0.5, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        };
        cfg.landscape.thresholds = vec![1.5];
        cfg.schema_version = 7;
        let Err(Error::Invalid(list)) = cfg.validate() else {
            panic!("expected field errors")
        };
        let fields: Vec<&str> = list.iter().map(|e| e.field.as_str()).collect();
        for f in ["schema_version", "node_b.gamma", "node_b.jones", "landscape.thresholds"] {
            assert!(fields.contains(&f), "{fields:?}");
        }
    }

    #[test]
    fn unknown_keys_and_missing_fields_are_rejected() {
        let text = preset_text("fig2").unwrap().replacen("gamma = 0.6", "gama = 0.6", 1);
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn explicit_detunings_override_resonance() {
        let mut cfg = preset("fig3").unwrap();
        cfg.node_a.drive.detuning_up = Some(0.25);
        let p = cfg.node_a.to_params().unwrap();
        assert_eq!(p.drive.up.detuning, 0.25);
        assert_eq!(p.drive.down.detuning, 5.0);
    }

    #[test]
    fn missing_file_reports_the_path() {
        let err = load_config(Path::new("/nonexistent/scenario.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/scenario.toml"));
    }

    fn arb_envelope() -> impl Strategy<Value = Envelope> {
        prop_oneof![
            (1.0f64..40.0).prop_map(|duration| Envelope::Sin2 { duration }),
            (4.0f64..40.0, 0.1f64..0.5).prop_map(|(duration, f)| Envelope::FlatTop {
                duration,
                rise: f * duration
            }),
        ]
    }

    fn arb_jones() -> impl Strategy<Value = JonesConfig> {
        prop_oneof![
            Just(JonesConfig::Identity),
            (-3.0f64..3.0).prop_map(|angle| JonesConfig::Rotator { angle }),
            (-3.0f64..3.0, 0.0f64..3.0).prop_map(|(axis, phase)| JonesConfig::Retarder { axis, phase }),
            Just(JonesConfig::Matrix {
                m: [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [0.0, 0.0]]]
            }),
        ]
    }

    fn arb_node() -> impl Strategy<Value = NodeConfig> {
        (
            (0.1f64..3.0, 0.2f64..5.0, 1.0f64..3.0, 1.0f64..3.0, 0.1f64..2.0, -8.0f64..8.0),
            (0.0f64..2.0, 0.0f64..10.0, -3.0f64..3.0),
            arb_jones(),
            (0.0f64..5.0, 0.0f64..5.0, -2.0f64..2.0, prop::option::of(-5.0f64..5.0)),
            arb_envelope(),
        )
            .prop_map(|((g, br, kh, kv, gamma, dz), (ob, db, th), jones, (rd, ru, op, dd), envelope)| NodeConfig {
                g,
                branching_ratio: br,
                kappa_h: kh,
                kappa_v: kv,
                gamma,
                delta_zeeman: dz,
                birefringence: CavityBirefringence {
                    omega_b: ob,
                    delta_b: db,
                    theta_b: th,
                },
                jones,
                emission_basis: None,
                drive: DriveConfig {
                    rabi_down: rd,
                    rabi_up: ru,
                    one_photon_detuning: op,
                    detuning_down: dd,
                    detuning_up: None,
                    envelope,
                },
            })
    }

    proptest! {
        #[test]
        fn config_round_trips(
            a in arb_node(),
            b in arb_node(),
            res in 2usize..512,
            thresholds in prop::collection::vec(0.5f64..1.0, 1..4),
            patterns in prop::sample::subsequence(HeraldPattern::ALL.to_vec(), 1..=4),
            study in prop::option::of(prop::collection::vec(0.0f64..2.0, 1..5)),
            name in "[a-z][a-z0-9-]{0,12}",
        ) {
            let cfg = ScenarioConfig {
                schema_version: SCHEMA_VERSION,
                name,
                output_dir: Some("out/x".into()),
                node_a: a,
                node_b: b,
                calibration: CalibrationConfig::default(),
                landscape: LandscapeConfig { resolution: res, thresholds, patterns, ..LandscapeConfig::default() },
                study: study.map(|omega_b| StudyConfig { omega_b }),
                sweep: Some(SweepConfig { omega_b: 1.0, theta_b: 0.5, delta_b: vec![0.0, 2.5], recalibrate: false }),
            };
            let text = cfg.to_toml().unwrap();
            let back = ScenarioConfig::from_toml(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
