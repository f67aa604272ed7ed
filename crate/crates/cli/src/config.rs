//! Scene configuration files.
//!
//! A config is one TOML document: a `seed`, an optional `output` directory
//! and a `[scene]` table selected by its `kind`. Every physical quantity is a
//! unit-suffixed string (see [`crate::units`]). Unknown keys are rejected,
//! and errors carry the path of the offending field.

use std::path::{Path, PathBuf};

use lgtweezer::{LgSuperposition, LgTerm};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::units::{Acceleration, Duration, Length, Temperature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub scene: Scene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scene {
    ParaxialField(ParaxialFieldScene),
    ReflectionFringes(ReflectionFringesScene),
    SlmVerify(SlmVerifyScene),
    DebyeField(DebyeFieldScene),
    Ellipticity(EllipticityScene),
    F0Sweep(F0SweepScene),
    OptimalF0(OptimalF0Scene),
    #[serde(rename = "transport-1d")]
    Transport1d(TransportScene),
    #[serde(rename = "transport-3d")]
    Transport3d(TransportScene),
}

impl Scene {
    pub fn kind(&self) -> &'static str {
        match self {
            Scene::ParaxialField(_) => "paraxial-field",
            Scene::ReflectionFringes(_) => "reflection-fringes",
            Scene::SlmVerify(_) => "slm-verify",
            Scene::DebyeField(_) => "debye-field",
            Scene::Ellipticity(_) => "ellipticity",
            Scene::F0Sweep(_) => "f0-sweep",
            Scene::OptimalF0(_) => "optimal-f0",
            Scene::Transport1d(_) => "transport-1d",
            Scene::Transport3d(_) => "transport-3d",
        }
    }
}

/// A named input beam: equal-waist LG_p0 modes with complex weights given as
/// real parts (`weights`) and optional imaginary parts (`weights_im`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub name: String,
    pub orders: Vec<u32>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub weights_im: Vec<f64>,
}

impl BeamConfig {
    pub fn new(name: &str, orders: &[u32]) -> Self {
        BeamConfig {
            name: name.to_string(),
            orders: orders.to_vec(),
            weights: vec![1.0; orders.len()],
            weights_im: vec![0.0; orders.len()],
        }
    }

    fn resolve(&mut self) {
        if self.weights.is_empty() {
            self.weights = vec![1.0; self.orders.len()];
        }
        if self.weights_im.is_empty() {
            self.weights_im = vec![0.0; self.orders.len()];
        }
    }

    fn check(&self, at: &str) -> Result<(), CliError> {
        let bad = |msg: &str| CliError::config(at, msg);
        if self.orders.is_empty() {
            return Err(bad("a beam needs at least one order"));
        }
        if self.weights.len() != self.orders.len() || self.weights_im.len() != self.orders.len() {
            return Err(bad("weights must match orders in length"));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(bad("beam names must be non-empty and use only [A-Za-z0-9_-]"));
        }
        Ok(())
    }

    pub fn superposition(&self, waist: f64, wavelength: f64) -> lgtweezer::Result<LgSuperposition> {
        let terms = self
            .orders
            .iter()
            .zip(self.weights.iter().zip(&self.weights_im))
            .map(|(&p, (&re, &im))| LgTerm {
                p,
                c: Complex64::new(re, im),
            })
            .collect();
        LgSuperposition::new(terms, waist, wavelength)
    }
}

pub fn default_beams() -> Vec<BeamConfig> {
    vec![BeamConfig::new("E0", &[0]), BeamConfig::new("ESigma", &[0, 2, 4])]
}

fn um(v: f64) -> Length {
    Length::from_si(v * 1e-6)
}

/// Planar reflector and the on-axis window used for fringe metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeConfig {
    pub reflectivity: f64,
    pub surface: Length,
    pub focus: Length,
    /// On-axis window `[surface, surface + z_max]`; the spacing is the median
    /// over every maximum in it.
    pub z_max: Length,
    pub samples_per_wavelength: usize,
    /// Distance from the surface at which the fringe contrast is reported.
    pub contrast_at: Length,
}

impl Default for FringeConfig {
    fn default() -> Self {
        FringeConfig {
            reflectivity: -0.8,
            surface: um(0.0),
            focus: um(0.0),
            z_max: um(30.0),
            samples_per_wavelength: 200,
            contrast_at: um(3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParaxialFieldScene {
    pub wavelength: Length,
    pub waist: Length,
    pub beams: Vec<BeamConfig>,
    pub x_half: Length,
    pub z_half: Length,
    pub samples: usize,
    pub depth: Temperature,
    pub fit_fraction: f64,
    pub fit_samples: usize,
    pub schrodinger_points: usize,
    pub fringes: FringeConfig,
}

impl Default for ParaxialFieldScene {
    fn default() -> Self {
        ParaxialFieldScene {
            wavelength: um(1.0),
            waist: um(1.0),
            beams: default_beams(),
            x_half: um(3.0),
            z_half: um(15.0),
            samples: 2001,
            depth: Temperature::from_si(1e-3),
            fit_fraction: 0.1,
            fit_samples: 41,
            schrodinger_points: 2001,
            fringes: FringeConfig::default(),
        }
    }
}

/// Objective parameters shared by the vector-focusing scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub na: f64,
    pub focal_length: Length,
    pub filling_factor: f64,
    pub theta_samples: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            na: 0.7,
            focal_length: Length::from_si(2e-3),
            filling_factor: 0.35,
            theta_samples: 256,
        }
    }
}

/// Size of an x-z intensity map written as a binary grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub x_half: Length,
    pub z_min: Length,
    pub z_max: Length,
    pub nx: usize,
    pub nz: usize,
}

impl MapConfig {
    fn centered(x_half: f64, z_half: f64, nx: usize, nz: usize) -> Self {
        MapConfig {
            x_half: um(x_half),
            z_min: um(-z_half),
            z_max: um(z_half),
            nx,
            nz,
        }
    }
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig::centered(2.0, 5.0, 81, 201)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectionFringesScene {
    pub wavelength: Length,
    pub objective: ObjectiveConfig,
    pub beams: Vec<BeamConfig>,
    pub fringes: FringeConfig,
    pub map: MapConfig,
}

impl Default for ReflectionFringesScene {
    fn default() -> Self {
        ReflectionFringesScene {
            wavelength: um(1.0),
            objective: ObjectiveConfig::default(),
            beams: default_beams(),
            fringes: FringeConfig::default(),
            map: MapConfig {
                x_half: um(2.0),
                z_min: um(0.0),
                z_max: um(8.0),
                nx: 81,
                nz: 641,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlmVerifyScene {
    pub wavelength: Length,
    pub beam: BeamConfig,
    pub grid: usize,
    pub pixel_pitch: Length,
    pub grating_period_px: usize,
    pub source_waist: Length,
    /// Waist of the target beam in the SLM plane.
    pub input_waist: Length,
    pub focal_length: Length,
    /// Lens aperture radius; zero means half the SLM width.
    pub aperture_radius: Length,
    pub quantize_8bit: bool,
    /// Samples per side of the focal window, spanning three focal waists.
    pub window_samples: usize,
    pub axial_samples: usize,
}

impl Default for SlmVerifyScene {
    fn default() -> Self {
        SlmVerifyScene {
            wavelength: um(1.0),
            beam: BeamConfig::new("ESigma", &[0, 2, 4]),
            grid: 1024,
            pixel_pitch: um(8.0),
            grating_period_px: 8,
            source_waist: Length::from_si(1e-3),
            input_waist: Length::from_si(0.45e-3),
            focal_length: Length::from_si(50e-3),
            aperture_radius: um(0.0),
            quantize_8bit: false,
            window_samples: 41,
            axial_samples: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebyeFieldScene {
    pub wavelength: Length,
    pub objective: ObjectiveConfig,
    pub beams: Vec<BeamConfig>,
    pub x_half: Length,
    pub z_half: Length,
    pub samples: usize,
    pub depth: Temperature,
    pub fit_fraction: f64,
    pub fit_samples: usize,
    /// Filling factors at which the 1/e^2 radius of the first beam is reported.
    pub e2_filling_factors: Vec<f64>,
    pub map: MapConfig,
}

impl Default for DebyeFieldScene {
    fn default() -> Self {
        DebyeFieldScene {
            wavelength: um(1.0),
            objective: ObjectiveConfig::default(),
            beams: default_beams(),
            x_half: um(3.0),
            z_half: um(10.0),
            samples: 2001,
            depth: Temperature::from_si(1e-3),
            fit_fraction: 0.1,
            fit_samples: 41,
            e2_filling_factors: vec![0.35, 0.45],
            map: MapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticityScene {
    pub wavelength: Length,
    pub objective: ObjectiveConfig,
    pub beams: Vec<BeamConfig>,
    /// x-z plane through the focus.
    pub map: MapConfig,
}

impl Default for EllipticityScene {
    fn default() -> Self {
        EllipticityScene {
            wavelength: um(1.0),
            objective: ObjectiveConfig::default(),
            beams: default_beams(),
            map: MapConfig::centered(1.5, 3.0, 121, 241),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F0SweepScene {
    pub wavelength: Length,
    pub objective: ObjectiveConfig,
    pub beams: Vec<BeamConfig>,
    pub f0_start: f64,
    pub f0_stop: f64,
    pub f0_step: f64,
    pub x_half: Length,
    pub z_half: Length,
    pub samples: usize,
    pub depth: Temperature,
    pub fit_fraction: f64,
    pub fit_samples: usize,
}

impl Default for F0SweepScene {
    fn default() -> Self {
        F0SweepScene {
            wavelength: um(1.0),
            objective: ObjectiveConfig::default(),
            beams: default_beams(),
            f0_start: 0.2,
            f0_stop: 1.6,
            f0_step: 0.02,
            x_half: um(3.0),
            z_half: um(10.0),
            samples: 2001,
            depth: Temperature::from_si(1e-3),
            fit_fraction: 0.1,
            fit_samples: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimalF0Scene {
    pub wavelength: Length,
    pub objective: ObjectiveConfig,
    /// Radial orders for the paraxial Gouy-gradient curves.
    pub orders: Vec<u32>,
    pub f0_start: f64,
    pub f0_stop: f64,
    pub f0_samples: usize,
    /// Beams whose vector on-axis phase gradient is computed.
    pub beams: Vec<BeamConfig>,
    pub gradient_filling_factors: Vec<f64>,
    pub z_window: Length,
    pub z_samples: usize,
}

impl Default for OptimalF0Scene {
    fn default() -> Self {
        OptimalF0Scene {
            wavelength: um(1.0),
            objective: ObjectiveConfig::default(),
            orders: (0..=6).collect(),
            f0_start: 0.1,
            f0_stop: 1.0,
            f0_samples: 181,
            beams: vec![BeamConfig::new("E0", &[0]), BeamConfig::new("E4", &[4])],
            gradient_filling_factors: vec![0.3, 0.36, 0.45, 1.0, 3.0],
            z_window: um(5.0),
            z_samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub z_start: Length,
    pub a_accel: Acceleration,
    pub t_accel: Duration,
    pub t_const: Duration,
    pub a_decel: Acceleration,
    pub t_decel: Duration,
    /// Rows in the written focus-trajectory table.
    pub samples: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            z_start: um(600.0),
            a_accel: Acceleration::from_si(1.0),
            t_accel: Duration::from_si(20e-3),
            t_const: Duration::from_si(10e-3),
            a_decel: Acceleration::from_si(-1.0),
            t_decel: Duration::from_si(20e-3),
            samples: 1001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportScene {
    pub wavelength: Length,
    pub waist: Length,
    pub beams: Vec<BeamConfig>,
    pub reflectivity: f64,
    pub surface: Length,
    pub depth: Temperature,
    pub temperature: Temperature,
    pub n_atoms: usize,
    pub profile: ProfileConfig,
    pub hold: Duration,
    /// Constant acceleration along z (negative points at the surface).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gravity: Option<Acceleration>,
    /// Fixed step; absent means the adaptive schedule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<Duration>,
    pub knot_interval: Duration,
    pub steps_per_period: f64,
    pub landscape_range: Length,
    /// Write the focus trajectory only and skip the Monte Carlo.
    pub profile_only: bool,
}

impl Default for TransportScene {
    fn default() -> Self {
        TransportScene {
            wavelength: um(1.0),
            waist: um(1.0),
            beams: default_beams(),
            reflectivity: -0.8,
            surface: um(0.0),
            depth: Temperature::from_si(1e-3),
            temperature: Temperature::from_si(100e-6),
            n_atoms: 1000,
            profile: ProfileConfig::default(),
            hold: Duration::from_si(2e-3),
            gravity: None,
            dt: None,
            knot_interval: Duration::from_si(1e-4),
            steps_per_period: 50.0,
            landscape_range: um(30.0),
            profile_only: false,
        }
    }
}

impl SceneConfig {
    pub fn new(seed: u64, scene: Scene) -> Self {
        SceneConfig {
            seed,
            output: None,
            scene,
        }
    }

    /// Parse a TOML document, reporting the path of the first bad field.
    ///
    /// The scene table is decoded in a second step once its `kind` is known,
    /// so that field paths survive into the error message.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            seed: u64,
            #[serde(default)]
            output: Option<PathBuf>,
            scene: toml::Table,
        }
        fn typed<T: serde::de::DeserializeOwned>(table: toml::Table) -> Result<T, CliError> {
            serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
                let path = e.path().to_string();
                let at = if path == "." {
                    "scene".to_string()
                } else {
                    format!("scene.{path}")
                };
                CliError::config(&at, e.into_inner().to_string().lines().next().unwrap_or_default())
            })
        }
        let raw: Raw = serde_path_to_error::deserialize(toml::Deserializer::new(text)).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(&path, e.into_inner().message().trim())
        })?;
        let mut table = raw.scene;
        let kind = match table.remove("kind") {
            Some(toml::Value::String(k)) => k,
            Some(_) => return Err(CliError::config("scene.kind", "must be a string")),
            None => return Err(CliError::config("scene.kind", "missing field `kind`")),
        };
        let scene = match kind.as_str() {
            "paraxial-field" => Scene::ParaxialField(typed(table)?),
            "reflection-fringes" => Scene::ReflectionFringes(typed(table)?),
            "slm-verify" => Scene::SlmVerify(typed(table)?),
            "debye-field" => Scene::DebyeField(typed(table)?),
            "ellipticity" => Scene::Ellipticity(typed(table)?),
            "f0-sweep" => Scene::F0Sweep(typed(table)?),
            "optimal-f0" => Scene::OptimalF0(typed(table)?),
            "transport-1d" => Scene::Transport1d(typed(table)?),
            "transport-3d" => Scene::Transport3d(typed(table)?),
            other => {
                return Err(CliError::config(
                    "scene.kind",
                    &format!(
                        "unknown scene kind {other:?}; expected one of paraxial-field, reflection-fringes, \
                         slm-verify, debye-field, ellipticity, f0-sweep, optimal-f0, transport-1d, transport-3d"
                    ),
                ))
            }
        };
        let mut cfg = SceneConfig {
            seed: raw.seed,
            output: raw.output,
            scene,
        };
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Read a TOML config, or the resolved config embedded in a manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: crate::manifest::Manifest =
                serde_json::from_str(&text).map_err(|e| CliError::config("manifest", &e.to_string()))?;
            let mut cfg = m.config;
            cfg.resolve()?;
            return Ok(cfg);
        }
        Self::from_toml(&text)
    }

    /// Fill implicit values and validate ranges that serde cannot express.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        fn beams(list: &mut [BeamConfig], at: &str) -> Result<(), CliError> {
            if list.is_empty() {
                return Err(CliError::config(at, "at least one beam is required"));
            }
            for (i, b) in list.iter_mut().enumerate() {
                b.resolve();
                b.check(&format!("{at}[{i}]"))?;
            }
            let mut names: Vec<&str> = list.iter().map(|b| b.name.as_str()).collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::config(at, "beam names must be unique"));
            }
            Ok(())
        }
        fn positive(v: f64, at: &str) -> Result<(), CliError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(at, "must be positive"))
            }
        }
        fn min_count(n: usize, min: usize, at: &str) -> Result<(), CliError> {
            if n >= min {
                Ok(())
            } else {
                Err(CliError::config(at, &format!("must be at least {min}")))
            }
        }
        fn fraction(v: f64, at: &str) -> Result<(), CliError> {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(CliError::config(at, "must lie in (0, 1]"))
            }
        }
        match &mut self.scene {
            Scene::ParaxialField(s) => {
                beams(&mut s.beams, "scene.beams")?;
                positive(s.wavelength.si(), "scene.wavelength")?;
                positive(s.waist.si(), "scene.waist")?;
                positive(s.x_half.si(), "scene.x_half")?;
                positive(s.z_half.si(), "scene.z_half")?;
                min_count(s.samples, 101, "scene.samples")?;
                min_count(s.fit_samples, 7, "scene.fit_samples")?;
                min_count(s.schrodinger_points, 101, "scene.schrodinger_points")?;
                fraction(s.fit_fraction, "scene.fit_fraction")?;
                positive(s.depth.si(), "scene.depth")?;
                s.fringes.check("scene.fringes")?;
            }
            Scene::ReflectionFringes(s) => {
                beams(&mut s.beams, "scene.beams")?;
                positive(s.wavelength.si(), "scene.wavelength")?;
                s.fringes.check("scene.fringes")?;
                s.map.check("scene.map")?;
                if s.map.z_min.si() < s.fringes.surface.si() {
                    return Err(CliError::config(
                        "scene.map.z_min",
                        "the map must stay on the vacuum side of the surface",
                    ));
                }
            }
            Scene::SlmVerify(s) => {
                s.beam.resolve();
                s.beam.check("scene.beam")?;
                min_count(s.grid, 64, "scene.grid")?;
                min_count(s.grating_period_px, 2, "scene.grating_period_px")?;
                min_count(s.window_samples, 5, "scene.window_samples")?;
                min_count(s.axial_samples, 5, "scene.axial_samples")?;
                positive(s.pixel_pitch.si(), "scene.pixel_pitch")?;
                positive(s.source_waist.si(), "scene.source_waist")?;
                positive(s.input_waist.si(), "scene.input_waist")?;
                positive(s.focal_length.si(), "scene.focal_length")?;
                if s.aperture_radius.si() == 0.0 {
                    s.aperture_radius = Length::from_si(0.5 * s.grid as f64 * s.pixel_pitch.si());
                }
                positive(s.aperture_radius.si(), "scene.aperture_radius")?;
            }
            Scene::DebyeField(s) => {
                beams(&mut s.beams, "scene.beams")?;
                positive(s.x_half.si(), "scene.x_half")?;
                positive(s.z_half.si(), "scene.z_half")?;
                min_count(s.samples, 101, "scene.samples")?;
                min_count(s.fit_samples, 7, "scene.fit_samples")?;
                fraction(s.fit_fraction, "scene.fit_fraction")?;
                positive(s.depth.si(), "scene.depth")?;
                for f in &s.e2_filling_factors {
                    positive(*f, "scene.e2_filling_factors")?;
                }
                s.map.check("scene.map")?;
            }
            Scene::Ellipticity(s) => {
                beams(&mut s.beams, "scene.beams")?;
                s.map.check("scene.map")?;
            }
            Scene::F0Sweep(s) => {
                beams(&mut s.beams, "scene.beams")?;
                positive(s.f0_start, "scene.f0_start")?;
                positive(s.f0_step, "scene.f0_step")?;
                if s.f0_stop < s.f0_start {
                    return Err(CliError::config("scene.f0_stop", "must not be below f0_start"));
                }
                min_count(s.samples, 101, "scene.samples")?;
                min_count(s.fit_samples, 7, "scene.fit_samples")?;
                fraction(s.fit_fraction, "scene.fit_fraction")?;
            }
            Scene::OptimalF0(s) => {
                beams(&mut s.beams, "scene.beams")?;
                positive(s.f0_start, "scene.f0_start")?;
                if s.f0_stop <= s.f0_start {
                    return Err(CliError::config("scene.f0_stop", "must exceed f0_start"));
                }
                min_count(s.f0_samples, 2, "scene.f0_samples")?;
                min_count(s.z_samples, 3, "scene.z_samples")?;
                positive(s.z_window.si(), "scene.z_window")?;
            }
            Scene::Transport1d(s) | Scene::Transport3d(s) => {
                beams(&mut s.beams, "scene.beams")?;
                min_count(s.n_atoms, 1, "scene.n_atoms")?;
                min_count(s.profile.samples, 2, "scene.profile.samples")?;
                positive(s.landscape_range.si(), "scene.landscape_range")?;
                positive(s.knot_interval.si(), "scene.knot_interval")?;
                if s.steps_per_period < 50.0 {
                    return Err(CliError::config("scene.steps_per_period", "must be at least 50"));
                }
                if s.hold.si() < 0.0 {
                    return Err(CliError::config("scene.hold", "must not be negative"));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene configs always serialize")
    }

    /// Objective parameters, for scenes that have them.
    pub fn objective(&self) -> Option<&ObjectiveConfig> {
        match &self.scene {
            Scene::ReflectionFringes(s) => Some(&s.objective),
            Scene::DebyeField(s) => Some(&s.objective),
            Scene::Ellipticity(s) => Some(&s.objective),
            Scene::F0Sweep(s) => Some(&s.objective),
            Scene::OptimalF0(s) => Some(&s.objective),
            _ => None,
        }
    }
}

impl FringeConfig {
    fn check(&self, at: &str) -> Result<(), CliError> {
        if self.reflectivity.is_nan() || self.reflectivity.abs() > 1.0 {
            return Err(CliError::config(&format!("{at}.reflectivity"), "|r| must not exceed 1"));
        }
        if self.z_max.si() <= 0.0 {
            return Err(CliError::config(&format!("{at}.z_max"), "must be positive"));
        }
        if self.samples_per_wavelength < 16 {
            return Err(CliError::config(
                &format!("{at}.samples_per_wavelength"),
                "must be at least 16",
            ));
        }
        if self.contrast_at.si() <= 0.0 || self.contrast_at.si() >= self.z_max.si() {
            return Err(CliError::config(
                &format!("{at}.contrast_at"),
                "must lie inside (0, z_max)",
            ));
        }
        Ok(())
    }
}

impl MapConfig {
    fn check(&self, at: &str) -> Result<(), CliError> {
        if self.x_half.si() <= 0.0 || self.z_max.si() <= self.z_min.si() {
            return Err(CliError::config(at, "empty map extent"));
        }
        if self.nx < 3 || self.nz < 3 {
            return Err(CliError::config(at, "need at least 3 samples per axis"));
        }
        Ok(())
    }
}
