//! Classical Monte Carlo of atoms carried by a moving tweezer toward a
//! partially reflecting surface, and delivery statistics over the surface
//! fringe traps.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{kelvin_to_joule, BOLTZMANN};
use crate::debye::ReflectedFocus;
use crate::error::{invalid, Error, Result};
use crate::metrics::fit_curvature;
use crate::paraxial::{reflected_field, reflected_on_axis, LgSuperposition, ReflectorModel};

/// Piecewise focus trajectory: accelerate toward the surface, cruise,
/// decelerate, then hold at `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub z_start: f64,
    pub a_accel: f64,
    pub t_accel: f64,
    pub t_const: f64,
    pub a_decel: f64,
    pub t_decel: f64,
}

impl MotionProfile {
    pub fn new(z_start: f64, a_accel: f64, t_accel: f64, t_const: f64, a_decel: f64, t_decel: f64) -> Result<Self> {
        let p = MotionProfile {
            z_start,
            a_accel,
            t_accel,
            t_const,
            a_decel,
            t_decel,
        };
        p.validate()?;
        Ok(p)
    }

    /// 600 µm start, 1 m/s² for 20 ms, 10 ms at 20 mm/s, 20 ms braking.
    pub fn standard() -> Self {
        MotionProfile {
            z_start: 600e-6,
            a_accel: 1.0,
            t_accel: 20e-3,
            t_const: 10e-3,
            a_decel: -1.0,
            t_decel: 20e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.z_start,
            self.a_accel,
            self.t_accel,
            self.t_const,
            self.a_decel,
            self.t_decel,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("profile", "all entries must be finite"));
        }
        if self.t_accel < 0.0 || self.t_const < 0.0 || self.t_decel < 0.0 || self.z_start < 0.0 {
            return Err(invalid("profile", "durations and start position must be non-negative"));
        }
        let v = self.a_accel * self.t_accel;
        let scale = v.abs().max(self.a_decel.abs() * self.t_decel).max(1e-30);
        if (v + self.a_decel * self.t_decel).abs() > 1e-9 * scale {
            return Err(invalid(
                "profile",
                "final velocity must vanish (a_accel t_accel = -a_decel t_decel)",
            ));
        }
        let travel = 0.5 * self.a_accel * self.t_accel.powi(2)
            + v * self.t_const
            + 0.5 * self.a_decel.abs() * self.t_decel.powi(2);
        if (travel - self.z_start).abs() > 1e-9 * self.z_start.max(1e-30) {
            return Err(invalid(
                "profile",
                format!(
                    "segments cover {travel:e} m but the start is {:e} m from the surface",
                    self.z_start
                ),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t_accel + self.t_const + self.t_decel
    }

    /// Scales every duration by `s` and the accelerations by `1/s^2`.
    pub fn stretched(&self, s: f64) -> Result<Self> {
        MotionProfile::new(
            self.z_start,
            self.a_accel / (s * s),
            self.t_accel * s,
            self.t_const * s,
            self.a_decel / (s * s),
            self.t_decel * s,
        )
    }
}

/// Focus position at time `t` (the focus moves toward `z = 0`).
pub fn focus_position(profile: &MotionProfile, t: f64) -> f64 {
    let p = profile;
    let v = p.a_accel * p.t_accel;
    let t1 = p.t_accel;
    let t2 = t1 + p.t_const;
    let t3 = t2 + p.t_decel;
    let travelled = if t <= 0.0 {
        0.0
    } else if t < t1 {
        0.5 * p.a_accel * t * t
    } else if t < t2 {
        0.5 * p.a_accel * t1 * t1 + v * (t - t1)
    } else if t < t3 {
        let s = t - t2;
        0.5 * p.a_accel * t1 * t1 + v * p.t_const + v * s + 0.5 * p.a_decel * s * s
    } else {
        return 0.0;
    };
    p.z_start - travelled
}

/// Optical potential with a movable focus.
pub trait PotentialField: Sync {
    /// Potential energy [J] at `p` with the focus at axial position `z_focus`.
    fn potential(&self, p: [f64; 3], z_focus: f64) -> f64;

    fn on_axis(&self, z: f64, z_focus: f64) -> f64 {
        self.potential([0.0, 0.0, z], z_focus)
    }

    /// Length scales `(transverse, axial)` of the focus, used for sampling
    /// and step-size estimates.
    fn scales(&self) -> (f64, f64);

    fn wavelength(&self) -> f64;
}

/// Paraxial standing-wave potential `-U0 |E_inc + r E_img|^2 / I_focus`.
#[derive(Debug, Clone)]
pub struct ParaxialPotential {
    pub spec: LgSuperposition,
    pub reflector: ReflectorModel,
    pub depth: f64,
    peak: f64,
}

impl ParaxialPotential {
    pub fn new(spec: LgSuperposition, reflector: ReflectorModel, depth: f64) -> Result<Self> {
        if !(depth > 0.0) {
            return Err(invalid("depth", "trap depth must be positive"));
        }
        let peak = spec.focal_intensity();
        Ok(ParaxialPotential {
            spec,
            reflector,
            depth,
            peak,
        })
    }
}

impl PotentialField for ParaxialPotential {
    fn potential(&self, p: [f64; 3], z_focus: f64) -> f64 {
        let e = reflected_field(&self.spec, &self.reflector, z_focus, p[0], p[1], p[2]);
        -self.depth * e.norm_sqr() / self.peak
    }

    fn on_axis(&self, z: f64, z_focus: f64) -> f64 {
        let e = reflected_on_axis(&self.spec, &self.reflector, z_focus, z);
        -self.depth * e.norm_sqr() / self.peak
    }

    fn scales(&self) -> (f64, f64) {
        let w = self.spec.waist();
        (w / (2 * self.spec.max_order() + 1) as f64, self.spec.rayleigh_range())
    }

    fn wavelength(&self) -> f64 {
        self.spec.wavelength()
    }
}

/// Vector (Debye-Wolf) potential for spot checks; the focus offset is
/// applied by shifting the evaluation point, the mirror stays at its place.
#[derive(Debug, Clone)]
pub struct DebyePotential {
    pub focus: ReflectedFocus,
    pub depth: f64,
    peak: f64,
}

impl DebyePotential {
    pub fn new(focus: ReflectedFocus, depth: f64) -> Result<Self> {
        if !(depth > 0.0) {
            return Err(invalid("depth", "trap depth must be positive"));
        }
        let peak = focus.focus.intensity(0.0, 0.0, 0.0);
        Ok(DebyePotential { focus, depth, peak })
    }
}

impl PotentialField for DebyePotential {
    fn potential(&self, p: [f64; 3], z_focus: f64) -> f64 {
        let mut f = self.focus.clone();
        f.z_focus = z_focus;
        let z = p[2].max(f.reflector.z_surface);
        let e: [Complex64; 3] = f.field(p[0], p[1], z).expect("clamped to the vacuum side");
        -self.depth * e.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.peak
    }

    fn scales(&self) -> (f64, f64) {
        let l = self.focus.focus.setup().wavelength;
        (0.5 * l, 2.0 * l)
    }

    fn wavelength(&self) -> f64 {
        self.focus.focus.setup().wavelength
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportMode {
    Axial1d,
    Full3d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomEnsemble {
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
    pub mass: f64,
    pub temperature: f64,
    pub seed: u64,
}

/// Local harmonic frequencies of `field` at the focus `(0, 0, z_focus)`.
pub fn local_frequencies(field: &dyn PotentialField, z_focus: f64, mass: f64) -> Result<[f64; 3]> {
    let (wt, wz) = field.scales();
    let mut out = [0.0; 3];
    for axis in 0..3 {
        let h = 0.05 * if axis == 2 { wz } else { wt };
        let qs: Vec<f64> = (0..41).map(|i| -h + 2.0 * h * i as f64 / 40.0).collect();
        let us: Vec<f64> = qs
            .iter()
            .map(|&q| {
                let mut p = [0.0, 0.0, z_focus];
                p[axis] += q;
                field.potential(p, z_focus)
            })
            .collect();
        let k = fit_curvature(&qs, &us, 0.0)?;
        if !(k > 0.0) {
            return Err(Error::NegativeCurvature {
                axis: ["x", "y", "z"][axis],
                curvature: k,
            });
        }
        out[axis] = (k / mass).sqrt();
    }
    Ok(out)
}

fn atom_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Boltzmann ensemble in the harmonic approximation of the trap at `t = 0`.
///
/// Atom `i` draws `x, y, z, vx, vy, vz` in that order from its own ChaCha
/// stream, so it is reproducible in isolation. In axial mode the transverse
/// coordinates are set to zero after drawing.
pub fn sample_ensemble(
    n: usize,
    temperature: f64,
    field: &dyn PotentialField,
    z_focus: f64,
    mass: f64,
    mode: TransportMode,
    seed: u64,
) -> Result<AtomEnsemble> {
    if n == 0 {
        return Err(invalid("n_atoms", "at least one atom is required"));
    }
    if !(temperature >= 0.0) || !(mass > 0.0) {
        return Err(invalid(
            "temperature",
            "temperature must be non-negative and mass positive",
        ));
    }
    let depth = -field.potential([0.0, 0.0, z_focus], z_focus);
    if temperature > 0.0 && kelvin_to_joule(temperature) >= depth {
        return Err(Error::TemperatureTooHigh {
            temperature,
            depth_kelvin: depth / BOLTZMANN,
        });
    }
    let omega = local_frequencies(field, z_focus, mass)?;
    let kt = kelvin_to_joule(temperature);
    let sq: Vec<f64> = omega.iter().map(|w| (kt / (mass * w * w)).sqrt()).collect();
    let sv = (kt / mass).sqrt();
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = atom_rng(seed, i);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut p = [g() * sq[0], g() * sq[1], z_focus + g() * sq[2]];
        let mut v = [g() * sv, g() * sv, g() * sv];
        if mode == TransportMode::Axial1d {
            p[0] = 0.0;
            p[1] = 0.0;
            v[0] = 0.0;
            v[1] = 0.0;
        }
        positions.push(p);
        velocities.push(v);
    }
    Ok(AtomEnsemble {
        positions,
        velocities,
        mass,
        temperature,
        seed,
    })
}

/// Step-size schedule: on each knot interval the step resolves the fastest
/// local oscillation (or instability) with `steps_per_period` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtSchedule {
    pub knot_interval: f64,
    /// Step count per knot interval.
    pub steps: Vec<usize>,
}

impl DtSchedule {
    pub fn fixed(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_end > 0.0) {
            return Err(invalid("dt", "time step and duration must be positive"));
        }
        let n = (t_end / dt).ceil() as usize;
        Ok(DtSchedule {
            knot_interval: t_end,
            steps: vec![n.max(1)],
        })
    }

    pub fn total_steps(&self) -> usize {
        self.steps.iter().sum()
    }

    pub fn t_end(&self) -> f64 {
        self.knot_interval * self.steps.len() as f64
    }

    /// Smallest step in the schedule.
    pub fn min_dt(&self) -> f64 {
        self.steps
            .iter()
            .map(|&n| self.knot_interval / n as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Largest `sqrt(|U''|/M)` near the focus at a given time, probed on a dense
/// axial line (and transversally in 3D mode) around the focus and the
/// surface region it approaches.
fn omega_max(field: &dyn PotentialField, z_focus: f64, mass: f64, mode: TransportMode) -> f64 {
    let (wt, wz) = field.scales();
    let lambda = field.wavelength();
    let hz = lambda / 64.0;
    let span = 4.0 * wz;
    let z0 = (z_focus - span).max(0.0);
    let z1 = z_focus + span;
    let n = ((z1 - z0) / hz).ceil() as usize + 1;
    let mut kmax: f64 = 0.0;
    let u: Vec<f64> = (0..n).map(|i| field.on_axis(z0 + i as f64 * hz, z_focus)).collect();
    for i in 1..n - 1 {
        kmax = kmax.max(((u[i + 1] + u[i - 1] - 2.0 * u[i]) / (hz * hz)).abs());
    }
    if mode == TransportMode::Full3d {
        let hx = wt / 32.0;
        for i in (0..n).step_by(4) {
            let z = z0 + i as f64 * hz;
            for axis in 0..2 {
                let mut p = [0.0, 0.0, z];
                p[axis] = hx;
                let up = field.potential(p, z_focus);
                p[axis] = -hx;
                let um = field.potential(p, z_focus);
                kmax = kmax.max(((up + um - 2.0 * u[i]) / (hx * hx)).abs());
            }
        }
    }
    (kmax / mass).sqrt()
}

pub fn auto_schedule(
    field: &dyn PotentialField,
    profile: &MotionProfile,
    t_end: f64,
    mass: f64,
    mode: TransportMode,
    knot_interval: f64,
    steps_per_period: f64,
) -> Result<DtSchedule> {
    if !(knot_interval > 0.0) || !(t_end > 0.0) || !(steps_per_period >= 50.0) {
        return Err(invalid(
            "dt",
            "knot interval and duration must be positive, at least 50 steps per period",
        ));
    }
    let knots = (t_end / knot_interval).ceil() as usize;
    let interval = t_end / knots as f64;
    let om: Vec<f64> = (0..=knots)
        .into_par_iter()
        .map(|j| omega_max(field, focus_position(profile, j as f64 * interval), mass, mode))
        .collect();
    let steps = (0..knots)
        .map(|j| {
            let w = om[j].max(om[j + 1]);
            let dt = 2.0 * std::f64::consts::PI / w / steps_per_period;
            ((interval / dt).ceil() as usize).max(1)
        })
        .collect();
    Ok(DtSchedule {
        knot_interval: interval,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub mode: TransportMode,
    /// Constant acceleration along z, e.g. `-9.81` for gravity toward the
    /// surface. Off by default.
    pub gravity: Option<f64>,
    /// Finite-difference step for forces.
    pub force_step: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            mode: TransportMode::Axial1d,
            gravity: None,
            force_step: 2e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomOutcome {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub lost: bool,
    /// Time of absorption at the surface.
    pub lost_at: Option<f64>,
    /// Energy change over the final static interval, relative to the
    /// potential depth at the focus.
    pub hold_energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRun {
    pub outcomes: Vec<AtomOutcome>,
    pub schedule: DtSchedule,
    pub max_hold_drift: f64,
    pub mean_hold_drift: f64,
    pub drift_warning: bool,
}

/// Mean hold-phase energy drift, relative to the trap depth, above which the
/// time step is reported as too coarse.
pub const DRIFT_WARNING: f64 = 0.05;

struct Dynamics<'a> {
    field: &'a dyn PotentialField,
    profile: &'a MotionProfile,
    opts: IntegrationOptions,
    mass: f64,
}

impl Dynamics<'_> {
    fn accel(&self, p: &[f64; 3], zf: f64) -> [f64; 3] {
        let h = self.opts.force_step;
        let mut a = [0.0; 3];
        let axes = match self.opts.mode {
            TransportMode::Axial1d => 2..3,
            TransportMode::Full3d => 0..3,
        };
        for axis in axes {
            let (up, um) = if self.opts.mode == TransportMode::Axial1d {
                (self.field.on_axis(p[2] + h, zf), self.field.on_axis(p[2] - h, zf))
            } else {
                let mut q = *p;
                q[axis] += h;
                let up = self.field.potential(q, zf);
                q[axis] = p[axis] - h;
                (up, self.field.potential(q, zf))
            };
            a[axis] = -(up - um) / (2.0 * h * self.mass);
        }
        if let Some(g) = self.opts.gravity {
            a[2] += g;
        }
        a
    }

    fn energy(&self, p: &[f64; 3], v: &[f64; 3], zf: f64) -> f64 {
        let u = match self.opts.mode {
            TransportMode::Axial1d => self.field.on_axis(p[2], zf),
            TransportMode::Full3d => self.field.potential(*p, zf),
        };
        let g = self.opts.gravity.map_or(0.0, |g| -self.mass * g * p[2]);
        0.5 * self.mass * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + u + g
    }

    fn run_atom(&self, p0: [f64; 3], v0: [f64; 3], schedule: &DtSchedule) -> AtomOutcome {
        let mut p = p0;
        let mut v = v0;
        let mut t = 0.0;
        let mut a = self.accel(&p, focus_position(self.profile, t));
        let hold_start = self.profile.duration();
        let depth = -self.field.potential([0.0, 0.0, 0.0], 0.0);
        let mut e_hold = None;
        for (j, &n) in schedule.steps.iter().enumerate() {
            let t0 = j as f64 * schedule.knot_interval;
            let dt = schedule.knot_interval / n as f64;
            for s in 0..n {
                if e_hold.is_none() && t >= hold_start {
                    e_hold = Some(self.energy(&p, &v, 0.0));
                }
                for i in 0..3 {
                    v[i] += 0.5 * dt * a[i];
                    p[i] += dt * v[i];
                }
                t = t0 + (s + 1) as f64 * dt;
                if p[2] < 0.0 {
                    return AtomOutcome {
                        position: p,
                        velocity: v,
                        lost: true,
                        lost_at: Some(t),
                        hold_energy_drift: 0.0,
                    };
                }
                a = self.accel(&p, focus_position(self.profile, t));
                for i in 0..3 {
                    v[i] += 0.5 * dt * a[i];
                }
            }
        }
        let drift = e_hold.map_or(0.0, |e0| (self.energy(&p, &v, 0.0) - e0).abs() / depth);
        AtomOutcome {
            position: p,
            velocity: v,
            lost: false,
            lost_at: None,
            hold_energy_drift: drift,
        }
    }
}

/// Velocity-Verlet integration of every atom through the moving potential.
/// Atoms are independent, so the result does not depend on the number of
/// worker threads.
pub fn integrate(
    ensemble: &AtomEnsemble,
    field: &dyn PotentialField,
    profile: &MotionProfile,
    schedule: &DtSchedule,
    opts: IntegrationOptions,
) -> Result<TransportRun> {
    if ensemble.positions.len() != ensemble.velocities.len() || ensemble.positions.is_empty() {
        return Err(Error::ShapeMismatch("ensemble positions and velocities differ".into()));
    }
    if ensemble
        .positions
        .iter()
        .chain(&ensemble.velocities)
        .any(|q| q.iter().any(|v| !v.is_finite()))
    {
        return Err(invalid("ensemble", "non-finite coordinates"));
    }
    if !(opts.force_step > 0.0) {
        return Err(invalid("force_step", "must be positive"));
    }
    let dynamics = Dynamics {
        field,
        profile,
        opts,
        mass: ensemble.mass,
    };
    let outcomes: Vec<AtomOutcome> = ensemble
        .positions
        .par_iter()
        .zip(&ensemble.velocities)
        .map(|(p, v)| dynamics.run_atom(*p, *v, schedule))
        .collect();
    let max_hold_drift = outcomes.iter().map(|o| o.hold_energy_drift).fold(0.0, f64::max);
    let survivors = outcomes.iter().filter(|o| !o.lost).count().max(1);
    let mean_hold_drift = outcomes.iter().map(|o| o.hold_energy_drift).sum::<f64>() / survivors as f64;
    let drift_warning = mean_hold_drift > DRIFT_WARNING;
    if drift_warning {
        log::warn!(
            "mean energy drift {:.2e} of the trap depth during the static hold; the time step is too coarse",
            mean_hold_drift
        );
    }
    Ok(TransportRun {
        outcomes,
        schedule: schedule.clone(),
        max_hold_drift,
        mean_hold_drift,
        drift_warning,
    })
}

/// Sampled on-axis potential with its minima (traps) and maxima (barriers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeLandscape {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    /// Sample indices of local minima, nearest the surface first.
    pub minima: Vec<usize>,
    /// Sample indices of local maxima.
    pub maxima: Vec<usize>,
}

impl FringeLandscape {
    pub fn sample(field: &dyn PotentialField, z_focus: f64, z_max: f64, n: usize) -> Result<Self> {
        if !(z_max > 0.0) || n < 3 {
            return Err(invalid("z_max", "need a positive range and at least 3 samples"));
        }
        let z: Vec<f64> = (0..n).map(|i| z_max * i as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = z.par_iter().map(|&q| field.on_axis(q, z_focus)).collect();
        Ok(Self::from_samples(z, u))
    }

    pub fn from_samples(z: Vec<f64>, u: Vec<f64>) -> Self {
        let n = u.len();
        let minima = (1..n.saturating_sub(1))
            .filter(|&i| u[i] < u[i - 1] && u[i] <= u[i + 1])
            .collect();
        let maxima = (1..n.saturating_sub(1))
            .filter(|&i| u[i] > u[i - 1] && u[i] >= u[i + 1])
            .collect();
        FringeLandscape { z, u, minima, maxima }
    }

    /// Trap centers, refined by a parabola through the neighboring samples.
    pub fn trap_centers(&self) -> Vec<f64> {
        self.minima
            .iter()
            .map(|&i| {
                let (a, b, c) = (self.u[i - 1], self.u[i], self.u[i + 1]);
                let h = self.z[i + 1] - self.z[i];
                let den = a - 2.0 * b + c;
                if den > 0.0 {
                    self.z[i] + 0.5 * h * (a - c) / den
                } else {
                    self.z[i]
                }
            })
            .collect()
    }

    /// Barrier heights on either side of trap `k`: the neighboring maxima,
    /// or the line endpoints (the surface for the first trap).
    fn barriers(&self, k: usize) -> (usize, usize) {
        let m = self.minima[k];
        let lo = self.maxima.iter().rev().find(|&&j| j < m).copied().unwrap_or(0);
        let hi = self
            .maxima
            .iter()
            .find(|&&j| j > m)
            .copied()
            .unwrap_or(self.z.len() - 1);
        (lo, hi)
    }

    fn interp(&self, z: f64) -> Option<f64> {
        let n = self.z.len();
        if z < self.z[0] || z > self.z[n - 1] {
            return None;
        }
        let h = self.z[1] - self.z[0];
        let i = (((z - self.z[0]) / h).floor() as usize).min(n - 2);
        let f = (z - self.z[i]) / h;
        Some(self.u[i] * (1.0 - f) + self.u[i + 1] * f)
    }
}

/// Local minima of the on-axis potential, nearest the surface first.
pub fn find_fringe_traps(landscape: &FringeLandscape) -> Vec<f64> {
    landscape.trap_centers()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryHistogram {
    pub trap_centers: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub lost: f64,
}

impl DeliveryHistogram {
    pub fn p1(&self) -> f64 {
        self.probabilities.first().copied().unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,z,probability\n");
        for (i, (z, p)) in self.trap_centers.iter().zip(&self.probabilities).enumerate() {
            s.push_str(&format!("{},{:e},{}\n", i + 1, z, p));
        }
        s.push_str(&format!("lost,,{}\n", self.lost));
        s
    }
}

/// Assigns each surviving atom to the basin (between the barriers flanking a
/// trap) that contains its final axial position, provided its axial energy
/// `M v_z^2 / 2 + U(0, 0, z)` lies below both barriers. Everything else,
/// including atoms absorbed by the surface, counts as lost.
pub fn delivery_histogram(outcomes: &[AtomOutcome], landscape: &FringeLandscape, mass: f64) -> DeliveryHistogram {
    let n = outcomes.len().max(1);
    let mut counts = vec![0usize; landscape.minima.len()];
    let mut unassigned = 0usize;
    for o in outcomes {
        let basin = if o.lost {
            None
        } else {
            landscape.interp(o.position[2]).and_then(|u| {
                let e = 0.5 * mass * o.velocity[2] * o.velocity[2] + u;
                (0..landscape.minima.len()).find(|&k| {
                    let (lo, hi) = landscape.barriers(k);
                    let inside = o.position[2] >= landscape.z[lo] && o.position[2] <= landscape.z[hi];
                    inside && e < landscape.u[lo].min(landscape.u[hi])
                })
            })
        };
        match basin {
            Some(k) => counts[k] += 1,
            None => unassigned += 1,
        }
    }
    DeliveryHistogram {
        trap_centers: landscape.trap_centers(),
        probabilities: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        lost: unassigned as f64 / n as f64,
    }
}

/// Full transport scenario in the paraxial fringe model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportScenario {
    pub spec: LgSuperposition,
    pub reflector: ReflectorModel,
    pub depth: f64,
    pub mass: f64,
    pub temperature: f64,
    pub n_atoms: usize,
    pub seed: u64,
    pub profile: MotionProfile,
    /// Static interval after the focus reaches the surface.
    pub hold: f64,
    pub mode: TransportMode,
    pub gravity: Option<f64>,
    /// Fixed step; `None` derives the schedule from the local frequencies.
    pub dt: Option<f64>,
    pub knot_interval: f64,
    pub steps_per_period: f64,
    /// Range of the final on-axis landscape used for basin assignment.
    pub landscape_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub histogram: DeliveryHistogram,
    pub landscape: FringeLandscape,
    pub total_steps: usize,
    pub min_dt: f64,
    pub max_hold_drift: f64,
    pub mean_hold_drift: f64,
    pub drift_warning: bool,
}

impl TransportScenario {
    pub fn new(
        spec: LgSuperposition,
        reflector: ReflectorModel,
        mode: TransportMode,
        n_atoms: usize,
        seed: u64,
    ) -> Self {
        TransportScenario {
            spec,
            reflector,
            depth: kelvin_to_joule(1e-3),
            mass: crate::constants::CESIUM_MASS,
            temperature: 100e-6,
            n_atoms,
            seed,
            profile: MotionProfile::standard(),
            hold: 2e-3,
            mode,
            gravity: None,
            dt: None,
            knot_interval: 1e-4,
            steps_per_period: 50.0,
            landscape_range: 30e-6,
        }
    }

    pub fn run(&self) -> Result<TransportResult> {
        self.profile.validate()?;
        let field = ParaxialPotential::new(self.spec.clone(), self.reflector, self.depth)?;
        let t_end = self.profile.duration() + self.hold;
        let schedule = match self.dt {
            Some(dt) => DtSchedule::fixed(dt, t_end)?,
            None => auto_schedule(
                &field,
                &self.profile,
                t_end,
                self.mass,
                self.mode,
                self.knot_interval,
                self.steps_per_period,
            )?,
        };
        let ens = sample_ensemble(
            self.n_atoms,
            self.temperature,
            &field,
            self.profile.z_start,
            self.mass,
            self.mode,
            self.seed,
        )?;
        let opts = IntegrationOptions {
            mode: self.mode,
            gravity: self.gravity,
            ..IntegrationOptions::default()
        };
        let run = integrate(&ens, &field, &self.profile, &schedule, opts)?;
        let n_land = (self.landscape_range / (self.spec.wavelength() / 400.0)).ceil() as usize + 1;
        let landscape = FringeLandscape::sample(&field, 0.0, self.landscape_range, n_land)?;
        let histogram = delivery_histogram(&run.outcomes, &landscape, self.mass);
        Ok(TransportResult {
            histogram,
            landscape,
            total_steps: schedule.total_steps(),
            min_dt: schedule.min_dt(),
            max_hold_drift: run.max_hold_drift,
            mean_hold_drift: run.mean_hold_drift,
            drift_warning: run.drift_warning,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CESIUM_MASS;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    const UM: f64 = 1e-6;

    struct Harmonic {
        k: [f64; 3],
        offset: f64,
    }

    impl PotentialField for Harmonic {
        fn potential(&self, p: [f64; 3], zf: f64) -> f64 {
            let d = [p[0], p[1], p[2] - zf - self.offset];
            0.5 * (0..3).map(|i| self.k[i] * d[i] * d[i]).sum::<f64>() - 1e-26
        }
        fn scales(&self) -> (f64, f64) {
            (UM, 3.0 * UM)
        }
        fn wavelength(&self) -> f64 {
            UM
        }
    }

    #[test]
    fn standard_profile_kinematics() {
        let p = MotionProfile::standard();
        p.validate().unwrap();
        assert_abs_diff_eq!(focus_position(&p, 0.0), 600e-6, epsilon = 1e-15);
        assert_abs_diff_eq!(focus_position(&p, 0.02), 400e-6, epsilon = 1e-15);
        assert_abs_diff_eq!(focus_position(&p, 0.03), 200e-6, epsilon = 1e-15);
        assert_abs_diff_eq!(focus_position(&p, 0.0499999999), 0.0, epsilon = 1e-12);
        assert_eq!(focus_position(&p, 0.05), 0.0);
        assert_eq!(focus_position(&p, 0.2), 0.0);
    }

    #[test]
    fn profile_closure_enforced() {
        assert!(MotionProfile::new(600e-6, 1.0, 0.02, 0.01, -0.5, 0.02).is_err());
        assert!(MotionProfile::new(500e-6, 1.0, 0.02, 0.01, -1.0, 0.02).is_err());
        let s = MotionProfile::standard().stretched(10.0).unwrap();
        assert_relative_eq!(s.duration(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn cold_ensemble_sits_at_center() {
        let w = 2.0 * PI * 5e4;
        let h = Harmonic {
            k: [CESIUM_MASS * w * w; 3],
            offset: 0.0,
        };
        let e = sample_ensemble(5, 0.0, &h, 2.0 * UM, CESIUM_MASS, TransportMode::Full3d, 1).unwrap();
        for (p, v) in e.positions.iter().zip(&e.velocities) {
            assert_eq!(*p, [0.0, 0.0, 2.0 * UM]);
            assert_eq!(*v, [0.0; 3]);
        }
    }

    #[test]
    fn ensemble_streams_are_per_atom() {
        let w = 2.0 * PI * 5e4;
        let h = Harmonic {
            k: [CESIUM_MASS * w * w; 3],
            offset: 0.0,
        };
        let a = sample_ensemble(10, 1e-8, &h, 0.0, CESIUM_MASS, TransportMode::Full3d, 7).unwrap();
        let b = sample_ensemble(4, 1e-8, &h, 0.0, CESIUM_MASS, TransportMode::Full3d, 7).unwrap();
        assert_eq!(&a.positions[..4], &b.positions[..]);
        let c = sample_ensemble(4, 1e-8, &h, 0.0, CESIUM_MASS, TransportMode::Full3d, 8).unwrap();
        assert_ne!(b.positions, c.positions);
    }

    #[test]
    fn hot_ensemble_rejected() {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let f = ParaxialPotential::new(s, ReflectorModel::none(), kelvin_to_joule(1e-3)).unwrap();
        let err = sample_ensemble(3, 2e-3, &f, 100e-6, CESIUM_MASS, TransportMode::Axial1d, 0).unwrap_err();
        assert!(matches!(err, Error::TemperatureTooHigh { .. }));
    }

    #[test]
    fn harmonic_period() {
        let w = 2.0 * PI * 1e5;
        let h = Harmonic {
            k: [CESIUM_MASS * w * w; 3],
            offset: UM,
        };
        let profile = MotionProfile::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let period = 2.0 * PI / w;
        // ten periods, 200 steps each, starting at rest from an offset
        let sched = DtSchedule {
            knot_interval: period / 200.0 * 2000.0,
            steps: vec![2000],
        };
        let ens = AtomEnsemble {
            positions: vec![[0.0, 0.0, UM + 5e-8]],
            velocities: vec![[0.0; 3]],
            mass: CESIUM_MASS,
            temperature: 0.0,
            seed: 0,
        };
        let run = integrate(&ens, &h, &profile, &sched, IntegrationOptions::default()).unwrap();
        let o = run.outcomes[0];
        assert!(!o.lost);
        let phase_error = (-o.velocity[2] / w).atan2(o.position[2] - UM);
        assert!(phase_error.abs() / (20.0 * PI) < 1e-3);
    }

    #[test]
    fn static_energy_conservation() {
        let w = 2.0 * PI * 1e5;
        let h = Harmonic {
            k: [CESIUM_MASS * w * w; 3],
            offset: UM,
        };
        let profile = MotionProfile::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let sched = DtSchedule {
            knot_interval: 2.0 * PI / w / 50.0 * 20_000.0,
            steps: vec![20_000],
        };
        let ens = AtomEnsemble {
            positions: vec![[2e-8, -1e-8, UM + 5e-8]],
            velocities: vec![[1e-3, 0.0, 2e-3]],
            mass: CESIUM_MASS,
            temperature: 0.0,
            seed: 0,
        };
        let opts = IntegrationOptions {
            mode: TransportMode::Full3d,
            ..Default::default()
        };
        let run = integrate(&ens, &h, &profile, &sched, opts).unwrap();
        assert!(run.max_hold_drift < 1e-4, "{}", run.max_hold_drift);
    }

    #[test]
    fn surface_absorbs() {
        let h = Harmonic {
            k: [0.0; 3],
            offset: 0.0,
        };
        let profile = MotionProfile::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let sched = DtSchedule::fixed(1e-7, 1e-4).unwrap();
        let ens = AtomEnsemble {
            positions: vec![[0.0, 0.0, 1e-6], [0.0, 0.0, 1e-6]],
            velocities: vec![[0.0, 0.0, -0.1], [0.0, 0.0, 0.1]],
            mass: CESIUM_MASS,
            temperature: 0.0,
            seed: 0,
        };
        let run = integrate(&ens, &h, &profile, &sched, IntegrationOptions::default()).unwrap();
        assert!(run.outcomes[0].lost);
        assert_relative_eq!(run.outcomes[0].lost_at.unwrap(), 1e-5, max_relative = 0.02);
        assert!(!run.outcomes[1].lost);
    }

    #[test]
    fn fringe_traps() {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let free = ParaxialPotential::new(s.clone(), ReflectorModel::new(0.0, -20.0 * UM).unwrap(), 1e-26).unwrap();
        let land = FringeLandscape::sample(&free, 0.0, 10.0 * UM, 4001).unwrap();
        assert!(land.minima.is_empty());
        let refl = ParaxialPotential::new(s, ReflectorModel::new(-0.8, 0.0).unwrap(), 1e-26).unwrap();
        let land = FringeLandscape::sample(&refl, 0.0, 30.0 * UM, 60001).unwrap();
        let z = find_fringe_traps(&land);
        assert!(z.len() >= 50);
        assert!(z[0] < 0.5 * UM);
        // the Gouy phase stretches the spacing near the focus only
        for w in z.windows(2).filter(|w| w[0] > 20.0 * UM) {
            assert_relative_eq!(w[1] - w[0], 0.5 * UM, max_relative = 0.01);
        }
    }

    #[test]
    fn histogram_conserves_probability() {
        let land = FringeLandscape::from_samples(
            (0..9).map(|i| i as f64).collect(),
            vec![0.0, -1.0, 0.0, -2.0, -0.5, -3.0, -1.0, -1.5, 0.0],
        );
        let at = |z: f64, v: f64, lost: bool| AtomOutcome {
            position: [0.0, 0.0, z],
            velocity: [0.0, 0.0, v],
            lost,
            lost_at: None,
            hold_energy_drift: 0.0,
        };
        let outs = vec![
            at(1.0, 0.0, false),
            at(3.1, 0.0, false),
            at(3.0, 10.0, false),
            at(5.0, 0.0, true),
            at(20.0, 0.0, false),
        ];
        let h = delivery_histogram(&outs, &land, 1.0);
        assert_eq!(h.probabilities.len(), 4);
        assert_abs_diff_eq!(h.probabilities[0], 0.2);
        assert_abs_diff_eq!(h.probabilities[1], 0.2);
        assert_abs_diff_eq!(h.probabilities.iter().sum::<f64>() + h.lost, 1.0, epsilon = 1e-12);
    }
}
