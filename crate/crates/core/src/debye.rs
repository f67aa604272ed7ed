//! Vector focusing of apodized radial LG superpositions through an aplanatic
//! objective (Debye-Wolf integral), planar-mirror superposition and local
//! polarization ellipticity.
//!
//! For an x-polarized pupil field `A(theta)` the focal field is
//!
//! ```text
//! Ex = I0 + I2 cos 2phi,   Ey = I2 sin 2phi,   Ez = -2i I1 cos phi
//! In(rho, z) = int_0^theta_max A sqrt(cos) g_n J_n(k rho sin) exp(-i k z cos) sin dtheta
//! g0 = 1 + cos,  g1 = sin,  g2 = 1 - cos
//! ```
//!
//! The `exp(-ikz cos theta)` sign keeps the propagation direction of the
//! paraxial module (toward -z), so `arg(Ex(0,0,z) e^{ikz})` grows with z.
//! The overall constant prefactor is dropped; every observable is relative.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexVectorGrid, GridSpec};
use crate::paraxial::{unwrap_checked, LgSuperposition, ReflectorModel};
use crate::special::{bessel_j012, gauss_legendre};

/// Objective and pupil parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusingSetup {
    pub na: f64,
    pub focal_length: f64,
    pub filling_factor: f64,
    pub wavelength: f64,
    pub theta_samples: usize,
}

impl FocusingSetup {
    pub const DEFAULT_THETA_SAMPLES: usize = 256;

    pub fn new(na: f64, focal_length: f64, filling_factor: f64, wavelength: f64) -> Result<Self> {
        let s = FocusingSetup {
            na,
            focal_length,
            filling_factor,
            wavelength,
            theta_samples: Self::DEFAULT_THETA_SAMPLES,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_theta_samples(mut self, n: usize) -> Result<Self> {
        self.theta_samples = n;
        self.validate()?;
        Ok(self)
    }

    pub fn with_filling_factor(mut self, f0: f64) -> Result<Self> {
        self.filling_factor = f0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.na > 0.0 && self.na < 1.0) {
            return Err(invalid("na", "numerical aperture must lie in (0, 1)"));
        }
        if !(self.focal_length > 0.0 && self.focal_length.is_finite()) {
            return Err(invalid("focal_length", "must be positive"));
        }
        if !(self.filling_factor > 0.0 && self.filling_factor.is_finite()) {
            return Err(invalid("filling_factor", "must be positive"));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(invalid("wavelength", "must be positive"));
        }
        if self.theta_samples < 64 {
            return Err(invalid("theta_samples", "at least 64 quadrature nodes are required"));
        }
        Ok(())
    }

    pub fn theta_max(&self) -> f64 {
        self.na.asin()
    }

    pub fn pupil_radius(&self) -> f64 {
        self.focal_length * self.na
    }

    pub fn input_waist(&self) -> f64 {
        self.filling_factor * self.pupil_radius()
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// Pupil amplitude at angle `theta`: the superposition's flat-phase (z = 0)
/// profile with waist `F0 * R_p`, sampled at `rho = f sin(theta)` and
/// truncated by the aperture.
pub fn pupil_amplitude(spec: &LgSuperposition, setup: &FocusingSetup, theta: f64) -> Complex64 {
    let rho = setup.focal_length * theta.sin();
    if theta < 0.0 || rho > setup.pupil_radius() * (1.0 + 1e-12) {
        return Complex64::new(0.0, 0.0);
    }
    let scaled = spec
        .with_waist(setup.input_waist())
        .expect("setup validated a positive waist");
    scaled.field(rho, 0.0, 0.0)
}

/// Precomputed quadrature for one (superposition, setup) pair.
#[derive(Debug, Clone)]
pub struct DebyeFocus {
    setup: FocusingSetup,
    k: f64,
    sin_t: Vec<f64>,
    cos_t: Vec<f64>,
    // A(theta) sqrt(cos) sin(theta) * weight
    weight: Vec<Complex64>,
}

impl DebyeFocus {
    pub fn new(spec: &LgSuperposition, setup: &FocusingSetup) -> Result<Self> {
        setup.validate()?;
        let (nodes, w) = gauss_legendre(setup.theta_samples, 0.0, setup.theta_max());
        let mut sin_t = Vec::with_capacity(nodes.len());
        let mut cos_t = Vec::with_capacity(nodes.len());
        let mut weight = Vec::with_capacity(nodes.len());
        for (t, wi) in nodes.iter().zip(&w) {
            let (s, c) = t.sin_cos();
            sin_t.push(s);
            cos_t.push(c);
            weight.push(pupil_amplitude(spec, setup, *t) * (c.sqrt() * s * wi));
        }
        Ok(DebyeFocus {
            setup: *setup,
            k: setup.wavenumber(),
            sin_t,
            cos_t,
            weight,
        })
    }

    pub fn setup(&self) -> &FocusingSetup {
        &self.setup
    }

    /// `[I0, I1, I2]` at cylindrical radius `rho` and axial position `z`.
    pub fn integrals(&self, rho: f64, z: f64) -> [Complex64; 3] {
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        let on_axis = rho == 0.0;
        for i in 0..self.weight.len() {
            let (s, c) = (self.sin_t[i], self.cos_t[i]);
            let prop = Complex64::from_polar(1.0, -self.k * z * c) * self.weight[i];
            if on_axis {
                acc[0] += prop * (1.0 + c);
            } else {
                let j = bessel_j012(self.k * rho * s);
                acc[0] += prop * ((1.0 + c) * j[0]);
                acc[1] += prop * (s * j[1]);
                acc[2] += prop * ((1.0 - c) * j[2]);
            }
        }
        acc
    }

    /// Field at cylindrical coordinates `(rho, phi, z)`.
    pub fn field_cyl(&self, rho: f64, phi: f64, z: f64) -> [Complex64; 3] {
        let [i0, i1, i2] = self.integrals(rho, z);
        let (s2, c2) = (2.0 * phi).sin_cos();
        [i0 + i2 * c2, i2 * s2, Complex64::new(0.0, -2.0) * i1 * phi.cos()]
    }

    pub fn field(&self, x: f64, y: f64, z: f64) -> [Complex64; 3] {
        self.field_cyl(x.hypot(y), y.atan2(x), z)
    }

    pub fn intensity(&self, x: f64, y: f64, z: f64) -> f64 {
        self.field(x, y, z).iter().map(|c| c.norm_sqr()).sum()
    }

    /// Upper bound on |z| for which the Debye representation is used.
    pub fn validity_limit(&self) -> f64 {
        50.0 * self.setup.wavelength
    }
}

/// Debye-Wolf field of `spec` at `(rho, phi, z)`.
pub fn debye_field(
    spec: &LgSuperposition,
    setup: &FocusingSetup,
    rho: f64,
    phi: f64,
    z: f64,
) -> Result<[Complex64; 3]> {
    let focus = DebyeFocus::new(spec, setup)?;
    check_validity(&focus, z)?;
    Ok(focus.field_cyl(rho, phi, z))
}

fn check_validity(focus: &DebyeFocus, z: f64) -> Result<()> {
    if z.abs() > focus.validity_limit() {
        return Err(invalid(
            "z",
            format!("|z| = {z:e} m is beyond the Debye validity range of 50 wavelengths"),
        ));
    }
    Ok(())
}

/// Result of re-evaluating a probe point with doubled quadrature order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub max_relative_change: f64,
    pub converged: bool,
}

/// Relative change of the probe field when `theta_samples` is doubled,
/// measured against the field magnitude. Above 0.1% a warning is logged.
pub fn convergence_check(spec: &LgSuperposition, setup: &FocusingSetup, point: [f64; 3]) -> Result<ConvergenceReport> {
    let a = DebyeFocus::new(spec, setup)?.field(point[0], point[1], point[2]);
    let doubled = setup.with_theta_samples(setup.theta_samples * 2)?;
    let b = DebyeFocus::new(spec, &doubled)?.field(point[0], point[1], point[2]);
    let scale = b
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let change = (0..3).map(|i| (a[i] - b[i]).norm() / scale).fold(0.0, f64::max);
    let converged = change <= 1e-3;
    if !converged {
        log::warn!(
            "Debye quadrature not converged at {point:?}: doubling theta samples changed the field by {:.3}%",
            change * 100.0
        );
    }
    Ok(ConvergenceReport {
        max_relative_change: change,
        converged,
    })
}

/// Focal field on a Cartesian grid. Deterministic and independent of the
/// number of worker threads (no cross-point accumulation).
pub fn render_focal_grid(spec: &LgSuperposition, setup: &FocusingSetup, grid: &GridSpec) -> Result<ComplexVectorGrid> {
    let focus = DebyeFocus::new(spec, setup)?;
    render_with(&focus, grid)
}

pub fn render_with(focus: &DebyeFocus, grid: &GridSpec) -> Result<ComplexVectorGrid> {
    grid.validate()?;
    for z in [grid.origin[2], grid.max_coord(2)] {
        check_validity(focus, z)?;
    }
    let vals: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let [x, y, z] = grid.coords(i);
            focus.field(x, y, z)
        })
        .collect();
    ComplexVectorGrid::from_vectors(*grid, vals)
}

/// Local ellipticity vector `C = Im(e x e*)`, `None` where the field is too
/// weak for the polarization to be defined.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityMap {
    pub spec: GridSpec,
    pub c: Vec<Option<[f64; 3]>>,
}

/// Relative intensity below which polarization is reported as undefined.
pub const POLARIZATION_FLOOR: f64 = 1e-12;

pub fn ellipticity_vector(e: &[Complex64; 3]) -> Option<[f64; 3]> {
    let n2: f64 = e.iter().map(|c| c.norm_sqr()).sum();
    if n2 <= 0.0 {
        return None;
    }
    let n = n2.sqrt();
    let u = [e[0] / n, e[1] / n, e[2] / n];
    let v = [u[0].conj(), u[1].conj(), u[2].conj()];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    Some([cross[0].im, cross[1].im, cross[2].im])
}

pub fn ellipticity_map(grid: &ComplexVectorGrid) -> EllipticityMap {
    let inten = grid.intensity();
    let floor = POLARIZATION_FLOOR * inten.max();
    let c = (0..grid.spec.len())
        .map(|i| {
            if inten.values[i] <= floor {
                None
            } else {
                ellipticity_vector(&grid.vector(i))
            }
        })
        .collect();
    EllipticityMap { spec: grid.spec, c }
}

impl EllipticityMap {
    /// Central-difference derivative of component `comp` along `axis`
    /// (one-sided at the edges). `None` wherever a stencil touches an
    /// undefined sample.
    pub fn gradient(&self, comp: usize, axis: usize) -> Vec<Option<f64>> {
        let g = &self.spec;
        let n = g.shape[axis];
        (0..g.len())
            .map(|idx| {
                let nx = g.shape[0];
                let ny = g.shape[1];
                let mut ijk = [idx % nx, (idx / nx) % ny, idx / (nx * ny)];
                let i = ijk[axis];
                if n < 2 {
                    return None;
                }
                let (lo, hi) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                ijk[axis] = lo;
                let a = self.c[g.index(ijk[0], ijk[1], ijk[2])]?[comp];
                ijk[axis] = hi;
                let b = self.c[g.index(ijk[0], ijk[1], ijk[2])]?[comp];
                Some((b - a) / ((hi - lo) as f64 * g.spacing[axis]))
            })
            .collect()
    }
}

/// Largest `|dC_comp/d axis|` over the central lobe, i.e. over samples whose
/// intensity is at least half the grid maximum.
pub fn max_gradient_in_central_lobe(field: &ComplexVectorGrid, map: &EllipticityMap, comp: usize, axis: usize) -> f64 {
    let inten = field.intensity();
    let half = 0.5 * inten.max();
    map.gradient(comp, axis)
        .iter()
        .zip(&inten.values)
        .filter(|(_, i)| **i >= half)
        .filter_map(|(g, _)| g.map(f64::abs))
        .fold(0.0, f64::max)
}

/// Field evaluator for an incident focus plus its planar-mirror image.
#[derive(Debug, Clone)]
pub struct ReflectedFocus {
    pub focus: DebyeFocus,
    pub reflector: ReflectorModel,
    pub z_focus: f64,
}

/// Incident field `E(x, y, z - z_focus)` plus `r` times its image: transverse
/// components evaluated at the mirrored point `2 z_s - z`, longitudinal
/// component sign-flipped. The propagation phase is part of the Debye field,
/// so standing-wave fringes appear without a separate carrier.
pub fn reflect_planar(focus: DebyeFocus, reflector: ReflectorModel, z_focus: f64) -> ReflectedFocus {
    ReflectedFocus {
        focus,
        reflector,
        z_focus,
    }
}

impl ReflectedFocus {
    pub fn field(&self, x: f64, y: f64, z: f64) -> Result<[Complex64; 3]> {
        if z < self.reflector.z_surface {
            return Err(Error::SurfaceCrossing {
                surface: self.reflector.z_surface,
                z_min: z,
            });
        }
        let inc = self.focus.field(x, y, z - self.z_focus);
        if self.reflector.r == 0.0 {
            return Ok(inc);
        }
        let zi = 2.0 * self.reflector.z_surface - z - self.z_focus;
        let img = self.focus.field(x, y, zi);
        let r = self.reflector.r;
        Ok([inc[0] + r * img[0], inc[1] + r * img[1], inc[2] - r * img[2]])
    }

    pub fn intensity(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        Ok(self.field(x, y, z)?.iter().map(|c| c.norm_sqr()).sum())
    }

    pub fn render(&self, grid: &GridSpec) -> Result<ComplexVectorGrid> {
        grid.validate()?;
        if grid.origin[2] < self.reflector.z_surface {
            return Err(Error::SurfaceCrossing {
                surface: self.reflector.z_surface,
                z_min: grid.origin[2],
            });
        }
        let vals: Vec<[Complex64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                self.field(x, y, z)
            })
            .collect::<Result<_>>()?;
        ComplexVectorGrid::from_vectors(*grid, vals)
    }
}

/// On-axis phase `psi(z) = arg(Ex(0,0,z) e^{ikz})` sampled at `n` points on
/// `[-z_window, z_window]`, unwrapped, and differentiated by central
/// differences. Returns `(z, dpsi/dz)`.
pub fn onaxis_phase_gradient(
    spec: &LgSuperposition,
    setup: &FocusingSetup,
    z_window: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(z_window > 0.0) || n < 3 {
        return Err(invalid("z_window", "need a positive window and at least 3 samples"));
    }
    let focus = DebyeFocus::new(spec, setup)?;
    check_validity(&focus, z_window)?;
    let k = focus.k;
    let focal = focus.field(0.0, 0.0, 0.0)[0].norm();
    let tol = 1e-9 * focal.max(f64::MIN_POSITIVE);
    let phase_at = |z: f64| -> Result<f64> {
        let ex = focus.field(0.0, 0.0, z)[0];
        if ex.norm() < tol {
            return Err(Error::DegeneratePhase {
                z,
                magnitude: ex.norm(),
            });
        }
        Ok((ex * Complex64::from_polar(1.0, k * z)).arg())
    };
    let zs: Vec<f64> = (0..n)
        .map(|i| -z_window + 2.0 * z_window * i as f64 / (n - 1) as f64)
        .collect();
    let raw: Vec<f64> = zs.iter().map(|&z| phase_at(z)).collect::<Result<_>>()?;
    let psi = unwrap_checked(&zs, &raw, phase_at)?;
    let h = zs[1] - zs[0];
    let grad = (0..n)
        .map(|i| {
            if i == 0 {
                (psi[1] - psi[0]) / h
            } else if i == n - 1 {
                (psi[n - 1] - psi[n - 2]) / h
            } else {
                (psi[i + 1] - psi[i - 1]) / (2.0 * h)
            }
        })
        .collect();
    Ok((zs, grad))
}
