//! Paraxial radial Laguerre-Gauss modes (azimuthal index l = 0), their
//! coherent superpositions, Gouy phases, and the single-parameter planar
//! reflection model.
//!
//! Fields propagate toward -z with the carrier `exp(-i k z)`. Mode amplitudes
//! returned here exclude the carrier; it is applied only where interference
//! with a reflected wave needs it.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, ScalarGrid};
use crate::special::assoc_laguerre;

/// One radial mode with its complex weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgTerm {
    pub p: u32,
    pub c: Complex64,
}

/// Coherent sum of radial LG modes sharing waist and wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgSuperposition {
    terms: Vec<LgTerm>,
    waist: f64,
    wavelength: f64,
    polarization: [f64; 2],
}

impl LgSuperposition {
    pub fn new(terms: Vec<LgTerm>, waist: f64, wavelength: f64) -> Result<Self> {
        Self::with_polarization(terms, waist, wavelength, [1.0, 0.0])
    }

    pub fn with_polarization(terms: Vec<LgTerm>, waist: f64, wavelength: f64, polarization: [f64; 2]) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("terms", "superposition needs at least one term"));
        }
        if terms.iter().all(|t| t.c == Complex64::new(0.0, 0.0)) {
            return Err(invalid("terms", "at least one coefficient must be nonzero"));
        }
        if terms.iter().any(|t| !(t.c.re.is_finite() && t.c.im.is_finite())) {
            return Err(invalid("terms", "coefficients must be finite"));
        }
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(invalid("waist", "must be positive"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid("wavelength", "must be positive"));
        }
        let n = polarization[0].hypot(polarization[1]);
        if !((n - 1.0).abs() < 1e-9) {
            return Err(invalid("polarization", "must be a unit transverse vector"));
        }
        Ok(LgSuperposition {
            terms,
            waist,
            wavelength,
            polarization,
        })
    }

    /// Real unit-weight superposition of the listed radial orders.
    pub fn equal_weights(orders: &[u32], waist: f64, wavelength: f64) -> Result<Self> {
        let terms = orders
            .iter()
            .map(|&p| LgTerm {
                p,
                c: Complex64::new(1.0, 0.0),
            })
            .collect();
        Self::new(terms, waist, wavelength)
    }

    /// Fundamental Gaussian `E_0`.
    pub fn gaussian(waist: f64, wavelength: f64) -> Result<Self> {
        Self::equal_weights(&[0], waist, wavelength)
    }

    /// The `E_0 + E_2 + E_4` superposition.
    pub fn sum_024(waist: f64, wavelength: f64) -> Result<Self> {
        Self::equal_weights(&[0, 2, 4], waist, wavelength)
    }

    pub fn terms(&self) -> &[LgTerm] {
        &self.terms
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn polarization(&self) -> [f64; 2] {
        self.polarization
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.p).max().unwrap_or(0)
    }

    /// Same modes and weights with a different shared waist.
    pub fn with_waist(&self, waist: f64) -> Result<Self> {
        Self::with_polarization(self.terms.clone(), waist, self.wavelength, self.polarization)
    }

    /// Copy with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Result<Self> {
        let terms = self.terms.iter().map(|t| LgTerm { p: t.p, c: t.c * s }).collect();
        Self::with_polarization(terms, self.waist, self.wavelength, self.polarization)
    }

    /// Scalar amplitude at `(x, y, z)`, carrier excluded.
    pub fn field(&self, x: f64, y: f64, z: f64) -> Complex64 {
        let r2 = x * x + y * y;
        let zr = self.rayleigh_range();
        let k = self.wavenumber();
        let zeta = z / zr;
        let w2 = self.waist * self.waist * (1.0 + zeta * zeta);
        let arg = 2.0 * r2 / w2;
        let envelope = FRAC_2_PI.sqrt() / (1.0 + zeta * zeta).sqrt() * (-r2 / w2).exp();
        // k r^2 / 2R written in its z = 0 regular form
        let curvature = -k * r2 * z / (2.0 * (z * z + zr * zr));
        let gouy_unit = Complex64::new(1.0, zeta) / (1.0 + zeta * zeta).sqrt();
        let gouy_step = gouy_unit * gouy_unit;
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let g = gouy_unit * gouy_step.powu(t.p);
            sum += t.c * assoc_laguerre(t.p, arg) * g;
        }
        sum * envelope * Complex64::from_polar(1.0, curvature)
    }

    /// On-axis amplitude `E(0, 0, z)`, carrier excluded. Uses `L_p(0) = 1`.
    pub fn on_axis(&self, z: f64) -> Complex64 {
        let zeta = z / self.rayleigh_range();
        let norm = (1.0 + zeta * zeta).sqrt();
        let gouy_unit = Complex64::new(1.0 / norm, zeta / norm);
        let gouy_step = gouy_unit * gouy_unit;
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            sum += t.c * gouy_unit * gouy_step.powu(t.p);
        }
        sum * (FRAC_2_PI.sqrt() / norm)
    }

    /// Intensity at the focus, `|E(0,0,0)|^2`, the normalization used for
    /// every relative intensity in this module.
    pub fn focal_intensity(&self) -> f64 {
        self.on_axis(0.0).norm_sqr()
    }

    /// Free-space intensity on a grid, normalized to the focal intensity.
    pub fn intensity_grid(&self, grid: &GridSpec) -> Result<ScalarGrid> {
        grid.validate()?;
        let peak = self.focal_intensity();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                self.field(x, y, z).norm_sqr() / peak
            })
            .collect();
        ScalarGrid::new(*grid, values)
    }
}

/// Amplitude reflection coefficient of a planar surface at `z_surface`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectorModel {
    pub r: f64,
    pub z_surface: f64,
}

impl ReflectorModel {
    pub fn new(r: f64, z_surface: f64) -> Result<Self> {
        if !(r.abs() <= 1.0) {
            return Err(invalid("r", "|r| must not exceed 1"));
        }
        if !z_surface.is_finite() {
            return Err(invalid("z_surface", "must be finite"));
        }
        Ok(ReflectorModel { r, z_surface })
    }

    pub fn none() -> Self {
        ReflectorModel { r: 0.0, z_surface: 0.0 }
    }
}

/// Single-mode amplitude `u_p(r, z)` with the analytic `R -> inf` limit at `z = 0`.
pub fn lg_amplitude(p: u32, r: f64, z: f64, w0: f64, lambda: f64) -> Complex64 {
    let zr = PI * w0 * w0 / lambda;
    let k = 2.0 * PI / lambda;
    let w2 = w0 * w0 * (1.0 + z * z / (zr * zr));
    let w = w2.sqrt();
    let curvature = -k * r * r * z / (2.0 * (z * z + zr * zr));
    let phase = curvature + gouy_phase(p, z, zr);
    FRAC_2_PI.sqrt() * w0 / w
        * (-r * r / w2).exp()
        * assoc_laguerre(p, 2.0 * r * r / w2)
        * Complex64::from_polar(1.0, phase)
}

/// `(2p+1) atan(z / zR)`.
pub fn gouy_phase(p: u32, z: f64, zr: f64) -> f64 {
    (2 * p + 1) as f64 * (z / zr).atan()
}

/// `w_i sqrt(2p+1)`.
pub fn rms_radius(p: u32, waist: f64) -> f64 {
    waist * ((2 * p + 1) as f64).sqrt()
}

/// Superposition amplitude at `(x, y, z)`, carrier excluded.
pub fn superposition_field(spec: &LgSuperposition, x: f64, y: f64, z: f64) -> Complex64 {
    spec.field(x, y, z)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Unwraps a sampled phase with step threshold `pi`. Each step is checked
/// against the phase at the midpoint supplied by `midpoint_phase`: when the
/// two half-steps do not add up to the full step, the sampling aliases.
pub(crate) fn unwrap_checked(
    zs: &[f64],
    phases: &[f64],
    midpoint_phase: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(phases.len());
    if phases.is_empty() {
        return Ok(out);
    }
    out.push(phases[0]);
    for i in 1..phases.len() {
        let full = wrap_angle(phases[i] - phases[i - 1]);
        let mid = midpoint_phase(0.5 * (zs[i] + zs[i - 1]))?;
        let halves = wrap_angle(mid - phases[i - 1]) + wrap_angle(phases[i] - mid);
        if (halves - full).abs() > 1e-6 {
            return Err(Error::PhaseUndersampled {
                z0: zs[i - 1],
                z1: zs[i],
                step: halves,
            });
        }
        out.push(out[i - 1] + full);
    }
    Ok(out)
}

/// Unwrapped on-axis phase `arg(E(0,0,z) e^{ikz})` relative to `z = 0`.
///
/// `zs` must be sorted ascending. Samples where the on-axis magnitude drops
/// below `1e-9` of the focal magnitude are rejected as phase-degenerate.
pub fn superposition_gouy(spec: &LgSuperposition, zs: &[f64]) -> Result<Vec<f64>> {
    if zs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("z", "samples must be strictly increasing"));
    }
    let tol = 1e-9 * spec.focal_intensity().sqrt().max(f64::MIN_POSITIVE);
    let phase_at = |z: f64| -> Result<f64> {
        let e = spec.on_axis(z);
        if e.norm() < tol {
            return Err(Error::DegeneratePhase { z, magnitude: e.norm() });
        }
        Ok(e.arg())
    };
    let raw: Vec<f64> = zs.iter().map(|&z| phase_at(z)).collect::<Result<_>>()?;
    let unwrapped = unwrap_checked(zs, &raw, phase_at)?;
    // Anchor the branch at z = 0 by unwrapping from the sample nearest the focus.
    let nearest = zs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let zref = zs.get(nearest).copied().unwrap_or(0.0);
    let ref_phase = if zref == 0.0 {
        unwrapped[nearest]
    } else {
        let origin = phase_at(0.0)?;
        let bridge = unwrap_checked(&[0.0, zref], &[origin, raw[nearest]], phase_at)?;
        unwrapped[nearest] - (bridge[1] - bridge[0])
    };
    Ok(unwrapped.iter().map(|p| p - ref_phase).collect())
}

/// Incident field plus its mirror image about the surface, both carrying the
/// `exp(-ikz)` carrier so that standing-wave fringes appear:
/// `E_inc(x,y,z) + r E_inc(x,y,2 z_s - z)` with
/// `E_inc(x,y,z) = u(x, y, z - z_focus) exp(-ikz)`.
pub fn reflected_field(
    spec: &LgSuperposition,
    reflector: &ReflectorModel,
    z_focus: f64,
    x: f64,
    y: f64,
    z: f64,
) -> Complex64 {
    let k = spec.wavenumber();
    let inc = |zz: f64| spec.field(x, y, zz - z_focus) * Complex64::from_polar(1.0, -k * zz);
    let mut e = inc(z);
    if reflector.r != 0.0 {
        e += reflector.r * inc(2.0 * reflector.z_surface - z);
    }
    e
}

/// On-axis version of [`reflected_field`].
pub fn reflected_on_axis(spec: &LgSuperposition, reflector: &ReflectorModel, z_focus: f64, z: f64) -> Complex64 {
    let k = spec.wavenumber();
    let inc = |zz: f64| spec.on_axis(zz - z_focus) * Complex64::from_polar(1.0, -k * zz);
    let mut e = inc(z);
    if reflector.r != 0.0 {
        e += reflector.r * inc(2.0 * reflector.z_surface - z);
    }
    e
}

/// Intensity of the incident plus reflected field, normalized to the
/// free-space focal intensity.
///
/// The grid must lie on the vacuum side (`z >= z_surface`), and because the
/// carrier is resolved, its z spacing must not exceed `lambda / 8`.
pub fn paraxial_reflected_intensity(
    spec: &LgSuperposition,
    reflector: &ReflectorModel,
    z_focus: f64,
    grid: &GridSpec,
) -> Result<ScalarGrid> {
    grid.validate()?;
    if grid.origin[2] < reflector.z_surface {
        return Err(Error::SurfaceCrossing {
            surface: reflector.z_surface,
            z_min: grid.origin[2],
        });
    }
    if grid.shape[2] > 1 && grid.spacing[2] > spec.wavelength() / 8.0 {
        return Err(invalid(
            "grid.spacing",
            format!(
                "z spacing {:e} m does not resolve the carrier (needs <= lambda/8 = {:e} m)",
                grid.spacing[2],
                spec.wavelength() / 8.0
            ),
        ));
    }
    let peak = spec.focal_intensity();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let [x, y, z] = grid.coords(i);
            reflected_field(spec, reflector, z_focus, x, y, z).norm_sqr() / peak
        })
        .collect();
    ScalarGrid::new(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const UM: f64 = 1e-6;

    #[test]
    fn amplitude_at_origin() {
        let u = lg_amplitude(0, 0.0, 0.0, UM, UM);
        assert_abs_diff_eq!(u.re, (2.0 / PI).sqrt(), epsilon = 1e-15);
        assert_eq!(u.im, 0.0);
    }

    #[test]
    fn amplitude_at_rayleigh_range() {
        let zr = PI * UM;
        let u = lg_amplitude(0, 0.0, zr, UM, UM);
        assert_abs_diff_eq!(u.norm(), (2.0 / PI).sqrt() / 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(u.arg(), PI / 4.0, epsilon = 1e-14);
        let u2 = lg_amplitude(2, 0.0, zr, UM, UM);
        assert_abs_diff_eq!(wrap_angle(u2.arg() - 5.0 * PI / 4.0), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn gouy_values() {
        assert_eq!(gouy_phase(0, 0.0, 1.0), 0.0);
        assert_abs_diff_eq!(gouy_phase(0, 1e12, 1.0), PI / 2.0, epsilon = 1e-11);
        assert_abs_diff_eq!(gouy_phase(4, 2.0, 2.0), 9.0 * PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn rms_radius_values() {
        assert_eq!(rms_radius(0, UM), UM);
        assert_abs_diff_eq!(rms_radius(4, UM), 3.0 * UM, epsilon = 1e-20);
    }

    #[test]
    fn superposition_on_axis_sum() {
        let s = LgSuperposition::sum_024(UM, UM).unwrap();
        let e = superposition_field(&s, 0.0, 0.0, 0.0);
        assert_abs_diff_eq!(e.re, 3.0 * (2.0 / PI).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn single_term_matches_lg_amplitude() {
        let s = LgSuperposition::equal_weights(&[3], 1.3 * UM, 0.9 * UM).unwrap();
        for &(x, y, z) in &[(0.2, 0.1, 0.0), (1.1, -0.4, 2.5), (0.0, 0.7, -4.0)] {
            let (x, y, z) = (x * UM, y * UM, z * UM);
            let a = s.field(x, y, z);
            let b = lg_amplitude(3, x.hypot(y), z, 1.3 * UM, 0.9 * UM);
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn on_axis_fast_path_matches_general() {
        let s = LgSuperposition::sum_024(UM, UM).unwrap();
        for i in -20..=20 {
            let z = i as f64 * 0.37 * UM;
            assert_abs_diff_eq!((s.on_axis(z) - s.field(0.0, 0.0, z)).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn peak_intensity_at_one_third_power() {
        // E_0 normalized to unit power vs E_sum normalized to 1/3 of that power:
        // each mode carries unit power, so E_sum has power 3.
        let g = LgSuperposition::gaussian(UM, UM).unwrap();
        let s = LgSuperposition::sum_024(UM, UM).unwrap();
        let s_third = s.scaled(Complex64::new((1.0f64 / 9.0).sqrt(), 0.0)).unwrap();
        let ratio = s_third.focal_intensity() / g.focal_intensity();
        assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gouy_single_mode_matches_closed_form() {
        let s = LgSuperposition::equal_weights(&[2], UM, UM).unwrap();
        let zr = s.rayleigh_range();
        let zs: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.05 * UM).collect();
        let psi = superposition_gouy(&s, &zs).unwrap();
        for (z, p) in zs.iter().zip(&psi) {
            assert_abs_diff_eq!(*p, gouy_phase(2, *z, zr), epsilon = 1e-9);
        }
    }

    #[test]
    fn gouy_anchored_without_zero_sample() {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let zr = s.rayleigh_range();
        let psi = superposition_gouy(&s, &[zr]).unwrap();
        assert_abs_diff_eq!(psi[0], PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn gouy_undersampling_detected() {
        let s = LgSuperposition::equal_weights(&[2], UM, UM).unwrap();
        let zr = s.rayleigh_range();
        let err = superposition_gouy(&s, &[-zr, zr]).unwrap_err();
        assert!(matches!(err, Error::PhaseUndersampled { .. }));
    }

    #[test]
    fn gouy_degenerate_phase_detected() {
        // E_0 - E_1 vanishes at the focus.
        let s = LgSuperposition::new(
            vec![
                LgTerm {
                    p: 0,
                    c: Complex64::new(1.0, 0.0),
                },
                LgTerm {
                    p: 1,
                    c: Complex64::new(-1.0, 0.0),
                },
            ],
            UM,
            UM,
        )
        .unwrap();
        let err = superposition_gouy(&s, &[0.0, 0.1 * UM]).unwrap_err();
        assert!(matches!(err, Error::DegeneratePhase { .. }));
    }

    #[test]
    fn reflection_off_is_free_space() {
        let s = LgSuperposition::sum_024(UM, UM).unwrap();
        let g = GridSpec::from_bounds([-UM, 0.0, 0.0], [UM, 0.0, 3.0 * UM], [9, 1, 40]).unwrap();
        let a = paraxial_reflected_intensity(&s, &ReflectorModel::new(0.0, 0.0).unwrap(), 0.0, &g).unwrap();
        let b = s.intensity_grid(&g).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn reflection_rejects_crossing_and_coarse_grids() {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let refl = ReflectorModel::new(-0.8, 0.0).unwrap();
        let crossing = GridSpec::line(2, [0.0; 3], -UM, UM, 40).unwrap();
        assert!(matches!(
            paraxial_reflected_intensity(&s, &refl, 0.0, &crossing),
            Err(Error::SurfaceCrossing { .. })
        ));
        let coarse = GridSpec::line(2, [0.0; 3], 0.0, 5.0 * UM, 20).unwrap();
        assert!(paraxial_reflected_intensity(&s, &refl, 0.0, &coarse).is_err());
        assert!(ReflectorModel::new(1.2, 0.0).is_err());
    }

    #[test]
    fn mirror_field_equals_reflected_incident_at_surface() {
        let s = LgSuperposition::sum_024(UM, UM).unwrap();
        let refl = ReflectorModel::new(-0.8, 0.0).unwrap();
        let e = reflected_on_axis(&s, &refl, 2.0 * UM, 0.0);
        let inc = s.on_axis(-2.0 * UM);
        assert_abs_diff_eq!((e - inc * 0.2).norm(), 0.0, epsilon = 1e-14);
    }
}
