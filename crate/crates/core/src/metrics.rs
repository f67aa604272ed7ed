//! Trap observables: FWHM and focal volume, harmonic trap frequencies,
//! finite-difference Schrödinger levels and the analytic filling-factor
//! relations.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::debye::{DebyeFocus, FocusingSetup};
use crate::error::{invalid, Error, Result};
use crate::grid::ScalarGrid;
use crate::paraxial::LgSuperposition;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Full width at half maximum of a sampled profile.
///
/// The half-level crossings nearest the global maximum are located on each
/// side and linearly interpolated. Secondary peaks beyond the first crossing
/// are ignored, so a side lobe that rises above half maximum does not widen
/// the result.
pub fn fwhm_1d(positions: &[f64], profile: &[f64]) -> Result<f64> {
    if positions.len() != profile.len() || positions.len() < 3 {
        return Err(Error::ShapeMismatch(format!(
            "{} positions vs {} samples",
            positions.len(),
            profile.len()
        )));
    }
    let (ipk, &peak) = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if ipk == 0 || ipk == profile.len() - 1 {
        return Err(Error::PeakOnBoundary);
    }
    let half = 0.5 * peak;
    let cross = |a: usize, b: usize| {
        let (ya, yb) = (profile[a], profile[b]);
        positions[a] + (half - ya) * (positions[b] - positions[a]) / (yb - ya)
    };
    let left = (0..ipk)
        .rev()
        .find(|&j| profile[j] < half)
        .map(|j| cross(j, j + 1))
        .ok_or(Error::NoHalfMaxCrossing { side: "left" })?;
    let right = (ipk + 1..profile.len())
        .find(|&j| profile[j] < half)
        .map(|j| cross(j - 1, j))
        .ok_or(Error::NoHalfMaxCrossing { side: "right" })?;
    Ok(right - left)
}

/// FWHM of the three axis-aligned line cuts through the global maximum of an
/// intensity grid, and their product.
pub fn focal_volume(grid: &ScalarGrid) -> Result<([f64; 3], f64)> {
    let at = grid.argmax();
    let mut w = [0.0; 3];
    for (axis, wa) in w.iter_mut().enumerate() {
        let (q, v) = grid.line_through(axis, at);
        *wa = fwhm_1d(&q, &v)?;
    }
    Ok((w, w[0] * w[1] * w[2]))
}

/// Least-squares polynomial of degree 4 in `q - center`; returns the second
/// derivative at `center`. The cubic and quartic terms absorb the leading
/// anharmonicity of the window so the curvature is not biased by it.
pub fn fit_curvature(q: &[f64], u: &[f64], center: f64) -> Result<f64> {
    if q.len() != u.len() || q.len() < 7 {
        return Err(Error::WindowOutOfBounds(format!(
            "harmonic fit needs at least 7 samples, got {}",
            q.len().min(u.len())
        )));
    }
    let scale = q.iter().map(|x| (x - center).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::WindowOutOfBounds("fit window has zero width".into()));
    }
    let n = q.len();
    let a = DMatrix::from_fn(n, 5, |i, j| ((q[i] - center) / scale).powi(j as i32));
    let b = DVector::from_column_slice(u);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::WindowOutOfBounds(e.to_string()))?;
    Ok(2.0 * coef[2] / (scale * scale))
}

/// Angular frequency from a potential curvature, `sqrt(U''/M)`.
pub fn omega_from_curvature(curvature: f64, mass: f64, axis: &'static str) -> Result<f64> {
    if !(curvature > 0.0) {
        return Err(Error::NegativeCurvature { axis, curvature });
    }
    Ok((curvature / mass).sqrt())
}

/// Optical potential `U = -U0 I / I_peak` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapPotential {
    pub u: ScalarGrid,
    pub depth: f64,
    pub mass: f64,
}

impl TrapPotential {
    pub fn from_intensity(intensity: &ScalarGrid, depth: f64, mass: f64) -> Result<Self> {
        if !(depth > 0.0) || !(mass > 0.0) {
            return Err(invalid("depth", "depth and mass must be positive"));
        }
        let peak = intensity.max();
        if !(peak > 0.0) {
            return Err(invalid("intensity", "intensity grid has no positive maximum"));
        }
        let values = intensity.values.iter().map(|i| -depth * i / peak).collect();
        Ok(TrapPotential {
            u: ScalarGrid::new(intensity.spec, values)?,
            depth,
            mass,
        })
    }

    /// Grid index of the potential minimum.
    pub fn center(&self) -> [usize; 3] {
        let neg = ScalarGrid {
            spec: self.u.spec,
            values: self.u.values.iter().map(|v| -v).collect(),
        };
        neg.argmax()
    }
}

/// Harmonic angular frequencies at the grid minimum from degree-4 fits over
/// `±fit_halfwidth[axis]`.
pub fn harmonic_frequencies(pot: &TrapPotential, fit_halfwidth: [f64; 3]) -> Result<[f64; 3]> {
    let c = pot.center();
    let mut out = [0.0; 3];
    for axis in 0..3 {
        let (q, u) = pot.u.line_through(axis, c);
        let q0 = q[c[axis]];
        let h = fit_halfwidth[axis];
        if q0 - h < q[0] - 1e-15 || q0 + h > q[q.len() - 1] + 1e-15 {
            return Err(Error::WindowOutOfBounds(format!(
                "fit window on {} leaves the grid",
                AXES[axis]
            )));
        }
        let (qs, us): (Vec<f64>, Vec<f64>) = q
            .iter()
            .zip(&u)
            .filter(|(x, _)| (**x - q0).abs() <= h * (1.0 + 1e-12))
            .map(|(x, v)| (*x, *v))
            .unzip();
        let k = fit_curvature(&qs, &us, q0)?;
        out[axis] = omega_from_curvature(k, pot.mass, AXES[axis])?;
    }
    Ok(out)
}

/// Closed-form Gaussian trap frequencies `(omega_x0, omega_z0)`.
pub fn paraxial_trap_freqs(depth: f64, mass: f64, waist: f64, rayleigh: f64) -> (f64, f64) {
    (
        (4.0 * depth / (mass * waist * waist)).sqrt(),
        (2.0 * depth / (mass * rayleigh * rayleigh)).sqrt(),
    )
}

/// Lowest eigenvalues of the 1D Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub energies: Vec<f64>,
    /// Some eigenstate has `|psi|` at a boundary above `1e-4` of its maximum.
    pub leaking: bool,
}

impl Levels {
    /// `(E1 - E0) / hbar`.
    pub fn omega(&self) -> Option<f64> {
        match self.energies.as_slice() {
            [e0, e1, ..] => Some((e1 - e0) / HBAR),
            _ => None,
        }
    }
}

/// Three-point finite-difference Schrödinger levels on a uniform line with
/// Dirichlet boundaries. Eigenvalues by Sturm-sequence bisection, boundary
/// leakage by inverse iteration on each converged level.
pub fn schrodinger_1d_levels(q: &[f64], u: &[f64], mass: f64, n_levels: usize) -> Result<Levels> {
    let n = q.len();
    if n != u.len() || n < 3 {
        return Err(Error::ShapeMismatch(format!("{} positions vs {} samples", n, u.len())));
    }
    if n_levels == 0 || n_levels > n {
        return Err(invalid("n_levels", "must lie in 1..=samples"));
    }
    let h = q[1] - q[0];
    if !(h > 0.0) || q.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(invalid("q", "positions must be uniform and increasing"));
    }
    // Energies in units of hbar^2/(M h^2).
    let unit = HBAR * HBAR / (mass * h * h);
    let diag: Vec<f64> = u.iter().map(|v| 1.0 + v / unit).collect();
    let off = -0.5;
    let lo0 = diag.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi0 = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let count_below = |x: f64| -> usize {
        let mut cnt = 0;
        let mut d = 1.0;
        for (i, &a) in diag.iter().enumerate() {
            d = if i == 0 { a - x } else { a - x - off * off / d };
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + x.abs() + 1.0);
            }
            if d < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    let mut energies = Vec::with_capacity(n_levels);
    let mut leaking = false;
    for k in 0..n_levels {
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * (lo.abs() + hi.abs()).max(1e-300) {
                break;
            }
        }
        let e = 0.5 * (lo + hi);
        let psi = inverse_iteration(&diag, off, e);
        let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if psi[0].abs().max(psi[n - 1].abs()) > 1e-4 * peak {
            leaking = true;
        }
        energies.push(e * unit);
    }
    if leaking {
        log::warn!("Schrödinger eigenstates reach the line boundary; the potential is not confining");
    }
    Ok(Levels { energies, leaking })
}

fn inverse_iteration(diag: &[f64], off: f64, shift: f64) -> Vec<f64> {
    let n = diag.len();
    let gap = 1e-10 * (shift.abs() + 1.0);
    let mut v = vec![1.0; n];
    for _ in 0..3 {
        // Thomas algorithm for (T - shift - gap) x = v.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut b = diag[0] - shift - gap;
        c[0] = off / b;
        d[0] = v[0] / b;
        for i in 1..n {
            b = diag[i] - shift - gap - off * c[i - 1];
            if b == 0.0 {
                b = f64::EPSILON;
            }
            c[i] = off / b;
            d[i] = (v[i] - off * d[i - 1]) / b;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        v = x.iter().map(|xi| xi / norm).collect();
    }
    v
}

/// Paraxial on-axis phase gradient at the focus of an LG_p beam filling the
/// pupil with factor `f0`: `(2p+1) pi F0^2 NA^2 / lambda`.
pub fn gouy_gradient_paraxial(p: u32, f0: f64, na: f64, wavelength: f64) -> f64 {
    (2 * p + 1) as f64 * PI / wavelength * f0 * f0 * na * na
}

/// Largest on-axis phase gradient an objective of aperture `na` can produce.
pub fn max_phase_gradient(na: f64, wavelength: f64) -> f64 {
    2.0 * PI / wavelength * (1.0 - (1.0 - na * na).sqrt())
}

/// Filling factor at which the paraxial LG_p Gouy gradient meets the
/// objective's maximum.
pub fn optimal_filling(na: f64, p: u32) -> f64 {
    (2.0 / (2 * p + 1) as f64).sqrt() * (1.0 - (1.0 - na * na).sqrt()).sqrt() / na
}

/// Nature of the nominal focus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterClass {
    Trapping,
    Saddle,
    DisplacedMinimum,
}

impl fmt::Display for CenterClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CenterClass::Trapping => "trapping",
            CenterClass::Saddle => "saddle",
            CenterClass::DisplacedMinimum => "displaced-minimum",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub fwhm: [f64; 3],
    pub volume: f64,
    /// Potential curvature `d2U/dq2` at the nominal focus [J/m^2].
    pub curvature: [f64; 3],
    pub omega: Option<[f64; 3]>,
    pub center_class: CenterClass,
    /// Axial position of the intensity maximum.
    pub peak_z: f64,
}

/// Sampling plan for [`trap_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapScan {
    /// Line cut half-lengths per axis.
    pub half_extent: [f64; 3],
    pub samples: usize,
    pub depth: f64,
    pub mass: f64,
    /// Fit half-window as a fraction of the FWHM.
    pub fit_fraction: f64,
    pub fit_samples: usize,
}

impl TrapScan {
    pub fn new(half_extent: [f64; 3], depth: f64, mass: f64) -> Self {
        TrapScan {
            half_extent,
            samples: 2001,
            depth,
            mass,
            fit_fraction: 0.1,
            fit_samples: 41,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Trap report of an intensity distribution `intensity(x, y, z)` whose
/// maximum lies on the optical axis.
///
/// FWHMs come from line cuts through the on-axis maximum. Curvatures are
/// fitted at the nominal focus (origin) with a window of `fit_fraction`
/// times the respective FWHM; the focus is a saddle if any curvature is
/// non-positive and a displaced minimum if the axial maximum lies outside
/// the fit window. Frequencies are reported only for trapping centers.
pub fn trap_report<F>(intensity: F, scan: &TrapScan) -> Result<TrapReport>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    if scan.samples < 5 || scan.fit_samples < 7 {
        return Err(invalid("samples", "line cuts need at least 5 samples and fits 7"));
    }
    let zs = linspace(-scan.half_extent[2], scan.half_extent[2], scan.samples);
    let iz: Vec<f64> = zs.par_iter().map(|&z| intensity(0.0, 0.0, z)).collect();
    let (kp, &peak) = iz
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let peak_z = zs[kp];
    let mut fwhm = [0.0; 3];
    for axis in 0..2 {
        let qs = linspace(-scan.half_extent[axis], scan.half_extent[axis], scan.samples);
        let v: Vec<f64> = qs
            .par_iter()
            .map(|&q| {
                let mut p = [0.0, 0.0, peak_z];
                p[axis] = q;
                intensity(p[0], p[1], p[2])
            })
            .collect();
        fwhm[axis] = fwhm_1d(&qs, &v)?;
    }
    fwhm[2] = fwhm_1d(&zs, &iz)?;

    let mut curvature = [0.0; 3];
    for axis in 0..3 {
        let h = scan.fit_fraction * fwhm[axis];
        let qs = linspace(-h, h, scan.fit_samples);
        let us: Vec<f64> = qs
            .iter()
            .map(|&q| {
                let mut p = [0.0; 3];
                p[axis] = q;
                -scan.depth * intensity(p[0], p[1], p[2]) / peak
            })
            .collect();
        curvature[axis] = fit_curvature(&qs, &us, 0.0)?;
    }
    let center_class = if curvature.iter().any(|c| !(*c > 0.0)) {
        CenterClass::Saddle
    } else if peak_z.abs() > scan.fit_fraction * fwhm[2] {
        CenterClass::DisplacedMinimum
    } else {
        CenterClass::Trapping
    };
    let omega = if center_class == CenterClass::Trapping {
        let mut w = [0.0; 3];
        for axis in 0..3 {
            w[axis] = omega_from_curvature(curvature[axis], scan.mass, AXES[axis])?;
        }
        Some(w)
    } else {
        None
    };
    Ok(TrapReport {
        fwhm,
        volume: fwhm[0] * fwhm[1] * fwhm[2],
        curvature,
        omega,
        center_class,
        peak_z,
    })
}

/// Which quantity a filling-factor sweep is meant to display. Every row
/// carries the full report; the metric selects the CSV column of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMetric {
    OmegaX,
    OmegaY,
    OmegaZ,
    Volume,
    CenterClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub filling_factor: f64,
    pub report: std::result::Result<TrapReport, String>,
}

impl SweepRow {
    pub fn metric(&self, m: SweepMetric) -> Option<f64> {
        let r = self.report.as_ref().ok()?;
        match m {
            SweepMetric::OmegaX => r.omega.map(|w| w[0]),
            SweepMetric::OmegaY => r.omega.map(|w| w[1]),
            SweepMetric::OmegaZ => r.omega.map(|w| w[2]),
            SweepMetric::Volume => Some(r.volume),
            SweepMetric::CenterClass => Some(match r.center_class {
                CenterClass::Trapping => 0.0,
                CenterClass::Saddle => 1.0,
                CenterClass::DisplacedMinimum => 2.0,
            }),
        }
    }
}

/// Debye-Wolf trap report for each filling factor. Rows are independent;
/// a failing row records its error and the sweep continues.
pub fn sweep_filling_factor(
    spec: &LgSuperposition,
    setup: &FocusingSetup,
    filling_factors: &[f64],
    scan: &TrapScan,
) -> Vec<SweepRow> {
    filling_factors
        .par_iter()
        .map(|&f0| {
            let report = setup
                .with_filling_factor(f0)
                .and_then(|s| DebyeFocus::new(spec, &s))
                .and_then(|focus| trap_report(|x, y, z| focus.intensity(x, y, z), scan))
                .map_err(|e| e.to_string());
            SweepRow {
                filling_factor: f0,
                report,
            }
        })
        .collect()
}

/// Filling-factor interval over which the axial curvature at the nominal
/// focus is negative, with edges linearly interpolated between rows.
pub fn saddle_window(rows: &[SweepRow]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.report.as_ref().ok().map(|t| (r.filling_factor, t.curvature[2])))
        .collect();
    let edge = |a: (f64, f64), b: (f64, f64)| a.0 + a.1 * (b.0 - a.0) / (a.1 - b.1);
    let mut lo = None;
    let mut hi = None;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.1 > 0.0 && b.1 <= 0.0 && lo.is_none() {
            lo = Some(edge(a, b));
        } else if a.1 <= 0.0 && b.1 > 0.0 && lo.is_some() && hi.is_none() {
            hi = Some(edge(a, b));
        }
    }
    Some((lo?, hi?))
}

pub const SWEEP_CSV_HEADER: &str = "F0,omega_x,omega_y,omega_z,dx,dy,dz,V,class";

/// Sweep table; frequencies in rad/s, lengths in m, volume in m^3. Rows
/// that failed carry empty fields and `error` as the class.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        match &r.report {
            Ok(t) => {
                let w = t
                    .omega
                    .map(|w| format!("{:e},{:e},{:e}", w[0], w[1], w[2]))
                    .unwrap_or_else(|| ",,".into());
                s.push_str(&format!(
                    "{},{},{:e},{:e},{:e},{:e},{}\n",
                    r.filling_factor, w, t.fwhm[0], t.fwhm[1], t.fwhm[2], t.volume, t.center_class
                ));
            }
            Err(_) => s.push_str(&format!("{},,,,,,,,error\n", r.filling_factor)),
        }
    }
    s
}

/// Radius at which the azimuthally averaged focal-plane intensity falls to
/// `1/e^2` of its on-axis value.
pub fn e2_radius<F>(intensity: F, z: f64, r_max: f64, samples: usize, azimuths: usize) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let rs = linspace(0.0, r_max, samples.max(3));
    let prof: Vec<f64> = rs
        .par_iter()
        .map(|&r| {
            (0..azimuths)
                .map(|j| {
                    let phi = 2.0 * PI * j as f64 / azimuths as f64;
                    intensity(r * phi.cos(), r * phi.sin(), z)
                })
                .sum::<f64>()
                / azimuths as f64
        })
        .collect();
    let level = prof[0] * (-2.0f64).exp();
    let j = prof
        .iter()
        .position(|v| *v < level)
        .ok_or(Error::NoHalfMaxCrossing { side: "radial" })?;
    Ok(rs[j - 1] + (level - prof[j - 1]) * (rs[j] - rs[j - 1]) / (prof[j] - prof[j - 1]))
}

/// Standing-wave fringe observables of an on-axis intensity profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeStats {
    /// Median distance between neighbouring maxima.
    pub spacing: f64,
    pub maxima: usize,
    /// `max - min` of the profile over one fringe period centered on the
    /// probe position, in the profile's own normalization.
    pub contrast: f64,
}

/// Fringe spacing and local contrast of `intensity` sampled at increasing
/// `z`. Maxima are refined by a three-point parabola; the median spacing
/// suppresses the Gouy stretch of the few fringes nearest the focus.
pub fn fringe_stats(z: &[f64], intensity: &[f64], wavelength: f64, probe: f64) -> Result<FringeStats> {
    if z.len() != intensity.len() || z.len() < 5 {
        return Err(Error::ShapeMismatch(format!(
            "{} positions vs {} samples",
            z.len(),
            intensity.len()
        )));
    }
    let h = z[1] - z[0];
    if !(h > 0.0) || h > wavelength / 16.0 {
        return Err(invalid("z", "fringes need a uniform step of at most lambda/16"));
    }
    let mut peaks = Vec::new();
    for i in 1..z.len() - 1 {
        let (a, b, c) = (intensity[i - 1], intensity[i], intensity[i + 1]);
        if b > a && b >= c {
            let den = a - 2.0 * b + c;
            let d = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            peaks.push(z[i] + d * h);
        }
    }
    if peaks.len() < 3 {
        return Err(invalid("z", "fewer than three fringe maxima in the window"));
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let m = gaps.len();
    let spacing = if m % 2 == 1 {
        gaps[m / 2]
    } else {
        0.5 * (gaps[m / 2 - 1] + gaps[m / 2])
    };
    let (lo, hi) = (probe - 0.25 * wavelength, probe + 0.25 * wavelength);
    if lo < z[0] || hi > z[z.len() - 1] {
        return Err(invalid("probe", "the probe period must lie inside the sampled window"));
    }
    let window = z
        .iter()
        .zip(intensity)
        .filter(|(q, _)| **q >= lo && **q <= hi)
        .map(|(_, v)| *v);
    let (mn, mx) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    Ok(FringeStats {
        spacing,
        maxima: peaks.len(),
        contrast: mx - mn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{kelvin_to_joule, CESIUM_MASS};
    use crate::grid::GridSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const UM: f64 = 1e-6;

    #[test]
    fn gaussian_fwhm_closed_form() {
        let x = linspace(-4.0 * UM, 4.0 * UM, 4001);
        let y: Vec<f64> = x.iter().map(|x| (-2.0 * x * x / (UM * UM)).exp()).collect();
        assert_relative_eq!(
            fwhm_1d(&x, &y).unwrap(),
            UM * (2.0 * 2f64.ln()).sqrt(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn fwhm_errors() {
        let x = linspace(0.0, 1.0, 11);
        let edge: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        assert_eq!(fwhm_1d(&x, &edge), Err(Error::PeakOnBoundary));
        let flat: Vec<f64> = x.iter().map(|v| 1.0 - 0.1 * (v - 0.5).abs()).collect();
        assert!(matches!(fwhm_1d(&x, &flat), Err(Error::NoHalfMaxCrossing { .. })));
    }

    #[test]
    fn nearest_crossing_ignores_outer_lobe() {
        let x = linspace(-5.0, 5.0, 10001);
        let y: Vec<f64> = x
            .iter()
            .map(|x| (-x * x).exp() + 0.8 * (-(x - 3.0) * (x - 3.0) * 4.0).exp())
            .collect();
        assert_relative_eq!(fwhm_1d(&x, &y).unwrap(), 2.0 * 2f64.ln().sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn separable_gaussian_volume() {
        let g = GridSpec::from_bounds([-3.0, -3.0, -6.0], [3.0, 3.0, 6.0], [121, 121, 121]).unwrap();
        let vals = g
            .points()
            .iter()
            .map(|p| (-2.0 * p[0] * p[0] - 4.0 * p[1] * p[1] - 0.5 * p[2] * p[2]).exp())
            .collect();
        let (w, v) = focal_volume(&ScalarGrid::new(g, vals).unwrap()).unwrap();
        let l = 2f64.ln();
        let want = [(2.0 * l).sqrt(), (l).sqrt(), (8.0 * l).sqrt()];
        for a in 0..3 {
            assert_relative_eq!(w[a], want[a], max_relative = 1e-3);
        }
        assert_relative_eq!(v, want.iter().product::<f64>(), max_relative = 3e-3);
    }

    #[test]
    fn harmonic_recovery_exact() {
        let m = CESIUM_MASS;
        let w = [2.0 * PI * 1e5, 2.0 * PI * 7e4, 2.0 * PI * 3e4];
        let g = GridSpec::from_bounds([-0.2 * UM; 3], [0.2 * UM; 3], [41, 41, 41]).unwrap();
        let vals = g
            .points()
            .iter()
            .map(|p| -1e-26 + 0.5 * m * (0..3).map(|a| w[a] * w[a] * p[a] * p[a]).sum::<f64>())
            .collect();
        let pot = TrapPotential {
            u: ScalarGrid::new(g, vals).unwrap(),
            depth: 1e-26,
            mass: m,
        };
        let got = harmonic_frequencies(&pot, [0.1 * UM; 3]).unwrap();
        for a in 0..3 {
            assert_relative_eq!(got[a], w[a], max_relative = 1e-9);
        }
        assert!(harmonic_frequencies(&pot, [0.5 * UM; 3]).is_err());
    }

    #[test]
    fn negative_curvature_rejected() {
        let q = linspace(-1.0, 1.0, 21);
        let u: Vec<f64> = q.iter().map(|x| -x * x).collect();
        let k = fit_curvature(&q, &u, 0.0).unwrap();
        assert!(matches!(
            omega_from_curvature(k, 1.0, "z"),
            Err(Error::NegativeCurvature { .. })
        ));
    }

    #[test]
    fn gaussian_closed_form_frequency() {
        let u0 = kelvin_to_joule(1e-3);
        let (wx, _) = paraxial_trap_freqs(u0, CESIUM_MASS, UM, PI * UM);
        // sqrt(4 kB 1mK / (M w0^2)) / 2pi
        assert_relative_eq!(wx / (2.0 * PI), 79.6e3, max_relative = 1e-3);
        let (wx2, wz2) = paraxial_trap_freqs(2.0 * u0, CESIUM_MASS, UM, PI * UM);
        let (_, wz) = paraxial_trap_freqs(u0, CESIUM_MASS, UM, PI * UM);
        assert_relative_eq!(wx2 / wx, 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(wz2 / wz, 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn oscillator_levels() {
        let m = CESIUM_MASS;
        let w = 2.0 * PI * 5e4;
        let sigma = (HBAR / (m * w)).sqrt();
        let q = linspace(-12.0 * sigma, 12.0 * sigma, 2048);
        let u: Vec<f64> = q.iter().map(|x| 0.5 * m * w * w * x * x).collect();
        let lv = schrodinger_1d_levels(&q, &u, m, 3).unwrap();
        assert!(!lv.leaking);
        assert_relative_eq!(lv.omega().unwrap(), w, max_relative = 1e-4);
        assert_relative_eq!(lv.energies[0], 0.5 * HBAR * w, max_relative = 1e-4);
    }

    #[test]
    fn square_well_levels() {
        let m = CESIUM_MASS;
        let l = 1.0 * UM;
        let q = linspace(0.0, l, 2001);
        let u = vec![0.0; q.len()];
        let lv = schrodinger_1d_levels(&q, &u, m, 2).unwrap();
        // Dirichlet nodes are the walls: E_n = (n pi hbar / L)^2 / 2M
        let e = |n: f64| (n * PI * HBAR / l).powi(2) / (2.0 * m);
        assert_relative_eq!(lv.energies[1] - lv.energies[0], e(2.0) - e(1.0), max_relative = 1e-2);
    }

    #[test]
    fn leak_flagged_for_open_line() {
        let m = CESIUM_MASS;
        let q = linspace(-0.1 * UM, 0.1 * UM, 401);
        let u: Vec<f64> = q.iter().map(|x| 1e-30 * x / UM).collect();
        assert!(schrodinger_1d_levels(&q, &u, m, 2).unwrap().leaking);
    }

    #[test]
    fn filling_factor_closed_forms() {
        assert_abs_diff_eq!(gouy_gradient_paraxial(0, 1.0, 1.0, UM), PI * 1e6, epsilon = 1e-6);
        assert_relative_eq!(max_phase_gradient(0.7, UM), 1.796e6, max_relative = 1e-3);
        assert_relative_eq!(optimal_filling(1.0 - 1e-15, 0), 2f64.sqrt(), max_relative = 1e-6);
        assert_abs_diff_eq!(optimal_filling(0.7, 4), 0.36, epsilon = 0.01);
        assert_relative_eq!(max_phase_gradient(1e-3, UM), PI * 1e6 * 1e-6, max_relative = 1e-6);
    }

    #[test]
    fn saddle_window_interpolates_edges() {
        let mk = |f0: f64, k: f64| SweepRow {
            filling_factor: f0,
            report: Ok(TrapReport {
                fwhm: [1.0; 3],
                volume: 1.0,
                curvature: [1.0, 1.0, k],
                omega: None,
                center_class: CenterClass::Trapping,
                peak_z: 0.0,
            }),
        };
        let rows = vec![mk(0.8, 2.0), mk(0.9, 1.0), mk(1.0, -1.0), mk(1.2, -1.0), mk(1.3, 1.0)];
        let (a, b) = saddle_window(&rows).unwrap();
        assert_abs_diff_eq!(a, 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_e2_radius() {
        let r = e2_radius(|x, y, _| (-2.0 * (x * x + y * y)).exp(), 0.0, 3.0, 3001, 8).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-5);
    }

    #[test]
    fn fringe_stats_of_pure_standing_wave() {
        let lam = UM;
        let k = 2.0 * PI / lam;
        let z = linspace(0.0, 20.0 * UM, 4001);
        let i: Vec<f64> = z.iter().map(|z| 1.0 + 0.6 * (2.0 * k * z).cos()).collect();
        let s = fringe_stats(&z, &i, lam, 3.0 * UM).unwrap();
        assert_relative_eq!(s.spacing, 0.5 * lam, max_relative = 1e-6);
        assert_relative_eq!(s.contrast, 1.2, max_relative = 1e-3);
        assert!(s.maxima >= 39);
        assert!(fringe_stats(&z, &i, lam, 19.9 * UM).is_err());
        let coarse = linspace(0.0, 20.0 * UM, 101);
        let ic: Vec<f64> = coarse.iter().map(|z| (2.0 * k * z).cos()).collect();
        assert!(fringe_stats(&coarse, &ic, lam, 3.0 * UM).is_err());
    }
}
