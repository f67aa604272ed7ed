//! Phase-only SLM encoding of complex LG targets on a depth-contoured blazed
//! grating, and scalar Fresnel-Kirchhoff propagation through a thin lens.
//!
//! The SLM plane coincides with the lens plane. Output points are given in
//! that frame, so the geometric focus sits at `z = f`. The propagation
//! kernel is `exp(ikR)/(i lambda R) * (1 + z/R)/2`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paraxial::LgSuperposition;

/// Pixel grid of the modulator, centered on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlmGrid {
    pub shape: [usize; 2],
    pub pixel_pitch: f64,
}

impl SlmGrid {
    pub fn new(shape: [usize; 2], pixel_pitch: f64) -> Result<Self> {
        if shape[0] == 0 || shape[1] == 0 {
            return Err(invalid("shape", "SLM grid must have at least one pixel"));
        }
        if !(pixel_pitch > 0.0 && pixel_pitch.is_finite()) {
            return Err(invalid("pixel_pitch", "must be positive"));
        }
        Ok(SlmGrid { shape, pixel_pitch })
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel-center coordinates of flat index `i` (x fastest).
    pub fn coords(&self, i: usize) -> [f64; 2] {
        let (ix, iy) = (i % self.shape[0], i / self.shape[0]);
        [
            (ix as f64 - 0.5 * (self.shape[0] - 1) as f64) * self.pixel_pitch,
            (iy as f64 - 0.5 * (self.shape[1] - 1) as f64) * self.pixel_pitch,
        ]
    }
}

/// Phase pattern written to the modulator, values in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    pub phase: Vec<f64>,
    pub grid: SlmGrid,
    pub grating_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskMetadata {
    pub shape: [usize; 2],
    pub pixel_pitch: f64,
    pub grating_period: f64,
    pub wavelength: f64,
}

impl PhaseMask {
    /// 8-bit binary PGM, phase mapped `[0, 2 pi) -> [0, 255]`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.grid.shape[0], self.grid.shape[1]).into_bytes();
        out.extend(
            self.phase
                .iter()
                .map(|p| ((p / (2.0 * PI) * 256.0).floor() as i64).clamp(0, 255) as u8),
        );
        out
    }

    pub fn metadata(&self, wavelength: f64) -> MaskMetadata {
        MaskMetadata {
            shape: self.grid.shape,
            pixel_pitch: self.grid.pixel_pitch,
            grating_period: self.grating_period,
            wavelength,
        }
    }

    /// Writes `<stem>.pgm` and `<stem>.json`.
    pub fn export(&self, dir: &Path, stem: &str, wavelength: f64) -> Result<()> {
        std::fs::File::create(dir.join(format!("{stem}.pgm")))?.write_all(&self.to_pgm())?;
        let meta = serde_json::to_string_pretty(&self.metadata(wavelength)).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), meta)?;
        Ok(())
    }

    /// Field leaving the modulator when illuminated by `source`.
    pub fn modulate(&self, source: &SourceBeam) -> SlmField {
        let values = (0..self.grid.len())
            .map(|i| {
                let [x, y] = self.grid.coords(i);
                source.field(x, y) * Complex64::from_polar(1.0, self.phase[i])
            })
            .collect();
        SlmField {
            grid: self.grid,
            values,
        }
    }
}

/// Gaussian illumination, `sqrt(P) sqrt(2/pi)/w exp(-r^2/w^2)` so that
/// `int |E|^2 dA = P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceBeam {
    pub waist: f64,
    pub wavelength: f64,
    pub power_norm: f64,
}

impl SourceBeam {
    pub fn new(waist: f64, wavelength: f64, power_norm: f64) -> Result<Self> {
        if !(waist > 0.0) || !(wavelength > 0.0) || !(power_norm > 0.0) {
            return Err(invalid("source", "waist, wavelength and power must be positive"));
        }
        Ok(SourceBeam {
            waist,
            wavelength,
            power_norm,
        })
    }

    pub fn field(&self, x: f64, y: f64) -> f64 {
        let w = self.waist;
        self.power_norm.sqrt() * (2.0 / PI).sqrt() / w * (-(x * x + y * y) / (w * w)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSetup {
    pub focal_length: f64,
    pub aperture_radius: f64,
}

impl LensSetup {
    pub fn new(focal_length: f64, aperture_radius: f64) -> Result<Self> {
        if !(focal_length > 0.0) || !(aperture_radius > 0.0) {
            return Err(invalid("lens", "focal length and aperture radius must be positive"));
        }
        Ok(LensSetup {
            focal_length,
            aperture_radius,
        })
    }
}

/// Complex field sampled at the SLM pixel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SlmField {
    pub grid: SlmGrid,
    pub values: Vec<Complex64>,
}

impl SlmField {
    pub fn power(&self) -> f64 {
        let da = self.grid.pixel_pitch * self.grid.pixel_pitch;
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * da
    }
}

/// Amplitude (normalized to max 1) and phase that the first diffraction
/// order must carry so that `source * target` reproduces `spec` in the SLM
/// plane with waist `input_waist`.
pub fn target_at_slm(
    spec: &LgSuperposition,
    input_waist: f64,
    source: &SourceBeam,
    grid: &SlmGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = spec.with_waist(input_waist)?;
    let ratio: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let [x, y] = grid.coords(i);
            s.field(x, y, 0.0) / source.field(x, y)
        })
        .collect();
    let peak = ratio.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(invalid("target", "target amplitude is zero or not finite on the grid"));
    }
    Ok((
        ratio.iter().map(|c| c.norm() / peak).collect(),
        ratio.iter().map(|c| c.arg()).collect(),
    ))
}

/// First-order efficiency amplitude of a blaze with depth fraction `m`,
/// `sinc(pi (1 - m))`.
pub fn first_order_amplitude(m: f64) -> f64 {
    let x = PI * (1.0 - m);
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Depth fraction `m` in `[0, 1]` with `first_order_amplitude(m) = amp`,
/// found by bisection to `1e-10`.
pub fn depth_for_amplitude(amp: f64) -> f64 {
    if amp <= 0.0 {
        return 0.0;
    }
    if amp >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if first_order_amplitude(mid) < amp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Round the written phase to 256 levels.
    pub quantize_8bit: bool,
}

/// Depth-contoured blazed grating `phi = M mod(Phi' + 2 pi x / Lambda, 2 pi)`.
///
/// The first-order Fourier coefficient of the blaze is
/// `exp(i pi (M - 1)) sinc(pi (1 - M))`, so the encoded phase is
/// `Phi' = Phi + pi (1 - M)` and `M` inverts the sinc law for the target
/// amplitude.
pub fn encode_mask(
    amp: &[f64],
    phase: &[f64],
    grid: SlmGrid,
    grating_period: f64,
    options: EncodeOptions,
) -> Result<PhaseMask> {
    if amp.len() != grid.len() || phase.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "amplitude {} and phase {} samples for a {}x{} grid",
            amp.len(),
            phase.len(),
            grid.shape[0],
            grid.shape[1]
        )));
    }
    if !(grating_period >= 2.0 * grid.pixel_pitch) {
        return Err(invalid("grating_period", "must be at least two pixels"));
    }
    if let Some(a) = amp.iter().find(|a| !(**a >= 0.0 && **a <= 1.0)) {
        return Err(invalid("amplitude", format!("value {a} outside [0, 1]")));
    }
    let two_pi = 2.0 * PI;
    let phase_out = (0..grid.len())
        .map(|i| {
            let m = depth_for_amplitude(amp[i]);
            if m == 0.0 {
                return 0.0;
            }
            let x = grid.coords(i)[0];
            let carrier = phase[i] + PI * (1.0 - m) + two_pi * x / grating_period;
            let mut p = m * carrier.rem_euclid(two_pi);
            if options.quantize_8bit {
                p = ((p / two_pi * 256.0).round() % 256.0) * two_pi / 256.0;
            }
            if p >= two_pi {
                p = 0.0;
            }
            p
        })
        .collect();
    Ok(PhaseMask {
        phase: phase_out,
        grid,
        grating_period,
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

struct Source {
    x: f64,
    y: f64,
    a: Complex64,
}

fn prepare(field: &SlmField, lens: &LensSetup, k: f64) -> Vec<Source> {
    let da = field.grid.pixel_pitch * field.grid.pixel_pitch;
    let f = lens.focal_length;
    (0..field.grid.len())
        .filter_map(|i| {
            let [x, y] = field.grid.coords(i);
            let v = field.values[i];
            if x * x + y * y > lens.aperture_radius * lens.aperture_radius || v == Complex64::new(0.0, 0.0) {
                return None;
            }
            let lens_phase = Complex64::from_polar(1.0, -k * (x * x + y * y) / (2.0 * f));
            Some(Source {
                x,
                y,
                a: v * lens_phase * da,
            })
        })
        .collect()
}

/// Scalar Fresnel-Kirchhoff integral of `field` times the thin-lens phase and
/// a hard circular aperture, evaluated at each output point.
///
/// Each pixel is a flat-field patch. Across a pixel the kernel and lens
/// phases are linearized, which turns the midpoint rule into
/// `sinc(g_x p/2) sinc(g_y p/2)` weighted point sampling. The sum over
/// pixels for one output point runs in a fixed order.
pub fn fresnel_kirchhoff_focus(
    field: &SlmField,
    lens: &LensSetup,
    wavelength: f64,
    points: &[[f64; 3]],
) -> Result<Vec<Complex64>> {
    fk_with_subdivision(field, lens, wavelength, points, 1)
}

fn fk_with_subdivision(
    field: &SlmField,
    lens: &LensSetup,
    wavelength: f64,
    points: &[[f64; 3]],
    sub: usize,
) -> Result<Vec<Complex64>> {
    if !(wavelength > 0.0) {
        return Err(invalid("wavelength", "must be positive"));
    }
    if field.values.len() != field.grid.len() {
        return Err(Error::ShapeMismatch("field values do not match the SLM grid".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p[2] > 0.0)) {
        return Err(invalid(
            "points",
            format!("output point {p:?} is not downstream of the lens"),
        ));
    }
    let k = 2.0 * PI / wavelength;
    let f = lens.focal_length;
    let pitch = field.grid.pixel_pitch;
    let sources = prepare(field, lens, k);
    let prefactor = Complex64::new(0.0, -1.0 / wavelength);
    let offsets: Vec<f64> = (0..sub)
        .map(|j| ((j as f64 + 0.5) / sub as f64 - 0.5) * pitch)
        .collect();
    let sub_pitch = pitch / sub as f64;
    let norm = 1.0 / (sub * sub) as f64;
    Ok(points
        .par_iter()
        .map(|&[px, py, pz]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in &sources {
                for &oy in &offsets {
                    for &ox in &offsets {
                        let (x, y) = (s.x + ox, s.y + oy);
                        let (dx, dy) = (px - x, py - y);
                        let r = (dx * dx + dy * dy + pz * pz).sqrt();
                        // Lens phase relative to the pixel center.
                        let extra = -k * ((x * x + y * y) - (s.x * s.x + s.y * s.y)) / (2.0 * f);
                        let gx = k * (-dx / r - x / f);
                        let gy = k * (-dy / r - y / f);
                        let env = sinc(0.5 * gx * sub_pitch) * sinc(0.5 * gy * sub_pitch);
                        let kern = Complex64::from_polar(env * 0.5 * (1.0 + pz / r) / r, k * r + extra);
                        acc += s.a * kern;
                    }
                }
            }
            acc * prefactor * norm
        })
        .collect())
}

/// Relative change at `probe` when every pixel is split into 2x2 sub-pixels.
/// Logs a warning above 1%.
pub fn refinement_check(field: &SlmField, lens: &LensSetup, wavelength: f64, probe: [f64; 3]) -> Result<f64> {
    let a = fk_with_subdivision(field, lens, wavelength, &[probe], 1)?[0];
    let b = fk_with_subdivision(field, lens, wavelength, &[probe], 2)?[0];
    let rel = (a - b).norm() / b.norm().max(f64::MIN_POSITIVE);
    if rel > 0.01 {
        log::warn!(
            "Fresnel-Kirchhoff quadrature refinement changed the field at {probe:?} by {:.2}%",
            rel * 100.0
        );
    }
    Ok(rel)
}

/// Complex field on a uniform square-sampled plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub shape: [usize; 2],
    pub values: Vec<Complex64>,
}

impl PlaneField {
    /// Output points of a plane at axial position `z`, x fastest.
    pub fn sample_points(origin: [f64; 2], spacing: f64, shape: [usize; 2], z: f64) -> Vec<[f64; 3]> {
        (0..shape[0] * shape[1])
            .map(|i| {
                [
                    origin[0] + (i % shape[0]) as f64 * spacing,
                    origin[1] + (i / shape[0]) as f64 * spacing,
                    z,
                ]
            })
            .collect()
    }

    pub fn coords(&self, i: usize) -> [f64; 2] {
        [
            self.origin[0] + (i % self.shape[0]) as f64 * self.spacing,
            self.origin[1] + (i / self.shape[0]) as f64 * self.spacing,
        ]
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spacing * self.spacing
    }
}

/// Propagates `field` to the focal plane `z = f` on the given sampling.
pub fn focal_plane(
    field: &SlmField,
    lens: &LensSetup,
    wavelength: f64,
    origin: [f64; 2],
    spacing: f64,
    shape: [usize; 2],
) -> Result<PlaneField> {
    let pts = PlaneField::sample_points(origin, spacing, shape, lens.focal_length);
    Ok(PlaneField {
        origin,
        spacing,
        shape,
        values: fresnel_kirchhoff_focus(field, lens, wavelength, &pts)?,
    })
}

/// Square window of half-width `window_radius` around the first-order spot
/// `(lambda f / Lambda, 0)`, re-centered on the origin.
pub fn extract_first_order(
    focal: &PlaneField,
    wavelength: f64,
    focal_length: f64,
    grating_period: f64,
    window_radius: f64,
) -> Result<PlaneField> {
    let cx = wavelength * focal_length / grating_period;
    let h = focal.spacing;
    let tol = 1e-9 * h;
    let i0 = ((cx - window_radius - focal.origin[0]) / h - tol).ceil();
    let i1 = ((cx + window_radius - focal.origin[0]) / h + tol).floor();
    let j0 = ((-window_radius - focal.origin[1]) / h - tol).ceil();
    let j1 = ((window_radius - focal.origin[1]) / h + tol).floor();
    if i0 < 0.0 || j0 < 0.0 || i1 >= focal.shape[0] as f64 || j1 >= focal.shape[1] as f64 || i1 < i0 || j1 < j0 {
        return Err(Error::WindowOutOfBounds(format!(
            "first-order window at x = {cx:e} m, half-width {window_radius:e} m"
        )));
    }
    let (i0, i1, j0, j1) = (i0 as usize, i1 as usize, j0 as usize, j1 as usize);
    let mut values = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
    for j in j0..=j1 {
        for i in i0..=i1 {
            values.push(focal.values[j * focal.shape[0] + i]);
        }
    }
    Ok(PlaneField {
        origin: [focal.origin[0] + i0 as f64 * h - cx, focal.origin[1] + j0 as f64 * h],
        spacing: h,
        shape: [i1 - i0 + 1, j1 - j0 + 1],
        values,
    })
}

/// Zero-mean normalized cross-correlation of two equally sized samples.
pub fn normalized_cross_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    Ok(sab / (saa * sbb).sqrt())
}
