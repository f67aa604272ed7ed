//! Scene pipelines. Each scene writes CSV tables (and binary grids where a
//! map is too large for CSV), records scalar metrics, and leaves the
//! manifest and a gnuplot script to [`run_scene`].

use std::f64::consts::PI;
use std::path::Path;

use lgtweezer::constants::{kelvin_to_joule, BOLTZMANN, CESIUM_MASS};
use lgtweezer::debye::{
    convergence_check, ellipticity_map, max_gradient_in_central_lobe, onaxis_phase_gradient, reflect_planar,
    render_with, DebyeFocus, FocusingSetup,
};
use lgtweezer::metrics::{
    fringe_stats, gouy_gradient_paraxial, max_phase_gradient, optimal_filling, paraxial_trap_freqs, saddle_window,
    schrodinger_1d_levels, sweep_filling_factor, sweep_to_csv, trap_report, CenterClass, FringeStats, SweepRow,
    TrapReport, TrapScan,
};
use lgtweezer::paraxial::{reflected_on_axis, superposition_gouy};
use lgtweezer::slm::{
    encode_mask, extract_first_order, focal_plane, fresnel_kirchhoff_focus, normalized_cross_correlation,
    refinement_check, target_at_slm, EncodeOptions, LensSetup, SlmGrid, SourceBeam,
};
use lgtweezer::special::gauss_legendre;
use lgtweezer::transport::{focus_position, MotionProfile, TransportMode, TransportScenario};
use lgtweezer::{GridSpec, LgSuperposition, LgTerm, ReflectorModel, ScalarGrid};
use num_complex::Complex64;

use crate::config::*;
use crate::error::CliError;
use crate::manifest::{csv, Manifest, OutputSink};

const UM: f64 = 1e-6;

/// Frequency in kHz of an angular frequency.
fn khz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e3)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Runs `config` into `out` and writes the manifest.
pub fn run_scene(config: &SceneConfig, label: &str, out: &Path) -> Result<Manifest, CliError> {
    let mut sink = OutputSink::create(out)?;
    match &config.scene {
        Scene::ParaxialField(s) => paraxial_field(s, &mut sink)?,
        Scene::ReflectionFringes(s) => reflection_fringes(s, &mut sink)?,
        Scene::SlmVerify(s) => slm_verify(s, &mut sink)?,
        Scene::DebyeField(s) => debye_field(s, &mut sink)?,
        Scene::Ellipticity(s) => ellipticity(s, &mut sink)?,
        Scene::F0Sweep(s) => f0_sweep(s, &mut sink)?,
        Scene::OptimalF0(s) => optimal_f0(s, &mut sink)?,
        Scene::Transport1d(s) => transport(s, TransportMode::Axial1d, config.seed, &mut sink)?,
        Scene::Transport3d(s) => transport(s, TransportMode::Full3d, config.seed, &mut sink)?,
    }
    sink.write_gnuplot(label)?;
    sink.finish(label, config)
}

fn write_grid(sink: &mut OutputSink, stem: &str, grid: &ScalarGrid) -> Result<(), CliError> {
    sink.write(&format!("{stem}.json"), grid.header_json().as_bytes())?;
    sink.write(&format!("{stem}.bin"), &grid.to_le_bytes())
}

fn report_metrics(sink: &mut OutputSink, name: &str, r: &TrapReport) {
    sink.metric(format!("{name}.dx_um"), r.fwhm[0] / UM);
    sink.metric(format!("{name}.dy_um"), r.fwhm[1] / UM);
    sink.metric(format!("{name}.dz_um"), r.fwhm[2] / UM);
    sink.metric(format!("{name}.volume_um3"), r.volume / (UM * UM * UM));
    sink.metric(format!("{name}.peak_z_um"), r.peak_z / UM);
    match r.omega {
        Some(w) => {
            sink.metric(format!("{name}.omega_x_khz"), khz(w[0]));
            sink.metric(format!("{name}.omega_y_khz"), khz(w[1]));
            sink.metric(format!("{name}.omega_z_khz"), khz(w[2]));
        }
        None => sink.warn(format!(
            "{name}: the nominal focus is a {}, no trap frequencies",
            r.center_class
        )),
    }
}

/// Ratios between the first beam and every other beam.
fn ratio_metrics(sink: &mut OutputSink, names: &[String]) {
    let Some(first) = names.first() else { return };
    let m = sink.metrics().clone();
    let get = |n: &str, k: &str| m.get(&format!("{n}.{k}")).copied();
    for other in &names[1..] {
        if let (Some(a), Some(b)) = (get(first, "volume_um3"), get(other, "volume_um3")) {
            sink.metric(format!("ratio.volume.{first}/{other}"), a / b);
        }
        for k in ["omega_x_khz", "omega_y_khz", "omega_z_khz", "fringe_contrast", "P1"] {
            if let (Some(a), Some(b)) = (get(other, k), get(first, k)) {
                let key = k.trim_end_matches("_khz");
                sink.metric(format!("ratio.{key}.{other}/{first}"), a / b);
            }
        }
    }
}

fn fringe_metrics(sink: &mut OutputSink, name: &str, f: &FringeStats, wavelength: f64) {
    sink.metric(format!("{name}.fringe_spacing_lambda"), f.spacing / wavelength);
    sink.metric(format!("{name}.fringe_contrast"), f.contrast);
    sink.metric(format!("{name}.fringe_maxima"), f.maxima as f64);
}

fn fringe_axis(fr: &FringeConfig, wavelength: f64) -> Vec<f64> {
    let z0 = fr.surface.si();
    let h = wavelength / fr.samples_per_wavelength as f64;
    let n = (fr.z_max.si() / h).round() as usize + 1;
    (0..n).map(|i| z0 + i as f64 * h).collect()
}

fn paraxial_field(s: &ParaxialFieldScene, sink: &mut OutputSink) -> Result<(), CliError> {
    let (lam, w0) = (s.wavelength.si(), s.waist.si());
    let depth = kelvin_to_joule(s.depth.si());
    let (xh, zh) = (s.x_half.si(), s.z_half.si());
    let scan = TrapScan {
        half_extent: [xh, xh, zh],
        samples: s.samples,
        depth,
        mass: CESIUM_MASS,
        fit_fraction: s.fit_fraction,
        fit_samples: s.fit_samples,
    };
    let reflector = ReflectorModel::new(s.fringes.reflectivity, s.fringes.surface.si())?;
    let names: Vec<String> = s.beams.iter().map(|b| b.name.clone()).collect();
    for b in &s.beams {
        let spec = b.superposition(w0, lam)?;
        let peak = spec.focal_intensity();
        let inten = |x: f64, y: f64, z: f64| spec.field(x, y, z).norm_sqr() / peak;
        let rep = trap_report(inten, &scan)?;
        report_metrics(sink, &b.name, &rep);

        let xs = linspace(-xh, xh, s.samples);
        let zs = linspace(-zh, zh, s.samples);
        sink.write(
            &format!("{}_xcut.csv", b.name),
            csv("x_um,intensity", xs.iter().map(|&x| vec![x / UM, inten(x, 0.0, 0.0)])).as_bytes(),
        )?;
        sink.write(
            &format!("{}_zcut.csv", b.name),
            csv("z_um,intensity", zs.iter().map(|&z| vec![z / UM, inten(0.0, 0.0, z)])).as_bytes(),
        )?;
        let gouy = superposition_gouy(&spec, &zs)?;
        sink.write(
            &format!("{}_gouy.csv", b.name),
            csv("z_um,gouy_rad", zs.iter().zip(&gouy).map(|(z, g)| vec![z / UM, *g])).as_bytes(),
        )?;

        // Level spacing of the exact 1D potential across the central lobe.
        if rep.center_class == CenterClass::Trapping {
            for (axis, label) in [(0usize, "x"), (2, "z")] {
                let half = 0.5 * rep.fwhm[axis];
                let q = linspace(-half, half, s.schrodinger_points);
                let u: Vec<f64> = q
                    .iter()
                    .map(|&v| {
                        let mut p = [0.0; 3];
                        p[axis] = v;
                        -depth * inten(p[0], p[1], p[2])
                    })
                    .collect();
                let levels = schrodinger_1d_levels(&q, &u, CESIUM_MASS, 3)?;
                if levels.leaking {
                    sink.warn(format!(
                        "{}: Schrödinger states along {label} reach the window edge",
                        b.name
                    ));
                }
                if let (Some(w), Some(fit)) = (levels.omega(), rep.omega) {
                    sink.metric(format!("{}.omega_{label}_schrodinger_khz", b.name), khz(w));
                    sink.metric(format!("{}.schrodinger_over_fit_{label}", b.name), w / fit[axis]);
                }
            }
        }
        if b.orders == [0] {
            let (wr, wz) = paraxial_trap_freqs(depth, CESIUM_MASS, w0, spec.rayleigh_range());
            sink.metric(format!("{}.closed_form_omega_x_khz", b.name), khz(wr));
            sink.metric(format!("{}.closed_form_omega_z_khz", b.name), khz(wz));
        }

        let fz = fringe_axis(&s.fringes, lam);
        let zf = s.fringes.focus.si();
        let fi: Vec<f64> = fz
            .iter()
            .map(|&z| reflected_on_axis(&spec, &reflector, zf, z).norm_sqr() / peak)
            .collect();
        sink.write(
            &format!("{}_fringes.csv", b.name),
            csv("z_um,intensity", fz.iter().zip(&fi).map(|(z, i)| vec![z / UM, *i])).as_bytes(),
        )?;
        let probe = s.fringes.surface.si() + s.fringes.contrast_at.si();
        fringe_metrics(sink, &b.name, &fringe_stats(&fz, &fi, lam, probe)?, lam);
    }
    ratio_metrics(sink, &names);
    Ok(())
}

fn setup_for(obj: &ObjectiveConfig, wavelength: f64, f0: f64) -> Result<FocusingSetup, CliError> {
    Ok(FocusingSetup::new(obj.na, obj.focal_length.si(), f0, wavelength)?.with_theta_samples(obj.theta_samples)?)
}

/// The pupil only sees the beam profile through `F0`, so the waist passed to
/// the superposition is a placeholder.
fn focus_for(b: &BeamConfig, setup: &FocusingSetup) -> Result<(LgSuperposition, DebyeFocus), CliError> {
    let spec = b.superposition(setup.wavelength, setup.wavelength)?;
    let focus = DebyeFocus::new(&spec, setup)?;
    Ok((spec, focus))
}

fn check_convergence(
    sink: &mut OutputSink,
    name: &str,
    spec: &LgSuperposition,
    setup: &FocusingSetup,
    probe: [f64; 3],
) -> Result<(), CliError> {
    let c = convergence_check(spec, setup, probe)?;
    if !c.converged {
        sink.warn(format!(
            "{name}: doubling theta samples changes the field at {probe:?} by {:.3}%",
            100.0 * c.max_relative_change
        ));
    }
    Ok(())
}

fn xz_grid(map: &MapConfig) -> Result<GridSpec, CliError> {
    Ok(GridSpec::from_bounds(
        [-map.x_half.si(), 0.0, map.z_min.si()],
        [map.x_half.si(), 0.0, map.z_max.si()],
        [map.nx, 1, map.nz],
    )?)
}

fn reflection_fringes(s: &ReflectionFringesScene, sink: &mut OutputSink) -> Result<(), CliError> {
    let lam = s.wavelength.si();
    let setup = setup_for(&s.objective, lam, s.objective.filling_factor)?;
    let reflector = ReflectorModel::new(s.fringes.reflectivity, s.fringes.surface.si())?;
    let names: Vec<String> = s.beams.iter().map(|b| b.name.clone()).collect();
    let fz = fringe_axis(&s.fringes, lam);
    for b in &s.beams {
        let (spec, focus) = focus_for(b, &setup)?;
        check_convergence(sink, &b.name, &spec, &setup, [0.0, 0.0, s.fringes.z_max.si()])?;
        let peak = focus.intensity(0.0, 0.0, 0.0);
        let mirror = reflect_planar(focus, reflector, s.fringes.focus.si());
        let fi: Vec<f64> = fz
            .iter()
            .map(|&z| mirror.intensity(0.0, 0.0, z).map(|v| v / peak))
            .collect::<lgtweezer::Result<_>>()?;
        sink.write(
            &format!("{}_fringes.csv", b.name),
            csv("z_um,intensity", fz.iter().zip(&fi).map(|(z, i)| vec![z / UM, *i])).as_bytes(),
        )?;
        let probe = s.fringes.surface.si() + s.fringes.contrast_at.si();
        fringe_metrics(sink, &b.name, &fringe_stats(&fz, &fi, lam, probe)?, lam);
        let mut map = mirror.render(&xz_grid(&s.map)?)?.intensity();
        map.values.iter_mut().for_each(|v| *v /= peak);
        write_grid(sink, &format!("{}_xz", b.name), &map)?;
    }
    ratio_metrics(sink, &names);
    Ok(())
}

/// Lens focal field of a unit-power-per-mode superposition: each LG_p picks
/// up `(-1)^p` under the Fourier transform.
fn focal_image(b: &BeamConfig, focal_waist: f64, wavelength: f64) -> Result<LgSuperposition, CliError> {
    let terms = b
        .orders
        .iter()
        .zip(b.weights.iter().zip(&b.weights_im))
        .map(|(&p, (&re, &im))| LgTerm {
            p,
            c: Complex64::new(re, im) * if p % 2 == 0 { 1.0 } else { -1.0 },
        })
        .collect();
    Ok(LgSuperposition::new(terms, focal_waist, wavelength)?)
}

/// Peak intensity per unit power of `spec`, with the power integrated
/// numerically over the transverse plane.
fn peak_per_power(spec: &LgSuperposition) -> f64 {
    let w = spec.waist();
    let (r, wt) = gauss_legendre(400, 0.0, 12.0 * w);
    let power: f64 = r
        .iter()
        .zip(&wt)
        .map(|(r, w)| 2.0 * PI * r * w * spec.field(*r, 0.0, 0.0).norm_sqr())
        .sum();
    spec.focal_intensity() / power
}

fn slm_verify(s: &SlmVerifyScene, sink: &mut OutputSink) -> Result<(), CliError> {
    let lam = s.wavelength.si();
    let grid = SlmGrid::new([s.grid, s.grid], s.pixel_pitch.si())?;
    let source = SourceBeam::new(s.source_waist.si(), lam, 1.0)?;
    let lens = LensSetup::new(s.focal_length.si(), s.aperture_radius.si())?;
    let spec = s.beam.superposition(s.input_waist.si(), lam)?;
    let (amp, phase) = target_at_slm(&spec, s.input_waist.si(), &source, &grid)?;
    let period = s.grating_period_px as f64 * grid.pixel_pitch;
    let opts = EncodeOptions {
        quantize_8bit: s.quantize_8bit,
    };
    let mask = encode_mask(&amp, &phase, grid, period, opts)?;
    sink.write("mask.pgm", &mask.to_pgm())?;
    let meta = serde_json::to_string_pretty(&mask.metadata(lam)).expect("metadata serializes");
    sink.write("mask.json", meta.as_bytes())?;

    let field = mask.modulate(&source);
    let wf = lam * lens.focal_length / (PI * s.input_waist.si());
    let x1 = lam * lens.focal_length / period;
    let half = 1.5 * wf;
    let n = s.window_samples;
    let h = 2.0 * half / (n - 1) as f64;
    let plane = focal_plane(&field, &lens, lam, [x1 - half, -half], h, [n, n])?;
    let first = extract_first_order(&plane, lam, lens.focal_length, period, half)?;
    let ideal = focal_image(&s.beam, wf, lam)?;
    let measured = first.intensity();
    let target: Vec<f64> = (0..measured.len())
        .map(|i| {
            let [x, y] = first.coords(i);
            ideal.field(x, y, 0.0).norm_sqr()
        })
        .collect();
    let ncc = normalized_cross_correlation(&measured, &target)?;
    sink.metric("ncc_focal_plane", ncc);
    let mmax = measured.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tmax = target.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut rows = Vec::new();
    for i in 0..measured.len() {
        let [x, y] = first.coords(i);
        rows.push(vec![x / UM, y / UM, measured[i] / mmax, target[i] / tmax]);
    }
    sink.write("focal_plane.csv", csv("x_um,y_um,extracted,ideal", rows).as_bytes())?;

    // Axial cut through the first-order spot, two focal Rayleigh ranges each way.
    let zr = PI * wf * wf / lam;
    let dz = linspace(-2.0 * zr, 2.0 * zr, s.axial_samples);
    let pts: Vec<[f64; 3]> = dz.iter().map(|d| [x1, 0.0, lens.focal_length + d]).collect();
    let axial: Vec<f64> = fresnel_kirchhoff_focus(&field, &lens, lam, &pts)?
        .iter()
        .map(|v| v.norm_sqr())
        .collect();
    let ideal_axial: Vec<f64> = dz.iter().map(|&d| ideal.field(0.0, 0.0, d).norm_sqr()).collect();
    sink.metric("ncc_axial", normalized_cross_correlation(&axial, &ideal_axial)?);
    let amax = axial.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let imax = ideal_axial.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    sink.write(
        "axial_cut.csv",
        csv(
            "dz_mm,extracted,ideal",
            (0..dz.len()).map(|i| vec![dz[i] * 1e3, axial[i] / amax, ideal_axial[i] / imax]),
        )
        .as_bytes(),
    )?;

    let refine = refinement_check(&field, &lens, lam, [x1, 0.0, lens.focal_length])?;
    sink.metric("subpixel_refinement_change", refine);
    if refine > 0.01 {
        sink.warn(format!(
            "SLM quadrature changes by {:.2}% under 2x2 subpixel refinement",
            100.0 * refine
        ));
    }
    sink.metric("focal_waist_um", wf / UM);
    sink.metric("first_order_offset_um", x1 / UM);
    sink.metric("first_order_efficiency", first.power() / field.power());

    // Peak intensity per unit power of the superposition relative to a single
    // Gaussian: 3 for three equal modes, i.e. equal peaks at a third of the power.
    let e0 = LgSuperposition::gaussian(wf, lam)?;
    let gain = peak_per_power(&ideal) / peak_per_power(&e0);
    let modes = s.beam.orders.len() as f64;
    sink.metric("peak_per_power_gain", gain);
    sink.metric("peak_power_identity_residual", (gain / modes - 1.0).abs());
    Ok(())
}

fn debye_field(s: &DebyeFieldScene, sink: &mut OutputSink) -> Result<(), CliError> {
    let lam = s.wavelength.si();
    let setup = setup_for(&s.objective, lam, s.objective.filling_factor)?;
    let (xh, zh) = (s.x_half.si(), s.z_half.si());
    let scan = TrapScan {
        half_extent: [xh, xh, zh],
        samples: s.samples,
        depth: kelvin_to_joule(s.depth.si()),
        mass: CESIUM_MASS,
        fit_fraction: s.fit_fraction,
        fit_samples: s.fit_samples,
    };
    let names: Vec<String> = s.beams.iter().map(|b| b.name.clone()).collect();
    for b in &s.beams {
        let (spec, focus) = focus_for(b, &setup)?;
        check_convergence(sink, &b.name, &spec, &setup, [0.5 * xh, 0.0, 0.5 * zh])?;
        let peak = focus.intensity(0.0, 0.0, 0.0);
        let inten = |x: f64, y: f64, z: f64| focus.intensity(x, y, z) / peak;
        let rep = trap_report(inten, &scan)?;
        report_metrics(sink, &b.name, &rep);
        for (axis, label, half) in [(0usize, "x", xh), (1, "y", xh), (2, "z", zh)] {
            let q = linspace(-half, half, s.samples);
            let rows = q.iter().map(|&v| {
                let mut p = [0.0; 3];
                p[axis] = v;
                vec![v / UM, inten(p[0], p[1], p[2])]
            });
            sink.write(
                &format!("{}_{label}cut.csv", b.name),
                csv(&format!("{label}_um,intensity"), rows).as_bytes(),
            )?;
        }
        let mut map = render_with(&focus, &xz_grid(&s.map)?)?.intensity();
        map.values.iter_mut().for_each(|v| *v /= peak);
        write_grid(sink, &format!("{}_xz", b.name), &map)?;
    }
    if let Some(b) = s.beams.first() {
        for &f0 in &s.e2_filling_factors {
            let st = setup_for(&s.objective, lam, f0)?;
            let (_, focus) = focus_for(b, &st)?;
            let r = lgtweezer::metrics::e2_radius(|x, y, z| focus.intensity(x, y, z), 0.0, 4.0 * lam, 801, 16)?;
            sink.metric(format!("{}.w_e2_um.F0={f0}", b.name), r / UM);
        }
    }
    ratio_metrics(sink, &names);
    Ok(())
}

fn ellipticity(s: &EllipticityScene, sink: &mut OutputSink) -> Result<(), CliError> {
    let lam = s.wavelength.si();
    let setup = setup_for(&s.objective, lam, s.objective.filling_factor)?;
    let grid = xz_grid(&s.map)?;
    for b in &s.beams {
        let (_, focus) = focus_for(b, &setup)?;
        let field = render_with(&focus, &grid)?;
        let map = ellipticity_map(&field);
        let g = max_gradient_in_central_lobe(&field, &map, 1, 0);
        sink.metric(format!("{}.max_dCy_dx_per_um", b.name), g * UM);
        let inten = field.intensity();
        let peak = inten.max();
        let rows = (0..grid.len()).map(|i| {
            let [x, _, z] = grid.coords(i);
            let c = map.c[i].unwrap_or([f64::NAN; 3]);
            vec![x / UM, z / UM, c[0], c[1], c[2], inten.values[i] / peak]
        });
        sink.write(
            &format!("{}_ellipticity.csv", b.name),
            csv("x_um,z_um,Cx,Cy,Cz,intensity", rows).as_bytes(),
        )?;
    }
    Ok(())
}

fn sweep_axis(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

fn f0_sweep(s: &F0SweepScene, sink: &mut OutputSink) -> Result<(), CliError> {
    let lam = s.wavelength.si();
    let setup = setup_for(&s.objective, lam, s.objective.filling_factor)?;
    let (xh, zh) = (s.x_half.si(), s.z_half.si());
    let scan = TrapScan {
        half_extent: [xh, xh, zh],
        samples: s.samples,
        depth: kelvin_to_joule(s.depth.si()),
        mass: CESIUM_MASS,
        fit_fraction: s.fit_fraction,
        fit_samples: s.fit_samples,
    };
    let f0s = sweep_axis(s.f0_start, s.f0_stop, s.f0_step);
    for b in &s.beams {
        let spec = b.superposition(lam, lam)?;
        let rows: Vec<SweepRow> = sweep_filling_factor(&spec, &setup, &f0s, &scan);
        sink.write(&format!("{}_sweep.csv", b.name), sweep_to_csv(&rows).as_bytes())?;
        let curv = rows.iter().filter_map(|r| {
            r.report
                .as_ref()
                .ok()
                .map(|rep| vec![r.filling_factor, rep.curvature[0], rep.curvature[1], rep.curvature[2]])
        });
        sink.write(
            &format!("{}_curvature.csv", b.name),
            csv("F0,d2U_dx2,d2U_dy2,d2U_dz2", curv).as_bytes(),
        )?;
        let failed = rows.iter().filter(|r| r.report.is_err()).count();
        if failed > 0 {
            sink.warn(format!("{}: {failed} filling factors gave no trap report", b.name));
        }
        if let Some((lo, hi)) = saddle_window(&rows) {
            sink.metric(format!("{}.saddle_lo", b.name), lo);
            sink.metric(format!("{}.saddle_hi", b.name), hi);
        }
        let best = rows
            .iter()
            .filter_map(|r| r.report.as_ref().ok().map(|rep| (r.filling_factor, rep.volume)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((f0, v)) = best {
            sink.metric(format!("{}.min_volume_um3", b.name), v / (UM * UM * UM));
            sink.metric(format!("{}.min_volume_F0", b.name), f0);
        }
        // Largest fractional volume increase between neighbouring filling factors.
        let vols: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.report.as_ref().ok().map(|rep| rep.volume))
            .collect();
        if vols.len() > 1 {
            let rise = vols
                .windows(2)
                .map(|w| (w[1] - w[0]) / w[0])
                .fold(f64::NEG_INFINITY, f64::max);
            sink.metric(format!("{}.max_volume_rise", b.name), rise);
        }
        let best_wz = rows
            .iter()
            .filter_map(|r| r.report.as_ref().ok()?.omega.map(|w| (r.filling_factor, w[2])))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((f0, w)) = best_wz {
            sink.metric(format!("{}.max_omega_z_khz", b.name), khz(w));
            sink.metric(format!("{}.max_omega_z_F0", b.name), f0);
        }
    }
    Ok(())
}

fn optimal_f0(s: &OptimalF0Scene, sink: &mut OutputSink) -> Result<(), CliError> {
    let lam = s.wavelength.si();
    let na = s.objective.na;
    let gmax = max_phase_gradient(na, lam);
    let f0s = linspace(s.f0_start, s.f0_stop, s.f0_samples);
    let header = std::iter::once("F0".to_string())
        .chain(s.orders.iter().map(|p| format!("p{p}_rad_per_um")))
        .chain(std::iter::once("max_rad_per_um".to_string()))
        .collect::<Vec<_>>()
        .join(",");
    let rows = f0s.iter().map(|&f0| {
        let mut r = vec![f0];
        r.extend(s.orders.iter().map(|&p| gouy_gradient_paraxial(p, f0, na, lam) * UM));
        r.push(gmax * UM);
        r
    });
    sink.write("gouy_gradient.csv", csv(&header, rows).as_bytes())?;
    sink.metric("max_phase_gradient_per_um", gmax * UM);
    let mut residual: f64 = 0.0;
    for &p in &s.orders {
        let f = optimal_filling(na, p);
        sink.metric(format!("optimal_F0.p{p}"), f);
        residual = residual.max((gouy_gradient_paraxial(p, f, na, lam) / gmax - 1.0).abs());
    }
    sink.metric("identity_residual", residual);

    let n = s.z_samples;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut zs = Vec::new();
    let mut labels = vec!["z_um".to_string()];
    for b in &s.beams {
        let spec = b.superposition(lam, lam)?;
        for &f0 in &s.gradient_filling_factors {
            let setup = setup_for(&s.objective, lam, f0)?;
            match onaxis_phase_gradient(&spec, &setup, s.z_window.si(), n) {
                Ok((z, g)) => {
                    let worst = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    sink.metric(format!("{}.max_dpsi_dz_over_bound.F0={f0}", b.name), worst / gmax);
                    let at = (0..z.len())
                        .min_by(|&i, &j| z[i].abs().total_cmp(&z[j].abs()))
                        .unwrap_or(0);
                    sink.metric(
                        format!("{}.focus_dpsi_dz_over_bound.F0={f0}", b.name),
                        g[at].abs() / gmax,
                    );
                    zs = z;
                    labels.push(format!("{}_F0={f0}", b.name));
                    cols.push(g.iter().map(|v| v * UM).collect());
                }
                Err(e) => sink.warn(format!("{} at F0={f0}: {e}", b.name)),
            }
        }
    }
    if !cols.is_empty() {
        let rows = (0..zs.len()).map(|i| {
            let mut r = vec![zs[i] / UM];
            r.extend(cols.iter().map(|c| c[i]));
            r
        });
        sink.write("phase_gradient.csv", csv(&labels.join(","), rows).as_bytes())?;
    }
    Ok(())
}

fn transport(s: &TransportScene, mode: TransportMode, seed: u64, sink: &mut OutputSink) -> Result<(), CliError> {
    let p = &s.profile;
    let profile = MotionProfile::new(
        p.z_start.si(),
        p.a_accel.si(),
        p.t_accel.si(),
        p.t_const.si(),
        p.a_decel.si(),
        p.t_decel.si(),
    )?;
    let t_end = profile.duration() + s.hold.si();
    let ts = linspace(0.0, t_end, p.samples);
    sink.write(
        "motion_profile.csv",
        csv(
            "t_ms,z_focus_um",
            ts.iter().map(|&t| vec![t * 1e3, focus_position(&profile, t) / UM]),
        )
        .as_bytes(),
    )?;
    sink.metric("profile_duration_ms", profile.duration() * 1e3);
    if s.profile_only {
        return Ok(());
    }
    let reflector = ReflectorModel::new(s.reflectivity, s.surface.si())?;
    let names: Vec<String> = s.beams.iter().map(|b| b.name.clone()).collect();
    for b in &s.beams {
        let spec = b.superposition(s.waist.si(), s.wavelength.si())?;
        let mut sc = TransportScenario::new(spec, reflector, mode, s.n_atoms, seed);
        sc.depth = kelvin_to_joule(s.depth.si());
        sc.temperature = s.temperature.si();
        sc.profile = profile;
        sc.hold = s.hold.si();
        sc.gravity = s.gravity.map(|g| g.si());
        sc.dt = s.dt.map(|d| d.si());
        sc.knot_interval = s.knot_interval.si();
        sc.steps_per_period = s.steps_per_period;
        sc.landscape_range = s.landscape_range.si();
        let res = sc.run()?;
        sink.write(&format!("{}_histogram.csv", b.name), res.histogram.to_csv().as_bytes())?;
        let land = &res.landscape;
        sink.write(
            &format!("{}_landscape.csv", b.name),
            csv(
                "z_um,U_mK",
                land.z
                    .iter()
                    .zip(&land.u)
                    .map(|(z, u)| vec![z / UM, u / BOLTZMANN * 1e3]),
            )
            .as_bytes(),
        )?;
        let h = &res.histogram;
        for (i, prob) in h.probabilities.iter().take(3).enumerate() {
            sink.metric(format!("{}.P{}", b.name, i + 1), *prob);
        }
        if let Some(z1) = h.trap_centers.first() {
            sink.metric(format!("{}.z1_um", b.name), z1 / UM);
        }
        sink.metric(format!("{}.lost", b.name), h.lost);
        sink.metric(format!("{}.total_steps", b.name), res.total_steps as f64);
        sink.metric(format!("{}.mean_hold_drift", b.name), res.mean_hold_drift);
        if res.drift_warning {
            sink.warn(format!(
                "{}: mean hold-phase energy drift {:.3} of the depth; refine the time step",
                b.name, res.mean_hold_drift
            ));
        }
    }
    ratio_metrics(sink, &names);
    Ok(())
}
