//! Invariants checked over randomized inputs.

use std::f64::consts::PI;

use lgtweezer::constants::CESIUM_MASS;
use lgtweezer::debye::{onaxis_phase_gradient, DebyeFocus, FocusingSetup};
use lgtweezer::metrics::{
    fringe_stats, gouy_gradient_paraxial, max_phase_gradient, optimal_filling, trap_report, TrapScan,
};
use lgtweezer::paraxial::{gouy_phase, lg_amplitude, reflected_field, reflected_on_axis, superposition_gouy};
use lgtweezer::slm::{depth_for_amplitude, first_order_amplitude};
use lgtweezer::special::{bessel_j012, gauss_legendre};
use lgtweezer::transport::{
    delivery_histogram, focus_position, sample_ensemble, AtomOutcome, FringeLandscape, MotionProfile,
    ParaxialPotential, TransportMode,
};
use lgtweezer::{GridSpec, LgSuperposition, LgTerm, ReflectorModel, ScalarGrid};
use num_complex::Complex64;
use proptest::prelude::*;

const UM: f64 = 1e-6;

fn weights() -> impl Strategy<Value = Vec<(u32, f64, f64)>> {
    prop::collection::vec((0u32..7, -1.0f64..1.0, -1.0f64..1.0), 1..4)
        .prop_filter("nonzero", |v| v.iter().any(|t| t.1.abs() + t.2.abs() > 1e-3))
}

fn superposition(terms: &[(u32, f64, f64)], waist: f64, wavelength: f64) -> LgSuperposition {
    let t = terms
        .iter()
        .map(|&(p, re, im)| LgTerm {
            p,
            c: Complex64::new(re, im),
        })
        .collect();
    LgSuperposition::new(t, waist, wavelength).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn on_axis_modulus_is_independent_of_order(
        w0 in 0.5f64..5.0, lam in 0.4f64..1.6, z in -50.0f64..50.0, p in 1u32..10,
    ) {
        let a0 = lg_amplitude(0, 0.0, z * UM, w0 * UM, lam * UM).norm();
        let ap = lg_amplitude(p, 0.0, z * UM, w0 * UM, lam * UM).norm();
        prop_assert!((ap - a0).abs() <= 1e-9 * a0);
    }

    #[test]
    fn single_mode_gouy_phase(p in 0u32..8, w0 in 0.7f64..3.0) {
        let s = LgSuperposition::equal_weights(&[p], w0 * UM, UM).unwrap();
        let zr = s.rayleigh_range();
        let zs: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.02 * zr).collect();
        let psi = superposition_gouy(&s, &zs).unwrap();
        for (z, g) in zs.iter().zip(&psi) {
            prop_assert!((g - gouy_phase(p, *z, zr)).abs() < 1e-9);
        }
    }

    #[test]
    fn reflected_intensity_is_even_in_x(
        terms in weights(), x in 0.0f64..2.0, y in -2.0f64..2.0, z in 0.0f64..5.0, r in -1.0f64..1.0,
    ) {
        let s = superposition(&terms, UM, UM);
        let m = ReflectorModel::new(r, 0.0).unwrap();
        let a = reflected_field(&s, &m, 2.0 * UM, x * UM, y * UM, z * UM).norm_sqr();
        let b = reflected_field(&s, &m, 2.0 * UM, -x * UM, y * UM, z * UM).norm_sqr();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300));
    }

    #[test]
    fn fringe_period_does_not_depend_on_the_sign_of_r(r in 0.2f64..1.0, zf in 0.0f64..4.0) {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let h = UM / 64.0;
        let z: Vec<f64> = (0..=1920).map(|i| i as f64 * h).collect();
        let spacing = |r: f64| {
            let m = ReflectorModel::new(r, 0.0).unwrap();
            let i: Vec<f64> = z.iter().map(|&q| reflected_on_axis(&s, &m, zf * UM, q).norm_sqr()).collect();
            fringe_stats(&z, &i, UM, 10.0 * UM).unwrap().spacing
        };
        let (a, b) = (spacing(r), spacing(-r));
        prop_assert!((a - b).abs() < 2e-3 * a, "{a} vs {b}");
    }

    #[test]
    fn standing_wave_fringes_are_half_a_wavelength(lam in 0.4f64..1.6, phase in 0.0f64..6.0) {
        let lam = lam * UM;
        let k = 2.0 * PI / lam;
        let h = lam / 40.0;
        let z: Vec<f64> = (0..800).map(|i| i as f64 * h).collect();
        let i: Vec<f64> = z.iter().map(|&q| (k * q + phase).cos().powi(2)).collect();
        let f = fringe_stats(&z, &i, lam, 10.0 * lam).unwrap();
        prop_assert!((f.spacing / lam - 0.5).abs() < 1e-4);
        // Extremes are taken from the samples, so they can miss the peak by a little.
        prop_assert!(f.contrast > 0.97 && f.contrast <= 1.0);
    }

    #[test]
    fn optimal_filling_identity(na in 0.05f64..0.99, p in 0u32..12, lam in 0.3f64..2.0) {
        let f = optimal_filling(na, p);
        let lhs = f * f * gouy_gradient_paraxial(p, 1.0, na, lam * UM);
        let rhs = max_phase_gradient(na, lam * UM);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        prop_assert!(optimal_filling(na, p + 1) < f);
    }

    #[test]
    fn blaze_depth_inverts_first_order_efficiency(amp in 0.0f64..1.0) {
        let m = depth_for_amplitude(amp);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((first_order_amplitude(m) - amp).abs() < 1e-9);
    }

    #[test]
    fn bessel_recurrence(x in 0.05f64..300.0) {
        let [j0, j1, j2] = bessel_j012(x);
        prop_assert!((j0 + j2 - 2.0 * j1 / x).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials(n in 1usize..40, deg in 0usize..80, a in -2.0f64..0.0, b in 0.1f64..2.0) {
        prop_assume!(deg < 2 * n);
        let (x, w) = gauss_legendre(n, a, b);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
        let e = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg + 1) as f64;
        prop_assert!((q - e).abs() <= 1e-11 * e.abs().max(1.0));
    }

    #[test]
    fn histogram_conserves_probability(
        states in prop::collection::vec((0.0f64..6.0, -0.05f64..0.05, any::<bool>()), 1..200),
    ) {
        let z: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01 * UM).collect();
        let u: Vec<f64> = z.iter().map(|q| -1e-27 * (2.0 * PI * q / (0.5 * UM)).cos()).collect();
        let land = FringeLandscape::from_samples(z, u);
        let outcomes: Vec<AtomOutcome> = states
            .iter()
            .map(|&(zz, vz, lost)| AtomOutcome {
                position: [0.0, 0.0, zz * UM],
                velocity: [0.0, 0.0, vz],
                lost,
                lost_at: None,
                hold_energy_drift: 0.0,
            })
            .collect();
        let h = delivery_histogram(&outcomes, &land, CESIUM_MASS);
        let total: f64 = h.probabilities.iter().sum::<f64>() + h.lost;
        prop_assert!((total - 1.0).abs() < 1e-12);
        let lost = states.iter().filter(|s| s.2).count() as f64 / states.len() as f64;
        prop_assert!(h.lost >= lost - 1e-12);
    }

    #[test]
    fn stretched_profile_keeps_its_end_points(s in 0.2f64..10.0, t in 0.0f64..1.0) {
        let p = MotionProfile::standard().stretched(s).unwrap();
        let d = p.duration();
        prop_assert!((focus_position(&p, 0.0) - p.z_start).abs() < 1e-15);
        let end = focus_position(&MotionProfile::standard(), MotionProfile::standard().duration());
        prop_assert!((focus_position(&p, d) - end).abs() < 1e-12);
        let (a, b) = (focus_position(&p, t * d), focus_position(&p, (t * d + 1e-4 * d).min(d)));
        prop_assert!(b <= a + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn debye_on_axis_is_purely_x_polarized(
        terms in weights(), na in 0.3f64..0.95, f0 in 0.2f64..2.0, z in -3.0f64..3.0,
    ) {
        let s = superposition(&terms, UM, UM);
        let setup = FocusingSetup::new(na, 2e-3, f0, UM).unwrap().with_theta_samples(64).unwrap();
        let focus = DebyeFocus::new(&s, &setup).unwrap();
        let e = focus.field(0.0, 0.0, z * UM);
        let scale = e[0].norm().max(focus.field(0.0, 0.0, 0.0)[0].norm());
        prop_assert!(e[1].norm() <= 1e-12 * scale && e[2].norm() <= 1e-12 * scale);
    }

    // At the focus the gradient of a non-negative pupil is a weighted mean of
    // k (1 - cos theta) over the aperture, so it cannot exceed the edge value.
    #[test]
    fn gaussian_phase_gradient_at_focus_is_bounded(na in 0.3f64..0.95, f0 in 0.1f64..3.0) {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let setup = FocusingSetup::new(na, 2e-3, f0, UM).unwrap();
        let (z, g) = onaxis_phase_gradient(&s, &setup, 0.05 * UM, 21).unwrap();
        let bound = max_phase_gradient(na, UM);
        let at = z.iter().position(|v| v.abs() < 1e-15).unwrap();
        prop_assert!(g[at].abs() <= bound * (1.0 + 1e-3), "{} > {bound}", g[at]);
    }

    #[test]
    fn trap_frequency_scaling(depth_mk in 0.1f64..5.0, mass_scale in 0.2f64..5.0) {
        let s = LgSuperposition::gaussian(UM, UM).unwrap();
        let peak = s.focal_intensity();
        let inten = |x: f64, y: f64, z: f64| s.field(x, y, z).norm_sqr() / peak;
        let base = 1e-3 * 1.380649e-23;
        let mut scan = TrapScan::new([3.0 * UM, 3.0 * UM, 15.0 * UM], base, CESIUM_MASS);
        scan.samples = 801;
        let w1 = trap_report(inten, &scan).unwrap().omega.unwrap();
        scan.depth = base * depth_mk;
        scan.mass = CESIUM_MASS * mass_scale;
        let w2 = trap_report(inten, &scan).unwrap().omega.unwrap();
        let expect = (depth_mk / mass_scale).sqrt();
        for a in 0..3 {
            prop_assert!((w2[a] / w1[a] - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn ensemble_atoms_are_reproducible_in_isolation(n in 1usize..40, extra in 1usize..20, seed in any::<u64>()) {
        let s = LgSuperposition::sum_024(UM, UM).unwrap();
        let field = ParaxialPotential::new(s, ReflectorModel::none(), 1e-3 * 1.380649e-23).unwrap();
        let a = sample_ensemble(n, 1e-4, &field, 0.0, CESIUM_MASS, TransportMode::Full3d, seed).unwrap();
        let b = sample_ensemble(n + extra, 1e-4, &field, 0.0, CESIUM_MASS, TransportMode::Full3d, seed).unwrap();
        prop_assert_eq!(&a.positions[..], &b.positions[..n]);
        prop_assert_eq!(&a.velocities[..], &b.velocities[..n]);
    }
}

// The bound above does not extend to pupils with sign changes: a bare p = 4
// pupil at its paraxial optimum already overshoots it at the focus.
#[test]
fn signed_pupil_can_exceed_the_gradient_bound() {
    let s = LgSuperposition::equal_weights(&[4], UM, UM).unwrap();
    let setup = FocusingSetup::new(0.7, 2e-3, 0.36, UM).unwrap();
    let (z, g) = onaxis_phase_gradient(&s, &setup, 0.05 * UM, 21).unwrap();
    let at = z.iter().position(|v| v.abs() < 1e-15).unwrap();
    let ratio = g[at].abs() / max_phase_gradient(0.7, UM);
    assert!(ratio > 1.01 && ratio < 1.03, "{ratio}");
}

#[test]
fn scalar_grid_binary_round_trip() {
    let spec = GridSpec::new([-1.0, 0.0, 2.0], [0.5, 1.0, 0.25], [3, 1, 4]).unwrap();
    let vals: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
    let g = ScalarGrid::new(spec, vals).unwrap();
    let dir = tempfile::tempdir().unwrap();
    g.write_binary(dir.path(), "g").unwrap();
    assert_eq!(ScalarGrid::read_binary(dir.path(), "g").unwrap(), g);
}
