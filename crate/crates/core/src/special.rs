//! Special functions and quadrature rules used by the field evaluators.

use std::f64::consts::PI;

/// Laguerre polynomial `L_p^0(x)` by the three-term recurrence
/// `(n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}`.
pub fn assoc_laguerre(p: u32, x: f64) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for n in 1..p {
        let n = n as f64;
        let next = ((2.0 * n + 1.0 - x) * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Bessel functions of the first kind `[J0(x), J1(x), J2(x)]`.
///
/// Miller's backward recurrence normalized with `J0 + 2 sum J_2k = 1`. One
/// recurrence yields all three orders, which is what the Debye integrands need.
/// Accurate to ~1e-14 absolute for the argument range used here (|x| < 1e4).
pub fn bessel_j012(x: f64) -> [f64; 3] {
    let ax = x.abs();
    if ax < 1e-8 {
        let h = 0.5 * ax;
        return [1.0 - h * h, h, 0.5 * h * h];
    }
    // Start order well beyond the turning point so the minimal solution dominates.
    let start = {
        let m = ax + 30.0 + 8.0 * ax.sqrt().max(1.0);
        let m = m as usize;
        m + (m % 2)
    };
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = 0.0_f64;
    let mut out = [0.0; 3];
    let two_over_x = 2.0 / ax;
    for n in (0..=start).rev() {
        if n <= 2 {
            out[n] = j;
        }
        if n % 2 == 0 {
            norm += if n == 0 { j } else { 2.0 * j };
        }
        if n == 0 {
            break;
        }
        let jm1 = n as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut res = [out[0] / norm, out[1] / norm, out[2] / norm];
    if x < 0.0 {
        res[1] = -res[1];
    }
    res
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
///
/// Newton iteration on `P_n` seeded with the Tricomi asymptotic roots.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (_, d) = legendre_and_derivative(n, t);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = mid - half * t;
        nodes[n - 1 - i] = mid + half * t;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}
