//! Exact volumes of caps and tubes on spheres by adaptive quadrature.

use crate::geom::sphere_volume;

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Volume of a geodesic ball of radius `rho` in `S^n`.
pub fn cap_volume(n: usize, rho: f64) -> f64 {
    let rho = rho.clamp(0.0, std::f64::consts::PI);
    let k = n as i32 - 1;
    let total = sphere_volume(n - 1);
    total * integrate(|t| t.sin().powi(k), 0.0, rho, 1e-14)
}

/// Volume of the `eps`-tube around a great `S^{n-q}` in `S^n`.
pub fn equator_tube_volume(n: usize, q: usize, eps: f64) -> f64 {
    let eps = eps.clamp(0.0, std::f64::consts::FRAC_PI_2);
    let c = sphere_volume(n - q) * sphere_volume(q - 1);
    let (a, b) = ((n - q) as i32, q as i32 - 1);
    c * integrate(|t| t.cos().powi(a) * t.sin().powi(b), 0.0, eps, 1e-14)
}

/// Radius of the cap with the given volume, by bisection.
pub fn cap_radius_for_volume(n: usize, volume: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cap_volume(n, mid) < volume {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
