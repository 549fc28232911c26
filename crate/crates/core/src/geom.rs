//! Small dense-vector helpers and the axis-aligned box type shared by the
//! fiber extraction and slicing code.

use serde::{Deserialize, Serialize};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between the closed segments `[p0, p1]` and `[q0, q1]`.
///
/// Closest-point parameters are found by minimising the convex quadratic in
/// `(s, t)` over the unit square, clamping one parameter and re-solving for
/// the other.
pub fn segment_distance(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> f64 {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(p0, q0);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return norm(&r);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let cp: Vec<f64> = p0.iter().zip(&d1).map(|(p, d)| p + s * d).collect();
    let cq: Vec<f64> = q0.iter().zip(&d2).map(|(q, d)| q + t * d).collect();
    dist(&cp, &cq)
}

/// A closed axis-aligned box in `R^D`. Axes with `lo == hi` are fixed, so a
/// box can represent a lower-dimensional face of a cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn ambient_dim(&self) -> usize {
        self.lo.len()
    }

    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.lo.len()).filter(|&i| self.hi[i] > self.lo[i]).collect()
    }

    pub fn dim(&self) -> usize {
        self.free_axes().len()
    }

    /// Volume in the box's own dimension (product of the free side lengths).
    pub fn volume(&self) -> f64 {
        self.free_axes()
            .iter()
            .map(|&i| self.hi[i] - self.lo[i])
            .product()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    /// Insert a fixed coordinate `value` at position `axis`, lifting the box
    /// into one more ambient dimension.
    pub fn lift(&self, axis: usize, value: f64) -> AxisBox {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo.insert(axis, value);
        hi.insert(axis, value);
        AxisBox { lo, hi }
    }

    pub fn scaled(&self, factor: f64) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().map(|v| v * factor).collect(),
            hi: self.hi.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Volume of the unit sphere `S^k` embedded in `R^{k+1}`.
pub fn sphere_volume(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}
