//! Closed subsets of `S^n` with membership and geodesic distance.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use crate::geom::{dot, norm};

fn angle(a: &[f64], b: &[f64]) -> f64 {
    // atan2 form is accurate near 0 and pi
    let c = dot(a, b);
    let s = {
        let cross2: f64 = a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()
            - c * c;
        cross2.max(0.0).sqrt()
    };
    s.atan2(c)
}

fn chord_to_angle(chord: f64) -> f64 {
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Continuous test functions on `S^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarMap {
    /// `(x_axis + 1) / 2`, the normalised height with image `[0, 1]`.
    Height { axis: usize },
    /// `((x_axis + 1) / 2)^3`.
    CubedHeight { axis: usize },
    /// `clamp(x_axis, lo, hi)`.
    ClampedHeight { axis: usize, lo: f64, hi: f64 },
    /// `max(x_axis + tilt x_tilt_axis, floor)`.
    TiltedFloor {
        axis: usize,
        tilt_axis: usize,
        tilt: f64,
        floor: f64,
    },
    /// `sum_i w_i exp(-|x - c_i|^2 / width^2)`.
    Bumps {
        centers: Vec<Vec<f64>>,
        weights: Vec<f64>,
        width: f64,
    },
}

impl ScalarMap {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarMap::Height { axis } => (x[*axis] + 1.0) / 2.0,
            ScalarMap::CubedHeight { axis } => ((x[*axis] + 1.0) / 2.0).powi(3),
            ScalarMap::ClampedHeight { axis, lo, hi } => x[*axis].clamp(*lo, *hi),
            ScalarMap::TiltedFloor {
                axis,
                tilt_axis,
                tilt,
                floor,
            } => (x[*axis] + tilt * x[*tilt_axis]).max(*floor),
            ScalarMap::Bumps {
                centers,
                weights,
                width,
            } => centers
                .iter()
                .zip(weights)
                .map(|(c, w)| {
                    let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    w * (-d2 / (width * width)).exp()
                })
                .sum(),
        }
    }

    /// A random bump function with `k` bumps on `S^n`.
    pub fn random_bumps(n: usize, k: usize, seed: u64) -> ScalarMap {
        use rand::Rng;
        let mut g = crate::rng::stream(seed, 0);
        let centers = (0..k).map(|_| crate::rng::unit_vector(&mut g, n + 1)).collect();
        let weights = (0..k).map(|_| g.random_range(-1.0..1.0)).collect();
        ScalarMap::Bumps {
            centers,
            weights,
            width: 0.8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelKind {
    /// `{f <= t}`
    Sublevel,
    /// `{f >= t}`
    Superlevel,
    /// `{f = t}`
    LevelSet,
}

/// Point cloud inside `f^{-1}(t)`, dense enough that every boundary point of
/// the sub- and superlevel sets lies within `resolution` of it.
pub struct Cloud {
    tree: KdTree,
    pub resolution: f64,
    pub points: usize,
    pub grid: usize,
}

impl std::fmt::Debug for Cloud {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cloud")
            .field("resolution", &self.resolution)
            .field("points", &self.points)
            .field("grid", &self.grid)
            .finish()
    }
}

/// Grid side needed for cloud resolution `res`.
pub fn grid_for_resolution(n: usize, res: f64) -> usize {
    ((n as f64).sqrt() / (res / 2.0).sin()).ceil() as usize
}

fn project(v: &[f64]) -> Vec<f64> {
    let nv = norm(v);
    v.iter().map(|x| x / nv).collect()
}

/// Sample `f - t` on the radially projected grid of every face of
/// `[-1, 1]^{n+1}` with `g` cells per side. Keep grid points where
/// `f = t` that touch a point where it does not, and bisect every grid edge
/// across which `f - t` changes sign.
pub fn level_cloud(n: usize, f: &ScalarMap, t: f64, g: usize) -> Cloud {
    use rayon::prelude::*;
    let d = n + 1;
    let side = g + 1;
    let per_face = side.pow(n as u32);
    let faces: Vec<Vec<Vec<f64>>> = (0..2 * d)
        .into_par_iter()
        .map(|face| {
            let axis = face / 2;
            let sign = if face % 2 == 1 { 1.0 } else { -1.0 };
            let at = |idx: usize| -> Vec<f64> {
                let mut rem = idx;
                let mut v = vec![0.0; d];
                for (a, slot) in v.iter_mut().enumerate() {
                    if a == axis {
                        *slot = sign;
                    } else {
                        *slot = -1.0 + 2.0 * (rem % side) as f64 / g as f64;
                        rem /= side;
                    }
                }
                v
            };
            let sgn: Vec<i8> = (0..per_face)
                .map(|i| {
                    let v = f.eval(&project(&at(i))) - t;
                    if v > 0.0 {
                        1
                    } else if v < 0.0 {
                        -1
                    } else {
                        0
                    }
                })
                .collect();
            let mut out = Vec::new();
            for i in 0..per_face {
                let mut stride = 1;
                let mut touches_other = false;
                for _ in 0..n {
                    let coord = (i / stride) % side;
                    for j in [
                        (coord + 1 < side).then(|| i + stride),
                        (coord > 0).then(|| i - stride),
                    ]
                    .into_iter()
                    .flatten()
                    {
                        if sgn[j] != 0 {
                            touches_other = true;
                        }
                        if j > i && sgn[i] * sgn[j] < 0 {
                            let (a, b) = (at(i), at(j));
                            let (mut lo, mut hi) = (0.0, 1.0);
                            let val = |s: f64| {
                                let p: Vec<f64> =
                                    a.iter().zip(&b).map(|(x, y)| x + s * (y - x)).collect();
                                f.eval(&project(&p)) - t
                            };
                            let lo_sign = sgn[i] as f64;
                            for _ in 0..40 {
                                let mid = 0.5 * (lo + hi);
                                if val(mid) * lo_sign > 0.0 {
                                    lo = mid;
                                } else {
                                    hi = mid;
                                }
                            }
                            let s = 0.5 * (lo + hi);
                            let p: Vec<f64> =
                                a.iter().zip(&b).map(|(x, y)| x + s * (y - x)).collect();
                            out.push(project(&p));
                        }
                    }
                    stride *= side;
                }
                if sgn[i] == 0 && touches_other {
                    out.push(project(&at(i)));
                }
            }
            out
        })
        .collect();
    let pts: Vec<Vec<f64>> = faces.into_iter().flatten().collect();
    Cloud {
        tree: KdTree::new(d, &pts),
        resolution: 2.0 * ((n as f64).sqrt() / g as f64).min(1.0).asin(),
        points: pts.len(),
        grid: g,
    }
}

/// A closed subset of `S^n`.
#[derive(Clone, Debug)]
pub enum RegionOracle {
    Whole,
    /// Geodesic ball.
    Cap { center: Vec<f64>, radius: f64 },
    /// Great subsphere `S^n ∩ span(basis)`, `basis` orthonormal.
    Subsphere { basis: Vec<Vec<f64>> },
    /// `{x : x_axis = cos(theta)}`, a latitude sphere of polar angle `theta`.
    Latitude { axis: usize, theta: f64 },
    Points(Vec<Vec<f64>>),
    Union(Vec<RegionOracle>),
    /// Sub-, super- or level set of a scalar map, with distances taken from
    /// a point cloud of the level set.
    Level {
        kind: LevelKind,
        map: ScalarMap,
        t: f64,
        cloud: Arc<Cloud>,
    },
}

impl RegionOracle {
    /// Great `S^k` through the first `k + 1` coordinate axes of `R^{n+1}`.
    pub fn coordinate_subsphere(n: usize, k: usize) -> RegionOracle {
        let basis = (0..=k)
            .map(|i| (0..=n).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        RegionOracle::Subsphere { basis }
    }

    /// Closed hemisphere `{x . u >= 0}`.
    pub fn hemisphere(u: Vec<f64>) -> RegionOracle {
        RegionOracle::Cap {
            center: u,
            radius: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn level(n: usize, kind: LevelKind, map: ScalarMap, t: f64, grid: usize) -> RegionOracle {
        let cloud = Arc::new(level_cloud(n, &map, t, grid));
        RegionOracle::Level {
            kind,
            map,
            t,
            cloud,
        }
    }

    /// Same map and level, other kind, sharing the cloud.
    pub fn with_kind(&self, kind: LevelKind) -> Option<RegionOracle> {
        match self {
            RegionOracle::Level { map, t, cloud, .. } => Some(RegionOracle::Level {
                kind,
                map: map.clone(),
                t: *t,
                cloud: cloud.clone(),
            }),
            _ => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            RegionOracle::Whole => true,
            RegionOracle::Cap { center, radius } => angle(center, x) <= *radius,
            RegionOracle::Subsphere { .. } | RegionOracle::Latitude { .. } => {
                self.distance(x) == 0.0
            }
            RegionOracle::Points(ps) => ps.iter().any(|p| p.as_slice() == x),
            RegionOracle::Union(rs) => rs.iter().any(|r| r.contains(x)),
            RegionOracle::Level { kind, map, t, .. } => {
                let v = map.eval(x);
                match kind {
                    LevelKind::Sublevel => v <= *t,
                    LevelKind::Superlevel => v >= *t,
                    LevelKind::LevelSet => v == *t,
                }
            }
        }
    }

    /// Geodesic distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            RegionOracle::Whole => 0.0,
            RegionOracle::Cap { center, radius } => (angle(center, x) - radius).max(0.0),
            RegionOracle::Subsphere { basis } => {
                let p2: f64 = basis.iter().map(|b| dot(b, x).powi(2)).sum();
                let p = p2.sqrt().min(1.0);
                let rest = (1.0 - p2).max(0.0).sqrt();
                rest.atan2(p)
            }
            RegionOracle::Latitude { axis, theta } => {
                let polar = x[*axis].clamp(-1.0, 1.0).acos();
                (polar - theta).abs()
            }
            RegionOracle::Points(ps) => ps.iter().map(|p| angle(p, x)).fold(f64::INFINITY, f64::min),
            RegionOracle::Union(rs) => rs.iter().map(|r| r.distance(x)).fold(f64::INFINITY, f64::min),
            RegionOracle::Level { cloud, .. } => {
                if self.contains(x) {
                    0.0
                } else {
                    chord_to_angle(cloud.tree.nearest(x))
                }
            }
        }
    }

    /// Distance resolution of the oracle (`0` for analytic regions).
    pub fn resolution(&self) -> f64 {
        match self {
            RegionOracle::Level { cloud, .. } => cloud.resolution,
            RegionOracle::Union(rs) => rs.iter().map(|r| r.resolution()).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// One-line description for reports.
    pub fn describe(&self) -> String {
        match self {
            RegionOracle::Whole => "whole sphere".to_string(),
            RegionOracle::Cap { radius, .. } => format!("cap of radius {radius:.6}"),
            RegionOracle::Subsphere { basis } => format!("great S^{}", basis.len() - 1),
            RegionOracle::Latitude { axis, theta } => {
                format!("latitude sphere x_{axis} = cos({theta:.6})")
            }
            RegionOracle::Points(ps) => format!("{} points", ps.len()),
            RegionOracle::Union(rs) => {
                let parts: Vec<String> = rs.iter().map(|r| r.describe()).collect();
                format!("union of [{}]", parts.join(", "))
            }
            RegionOracle::Level { kind, t, .. } => format!("{kind:?} of test map at t = {t:.6}"),
        }
    }
}
