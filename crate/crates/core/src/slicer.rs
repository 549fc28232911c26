//! Cross-sections of axis-aligned boxes by a few affine hyperplanes.
//!
//! A box with `f` free axes cut by `q - 1` hyperplanes in general position is
//! a convex polytope of dimension `m = f - (q - 1)`. Its vertices are found by
//! pinning `m` free coordinates at box bounds and solving for the rest; its
//! volume by recursive triangulation over the facets inherited from the box.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dot, AxisBox};
use crate::rng;

pub const FEASIBILITY_TOL: f64 = 1e-10;
pub const DEDUP_TOL: f64 = 1e-10;
pub const CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SliceError {
    #[error("hyperplane system is near-degenerate on this box (condition number {0:.3e})")]
    Degenerate(f64),
    #[error("{equations} equations on a box with only {free} free axes")]
    Overdetermined { equations: usize, free: usize },
    #[error("normal has {got} coordinates, box lives in dimension {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("affine hull has dimension {found}, expected at most {expected}")]
    InconsistentHull { expected: usize, found: usize },
    #[error("Monte-Carlo slicing needs at least 1000 samples and a positive thickness")]
    BadSampling,
}

/// `{x : v_k . x = c_k}` for `k = 1..q-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneSystem {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl HyperplaneSystem {
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Self {
        debug_assert_eq!(normals.len(), offsets.len());
        Self { normals, offsets }
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn with_offsets(&self, offsets: Vec<f64>) -> Self {
        Self {
            normals: self.normals.clone(),
            offsets,
        }
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(v, c)| (dot(v, x) - c).abs())
            .fold(0.0, f64::max)
    }

    /// Rows of the normals restricted to `axes`.
    fn restricted(&self, axes: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), axes.len(), |k, a| self.normals[k][axes[a]])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicePolytope {
    pub vertices: Vec<Vec<f64>>,
    /// Intrinsic dimension `m`.
    pub dim: usize,
    pub carrier: Option<usize>,
    /// Bit `2a` (`2a + 1`) is set when the vertex sits on the lower (upper)
    /// bound of the `a`-th free axis of the carrier box.
    pub tight: Vec<u64>,
}

impl SlicePolytope {
    pub fn cardinality(&self) -> usize {
        self.vertices.len()
    }

    /// Largest violation of the box bounds or hyperplane equations.
    pub fn max_violation(&self, bx: &AxisBox, sys: &HyperplaneSystem) -> f64 {
        self.vertices
            .iter()
            .map(|x| {
                let outside = x
                    .iter()
                    .zip(bx.lo.iter().zip(&bx.hi))
                    .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
                    .fold(0.0, f64::max);
                outside.max(sys.residual(x))
            })
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> SlicePolytope {
        SlicePolytope {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|x| x * factor).collect())
                .collect(),
            ..self.clone()
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Vertices of `box ∩ {v_k . x = c_k}`. `Ok(None)` when the section is empty.
pub fn slice_box(bx: &AxisBox, sys: &HyperplaneSystem) -> Result<Option<SlicePolytope>, SliceError> {
    let dim = bx.ambient_dim();
    if let Some(v) = sys.normals.iter().find(|v| v.len() != dim) {
        return Err(SliceError::Dimension {
            got: v.len(),
            expected: dim,
        });
    }
    let free = bx.free_axes();
    let eqs = sys.len();
    if eqs > free.len() {
        return Err(SliceError::Overdetermined {
            equations: eqs,
            free: free.len(),
        });
    }
    let m = free.len() - eqs;
    if eqs > 0 {
        let cond = condition_number(&sys.restricted(&free));
        if cond > CONDITION_LIMIT {
            return Err(SliceError::Degenerate(cond));
        }
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for pinned in combinations(free.len(), m) {
        let solved: Vec<usize> = (0..free.len()).filter(|a| !pinned.contains(a)).collect();
        let solved_axes: Vec<usize> = solved.iter().map(|&a| free[a]).collect();
        let a_mat = sys.restricted(&solved_axes);
        if eqs > 0 && condition_number(&a_mat) > 1e12 {
            continue;
        }
        let lu = (eqs > 0).then(|| a_mat.lu());
        for bits in 0..1u64 << m {
            let mut x = bx.lo.clone();
            for (t, &a) in pinned.iter().enumerate() {
                let ax = free[a];
                x[ax] = if (bits >> t) & 1 == 1 { bx.hi[ax] } else { bx.lo[ax] };
            }
            for &ax in &solved_axes {
                x[ax] = 0.0;
            }
            let rhs = DVector::from_fn(eqs, |k, _| sys.offsets[k] - dot(&sys.normals[k], &x));
            if let Some(lu) = &lu {
                let Some(sol) = lu.solve(&rhs) else { continue };
                let mut ok = true;
                for (t, &ax) in solved_axes.iter().enumerate() {
                    let v = sol[t];
                    if v < bx.lo[ax] - FEASIBILITY_TOL || v > bx.hi[ax] + FEASIBILITY_TOL {
                        ok = false;
                        break;
                    }
                    x[ax] = v.clamp(bx.lo[ax], bx.hi[ax]);
                }
                if !ok {
                    continue;
                }
            }
            let dup = vertices.iter().any(|w| {
                w.iter()
                    .zip(&x)
                    .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
            });
            if !dup {
                vertices.push(x);
            }
        }
    }
    if vertices.is_empty() {
        return Ok(None);
    }
    let tight = vertices
        .iter()
        .map(|x| {
            let mut mask = 0u64;
            for (a, &ax) in free.iter().enumerate() {
                if (x[ax] - bx.lo[ax]).abs() <= FEASIBILITY_TOL {
                    mask |= 1 << (2 * a);
                }
                if (x[ax] - bx.hi[ax]).abs() <= FEASIBILITY_TOL {
                    mask |= 1 << (2 * a + 1);
                }
            }
            mask
        })
        .collect();
    Ok(Some(SlicePolytope {
        vertices,
        dim: m,
        carrier: None,
        tight,
    }))
}

fn affine_rank(points: &[&Vec<f64>], scale: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let d = points[0].len();
    let diffs = DMatrix::from_fn(points.len() - 1, d, |i, j| points[i + 1][j] - points[0][j]);
    let sv = diffs.svd(false, false).singular_values;
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    sv.iter().filter(|&&s| s > tol).count()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn simplex_volume(pts: &[&Vec<f64>]) -> f64 {
    let k = pts.len() - 1;
    let e: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let g = DMatrix::from_fn(k, k, |i, j| dot(&e[i], &e[j]));
    g.determinant().max(0.0).sqrt() / factorial(k)
}

struct Triangulator<'a> {
    poly: &'a SlicePolytope,
    scale: f64,
}

impl Triangulator<'_> {
    fn rank(&self, idx: &[usize]) -> usize {
        let pts: Vec<&Vec<f64>> = idx.iter().map(|&i| &self.poly.vertices[i]).collect();
        affine_rank(&pts, self.scale)
    }

    /// Simplices (as vertex index lists) covering the `k`-face `face`.
    fn run(&self, face: &[usize], k: usize) -> Vec<Vec<usize>> {
        let v = &self.poly.vertices;
        if k == 1 {
            let a = face[0];
            let (far, _) = face
                .iter()
                .map(|&i| (i, crate::geom::dist(&v[i], &v[a])))
                .fold((a, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let dir: Vec<f64> = v[far].iter().zip(&v[a]).map(|(x, y)| x - y).collect();
            let proj = |i: usize| dot(&dir, &v[i]);
            let lo = *face.iter().min_by(|&&i, &&j| proj(i).total_cmp(&proj(j))).unwrap();
            let hi = *face.iter().max_by(|&&i, &&j| proj(i).total_cmp(&proj(j))).unwrap();
            return vec![vec![lo, hi]];
        }
        let apex = face[0];
        let mut facets: BTreeSet<Vec<usize>> = BTreeSet::new();
        for bit in 0..64 {
            let sub: Vec<usize> = face
                .iter()
                .copied()
                .filter(|&i| (self.poly.tight[i] >> bit) & 1 == 1)
                .collect();
            if sub.len() >= k && !sub.contains(&apex) && self.rank(&sub) == k - 1 {
                facets.insert(sub);
            }
        }
        let mut out = Vec::new();
        for facet in facets {
            for s in self.run(&facet, k - 1) {
                let mut simplex = vec![apex];
                simplex.extend(s);
                out.push(simplex);
            }
        }
        out
    }
}

/// Exact `m`-volume of a section. Zero-dimensional sections report `0`
/// (use [`SlicePolytope::cardinality`] for the point count).
pub fn polytope_volume(poly: &SlicePolytope) -> Result<f64, SliceError> {
    let m = poly.dim;
    if m == 0 || poly.vertices.len() < 2 {
        return Ok(0.0);
    }
    let scale = poly
        .vertices
        .iter()
        .map(|v| crate::geom::dist(v, &poly.vertices[0]))
        .fold(0.0, f64::max);
    let tri = Triangulator { poly, scale };
    let all: Vec<usize> = (0..poly.vertices.len()).collect();
    let rank = tri.rank(&all);
    if rank > m {
        return Err(SliceError::InconsistentHull {
            expected: m,
            found: rank,
        });
    }
    if rank < m {
        return Ok(0.0);
    }
    Ok(tri
        .run(&all, m)
        .iter()
        .map(|s| simplex_volume(&s.iter().map(|&i| &poly.vertices[i]).collect::<Vec<_>>()))
        .sum())
}

/// Volume (and, for `m = 0`, point count) of `box ∩ hyperplanes`.
pub fn section_measure(bx: &AxisBox, sys: &HyperplaneSystem) -> Result<(f64, usize), SliceError> {
    match slice_box(bx, sys)? {
        None => Ok((0.0, 0)),
        Some(p) => Ok((polytope_volume(&p)?, p.cardinality())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
    pub zero_hits: bool,
}

/// Thick-slab Monte-Carlo estimate of the section volume.
///
/// The slab `|v_k . x - c_k| <= tau/2` inside the box has volume
/// `Vol(section) * tau^(q-1) / sqrt(det W W^T)` to first order, with `W` the
/// normals restricted to the free axes.
pub fn slice_volume_mc(
    bx: &AxisBox,
    sys: &HyperplaneSystem,
    tau: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, SliceError> {
    if samples < 1000 || !(tau > 0.0) {
        return Err(SliceError::BadSampling);
    }
    let free = bx.free_axes();
    let w = sys.restricted(&free);
    let jac = (&w * w.transpose()).determinant().max(0.0).sqrt();
    let hits: u64 = rng::chunks(samples)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut g = rng::stream(seed, chunk);
            let mut x = bx.lo.clone();
            let mut count = 0u64;
            for _ in 0..len {
                for &a in &free {
                    x[a] = bx.lo[a] + (bx.hi[a] - bx.lo[a]) * g.random::<f64>();
                }
                if sys
                    .normals
                    .iter()
                    .zip(&sys.offsets)
                    .all(|(v, c)| (dot(v, &x) - c).abs() <= tau / 2.0)
                {
                    count += 1;
                }
            }
            count
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    let factor = bx.volume() * jac / tau.powi(sys.len() as i32);
    Ok(McEstimate {
        estimate: factor * p,
        stderr: factor * (p * (1.0 - p) / n).sqrt(),
        hits,
        samples: samples as u64,
        zero_hits: hits == 0,
    })
}

/// The `2n` facets of `corner + side * [0,1]^n`.
pub fn cube_boundary_boxes(corner: &[f64], side: f64) -> Vec<AxisBox> {
    let n = corner.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for up in [0.0, 1.0] {
            let mut lo = corner.to_vec();
            let mut hi: Vec<f64> = corner.iter().map(|c| c + side).collect();
            lo[i] = corner[i] + up * side;
            hi[i] = lo[i];
            out.push(AxisBox::new(lo, hi));
        }
    }
    out
}

/// Total section of a union of boxes. For `m = 0`, points shared by several
/// boxes are counted once.
pub fn union_section(boxes: &[AxisBox], sys: &HyperplaneSystem) -> Result<(f64, usize), SliceError> {
    let mut vol = 0.0;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for bx in boxes {
        if let Some(p) = slice_box(bx, sys)? {
            if p.dim == 0 {
                for v in p.vertices {
                    if !points
                        .iter()
                        .any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= DEDUP_TOL))
                    {
                        points.push(v);
                    }
                }
            } else {
                vol += polytope_volume(&p)?;
            }
        }
    }
    Ok((vol, points.len()))
}

/// Certified upper bound on the section volume of the unit `∂I^n` sitting in
/// any face of `∂I^{n+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VmaxCertificate {
    /// Largest section volume observed on the grid (or point count if
    /// `n = q`).
    pub value: f64,
    /// Grid spacing per offset coordinate.
    pub resolution: Vec<f64>,
    /// Lipschitz padding added to `value`.
    pub padding: f64,
    /// `value + padding`.
    pub bound: f64,
    /// Face axis and offsets where `value` was attained.
    pub axis: usize,
    pub argmax: Vec<f64>,
    pub grid_points: usize,
}

fn drop_axis(v: &[f64], axis: usize) -> Vec<f64> {
    v.iter()
        .enumerate()
        .filter(|(i, _)| *i != axis)
        .map(|(_, x)| *x)
        .collect()
}

struct FaceSection {
    boxes: Vec<AxisBox>,
    normals: Vec<Vec<f64>>,
    points_only: bool,
}

impl FaceSection {
    fn eval(&self, c: &[f64]) -> Result<f64, SliceError> {
        let sys = HyperplaneSystem::new(self.normals.clone(), c.to_vec());
        let (vol, count) = union_section(&self.boxes, &sys)?;
        Ok(if self.points_only { count as f64 } else { vol })
    }

    fn range(&self, k: usize) -> (f64, f64) {
        let v = &self.normals[k];
        let lo: f64 = v.iter().map(|x| x.min(0.0)).sum();
        let hi: f64 = v.iter().map(|x| x.max(0.0)).sum();
        (lo, hi)
    }
}

/// Grid search with adaptive refinement and Lipschitz padding.
///
/// For one hyperplane the grid is augmented by every breakpoint (the values
/// of `v` at cube vertices) and refined tenfold around the best cells. The
/// padding is twice the largest observed difference quotient times half the
/// grid spacing, summed over offset axes.
pub fn max_cross_section_volume(
    n: usize,
    q: usize,
    vectors: &[Vec<f64>],
    resolution: usize,
) -> Result<VmaxCertificate, SliceError> {
    let res = resolution.max(8);
    let mut best: Option<VmaxCertificate> = None;
    for axis in 0..=n {
        let face = FaceSection {
            boxes: cube_boundary_boxes(&vec![0.0; n], 1.0),
            normals: vectors.iter().map(|v| drop_axis(v, axis)).collect(),
            points_only: n == q,
        };
        let cert = if q == 2 {
            scan_1d(&face, res)?
        } else {
            scan_2d(&face, res)?
        };
        let cert = VmaxCertificate { axis, ..cert };
        if best.as_ref().is_none_or(|b| cert.bound > b.bound) {
            best = Some(cert);
        }
    }
    Ok(best.expect("at least one face"))
}

fn scan_1d(face: &FaceSection, res: usize) -> Result<VmaxCertificate, SliceError> {
    let (lo, hi) = face.range(0);
    let h = (hi - lo) / res as f64;
    let grid: Vec<f64> = (0..=res)
        .map(|i| lo + (hi - lo) * i as f64 / res as f64)
        .collect();
    let vals = grid
        .par_iter()
        .map(|&c| face.eval(&[c]))
        .collect::<Result<Vec<f64>, _>>()?;
    let slope = vals
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0, f64::max);
    let mut value = f64::NEG_INFINITY;
    let mut arg = lo;
    let mut consider = |c: f64, v: f64| {
        if v > value {
            value = v;
            arg = c;
        }
    };
    for (c, v) in grid.iter().zip(&vals) {
        consider(*c, *v);
    }
    if !face.points_only {
        let mut breaks: Vec<f64> = (0..1u64 << face.normals[0].len())
            .map(|w| {
                face.normals[0]
                    .iter()
                    .enumerate()
                    .map(|(i, x)| if (w >> i) & 1 == 1 { *x } else { 0.0 })
                    .sum()
            })
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for c in breaks {
            consider(c, face.eval(&[c])?);
        }
    }
    // refine around the three best grid cells
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut fine_h = h;
    for &i in order.iter().take(3) {
        let centre = grid[i];
        fine_h = h / 10.0;
        for t in -10..=10 {
            let c = (centre + t as f64 * fine_h).clamp(lo, hi);
            consider(c, face.eval(&[c])?);
        }
    }
    let padding = if face.points_only { 0.0 } else { 2.0 * slope * h / 2.0 };
    debug_assert!(fine_h > 0.0);
    Ok(VmaxCertificate {
        value,
        resolution: vec![h],
        padding,
        bound: value + padding,
        axis: 0,
        argmax: vec![arg],
        grid_points: vals.len(),
    })
}

fn scan_2d(face: &FaceSection, res: usize) -> Result<VmaxCertificate, SliceError> {
    let k = face.normals.len();
    let ranges: Vec<(f64, f64)> = (0..k).map(|j| face.range(j)).collect();
    let steps: Vec<f64> = ranges.iter().map(|(l, h)| (h - l) / res as f64).collect();
    let total = (res + 1).pow(k as u32);
    let point = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..k)
            .map(|j| {
                let i = rem % (res + 1);
                rem /= res + 1;
                ranges[j].0 + steps[j] * i as f64
            })
            .collect()
    };
    let vals = (0..total)
        .into_par_iter()
        .map(|i| face.eval(&point(i)))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut padding = 0.0;
    for j in 0..k {
        let stride = (res + 1).pow(j as u32);
        let mut slope: f64 = 0.0;
        for i in 0..total {
            if (i / stride) % (res + 1) < res {
                slope = slope.max((vals[i + stride] - vals[i]).abs() / steps[j]);
            }
        }
        padding += 2.0 * slope * steps[j] / 2.0;
    }
    let (best, value) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let padding = if face.points_only { 0.0 } else { padding };
    Ok(VmaxCertificate {
        value,
        resolution: steps.clone(),
        padding,
        bound: value + padding,
        axis: 0,
        argmax: point(best),
        grid_points: total,
    })
}
