//! The assembled map `f = phi o (t x p)` on `∂I^{n+1}` (and on `S^n` through
//! radial projection).
//!
//! Every face of `∂I^{n+1}` carries a copy of `t_{n,r,delta}`; the copies are
//! glued at their roots, which absorb the whole `(n-1)`-skeleton of the
//! cube. `p` is a linear map to `R^{q-1}` transverse to every pair of
//! coordinate directions, and `phi` thickens a layered embedding of the glued
//! tree.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dot, norm, AxisBox};
use crate::slicer::{self, HyperplaneSystem, SliceError, VmaxCertificate};
use crate::tree::{EmbeddingDocument, EmbeddingSpec, LayoutParams, Tree, TreeError, TreePoint};
use crate::tree_map::{fiber_faces, FiberDescriptor, TreeMapError, TreeMapSpec};

pub const BUNDLE_SCHEMA: &str = "fibermap.bundle/1";

/// Projections whose transversality margin is at or below this are treated
/// as violating the independence condition.
pub const MARGIN_TOL: f64 = 1e-9;

const MAX_RESAMPLES: u32 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum SphereMapError {
    #[error("need n > q > 1, got n = {n}, q = {q}")]
    BadRange { n: usize, q: usize },
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("vector is not on the unit sphere (norm {0})")]
    NotOnSphere(f64),
    #[error("point is not on the boundary of the unit cube")]
    NotOnCube,
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { got: usize, expected: usize },
    #[error("projection vectors violate transversality (margin {margin:.3e})")]
    NotTransverse { margin: f64 },
    #[error("no transverse projection found after {attempts} samples")]
    ProjectionFailed { attempts: u32 },
    #[error("bundle does not match a rebuild from its own parameters: {0}")]
    BundleMismatch(String),
    #[error(transparent)]
    TreeMap(#[from] TreeMapError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

/// A point of `∂I^{n+1}` in the chart of face `2i + side`: the local
/// coordinates are the ambient ones with axis `i` removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub face: usize,
    pub local: Vec<f64>,
}

impl BoundaryPoint {
    pub fn new(face: usize, local: Vec<f64>) -> Result<Self, SphereMapError> {
        let n = local.len();
        if face >= 2 * (n + 1) {
            return Err(SphereMapError::NotOnCube);
        }
        if local.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(SphereMapError::NotOnCube);
        }
        Ok(Self { face, local })
    }

    pub fn axis(&self) -> usize {
        self.face / 2
    }

    pub fn side(&self) -> f64 {
        (self.face % 2) as f64
    }

    pub fn ambient(&self) -> Vec<f64> {
        let mut y = self.local.clone();
        y.insert(self.axis(), self.side());
        y
    }

    /// Chart of the lowest-numbered face containing `y`.
    pub fn from_ambient(y: &[f64]) -> Result<Self, SphereMapError> {
        if y.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(SphereMapError::NotOnCube);
        }
        for (i, &v) in y.iter().enumerate() {
            for side in [0.0, 1.0] {
                if v == side {
                    let mut local = y.to_vec();
                    local.remove(i);
                    return Ok(Self {
                        face: 2 * i + side as usize,
                        local,
                    });
                }
            }
        }
        Err(SphereMapError::NotOnCube)
    }

    /// Charts of every face containing the ambient point.
    pub fn all_charts(&self) -> Vec<BoundaryPoint> {
        let y = self.ambient();
        let mut out = Vec::new();
        for (i, &v) in y.iter().enumerate() {
            if v == 0.0 || v == 1.0 {
                let mut local = y.clone();
                local.remove(i);
                out.push(BoundaryPoint {
                    face: 2 * i + v as usize,
                    local,
                });
            }
        }
        out
    }
}

/// `psi(x) = c + x / (2 max |x_i|)` with `c` the cube centre.
pub fn sphere_to_cube(x: &[f64]) -> Result<BoundaryPoint, SphereMapError> {
    let nx = norm(x);
    if (nx - 1.0).abs() > 1e-12 {
        return Err(SphereMapError::NotOnSphere(nx));
    }
    let (imax, m) = x
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    let lambda = 0.5 / m;
    let mut y: Vec<f64> = x.iter().map(|v| (0.5 + lambda * v).clamp(0.0, 1.0)).collect();
    y[imax] = if x[imax] > 0.0 { 1.0 } else { 0.0 };
    let mut local = y;
    local.remove(imax);
    Ok(BoundaryPoint {
        face: 2 * imax + usize::from(x[imax] > 0.0),
        local,
    })
}

pub fn cube_to_sphere(p: &BoundaryPoint) -> Vec<f64> {
    let y: Vec<f64> = p.ambient().iter().map(|v| v - 0.5).collect();
    let n = norm(&y);
    y.into_iter().map(|v| v / n).collect()
}

/// The linear map `p(x) = (v_1 . x, ..., v_{q-1} . x)` and a radius `M` with
/// `p(∂I^{n+1}) ⊆ B(M)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub vectors: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub radius: f64,
    /// Samples rejected before `vectors` was accepted.
    pub resamples: u32,
}

impl ProjectionSpec {
    /// Validate injected vectors in `R^{n+1}`.
    pub fn from_vectors(n: usize, vectors: Vec<Vec<f64>>) -> Result<Self, SphereMapError> {
        if let Some(v) = vectors.iter().find(|v| v.len() != n + 1) {
            return Err(SphereMapError::Dimension {
                got: v.len(),
                expected: n + 1,
            });
        }
        let margin = margin_of(&vectors);
        if !(margin > MARGIN_TOL) {
            return Err(SphereMapError::NotTransverse { margin });
        }
        Ok(Self {
            radius: vertex_radius(&vectors),
            vectors,
            resamples: 0,
        })
    }

    pub fn q(&self) -> usize {
        self.vectors.len() + 1
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| dot(v, x)).collect()
    }

    pub fn transversality_margin(&self) -> f64 {
        margin_of(&self.vectors)
    }
}

/// Smallest singular value of `[e_i e_j v_1/|v_1| ... ]`, minimised over
/// pairs `i < j`.
fn margin_of(vectors: &[Vec<f64>]) -> f64 {
    let Some(d) = vectors.first().map(Vec::len) else {
        return 1.0;
    };
    let unit: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let nv = norm(v);
            v.iter().map(|x| if nv > 0.0 { x / nv } else { 0.0 }).collect()
        })
        .collect();
    let cols = vectors.len() + 2;
    if cols > d {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..d {
        for j in i + 1..d {
            let m = DMatrix::from_fn(d, cols, |row, col| match col {
                0 => f64::from(u8::from(row == i)),
                1 => f64::from(u8::from(row == j)),
                k => unit[k - 2][row],
            });
            let sv = m.svd(false, false).singular_values;
            best = best.min(sv.iter().cloned().fold(f64::INFINITY, f64::min));
        }
    }
    best
}

/// `max |p(w)|` over the vertices `w` of `I^{n+1}`.
fn vertex_radius(vectors: &[Vec<f64>]) -> f64 {
    let d = vectors.first().map_or(0, Vec::len);
    (0..1u64 << d)
        .map(|w| {
            let x: Vec<f64> = (0..d).map(|i| ((w >> i) & 1) as f64).collect();
            norm(&vectors.iter().map(|v| dot(v, &x)).collect::<Vec<_>>())
        })
        .fold(0.0, f64::max)
}

pub fn build_projection(n: usize, q: usize, seed: u64) -> Result<ProjectionSpec, SphereMapError> {
    if !(n > q && q > 1) {
        return Err(SphereMapError::BadRange { n, q });
    }
    let mut g = crate::rng::stream(seed, 0);
    for attempt in 0..MAX_RESAMPLES {
        let vectors: Vec<Vec<f64>> = (0..q - 1)
            .map(|_| (0..=n).map(|_| StandardNormal.sample(&mut g)).collect())
            .collect();
        if margin_of(&vectors) > MARGIN_TOL {
            return Ok(ProjectionSpec {
                radius: vertex_radius(&vectors),
                vectors,
                resamples: attempt,
            });
        }
    }
    Err(SphereMapError::ProjectionFailed {
        attempts: MAX_RESAMPLES,
    })
}

pub fn transversality_margin(spec: &ProjectionSpec) -> f64 {
    spec.transversality_margin()
}

/// Default offset-grid resolution for the `V_max` search.
pub fn default_resolution(q: usize) -> usize {
    if q == 2 {
        512
    } else {
        48
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub r: u32,
    pub delta: f64,
    pub v_max: VmaxCertificate,
}

/// `delta = eps / 4(n+1)`; `r` is the least depth with
/// `V_max 2^{-r(n-q)} <= eps / 2^n`.
pub fn choose_parameters(
    n: usize,
    q: usize,
    epsilon: f64,
    proj: &ProjectionSpec,
) -> Result<Parameters, SphereMapError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SphereMapError::BadEpsilon(epsilon));
    }
    let v_max = slicer::max_cross_section_volume(n, q, &proj.vectors, default_resolution(q))?;
    Ok(Parameters {
        r: depth_for(n, q, epsilon, v_max.bound),
        delta: epsilon / (4.0 * (n as f64 + 1.0)),
        v_max,
    })
}

fn depth_for(n: usize, q: usize, epsilon: f64, bound: f64) -> u32 {
    let target = epsilon / 2f64.powi(n as i32);
    let mut r = 0u32;
    while bound * 2f64.powi(-((r as usize * (n - q)) as i32)) > target {
        r += 1;
    }
    r
}

/// One point of a `phi`-fiber: a tree point, the offset (which equals the
/// value of `p` on the corresponding piece), the face it belongs to (`None`
/// for the root, whose fiber is the `(n-1)`-skeleton of `I^{n+1}`) and the
/// face-local tree-map fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberComponent {
    pub point: TreePoint,
    pub offset: Vec<f64>,
    pub face: Option<usize>,
    pub descriptor: FiberDescriptor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallFiberMap {
    n: usize,
    q: usize,
    epsilon: f64,
    seed: u64,
    params: Parameters,
    forced_depth: bool,
    projection: ProjectionSpec,
    tree_map: TreeMapSpec,
    tree: Tree,
    embedding: EmbeddingSpec,
}

pub fn build_small_fiber_map(
    n: usize,
    q: usize,
    epsilon: f64,
    seed: u64,
) -> Result<SmallFiberMap, SphereMapError> {
    SmallFiberMap::build(n, q, epsilon, seed, None)
}

pub fn eval_f(map: &SmallFiberMap, x: &BoundaryPoint) -> Result<Vec<f64>, SphereMapError> {
    map.eval(x)
}

pub fn fiber_of_f(map: &SmallFiberMap, y: &[f64]) -> Vec<FiberComponent> {
    map.fiber(y)
}

impl SmallFiberMap {
    /// Build with the chosen depth, or with `depth` when given.
    pub fn build(
        n: usize,
        q: usize,
        epsilon: f64,
        seed: u64,
        depth: Option<u32>,
    ) -> Result<Self, SphereMapError> {
        let projection = build_projection(n, q, seed)?;
        Self::with_projection(n, epsilon, seed, projection, depth)
    }

    pub fn with_projection(
        n: usize,
        epsilon: f64,
        seed: u64,
        projection: ProjectionSpec,
        depth: Option<u32>,
    ) -> Result<Self, SphereMapError> {
        let q = projection.q();
        if !(n > q && q > 1) {
            return Err(SphereMapError::BadRange { n, q });
        }
        let mut params = choose_parameters(n, q, epsilon, &projection)?;
        if let Some(r) = depth {
            params.r = r;
        }
        let tree_map = TreeMapSpec::new(n as u32, params.r, params.delta)?;
        let copies = vec![tree_map.tree().clone(); 2 * (n + 1)];
        let tree = Tree::glue(&copies)?;
        let embedding = EmbeddingSpec::new(
            tree.clone(),
            q,
            LayoutParams {
                radius: projection.radius,
            },
        )?;
        Ok(Self {
            n,
            q,
            epsilon,
            seed,
            forced_depth: depth.is_some(),
            params,
            projection,
            tree_map,
            tree,
            embedding,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn r(&self) -> u32 {
        self.params.r
    }

    pub fn delta(&self) -> f64 {
        self.params.delta
    }

    pub fn parameters(&self) -> &Parameters {
        &self.params
    }

    pub fn projection(&self) -> &ProjectionSpec {
        &self.projection
    }

    pub fn tree_map(&self) -> &TreeMapSpec {
        &self.tree_map
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn embedding(&self) -> &EmbeddingSpec {
        &self.embedding
    }

    pub fn max_degree(&self) -> u64 {
        self.tree.max_degree()
    }

    /// Upper bound on one component's section volume: cube boundaries of
    /// side at most 1 give `V`, skeleta (`2^n` cubes of side at most 1/2)
    /// give `2^q V`, and the root fiber (`n + 1` copies of `∂I^n`) gives
    /// `(n + 1) V`, with `V` the certified `V_max` bound.
    pub fn component_bound(&self) -> f64 {
        let k = 2f64.powi(self.q as i32).max(self.n as f64 + 1.0);
        k * self.params.v_max.bound
    }

    /// `max_degree` components of at most [`component_bound`] each.
    pub fn certified_fiber_bound(&self) -> f64 {
        self.max_degree() as f64 * self.component_bound()
    }

    pub fn tree_point(&self, x: &BoundaryPoint) -> Result<TreePoint, SphereMapError> {
        if x.local.len() != self.n {
            return Err(SphereMapError::Dimension {
                got: x.local.len(),
                expected: self.n,
            });
        }
        let coord = self.tree_map.eval_coord(&x.local)?;
        if coord.path.is_empty() && coord.s == 0.0 {
            return Ok(self.tree.point_at_node(self.tree.root()));
        }
        Ok(self.tree_map.point_of(x.face, &self.tree, &coord))
    }

    pub fn eval(&self, x: &BoundaryPoint) -> Result<Vec<f64>, SphereMapError> {
        let p = self.tree_point(x)?;
        let offset = self.projection.apply(&x.ambient());
        Ok(self.embedding.thicken(p, &offset)?)
    }

    pub fn eval_sphere(&self, x: &[f64]) -> Result<Vec<f64>, SphereMapError> {
        if x.len() != self.n + 1 {
            return Err(SphereMapError::Dimension {
                got: x.len(),
                expected: self.n + 1,
            });
        }
        self.eval(&sphere_to_cube(x)?)
    }

    pub fn fiber(&self, y: &[f64]) -> Vec<FiberComponent> {
        self.embedding
            .preimages(y)
            .into_iter()
            .map(|(point, offset)| {
                let (branch, coord) = TreeMapSpec::coord_of(&self.tree, point);
                let root = coord.path.is_empty() && coord.s == 0.0;
                FiberComponent {
                    point,
                    offset,
                    face: (!root).then_some(branch),
                    descriptor: self.tree_map.fiber_of_coord(&coord),
                }
            })
            .collect()
    }

    /// Boxes in `R^{n+1}` making up the `t`-fiber of a component.
    pub fn component_boxes(&self, c: &FiberComponent) -> Vec<AxisBox> {
        match c.face {
            Some(face) => {
                let faces = fiber_faces(&c.descriptor);
                faces
                    .boxes
                    .iter()
                    .map(|b| b.lift(face / 2, (face % 2) as f64))
                    .collect()
            }
            None => skeleton_of_cube(self.n + 1),
        }
    }

    /// Hyperplanes `v_k . x = offset_k` of a component.
    pub fn component_system(&self, c: &FiberComponent) -> HyperplaneSystem {
        HyperplaneSystem::new(self.projection.vectors.clone(), c.offset.clone())
    }

    /// Whether the sliced fiber of `c` contains `x` within `tol`.
    pub fn component_contains(&self, c: &FiberComponent, x: &BoundaryPoint, tol: f64) -> bool {
        let y = x.ambient();
        let sys = self.component_system(c);
        if sys.residual(&y) > tol {
            return false;
        }
        if c.face.is_some() && c.descriptor.kind == crate::tree_map::FiberKind::SinglePoint {
            let mut pt = c.descriptor.corner();
            let face = c.face.unwrap_or(0);
            pt.insert(face / 2, (face % 2) as f64);
            return crate::geom::dist(&pt, &y) <= tol;
        }
        self.component_boxes(c).iter().any(|b| b.contains(&y, tol))
    }

    pub fn to_bundle(&self) -> MapBundle {
        MapBundle {
            schema: BUNDLE_SCHEMA.to_string(),
            n: self.n,
            q: self.q,
            epsilon: self.epsilon,
            seed: self.seed,
            r: self.params.r,
            r_forced: self.forced_depth,
            delta: self.params.delta,
            v: self.projection.vectors.clone(),
            radius: self.projection.radius,
            d: self.embedding.d(),
            transversality_margin: self.projection.transversality_margin(),
            projection_resamples: self.projection.resamples,
            v_max: self.params.v_max.clone(),
            tree: TreeSummary {
                branches: self.tree.branches().len(),
                branch_n: self.n as u32,
                branch_depth: self.params.r,
                edge_count: self.tree.edge_count(),
                node_count: self.tree.node_count(),
                max_degree: self.tree.max_degree(),
                root: 0,
            },
            embedding: self.embedding.to_document(),
        }
    }

    /// Rebuild from a bundle's parameters and check that the result matches
    /// the stored derived quantities exactly.
    pub fn from_bundle(b: &MapBundle) -> Result<Self, SphereMapError> {
        let map = Self::build(b.n, b.q, b.epsilon, b.seed, b.r_forced.then_some(b.r))?;
        let rebuilt = map.to_bundle();
        if rebuilt != *b {
            return Err(SphereMapError::BundleMismatch(
                "derived fields differ from a fresh build".to_string(),
            ));
        }
        Ok(map)
    }
}

/// Codimension-two faces of `[0,1]^d`: every pair of fixed axes at every
/// pair of bounds.
pub fn skeleton_of_cube(d: usize) -> Vec<AxisBox> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                let mut lo = vec![0.0; d];
                let mut hi = vec![1.0; d];
                lo[i] = a;
                hi[i] = a;
                lo[j] = b;
                hi[j] = b;
                out.push(AxisBox::new(lo, hi));
            }
        }
    }
    out
}

/// Total `(n-q)`-volume of a fiber of `f`, with the number of boxes whose
/// slicing was flagged as degenerate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberVolume {
    pub volume: f64,
    pub components: usize,
    pub degenerate_boxes: usize,
}

pub fn fiber_total_volume(map: &SmallFiberMap, components: &[FiberComponent]) -> FiberVolume {
    let mut volume = 0.0;
    let mut degenerate = 0;
    for c in components {
        let sys = map.component_system(c);
        for b in map.component_boxes(c) {
            match slicer::section_measure(&b, &sys) {
                Ok((v, _)) => volume += v,
                Err(_) => degenerate += 1,
            }
        }
    }
    FiberVolume {
        volume,
        components: components.len(),
        degenerate_boxes: degenerate,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub branches: usize,
    pub branch_n: u32,
    pub branch_depth: u32,
    pub edge_count: u64,
    pub node_count: u64,
    pub max_degree: u64,
    pub root: u64,
}

/// JSON bundle. The tree is recorded by its recipe (`branches` copies of
/// `T_{branch_n, branch_depth}`, branch `i` belonging to face `i`); node
/// positions are included for small trees only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapBundle {
    pub schema: String,
    pub n: usize,
    pub q: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub r: u32,
    pub r_forced: bool,
    pub delta: f64,
    pub v: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub radius: f64,
    pub d: f64,
    pub transversality_margin: f64,
    pub projection_resamples: u32,
    pub v_max: VmaxCertificate,
    pub tree: TreeSummary,
    pub embedding: EmbeddingDocument,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_axes_and_vertices() {
        let p = sphere_to_cube(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.face, 1);
        assert_eq!(p.local, vec![0.5, 0.5]);
        let s = 1.0 / 3f64.sqrt();
        let v = sphere_to_cube(&[s, s, s]).unwrap();
        assert!(v.ambient().iter().all(|&c| c == 1.0));
        assert!(sphere_to_cube(&[0.0, 0.0, 0.0]).is_err());
        assert!(sphere_to_cube(&[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn charts_agree() {
        let p = BoundaryPoint::new(0, vec![1.0, 0.3]).unwrap();
        let charts = p.all_charts();
        assert_eq!(charts.len(), 2);
        for c in &charts {
            assert_eq!(c.ambient(), p.ambient());
        }
        assert_eq!(BoundaryPoint::from_ambient(&[0.0, 1.0, 0.3]).unwrap().face, 0);
        assert!(BoundaryPoint::from_ambient(&[0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn injected_projections() {
        let ok = ProjectionSpec::from_vectors(3, vec![vec![1.0; 4]]).unwrap();
        assert_eq!(ok.radius, 4.0);
        let bad = ProjectionSpec::from_vectors(3, vec![vec![1.0, 0.0, 0.0, 0.0]]);
        assert!(matches!(bad, Err(SphereMapError::NotTransverse { .. })));
        assert_eq!(margin_of(&[vec![1.0, 0.0, 0.0, 0.0]]), 0.0);
    }

    #[test]
    fn margin_matches_gram_eigenvalues() {
        // for one vector the Gram matrix of (e_i, e_j, u) has eigenvalues
        // 1 and 1 +- |(u_i, u_j)|
        let v = vec![0.5, 0.5, 0.5, 0.5];
        let expected = (1.0 - (0.25f64 + 0.25).sqrt()).sqrt();
        assert!((margin_of(&[v]) - expected).abs() < 1e-12);
    }

    #[test]
    fn parameter_choice() {
        let proj = ProjectionSpec::from_vectors(3, vec![vec![1.0; 4]]).unwrap();
        let p = choose_parameters(3, 2, 0.1, &proj).unwrap();
        assert_eq!(p.delta, 0.1 / 16.0);
        assert!(p.v_max.bound * 2f64.powi(-(p.r as i32)) <= 0.1 / 8.0);
        assert!(p.v_max.bound * 2f64.powi(-(p.r as i32 - 1)) > 0.1 / 8.0);
        assert_eq!(depth_for(3, 2, 0.5, 0.01), 0);
    }

    #[test]
    fn cube_skeleton_count() {
        assert_eq!(skeleton_of_cube(4).len(), 24);
    }

    #[test]
    fn small_map_round_trip() {
        let map = SmallFiberMap::build(3, 2, 0.1, 0, Some(2)).unwrap();
        assert_eq!(map.tree().branches().len(), 8);
        let x = BoundaryPoint::new(3, vec![0.31, 0.47, 0.12]).unwrap();
        let y = map.eval(&x).unwrap();
        let comps = map.fiber(&y);
        assert!(!comps.is_empty());
        assert!(comps.iter().any(|c| map.component_contains(c, &x, 1e-9)));
        let edge = BoundaryPoint::new(0, vec![0.0, 0.4, 0.9]).unwrap();
        let y = map.eval(&edge).unwrap();
        for c in edge.all_charts() {
            assert_eq!(map.eval(&c).unwrap(), y);
        }
        let comps = map.fiber(&y);
        assert!(comps.iter().any(|c| c.face.is_none()));
    }
}
