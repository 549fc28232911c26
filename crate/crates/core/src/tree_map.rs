//! The recursive cube-to-tree maps `t_{n,r,delta}: I^n -> T_{n,r}`.
//!
//! At recursion level `k` the current cube (a frame of side `S_k`) is split
//! into a collar of width `delta1_k` around its boundary, mapped onto the
//! level-`k` trunk edge by normalised distance to the boundary, and a
//! `2 x ... x 2` array of subcubes of side `h_k = (1 - 2 delta1_k) / 2`,
//! each handled by the next level with half the budget. The level-`r` cube
//! is mapped onto its edge by twice the distance to its boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::AxisBox;
use crate::tree::{EdgeId, Location, Tree, TreePoint};

#[derive(Debug, Error, PartialEq)]
pub enum TreeMapError {
    #[error("dimension n must be at least 1")]
    BadDimension,
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("collar {collar} at level {level} is not below half the subcube side {side}")]
    DegenerateCollar { level: u32, collar: f64, side: f64 },
    #[error("T_{{{n},{r}}} exceeds the supported size")]
    TooDeep { n: u32, r: u32 },
    #[error("point has {got} coordinates, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("point lies outside the unit cube")]
    OutsideCube,
    #[error("tree point is not on this map's tree")]
    ForeignPoint,
    #[error("side threshold must be positive")]
    BadThreshold,
    #[error("invalid tree map file: {0}")]
    Parse(String),
}

/// Budget and geometry of one recursion level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub k: u32,
    /// `delta^(k) = delta / 2^k`.
    pub delta: f64,
    /// Collar width `delta^(k) / 4n`, in units of the level-`k` frame.
    pub delta1: f64,
    /// Wall budget `delta^(k) / 2`.
    pub delta2: f64,
    /// Subcube side `(1 - 2 delta1) / 2`, in frame units.
    pub inner_side: f64,
    /// Side of every level-`k` cube in `I^n`.
    pub scale: f64,
}

/// TOML form: just the three defining parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeMapConfig {
    pub n: u32,
    pub r: u32,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeMapSpec {
    n: u32,
    r: u32,
    delta: f64,
    levels: Vec<Level>,
    tree: Tree,
}

/// A level-`k` cube: `offset + scale * [0,1]^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFrame {
    pub offset: Vec<f64>,
    pub scale: f64,
    pub level: u32,
}

impl CubeFrame {
    pub fn box_of(&self) -> AxisBox {
        AxisBox::new(
            self.offset.clone(),
            self.offset.iter().map(|o| o + self.scale).collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FiberKind {
    SinglePoint,
    CubeBoundary,
    Skeleton,
}

/// Symbolic fiber of a tree map. `side` is the cube side for
/// `CubeBoundary`, the cell side for `Skeleton` and `0` for `SinglePoint`,
/// always in units of `I^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberDescriptor {
    pub kind: FiberKind,
    pub offset: Vec<f64>,
    pub scale: f64,
    pub level: u32,
    pub s: f64,
    pub side: f64,
}

impl FiberDescriptor {
    pub fn frame(&self) -> CubeFrame {
        CubeFrame {
            offset: self.offset.clone(),
            scale: self.scale,
            level: self.level,
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Lower corner of the cube (or of the outer cube of the skeleton array).
    /// The fibers of one frame are concentric.
    pub fn corner(&self) -> Vec<f64> {
        let outer = match self.kind {
            FiberKind::Skeleton => 2.0 * self.side,
            _ => self.side,
        };
        let inset = (self.scale - outer) / 2.0;
        self.offset.iter().map(|o| o + inset).collect()
    }
}

/// Position on `T_{n,r}` relative to one branch: the daughter path to the
/// edge's lower endpoint and the edge parameter. Canonical coordinates have
/// `s > 0`, except the root, which is the empty path with `s = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCoord {
    pub path: Vec<u32>,
    pub s: f64,
}

impl TreeCoord {
    pub fn level(&self) -> u32 {
        self.path.len() as u32
    }

    pub fn canonical(mut self) -> TreeCoord {
        if self.s <= 0.0 && !self.path.is_empty() {
            self.path.pop();
            self.s = 1.0;
        }
        self.s = self.s.clamp(0.0, 1.0);
        self
    }
}

/// Explicit decomposition of a fiber into axis-aligned `(n-1)`-boxes, or the
/// point itself for `SinglePoint` fibers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberFaces {
    pub boxes: Vec<AxisBox>,
    pub point: Option<Vec<f64>>,
}

impl FiberFaces {
    pub fn is_single_point(&self) -> bool {
        self.point.is_some()
    }
}

pub fn build_tree_map(n: u32, r: u32, delta: f64) -> Result<TreeMapSpec, TreeMapError> {
    TreeMapSpec::new(n, r, delta)
}

pub fn eval_tree_map(spec: &TreeMapSpec, x: &[f64]) -> Result<TreePoint, TreeMapError> {
    spec.eval(x)
}

pub fn fiber_of(spec: &TreeMapSpec, p: TreePoint) -> Result<FiberDescriptor, TreeMapError> {
    spec.fiber_of(p)
}

pub fn fiber_faces(desc: &FiberDescriptor) -> FiberFaces {
    match desc.kind {
        FiberKind::SinglePoint => FiberFaces {
            boxes: Vec::new(),
            point: Some(desc.corner()),
        },
        FiberKind::CubeBoundary => {
            let c = desc.corner();
            let s = desc.side;
            let mut boxes = Vec::with_capacity(2 * c.len());
            for i in 0..c.len() {
                for side in [0.0, 1.0] {
                    let mut lo = c.clone();
                    let mut hi: Vec<f64> = c.iter().map(|v| v + s).collect();
                    lo[i] = c[i] + side * s;
                    hi[i] = lo[i];
                    boxes.push(AxisBox::new(lo, hi));
                }
            }
            FiberFaces { boxes, point: None }
        }
        FiberKind::Skeleton => {
            let c = desc.corner();
            let h = desc.side;
            let n = c.len();
            let mut boxes = Vec::with_capacity(3 * n << (n - 1));
            for i in 0..n {
                for wall in 0..3 {
                    for cell in 0..1usize << (n - 1) {
                        let mut lo = vec![0.0; n];
                        let mut hi = vec![0.0; n];
                        let mut bit = 0;
                        for a in 0..n {
                            if a == i {
                                lo[a] = c[a] + wall as f64 * h;
                                hi[a] = lo[a];
                            } else {
                                let b = ((cell >> bit) & 1) as f64;
                                bit += 1;
                                lo[a] = c[a] + b * h;
                                hi[a] = lo[a] + h;
                            }
                        }
                        boxes.push(AxisBox::new(lo, hi));
                    }
                }
            }
            FiberFaces { boxes, point: None }
        }
    }
}

pub fn fiber_volume(desc: &FiberDescriptor) -> f64 {
    let n = desc.dim() as i32;
    match desc.kind {
        FiberKind::SinglePoint => 0.0,
        FiberKind::CubeBoundary => 2.0 * n as f64 * desc.side.powi(n - 1),
        FiberKind::Skeleton => 3.0 * n as f64 * 2f64.powi(n - 1) * desc.side.powi(n - 1),
    }
}

pub fn exceptional_volume(spec: &TreeMapSpec) -> f64 {
    spec.exceptional_volume()
}

pub fn small_fiber_coverage(spec: &TreeMapSpec, side_threshold: f64) -> Result<f64, TreeMapError> {
    spec.small_fiber_coverage(side_threshold)
}

fn dist_to_boundary(u: &[f64]) -> f64 {
    u.iter().fold(f64::INFINITY, |m, &v| m.min(v.min(1.0 - v)))
}

impl TreeMapSpec {
    pub fn new(n: u32, r: u32, delta: f64) -> Result<Self, TreeMapError> {
        if n == 0 {
            return Err(TreeMapError::BadDimension);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(TreeMapError::BadDelta(delta));
        }
        if !crate::tree::fits(n, r, 2 * (n as u64 + 2)) {
            return Err(TreeMapError::TooDeep { n, r });
        }
        let mut levels = Vec::with_capacity(r as usize + 1);
        let mut d = delta;
        let mut scale = 1.0;
        for k in 0..=r {
            let delta1 = d / (4.0 * n as f64);
            let inner_side = (1.0 - 2.0 * delta1) / 2.0;
            if k < r && delta1 >= inner_side / 2.0 {
                return Err(TreeMapError::DegenerateCollar {
                    level: k,
                    collar: delta1,
                    side: inner_side,
                });
            }
            levels.push(Level {
                k,
                delta: d,
                delta1,
                delta2: d / 2.0,
                inner_side,
                scale,
            });
            scale *= inner_side;
            d /= 2.0;
        }
        Ok(Self {
            n,
            r,
            delta,
            levels,
            tree: Tree::build(n, r),
        })
    }

    pub fn from_config(cfg: &TreeMapConfig) -> Result<Self, TreeMapError> {
        Self::new(cfg.n, cfg.r, cfg.delta)
    }

    pub fn config(&self) -> TreeMapConfig {
        TreeMapConfig {
            n: self.n,
            r: self.r,
            delta: self.delta,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.config()).expect("plain table")
    }

    pub fn from_toml(text: &str) -> Result<Self, TreeMapError> {
        let cfg: TreeMapConfig =
            toml::from_str(text).map_err(|e| TreeMapError::Parse(e.to_string()))?;
        Self::from_config(&cfg)
    }

    /// Level table as JSON, including which tree edge carries the collar of
    /// the first cube of each level.
    pub fn schedule_json(&self) -> serde_json::Value {
        let levels: Vec<serde_json::Value> = self
            .levels
            .iter()
            .map(|l| {
                let mut v = serde_json::to_value(l).expect("finite");
                let trunk = self.trunk_edge(&vec![0; l.k as usize]);
                v["trunk_edge"] = serde_json::json!(trunk.0);
                v["cubes"] = serde_json::json!(2f64.powi((self.n * l.k) as i32));
                v
            })
            .collect();
        serde_json::json!({
            "n": self.n,
            "r": self.r,
            "delta": self.delta,
            "levels": levels,
            "exceptional_volume": self.exceptional_volume(),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    /// Side of the level-`k` cubes.
    pub fn scale(&self, k: u32) -> f64 {
        self.levels[k as usize].scale
    }

    /// Tree edge onto which the collar of the cube reached by `path` maps.
    pub fn trunk_edge(&self, path: &[u32]) -> EdgeId {
        self.tree.edge_at(&Location {
            branch: 0,
            path: path.to_vec(),
        })
    }

    /// Evaluate in branch-relative coordinates.
    pub fn eval_coord(&self, x: &[f64]) -> Result<TreeCoord, TreeMapError> {
        let n = self.n as usize;
        if x.len() != n {
            return Err(TreeMapError::Dimension {
                got: x.len(),
                expected: n,
            });
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(TreeMapError::OutsideCube);
        }
        let mut u = x.to_vec();
        let mut path = Vec::with_capacity(self.r as usize);
        for level in &self.levels[..self.r as usize] {
            let dist = dist_to_boundary(&u);
            if dist <= level.delta1 {
                return Ok(TreeCoord {
                    path,
                    s: dist / level.delta1,
                }
                .canonical());
            }
            let mut j = 0u32;
            for (i, ui) in u.iter_mut().enumerate() {
                let bit = *ui > 0.5;
                j |= u32::from(bit) << i;
                let corner = level.delta1 + if bit { level.inner_side } else { 0.0 };
                *ui = ((*ui - corner) / level.inner_side).clamp(0.0, 1.0);
            }
            path.push(j);
        }
        let dist = dist_to_boundary(&u);
        Ok(TreeCoord {
            path,
            s: (2.0 * dist).min(1.0),
        }
        .canonical())
    }

    pub fn eval(&self, x: &[f64]) -> Result<TreePoint, TreeMapError> {
        let c = self.eval_coord(x)?;
        Ok(self.point_of(0, &self.tree, &c))
    }

    /// Tree point of `coord` inside branch `branch` of `tree`.
    pub fn point_of(&self, branch: usize, tree: &Tree, coord: &TreeCoord) -> TreePoint {
        let edge = tree.edge_at(&Location {
            branch,
            path: coord.path.clone(),
        });
        TreePoint { edge, s: coord.s }
    }

    /// Branch and canonical coordinates of a tree point.
    pub fn coord_of(tree: &Tree, p: TreePoint) -> (usize, TreeCoord) {
        let loc = tree.locate(p.edge);
        (
            loc.branch,
            TreeCoord {
                path: loc.path,
                s: p.s,
            }
            .canonical(),
        )
    }

    pub fn frame_of(&self, path: &[u32]) -> CubeFrame {
        let n = self.n as usize;
        let mut offset = vec![0.0; n];
        for (k, &j) in path.iter().enumerate() {
            let l = &self.levels[k];
            for (i, o) in offset.iter_mut().enumerate() {
                let bit = (j >> i) & 1 == 1;
                let corner = l.delta1 + if bit { l.inner_side } else { 0.0 };
                *o += l.scale * corner;
            }
        }
        CubeFrame {
            offset,
            scale: self.levels[path.len()].scale,
            level: path.len() as u32,
        }
    }

    pub fn fiber_of_coord(&self, coord: &TreeCoord) -> FiberDescriptor {
        let coord = coord.clone().canonical();
        let frame = self.frame_of(&coord.path);
        let k = coord.level();
        let l = &self.levels[k as usize];
        let (kind, side) = if k < self.r {
            if coord.s >= 1.0 {
                (FiberKind::Skeleton, frame.scale * l.inner_side)
            } else {
                (
                    FiberKind::CubeBoundary,
                    frame.scale * (1.0 - 2.0 * coord.s * l.delta1),
                )
            }
        } else if coord.s >= 1.0 {
            (FiberKind::SinglePoint, 0.0)
        } else {
            (FiberKind::CubeBoundary, frame.scale * (1.0 - coord.s))
        };
        FiberDescriptor {
            kind,
            offset: frame.offset,
            scale: frame.scale,
            level: k,
            s: coord.s,
            side,
        }
    }

    pub fn fiber_of(&self, p: TreePoint) -> Result<FiberDescriptor, TreeMapError> {
        if !self.tree.contains_edge(p.edge) || !(0.0..=1.0).contains(&p.s) {
            return Err(TreeMapError::ForeignPoint);
        }
        let (_, coord) = Self::coord_of(&self.tree, p);
        Ok(self.fiber_of_coord(&coord))
    }

    /// Exact volume of `I^n` carried by `CubeBoundary` fibers whose side is
    /// at most `thr`.
    ///
    /// In a level-`k` collar the point at frame depth `t` lies on a cube of
    /// side `S_k (1 - 2t)`, so the admissible points form the shell
    /// `t in [a_k, delta1_k]` with `a_k = max(0, (1 - thr / S_k) / 2)`.
    pub fn small_fiber_coverage(&self, thr: f64) -> Result<f64, TreeMapError> {
        if thr.is_nan() || thr < 0.0 {
            return Err(TreeMapError::BadThreshold);
        }
        let n = self.n as i32;
        let mut total = 0.0;
        for l in &self.levels {
            let mass = 2f64.powi(n * l.k as i32) * l.scale.powi(n);
            let a = ((1.0 - thr / l.scale) / 2.0).max(0.0);
            if l.k < self.r {
                if a < l.delta1 {
                    total += mass * ((1.0 - 2.0 * a).powi(n) - (1.0 - 2.0 * l.delta1).powi(n));
                }
            } else {
                total += mass * (1.0 - 2.0 * a).max(0.0).powi(n);
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Volume of points whose fiber is not a cube boundary of side at most
    /// `2^-r`.
    pub fn exceptional_volume(&self) -> f64 {
        let thr = 2f64.powi(-(self.r as i32));
        1.0 - self.small_fiber_coverage(thr).expect("positive threshold")
    }

    /// The same volume summed directly over collars: the inner shells whose
    /// cubes are still too large.
    pub fn exceptional_volume_direct(&self) -> f64 {
        let n = self.n as i32;
        let thr = 2f64.powi(-(self.r as i32));
        self.levels
            .iter()
            .map(|l| {
                let mass = 2f64.powi(n * l.k as i32) * l.scale.powi(n);
                let a = ((1.0 - thr / l.scale) / 2.0).max(0.0);
                let width = if l.k < self.r { a.min(l.delta1) } else { a.min(0.5) };
                mass * (1.0 - (1.0 - 2.0 * width).powi(n))
            })
            .sum()
    }

    /// `delta1 * 2n + 2^n * delta2 * 2^-n` at the top level.
    pub fn lemma_bound(&self) -> f64 {
        self.level_bound(0)
    }

    pub fn level_bound(&self, k: u32) -> f64 {
        let l = &self.levels[k as usize];
        l.delta1 * 2.0 * self.n as f64 + l.delta2
    }

    /// `B_k = 2n delta1_k + (2 h_k)^n B_{k+1}`, `B_r = 0`: the collar volume
    /// plus the rescaled exceptional volume of the subcubes.
    pub fn recursive_bound(&self) -> f64 {
        let n = self.n as i32;
        let mut b = 0.0;
        for l in self.levels[..self.r as usize].iter().rev() {
            b = 2.0 * self.n as f64 * l.delta1 + (2.0 * l.inner_side).powi(n) * b;
        }
        b
    }
}
