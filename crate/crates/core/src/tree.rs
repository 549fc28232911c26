//! Rooted trees `T_{n,r}`, their gluings at the root, layered straight-line
//! embeddings into `R^q` and the thickening map built on top of them.
//!
//! Trees in this family are stored implicitly: a [`Tree`] is an ordered list
//! of [`Branch`]es (copies of `T_{n,r}`) sharing one root. Node and edge ids
//! follow depth-first order and are computed arithmetically, so trees with
//! hundreds of millions of edges cost nothing to build.
//!
//! Id scheme: the root is node `0`; the edge into non-root node `v` has id
//! `v - 1`. Inside a branch, the trunk edge comes first and the `j`-th copy of
//! `T_{n,r-1}` occupies the next `E(r-1)` ids after the previous copies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::segment_distance;

/// Largest number of leaf slots the layout supports. Positions are integer
/// and half-integer slot coordinates, exact in `f64` below this bound.
pub const MAX_SLOTS: u64 = 1 << 52;

/// Trees with more edges than this are not expanded into explicit node and
/// edge lists when serialised.
pub const MATERIALIZE_LIMIT: u64 = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("cannot glue an empty list of trees")]
    EmptyGlue,
    #[error("tree with {0} edges is too large to materialize")]
    TooLarge(u64),
    #[error("T_{{{n},{r}}} exceeds the supported size")]
    Overflow { n: u32, r: u32 },
    #[error("embedding needs q >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("thickening radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("offset norm {norm} exceeds thickening radius {radius}")]
    OffsetTooLarge { norm: f64, radius: f64 },
    #[error("offset has {got} coordinates, expected {expected}")]
    OffsetDimension { got: usize, expected: usize },
    #[error("tree point parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("edge {0} does not exist")]
    NoSuchEdge(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u64);

/// One copy of `T_{n,r}` hanging off the shared root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub n: u32,
    pub depth: u32,
}

impl Branch {
    pub fn arity(&self) -> u64 {
        1u64 << self.n
    }

    pub fn edge_count(&self) -> u64 {
        subtree_edges(self.arity(), self.depth)
    }

    pub fn leaf_count(&self) -> u64 {
        self.arity().pow(self.depth)
    }
}

/// `E(m) = 1 + b E(m - 1)`, `E(0) = 1`.
pub fn subtree_edges(arity: u64, m: u32) -> u64 {
    (0..=m).map(|k| arity.pow(k)).sum()
}

/// Position of a non-root node: which branch it lives in and the daughter
/// indices taken below that branch's first junction. The branch's junction
/// node (far end of its trunk) has an empty path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub branch: usize,
    pub path: Vec<u32>,
}

impl Location {
    fn child(&self, j: u32) -> Location {
        let mut path = self.path.clone();
        path.push(j);
        Location {
            branch: self.branch,
            path,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub parent: NodeId,
    pub child: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TreeShape", into = "TreeShape")]
pub struct Tree {
    branches: Vec<Branch>,
    edge_offsets: Vec<u64>,
    slot_offsets: Vec<u64>,
    edge_total: u64,
    slot_total: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TreeShape {
    branches: Vec<Branch>,
}

impl From<TreeShape> for Tree {
    fn from(shape: TreeShape) -> Self {
        Tree::from_branches(shape.branches)
    }
}

impl From<Tree> for TreeShape {
    fn from(tree: Tree) -> Self {
        TreeShape {
            branches: tree.branches,
        }
    }
}

/// Whether `T_{n,r}` (in up to `copies` glued copies) fits the id and layout
/// ranges.
pub fn fits(n: u32, r: u32, copies: u64) -> bool {
    if n == 0 || n > 16 {
        return false;
    }
    let b = 1u64 << n;
    let Some(leaves) = b.checked_pow(r) else {
        return false;
    };
    match leaves.checked_mul(copies.max(1)) {
        Some(slots) => slots <= MAX_SLOTS && b.checked_pow(r + 1).is_some(),
        None => false,
    }
}

impl Tree {
    /// `T_{n,r}`: one trunk edge with `2^n` copies of `T_{n,r-1}` attached
    /// at its far end.
    ///
    /// Panics if the tree exceeds the supported size; see [`fits`].
    pub fn build(n: u32, r: u32) -> Tree {
        assert!(fits(n, r, 1), "T_{{{n},{r}}} exceeds the supported size");
        Tree::from_branches(vec![Branch { n, depth: r }])
    }

    /// Identify the roots of every input tree. Branch order follows input
    /// order, so provenance of an edge is the index of its branch.
    pub fn glue(trees: &[Tree]) -> Result<Tree, TreeError> {
        if trees.is_empty() {
            return Err(TreeError::EmptyGlue);
        }
        let branches: Vec<Branch> = trees.iter().flat_map(|t| t.branches.clone()).collect();
        let slots: Option<u64> = branches
            .iter()
            .try_fold(0u64, |acc, b| acc.checked_add(b.leaf_count()));
        match slots {
            Some(s) if s <= MAX_SLOTS => Ok(Tree::from_branches(branches)),
            _ => Err(TreeError::Overflow {
                n: branches[0].n,
                r: branches[0].depth,
            }),
        }
    }

    fn from_branches(branches: Vec<Branch>) -> Tree {
        let mut edge_offsets = Vec::with_capacity(branches.len());
        let mut slot_offsets = Vec::with_capacity(branches.len());
        let (mut e, mut s) = (0u64, 0u64);
        for b in &branches {
            edge_offsets.push(e);
            slot_offsets.push(s);
            e += b.edge_count();
            s += b.leaf_count();
        }
        Tree {
            branches,
            edge_offsets,
            slot_offsets,
            edge_total: e,
            slot_total: s,
        }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_total
    }

    pub fn node_count(&self) -> u64 {
        self.edge_total + 1
    }

    pub fn leaf_count(&self) -> u64 {
        self.slot_total
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    /// Largest node depth (the root has depth 0).
    pub fn height(&self) -> u32 {
        self.branches.iter().map(|b| b.depth + 1).max().unwrap_or(0)
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        e.0 < self.edge_total
    }

    /// Branch index of an edge (the input tree it came from when glued).
    pub fn provenance(&self, e: EdgeId) -> usize {
        self.edge_offsets.partition_point(|&o| o <= e.0) - 1
    }

    /// Location of the lower endpoint of edge `e`.
    pub fn locate(&self, e: EdgeId) -> Location {
        let branch = self.provenance(e);
        let b = self.branches[branch].arity();
        let mut m = self.branches[branch].depth;
        let mut off = e.0 - self.edge_offsets[branch];
        let mut path = Vec::new();
        while off > 0 {
            off -= 1;
            let sub = subtree_edges(b, m - 1);
            path.push((off / sub) as u32);
            off %= sub;
            m -= 1;
        }
        Location { branch, path }
    }

    /// Edge whose lower endpoint sits at `loc`.
    pub fn edge_at(&self, loc: &Location) -> EdgeId {
        let br = self.branches[loc.branch];
        let b = br.arity();
        let mut id = self.edge_offsets[loc.branch];
        for (i, &j) in loc.path.iter().enumerate() {
            id += 1 + j as u64 * subtree_edges(b, br.depth - 1 - i as u32);
        }
        EdgeId(id)
    }

    pub fn node_location(&self, v: NodeId) -> Option<Location> {
        (v.0 > 0).then(|| self.locate(EdgeId(v.0 - 1)))
    }

    pub fn node_at(&self, loc: &Location) -> NodeId {
        NodeId(self.edge_at(loc).0 + 1)
    }

    pub fn node_depth(&self, v: NodeId) -> u32 {
        self.node_location(v).map_or(0, |l| l.path.len() as u32 + 1)
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let loc = self.node_location(v)?;
        if loc.path.is_empty() {
            return Some(self.root());
        }
        let mut up = loc;
        up.path.pop();
        Some(self.node_at(&up))
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        let child = NodeId(e.0 + 1);
        Edge {
            id: e,
            parent: self.parent(child).expect("non-root child"),
            child,
        }
    }

    pub fn node(&self, v: NodeId) -> Node {
        Node {
            id: v,
            parent: self.parent(v),
            depth: self.node_depth(v),
        }
    }

    fn child_locations(&self, loc: &Location) -> Vec<Location> {
        let br = self.branches[loc.branch];
        if loc.path.len() as u32 >= br.depth {
            return Vec::new();
        }
        (0..br.arity() as u32).map(|j| loc.child(j)).collect()
    }

    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        match self.node_location(v) {
            None => (0..self.branches.len())
                .map(|branch| {
                    self.node_at(&Location {
                        branch,
                        path: Vec::new(),
                    })
                })
                .collect(),
            Some(loc) => self
                .child_locations(&loc)
                .iter()
                .map(|l| self.node_at(l))
                .collect(),
        }
    }

    pub fn daughters(&self, v: NodeId) -> u64 {
        match self.node_location(v) {
            None => self.branches.len() as u64,
            Some(loc) => {
                let br = self.branches[loc.branch];
                if (loc.path.len() as u32) < br.depth {
                    br.arity()
                } else {
                    0
                }
            }
        }
    }

    /// Daughters plus one for the parent edge (just daughters at the root).
    pub fn degree(&self, v: NodeId) -> u64 {
        self.daughters(v) + u64::from(v.0 != 0)
    }

    /// Maximum vertex degree.
    pub fn max_degree(&self) -> u64 {
        let inner = self
            .branches
            .iter()
            .map(|b| if b.depth >= 1 { b.arity() + 1 } else { 1 })
            .max()
            .unwrap_or(0);
        inner.max(self.branches.len() as u64)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.node_count()).map(|v| self.node(NodeId(v)))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.edge_total).map(|e| self.edge(EdgeId(e)))
    }

    /// `u` is an ancestor of `v` or equal to it.
    fn is_ancestor(&self, u: NodeId, v: NodeId) -> bool {
        match (self.node_location(u), self.node_location(v)) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.branch == b.branch && b.path.starts_with(&a.path),
        }
    }

    fn node_distance(&self, u: NodeId, v: NodeId) -> f64 {
        let lca_depth = match (self.node_location(u), self.node_location(v)) {
            (Some(a), Some(b)) if a.branch == b.branch => {
                let common = a
                    .path
                    .iter()
                    .zip(&b.path)
                    .take_while(|(x, y)| x == y)
                    .count();
                common as u32 + 1
            }
            _ => 0,
        };
        (self.node_depth(u) + self.node_depth(v) - 2 * lca_depth) as f64
    }

    pub fn point_at_node(&self, v: NodeId) -> TreePoint {
        if v.0 == 0 {
            TreePoint {
                edge: EdgeId(0),
                s: 0.0,
            }
        } else {
            TreePoint {
                edge: EdgeId(v.0 - 1),
                s: 1.0,
            }
        }
    }

    /// Canonical representative: junctions as `(parent edge, 1)`, the root as
    /// `(edge 0, 0)`.
    pub fn canonical(&self, p: TreePoint) -> TreePoint {
        if p.s <= 0.0 {
            let parent = self.edge(p.edge).parent;
            self.point_at_node(parent)
        } else if p.s >= 1.0 {
            TreePoint {
                edge: p.edge,
                s: 1.0,
            }
        } else {
            p
        }
    }

    /// Path-length distance with every edge of unit length.
    pub fn tree_distance(&self, a: TreePoint, b: TreePoint) -> f64 {
        let a = self.canonical(a);
        let b = self.canonical(b);
        if a.edge == b.edge {
            return (a.s - b.s).abs();
        }
        let ea = self.edge(a.edge);
        let eb = self.edge(b.edge);
        if self.is_ancestor(ea.child, eb.child) {
            (1.0 - a.s) + self.node_distance(ea.child, eb.parent) + b.s
        } else if self.is_ancestor(eb.child, ea.child) {
            (1.0 - b.s) + self.node_distance(eb.child, ea.parent) + a.s
        } else {
            a.s + self.node_distance(ea.parent, eb.parent) + b.s
        }
    }

    pub fn to_document(&self) -> Result<TreeDocument, TreeError> {
        if self.edge_total > MATERIALIZE_LIMIT {
            return Err(TreeError::TooLarge(self.edge_total));
        }
        Ok(TreeDocument {
            root: self.root(),
            branches: self.branches.clone(),
            nodes: self.nodes().collect(),
            edges: self
                .edges()
                .map(|e| EdgeRecord {
                    id: e.id,
                    parent: e.parent,
                    child: e.child,
                    provenance: self.provenance(e.id),
                })
                .collect(),
        })
    }
}

/// Shorthand for [`Tree::build`].
pub fn build_tree(n: u32, r: u32) -> Tree {
    Tree::build(n, r)
}

pub fn glue_at_roots(trees: &[Tree]) -> Result<Tree, TreeError> {
    Tree::glue(trees)
}

pub fn max_degree(tree: &Tree) -> u64 {
    tree.max_degree()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub parent: NodeId,
    pub child: NodeId,
    pub provenance: usize,
}

/// Explicit JSON form of a (small) tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeDocument {
    pub root: NodeId,
    pub branches: Vec<Branch>,
    pub nodes: Vec<Node>,
    pub edges: Vec<EdgeRecord>,
}

/// A point of a tree: an edge and a parameter, `0` at the parent end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub edge: EdgeId,
    pub s: f64,
}

impl TreePoint {
    pub fn new(edge: EdgeId, s: f64) -> Result<Self, TreeError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(TreeError::ParameterOutOfRange(s));
        }
        Ok(Self { edge, s })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// Radius `M` of the offset ball that the thickening rescales.
    pub radius: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Bbox {
    x1: (f64, f64),
    x2: (f64, f64),
}

impl Bbox {
    fn union(self, o: Bbox) -> Bbox {
        Bbox {
            x1: (self.x1.0.min(o.x1.0), self.x1.1.max(o.x1.1)),
            x2: (self.x2.0.min(o.x2.0), self.x2.1.max(o.x2.1)),
        }
    }

    fn distance(&self, o: &Bbox) -> f64 {
        let g1 = (self.x1.0 - o.x1.1).max(o.x1.0 - self.x1.1).max(0.0);
        let g2 = (self.x2.0 - o.x2.1).max(o.x2.0 - self.x2.1).max(0.0);
        g1.hypot(g2)
    }

    fn diagonal(&self) -> f64 {
        (self.x1.1 - self.x1.0).hypot(self.x2.1 - self.x2.0)
    }
}

/// Edge sets visited by the branch-and-bound distance search.
#[derive(Clone, Debug)]
enum Part {
    /// The edge into the node.
    Edge(Location),
    /// The edge into the node and everything below it.
    Full(Location),
    /// Everything strictly below the node.
    Sub(Location),
}

/// Layered straight-line embedding of a tree into `R^q`.
///
/// Node `v` sits at `x1 = depth(v)`; its second coordinate is the centre of
/// the slab of leaf slots below it, one unit slot per leaf; all further
/// coordinates are zero. Sibling subtrees occupy disjoint slabs, so embedded
/// edges meet only at shared endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpec {
    tree: Tree,
    q: usize,
    d: f64,
    radius: f64,
}

pub fn embed_tree(tree: &Tree, q: usize, params: LayoutParams) -> Result<EmbeddingSpec, TreeError> {
    EmbeddingSpec::new(tree.clone(), q, params)
}

pub fn min_disjoint_edge_distance(emb: &EmbeddingSpec) -> f64 {
    emb.d()
}

pub fn thicken_eval(emb: &EmbeddingSpec, p: TreePoint, x: &[f64]) -> Result<Vec<f64>, TreeError> {
    emb.thicken(p, x)
}

impl EmbeddingSpec {
    pub fn new(tree: Tree, q: usize, params: LayoutParams) -> Result<Self, TreeError> {
        if q < 2 {
            return Err(TreeError::DimensionTooSmall(q));
        }
        if !(params.radius > 0.0 && params.radius.is_finite()) {
            return Err(TreeError::BadRadius(params.radius));
        }
        let mut emb = EmbeddingSpec {
            tree,
            q,
            d: f64::INFINITY,
            radius: params.radius,
        };
        emb.d = emb.compute_min_disjoint_distance();
        Ok(emb)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Minimum distance between embedded edges with no common endpoint
    /// (`+inf` when no such pair exists).
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Thickening width: `d`, or `1` when every pair of edges shares an
    /// endpoint (stars), where any width keeps edges apart.
    pub fn tube_width(&self) -> f64 {
        if self.d.is_finite() {
            self.d
        } else {
            1.0
        }
    }

    /// Absolute rounding allowance on image coordinates: leaf-slot positions
    /// reach `slots`, so sums with them carry errors of a few ulps of that.
    pub fn coordinate_slack(&self) -> f64 {
        16.0 * f64::EPSILON * (self.tree.slot_total as f64 + 1.0)
    }

    /// Bound on the error of an offset recovered by [`Self::preimages`].
    pub fn offset_rounding(&self) -> f64 {
        self.coordinate_slack() * 4.0 * self.radius / self.tube_width()
    }

    fn slab(&self, loc: &Location) -> (f64, f64) {
        let br = self.tree.branches[loc.branch];
        let b = br.arity();
        let mut start = self.tree.slot_offsets[loc.branch];
        for (i, &j) in loc.path.iter().enumerate() {
            start += j as u64 * b.pow(br.depth - 1 - i as u32);
        }
        let width = b.pow(br.depth - loc.path.len() as u32);
        (start as f64, width as f64)
    }

    fn loc_xy(&self, loc: Option<&Location>) -> [f64; 2] {
        match loc {
            None => [0.0, self.tree.slot_total as f64 / 2.0],
            Some(l) => {
                let (start, width) = self.slab(l);
                [l.path.len() as f64 + 1.0, start + width / 2.0]
            }
        }
    }

    fn parent_loc(loc: &Location) -> Option<Location> {
        if loc.path.is_empty() {
            None
        } else {
            let mut up = loc.clone();
            up.path.pop();
            Some(up)
        }
    }

    fn lift(&self, xy: [f64; 2]) -> Vec<f64> {
        let mut v = vec![0.0; self.q];
        v[0] = xy[0];
        v[1] = xy[1];
        v
    }

    pub fn node_position(&self, v: NodeId) -> Vec<f64> {
        self.lift(self.loc_xy(self.tree.node_location(v).as_ref()))
    }

    fn edge_xy(&self, e: EdgeId) -> ([f64; 2], [f64; 2]) {
        let loc = self.tree.locate(e);
        let top = self.loc_xy(Self::parent_loc(&loc).as_ref());
        let bottom = self.loc_xy(Some(&loc));
        (top, bottom)
    }

    fn point_xy(&self, p: TreePoint) -> [f64; 2] {
        let (a, b) = self.edge_xy(p.edge);
        [a[0] + p.s * (b[0] - a[0]), a[1] + p.s * (b[1] - a[1])]
    }

    /// `phi(p, 0)`.
    pub fn point(&self, p: TreePoint) -> Vec<f64> {
        self.lift(self.point_xy(p))
    }

    /// `phi(p, x) = phi(p, 0) + (w/4) (0, x / M)` with `w` the
    /// [`tube_width`](Self::tube_width).
    pub fn thicken(&self, p: TreePoint, x: &[f64]) -> Result<Vec<f64>, TreeError> {
        if x.len() != self.q - 1 {
            return Err(TreeError::OffsetDimension {
                got: x.len(),
                expected: self.q - 1,
            });
        }
        if !self.tree.contains_edge(p.edge) {
            return Err(TreeError::NoSuchEdge(p.edge.0));
        }
        if !(0.0..=1.0).contains(&p.s) {
            return Err(TreeError::ParameterOutOfRange(p.s));
        }
        let nx = crate::geom::norm(x);
        if nx > self.radius {
            return Err(TreeError::OffsetTooLarge {
                norm: nx,
                radius: self.radius,
            });
        }
        let mut y = self.point(p);
        let k = self.tube_width() / (4.0 * self.radius);
        for (yi, xi) in y[1..].iter_mut().zip(x) {
            *yi += k * xi;
        }
        Ok(y)
    }

    /// Longest embedded edge; `tree_distance` is measured in unit edges, so
    /// this is the Lipschitz constant of `p -> phi(p, 0)`.
    pub fn max_edge_length(&self) -> f64 {
        let len = |loc: &Location| {
            let a = self.loc_xy(Self::parent_loc(loc).as_ref());
            let b = self.loc_xy(Some(loc));
            (a[0] - b[0]).hypot(a[1] - b[1])
        };
        let mut best = 0.0f64;
        for (branch, br) in self.tree.branches.iter().enumerate() {
            let mut loc = Location {
                branch,
                path: Vec::new(),
            };
            best = best.max(len(&loc));
            // the first and last daughters are the outermost at every level
            for _ in 0..br.depth {
                best = best.max(len(&loc.child(0)));
                best = best.max(len(&loc.child(br.arity() as u32 - 1)));
                loc = loc.child(0);
            }
        }
        best
    }

    fn part_bbox(&self, part: &Part) -> Option<Bbox> {
        match part {
            Part::Edge(loc) => {
                let a = self.loc_xy(Self::parent_loc(loc).as_ref());
                let b = self.loc_xy(Some(loc));
                Some(Bbox {
                    x1: (a[0].min(b[0]), a[0].max(b[0])),
                    x2: (a[1].min(b[1]), a[1].max(b[1])),
                })
            }
            Part::Sub(loc) => {
                let br = self.tree.branches[loc.branch];
                if loc.path.len() as u32 >= br.depth {
                    return None;
                }
                let (start, width) = self.slab(loc);
                Some(Bbox {
                    x1: (loc.path.len() as f64 + 1.0, br.depth as f64 + 1.0),
                    x2: (start, start + width),
                })
            }
            Part::Full(loc) => {
                let e = self.part_bbox(&Part::Edge(loc.clone()))?;
                Some(match self.part_bbox(&Part::Sub(loc.clone())) {
                    Some(s) => e.union(s),
                    None => e,
                })
            }
        }
    }

    fn split(&self, part: &Part) -> Vec<Part> {
        match part {
            Part::Edge(_) => Vec::new(),
            Part::Full(loc) => vec![Part::Edge(loc.clone()), Part::Sub(loc.clone())],
            Part::Sub(loc) => self
                .tree
                .child_locations(loc)
                .into_iter()
                .map(Part::Full)
                .collect(),
        }
    }

    fn segment_xy(&self, loc: &Location) -> ([f64; 2], [f64; 2]) {
        (
            self.loc_xy(Self::parent_loc(loc).as_ref()),
            self.loc_xy(Some(loc)),
        )
    }

    /// Branch and bound over pairs of edge sets that are known to share no
    /// endpoint.
    fn bnb(&self, a: &Part, b: &Part, best: &mut f64) {
        let (Some(ba), Some(bb)) = (self.part_bbox(a), self.part_bbox(b)) else {
            return;
        };
        if ba.distance(&bb) >= *best {
            return;
        }
        if let (Part::Edge(la), Part::Edge(lb)) = (a, b) {
            let (p0, p1) = self.segment_xy(la);
            let (q0, q1) = self.segment_xy(lb);
            *best = best.min(segment_distance(&p0, &p1, &q0, &q1));
            return;
        }
        let split_a = match (a, b) {
            (Part::Edge(_), _) => false,
            (_, Part::Edge(_)) => true,
            _ => ba.diagonal() >= bb.diagonal(),
        };
        let (whole, other_box) = if split_a { (a, bb) } else { (b, ba) };
        let mut parts: Vec<(f64, Part)> = self
            .split(whole)
            .into_iter()
            .filter_map(|p| self.part_bbox(&p).map(|bx| (bx.distance(&other_box), p)))
            .collect();
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (_, p) in parts {
            if split_a {
                self.bnb(&p, b, best);
            } else {
                self.bnb(a, &p, best);
            }
        }
    }

    /// Disjoint pairs whose lowest common node is the parent of `children`.
    fn cross(&self, children: &[Location], best: &mut f64) {
        for (i, ci) in children.iter().enumerate() {
            for g in self.tree.child_locations(ci) {
                self.bnb(&Part::Edge(ci.clone()), &Part::Sub(g), best);
            }
            for (j, cj) in children.iter().enumerate() {
                if i != j {
                    self.bnb(&Part::Edge(ci.clone()), &Part::Sub(cj.clone()), best);
                }
                if i < j {
                    self.bnb(&Part::Sub(ci.clone()), &Part::Sub(cj.clone()), best);
                }
            }
        }
    }

    /// Exact minimum over all pairs of embedded edges with disjoint closures.
    ///
    /// Every such pair has a lowest common node `u`; the pairs attached to
    /// `u` are searched by branch and bound on slab bounding boxes. Subtrees
    /// of one branch type at equal depth are translates of each other, so one
    /// representative node per (branch type, depth) suffices.
    fn compute_min_disjoint_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        let mut seen: Vec<Branch> = Vec::new();
        for (branch, br) in self.tree.branches.iter().enumerate() {
            if seen.contains(br) {
                continue;
            }
            seen.push(*br);
            for level in (0..br.depth).rev() {
                let u = Location {
                    branch,
                    path: vec![0; level as usize],
                };
                let children = self.tree.child_locations(&u);
                self.cross(&children, &mut best);
            }
        }
        let junctions: Vec<Location> = (0..self.tree.branches.len())
            .map(|branch| Location {
                branch,
                path: Vec::new(),
            })
            .collect();
        self.cross(&junctions, &mut best);
        best
    }

    /// Reference implementation: every pair of edges, `O(E^2)`.
    pub fn brute_force_min_disjoint_distance(&self) -> f64 {
        let edges: Vec<Edge> = self.tree.edges().collect();
        let segs: Vec<([f64; 2], [f64; 2])> = edges.iter().map(|e| self.edge_xy(e.id)).collect();
        let mut best = f64::INFINITY;
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (a, b) = (edges[i], edges[j]);
                if a.parent == b.parent || a.parent == b.child || a.child == b.parent {
                    continue;
                }
                let (p0, p1) = segs[i];
                let (q0, q1) = segs[j];
                best = best.min(segment_distance(&p0, &p1, &q0, &q1));
            }
        }
        best
    }

    /// Non-root nodes at `depth` whose slabs meet `[lo, hi]`.
    fn nodes_in_window(&self, depth: u32, lo: f64, hi: f64) -> Vec<Location> {
        let mut out = Vec::new();
        if depth == 0 {
            return out;
        }
        let level = depth - 1;
        for (branch, br) in self.tree.branches.iter().enumerate() {
            if level > br.depth {
                continue;
            }
            let b = br.arity();
            let base = self.tree.slot_offsets[branch] as f64;
            let width = b.pow(br.depth - level) as f64;
            let count = b.pow(level);
            let first = ((lo - base) / width).floor();
            let last = ((hi - base) / width).floor();
            if last < 0.0 || first >= count as f64 {
                continue;
            }
            let first = first.max(0.0) as u64;
            let last = (last as u64).min(count - 1);
            for idx in first..=last {
                let path = (0..level)
                    .map(|i| ((idx / b.pow(level - 1 - i)) % b) as u32)
                    .collect();
                out.push(Location { branch, path });
            }
        }
        out
    }

    /// All `(p, x)` with `phi(p, x) = y`, `p` canonical and `|x| <= M`.
    ///
    /// Every embedded edge is strictly monotone in `x1`, so each edge carries
    /// at most one candidate; only edges whose parent slab meets the
    /// `d/4`-window around `y` are visited.
    pub fn preimages(&self, y: &[f64]) -> Vec<(TreePoint, Vec<f64>)> {
        if y.len() != self.q {
            return Vec::new();
        }
        let tube = self.tube_width() / 4.0;
        let slack = self.coordinate_slack();
        let extra: f64 = y[2..].iter().map(|v| v * v).sum();
        let reach = tube + slack;
        if extra > reach * reach {
            return Vec::new();
        }
        let rho = (reach * reach - extra).sqrt();
        let y1 = y[0];
        if !(0.0..=self.tree.height() as f64).contains(&y1) {
            return Vec::new();
        }
        let layer = y1.floor();
        let frac = y1 - layer;
        let depth = layer as u32;
        let mut points: Vec<(TreePoint, f64)> = Vec::new();
        if frac == 0.0 {
            if depth == 0 {
                points.push((self.tree.point_at_node(self.tree.root()), self.loc_xy(None)[1]));
            } else {
                for loc in self.nodes_in_window(depth, y[1] - rho, y[1] + rho) {
                    let x2 = self.loc_xy(Some(&loc))[1];
                    if (x2 - y[1]).abs() <= rho {
                        let e = self.tree.edge_at(&loc);
                        points.push((TreePoint { edge: e, s: 1.0 }, x2));
                    }
                }
            }
        } else {
            let parents: Vec<Option<Location>> = if depth == 0 {
                vec![None]
            } else {
                self.nodes_in_window(depth, y[1] - rho, y[1] + rho)
                    .into_iter()
                    .map(Some)
                    .collect()
            };
            for parent in parents {
                let top = self.loc_xy(parent.as_ref());
                let kids = match &parent {
                    None => (0..self.tree.branches.len())
                        .map(|branch| Location {
                            branch,
                            path: Vec::new(),
                        })
                        .collect(),
                    Some(p) => self.tree.child_locations(p),
                };
                for kid in kids {
                    let bottom = self.loc_xy(Some(&kid));
                    let x2 = top[1] + frac * (bottom[1] - top[1]);
                    if (x2 - y[1]).abs() <= rho {
                        let e = self.tree.edge_at(&kid);
                        points.push((TreePoint { edge: e, s: frac }, x2));
                    }
                }
            }
        }
        let scale = 4.0 * self.radius / self.tube_width();
        let limit = self.radius + slack * scale;
        points
            .into_iter()
            .filter_map(|(p, x2)| {
                let mut x: Vec<f64> = y[1..].to_vec();
                x[0] -= x2;
                for v in x.iter_mut() {
                    *v *= scale;
                }
                let nx = crate::geom::norm(&x);
                if nx > limit {
                    return None;
                }
                if nx > self.radius {
                    let shrink = self.radius / nx;
                    x.iter_mut().for_each(|v| *v *= shrink);
                }
                Some((p, x))
            })
            .collect()
    }

    pub fn to_document(&self) -> EmbeddingDocument {
        let positions = (self.tree.edge_count() <= MATERIALIZE_LIMIT).then(|| {
            (0..self.tree.node_count())
                .map(|v| self.node_position(NodeId(v)))
                .collect()
        });
        EmbeddingDocument {
            layout: "layered-slab".to_string(),
            q: self.q,
            positions,
            d: self.d,
            radius: self.radius,
        }
    }
}

/// JSON form of an embedding. `positions` is indexed by node id and omitted
/// for trees above [`MATERIALIZE_LIMIT`] edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDocument {
    pub layout: String,
    pub q: usize,
    pub positions: Option<Vec<Vec<f64>>>,
    pub d: f64,
    #[serde(rename = "M")]
    pub radius: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_tree_is_single_edge() {
        let t = Tree::build(2, 0);
        assert_eq!(t.edge_count(), 1);
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.max_degree(), 1);
    }

    #[test]
    fn edge_counts_small() {
        assert_eq!(Tree::build(2, 1).edge_count(), 5);
        let t = Tree::build(2, 2);
        assert_eq!(t.edge_count(), 21);
        assert_eq!(t.leaf_count(), 16);
        let leaves = t.nodes().filter(|v| t.daughters(v.id) == 0).count();
        assert_eq!(leaves, 16);
    }

    #[test]
    fn ids_follow_depth_first_order() {
        let t = Tree::build(1, 2);
        // trunk 0, then the two copies of T_{1,1}, each of 3 edges
        let parents: Vec<u64> = t.edges().map(|e| e.parent.0).collect();
        assert_eq!(parents, vec![0, 1, 2, 2, 1, 5, 5]);
        for e in t.edges() {
            assert_eq!(t.edge_at(&t.locate(e.id)), e.id);
            assert_eq!(t.node(e.child).depth, t.node(e.parent).depth + 1);
        }
    }

    #[test]
    fn glue_identity_and_star() {
        let t = Tree::build(3, 1);
        let g = Tree::glue(std::slice::from_ref(&t)).unwrap();
        assert_eq!(g.edge_count(), t.edge_count());
        let a: Vec<Edge> = g.edges().collect();
        let b: Vec<Edge> = t.edges().collect();
        assert_eq!(a, b);

        let path = Tree::glue(&[Tree::build(2, 0), Tree::build(2, 0)]).unwrap();
        assert_eq!(path.node_count(), 3);
        assert_eq!(path.degree(path.root()), 2);
        assert_eq!(path.max_degree(), 2);
        assert_eq!(Tree::glue(&[]), Err(TreeError::EmptyGlue));
    }

    #[test]
    fn glued_provenance() {
        let copies = vec![Tree::build(3, 1); 8];
        let g = Tree::glue(&copies).unwrap();
        assert_eq!(g.degree(g.root()), 8);
        assert_eq!(g.max_degree(), 9);
        let per = Tree::build(3, 1).edge_count();
        for e in g.edges() {
            assert_eq!(g.provenance(e.id) as u64, e.id.0 / per);
        }
    }

    #[test]
    fn max_degree_values() {
        assert_eq!(Tree::build(3, 2).max_degree(), 9);
        assert_eq!(Tree::build(4, 0).max_degree(), 1);
        // a single junction already has the parent edge plus 2^n daughters
        assert_eq!(Tree::build(2, 1).max_degree(), 5);
        let glued2 = Tree::glue(&vec![Tree::build(2, 2); 6]).unwrap();
        assert_eq!(glued2.max_degree(), 6);
    }

    #[test]
    fn canonical_junctions() {
        let t = Tree::build(2, 1);
        let trunk_end = TreePoint {
            edge: EdgeId(0),
            s: 1.0,
        };
        let child_start = TreePoint {
            edge: EdgeId(3),
            s: 0.0,
        };
        assert_eq!(t.canonical(child_start), trunk_end);
        assert_eq!(t.tree_distance(child_start, trunk_end), 0.0);
        let root = TreePoint {
            edge: EdgeId(0),
            s: 0.0,
        };
        assert_eq!(t.canonical(root), root);
    }

    #[test]
    fn tree_distance_paths() {
        let t = Tree::build(2, 1);
        let a = TreePoint {
            edge: EdgeId(1),
            s: 0.5,
        };
        let b = TreePoint {
            edge: EdgeId(2),
            s: 0.25,
        };
        assert!((t.tree_distance(a, b) - 0.75).abs() < 1e-15);
        let root = TreePoint {
            edge: EdgeId(0),
            s: 0.0,
        };
        assert!((t.tree_distance(root, a) - 1.5).abs() < 1e-15);
        assert!((t.tree_distance(a, root) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn embedding_rejects_q1() {
        let t = Tree::build(2, 1);
        assert_eq!(
            EmbeddingSpec::new(t, 1, LayoutParams::default()),
            Err(TreeError::DimensionTooSmall(1))
        );
    }

    #[test]
    fn single_edge_embedding() {
        let emb = embed_tree(&Tree::build(2, 0), 2, LayoutParams::default()).unwrap();
        assert!(emb.d().is_infinite());
        let a = emb.node_position(NodeId(0));
        let b = emb.node_position(NodeId(1));
        assert!(b[0] > a[0]);
    }

    #[test]
    fn star_is_planar() {
        let star = Tree::glue(&vec![Tree::build(1, 0); 3]).unwrap();
        let emb = embed_tree(&star, 3, LayoutParams::default()).unwrap();
        let xs: Vec<Vec<f64>> = (1..4).map(|v| emb.node_position(NodeId(v))).collect();
        for x in &xs {
            assert_eq!(x[2], 0.0);
            assert_eq!(x[0], 1.0);
        }
        assert!(xs[0][1] < xs[1][1] && xs[1][1] < xs[2][1]);
    }

    #[test]
    fn bnb_matches_brute_force() {
        let cases = vec![
            Tree::build(2, 1),
            Tree::build(2, 2),
            Tree::build(1, 4),
            Tree::build(3, 2),
            Tree::glue(&vec![Tree::build(2, 2); 6]).unwrap(),
            Tree::glue(&vec![Tree::build(3, 1); 8]).unwrap(),
            Tree::glue(&[Tree::build(2, 1), Tree::build(1, 3), Tree::build(2, 0)]).unwrap(),
        ];
        for t in cases {
            let emb = embed_tree(&t, 2, LayoutParams::default()).unwrap();
            let brute = emb.brute_force_min_disjoint_distance();
            assert!(
                emb.d() == brute || (emb.d() - brute).abs() < 1e-12,
                "{:?}: {} vs {}",
                t.branches(),
                emb.d(),
                brute
            );
            assert!(emb.d() > 0.0);
        }
        let star = embed_tree(&Tree::build(2, 1), 2, LayoutParams::default()).unwrap();
        assert!(star.d().is_infinite());
        assert!(star.brute_force_min_disjoint_distance().is_infinite());
    }

    #[test]
    fn thicken_bounds() {
        let emb = embed_tree(&Tree::build(2, 1), 2, LayoutParams { radius: 2.0 }).unwrap();
        let root = TreePoint {
            edge: EdgeId(0),
            s: 0.0,
        };
        let base = emb.point(root);
        assert_eq!(emb.thicken(root, &[0.0]).unwrap(), base);
        let y = emb.thicken(root, &[2.0]).unwrap();
        assert_eq!(y[0], base[0]);
        assert!(((y[1] - base[1]) - emb.tube_width() / 4.0).abs() < 1e-15);
        assert!(matches!(
            emb.thicken(root, &[2.5]),
            Err(TreeError::OffsetTooLarge { .. })
        ));
        assert!(matches!(
            emb.thicken(root, &[0.0, 0.0]),
            Err(TreeError::OffsetDimension { .. })
        ));
    }

    #[test]
    fn preimage_of_root() {
        let g = Tree::glue(&vec![Tree::build(3, 1); 8]).unwrap();
        let emb = embed_tree(&g, 2, LayoutParams::default()).unwrap();
        let root = g.point_at_node(g.root());
        let pre = emb.preimages(&emb.point(root));
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].0, root);
        assert!(emb.preimages(&[0.5, -1e6]).is_empty());
        assert!(emb.preimages(&[-1.0, 0.0]).is_empty());
    }

    #[test]
    fn document_fields() {
        let t = Tree::build(2, 1);
        let doc = serde_json::to_value(t.to_document().unwrap()).unwrap();
        for key in ["nodes", "edges", "root"] {
            assert!(doc.get(key).is_some(), "{key}");
        }
        let emb = embed_tree(&t, 2, LayoutParams::default()).unwrap();
        let doc = serde_json::to_value(emb.to_document()).unwrap();
        for key in ["positions", "d", "M"] {
            assert!(doc.get(key).is_some(), "{key}");
        }
        assert!(Tree::build(4, 4).to_document().is_err());
    }
}
