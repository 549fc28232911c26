//! Static k-d tree for nearest-neighbour queries on point clouds.

pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    /// Implicit balanced tree over a permutation of the points.
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(dim: usize, pts: &[Vec<f64>]) -> Self {
        let mut points = Vec::with_capacity(pts.len() * dim);
        for p in pts {
            points.extend_from_slice(p);
        }
        let mut order: Vec<usize> = (0..pts.len()).collect();
        let mut tree = KdTree {
            dim,
            points,
            order: Vec::new(),
        };
        tree.build(&mut order, 0);
        tree.order = order;
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn coord(&self, i: usize, axis: usize) -> f64 {
        self.points[i * self.dim + axis]
    }

    fn build(&self, idx: &mut [usize], depth: usize) {
        if idx.len() <= 1 {
            return;
        }
        let axis = depth % self.dim;
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            self.coord(a, axis).total_cmp(&self.coord(b, axis))
        });
        let (left, right) = idx.split_at_mut(mid);
        self.build(left, depth + 1);
        self.build(&mut right[1..], depth + 1);
    }

    /// Euclidean distance from `x` to the nearest point (`inf` if empty).
    pub fn nearest(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.search(&self.order, 0, x, &mut best);
        best.sqrt()
    }

    fn search(&self, idx: &[usize], depth: usize, x: &[f64], best: &mut f64) {
        if idx.is_empty() {
            return;
        }
        let axis = depth % self.dim;
        let mid = idx.len() / 2;
        let p = idx[mid];
        let d2: f64 = (0..self.dim)
            .map(|a| {
                let t = self.coord(p, a) - x[a];
                t * t
            })
            .sum();
        if d2 < *best {
            *best = d2;
        }
        let delta = x[axis] - self.coord(p, axis);
        let (near, far) = if delta < 0.0 {
            (&idx[..mid], &idx[mid + 1..])
        } else {
            (&idx[mid + 1..], &idx[..mid])
        };
        self.search(near, depth + 1, x, best);
        if delta * delta < *best {
            self.search(far, depth + 1, x, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matches_linear_scan() {
        let mut g = crate::rng::stream(5, 0);
        let pts: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..3).map(|_| g.random::<f64>()).collect())
            .collect();
        let tree = KdTree::new(3, &pts);
        for _ in 0..200 {
            let q: Vec<f64> = (0..3).map(|_| g.random::<f64>()).collect();
            let brute = pts
                .iter()
                .map(|p| crate::geom::dist(p, &q))
                .fold(f64::INFINITY, f64::min);
            assert!((tree.nearest(&q) - brute).abs() < 1e-15);
        }
        assert!(KdTree::new(2, &[]).nearest(&[0.0, 0.0]).is_infinite());
    }
}
