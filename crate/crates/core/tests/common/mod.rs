#![allow(dead_code)]

use fibermap_core::geom::{dot, AxisBox};
use fibermap_core::rng;
use fibermap_core::slicer::HyperplaneSystem;
use rand::Rng;
use rand_distr::StandardNormal;

/// A random `(n-1)`-box in `R^{n+1}` with two fixed axes, cut by `q-1`
/// random hyperplanes through a random interior point.
pub fn instance(n: usize, q: usize, seed: u64) -> (AxisBox, HyperplaneSystem) {
    let mut g = rng::stream(seed, 0);
    let d = n + 1;
    let a = g.random_range(0..d);
    let mut b = g.random_range(0..d - 1);
    if b >= a {
        b += 1;
    }
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        if i == a || i == b {
            let v = g.random::<f64>();
            lo[i] = v;
            hi[i] = v;
        } else {
            let x = g.random::<f64>() * 0.5;
            lo[i] = x;
            hi[i] = x + 0.2 + g.random::<f64>() * 0.8;
        }
    }
    let bx = AxisBox::new(lo.clone(), hi.clone());
    let inner: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * g.random::<f64>()).collect();
    let normals: Vec<Vec<f64>> = (0..q - 1)
        .map(|_| (0..d).map(|_| g.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let offsets = normals.iter().map(|v| dot(v, &inner)).collect();
    (bx, HyperplaneSystem::new(normals, offsets))
}

/// Slab thickness for the Monte-Carlo section oracle: the slab averages the
/// section volume symmetrically over offsets, so its bias is second order.
pub fn slab_width(q: usize) -> f64 {
    if q <= 2 {
        0.01
    } else {
        0.03
    }
}
