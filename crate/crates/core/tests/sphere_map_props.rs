use fibermap_core::audit::{inversion_tol, multiplicity_audit, sample_boundary};
use fibermap_core::geom::{dist, norm};
use fibermap_core::rng;
use fibermap_core::sphere_map::{
    build_small_fiber_map, cube_to_sphere, sphere_to_cube, BoundaryPoint, MapBundle, SmallFiberMap,
};
use proptest::prelude::*;
use rand::Rng;

/// Random point on a codimension-two face of `∂I^{n+1}`.
fn skeleton_point<R: Rng>(g: &mut R, n: usize) -> Vec<f64> {
    let d = n + 1;
    let i = g.random_range(0..d);
    let j = (i + g.random_range(1..d)) % d;
    let mut y: Vec<f64> = (0..d).map(|_| g.random::<f64>()).collect();
    y[i] = f64::from(g.random::<bool>() as u8);
    y[j] = f64::from(g.random::<bool>() as u8);
    y
}

#[test]
fn eval_agrees_across_charts_on_the_skeleton() {
    for (n, q, r) in [(3, 2, 2), (4, 2, 1), (4, 3, 2)] {
        let map = SmallFiberMap::build(n, q, 0.1, 0, Some(r)).unwrap();
        let mut g = rng::stream(21, n as u64);
        for _ in 0..10_000 {
            let y = skeleton_point(&mut g, n);
            let p = BoundaryPoint::from_ambient(&y).unwrap();
            let charts = p.all_charts();
            assert!(charts.len() >= 2);
            let v = map.eval(&p).unwrap();
            for c in &charts {
                assert_eq!(map.eval(c).unwrap(), v, "{y:?} face {}", c.face);
            }
        }
    }
}

#[test]
fn multiplicity_within_glued_degree() {
    let map = build_small_fiber_map(3, 2, 0.1, 0).unwrap();
    assert_eq!(map.max_degree(), (1 << 3) + 1);
    let rep = multiplicity_audit(&map, 10_000, 1);
    assert_eq!(rep.violations, 0, "{:?}", rep.counts);
    assert!(rep.max_count as u64 <= 9);
}

#[test]
fn inversion_is_sound_at_small_depth() {
    for (n, q, r, seed) in [(3, 2, 1, 0), (3, 2, 2, 1), (4, 3, 2, 2), (5, 2, 1, 3)] {
        let map = SmallFiberMap::build(n, q, 0.1, seed, Some(r)).unwrap();
        let mut g = rng::stream(seed, 77);
        for _ in 0..10_000 {
            let x = sample_boundary(&mut g, n);
            let comps = map.fiber(&map.eval(&x).unwrap());
            assert!(
                comps.iter().any(|c| map.component_contains(c, &x, 1e-9)),
                "n={n} q={q} r={r} x={x:?}"
            );
        }
    }
}

#[test]
fn inversion_at_chosen_depth_within_layout_rounding() {
    let map = build_small_fiber_map(3, 2, 0.1, 0).unwrap();
    let tol = inversion_tol(&map);
    let mut g = rng::stream(0, 78);
    for _ in 0..2_000 {
        let x = sample_boundary(&mut g, 3);
        let comps = map.fiber(&map.eval(&x).unwrap());
        assert!(comps.iter().any(|c| map.component_contains(c, &x, tol)), "{x:?}");
    }
}

#[test]
fn psi_round_trip() {
    let mut g = rng::stream(4, 0);
    for d in [3, 4, 6] {
        for _ in 0..10_000 {
            let x = rng::unit_vector(&mut g, d);
            let p = sphere_to_cube(&x).unwrap();
            let y = p.ambient();
            assert!(y.iter().any(|&v| v == 0.0 || v == 1.0));
            assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(dist(&cube_to_sphere(&p), &x) < 1e-12);
            let back = sphere_to_cube(&cube_to_sphere(&p)).unwrap();
            assert!(dist(&back.ambient(), &y) < 1e-12);
        }
    }
}

#[test]
fn bundles_are_byte_identical_and_reload() {
    let a = serde_json::to_string(&build_small_fiber_map(3, 2, 0.1, 0).unwrap().to_bundle()).unwrap();
    let b = serde_json::to_string(&build_small_fiber_map(3, 2, 0.1, 0).unwrap().to_bundle()).unwrap();
    assert_eq!(a, b);
    let bundle: MapBundle = serde_json::from_str(&a).unwrap();
    assert_eq!(bundle.tree.branches, 8);
    let map = SmallFiberMap::from_bundle(&bundle).unwrap();
    assert_eq!(serde_json::to_string(&map.to_bundle()).unwrap(), a);
    let mut tampered = bundle.clone();
    tampered.d *= 1.5;
    assert!(SmallFiberMap::from_bundle(&tampered).is_err());
    let other = serde_json::to_string(&build_small_fiber_map(3, 2, 0.1, 1).unwrap().to_bundle()).unwrap();
    assert_ne!(a, other);
}

/// Lipschitz constant of `f` on one face: the tree map moves at most
/// `1 / (delta1_k S_k)` unit edges per unit length in a level-`k` collar
/// and `2 / S_r` in a leaf cube, the layout stretches unit edges to at most
/// `max_edge_length`, and the offset term adds `w/4M |p|`.
fn lipschitz(map: &SmallFiberMap) -> f64 {
    let tm = map.tree_map();
    let mut lt = 2.0 / tm.scale(tm.r());
    for l in &tm.levels()[..tm.r() as usize] {
        lt = lt.max(1.0 / (l.delta1 * l.scale));
    }
    let emb = map.embedding();
    let op: f64 = map.projection().vectors.iter().map(|v| norm(v).powi(2)).sum::<f64>().sqrt();
    emb.max_edge_length() * lt + emb.tube_width() / (4.0 * emb.radius()) * op
}

/// Moves `y` by about `h` and puts it back on `∂I^{n+1}`.
fn nearby<R: Rng>(g: &mut R, y: &[f64], h: f64) -> Vec<f64> {
    let u = rng::unit_vector(g, y.len());
    let mut z: Vec<f64> = y.iter().zip(&u).map(|(a, b)| (a + h * b).clamp(0.0, 1.0)).collect();
    if !z.iter().any(|&v| v == 0.0 || v == 1.0) {
        let (i, _) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.min(1.0 - v)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        z[i] = z[i].round();
    }
    z
}

#[test]
fn continuity_within_composed_lipschitz_bound() {
    for (n, q, r) in [(3, 2, 2), (4, 3, 1)] {
        let map = SmallFiberMap::build(n, q, 0.1, 5, Some(r)).unwrap();
        let lf = lipschitz(&map);
        let mut g = rng::stream(9, n as u64);
        for i in 0..20_000 {
            // every other base point sits next to a cube edge
            let y = if i % 2 == 0 {
                sample_boundary(&mut g, n).ambient()
            } else {
                let mut y = skeleton_point(&mut g, n);
                let k = y.iter().position(|&v| v == 0.0 || v == 1.0).unwrap();
                y[k] = (y[k] - 1e-8).abs();
                y
            };
            let z = nearby(&mut g, &y, 1e-8);
            let fy = map.eval(&BoundaryPoint::from_ambient(&y).unwrap()).unwrap();
            let fz = map.eval(&BoundaryPoint::from_ambient(&z).unwrap()).unwrap();
            // one chart change may route the path through the root
            let bound = 2.0 * lf * dist(&y, &z) + 1e-12;
            assert!(dist(&fy, &fz) <= bound, "{y:?} {z:?}: {} > {bound}", dist(&fy, &fz));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn images_lie_in_the_declared_tube(seed in 0u64..1000, face in 0usize..8, local in prop::collection::vec(0.0f64..=1.0, 3)) {
        let map = SmallFiberMap::build(3, 2, 0.1, seed, Some(2)).unwrap();
        let x = BoundaryPoint::new(face, local).unwrap();
        let y = map.eval(&x).unwrap();
        let core = map.embedding().thicken(map.tree_point(&x).unwrap(), &[0.0]).unwrap();
        prop_assert!(dist(&y, &core) <= map.embedding().tube_width() / 4.0 * (1.0 + 1e-12));
    }
}
