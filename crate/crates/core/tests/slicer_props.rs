mod common;

use common::{instance, slab_width};
use fibermap_core::geom::AxisBox;
use fibermap_core::slicer::{
    cube_boundary_boxes, max_cross_section_volume, polytope_volume, slice_box, slice_volume_mc,
    union_section, HyperplaneSystem,
};
use proptest::prelude::*;

#[test]
fn randomized_instances_match_monte_carlo() {
    let cases = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3)];
    let mut outside = 0;
    for i in 0..20u64 {
        for (k, &(n, q)) in cases.iter().enumerate() {
            let (bx, sys) = instance(n, q, 1000 + 10 * i + k as u64);
            let Some(poly) = slice_box(&bx, &sys).unwrap() else {
                panic!("instance through an interior point is empty");
            };
            assert!(poly.max_violation(&bx, &sys) <= 1e-10);
            let exact = polytope_volume(&poly).unwrap();
            let mc = slice_volume_mc(&bx, &sys, slab_width(q), 400_000, i).unwrap();
            assert!(!mc.zero_hits);
            if (mc.estimate - exact).abs() > 3.0 * mc.stderr {
                outside += 1;
            }
        }
    }
    // 100 instances at 3 sigma: a handful outside is noise, many is a bug
    assert!(outside <= 4, "{outside} of 100 instances outside 3 stderr");
}

#[test]
fn analytic_sections() {
    let sq = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]);
    let line = HyperplaneSystem::new(vec![vec![1.0, 1.0]], vec![1.0]);
    let seg = slice_box(&sq, &line).unwrap().unwrap();
    assert!((polytope_volume(&seg).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert!(slice_box(&sq, &line.with_offsets(vec![3.0])).unwrap().is_none());
    let cube = AxisBox::new(vec![0.0; 3], vec![1.0; 3]);
    let plane = HyperplaneSystem::new(vec![vec![1.0, 1.0, 1.0]], vec![1.5]);
    let hex = slice_box(&cube, &plane).unwrap().unwrap();
    assert_eq!(hex.cardinality(), 6);
    // regular hexagon of side sqrt(2)/2
    let side = 2f64.sqrt() / 2.0;
    let area = 3.0 * 3f64.sqrt() / 2.0 * side * side;
    assert!((polytope_volume(&hex).unwrap() - area).abs() < 1e-12);
    let mc = slice_volume_mc(&cube, &plane, 1e-3, 1_000_000, 3).unwrap();
    assert!((mc.estimate - area).abs() <= 3.0 * mc.stderr);
}

/// Perimeter of `{x + y + z = c} ∩ ∂[0,1]^3` by dense sampling of its edges
/// on each face.
fn sampled_perimeter(v: &[f64], c: f64) -> f64 {
    let k = 200_000;
    let mut total = 0.0;
    for axis in 0..3 {
        for side in [0.0, 1.0] {
            // on the face the section is the line u a + w b = c - side v_axis
            let (i, j) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let rhs = c - side * v[axis];
            let mut prev: Option<(f64, f64)> = None;
            for s in 0..=k {
                let u = s as f64 / k as f64;
                let w = (rhs - v[i] * u) / v[j];
                let cur = (0.0..=1.0).contains(&w).then_some((u, w));
                if let (Some(a), Some(b)) = (prev, cur) {
                    total += (a.0 - b.0).hypot(a.1 - b.1);
                }
                prev = cur;
            }
        }
    }
    total
}

#[test]
fn cube_boundary_perimeter_against_sampling() {
    let v = vec![0.9, 1.3, 0.7];
    for c in [0.4, 1.1, 1.6] {
        let sys = HyperplaneSystem::new(vec![v.clone()], vec![c]);
        let (exact, _) = union_section(&cube_boundary_boxes(&[0.0; 3], 1.0), &sys).unwrap();
        let oracle = sampled_perimeter(&v, c);
        assert!((exact - oracle).abs() < 1e-4, "c={c}: {exact} vs {oracle}");
    }
}

#[test]
fn vmax_dense_scan_within_padding() {
    let v = vec![vec![1.0, 1.0, 1.0, 1.0]];
    let cert = max_cross_section_volume(3, 2, &v, 256).unwrap();
    // dense scan of plane sections of ∂I^3 in every face chart
    let mut best = 0.0f64;
    for axis in 0..=3 {
        let w: Vec<f64> = (0..4).filter(|&i| i != axis).map(|i| v[0][i]).collect();
        for s in 0..=6000 {
            let c = 3.0 * s as f64 / 6000.0;
            let sys = HyperplaneSystem::new(vec![w.clone()], vec![c]);
            let (vol, _) = union_section(&cube_boundary_boxes(&[0.0; 3], 1.0), &sys).unwrap();
            best = best.max(vol);
        }
    }
    assert!(cert.value <= best + 1e-9, "{} > {best}", cert.value);
    assert!(best <= cert.bound + 1e-12, "{best} > {}", cert.bound);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn homogeneity(seed in any::<u64>(), lambda in 0.1f64..3.0, ci in 0usize..5) {
        let (n, q) = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3)][ci];
        let (bx, sys) = instance(n, q, seed);
        let v = polytope_volume(&slice_box(&bx, &sys).unwrap().unwrap()).unwrap();
        let scaled = bx.scaled(lambda);
        let ssys = sys.with_offsets(sys.offsets.iter().map(|c| c * lambda).collect());
        let vs = polytope_volume(&slice_box(&scaled, &ssys).unwrap().unwrap()).unwrap();
        let m = (n - q) as i32;
        prop_assert!((vs - v * lambda.powi(m)).abs() <= 1e-9 * vs.max(1.0));
    }

    #[test]
    fn reflection_symmetry(v in prop::collection::vec(0.2f64..2.0, 3), t in 0.0f64..1.0) {
        let boxes = cube_boundary_boxes(&[0.0; 3], 1.0);
        let total: f64 = v.iter().sum();
        let c = t * total;
        let a = union_section(&boxes, &HyperplaneSystem::new(vec![v.clone()], vec![c])).unwrap().0;
        let b = union_section(&boxes, &HyperplaneSystem::new(vec![v.clone()], vec![total - c])).unwrap().0;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn vertices_are_feasible(seed in any::<u64>(), ci in 0usize..5) {
        let (n, q) = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3)][ci];
        let (bx, sys) = instance(n, q, seed);
        if let Some(p) = slice_box(&bx, &sys).unwrap() {
            prop_assert!(p.max_violation(&bx, &sys) <= 1e-10);
            prop_assert_eq!(p.dim, n - q);
        }
    }
}
