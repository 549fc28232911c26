use std::f64::consts::{FRAC_PI_2, PI};

use fibermap_core::geom::sphere_volume;
use fibermap_core::sphere_lab::{
    cap_radius_for_volume, cap_volume, check_codim1, check_decomposition, equator_tube_volume,
    geqnbd_compare, nbhd_volume_grid, nbhd_volume_mc, Codim1Options, LabError, RegionOracle,
    ScalarMap,
};
use proptest::prelude::*;

fn north(n: usize) -> Vec<f64> {
    let mut u = vec![0.0; n + 1];
    u[n] = 1.0;
    u
}

#[test]
fn closed_form_caps_and_tubes() {
    // Vol(S^2) * int_0^rho sin^2 = pi (2 rho - sin 2 rho)
    for rho in [0.1, PI / 3.0, 1.7, PI] {
        let exact = PI * (2.0 * rho - (2.0 * rho).sin());
        assert!((cap_volume(3, rho) - exact).abs() <= 1e-12 * exact.max(1.0));
    }
    assert!((cap_volume(2, FRAC_PI_2) - 2.0 * PI).abs() < 1e-12);
    assert!((cap_volume(2, PI) - 4.0 * PI).abs() < 1e-12);
    for eps in [0.05, 0.4, 1.2, FRAC_PI_2] {
        // band around a great circle of S^2
        let band = 4.0 * PI * eps.sin();
        assert!((equator_tube_volume(2, 1, eps) - band).abs() <= 1e-12 * band);
        // tube around a great circle of S^3: 4 pi^2 int cos sin
        let tube = 2.0 * PI * PI * eps.sin().powi(2);
        assert!((equator_tube_volume(3, 2, eps) - tube).abs() <= 1e-12 * tube);
        // a point of S^2 is the equatorial S^0 for q = 2
        let caps = 2.0 * cap_volume(2, eps);
        assert!((equator_tube_volume(2, 2, eps) - caps).abs() <= 1e-12 * caps);
    }
    for n in 1..6 {
        assert!((equator_tube_volume(n, 1, FRAC_PI_2) - sphere_volume(n)).abs() < 1e-10);
    }
}

#[test]
fn equator_neighbourhood_against_tube_formula() {
    for n in [2, 3] {
        let equator = RegionOracle::coordinate_subsphere(n, n - 1);
        let grid = [0.1, 0.3, 0.6];
        let est = nbhd_volume_grid(n, &equator, &grid, 200_000, 11).unwrap();
        for e in &est {
            let exact = equator_tube_volume(n, 1, e.epsilon);
            assert!((e.estimate - exact).abs() <= 3.0 * e.stderr, "n={n} {e:?} vs {exact}");
            assert!(!e.coarse);
        }
    }
}

#[test]
fn neighbourhoods_grow_and_fill_the_sphere() {
    let n = 2;
    let regions = [
        RegionOracle::Cap {
            center: north(n),
            radius: 0.3,
        },
        RegionOracle::coordinate_subsphere(n, 1),
        RegionOracle::Points(vec![north(n)]),
        RegionOracle::Latitude { axis: 2, theta: 1.0 },
    ];
    for r in &regions {
        let mut prev: Option<(f64, f64)> = None;
        for (k, eps) in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6].into_iter().enumerate() {
            // independent samples per radius
            let e = nbhd_volume_mc(n, r, eps, 20_000, 100 + k as u64).unwrap();
            assert!(e.estimate >= 0.0 && e.estimate <= sphere_volume(n));
            if let Some((v, s)) = prev {
                assert!(e.estimate >= v - 3.0 * (s * s + e.stderr * e.stderr).sqrt());
            }
            prev = Some((e.estimate, e.stderr));
        }
        let full = nbhd_volume_mc(n, r, PI, 5_000, 1).unwrap();
        assert_eq!(full.estimate, sphere_volume(n));
    }
    let pair = RegionOracle::Points(vec![north(n), north(n).iter().map(|v| -v).collect()]);
    let e = nbhd_volume_mc(n, &pair, FRAC_PI_2, 5_000, 2).unwrap();
    assert_eq!(e.estimate, sphere_volume(n));
    let whole = nbhd_volume_mc(n, &RegionOracle::Whole, 0.01, 5_000, 3).unwrap();
    assert_eq!(whole.estimate, sphere_volume(n));
    assert!(matches!(
        nbhd_volume_mc(n, &RegionOracle::Whole, 0.1, 10, 0),
        Err(LabError::TooFewSamples(10))
    ));
}

#[test]
fn comparison_verdicts() {
    let n = 2;
    let grid = [0.05, 0.2, 0.8];
    let equator = RegionOracle::coordinate_subsphere(n, 1);
    let point = RegionOracle::Points(vec![north(n)]);
    let same = geqnbd_compare(n, &equator, &equator, &grid, 20_000, 0).unwrap();
    assert!(same.consistent);
    assert!(same.rows.iter().all(|r| r.difference == 0.0));
    assert!(geqnbd_compare(n, &equator, &point, &grid, 20_000, 0).unwrap().consistent);
    let rev = geqnbd_compare(n, &point, &equator, &grid, 20_000, 0).unwrap();
    assert!(!rev.consistent);
    assert!(rev.verdict.starts_with("inconsistent"));
    // two caps against one cap of the same total area
    let a = RegionOracle::Union(vec![
        RegionOracle::Cap {
            center: north(n),
            radius: 0.3,
        },
        RegionOracle::Cap {
            center: vec![1.0, 0.0, 0.0],
            radius: 0.3,
        },
    ]);
    let b = RegionOracle::Cap {
        center: north(n),
        radius: cap_radius_for_volume(n, 2.0 * cap_volume(n, 0.3)),
    };
    assert!(geqnbd_compare(n, &a, &b, &grid, 50_000, 4).unwrap().consistent);
}

#[test]
fn decomposition_identity_for_hemispheres() {
    let n = 2;
    let eps = 0.2;
    let x = RegionOracle::hemisphere(north(n));
    let y = RegionOracle::hemisphere(north(n).iter().map(|v| -v).collect());
    let xy = RegionOracle::coordinate_subsphere(n, 1);
    let rep = check_decomposition(n, &x, &y, &xy, eps, 200_000, 6).unwrap();
    assert!(rep.consistent, "{rep:?}");
    let band = 4.0 * PI * eps.sin();
    assert!((rep.lhs - band).abs() <= 3.0 * rep.combined_stderr.max(1e-3));
    let gap = RegionOracle::Cap {
        center: north(n),
        radius: 0.5,
    };
    assert!(matches!(
        check_decomposition(n, &gap, &gap, &gap, eps, 5_000, 0),
        Err(LabError::NotCovering { .. })
    ));
}

fn fast_opts() -> Codim1Options {
    Codim1Options {
        eps_grid: vec![0.1, 0.2],
        ..Codim1Options::default()
    }
}

#[test]
fn codim1_equality_baseline_and_reparameterization() {
    let y = 0.2;
    let plain = check_codim1(&ScalarMap::Height { axis: 2 }, y, 100_000, 8, &fast_opts()).unwrap();
    assert!(plain.consistent);
    assert!(plain.volume_consistent);
    assert!((plain.alpha - y).abs() < 0.01 && (plain.beta - (1.0 - y)).abs() < 0.01);
    assert!(plain.margin.abs() * sphere_volume(2) <= 3.0 * plain.middle_stderr);
    let cubed = check_codim1(&ScalarMap::CubedHeight { axis: 2 }, y, 100_000, 8, &fast_opts()).unwrap();
    assert_eq!(cubed.consistent, plain.consistent);
    assert_eq!(cubed.volume_consistent, plain.volume_consistent);
    // same sample, same level sets: the brackets are images of each other
    assert!((cubed.alpha.cbrt() - plain.alpha).abs() < 1e-3);
    assert!((cubed.beta.cbrt() - plain.beta).abs() < 1e-3);
    assert!((cubed.middle - plain.middle).abs() <= 1e-2 * plain.middle);
}

#[test]
fn codim1_positive_margin_for_clamped_height() {
    let f = ScalarMap::ClampedHeight {
        axis: 2,
        lo: -0.5,
        hi: 0.5,
    };
    let rep = check_codim1(&f, 0.2, 100_000, 9, &fast_opts()).unwrap();
    assert!(rep.monotone);
    assert!(rep.volume_consistent);
    // f^{-1}[-1/2, 1/2] is the whole sphere and p^{-1}[0.2, 0.8] the band
    // |x_2| <= 0.6, so the margin is 1 - 0.6 of the total
    assert_eq!(rep.alpha, -0.5);
    assert_eq!(rep.beta, 0.5);
    assert!((rep.margin - 0.4).abs() < 1e-12, "{}", rep.margin);
    assert!(matches!(
        check_codim1(&f, 0.7, 100_000, 0, &fast_opts()),
        Err(LabError::BadLevel(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn caps_complement(n in 1usize..8, rho in 0.0f64..=PI) {
        let total = sphere_volume(n);
        let s = cap_volume(n, rho) + cap_volume(n, PI - rho);
        prop_assert!((s - total).abs() <= 1e-10 * total);
    }

    #[test]
    fn cap_radius_inverts_volume(n in 1usize..6, rho in 0.01f64..3.1) {
        let r = cap_radius_for_volume(n, cap_volume(n, rho));
        prop_assert!((r - rho).abs() < 1e-8);
    }
}
