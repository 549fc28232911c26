//! Shipped test inventories for the four appendix suites.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::mc::{
    check_codim1, check_decomposition, geqnbd_compare, mc_values, nbhd_volume_grid,
    Codim1Options, LabError,
};
use super::quad::{cap_radius_for_volume, cap_volume, equator_tube_volume};
use super::region::{grid_for_resolution, LevelKind, RegionOracle, ScalarMap};

pub const SUITE_SCHEMA: &str = "fibermap.appendix/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Isoperimetric,
    Decomposition,
    Codim1,
    Tubes,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Isoperimetric,
        Suite::Decomposition,
        Suite::Codim1,
        Suite::Tubes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Isoperimetric => "isoperimetric",
            Suite::Decomposition => "decomposition",
            Suite::Codim1 => "codim1",
            Suite::Tubes => "tubes",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Data for a line chart of volume against radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub consistent: bool,
    pub detail: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: Suite,
    pub samples: u64,
    pub seed: u64,
    pub instances: Vec<Instance>,
    pub failing: Vec<String>,
    pub consistent: bool,
    pub charts: Vec<Chart>,
}

impl SuiteReport {
    fn new(suite: Suite, samples: usize, seed: u64, instances: Vec<Instance>, charts: Vec<Chart>) -> Self {
        let failing: Vec<String> = instances
            .iter()
            .filter(|i| !i.consistent)
            .map(|i| i.name.clone())
            .collect();
        SuiteReport {
            schema: SUITE_SCHEMA.to_string(),
            suite,
            samples: samples as u64,
            seed,
            consistent: failing.is_empty(),
            failing,
            instances,
            charts,
        }
    }
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    seed ^ (k << 40)
}

fn north(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[n] = 1.0;
    v
}

fn axis_vector(n: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[i] = s;
    v
}

pub fn run_suite(suite: Suite, samples: usize, seed: u64) -> Result<SuiteReport, LabError> {
    match suite {
        Suite::Tubes => tubes(samples, seed),
        Suite::Isoperimetric => isoperimetric(samples, seed),
        Suite::Decomposition => decomposition(samples, seed),
        Suite::Codim1 => codim1(samples, seed),
    }
}

pub const TUBE_CASES: [(usize, usize); 3] = [(2, 1), (3, 1), (3, 2)];
pub const TUBE_EPS: [f64; 3] = [0.1, 0.3, 0.6];

/// Quadrature tube volume against MC of the explicit great `S^{n-q}`.
fn tubes(samples: usize, seed: u64) -> Result<SuiteReport, LabError> {
    let mut instances = Vec::new();
    let mut charts = Vec::new();
    for (k, &(n, q)) in TUBE_CASES.iter().enumerate() {
        let sub = RegionOracle::coordinate_subsphere(n, n - q);
        let est = nbhd_volume_grid(n, &sub, &TUBE_EPS, samples, sub_seed(seed, k as u64))?;
        let mut exact_pts = Vec::new();
        let mut mc_pts = Vec::new();
        for e in &est {
            let exact = equator_tube_volume(n, q, e.epsilon);
            let ok = (e.estimate - exact).abs() <= 3.0 * e.stderr;
            exact_pts.push((e.epsilon, exact));
            mc_pts.push((e.epsilon, e.estimate));
            instances.push(Instance {
                name: format!("tube n={n} q={q} eps={}", e.epsilon),
                consistent: ok,
                detail: json!({
                    "n": n, "q": q, "epsilon": e.epsilon, "exact": exact,
                    "estimate": e.estimate, "stderr": e.stderr,
                    "z": (e.estimate - exact) / e.stderr,
                }),
            });
        }
        charts.push(Chart {
            title: format!("tube around great S^{} in S^{n}", n - q),
            x_label: "epsilon".into(),
            y_label: "volume".into(),
            series: vec![
                Series { name: "quadrature".into(), points: exact_pts },
                Series { name: "monte carlo".into(), points: mc_pts },
            ],
        });
    }
    Ok(SuiteReport::new(Suite::Tubes, samples, seed, instances, charts))
}

pub const ISO_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];

fn compare_instance(
    name: &str,
    n: usize,
    e: &RegionOracle,
    f: &RegionOracle,
    grid: &[f64],
    samples: usize,
    seed: u64,
    charts: &mut Vec<Chart>,
) -> Result<Instance, LabError> {
    let rep = geqnbd_compare(n, e, f, grid, samples, seed)?;
    charts.push(Chart {
        title: name.to_string(),
        x_label: "epsilon".into(),
        y_label: "neighbourhood volume".into(),
        series: vec![
            Series {
                name: rep.e.clone(),
                points: rep.rows.iter().map(|r| (r.epsilon, r.e.estimate)).collect(),
            },
            Series {
                name: rep.f.clone(),
                points: rep.rows.iter().map(|r| (r.epsilon, r.f.estimate)).collect(),
            },
        ],
    });
    Ok(Instance {
        name: name.to_string(),
        consistent: rep.consistent,
        detail: serde_json::to_value(&rep).expect("report serialises"),
    })
}

/// Spot checks of the isoperimetric inequality and the `>=nbd` order on
/// `S^2`.
fn isoperimetric(samples: usize, seed: u64) -> Result<SuiteReport, LabError> {
    let n = 2;
    let mut charts = Vec::new();
    let mut instances = Vec::new();
    let rho = 0.3;
    let two_caps = RegionOracle::Union(vec![
        RegionOracle::Cap { center: north(n), radius: rho },
        RegionOracle::Cap { center: axis_vector(n, 0, 1.0), radius: rho },
    ]);
    let ball = RegionOracle::Cap {
        center: north(n),
        radius: cap_radius_for_volume(n, 2.0 * cap_volume(n, rho)),
    };
    instances.push(compare_instance(
        "two caps >=nbd ball of equal volume",
        n, &two_caps, &ball, &ISO_GRID, samples, sub_seed(seed, 0), &mut charts,
    )?);
    let equator = RegionOracle::coordinate_subsphere(n, 1);
    instances.push(compare_instance(
        "equator >=nbd equator",
        n, &equator, &equator, &ISO_GRID, samples, sub_seed(seed, 1), &mut charts,
    )?);
    let point = RegionOracle::Points(vec![north(n)]);
    instances.push(compare_instance(
        "equator >=nbd point",
        n, &equator, &point, &ISO_GRID, samples, sub_seed(seed, 2), &mut charts,
    )?);
    let band = RegionOracle::Latitude { axis: n, theta: PI / 3.0 };
    instances.push(compare_instance(
        "equator >=nbd small circle",
        n, &equator, &band, &ISO_GRID, samples, sub_seed(seed, 3), &mut charts,
    )?);
    Ok(SuiteReport::new(Suite::Isoperimetric, samples, seed, instances, charts))
}

pub const DECOMPOSITION_EPS: f64 = 0.1;
/// Seed of the shipped random bump function.
pub const BUMPS_SEED: u64 = 7;

/// The random bump map of the decomposition inventory and its median level.
pub fn shipped_bumps() -> (ScalarMap, f64) {
    let map = ScalarMap::random_bumps(2, 5, BUMPS_SEED);
    let mut v = mc_values(2, 10_001, BUMPS_SEED, |x| map.eval(x));
    v.sort_by(f64::total_cmp);
    let t = v[v.len() / 2];
    (map, t)
}

fn decomposition(samples: usize, seed: u64) -> Result<SuiteReport, LabError> {
    let n = 2;
    let eps = DECOMPOSITION_EPS;
    let mut pairs: Vec<(String, RegionOracle, RegionOracle, RegionOracle)> = Vec::new();
    pairs.push((
        "hemispheres".into(),
        RegionOracle::hemisphere(north(n)),
        RegionOracle::hemisphere(axis_vector(n, n, -1.0)),
        RegionOracle::coordinate_subsphere(n, 1),
    ));
    let cap = RegionOracle::Cap { center: north(n), radius: 0.7 };
    pairs.push(("whole and cap".into(), RegionOracle::Whole, cap.clone(), cap));
    let (map, t) = shipped_bumps();
    let level = RegionOracle::level(n, LevelKind::LevelSet, map, t, grid_for_resolution(n, eps / 10.0));
    pairs.push((
        "bump sublevel and superlevel".into(),
        level.with_kind(LevelKind::Sublevel).expect("level oracle"),
        level.with_kind(LevelKind::Superlevel).expect("level oracle"),
        level,
    ));
    let mut instances = Vec::new();
    for (k, (name, x, y, xy)) in pairs.iter().enumerate() {
        let rep = check_decomposition(n, x, y, xy, eps, samples, sub_seed(seed, k as u64))?;
        instances.push(Instance {
            name: name.clone(),
            consistent: rep.consistent,
            detail: serde_json::to_value(&rep).expect("report serialises"),
        });
    }
    Ok(SuiteReport::new(Suite::Decomposition, samples, seed, instances, Vec::new()))
}

pub const CODIM1_Y: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    /// `Vol f^{-1}[alpha, beta]` equals the target within 3 stderr.
    Equality,
    /// The inequality holds with margin above 3 stderr.
    Margin,
    /// The inequality holds within 3 stderr.
    Inequality,
}

/// The codim1 inventory on `S^2`, comparison map the height along `x_2`.
pub fn codim1_maps() -> Vec<(&'static str, ScalarMap, Expect)> {
    vec![
        ("height", ScalarMap::Height { axis: 2 }, Expect::Equality),
        ("cubed height", ScalarMap::CubedHeight { axis: 2 }, Expect::Equality),
        (
            "clamped height",
            ScalarMap::ClampedHeight { axis: 2, lo: -0.5, hi: 0.5 },
            Expect::Margin,
        ),
        (
            "tilted height with floor",
            ScalarMap::TiltedFloor { axis: 2, tilt_axis: 0, tilt: 0.2, floor: -0.4 },
            Expect::Margin,
        ),
        (
            "tilted height",
            ScalarMap::TiltedFloor { axis: 2, tilt_axis: 0, tilt: 0.2, floor: -2.0 },
            Expect::Inequality,
        ),
    ]
}

fn codim1(samples: usize, seed: u64) -> Result<SuiteReport, LabError> {
    let opts = Codim1Options::default();
    let total = crate::geom::sphere_volume(opts.n);
    let mut instances = Vec::new();
    let mut charts = Vec::new();
    for (k, (name, map, expect)) in codim1_maps().into_iter().enumerate() {
        let rep = check_codim1(&map, CODIM1_Y, samples, sub_seed(seed, k as u64), &opts)?;
        let gap = rep.middle - rep.target;
        let ok = rep.consistent
            && match expect {
                Expect::Equality => gap.abs() <= 3.0 * rep.middle_stderr,
                Expect::Margin => gap > 3.0 * rep.middle_stderr,
                Expect::Inequality => true,
            };
        if let Some((t, mid)) = rep.level_comparisons.get(1) {
            charts.push(Chart {
                title: format!("{name}: level t = {t:.4} against p = {CODIM1_Y}"),
                x_label: "epsilon".into(),
                y_label: "neighbourhood volume".into(),
                series: vec![
                    Series {
                        name: "f level set".into(),
                        points: mid.rows.iter().map(|r| (r.epsilon, r.e.estimate)).collect(),
                    },
                    Series {
                        name: "p level set".into(),
                        points: mid.rows.iter().map(|r| (r.epsilon, r.f.estimate)).collect(),
                    },
                ],
            });
        }
        let mut detail = serde_json::to_value(&rep).expect("report serialises");
        detail["expect"] = json!(expect);
        detail["margin_stderr"] = json!(rep.middle_stderr / total);
        instances.push(Instance {
            name: name.to_string(),
            consistent: ok,
            detail,
        });
    }
    Ok(SuiteReport::new(Suite::Codim1, samples, seed, instances, charts))
}
