//! Monte-Carlo audits of a built [`SmallFiberMap`]: fiber volumes at sampled
//! images, and preimage multiplicity.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::slicer::VmaxCertificate;
use crate::sphere_map::{fiber_total_volume, sphere_to_cube, BoundaryPoint, SmallFiberMap};

pub const AUDIT_SCHEMA: &str = "fibermap.audit/1";
pub const MULTIPLICITY_SCHEMA: &str = "fibermap.multiplicity/1";

/// Above this fraction of degenerate samples the report is flagged.
pub const DEGENERACY_LIMIT: f64 = 0.01;

/// Distance within which a sample must lie on one of the extracted
/// components of its own fiber, before the layout's rounding allowance is
/// added.
pub const INVERSION_TOL: f64 = 1e-7;

/// Tolerance of the inversion check for `map`.
pub fn inversion_tol(map: &SmallFiberMap) -> f64 {
    INVERSION_TOL + map.embedding().offset_rounding()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    /// Uniform on `∂I^{n+1}`.
    Cube,
    /// Uniform on `S^n`, carried to the cube by radial projection.
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapIdentity {
    pub n: usize,
    pub q: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub r: u32,
    pub delta: f64,
}

impl MapIdentity {
    pub fn of(map: &SmallFiberMap) -> Self {
        MapIdentity {
            n: map.n(),
            q: map.q(),
            epsilon: map.epsilon(),
            seed: map.seed(),
            r: map.r(),
            delta: map.delta(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub volume: f64,
    pub components: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub threshold: f64,
    /// Samples whose fiber volume is at most `threshold`.
    pub count: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: String,
    pub map: MapIdentity,
    pub surface: Surface,
    /// Present for sphere audits: the radial projection distorts volumes by
    /// an unquantified bi-Lipschitz factor.
    pub caveat: Option<String>,
    pub samples: u64,
    pub audit_seed: u64,
    /// Fraction of samples on fibers of volume at most epsilon.
    pub coverage: f64,
    /// Fraction of samples on fibers of volume above epsilon.
    pub exceed_fraction: f64,
    pub exceed_stderr: f64,
    pub max_volume: f64,
    pub mean_volume: f64,
    pub v_max: VmaxCertificate,
    pub component_bound: f64,
    pub certified_bound: f64,
    pub max_degree: u64,
    pub max_components: usize,
    pub multiplicity_violations: u64,
    pub inversion_tol: f64,
    pub inversion_misses: u64,
    /// Samples whose own image had no preimage.
    pub empty_fibers: u64,
    pub degenerate_samples: u64,
    pub degenerate_fraction: f64,
    pub degeneracy_flag: bool,
    pub histogram: Vec<Threshold>,
    pub records: Vec<AuditRecord>,
    pub runtime_seconds: Option<f64>,
    pub within_budget: bool,
    pub within_bound: bool,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    pub samples: usize,
    pub seed: u64,
    pub surface: Surface,
    pub timing: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            samples: 10_000,
            seed: 0,
            surface: Surface::Cube,
            timing: false,
        }
    }
}

/// A uniform point of `∂I^{n+1}`.
pub fn sample_boundary<R: Rng>(g: &mut R, n: usize) -> BoundaryPoint {
    let face = g.random_range(0..2 * (n + 1));
    let local = (0..n).map(|_| g.random::<f64>()).collect();
    BoundaryPoint { face, local }
}

fn sample_point<R: Rng>(g: &mut R, n: usize, surface: Surface) -> BoundaryPoint {
    match surface {
        Surface::Cube => sample_boundary(g, n),
        Surface::Sphere => loop {
            let x = rng::unit_vector(g, n + 1);
            if let Ok(p) = sphere_to_cube(&x) {
                break p;
            }
        },
    }
}

struct Sample {
    record: AuditRecord,
    degenerate: bool,
    inverted: bool,
}

fn audit_one(map: &SmallFiberMap, x: &BoundaryPoint, tol: f64) -> Sample {
    let y = map.eval(x).expect("sampled points lie in the domain");
    let comps = map.fiber(&y);
    let fv = fiber_total_volume(map, &comps);
    let inverted = comps
        .iter()
        .any(|c| map.component_contains(c, x, tol));
    Sample {
        record: AuditRecord {
            volume: fv.volume,
            components: comps.len(),
        },
        degenerate: fv.degenerate_boxes > 0,
        inverted,
    }
}

pub fn audit(map: &SmallFiberMap, opts: &AuditOptions) -> AuditReport {
    let start = Instant::now();
    let n = map.n();
    let tol = inversion_tol(map);
    let samples: Vec<Sample> = rng::chunks(opts.samples)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut g = rng::stream(opts.seed, chunk);
            (0..len)
                .map(|_| audit_one(map, &sample_point(&mut g, n, opts.surface), tol))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let total = samples.len().max(1) as f64;
    let eps = map.epsilon();
    let exceed = samples.iter().filter(|s| s.record.volume > eps).count() as f64;
    let p = exceed / total;
    let max_volume = samples.iter().map(|s| s.record.volume).fold(0.0, f64::max);
    let mean_volume = samples.iter().map(|s| s.record.volume).sum::<f64>() / total;
    let max_degree = map.max_degree();
    let max_components = samples.iter().map(|s| s.record.components).max().unwrap_or(0);
    let violations = samples
        .iter()
        .filter(|s| s.record.components as u64 > max_degree)
        .count() as u64;
    let misses = samples.iter().filter(|s| !s.inverted).count() as u64;
    let empty = samples.iter().filter(|s| s.record.components == 0).count() as u64;
    let degenerate = samples.iter().filter(|s| s.degenerate).count() as u64;
    let certified = map.certified_fiber_bound();
    let mut thresholds: Vec<f64> = (-3..=3).map(|k| eps * 2f64.powi(k)).collect();
    thresholds.push(certified);
    let histogram = thresholds
        .into_iter()
        .map(|t| {
            let count = samples.iter().filter(|s| s.record.volume <= t).count() as u64;
            Threshold {
                threshold: t,
                count,
                fraction: count as f64 / total,
            }
        })
        .collect();
    let stderr = (p * (1.0 - p) / total).sqrt();
    let degenerate_fraction = degenerate as f64 / total;
    let within_budget = p <= eps + 3.0 * stderr;
    let within_bound = max_volume <= certified;
    AuditReport {
        schema: AUDIT_SCHEMA.to_string(),
        map: MapIdentity::of(map),
        surface: opts.surface,
        caveat: (opts.surface == Surface::Sphere).then(|| {
            "sampled on the sphere: volumes are measured on the cube boundary after radial \
             projection, whose distortion is not quantified"
                .to_string()
        }),
        samples: samples.len() as u64,
        audit_seed: opts.seed,
        coverage: 1.0 - p,
        exceed_fraction: p,
        exceed_stderr: stderr,
        max_volume,
        mean_volume,
        v_max: map.parameters().v_max.clone(),
        component_bound: map.component_bound(),
        certified_bound: certified,
        max_degree,
        max_components,
        multiplicity_violations: violations,
        inversion_tol: tol,
        inversion_misses: misses,
        empty_fibers: empty,
        degenerate_samples: degenerate,
        degenerate_fraction,
        degeneracy_flag: degenerate_fraction > DEGENERACY_LIMIT,
        histogram,
        records: samples.iter().map(|s| s.record).collect(),
        runtime_seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
        within_budget,
        within_bound,
        pass: within_budget && within_bound && violations == 0 && misses == 0 && empty == 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub schema: String,
    pub map: MapIdentity,
    pub samples: u64,
    pub seed: u64,
    pub max_degree: u64,
    /// Largest preimage count seen, and how often each count occurred.
    pub max_count: usize,
    pub counts: Vec<u64>,
    pub violations: u64,
}

/// Preimage counts of `phi` at random image points. A third of the points
/// are images `f(x)`, a third are those images moved uniformly inside the
/// quarter-tube, and a third have the depth coordinate rounded to an
/// integer, where parents and daughters meet.
pub fn multiplicity_audit(map: &SmallFiberMap, samples: usize, seed: u64) -> MultiplicityReport {
    let n = map.n();
    let emb = map.embedding();
    let w = emb.tube_width() / 4.0;
    let height = map.tree().height() as f64;
    let counts: Vec<usize> = rng::chunks(samples)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut g = rng::stream(seed, chunk);
            (0..len)
                .map(|i| {
                    let x = sample_boundary(&mut g, n);
                    let mut y = map.eval(&x).expect("sampled points lie in the domain");
                    match i % 3 {
                        1 => {
                            for v in y.iter_mut().skip(1) {
                                *v += g.random_range(-w..w) / (map.q() as f64).sqrt();
                            }
                        }
                        2 => y[0] = y[0].round().clamp(0.0, height),
                        _ => {}
                    }
                    emb.preimages(&y).len()
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    let max_degree = map.max_degree();
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0u64; max_count + 1];
    for &c in &counts {
        hist[c] += 1;
    }
    MultiplicityReport {
        schema: MULTIPLICITY_SCHEMA.to_string(),
        map: MapIdentity::of(map),
        samples: samples as u64,
        seed,
        max_degree,
        max_count,
        violations: counts.iter().filter(|&&c| c as u64 > max_degree).count() as u64,
        counts: hist,
    }
}
