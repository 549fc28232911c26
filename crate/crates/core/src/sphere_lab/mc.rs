//! Monte-Carlo estimates of neighbourhood volumes on `S^n` and the checks
//! built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::quad::cap_volume;
use super::region::{RegionOracle, ScalarMap};
use crate::geom::sphere_volume;
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum LabError {
    #[error("need at least 1000 samples, got {0}")]
    TooFewSamples(usize),
    #[error("neighbourhood radius must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("empty epsilon grid")]
    EmptyGrid,
    #[error("regions do not cover the sphere: {misses} of {samples} samples in neither")]
    NotCovering { misses: u64, samples: u64 },
    #[error("level y must lie in (0, 1/2], got {0}")]
    BadLevel(f64),
}

/// Count, for each sample point, which of `k` indicators hold.
pub fn mc_counts<F>(n: usize, samples: usize, seed: u64, k: usize, f: F) -> Vec<u64>
where
    F: Fn(&[f64], &mut [bool]) + Sync,
{
    rng::chunks(samples)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut g = rng::stream(seed, chunk);
            let mut counts = vec![0u64; k];
            let mut flags = vec![false; k];
            for _ in 0..len {
                let x = rng::unit_vector(&mut g, n + 1);
                flags.iter_mut().for_each(|b| *b = false);
                f(&x, &mut flags);
                for (c, &b) in counts.iter_mut().zip(&flags) {
                    *c += u64::from(b);
                }
            }
            counts
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0u64; k], |mut acc, c| {
            acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
            acc
        })
}

/// Values of `f` at the sample points, in sample order.
pub fn mc_values<F>(n: usize, samples: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    rng::chunks(samples)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut g = rng::stream(seed, chunk);
            (0..len)
                .map(|_| f(&rng::unit_vector(&mut g, n + 1)))
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodEstimate {
    pub epsilon: f64,
    pub samples: u64,
    pub hits: u64,
    /// Estimated `Vol_n(E_eps)`.
    pub estimate: f64,
    pub stderr: f64,
    /// Largest distance error of the oracle exceeds `eps / 10`.
    pub coarse: bool,
}

impl NeighborhoodEstimate {
    fn from_hits(n: usize, eps: f64, hits: u64, samples: usize, resolution: f64) -> Self {
        let total = sphere_volume(n);
        let p = hits as f64 / samples as f64;
        Self {
            epsilon: eps,
            samples: samples as u64,
            hits,
            estimate: total * p,
            stderr: total * (p * (1.0 - p) / samples as f64).sqrt(),
            coarse: resolution > eps / 10.0,
        }
    }
}

fn check_samples(samples: usize) -> Result<(), LabError> {
    if samples < 1000 {
        Err(LabError::TooFewSamples(samples))
    } else {
        Ok(())
    }
}

pub fn nbhd_volume_mc(
    n: usize,
    region: &RegionOracle,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<NeighborhoodEstimate, LabError> {
    Ok(nbhd_volume_grid(n, region, &[eps], samples, seed)?.remove(0))
}

/// Estimates for every `eps` in `grid` from one common sample.
pub fn nbhd_volume_grid(
    n: usize,
    region: &RegionOracle,
    grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<NeighborhoodEstimate>, LabError> {
    check_samples(samples)?;
    if grid.is_empty() {
        return Err(LabError::EmptyGrid);
    }
    if let Some(&e) = grid.iter().find(|e| !(**e > 0.0)) {
        return Err(LabError::BadEpsilon(e));
    }
    let counts = mc_counts(n, samples, seed, grid.len(), |x, flags| {
        let d = region.distance(x);
        for (f, e) in flags.iter_mut().zip(grid) {
            *f = d <= *e;
        }
    });
    let res = region.resolution();
    Ok(grid
        .iter()
        .zip(counts)
        .map(|(&e, h)| NeighborhoodEstimate::from_hits(n, e, h, samples, res))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub epsilon: f64,
    pub e: NeighborhoodEstimate,
    pub f: NeighborhoodEstimate,
    pub combined_stderr: f64,
    /// `est(E) - est(F)`.
    pub difference: f64,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub e: String,
    pub f: String,
    pub rows: Vec<CompareRow>,
    /// `est(E_eps) >= est(F_eps) - 3 se` on the whole grid.
    pub consistent: bool,
    pub verdict: String,
}

/// Empirical test of `E >=nbd F` on a finite grid of radii.
pub fn geqnbd_compare(
    n: usize,
    e: &RegionOracle,
    f: &RegionOracle,
    grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CompareReport, LabError> {
    let ee = nbhd_volume_grid(n, e, grid, samples, seed)?;
    let ff = nbhd_volume_grid(n, f, grid, samples, seed)?;
    let rows: Vec<CompareRow> = ee
        .into_iter()
        .zip(ff)
        .map(|(a, b)| {
            let se = a.stderr.hypot(b.stderr);
            let diff = a.estimate - b.estimate;
            CompareRow {
                epsilon: a.epsilon,
                combined_stderr: se,
                difference: diff,
                consistent: diff >= -3.0 * se,
                e: a,
                f: b,
            }
        })
        .collect();
    let consistent = rows.iter().all(|r| r.consistent);
    Ok(CompareReport {
        e: e.describe(),
        f: f.describe(),
        rows,
        consistent,
        verdict: if consistent {
            "consistent with E >=nbd F on the grid".to_string()
        } else {
            "inconsistent with E >=nbd F".to_string()
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub x: String,
    pub y: String,
    pub epsilon: f64,
    pub samples: u64,
    pub terms: Vec<Term>,
    /// `Vol((X ∩ Y)_eps)`.
    pub lhs: f64,
    /// `Vol(X_eps) - Vol(X) + Vol(Y_eps) - Vol(Y) + Vol(X ∩ Y)`.
    pub rhs: f64,
    pub combined_stderr: f64,
    pub consistent: bool,
}

/// Both sides of the neighbourhood decomposition identity for a cover
/// `X ∪ Y = S^n`; `xy` is an oracle for `X ∩ Y`.
pub fn check_decomposition(
    n: usize,
    x: &RegionOracle,
    y: &RegionOracle,
    xy: &RegionOracle,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<DecompositionReport, LabError> {
    check_samples(samples)?;
    if !(eps > 0.0) {
        return Err(LabError::BadEpsilon(eps));
    }
    let counts = mc_counts(n, samples, seed, 7, |p, flags| {
        let dx = x.distance(p);
        let dy = y.distance(p);
        let dxy = xy.distance(p);
        flags[0] = dxy <= eps;
        flags[1] = dx <= eps;
        flags[2] = x.contains(p);
        flags[3] = dy <= eps;
        flags[4] = y.contains(p);
        flags[5] = xy.contains(p);
        flags[6] = !flags[2] && !flags[4];
    });
    if counts[6] > 0 {
        return Err(LabError::NotCovering {
            misses: counts[6],
            samples: samples as u64,
        });
    }
    let total = sphere_volume(n);
    let names = ["(X∩Y)_eps", "X_eps", "X", "Y_eps", "Y", "X∩Y"];
    let terms: Vec<Term> = names
        .iter()
        .zip(&counts)
        .map(|(name, &h)| {
            let p = h as f64 / samples as f64;
            Term {
                name: name.to_string(),
                estimate: total * p,
                stderr: total * (p * (1.0 - p) / samples as f64).sqrt(),
            }
        })
        .collect();
    let lhs = terms[0].estimate;
    let rhs = terms[1].estimate - terms[2].estimate + terms[3].estimate - terms[4].estimate
        + terms[5].estimate;
    let se = terms.iter().map(|t| t.stderr * t.stderr).sum::<f64>().sqrt();
    Ok(DecompositionReport {
        x: x.describe(),
        y: y.describe(),
        epsilon: eps,
        samples: samples as u64,
        lhs,
        rhs,
        combined_stderr: se,
        consistent: (lhs - rhs).abs() <= 3.0 * se,
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codim1Report {
    pub map: ScalarMap,
    pub axis: usize,
    pub y: f64,
    pub samples: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Estimated `Vol f^{-1}[alpha, beta]`.
    pub middle: f64,
    pub middle_stderr: f64,
    /// Exact `Vol p^{-1}[y, 1 - y]`.
    pub target: f64,
    /// `(middle - target) / Vol(S^n)`.
    pub margin: f64,
    pub volume_consistent: bool,
    /// `alpha <= beta` and both brackets satisfy their defining inequality.
    pub monotone: bool,
    pub level_comparisons: Vec<(f64, CompareReport)>,
    pub consistent: bool,
}

/// Options for [`check_codim1`].
#[derive(Clone, Debug)]
pub struct Codim1Options {
    pub n: usize,
    pub axis: usize,
    pub eps_grid: Vec<f64>,
    /// Cloud grid side for the level sets; derived from the smallest radius
    /// when `None`.
    pub grid: Option<usize>,
    /// Bisection stops once the sublevel volume gap between the brackets is
    /// below this fraction of the sphere.
    pub volume_tol: f64,
}

impl Default for Codim1Options {
    fn default() -> Self {
        Self {
            n: 2,
            axis: 2,
            eps_grid: vec![0.05, 0.1, 0.2],
            grid: None,
            volume_tol: 1e-6,
        }
    }
}

/// Bisection for the boundary of a monotone predicate. `holds(lo)` must be
/// true and `holds(hi)` false; stops once `vol` differs by at most `tol`
/// across the bracket and returns the final `(lo, hi)`.
fn bisect<V: Fn(f64) -> f64, H: Fn(f64) -> bool>(
    mut lo: f64,
    mut hi: f64,
    vol: V,
    holds: H,
    tol: f64,
) -> (f64, f64) {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (vol(hi) - vol(lo)).abs() <= tol {
            break;
        }
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// The codimension-one coverage comparison for a test map `f` against the
/// normalised height `p = (x_axis + 1)/2`.
///
/// `alpha = sup{t : Vol f^{-1}(-inf, t) <= Vol p^{-1}[0, y]}` and
/// `beta = inf{t : Vol f^{-1}(t, inf) <= Vol p^{-1}[1 - y, 1]}` are located
/// by bisection on the empirical distribution; the inner end of each final
/// bracket is used. Then `Vol f^{-1}[alpha, beta] >= Vol p^{-1}[y, 1 - y]` is
/// tested, and for `t` in `{alpha, (alpha + beta)/2, beta}` the level set
/// `f^{-1}(t)` is compared with `p^{-1}(y)` in neighbourhood volume.
pub fn check_codim1(
    f: &ScalarMap,
    y: f64,
    samples: usize,
    seed: u64,
    opts: &Codim1Options,
) -> Result<Codim1Report, LabError> {
    check_samples(samples)?;
    if !(y > 0.0 && y <= 0.5) {
        return Err(LabError::BadLevel(y));
    }
    let n = opts.n;
    let total = sphere_volume(n);
    let mut values = mc_values(n, samples, seed, |x| f.eval(x));
    values.sort_by(f64::total_cmp);
    let frac = total / samples as f64;
    let below = |t: f64| values.partition_point(|&v| v < t) as f64 * frac;
    let above = |t: f64| (samples - values.partition_point(|&v| v <= t)) as f64 * frac;
    // p^{-1}[0, y] is the cap x_axis <= 2y - 1 around the negative pole
    let side = cap_volume(n, (1.0 - 2.0 * y).acos());
    let target = total - 2.0 * side;
    let vmin = values[0];
    let vmax = values[samples - 1];
    let span = (vmax - vmin).max(1.0);
    let tol = opts.volume_tol * total;
    let (alpha, _) = bisect(vmin, vmax + span, below, |t| below(t) <= side, tol);
    let (_, beta) = bisect(vmin - span, vmax, above, |t| above(t) > side, tol);
    let monotone = alpha <= beta && below(alpha) <= side && above(beta) <= side;
    let inside = values.partition_point(|&v| v <= beta) - values.partition_point(|&v| v < alpha);
    let p = inside as f64 / samples as f64;
    let middle = total * p;
    let se = total * (p * (1.0 - p) / samples as f64).sqrt();
    let eps_min = opts.eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let grid = opts
        .grid
        .unwrap_or_else(|| super::region::grid_for_resolution(n, eps_min / 10.0));
    let circle = RegionOracle::Latitude {
        axis: opts.axis,
        theta: (2.0 * y - 1.0).acos(),
    };
    let mut comparisons = Vec::new();
    for (i, t) in [alpha, 0.5 * (alpha + beta), beta].into_iter().enumerate() {
        let level = RegionOracle::level(n, super::region::LevelKind::LevelSet, f.clone(), t, grid);
        let rep = geqnbd_compare(n, &level, &circle, &opts.eps_grid, samples, seed ^ (0x9e37 + i as u64))?;
        comparisons.push((t, rep));
    }
    let volume_consistent = middle >= target - 3.0 * se;
    let consistent = volume_consistent && monotone && comparisons.iter().all(|(_, r)| r.consistent);
    Ok(Codim1Report {
        map: f.clone(),
        axis: opts.axis,
        y,
        samples: samples as u64,
        alpha,
        beta,
        middle,
        middle_stderr: se,
        target,
        margin: (middle - target) / total,
        volume_consistent,
        monotone,
        level_comparisons: comparisons,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn whole_and_antipodes() {
        let w = nbhd_volume_mc(2, &RegionOracle::Whole, 0.1, 2000, 0).unwrap();
        assert_eq!(w.estimate, 4.0 * PI);
        let pts = RegionOracle::Points(vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]);
        let e = nbhd_volume_mc(2, &pts, PI / 2.0, 5000, 0).unwrap();
        assert!((e.estimate - 4.0 * PI).abs() < 1e-12);
        assert!(nbhd_volume_mc(2, &pts, 0.1, 10, 0).is_err());
    }

    #[test]
    fn equator_band() {
        let eq = RegionOracle::coordinate_subsphere(2, 1);
        let est = nbhd_volume_mc(2, &eq, 0.3, 200_000, 4).unwrap();
        assert!((est.estimate - 4.0 * PI * 0.3f64.sin()).abs() < 3.0 * est.stderr);
    }

    #[test]
    fn partition_independent() {
        let eq = RegionOracle::coordinate_subsphere(2, 1);
        let a = nbhd_volume_mc(2, &eq, 0.3, 40_000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| nbhd_volume_mc(2, &eq, 0.3, 40_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn hemisphere_decomposition() {
        let x = RegionOracle::hemisphere(vec![0.0, 0.0, 1.0]);
        let y = RegionOracle::hemisphere(vec![0.0, 0.0, -1.0]);
        let xy = RegionOracle::coordinate_subsphere(2, 1);
        let rep = check_decomposition(2, &x, &y, &xy, 0.2, 100_000, 1).unwrap();
        assert!(rep.consistent, "{rep:?}");
        let a = RegionOracle::Cap {
            center: vec![0.0, 0.0, 1.0],
            radius: 0.3,
        };
        let b = RegionOracle::Cap {
            center: vec![0.0, 0.0, -1.0],
            radius: 0.3,
        };
        assert!(matches!(
            check_decomposition(2, &a, &b, &a, 0.2, 10_000, 1),
            Err(LabError::NotCovering { .. })
        ));
    }

    #[test]
    fn height_baseline() {
        let opts = Codim1Options {
            grid: Some(120),
            eps_grid: vec![0.1, 0.2],
            ..Codim1Options::default()
        };
        let rep = check_codim1(&ScalarMap::Height { axis: 2 }, 0.2, 50_000, 3, &opts).unwrap();
        assert!((rep.alpha - 0.2).abs() < 0.02, "{}", rep.alpha);
        assert!((rep.beta - 0.8).abs() < 0.02, "{}", rep.beta);
        assert!(rep.volume_consistent);
        assert!(rep.margin.abs() < 0.01);
    }
}
