//! Limit cone estimation: Jordan-projection rays of enumerated words,
//! projective slice geometry, convex hull of the ray set, boundary
//! membership, and the eigenvalue-gap ratio audit for generator pairs.
//!
//! The cone of a subgroup is approximated from inside by the rays
//! through the Jordan projections of its loxodromic elements up to a
//! word-length horizon. For n = 3 the projectivized chamber is a
//! segment, charted by a fixed barycentric pair so plots and hulls are
//! comparable across runs.

use crate::config::TAU_HULL;
use crate::spectral::{jordan_projection, AVector, SpectralError};
use crate::words::{enumerate, GeneratorSet, Word};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rays closer than this (sup-norm on the l1-normalized coordinates)
/// are merged during collection.
pub const RAY_DEDUP_TOL: f64 = 1e-10;

/// Slack added to the generator ratio bound before flagging violations.
pub const RATIO_SLACK: f64 = 1e-8;

/// Words whose bottom eigenvalue gap falls below this are skipped by the
/// ratio audit; such words are not loxodromic.
pub const RATIO_DENOM_GUARD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("the estimate has an empty hull; no loxodromic words were found")]
    EmptyHull,
    #[error("vector is numerically zero")]
    NearZeroVector,
    #[error("ratio audit needs n >= 3, got n = {n}")]
    DimensionTooSmall { n: usize },
    #[error("generator {name} is not loxodromic")]
    GeneratorNotLoxodromic { name: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// One ray of a cone estimate: a normalized Jordan projection with its
/// witnessing word.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ray {
    /// Jordan projection scaled so the coordinates' absolute values sum
    /// to 2 (equivalently, the positive part sums to 1).
    pub l1: AVector,
    /// The same ray scaled so the extreme gap `v_1 - v_n` is 1.
    pub gap: AVector,
    /// Fixed chart point for n = 3: `x = a_12 / (a_12 + a_23)` of the
    /// simple root values, stored as the barycentric pair `(x, 1 - x)`.
    pub slice: Option<[f64; 2]>,
    /// Shortest (shortlex-first) word whose Jordan projection spans the
    /// ray.
    pub word: Word,
}

/// Inner approximation of a limit cone at a word-length horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeEstimate {
    pub n: usize,
    /// Deduplicated rays in first-seen (shortlex) order.
    pub rays: Vec<Ray>,
    /// Indices of the extreme rays. For n = 3 these are ordered along
    /// the slice chart; for n > 3 the set comes from separating
    /// functionals and is experimental.
    pub hull: Vec<usize>,
    /// Requested word-length horizon.
    pub max_word_len: usize,
    /// Horizon the enumeration actually exhausted.
    pub horizon: usize,
    /// True for n > 3, where the extreme-ray list has no facet
    /// structure and separating functionals are heuristic.
    pub experimental: bool,
}

/// Verdict of a hull boundary membership test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryVerdict {
    /// True iff the distance below is at most the hull tolerance.
    pub on_boundary: bool,
    /// Distance from the normalized vector to the nearest extreme point
    /// of the hull, in slice coordinates.
    pub distance_to_hull_boundary: f64,
    /// The gap ratio `a_12(v) / a_{n-1,n}(v)`; absent when the bottom
    /// gap vanishes.
    pub supporting_ratio: Option<f64>,
}

/// One word exceeding the generator ratio bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioViolation {
    pub word: Word,
    pub ratio: f64,
}

/// Result of the eigenvalue-gap ratio audit over cyclically reduced
/// words.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    /// `max(ratio(a), ratio(a^-1)) + RATIO_SLACK` for the first
    /// generator `a`.
    pub bound: f64,
    /// Name of the generator the bound comes from.
    pub generator: String,
    /// Cyclically reduced words whose ratio was checked.
    pub checked: usize,
    /// Words skipped by the bottom-gap guard (not loxodromic).
    pub skipped: Vec<Word>,
    /// Words whose ratio exceeds the bound.
    pub violations: Vec<RatioViolation>,
    /// Largest ratio among checked words.
    pub max_ratio: f64,
    /// A word attaining `max_ratio`.
    pub max_ratio_word: Option<Word>,
}

/// Gap ratio `a_12(v) / a_{n-1,n}(v)` of a chamber vector; None when the
/// bottom gap is below the guard.
pub fn gap_ratio(v: &AVector) -> Option<f64> {
    let n = v.n();
    let denom = v.root(n - 2, n - 1);
    if denom < RATIO_DENOM_GUARD {
        return None;
    }
    Some(v.root(0, 1) / denom)
}

/// Chart point of a chamber vector for n = 3, scale invariant.
fn slice_point(v: &AVector) -> Option<[f64; 2]> {
    if v.n() != 3 {
        return None;
    }
    let a12 = v.root(0, 1);
    let a23 = v.root(1, 2);
    let s = a12 + a23;
    if !(s > 0.0) {
        return None;
    }
    let x = a12 / s;
    Some([x, 1.0 - x])
}

/// Estimates the limit cone: Jordan rays of every loxodromic element up
/// to `max_len`, deduplicated, with the hull of the ray set.
pub fn cone_estimate(gens: &GeneratorSet, max_len: usize) -> Result<ConeEstimate, ConeError> {
    let n = gens.n();
    let en = enumerate(gens, max_len, true);
    let entries: Vec<_> = en.iter().filter(|e| !e.word.is_empty()).collect();
    let lambdas: Vec<Option<AVector>> = entries
        .par_iter()
        .map(|e| {
            let lambda = jordan_projection(&e.matrix)?;
            // Loxodromic means regular: every simple root positive. The
            // exact classifier is not needed for ray collection; a
            // strictly regular Jordan projection is the defining datum.
            Ok(if lambda.is_regular(0.0) { Some(lambda) } else { None })
        })
        .collect::<Result<_, SpectralError>>()?;
    let mut rays: Vec<Ray> = Vec::new();
    for (entry, lambda) in entries.iter().zip(lambdas) {
        let Some(lambda) = lambda else { continue };
        let l1_mass: f64 = lambda.as_slice().iter().map(|x| x.abs()).sum();
        let l1 = lambda.scaled(2.0 / l1_mass);
        let dup = rays.iter().any(|r| {
            r.l1.as_slice()
                .iter()
                .zip(l1.as_slice())
                .all(|(a, b)| (a - b).abs() <= RAY_DEDUP_TOL)
        });
        if dup {
            continue;
        }
        let gap = lambda.scaled(1.0 / lambda.root(0, n - 1));
        let slice = slice_point(&lambda);
        rays.push(Ray { l1, gap, slice, word: entry.word.clone() });
    }
    let (hull, experimental) = if n == 3 {
        let pts: Vec<[f64; 2]> = rays.iter().map(|r| r.slice.expect("regular ray charts")).collect();
        (planar_hull(&pts), false)
    } else if n > 3 {
        (extreme_rays_by_support(&rays), true)
    } else {
        // n = 2: the chamber is a half line, every ray is the same
        // extreme ray.
        (if rays.is_empty() { Vec::new() } else { vec![0] }, false)
    };
    Ok(ConeEstimate { n, rays, hull, max_word_len: max_len, horizon: en.completed_len, experimental })
}

/// Cross products below this count as collinear when building the hull.
/// The segment chart produces points collinear up to f64 rounding, so
/// near-zero turns of either sign must not create spurious corners.
const HULL_TURN_EPS: f64 = 1e-12;

/// Andrew's monotone chain over chart points; turns below
/// `HULL_TURN_EPS` count as collinear and are dropped. Returns indices
/// into `pts`, ordered along the chain. The degenerate collinear case
/// (the only one the segment chart produces) yields the two endpoints.
fn planar_hull(pts: &[[f64; 2]]) -> Vec<usize> {
    if pts.is_empty() {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| {
        pts[i][0]
            .total_cmp(&pts[j][0])
            .then(pts[i][1].total_cmp(&pts[j][1]))
    });
    idx.dedup_by(|&mut i, &mut j| pts[i] == pts[j]);
    if idx.len() <= 2 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1])
            - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= HULL_TURN_EPS
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= HULL_TURN_EPS
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Heuristic extreme-ray detection for n > 3: a ray is kept when some
/// separating functional (centroid offset or pairwise difference) puts
/// it strictly beyond every other ray. Sound for "extreme", incomplete
/// in principle; flagged experimental by the caller.
fn extreme_rays_by_support(rays: &[Ray]) -> Vec<usize> {
    if rays.len() <= 1 {
        return (0..rays.len()).collect();
    }
    let n = rays[0].l1.n();
    let m = rays.len();
    let coords = |i: usize| rays[i].l1.as_slice();
    let mut centroid = vec![0.0; n];
    for i in 0..m {
        for (c, x) in centroid.iter_mut().zip(coords(i)) {
            *c += x / m as f64;
        }
    }
    let mut out = Vec::new();
    for i in 0..m {
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        dirs.push(coords(i).iter().zip(&centroid).map(|(x, c)| x - c).collect());
        for j in 0..m {
            if j != i {
                dirs.push(coords(i).iter().zip(coords(j)).map(|(x, y)| x - y).collect());
            }
        }
        let separated = dirs.iter().any(|d| {
            let fi: f64 = coords(i).iter().zip(d).map(|(x, y)| x * y).sum();
            (0..m)
                .filter(|&j| j != i)
                .all(|j| coords(j).iter().zip(d).map(|(x, y)| x * y).sum::<f64>() < fi - 1e-12)
        });
        if separated {
            out.push(i);
        }
    }
    out
}

/// Tests whether a chamber vector's ray lies on the boundary of the
/// estimated cone, at the hull tolerance.
pub fn boundary_test(est: &ConeEstimate, v: &AVector) -> Result<BoundaryVerdict, ConeError> {
    if est.hull.is_empty() {
        return Err(ConeError::EmptyHull);
    }
    if !(v.norm() > 1e-12) {
        return Err(ConeError::NearZeroVector);
    }
    let supporting_ratio = gap_ratio(v);
    let distance = if est.n == 3 {
        let p = slice_point(v).ok_or(ConeError::NearZeroVector)?;
        est.hull
            .iter()
            .map(|&i| {
                let q = est.rays[i].slice.expect("hull rays chart");
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    } else {
        let mass: f64 = v.as_slice().iter().map(|x| x.abs()).sum();
        if !(mass > 0.0) {
            return Err(ConeError::NearZeroVector);
        }
        let vn = v.scaled(2.0 / mass);
        est.hull
            .iter()
            .map(|&i| {
                est.rays[i]
                    .l1
                    .as_slice()
                    .iter()
                    .zip(vn.as_slice())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    };
    Ok(BoundaryVerdict {
        on_boundary: distance <= TAU_HULL,
        distance_to_hull_boundary: distance,
        supporting_ratio,
    })
}

/// Audits the gap-ratio inequality over all cyclically reduced words up
/// to `max_len`: every word's ratio must stay within the bound set by
/// the first generator and its inverse, up to `RATIO_SLACK`.
///
/// Words are deduplicated per group element; non-cyclically-reduced
/// witnesses are redundant (their cyclic core has the same eigenvalues
/// and is shorter) and are not re-checked. Words whose bottom gap falls
/// under the guard are skipped and reported.
pub fn ratio_check(gens: &GeneratorSet, max_len: usize) -> Result<RatioReport, ConeError> {
    let n = gens.n();
    if n < 3 {
        return Err(ConeError::DimensionTooSmall { n });
    }
    for i in 0..gens.rank() {
        let lambda = jordan_projection(gens.generator(i))?;
        if !lambda.is_regular(0.0) {
            return Err(ConeError::GeneratorNotLoxodromic { name: gens.name(i).to_string() });
        }
    }
    let lambda_a = jordan_projection(gens.generator(0))?;
    let ra = gap_ratio(&lambda_a).expect("regular vector has positive gaps");
    let ra_inv = gap_ratio(&lambda_a.opposition()).expect("opposition of regular is regular");
    let bound = ra.max(ra_inv) + RATIO_SLACK;
    let en = enumerate(gens, max_len, true);
    let entries: Vec<_> = en
        .iter()
        .filter(|e| !e.word.is_empty() && e.word.is_cyclically_reduced())
        .collect();
    let ratios: Vec<Option<f64>> = entries
        .par_iter()
        .map(|e| Ok(gap_ratio(&jordan_projection(&e.matrix)?)))
        .collect::<Result<_, SpectralError>>()?;
    let mut report = RatioReport {
        bound,
        generator: gens.name(0).to_string(),
        checked: 0,
        skipped: Vec::new(),
        violations: Vec::new(),
        max_ratio: f64::NEG_INFINITY,
        max_ratio_word: None,
    };
    for (entry, ratio) in entries.iter().zip(ratios) {
        match ratio {
            None => report.skipped.push(entry.word.clone()),
            Some(r) => {
                report.checked += 1;
                if r > report.max_ratio {
                    report.max_ratio = r;
                    report.max_ratio_word = Some(entry.word.clone());
                }
                if r > bound {
                    report.violations.push(RatioViolation { word: entry.word.clone(), ratio: r });
                }
            }
        }
    }
    Ok(report)
}
