//! Full flags of R^n, their metric geometry, and the flag dynamics of
//! loxodromic elements: transversality margins, principal-angle
//! distance, fixed flags, limit-set sampling and contraction tables.
//!
//! A flag is stored as an orthonormal frame; column k spans the new
//! direction of the k-dimensional piece, so the first k columns are an
//! orthonormal basis of V_k. Every operation that could disturb
//! orthonormality re-runs Gram-Schmidt, keeping the Gram residual at
//! working precision throughout.

use crate::exactmat::RationalMatrix;
use crate::random::gram_schmidt_columns;
use crate::spectral::{classify, jacobi_symmetric, SpectralClass, SpectralError, DEFAULT_ORDER_BOUND};
use crate::words::{enumerate, GeneratorSet, Word};
use crate::xfloat::{ratio_xf, Xf};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Flags whose pairwise distance falls below this are treated as the
/// same limit point when sampling.
pub const LIMIT_DEDUP_TOL: f64 = 1e-8;

/// Residual bar for certifying a computed fixed flag: the flag must move
/// by at most this much under the element that is supposed to fix it.
pub const FIXED_FLAG_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FlagError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("frame is numerically rank deficient")]
    DegenerateFrame,
    #[error("fixed flags require a loxodromic element, found {found:?}")]
    NotLoxodromic { found: SpectralClass },
    #[error("fixed-flag residual {residual:.3e} exceeds {FIXED_FLAG_RESIDUAL:.0e}")]
    ConditioningFailure { residual: f64 },
    #[error("projections to point and dual line are specific to n = 3, got n = {got}")]
    NotSl3 { got: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A full flag, represented by an orthonormal frame in column-major
/// order: `V_k` is the span of columns `0..k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "FlagWire", try_from = "FlagWire")]
pub struct Flag {
    n: usize,
    cols: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FlagWire {
    n: usize,
    cols: Vec<f64>,
}

impl From<Flag> for FlagWire {
    fn from(f: Flag) -> FlagWire {
        FlagWire { n: f.n, cols: f.cols }
    }
}

impl TryFrom<FlagWire> for Flag {
    type Error = String;

    fn try_from(w: FlagWire) -> Result<Flag, String> {
        Flag::from_columns(w.n, w.cols).map_err(|e| e.to_string())
    }
}

impl Flag {
    /// The standard flag: `V_k = span(e_1, ..., e_k)`.
    pub fn standard(n: usize) -> Flag {
        let mut cols = vec![0.0; n * n];
        for k in 0..n {
            cols[k * n + k] = 1.0;
        }
        Flag { n, cols }
    }

    /// The standard flag read backwards: `V_k = span(e_n, ..., e_{n-k+1})`.
    /// This is the image of the standard flag under the order-reversing
    /// permutation, and the unique flag at maximal distance from it.
    pub fn reversed(n: usize) -> Flag {
        let mut cols = vec![0.0; n * n];
        for k in 0..n {
            cols[k * n + (n - 1 - k)] = 1.0;
        }
        Flag { n, cols }
    }

    /// Builds a flag from `n` spanning columns (column-major), running
    /// Gram-Schmidt in order. Fails when the columns do not span.
    pub fn from_columns(n: usize, mut cols: Vec<f64>) -> Result<Flag, FlagError> {
        if cols.len() != n * n {
            return Err(FlagError::Dimension { expected: n, got: cols.len() });
        }
        if !cols.iter().all(|x| x.is_finite()) || !gram_schmidt_columns(&mut cols, n) {
            return Err(FlagError::DegenerateFrame);
        }
        Ok(Flag { n, cols })
    }

    /// Wraps a frame that is already orthonormal (checked in debug).
    pub(crate) fn from_orthonormal(n: usize, cols: Vec<f64>) -> Flag {
        let f = Flag { n, cols };
        debug_assert!(f.gram_residual() < 1e-10);
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Column `k` of the frame (the k-th new direction).
    pub fn col(&self, k: usize) -> &[f64] {
        &self.cols[k * self.n..(k + 1) * self.n]
    }

    /// The whole frame, column-major.
    pub fn cols(&self) -> &[f64] {
        &self.cols
    }

    /// Largest deviation of the frame's Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += self.cols[a * n + i] * self.cols[b * n + i];
                }
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// The image flag under an invertible matrix given row-major. Any
    /// overall scale of `m` cancels, so pre-scaled mantissas are fine.
    pub fn transformed(&self, m: &[f64]) -> Result<Flag, FlagError> {
        let n = self.n;
        if m.len() != n * n {
            return Err(FlagError::Dimension { expected: n, got: m.len() });
        }
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += m[i * n + j] * self.cols[k * n + j];
                }
                out[k * n + i] = s;
            }
        }
        Flag::from_columns(n, out)
    }

    /// The image flag under an exact matrix.
    ///
    /// The product and the orthogonalization are carried out in exact
    /// rational arithmetic before anything is rounded, because a stiff
    /// element (a high power, say) maps generic frames so close to its
    /// attracting flag that the small orthogonal components fall below
    /// f64 cancellation noise; exactness keeps every level of the image
    /// flag correct at any stiffness, and extended-range conversion at
    /// the end handles entries far outside f64 range.
    pub fn transformed_by(&self, g: &RationalMatrix) -> Result<Flag, FlagError> {
        let n = self.n;
        if g.n() != n {
            return Err(FlagError::Dimension { expected: n, got: g.n() });
        }
        let frame: Vec<BigRational> = self
            .cols
            .iter()
            .map(|&x| BigRational::from_float(x).ok_or(FlagError::DegenerateFrame))
            .collect::<Result<_, _>>()?;
        // Image columns, exactly.
        let mut img: Vec<Vec<BigRational>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut col = Vec::with_capacity(n);
            for i in 0..n {
                let mut s = BigRational::zero();
                for j in 0..n {
                    s += g.entry(i, j) * &frame[k * n + j];
                }
                col.push(s);
            }
            img.push(col);
        }
        // Exact Gram-Schmidt, unnormalized (norms need square roots, so
        // normalization waits for the float conversion).
        let mut ortho: Vec<Vec<BigRational>> = Vec::with_capacity(n);
        for mut v in img {
            for q in &ortho {
                let den = rat_dot(q, q);
                if den.is_zero() {
                    return Err(FlagError::DegenerateFrame);
                }
                let f = rat_dot(&v, q) / den;
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= &f * qi;
                }
            }
            ortho.push(v);
        }
        let mut cols = vec![0.0; n * n];
        for (k, v) in ortho.iter().enumerate() {
            let unit = rat_unit_f64(v).ok_or(FlagError::DegenerateFrame)?;
            cols[k * n..(k + 1) * n].copy_from_slice(&unit);
        }
        // Directions are exact to rounding; one float polish pass makes
        // the frame orthonormal at working precision.
        if !gram_schmidt_columns(&mut cols, n) {
            return Err(FlagError::DegenerateFrame);
        }
        Ok(Flag { n, cols })
    }
}

fn rat_dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let mut s = BigRational::zero();
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Unit f64 vector in the direction of an exact rational vector, at any
/// scale; None for the zero vector.
fn rat_unit_f64(v: &[BigRational]) -> Option<Vec<f64>> {
    let xs: Vec<Xf> = v.iter().map(ratio_xf).collect();
    let mut max_e = i64::MIN;
    for x in &xs {
        if !x.is_zero() {
            max_e = max_e.max(x.exponent());
        }
    }
    if max_e == i64::MIN {
        return None;
    }
    let mut out: Vec<f64> = xs.iter().map(|x| x.scaled(-max_e).to_f64()).collect();
    let norm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    for x in &mut out {
        *x /= norm;
    }
    Some(out)
}

/// Per-level transversality determinants of a flag pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransversalityReport {
    /// Smallest of the level determinants; zero iff some pair of
    /// complementary pieces fails to be transverse (at working precision).
    pub margin: f64,
    /// `levels[k-1]` is `|det [first k columns of F | first n-k of F']|`
    /// for `k = 1, ..., n-1`. Both frames being orthonormal, each value
    /// lies in `[0, 1]` by Hadamard's bound.
    pub levels: Vec<f64>,
}

/// How far a flag pair is from violating transversality: for each k the
/// pieces `V_k(F)` and `V_{n-k}(F')` must be complementary, measured by
/// the determinant of their stacked bases.
pub fn transversality_margin(f: &Flag, g: &Flag) -> TransversalityReport {
    let n = f.n();
    assert_eq!(n, g.n(), "flag dimensions differ");
    let mut levels = Vec::with_capacity(n - 1);
    let mut scratch = vec![0.0; n * n];
    for k in 1..n {
        for c in 0..k {
            for i in 0..n {
                scratch[c * n + i] = f.cols[c * n + i];
            }
        }
        for c in 0..n - k {
            for i in 0..n {
                scratch[(k + c) * n + i] = g.cols[c * n + i];
            }
        }
        levels.push(det_columns(&scratch, n).abs());
    }
    let margin = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    TransversalityReport { margin, levels }
}

/// Determinant of a column-major n x n matrix by partial-pivot LU.
fn det_columns(cols: &[f64], n: usize) -> f64 {
    let mut a = vec![0.0; n * n];
    for c in 0..n {
        for i in 0..n {
            a[i * n + c] = cols[c * n + i];
        }
    }
    let mut det = 1.0;
    for p in 0..n {
        let mut best = p;
        for r in p + 1..n {
            if a[r * n + p].abs() > a[best * n + p].abs() {
                best = r;
            }
        }
        if best != p {
            for j in 0..n {
                a.swap(p * n + j, best * n + j);
            }
            det = -det;
        }
        let piv = a[p * n + p];
        if piv == 0.0 {
            return 0.0;
        }
        det *= piv;
        for r in p + 1..n {
            let f = a[r * n + p] / piv;
            for j in p..n {
                a[r * n + j] -= f * a[p * n + j];
            }
        }
    }
    det
}

/// Distance between two flags: the largest principal angle between
/// `V_k(F)` and `V_k(F')` over all levels, scaled so the diameter is 1.
///
/// The angle at level k is computed from the component of `V_k(F')`
/// orthogonal to `V_k(F)` (its top singular value is the sine of the
/// angle), which stays fully accurate for nearly equal flags where the
/// cosine route would lose half the digits.
pub fn flag_distance(f: &Flag, g: &Flag) -> f64 {
    let n = f.n();
    assert_eq!(n, g.n(), "flag dimensions differ");
    let mut worst: f64 = 0.0;
    for k in 1..n {
        // C = G_k - F_k (F_k^T G_k), column-major n x k.
        let mut c = vec![0.0; n * k];
        for col in 0..k {
            let gc = &g.cols[col * n..col * n + n];
            c[col * n..col * n + n].copy_from_slice(gc);
            for fcol in 0..k {
                let fc = &f.cols[fcol * n..fcol * n + n];
                let mut dot = 0.0;
                for i in 0..n {
                    dot += fc[i] * gc[i];
                }
                for i in 0..n {
                    c[col * n + i] -= dot * fc[i];
                }
            }
        }
        // sin(theta_max) = top singular value of C, via C^T C.
        let mut ctc = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += c[a * n + i] * c[b * n + i];
                }
                ctc[a * k + b] = dot;
            }
        }
        let eig = jacobi_symmetric(&ctc, k, false);
        let sin = eig.values[0].max(0.0).sqrt().min(1.0);
        worst = worst.max(sin.asin() / FRAC_PI_2);
    }
    worst
}

/// The pair of flags fixed by a loxodromic element, certified by a
/// residual check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedFlags {
    /// Attracting flag: `V_k` spans the eigenvectors of the k largest
    /// eigenvalue moduli.
    pub attractive: Flag,
    /// Repelling flag: the attracting flag of the inverse.
    pub repulsive: Flag,
    /// Largest motion of either flag under the element fixing it.
    pub residual: f64,
}

/// Computes the attracting and repelling fixed flags of a loxodromic
/// element.
///
/// Eigenvalues are refined from exact isolating intervals to 55
/// significant bits and the eigenvector of each is extracted by exact
/// shifted elimination in extended-range arithmetic, so conditioning
/// survives elements far outside f64 range. The result is rejected
/// unless both flags move by less than `FIXED_FLAG_RESIDUAL` under the
/// element.
pub fn fixed_flags(g: &RationalMatrix) -> Result<FixedFlags, FlagError> {
    let class = classify(g, DEFAULT_ORDER_BOUND);
    if class != SpectralClass::Loxodromic {
        return Err(FlagError::NotLoxodromic { found: class });
    }
    let ginv = g.inverse();
    let attractive = attracting_flag(g)?;
    let repulsive = attracting_flag(&ginv)?;
    let res_a = flag_distance(&attractive.transformed_by(g)?, &attractive);
    let res_r = flag_distance(&repulsive.transformed_by(&ginv)?, &repulsive);
    let residual = res_a.max(res_r);
    if residual > FIXED_FLAG_RESIDUAL {
        return Err(FlagError::ConditioningFailure { residual });
    }
    Ok(FixedFlags { attractive, repulsive, residual })
}

/// Eigenvector basis ordered by strictly descending eigenvalue modulus,
/// orthonormalized in that order. Loxodromic input only: all n
/// eigenvalues are real (conjugate pairs would tie in modulus) and their
/// moduli are pairwise distinct.
fn attracting_flag(g: &RationalMatrix) -> Result<Flag, FlagError> {
    let n = g.n();
    let p = g.char_poly();
    let poly = p.poly();
    let mut roots: Vec<BigRational> = poly
        .isolate_real_roots()
        .iter()
        .map(|iv| {
            let (lo, hi) = poly.refine_root_relative(iv, 55);
            (&lo + &hi) / BigRational::from_integer(2.into())
        })
        .collect();
    debug_assert_eq!(roots.len(), n, "loxodromic spectra are real and simple");
    roots.sort_by(|a, b| b.abs().cmp(&a.abs()));
    let mut cols = Vec::with_capacity(n * n);
    for lambda in &roots {
        let v = shifted_kernel_direction(g, lambda);
        cols.extend_from_slice(&v);
    }
    Flag::from_columns(n, cols)
}

/// Direction of the kernel of `g - lambda I`, where `lambda` carries a
/// simple eigenvalue to 55 bits.
///
/// The shifted matrix is eliminated with full pivoting in exact rational
/// arithmetic; only then is anything rounded. This matters: rounding
/// during elimination would contaminate the kernel direction by the
/// ratio of extreme eigenvalue gaps, while the exact route leaves only
/// the shift error, which perturbs the direction by about `2^-55`
/// regardless of how stiff the element is.
fn shifted_kernel_direction(g: &RationalMatrix, lambda: &BigRational) -> Vec<f64> {
    let n = g.n();
    let mut a = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut e = g.entry(i, j).clone();
            if i == j {
                e -= lambda;
            }
            a.push(e);
        }
    }
    let mut col_of: Vec<usize> = (0..n).collect();
    for step in 0..n - 1 {
        let (mut br, mut bc) = (step, step);
        let mut best = a[step * n + step].abs();
        for r in step..n {
            for c in step..n {
                let v = a[r * n + c].abs();
                if v > best {
                    best = v;
                    br = r;
                    bc = c;
                }
            }
        }
        if best.is_zero() {
            // Exactly singular beyond the expected corank; the free
            // variable below still yields a kernel vector.
            break;
        }
        if br != step {
            for j in 0..n {
                a.swap(step * n + j, br * n + j);
            }
        }
        if bc != step {
            for i in 0..n {
                a.swap(i * n + step, i * n + bc);
            }
            col_of.swap(step, bc);
        }
        let piv = a[step * n + step].clone();
        for r in step + 1..n {
            let f = &a[r * n + step] / &piv;
            a[r * n + step] = BigRational::zero();
            for c in step + 1..n {
                let s = &f * &a[step * n + c];
                a[r * n + c] -= s;
            }
        }
    }
    // Null vector in permuted coordinates: free variable last, exact
    // back substitution above it. With an approximate shift the bottom
    // pivot is tiny but nonzero; dropping its row is exactly the
    // perturbation the shift analysis accounts for.
    let mut x = vec![BigRational::zero(); n];
    x[n - 1] = BigRational::one();
    for k in (0..n - 1).rev() {
        let mut s = BigRational::zero();
        for c in k + 1..n {
            s += &a[k * n + c] * &x[c];
        }
        let piv = &a[k * n + k];
        x[k] = if piv.is_zero() { BigRational::zero() } else { -(s / piv) };
    }
    let mut v = vec![BigRational::zero(); n];
    for k in 0..n {
        v[col_of[k]] = x[k].clone();
    }
    let mut unit = rat_unit_f64(&v).expect("kernel vector is nonzero");
    // Sign canonical: largest-magnitude component positive.
    let mut big = 0;
    for i in 1..n {
        if unit[i].abs() > unit[big].abs() {
            big = i;
        }
    }
    if unit[big] < 0.0 {
        for c in &mut unit {
            *c = -*c;
        }
    }
    unit
}

/// One sampled point of a limit set: the attracting flag of a group
/// element, together with the word that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitPoint {
    pub flag: Flag,
    /// Shortest (shortlex-first) enumerated word whose attracting flag
    /// this is.
    pub word: Word,
}

/// A limit-set sample at a word-length horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitSetSample {
    pub points: Vec<LimitPoint>,
    /// Word length actually exhausted by the enumeration.
    pub horizon: usize,
    /// Loxodromic elements encountered (before flag deduplication).
    pub loxodromic_count: usize,
    /// Loxodromic elements whose fixed flags missed the residual bar and
    /// were left out of the sample.
    pub uncertified_count: usize,
}

enum Scanned {
    NotLoxodromic,
    Point(Flag, Word),
    Uncertified,
}

/// Samples the limit set: attracting flags of every loxodromic element
/// at word length up to `max_len`, deduplicated at `LIMIT_DEDUP_TOL` in
/// flag distance, each tagged with its first witnessing word.
///
/// Elements whose fixed flags cannot be certified to the residual bar
/// are counted and skipped rather than failing the whole sample.
/// Deterministic: elements are scanned in shortlex order and
/// deduplication keeps first-seen representatives.
pub fn limit_set_sample(gens: &GeneratorSet, max_len: usize) -> Result<LimitSetSample, FlagError> {
    let en = enumerate(gens, max_len, true);
    let entries: Vec<_> = en.iter().filter(|e| !e.word.is_empty()).collect();
    let flagged: Vec<Scanned> = entries
        .par_iter()
        .map(|e| {
            if classify(&e.matrix, DEFAULT_ORDER_BOUND) != SpectralClass::Loxodromic {
                return Ok(Scanned::NotLoxodromic);
            }
            match fixed_flags(&e.matrix) {
                Ok(fixed) => Ok(Scanned::Point(fixed.attractive, e.word.clone())),
                Err(FlagError::ConditioningFailure { .. }) => Ok(Scanned::Uncertified),
                Err(other) => Err(other),
            }
        })
        .collect::<Result<_, FlagError>>()?;
    let mut points: Vec<LimitPoint> = Vec::new();
    let mut loxodromic_count = 0;
    let mut uncertified_count = 0;
    for item in flagged {
        match item {
            Scanned::NotLoxodromic => {}
            Scanned::Uncertified => {
                loxodromic_count += 1;
                uncertified_count += 1;
            }
            Scanned::Point(flag, word) => {
                loxodromic_count += 1;
                if points.iter().all(|p| flag_distance(&p.flag, &flag) > LIMIT_DEDUP_TOL) {
                    points.push(LimitPoint { flag, word });
                }
            }
        }
    }
    Ok(LimitSetSample {
        points,
        horizon: en.completed_len,
        loxodromic_count,
        uncertified_count,
    })
}

/// One row of a contraction table: the worst image diameter over all
/// freely reduced words of one length.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionRow {
    pub len: usize,
    /// `max` over words `w` of that length of `diam(w . base)` in flag
    /// distance.
    pub diameter: f64,
}

/// Tabulates how fast word images contract a base set of flags: for each
/// length up to `max_len`, the largest flag-distance diameter of the
/// image of `base` under any freely reduced word of that length.
///
/// A uniformly contracting (ping-pong) system shows geometric decay; the
/// identity leaves the diameter constant.
pub fn contraction_diagnostic(
    gens: &GeneratorSet,
    max_len: usize,
    base: &[Flag],
) -> Result<Vec<ContractionRow>, FlagError> {
    let en = enumerate(gens, max_len, false);
    let mut rows = Vec::new();
    for (len, level) in en.levels.iter().enumerate().skip(1) {
        if len > en.completed_len {
            break;
        }
        let diameter = level
            .par_iter()
            .map(|e| {
                let images: Result<Vec<Flag>, FlagError> =
                    base.iter().map(|f| f.transformed_by(&e.matrix)).collect();
                images.map(|im| diameter_of(&im))
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        rows.push(ContractionRow { len, diameter });
    }
    Ok(rows)
}

/// Largest pairwise flag distance within a set.
pub fn diameter_of(flags: &[Flag]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..flags.len() {
        for j in i + 1..flags.len() {
            d = d.max(flag_distance(&flags[i], &flags[j]));
        }
    }
    d
}

/// The point and dual line of a full flag in R^3: the projective point
/// spanned by `V_1` and the linear functional vanishing on `V_2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sl3Projections {
    /// Unit vector spanning `V_1`, largest component positive.
    pub point: [f64; 3],
    /// Unit covector annihilating `V_2`, largest component positive.
    pub dual: [f64; 3],
}

/// Splits a flag in R^3 into its projective point and dual line. For an
/// orthonormal frame the annihilator of `V_2` is spanned by the last
/// column. Under `g` the point moves by `g` and the dual by the inverse
/// transpose.
pub fn projections_sl3(f: &Flag) -> Result<Sl3Projections, FlagError> {
    if f.n() != 3 {
        return Err(FlagError::NotSl3 { got: f.n() });
    }
    let point = canonical3([f.cols[0], f.cols[1], f.cols[2]]);
    let dual = canonical3([f.cols[6], f.cols[7], f.cols[8]]);
    Ok(Sl3Projections { point, dual })
}

/// Normalizes to unit length with the largest-magnitude component
/// positive.
fn canonical3(v: [f64; 3]) -> [f64; 3] {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut big = 0;
    for i in 1..3 {
        if v[i].abs() > v[big].abs() {
            big = i;
        }
    }
    let s = if v[big] < 0.0 { -norm } else { norm };
    [v[0] / s, v[1] / s, v[2] / s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_flag, random_loxodromic, random_orthonormal, rng};

    fn mat(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_i64_rows(rows).expect("unimodular")
    }

    fn diag(nums: &[i64], dens: &[i64]) -> RationalMatrix {
        let entries = nums
            .iter()
            .zip(dens)
            .map(|(&a, &b)| BigRational::new(a.into(), b.into()))
            .collect();
        RationalMatrix::diagonal(entries).expect("unimodular diagonal")
    }

    // --- transversality -------------------------------------------------

    #[test]
    fn standard_and_reversed_are_maximally_transverse() {
        for n in [2usize, 3, 4, 5] {
            let rep = transversality_margin(&Flag::standard(n), &Flag::reversed(n));
            assert_eq!(rep.levels.len(), n - 1);
            for d in &rep.levels {
                assert!((d - 1.0).abs() < 1e-14);
            }
            assert!((rep.margin - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn a_flag_is_never_transverse_to_itself() {
        let mut r = rng(1);
        for n in [2usize, 3, 4] {
            let f = random_flag(&mut r, n);
            let rep = transversality_margin(&f, &f);
            assert!(rep.margin < 1e-12, "margin {}", rep.margin);
        }
    }

    #[test]
    fn transversality_is_symmetric_and_orthogonally_invariant() {
        let mut r = rng(2);
        for _ in 0..20 {
            let f = random_flag(&mut r, 3);
            let g = random_flag(&mut r, 3);
            let ab = transversality_margin(&f, &g);
            let ba = transversality_margin(&g, &f);
            assert!((ab.margin - ba.margin).abs() < 1e-12);
            // Rotating both flags by one orthogonal matrix changes nothing.
            let q = random_orthonormal(&mut r, 3);
            let mut q_rows = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    q_rows[i * 3 + j] = q[j * 3 + i];
                }
            }
            let fq = f.transformed(&q_rows).unwrap();
            let gq = g.transformed(&q_rows).unwrap();
            let rot = transversality_margin(&fq, &gq);
            assert!((rot.margin - ab.margin).abs() < 1e-10);
        }
    }

    // --- distance -------------------------------------------------------

    #[test]
    fn distance_axioms_on_random_flags() {
        let mut r = rng(3);
        for n in [2usize, 3, 4] {
            for _ in 0..15 {
                let f = random_flag(&mut r, n);
                let g = random_flag(&mut r, n);
                let h = random_flag(&mut r, n);
                let fg = flag_distance(&f, &g);
                assert!((0.0..=1.0).contains(&fg));
                assert!(flag_distance(&f, &f) < 1e-12);
                assert!((fg - flag_distance(&g, &f)).abs() < 1e-12);
                let fh = flag_distance(&f, &h);
                let gh = flag_distance(&g, &h);
                assert!(fg <= fh + gh + 1e-12, "triangle violated");
            }
        }
    }

    #[test]
    fn distance_reaches_its_diameter_exactly_at_the_reversed_flag() {
        for n in [2usize, 3, 4] {
            let d = flag_distance(&Flag::standard(n), &Flag::reversed(n));
            assert!((d - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_is_orthogonally_invariant() {
        let mut r = rng(4);
        for _ in 0..10 {
            let f = random_flag(&mut r, 4);
            let g = random_flag(&mut r, 4);
            let d = flag_distance(&f, &g);
            let q = random_orthonormal(&mut r, 4);
            let mut q_rows = vec![0.0; 16];
            for i in 0..4 {
                for j in 0..4 {
                    q_rows[i * 4 + j] = q[j * 4 + i];
                }
            }
            let df = flag_distance(&f.transformed(&q_rows).unwrap(), &g.transformed(&q_rows).unwrap());
            assert!((d - df).abs() < 1e-10);
        }
    }

    #[test]
    fn distance_resolves_tiny_perturbations_linearly() {
        // A rotation by eps moves the standard flag by about
        // eps / (pi/2); the sine-based route must not lose digits here.
        let eps: f64 = 1e-9;
        let cols = vec![eps.cos(), eps.sin(), 0.0, -eps.sin(), eps.cos(), 0.0, 0.0, 0.0, 1.0];
        let f = Flag::from_columns(3, cols).unwrap();
        let d = flag_distance(&Flag::standard(3), &f);
        assert!((d - eps / FRAC_PI_2).abs() < 1e-12, "d = {d:e}");
    }

    // --- fixed flags ----------------------------------------------------

    #[test]
    fn fixed_flags_of_a_descending_diagonal_are_standard_and_reversed() {
        let g = diag(&[4, 2, 1], &[1, 1, 8]);
        let fixed = fixed_flags(&g).unwrap();
        assert!(flag_distance(&fixed.attractive, &Flag::standard(3)) < 1e-12);
        assert!(flag_distance(&fixed.repulsive, &Flag::reversed(3)) < 1e-12);
        assert!(fixed.residual <= FIXED_FLAG_RESIDUAL);
    }

    #[test]
    fn fixed_flags_require_loxodromic_input() {
        let rot = mat(&[&[0, -1, 0], &[1, 0, 0], &[0, 0, 1]]);
        match fixed_flags(&rot) {
            Err(FlagError::NotLoxodromic { .. }) => {}
            other => panic!("expected NotLoxodromic, got {other:?}"),
        }
        let shear = mat(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert!(matches!(fixed_flags(&shear), Err(FlagError::NotLoxodromic { .. })));
    }

    #[test]
    fn fixed_flags_are_conjugation_equivariant() {
        let g = diag(&[9, 3, 1], &[1, 1, 27]);
        let h = mat(&[&[3, 2, 1], &[2, 2, 1], &[1, 1, 1]]);
        let conj = h.dot(&g).dot(&h.inverse());
        let fg = fixed_flags(&g).unwrap();
        let fc = fixed_flags(&conj).unwrap();
        let pushed = fg.attractive.transformed_by(&h).unwrap();
        assert!(flag_distance(&fc.attractive, &pushed) < 1e-8);
        let pushed_rep = fg.repulsive.transformed_by(&h).unwrap();
        assert!(flag_distance(&fc.repulsive, &pushed_rep) < 1e-8);
    }

    #[test]
    fn fixed_flag_residuals_hold_for_random_loxodromics() {
        let mut r = rng(5);
        for _ in 0..25 {
            let g = random_loxodromic(&mut r, 3, 5);
            let fixed = fixed_flags(&g).expect("certified fixed flags");
            assert!(fixed.residual <= FIXED_FLAG_RESIDUAL, "residual {}", fixed.residual);
            // The two fixed flags of a loxodromic element are transverse.
            let rep = transversality_margin(&fixed.attractive, &fixed.repulsive);
            assert!(rep.margin > 1e-9, "margin {}", rep.margin);
        }
    }

    #[test]
    fn fixed_flags_survive_extreme_powers() {
        // g^40 has entries around 10^38; the scaled action must still
        // certify the same flags.
        let h = mat(&[&[3, 2, 1], &[2, 2, 1], &[1, 1, 1]]);
        let g = h.dot(&diag(&[9, 3, 1], &[1, 1, 27])).dot(&h.inverse());
        let big = g.pow(40);
        let base = fixed_flags(&g).unwrap();
        let pow = fixed_flags(&big).unwrap();
        assert!(flag_distance(&base.attractive, &pow.attractive) < 1e-9);
        assert!(flag_distance(&base.repulsive, &pow.repulsive) < 1e-9);
    }

    #[test]
    fn iterates_converge_to_the_attracting_flag() {
        let h = mat(&[&[3, 2, 1], &[2, 2, 1], &[1, 1, 1]]);
        let g = h.dot(&diag(&[9, 3, 1], &[1, 1, 27])).dot(&h.inverse());
        let target = fixed_flags(&g).unwrap().attractive;
        let mut r = rng(6);
        let start = random_flag(&mut r, 3);
        let mut dists = Vec::new();
        for k in 1..=30 {
            let img = start.transformed_by(&g.pow(k)).unwrap();
            dists.push(flag_distance(&img, &target));
        }
        // Eventually inside, and monotone once the transient has passed.
        let burn = dists.iter().position(|d| *d < 1e-2).expect("enters a small ball");
        for w in dists[burn..].windows(2) {
            assert!(w[1] <= w[0] * 1.001 + 1e-15, "not contracting: {w:?}");
        }
        assert!(dists.last().unwrap() < &1e-9);
    }

    // --- limit set sampling ---------------------------------------------

    #[test]
    fn cyclic_group_has_exactly_two_limit_points() {
        let d = diag(&[4, 2, 1], &[1, 1, 8]);
        let gens = GeneratorSet::named(3, &[("d", d)]).unwrap();
        let sample = limit_set_sample(&gens, 5).unwrap();
        assert_eq!(sample.points.len(), 2, "cyclic limit set is one pole pair");
        assert_eq!(sample.horizon, 5);
        assert_eq!(sample.loxodromic_count, 10);
        let d0 = flag_distance(&sample.points[0].flag, &Flag::standard(3));
        let d1 = flag_distance(&sample.points[1].flag, &Flag::reversed(3));
        assert!(d0 < 1e-10 && d1 < 1e-10);
        // Witnesses are the shortest words: "d" and "d^-1".
        assert_eq!(sample.points[0].word.display(&gens), "d");
        assert_eq!(sample.points[1].word.display(&gens), "d^-1");
    }

    #[test]
    fn free_pair_produces_a_spread_out_sample_with_short_witnesses() {
        let a = diag(&[9, 3, 1], &[1, 1, 27]);
        let h = mat(&[&[3, 2, 1], &[2, 2, 1], &[1, 1, 1]]);
        let b = h.dot(&diag(&[16, 1, 1], &[1, 1, 16])).dot(&h.inverse());
        let gens = GeneratorSet::named(3, &[("a", a), ("b", b)]).unwrap();
        let sample = limit_set_sample(&gens, 3).unwrap();
        assert!(sample.points.len() >= 8, "got {}", sample.points.len());
        for p in &sample.points {
            assert!(p.word.len() <= 3);
            assert!(p.flag.gram_residual() < 1e-10);
        }
        // Samples at a deeper horizon stay near the shallow ones only in
        // the nested direction: every shallow point recurs.
        let deeper = limit_set_sample(&gens, 5).unwrap();
        for p in &sample.points {
            let nearest = deeper
                .points
                .iter()
                .map(|q| flag_distance(&p.flag, &q.flag))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= LIMIT_DEDUP_TOL, "shallow point lost: {nearest}");
        }
    }

    // --- contraction table ----------------------------------------------

    #[test]
    fn identity_generator_never_contracts() {
        let gens = GeneratorSet::named(3, &[("e", RationalMatrix::identity(3))]).unwrap();
        let mut r = rng(7);
        let base: Vec<Flag> = (0..4).map(|_| random_flag(&mut r, 3)).collect();
        let d0 = diameter_of(&base);
        assert!(d0 > 0.1);
        let rows = contraction_diagnostic(&gens, 4, &base).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!((row.diameter - d0).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_loxodromic_contracts_geometrically() {
        let d = diag(&[9, 3, 1], &[1, 1, 27]);
        let gens = GeneratorSet::named(3, &[("d", d)]).unwrap();
        let mut r = rng(8);
        // Generic flags; the diagonal action contracts them toward a
        // fixed flag in both time directions.
        let base: Vec<Flag> = (0..4).map(|_| random_flag(&mut r, 3)).collect();
        let rows = contraction_diagnostic(&gens, 6, &base).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].diameter < w[0].diameter, "no decay: {w:?}");
        }
        // Eigenvalue gap 3 forces decay at least comparable to 1/3 per
        // step once the transient passes.
        assert!(rows.last().unwrap().diameter < rows[0].diameter / 50.0);
    }

    // --- projections ----------------------------------------------------

    #[test]
    fn standard_flag_projects_to_first_axis_and_last_coaxis() {
        let p = projections_sl3(&Flag::standard(3)).unwrap();
        assert_eq!(p.point, [1.0, 0.0, 0.0]);
        assert_eq!(p.dual, [0.0, 0.0, 1.0]);
        assert!(matches!(projections_sl3(&Flag::standard(4)), Err(FlagError::NotSl3 { got: 4 })));
    }

    #[test]
    fn projections_are_equivariant_for_point_and_dual() {
        let mut r = rng(9);
        let g = mat(&[&[1, 1, 2], &[0, 1, 1], &[0, -3, -2]]);
        let (g_rows, _) = g.to_f64_scaled();
        let ginv_t = g.inverse();
        let mut git_rows = vec![0.0; 9];
        {
            let (m, _) = ginv_t.to_f64_scaled();
            for i in 0..3 {
                for j in 0..3 {
                    git_rows[i * 3 + j] = m[j * 3 + i];
                }
            }
        }
        for _ in 0..20 {
            let f = random_flag(&mut r, 3);
            let pf = projections_sl3(&f).unwrap();
            let pgf = projections_sl3(&f.transformed(&g_rows).unwrap()).unwrap();
            // Point moves by g.
            let mut img = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    img[i] += g_rows[i * 3 + j] * pf.point[j];
                }
            }
            let img = canonical3(img);
            for i in 0..3 {
                assert!((img[i] - pgf.point[i]).abs() < 1e-10);
            }
            // Dual moves by the inverse transpose.
            let mut dimg = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    dimg[i] += git_rows[i * 3 + j] * pf.dual[j];
                }
            }
            let dimg = canonical3(dimg);
            for i in 0..3 {
                assert!((dimg[i] - pgf.dual[i]).abs() < 1e-10);
            }
        }
    }

    // --- frames and serde -----------------------------------------------

    #[test]
    fn frames_stay_orthonormal_under_wild_transforms() {
        let mut r = rng(10);
        let g = diag(&[9, 3, 1], &[1, 1, 27]).pow(25);
        for _ in 0..10 {
            let f = random_flag(&mut r, 3);
            let img = f.transformed_by(&g).unwrap();
            assert!(img.gram_residual() < 1e-12);
        }
    }

    #[test]
    fn degenerate_frames_are_rejected() {
        let cols = vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!(matches!(Flag::from_columns(3, cols), Err(FlagError::DegenerateFrame)));
        assert!(matches!(
            Flag::from_columns(3, vec![0.0; 3]),
            Err(FlagError::Dimension { expected: 3, got: 3 })
        ));
    }

    #[test]
    fn flags_round_trip_through_serde() {
        let mut r = rng(11);
        let f = random_flag(&mut r, 3);
        let json = serde_json::to_string(&f).unwrap();
        let back: Flag = serde_json::from_str(&json).unwrap();
        assert!(flag_distance(&f, &back) < 1e-12);
        // Corrupted frames fail to deserialize.
        let bad = r#"{"n":3,"cols":[1.0,0.0,0.0,1.0,0.0,0.0,0.0,0.0,1.0]}"#;
        assert!(serde_json::from_str::<Flag>(bad).is_err());
    }

    #[test]
    fn determinant_helper_matches_hand_values() {
        // Column-major; this is the matrix with columns e2, e1, e3.
        let swap = vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!((det_columns(&swap, 3) + 1.0).abs() < 1e-15);
    }
}
