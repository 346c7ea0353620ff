//! Cartan and Jordan projections, chamber vectors, and exact spectral
//! classification.
//!
//! The Cartan projection of g collects the logs of its singular values,
//! the Jordan projection the logs of its eigenvalue moduli; both live in
//! the closed chamber of descending zero-sum vectors. Discrete questions
//! (which class a matrix belongs to, whether moduli coincide) are decided
//! exactly on the rational side; only the real-valued coordinates pass
//! through floating point, with exact power-of-two scalings keeping every
//! intermediate in range no matter how large the group element.

use crate::config::Tolerances;
use crate::exactmat::poly::RationalPoly;
use crate::exactmat::{eval_poly_matrix, ExactError, FiniteOrder, RationalMatrix};
use crate::xfloat::{polynomial_roots, ratio_ln, ratio_xf, RootFindError, Xf};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::LN_2;

/// Eigenvalues of the scaled Gram matrix are trusted down to this fraction
/// of the top one; below it, Jacobi's absolute backward error (a small
/// multiple of machine epsilon times the matrix norm) no longer guarantees
/// log accuracy, and the value is recovered from the inverse matrix or
/// from exterior powers instead.
const REL_TRUST: f64 = 1e-4;

/// Residual bar for accepting eigenvalue moduli from the root finder.
const ROOT_RESIDUAL_BAR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    RootFinding(#[from] RootFindError),
    #[error("root residual {residual:.3e} above the acceptance bar {bar:.1e}")]
    RootResidual { residual: f64, bar: f64 },
    #[error("chamber vector rejected: {0}")]
    InvalidChamberVector(String),
    #[error("matrix has an all-real spectrum, no complex invariant pair")]
    NotComplexSpectrum,
    #[error("operation requires dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("cannot resolve {what} at the working tolerance")]
    UnresolvedAtTolerance { what: String },
    #[error("Jacobi sweeps stalled with relative off-diagonal mass {off_relative:.3e}")]
    JacobiStalled { off_relative: f64 },
}

/// Relative off-diagonal mass above which a finished Jacobi run is
/// reported as stalled instead of silently accepted.
const JACOBI_STALL_BAR: f64 = 1e-12;

/// Point of the closed chamber: coordinates descending, sum zero.
///
/// The constructor sorts its input into the chamber and removes the mean,
/// so the zero-sum identity holds exactly on the stored coordinates;
/// projections computed elsewhere in this module carry at most a centered
/// rounding residual. Deserialization instead validates that the incoming
/// data already is a chamber vector (descending within the sort tolerance,
/// sum within the zero-sum tolerance) and rejects it otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct AVector {
    v: Vec<f64>,
}

impl AVector {
    /// Sorts into the chamber and centers to an exact zero sum.
    pub fn new(mut v: Vec<f64>) -> AVector {
        assert!(v.len() >= 2, "chamber vectors need dimension at least 2");
        assert!(v.iter().all(|x| x.is_finite()), "chamber coordinates must be finite");
        v.sort_by(|a, b| b.total_cmp(a));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        for x in &mut v {
            *x -= mean;
        }
        AVector { v }
    }

    /// Accepts externally supplied coordinates only if they already sit in
    /// the chamber at the given tolerances.
    pub fn validated(v: Vec<f64>, tol: &Tolerances) -> Result<AVector, SpectralError> {
        if v.len() < 2 {
            return Err(SpectralError::InvalidChamberVector(format!(
                "dimension {} below 2",
                v.len()
            )));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(SpectralError::InvalidChamberVector(format!("non-finite entry {x}")));
        }
        for w in v.windows(2) {
            if w[1] > w[0] + tol.sort {
                return Err(SpectralError::InvalidChamberVector(format!(
                    "not descending: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sum: f64 = v.iter().sum();
        if sum.abs() > tol.sum * norm.max(1.0) {
            return Err(SpectralError::InvalidChamberVector(format!("sum {sum} not zero")));
        }
        Ok(AVector::new(v))
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.v[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v
    }

    /// Root functional `v_i - v_j` (0-indexed, `i < j` for positive roots).
    pub fn root(&self, i: usize, j: usize) -> f64 {
        self.v[i] - self.v[j]
    }

    /// The simple root values `v_i - v_{i+1}`.
    pub fn simple_roots(&self) -> Vec<f64> {
        self.v.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Distance to the chamber walls: the smallest simple root value.
    pub fn min_simple_root(&self) -> f64 {
        self.v
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// First partial sums `v_0 + ... + v_{k-1}` for `k = 1..n`.
    pub fn partial_sum(&self, k: usize) -> f64 {
        self.v[..k].iter().sum()
    }

    /// The opposition involution `(v_0, ..., v_{n-1}) -> (-v_{n-1}, ..., -v_0)`.
    pub fn opposition(&self) -> AVector {
        let v = self.v.iter().rev().map(|x| -x).collect();
        AVector { v }
    }

    pub fn norm(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, t: f64) -> AVector {
        assert!(t >= 0.0, "chamber scaling must be nonnegative");
        AVector { v: self.v.iter().map(|x| x * t).collect() }
    }

    pub fn add(&self, rhs: &AVector) -> AVector {
        assert_eq!(self.n(), rhs.n());
        AVector {
            v: self.v.iter().zip(&rhs.v).map(|(a, b)| a + b).collect(),
        }
    }

    /// True when every simple root exceeds `margin` (interior point).
    pub fn is_regular(&self, margin: f64) -> bool {
        self.min_simple_root() > margin
    }
}

impl Serialize for AVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.v.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        AVector::validated(v, &Tolerances::default()).map_err(serde::de::Error::custom)
    }
}

/// Exact spectral class of a group element.
///
/// `ComplexSpectrum` is decided first after the identity: it holds exactly
/// when the characteristic polynomial has a non-real root, so a finite
/// order rotation lands here (with its order in the payload) rather than
/// in `FiniteOrderNontrivial`, which is reserved for real-spectrum
/// involutions. `Loxodromic` means pairwise distinct eigenvalue moduli.
/// `SingularSemisimple` records the walls: adjacent positions (i, i+1) in
/// the sorted log-modulus vector that are exactly equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralClass {
    Identity,
    ComplexSpectrum { order: FiniteOrder },
    FiniteOrderNontrivial { order: FiniteOrder },
    Unipotent,
    Loxodromic,
    SingularSemisimple { walls: Vec<(usize, usize)> },
    Mixed,
}

impl SpectralClass {
    /// True when the element has pairwise distinct eigenvalue moduli.
    pub fn is_loxodromic(&self) -> bool {
        matches!(self, SpectralClass::Loxodromic)
    }

    /// True when some finite power is the identity.
    pub fn is_finite_order(&self) -> bool {
        match self {
            SpectralClass::Identity => true,
            SpectralClass::FiniteOrderNontrivial { .. } => true,
            SpectralClass::ComplexSpectrum { order } => {
                !matches!(order, FiniteOrder::ProvablyInfinite)
            }
            _ => false,
        }
    }
}

/// Default order reporting cap for [`classify`]; cyclotomic certificates
/// decide finiteness exactly, so the cap only limits the reported order.
pub const DEFAULT_ORDER_BOUND: u32 = 1_000_000;

/// Exact classification for any dimension: every branch below is decided
/// on the rational side (Sturm counts, square-free structure, cyclotomic
/// factors), never from floating point eigenvalues. `k_max` caps the
/// order reported for finite order elements; finiteness itself is decided
/// unconditionally.
pub fn classify(g: &RationalMatrix, k_max: u32) -> SpectralClass {
    if g.is_identity() {
        return SpectralClass::Identity;
    }
    let cp = g.char_poly();
    let p = cp.poly().clone();
    if p.has_nonreal_root() {
        return SpectralClass::ComplexSpectrum { order: g.finite_order(k_max) };
    }
    match g.finite_order(k_max) {
        FiniteOrder::ProvablyInfinite => {}
        order => return SpectralClass::FiniteOrderNontrivial { order },
    }
    if cp.is_unipotent_shape() {
        return SpectralClass::Unipotent;
    }
    let n = g.n();
    if p.count_distinct_real_roots() == n && !p.has_plus_minus_pair() {
        return SpectralClass::Loxodromic;
    }
    let sf = p.squarefree_part();
    if eval_poly_matrix(&sf, g).iter().all(|x| x.is_zero()) {
        let groups = modulus_multiplicities(&p);
        let mut walls = Vec::new();
        let mut pos = 0usize;
        for (_, mult) in &groups {
            for i in pos..pos + mult - 1 {
                walls.push((i, i + 1));
            }
            pos += mult;
        }
        debug_assert_eq!(pos, n);
        return SpectralClass::SingularSemisimple { walls };
    }
    SpectralClass::Mixed
}

/// Cartan projection: descending logs of the singular values.
///
/// The direct route runs cyclic Jacobi on the exactly scaled Gram matrix
/// and trusts eigenvalues down to `REL_TRUST` of the top one; the same on
/// the exact inverse covers the small end through the symmetry
/// `mu_i(g) = -mu_{n+1-i}(g^{-1})`. A single remaining gap closes through
/// the zero sum; with several gaps every coordinate is rebuilt from
/// exterior power norms `S_k = log |Lambda^k g|`, `mu_k = S_k - S_{k-1}`.
/// Well-conditioned matrices therefore never touch exterior powers, which
/// keeps the `Lambda^k` norm identity an independent crosscheck for them.
pub fn cartan_projection(g: &RationalMatrix) -> Result<AVector, SpectralError> {
    let n = g.n();
    let mut mu: Vec<Option<f64>> = trusted_gram_logs(g)?;
    if mu.iter().any(Option::is_none) {
        let inv_logs = trusted_gram_logs(&g.inverse())?;
        for i in 0..n {
            if mu[i].is_none() {
                if let Some(x) = inv_logs[n - 1 - i] {
                    mu[i] = Some(-x);
                }
            }
        }
    }
    let missing = mu.iter().filter(|m| m.is_none()).count();
    if missing == 1 {
        let s: f64 = mu.iter().flatten().sum();
        let idx = mu.iter().position(Option::is_none).expect("one missing");
        mu[idx] = Some(-s);
    } else if missing > 1 {
        let mut s = vec![0.0; n + 1];
        for (k, sk) in s.iter_mut().enumerate().take(n).skip(1) {
            *sk = log_operator_norm(&g.exterior_power(k)?)?;
        }
        for i in 0..n {
            mu[i] = Some(s[i + 1] - s[i]);
        }
    }
    let v: Vec<f64> = mu.into_iter().map(|x| x.expect("all filled")).collect();
    Ok(AVector::new(v))
}

/// Largest singular value of a plain real matrix (row major, `n * n`),
/// through the same Jacobi backend as the Cartan projection.
pub fn operator_norm(m: &[f64], n: usize) -> Result<f64, SpectralError> {
    assert_eq!(m.len(), n * n, "square row major input");
    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += m[k * n + i] * m[k * n + j];
            }
            gram[i * n + j] = s;
        }
    }
    let eig = checked_jacobi(&gram, n)?;
    Ok(eig.values[0].max(0.0).sqrt())
}

/// Log operator norm `log |g| = mu_1(g)`, from the top eigenvalue of the
/// exactly scaled Gram matrix (always in the trusted range).
pub fn log_operator_norm(g: &RationalMatrix) -> Result<f64, SpectralError> {
    let gram = g.gram();
    let (a, e) = gram.to_f64_scaled();
    let eig = checked_jacobi(&a, g.n())?;
    Ok(0.5 * (eig.values[0].ln() + (e as f64) * LN_2))
}

fn checked_jacobi(a: &[f64], n: usize) -> Result<SymEigen, SpectralError> {
    let eig = jacobi_symmetric(a, n, false);
    if eig.off_relative > JACOBI_STALL_BAR {
        return Err(SpectralError::JacobiStalled { off_relative: eig.off_relative });
    }
    Ok(eig)
}

fn trusted_gram_logs(g: &RationalMatrix) -> Result<Vec<Option<f64>>, SpectralError> {
    let gram = g.gram();
    let (a, e) = gram.to_f64_scaled();
    let eig = checked_jacobi(&a, g.n())?;
    let top = eig.values[0];
    Ok(eig
        .values
        .iter()
        .map(|&v| {
            if v > 0.0 && v >= REL_TRUST * top {
                Some(0.5 * (v.ln() + (e as f64) * LN_2))
            } else {
                None
            }
        })
        .collect())
}

/// Jordan projection: descending logs of the eigenvalue moduli.
///
/// The characteristic polynomial is computed exactly and split into its
/// square-free factors (Yun), so multiplicities are exact and the root
/// finder only ever sees simple roots; its results are rejected unless
/// the relative residual stays below `1e-12`.
pub fn jordan_projection(g: &RationalMatrix) -> Result<AVector, SpectralError> {
    let cp = g.char_poly();
    let mut logs = Vec::with_capacity(g.n());
    for (factor, mult) in cp.poly().squarefree_decomposition() {
        let deg = match factor.degree() {
            None | Some(0) => continue,
            Some(d) => d,
        };
        let coeffs: Vec<Xf> = factor.coeffs().iter().map(ratio_xf).collect();
        let roots = polynomial_roots(&coeffs)?;
        debug_assert_eq!(roots.len(), deg);
        let residual = crate::xfloat::max_relative_residual(&coeffs, &roots);
        if residual > ROOT_RESIDUAL_BAR {
            return Err(SpectralError::RootResidual { residual, bar: ROOT_RESIDUAL_BAR });
        }
        for z in roots {
            let l = z.ln_abs();
            for _ in 0..mult {
                logs.push(l);
            }
        }
    }
    Ok(AVector::new(logs))
}

/// Log spectral radius `log r(g) = lambda_1(g)`.
pub fn log_spectral_radius(g: &RationalMatrix) -> Result<f64, SpectralError> {
    Ok(jordan_projection(g)?.get(0))
}

/// Invariant projective data of a 3 x 3 matrix whose spectrum is one real
/// eigenvalue and a conjugate complex pair: such a matrix fixes exactly
/// one point of P(R^3) (the real eigendirection) and one complementary
/// projective line (the plane of the complex pair, stored through its
/// unit normal). Log modulus and argument of the pair ride along, the
/// pair modulus coming from the exact real root through `rho r^2 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantPair {
    /// Unit vector spanning the fixed point of P(R^3), largest component
    /// positive.
    pub point: [f64; 3],
    /// Unit normal of the fixed projective line, largest component
    /// positive.
    pub line_normal: [f64; 3],
    /// Largest angular invariance defect: max of sin(angle(g p, p)) and
    /// sin(angle(g^T w, w)).
    pub residual: f64,
    /// Log modulus of the complex pair.
    pub log_modulus: f64,
    /// Argument of the pair in (0, pi).
    pub angle: f64,
    /// Log of the (positive) real eigenvalue.
    pub real_log_modulus: f64,
}

pub fn complex_invariant_pair(g: &RationalMatrix) -> Result<InvariantPair, SpectralError> {
    if g.n() != 3 {
        return Err(SpectralError::Dimension { expected: 3, got: g.n() });
    }
    let cp = g.char_poly();
    let disc = cp.discriminant_cubic().expect("cubic");
    if !disc.is_negative() {
        return Err(SpectralError::NotComplexSpectrum);
    }
    // Negative discriminant: exactly one real root rho, necessarily
    // positive since rho r^2 = det = 1.
    let p = cp.poly();
    let intervals = p.isolate_real_roots();
    debug_assert_eq!(intervals.len(), 1);
    let (lo, hi) = p.refine_root_relative(&intervals[0], 55);
    let mid = (&lo + &hi) / BigRational::from_integer(2.into());
    let real_log_modulus = ratio_ln(&mid.abs());
    let log_modulus = -0.5 * real_log_modulus;
    // Angle from the root finder; the pair is simple (discriminant != 0).
    let coeffs: Vec<Xf> = p.coeffs().iter().map(ratio_xf).collect();
    let roots = polynomial_roots(&coeffs)?;
    let angle = roots
        .iter()
        .map(|z| z.arg().abs())
        .fold(0.0f64, f64::max);
    // The fixed point is the kernel direction of g - rho I; the fixed
    // plane is annihilated by the rho eigenvector of the transpose.
    let rho = ratio_xf(&mid);
    let rows = xf_rows_shifted(g, &rho);
    let point = kernel_direction_3(&rows);
    let cols = xf_rows_shifted(&g.transpose(), &rho);
    let line_normal = kernel_direction_3(&cols);
    let residual = sin_angle_after(&xf_rows_shifted(g, &Xf::ZERO), &point)
        .max(sin_angle_after(&xf_rows_shifted(&g.transpose(), &Xf::ZERO), &line_normal));
    Ok(InvariantPair { point, line_normal, residual, log_modulus, angle, real_log_modulus })
}

/// Rows of `g - shift * I` in extended range floats.
fn xf_rows_shifted(g: &RationalMatrix, shift: &Xf) -> [[Xf; 3]; 3] {
    let mut rows = [[Xf::ZERO; 3]; 3];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = ratio_xf(g.entry(i, j));
            if i == j {
                *x = *x - *shift;
            }
        }
    }
    rows
}

fn xf_cross(a: &[Xf; 3], b: &[Xf; 3]) -> [Xf; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn xf_norm(v: &[Xf; 3]) -> Xf {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt_abs()
}

/// Unit kernel direction of a numerically rank 2 matrix: the largest of
/// the pairwise row cross products, normalized, largest component made
/// positive so the answer is sign canonical.
fn kernel_direction_3(rows: &[[Xf; 3]; 3]) -> [f64; 3] {
    let candidates = [
        xf_cross(&rows[0], &rows[1]),
        xf_cross(&rows[0], &rows[2]),
        xf_cross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|a, b| xf_norm(a).cmp_abs(&xf_norm(b)))
        .expect("three candidates");
    let norm = xf_norm(best);
    let mut v = [0.0f64; 3];
    for (out, x) in v.iter_mut().zip(best.iter()) {
        *out = (*x / norm).to_f64();
    }
    let mut top = 0usize;
    for i in 1..3 {
        if v[i].abs() > v[top].abs() {
            top = i;
        }
    }
    if v[top] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

/// sin of the angle between `m v` and `v`, evaluated in extended range so
/// arbitrarily large matrices stay in range.
fn sin_angle_after(m: &[[Xf; 3]; 3], v: &[f64; 3]) -> f64 {
    let vx = [Xf::from_f64(v[0]), Xf::from_f64(v[1]), Xf::from_f64(v[2])];
    let mut mv = [Xf::ZERO; 3];
    for (out, row) in mv.iter_mut().zip(m.iter()) {
        *out = row[0] * vx[0] + row[1] * vx[1] + row[2] * vx[2];
    }
    let cross = xf_cross(&mv, &vx);
    let denom = xf_norm(&mv) * xf_norm(&vx);
    if denom.is_zero() {
        return 1.0;
    }
    (xf_norm(&cross) / denom).to_f64()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub struct SymEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Row-major n x n matrix whose column j is the eigenvector of
    /// `values[j]`; present when requested.
    pub vectors: Option<Vec<f64>>,
    /// Final off-diagonal Frobenius mass relative to the input norm.
    pub off_relative: f64,
}

/// Cyclic Jacobi on a symmetric matrix (row-major, length `n * n`).
/// Sweeps until the off-diagonal mass drops below `1e-14` of the input
/// Frobenius norm; eigenvalues are returned descending, deterministically.
pub fn jacobi_symmetric(a_in: &[f64], n: usize, want_vectors: bool) -> SymEigen {
    assert_eq!(a_in.len(), n * n);
    let mut a = a_in.to_vec();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };
    let mut off = off_diagonal_norm(&a, n);
    if norm > 0.0 {
        for _sweep in 0..50 {
            if off <= 1e-14 * norm {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // A <- J^T A J with J the rotation in the (p, q) plane.
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    if let Some(vm) = v.as_mut() {
                        for k in 0..n {
                            let vkp = vm[k * n + p];
                            let vkq = vm[k * n + q];
                            vm[k * n + p] = c * vkp - s * vkq;
                            vm[k * n + q] = s * vkp + c * vkq;
                        }
                    }
                }
            }
            off = off_diagonal_norm(&a, n);
        }
    }
    // Sort descending, carrying the eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|vm| {
        let mut out = vec![0.0; n * n];
        for (newj, &oldj) in order.iter().enumerate() {
            for k in 0..n {
                out[k * n + newj] = vm[k * n + oldj];
            }
        }
        out
    });
    SymEigen {
        values,
        vectors,
        off_relative: if norm > 0.0 { off / norm } else { 0.0 },
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Groups the (all real) roots of `p` by exact modulus: returns
/// `(log modulus, total multiplicity)` descending. Multiplicities come
/// from the Yun decomposition; a plus-minus pair is detected exactly via
/// `gcd(sf(x), sf(-x))` and merges the two signs into one group.
fn modulus_multiplicities(p: &RationalPoly) -> Vec<(f64, usize)> {
    let sf = p.squarefree_part();
    let decomp = p.squarefree_decomposition();
    let paired = sf.gcd(&sf.compose_neg());
    let has_pairs = paired.degree().map_or(false, |d| d >= 1);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for iv in sf.isolate_real_roots() {
        let (lo, hi) = iv.clone();
        if lo == hi {
            // Exact rational root r.
            let r = lo;
            debug_assert!(!r.is_zero(), "unimodular spectrum excludes zero");
            let mult = rational_root_multiplicity(&decomp, &r);
            let minus = -&r;
            let partner = rational_root_multiplicity(&decomp, &minus);
            if partner > 0 && r.is_negative() {
                continue; // counted from the positive representative
            }
            groups.push((ratio_ln(&r.abs()), mult + partner));
            continue;
        }
        let (lo, hi) = shrink_for_reflection(&sf, lo, hi);
        if lo == hi {
            // Refinement discovered the root exactly.
            let r = lo;
            let mult = rational_root_multiplicity(&decomp, &r);
            let minus = -&r;
            let partner = rational_root_multiplicity(&decomp, &minus);
            if partner > 0 && r.is_negative() {
                continue;
            }
            groups.push((ratio_ln(&r.abs()), mult + partner));
            continue;
        }
        let mult = decomp
            .iter()
            .find(|(f, _)| f.count_real_roots_in(&lo, &hi) == 1)
            .map(|(_, m)| *m as usize)
            .expect("every root belongs to a factor");
        let negative = !hi.is_positive();
        let (rlo, rhi) = (-&hi, -&lo);
        let is_paired = has_pairs && paired.count_real_roots_in(&lo, &hi) == 1;
        if is_paired && negative {
            continue; // counted from the positive representative
        }
        let partner = if is_paired {
            decomp
                .iter()
                .find(|(f, _)| f.count_real_roots_in(&rlo, &rhi) == 1)
                .map(|(_, m)| *m as usize)
                .expect("paired root belongs to a factor")
        } else {
            0
        };
        let (flo, fhi) = sf.refine_root_relative(&(lo, hi), 55);
        let mid = (&flo + &fhi) / BigRational::from_integer(2.into());
        groups.push((ratio_ln(&mid.abs()), mult + partner));
    }
    groups.sort_by(|x, y| y.0.total_cmp(&x.0));
    groups
}

fn rational_root_multiplicity(decomp: &[(RationalPoly, u32)], r: &BigRational) -> usize {
    decomp
        .iter()
        .find(|(f, _)| f.eval(r).is_zero())
        .map(|(_, m)| *m as usize)
        .unwrap_or(0)
}

/// Shrinks an isolating interval `(lo, hi]` of a simple nonzero root of
/// `sf` until it no longer straddles zero and its reflection contains at
/// most one root of `sf`, so sign and pairing queries become unambiguous.
fn shrink_for_reflection(
    sf: &RationalPoly,
    mut lo: BigRational,
    mut hi: BigRational,
) -> (BigRational, BigRational) {
    let two = BigRational::from_integer(2.into());
    let mut flo = sf.eval(&lo);
    debug_assert!(!flo.is_zero(), "interval endpoints are non-roots");
    for _ in 0..20_000 {
        let straddles = lo.is_negative() && hi.is_positive();
        let refl = sf.count_real_roots_in(&-&hi, &-&lo);
        if !straddles && refl <= 1 {
            break;
        }
        let mid = (&lo + &hi) / &two;
        let fmid = sf.eval(&mid);
        if fmid.is_zero() {
            return (mid.clone(), mid);
        }
        if fmid.is_negative() == flo.is_negative() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
