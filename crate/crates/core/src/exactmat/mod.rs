//! Exact unimodular matrices over the rationals.
//!
//! `RationalMatrix` is the arithmetic backbone: every group element is one
//! of these, every discrete decision (relations, finite order, complex
//! spectrum) is made here exactly, and the floating point layer only sees
//! values after an exact power-of-two scaling puts them in range.

pub mod poly;

use crate::xfloat::ratio_xf;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use poly::{cubic_discriminant, cyclotomic_factor_orders, RationalPoly};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("matrix dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("expected {expected} entries for a {n} x {n} matrix, got {got}")]
    EntryCount { n: usize, expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("determinant is {0}, matrices must have determinant one")]
    NotUnimodular(String),
    #[error("exterior power degree {k} out of range 1..{n}")]
    ExteriorDegree { n: usize, k: usize },
    #[error("cannot parse rational entry '{0}'")]
    BadEntry(String),
}

/// Outcome of the exact finite-order decision.
///
/// `Finite(k)` means `g^k = 1` with `k <= k_max` minimal. `ProvablyInfinite`
/// is a certificate: either a characteristic polynomial coefficient exceeds
/// its all-moduli-one bound, the (integer) characteristic polynomial is not
/// a product of cyclotomic factors, the polynomial is cyclotomic but the
/// matching power is not the identity, or the polynomial is monic rational
/// non-integer (finite order forces integer cyclotomic coefficients).
/// `InfiniteOrExceedsBound` is only reached when the element is finite of
/// order beyond `k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiniteOrder {
    Finite(u32),
    InfiniteOrExceedsBound,
    ProvablyInfinite,
}

/// Square matrix over the rationals with determinant exactly one,
/// dimension at least two. Entries are stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    n: usize,
    e: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn new(n: usize, entries: Vec<BigRational>) -> Result<RationalMatrix, ExactError> {
        if n < 2 {
            return Err(ExactError::DimensionTooSmall(n));
        }
        if entries.len() != n * n {
            return Err(ExactError::EntryCount { n, expected: n * n, got: entries.len() });
        }
        let m = RationalMatrix { n, e: entries };
        let d = m.det();
        if !d.is_one() {
            return Err(ExactError::NotUnimodular(rat_str(&d)));
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> RationalMatrix {
        let mut e = vec![BigRational::zero(); n * n];
        for i in 0..n {
            e[i * n + i] = BigRational::one();
        }
        RationalMatrix { n, e }
    }

    /// Parses entries like `"-3"` and `"1/2"`.
    pub fn from_rows_str(rows: &[Vec<&str>]) -> Result<RationalMatrix, ExactError> {
        let n = rows.len();
        let mut e = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(ExactError::EntryCount { n, expected: n * n, got: row.len() * n });
            }
            for s in row {
                e.push(parse_rational(s)?);
            }
        }
        RationalMatrix::new(n, e)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<RationalMatrix, ExactError> {
        let n = rows.len();
        let mut e = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(ExactError::EntryCount { n, expected: n * n, got: row.len() * n });
            }
            for &x in row.iter() {
                e.push(BigRational::from(BigInt::from(x)));
            }
        }
        RationalMatrix::new(n, e)
    }

    pub fn diagonal(entries: Vec<BigRational>) -> Result<RationalMatrix, ExactError> {
        let n = entries.len();
        let mut e = vec![BigRational::zero(); n * n];
        for (i, x) in entries.into_iter().enumerate() {
            e[i * n + i] = x;
        }
        RationalMatrix::new(n, e)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        &self.e[i * self.n + j]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.e
    }

    /// Entries rendered as `p` or `p/q` strings, row by row.
    pub fn rows_str(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| rat_str(self.entry(i, j))).collect())
            .collect()
    }

    /// Rough storage estimate in bytes, driven by the numerator and
    /// denominator bit lengths; used for enumeration memory budgets.
    pub fn byte_estimate(&self) -> usize {
        self.e
            .iter()
            .map(|x| (x.numer().bits() as usize + x.denom().bits() as usize) / 8 + 32)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                let want_one = i == j;
                let x = self.entry(i, j);
                if want_one != x.is_one() || (!want_one && !x.is_zero()) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_integer(&self) -> bool {
        self.e.iter().all(|x| x.is_integer())
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut e = Vec::with_capacity(self.n * self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                e.push(self.entry(i, j).clone());
            }
        }
        RationalMatrix { n: self.n, e }
    }

    pub fn multiply(&self, rhs: &RationalMatrix) -> Result<RationalMatrix, ExactError> {
        if self.n != rhs.n {
            return Err(ExactError::DimensionMismatch(self.n, rhs.n));
        }
        Ok(self.dot(rhs))
    }

    /// Product with a matrix of the same dimension (checked in debug).
    /// All entries as i64 when every one is an integer in machine range.
    fn as_i64_entries(&self) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(self.e.len());
        for x in &self.e {
            if !x.denom().is_one() {
                return None;
            }
            out.push(x.numer().to_i64()?);
        }
        Some(out)
    }

    pub fn dot(&self, rhs: &RationalMatrix) -> RationalMatrix {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        // Machine-word fast path: when both operands are integer with
        // entries in i64 range, accumulate in i128. A product of two i64
        // values plus n - 1 more of them cannot overflow i128, so this is
        // exact; results straddle back into BigInt losslessly.
        if let (Some(a), Some(b)) = (self.as_i64_entries(), rhs.as_i64_entries()) {
            let mut e = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc: i128 = 0;
                    for k in 0..n {
                        acc += a[i * n + k] as i128 * b[k * n + j] as i128;
                    }
                    e.push(BigRational::from_integer(BigInt::from(acc)));
                }
            }
            return RationalMatrix { n, e };
        }
        let mut e = vec![BigRational::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entry(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = rhs.entry(k, j);
                    if !b.is_zero() {
                        e[i * n + j] += a * b;
                    }
                }
            }
        }
        RationalMatrix { n, e }
    }

    fn det(&self) -> BigRational {
        det_dense(self.n, &mut self.e.to_vec())
    }

    /// Exact inverse; always exists since the determinant is one.
    pub fn inverse(&self) -> RationalMatrix {
        let n = self.n;
        let mut a: Vec<BigRational> = self.e.clone();
        let mut inv = RationalMatrix::identity(n).e;
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[r * n + col].is_zero())
                .expect("unimodular matrix is invertible");
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[col * n + col].clone();
            for j in 0..n {
                a[col * n + j] /= &p;
                inv[col * n + j] /= &p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = &a[col * n + j] * &f;
                    a[r * n + j] -= t;
                    let t = &inv[col * n + j] * &f;
                    inv[r * n + j] -= t;
                }
            }
        }
        RationalMatrix { n, e: inv }
    }

    /// Integer power, negative powers through the exact inverse.
    pub fn pow(&self, k: i64) -> RationalMatrix {
        if k == 0 {
            return RationalMatrix::identity(self.n);
        }
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut exp = k.unsigned_abs();
        let mut acc = RationalMatrix::identity(self.n);
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.dot(&sq);
            }
            exp >>= 1;
            if exp > 0 {
                sq = sq.dot(&sq);
            }
        }
        acc
    }

    /// `h * self * h^{-1}`.
    pub fn conjugate_by(&self, h: &RationalMatrix) -> Result<RationalMatrix, ExactError> {
        if self.n != h.n {
            return Err(ExactError::DimensionMismatch(self.n, h.n));
        }
        Ok(h.dot(self).dot(&h.inverse()))
    }

    /// `self^T * self`, the exact Gram matrix.
    pub fn gram(&self) -> RationalMatrix {
        self.transpose().dot(self)
    }

    pub fn trace(&self) -> BigRational {
        let mut t = BigRational::zero();
        for i in 0..self.n {
            t += self.entry(i, i);
        }
        t
    }

    /// Monic characteristic polynomial, exact. Dimension 2 and 3 go
    /// through trace and principal minors; larger dimensions through the
    /// Faddeev-LeVerrier recurrence.
    pub fn char_poly(&self) -> CharPoly {
        let n = self.n;
        let p = match n {
            2 => {
                let t = self.trace();
                // x^2 - t x + det, det = 1.
                RationalPoly::new(vec![BigRational::one(), -t, BigRational::one()])
            }
            3 => {
                let t = self.trace();
                let mut s = BigRational::zero();
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        s += self.entry(i, i) * self.entry(j, j)
                            - self.entry(i, j) * self.entry(j, i);
                    }
                }
                // x^3 - t x^2 + s x - det, det = 1.
                RationalPoly::new(vec![-BigRational::one(), s, -t, BigRational::one()])
            }
            _ => {
                // Faddeev-LeVerrier: M_1 = A, c_{n-1} = -tr M_1,
                // M_{k+1} = A (M_k + c_{n-k} I), c_{n-k-1} = -tr(M_{k+1})/(k+1).
                let mut coeffs = vec![BigRational::zero(); n + 1];
                coeffs[n] = BigRational::one();
                let mut m = self.clone();
                for k in 1..=n {
                    let c = -m.trace() / BigRational::from(BigInt::from(k as i64));
                    coeffs[n - k] = c.clone();
                    if k < n {
                        let mut shifted = m.clone();
                        for i in 0..n {
                            let idx = i * n + i;
                            shifted.e[idx] = &shifted.e[idx] + &c;
                        }
                        m = self.dot(&shifted);
                    }
                }
                RationalPoly::new(coeffs)
            }
        };
        CharPoly { n, p }
    }

    /// Exact k-th exterior power in the lexicographic basis of k-subsets:
    /// entry (I, J) is the k x k minor with rows I and columns J.
    pub fn exterior_power(&self, k: usize) -> Result<RationalMatrix, ExactError> {
        let n = self.n;
        if k < 1 || k >= n {
            return Err(ExactError::ExteriorDegree { n, k });
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let subsets = combinations(n, k);
        let dim = subsets.len();
        let mut e = Vec::with_capacity(dim * dim);
        let mut scratch = vec![BigRational::zero(); k * k];
        for rows in &subsets {
            for cols in &subsets {
                for (a, &i) in rows.iter().enumerate() {
                    for (b, &j) in cols.iter().enumerate() {
                        scratch[a * k + b] = self.entry(i, j).clone();
                    }
                }
                e.push(det_dense(k, &mut scratch.clone()));
            }
        }
        debug_assert!(dim >= 2);
        let m = RationalMatrix { n: dim, e };
        debug_assert!(m.det().is_one(), "exterior power stays unimodular");
        Ok(m)
    }

    /// Exact finite order decision, complete for rational matrices except
    /// that finite orders beyond `k_max` report `InfiniteOrExceedsBound`.
    ///
    /// No power scan: the characteristic polynomial either fails a
    /// finite-order certificate (a coefficient beyond its all-moduli-one
    /// bound, a non-integer coefficient, or a non-cyclotomic factor) or
    /// bounds the possible order by the lcm of the cyclotomic factor
    /// orders, and the true order is found among that lcm's divisors.
    pub fn finite_order(&self, k_max: u32) -> FiniteOrder {
        if self.is_identity() {
            return FiniteOrder::Finite(1);
        }
        let cp = self.char_poly();
        // All eigenvalue moduli equal to one bounds |c_{n-k}| by C(n, k).
        let n = self.n;
        for k in 1..=n {
            if cp.poly().coeff(n - k).abs() > BigRational::from(binomial(n, k)) {
                return FiniteOrder::ProvablyInfinite;
            }
        }
        if cp.poly().integer_coeffs().is_none() {
            // Finite order forces an integer (cyclotomic product) char poly.
            return FiniteOrder::ProvablyInfinite;
        }
        match cyclotomic_factor_orders(cp.poly()) {
            None => FiniteOrder::ProvablyInfinite,
            Some(orders) => {
                let m: u64 = orders.iter().fold(1u64, |acc, &x| acc.lcm(&x));
                if !self.pow(m as i64).is_identity() {
                    // Quasi-unipotent with a nontrivial Jordan block.
                    return FiniteOrder::ProvablyInfinite;
                }
                let ord = divisors_ascending(m)
                    .into_iter()
                    .find(|&d| self.pow(d as i64).is_identity())
                    .expect("m itself is an identity power");
                if ord <= k_max as u64 {
                    FiniteOrder::Finite(ord as u32)
                } else {
                    FiniteOrder::InfiniteOrExceedsBound
                }
            }
        }
    }

    /// Deterministic canonical form used for exact dedup keys:
    /// `n=3;1,1,2;0,1,1;0,-3,-2` with entries as `p` or `p/q`.
    pub fn canonical_key(&self) -> String {
        let mut s = format!("n={}", self.n);
        for i in 0..self.n {
            s.push(';');
            for j in 0..self.n {
                if j > 0 {
                    s.push(',');
                }
                s.push_str(&rat_str(self.entry(i, j)));
            }
        }
        s
    }

    /// FNV-1a over the canonical key; stable across runs and platforms.
    pub fn content_hash(&self) -> u64 {
        fnv1a(self.canonical_key().as_bytes())
    }

    /// Scaled f64 view: `(entries, e)` with every entry divided by `2^e`
    /// so the largest magnitude lands in `[0.5, 1)`. The identity-scale
    /// `e = 0` is used for the zero matrix (which cannot occur here).
    pub fn to_f64_scaled(&self) -> (Vec<f64>, i64) {
        let mut max_e = i64::MIN;
        let xs: Vec<crate::xfloat::Xf> = self.e.iter().map(ratio_xf).collect();
        for x in &xs {
            if !x.is_zero() {
                max_e = max_e.max(x.exponent());
            }
        }
        if max_e == i64::MIN {
            max_e = 0;
        }
        let out = xs.iter().map(|x| x.scaled(-max_e).to_f64()).collect();
        (out, max_e)
    }

    /// Plain f64 entries; saturates outside the representable range.
    pub fn to_f64(&self) -> Vec<f64> {
        self.e.iter().map(|x| ratio_xf(x).to_f64()).collect()
    }

    /// Natural log of the largest entry magnitude (None for zero matrix).
    pub fn max_entry_ln(&self) -> Option<f64> {
        self.e
            .iter()
            .filter(|x| !x.is_zero())
            .map(|x| ratio_xf(x).ln_abs())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }
}

/// Characteristic polynomial of an n x n rational matrix: monic, degree n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharPoly {
    n: usize,
    p: RationalPoly,
}

impl CharPoly {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn poly(&self) -> &RationalPoly {
        &self.p
    }

    /// Discriminant, defined here for the cubic case: negative exactly
    /// when the spectrum has a complex conjugate pair.
    pub fn discriminant_cubic(&self) -> Option<BigRational> {
        if self.n == 3 {
            Some(cubic_discriminant(&self.p))
        } else {
            None
        }
    }

    /// `(x - 1)^n` test: true exactly for unipotent matrices.
    pub fn is_unipotent_shape(&self) -> bool {
        let mut q = RationalPoly::one();
        let xm1 = RationalPoly::new(vec![-BigRational::one(), BigRational::one()]);
        for _ in 0..self.n {
            q = q.mul(&xm1);
        }
        self.p == q
    }

    /// Evaluates the polynomial at a matrix argument (Horner), exactly.
    pub fn eval_matrix(&self, g: &RationalMatrix) -> Result<Vec<BigRational>, ExactError> {
        if g.n != self.n {
            return Err(ExactError::DimensionMismatch(g.n, self.n));
        }
        Ok(eval_poly_matrix(&self.p, g))
    }
}

/// Evaluates an arbitrary rational polynomial at a matrix, returning the
/// raw entry vector (the result is usually not unimodular).
pub fn eval_poly_matrix(p: &RationalPoly, g: &RationalMatrix) -> Vec<BigRational> {
    let n = g.n();
    let mut acc = vec![BigRational::zero(); n * n];
    for c in p.coeffs().iter().rev() {
        // acc = acc * g + c I
        let mut next = vec![BigRational::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &acc[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = g.entry(k, j);
                    if !b.is_zero() {
                        next[i * n + j] += a * b;
                    }
                }
            }
        }
        for i in 0..n {
            next[i * n + i] += c;
        }
        acc = next;
    }
    acc
}

/// Exact determinant of a dense buffer (consumed as scratch).
fn det_dense(n: usize, a: &mut Vec<BigRational>) -> BigRational {
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !a[r * n + col].is_zero()) {
            Some(p) => p,
            None => return BigRational::zero(),
        };
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col].clone();
        det *= &p;
        for r in (col + 1)..n {
            let f = &a[r * n + col] / &p;
            if f.is_zero() {
                continue;
            }
            for j in col..n {
                let t = &a[col * n + j] * &f;
                a[r * n + j] -= t;
            }
        }
    }
    det
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in (i + 1)..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// All positive divisors of `m` in ascending order.
pub fn divisors_ascending(m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1u64;
    while d.saturating_mul(d) <= m {
        if m % d == 0 {
            out.push(d);
            if d != m / d {
                out.push(m / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k.min(n - k) {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

pub fn parse_rational(s: &str) -> Result<BigRational, ExactError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ExactError::BadEntry(s.to_string()));
    }
    match t.parse::<BigRational>() {
        Ok(v) => Ok(v),
        Err(_) => Err(ExactError::BadEntry(s.to_string())),
    }
}

/// `p` or `p/q`, canonical reduced form.
pub fn rat_str(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("RationalMatrix", 2)?;
        st.serialize_field("n", &self.n)?;
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| rat_str(self.entry(i, j))).collect())
            .collect();
        st.serialize_field("rows", &rows)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            rows: Vec<Vec<String>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.rows.len() != raw.n {
            return Err(D::Error::custom(format!(
                "expected {} rows, got {}",
                raw.n,
                raw.rows.len()
            )));
        }
        let mut entries = Vec::with_capacity(raw.n * raw.n);
        for row in &raw.rows {
            if row.len() != raw.n {
                return Err(D::Error::custom(format!(
                    "expected {} entries per row, got {}",
                    raw.n,
                    row.len()
                )));
            }
            for s in row {
                entries.push(parse_rational(s).map_err(D::Error::custom)?);
            }
        }
        RationalMatrix::new(raw.n, entries).map_err(D::Error::custom)
    }
}
