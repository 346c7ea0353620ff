//! Exact univariate polynomials over the rationals.
//!
//! Everything here is exact: Euclidean division, gcd, Yun square-free
//! decomposition, Sturm chains for real root counting and isolation, and
//! cyclotomic factor detection. The floating point layer only ever sees
//! polynomials after this module has resolved every discrete question
//! (multiplicities, number of real roots, finite order).

use crate::xfloat::ratio_to_f64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Polynomial with exact rational coefficients, ascending degree order,
/// no trailing zero coefficients (the zero polynomial has no coefficients).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly {
    c: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> RationalPoly {
        while coeffs.last().map_or(false, |x| x.is_zero()) {
            coeffs.pop();
        }
        RationalPoly { c: coeffs }
    }

    pub fn zero() -> RationalPoly {
        RationalPoly { c: Vec::new() }
    }

    pub fn one() -> RationalPoly {
        RationalPoly::new(vec![BigRational::one()])
    }

    pub fn from_i64(coeffs: &[i64]) -> RationalPoly {
        RationalPoly::new(coeffs.iter().map(|&k| BigRational::from(BigInt::from(k))).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.c.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.c.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().map_or(false, |l| l.is_one())
    }

    /// Integer coefficient vector when every coefficient is integral.
    pub fn integer_coeffs(&self) -> Option<Vec<BigInt>> {
        self.c
            .iter()
            .map(|x| if x.is_integer() { Some(x.to_integer()) } else { None })
            .collect()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.c.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> RationalPoly {
        if self.c.len() <= 1 {
            return RationalPoly::zero();
        }
        RationalPoly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn neg(&self) -> RationalPoly {
        RationalPoly::new(self.c.iter().map(|x| -x).collect())
    }

    pub fn add(&self, rhs: &RationalPoly) -> RationalPoly {
        let len = self.c.len().max(rhs.c.len());
        RationalPoly::new((0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }

    pub fn sub(&self, rhs: &RationalPoly) -> RationalPoly {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &RationalPoly) -> RationalPoly {
        if self.is_zero() || rhs.is_zero() {
            return RationalPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.c.len() + rhs.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RationalPoly::new(out)
    }

    pub fn scale(&self, s: &BigRational) -> RationalPoly {
        RationalPoly::new(self.c.iter().map(|x| x * s).collect())
    }

    /// Monic multiple of self (zero stays zero).
    pub fn monic(&self) -> RationalPoly {
        match self.leading() {
            None => RationalPoly::zero(),
            Some(l) => self.scale(&l.recip()),
        }
    }

    /// `p(-x)`.
    pub fn compose_neg(&self) -> RationalPoly {
        RationalPoly::new(
            self.c
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 0 { c.clone() } else { -c })
                .collect(),
        )
    }

    /// Exact Euclidean division: `self = q * d + r` with `deg r < deg d`.
    pub fn divmod(&self, d: &RationalPoly) -> (RationalPoly, RationalPoly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.degree().unwrap();
        let lead = d.leading().unwrap().clone();
        let mut rem = self.c.clone();
        if rem.len() < d.c.len() {
            return (RationalPoly::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); rem.len() - dd];
        for k in (dd..rem.len()).rev() {
            let factor = &rem[k] / &lead;
            if !factor.is_zero() {
                q[k - dd] = factor.clone();
                for (j, dc) in d.c.iter().enumerate() {
                    let idx = k - dd + j;
                    rem[idx] = &rem[idx] - &factor * dc;
                }
            }
            rem[k] = BigRational::zero();
        }
        (RationalPoly::new(q), RationalPoly::new(rem))
    }

    /// Exact quotient when `d` divides self, else `None`.
    pub fn divide_exact(&self, d: &RationalPoly) -> Option<RationalPoly> {
        let (q, r) = self.divmod(d);
        if r.is_zero() {
            Some(q)
        } else {
            None
        }
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, rhs: &RationalPoly) -> RationalPoly {
        let mut a = self.clone();
        let mut b = rhs.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `self / gcd(self, self')`: same roots, all simple.
    pub fn squarefree_part(&self) -> RationalPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.divide_exact(&g)
            .expect("gcd divides")
            .monic()
    }

    /// Yun square-free decomposition: monic pairwise coprime square-free
    /// factors with their multiplicities, so `self ~ prod f_i^{m_i}`.
    pub fn squarefree_decomposition(&self) -> Vec<(RationalPoly, u32)> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let p = self.monic();
        let dp = p.derivative();
        let g = p.gcd(&dp);
        if g.degree() == Some(0) {
            return vec![(p, 1)];
        }
        let mut b = p.divide_exact(&g).expect("gcd divides");
        let c = dp.divide_exact(&g).expect("gcd divides derivative");
        let mut d = c.sub(&b.derivative());
        let mut out = Vec::new();
        let mut i = 1u32;
        while b.degree().unwrap_or(0) > 0 {
            let a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.monic(), i));
            }
            b = b.divide_exact(&a).expect("factor divides");
            let y = d.divide_exact(&a).expect("factor divides");
            d = y.sub(&b.derivative());
            i += 1;
        }
        out
    }

    /// Number of distinct real roots, by a Sturm chain on the square-free
    /// part. Exact.
    pub fn count_distinct_real_roots(&self) -> usize {
        let sf = self.squarefree_part();
        if sf.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let chain = sturm_chain(&sf);
        variations_at_neg_inf(&chain) - variations_at_pos_inf(&chain)
    }

    /// True when some root is not real. Exact for any degree.
    pub fn has_nonreal_root(&self) -> bool {
        let sf = self.squarefree_part();
        match sf.degree() {
            None | Some(0) => false,
            Some(d) => self.count_distinct_real_roots() < d,
        }
    }

    /// True when roots `x` and `-x` coexist for some `x != 0`. Exact.
    pub fn has_plus_minus_pair(&self) -> bool {
        let g = self.gcd(&self.compose_neg());
        match g.degree() {
            None | Some(0) => false,
            Some(_) => {
                // A shared root at zero is not a pair.
                if self.coeff(0).is_zero() {
                    let x = RationalPoly::new(vec![BigRational::zero(), BigRational::one()]);
                    let mut reduced = g;
                    while reduced.coeff(0).is_zero() && reduced.degree().unwrap_or(0) > 0 {
                        reduced = reduced.divide_exact(&x).expect("x divides");
                    }
                    reduced.degree().unwrap_or(0) > 0
                } else {
                    true
                }
            }
        }
    }

    /// Intervals `(lo, hi]` each holding exactly one real root of the
    /// square-free part, plus exact rational roots as degenerate
    /// `[r, r]` intervals. Exact bookkeeping throughout.
    pub fn isolate_real_roots(&self) -> Vec<(BigRational, BigRational)> {
        let sf = self.squarefree_part();
        if sf.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let chain = sturm_chain(&sf);
        let bound = root_bound(&sf);
        let mut lo = -&bound;
        let mut hi = bound.clone();
        // Nudge endpoints off roots.
        while sf.eval(&lo).is_zero() {
            lo = &lo - BigRational::one();
        }
        while sf.eval(&hi).is_zero() {
            hi = &hi + BigRational::one();
        }
        let total = count_in(&chain, &lo, &hi);
        let mut out = Vec::new();
        let mut stack = vec![(lo, hi, total)];
        while let Some((a, b, count)) = stack.pop() {
            match count {
                0 => {}
                1 => out.push((a, b)),
                _ => {
                    let mid = (&a + &b) / BigRational::from(BigInt::from(2));
                    if sf.eval(&mid).is_zero() {
                        // Exact rational root at the midpoint: peel it off and
                        // recurse on a punctured neighborhood that excludes it.
                        out.push((mid.clone(), mid.clone()));
                        let mut w = (&b - &a) / BigRational::from(BigInt::from(4));
                        let (wl, wr) = loop {
                            let cl = &mid - &w;
                            let cr = &mid + &w;
                            if !sf.eval(&cl).is_zero()
                                && !sf.eval(&cr).is_zero()
                                && count_in(&chain, &cl, &cr) == 1
                            {
                                break (cl, cr);
                            }
                            w /= BigRational::from(BigInt::from(2));
                        };
                        let left = count_in(&chain, &a, &wl);
                        let right = count_in(&chain, &wr, &b);
                        stack.push((a, wl, left));
                        stack.push((wr, b, right));
                    } else {
                        let left = count_in(&chain, &a, &mid);
                        stack.push((a, mid.clone(), left));
                        stack.push((mid, b, count - left));
                    }
                }
            }
        }
        out.sort_by(|x, y| x.0.cmp(&y.0));
        out
    }

    /// Refines one isolating interval to an f64 by exact sign bisection.
    pub fn refine_root_to_f64(&self, interval: &(BigRational, BigRational)) -> f64 {
        let sf = self.squarefree_part();
        let (mut lo, mut hi) = interval.clone();
        if lo == hi {
            return ratio_to_f64(&lo);
        }
        let mut flo = sf.eval(&lo);
        if flo.is_zero() {
            return ratio_to_f64(&lo);
        }
        for _ in 0..200 {
            if ratio_to_f64(&lo) == ratio_to_f64(&hi) {
                break;
            }
            let mid = (&lo + &hi) / BigRational::from(BigInt::from(2));
            let fmid = sf.eval(&mid);
            if fmid.is_zero() {
                return ratio_to_f64(&mid);
            }
            if (fmid.is_negative()) == (flo.is_negative()) {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
        let a = ratio_to_f64(&lo);
        let b = ratio_to_f64(&hi);
        0.5 * (a + b)
    }

    /// All real roots as f64, ascending, one per distinct real root.
    pub fn real_roots_f64(&self) -> Vec<f64> {
        self.isolate_real_roots()
            .iter()
            .map(|iv| self.refine_root_to_f64(iv))
            .collect()
    }

    /// Number of distinct real roots in the half-open interval `(lo, hi]`,
    /// exact via a Sturm chain of the square-free part.
    pub fn count_real_roots_in(&self, lo: &BigRational, hi: &BigRational) -> usize {
        if lo >= hi {
            return 0;
        }
        let sf = self.squarefree_part();
        let chain = sturm_chain(&sf);
        count_in(&chain, lo, hi)
    }

    /// Refines an isolating interval of a nonzero root until its width is
    /// below `2^-bits` of the root magnitude, by exact sign bisection.
    /// The midpoint then determines the root to `bits` significant bits
    /// at any scale, far outside the f64 range included.
    pub fn refine_root_relative(
        &self,
        interval: &(BigRational, BigRational),
        bits: u32,
    ) -> (BigRational, BigRational) {
        let sf = self.squarefree_part();
        let (mut lo, mut hi) = interval.clone();
        if lo == hi {
            return (lo, hi);
        }
        let mut flo = sf.eval(&lo);
        if flo.is_zero() {
            return (lo.clone(), lo);
        }
        let two = BigRational::from(BigInt::from(2));
        let tol_scale = BigRational::new(BigInt::one(), BigInt::one() << (bits as usize));
        for _ in 0..20_000 {
            let mag = lo.abs().min(hi.abs());
            if !mag.is_zero() && (&hi - &lo) <= mag * &tol_scale {
                break;
            }
            let mid = (&lo + &hi) / &two;
            let fmid = sf.eval(&mid);
            if fmid.is_zero() {
                return (mid.clone(), mid);
            }
            if (fmid.is_negative()) == (flo.is_negative()) {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }
}

/// `1 + max |c_k / c_n|`: every root has modulus below this (Cauchy).
fn root_bound(p: &RationalPoly) -> BigRational {
    let lead = p.leading().expect("nonzero").abs();
    let mut m = BigRational::zero();
    for c in p.coeffs() {
        let v = c.abs() / &lead;
        if v > m {
            m = v;
        }
    }
    m + BigRational::one()
}

fn sturm_chain(sf: &RationalPoly) -> Vec<RationalPoly> {
    let mut chain = vec![sf.clone(), sf.derivative()];
    loop {
        let k = chain.len();
        if chain[k - 1].is_zero() {
            chain.pop();
            break;
        }
        let (_, r) = chain[k - 2].divmod(&chain[k - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(r.neg());
    }
    chain
}

fn sign_variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut v = 0usize;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            v += 1;
        }
        last = s;
    }
    v
}

fn sign_of(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_negative() {
        -1
    } else {
        1
    }
}

fn variations_at_neg_inf(chain: &[RationalPoly]) -> usize {
    sign_variations(chain.iter().map(|p| match p.degree() {
        None => 0,
        Some(d) => {
            let s = sign_of(p.leading().unwrap());
            if d % 2 == 0 {
                s
            } else {
                -s
            }
        }
    }))
}

fn variations_at_pos_inf(chain: &[RationalPoly]) -> usize {
    sign_variations(chain.iter().map(|p| match p.degree() {
        None => 0,
        Some(_) => sign_of(p.leading().unwrap()),
    }))
}

fn variations_at(chain: &[RationalPoly], x: &BigRational) -> usize {
    sign_variations(chain.iter().map(|p| sign_of(&p.eval(x))))
}

/// Distinct real roots in `(a, b]`, both endpoints non-roots of the chain
/// head.
fn count_in(chain: &[RationalPoly], a: &BigRational, b: &BigRational) -> usize {
    variations_at(chain, a).saturating_sub(variations_at(chain, b))
}

/// Euler totient.
pub fn euler_phi(mut m: u64) -> u64 {
    let mut result = m;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// The m-th cyclotomic polynomial, exact integer coefficients.
pub fn cyclotomic(m: u64) -> RationalPoly {
    // x^m - 1 divided by the product of all proper cyclotomic divisors.
    let mut xm1 = vec![BigRational::zero(); m as usize + 1];
    xm1[0] = -BigRational::one();
    xm1[m as usize] = BigRational::one();
    let mut p = RationalPoly::new(xm1);
    for d in 1..m {
        if m % d == 0 {
            let phi_d = cyclotomic(d);
            p = p.divide_exact(&phi_d).expect("cyclotomic divisor");
        }
    }
    p
}

/// When `p` (monic, integer coefficients) is a product of cyclotomic
/// polynomials, the multiset of their orders; otherwise `None`.
///
/// With Kronecker's theorem this decides whether all eigenvalue moduli
/// can equal one: a monic integer polynomial whose roots all lie on the
/// unit circle is exactly such a product.
pub fn cyclotomic_factor_orders(p: &RationalPoly) -> Option<Vec<u64>> {
    let deg = p.degree()?;
    if !p.is_monic() || p.integer_coeffs().is_none() {
        return None;
    }
    if deg == 0 {
        return Some(Vec::new());
    }
    let candidates: Vec<u64> = (1..=3 * (deg as u64) * (deg as u64) + 2)
        .filter(|&m| euler_phi(m) <= deg as u64)
        .collect();
    fn rec(p: &RationalPoly, candidates: &[u64]) -> Option<Vec<u64>> {
        if p.degree() == Some(0) {
            return Some(Vec::new());
        }
        for (i, &m) in candidates.iter().enumerate() {
            let phi = cyclotomic(m);
            if phi.degree() > p.degree() {
                continue;
            }
            if let Some(q) = p.divide_exact(&phi) {
                // Allow repeats of the same factor: keep m in the slice.
                if let Some(mut rest) = rec(&q, &candidates[i..]) {
                    rest.push(m);
                    return Some(rest);
                }
            }
        }
        None
    }
    rec(&p.monic(), &candidates).map(|mut v| {
        v.sort_unstable();
        v
    })
}

/// Discriminant of a monic cubic `x^3 + b x^2 + c x + d`:
/// `18 b c d - 4 b^3 d + b^2 c^2 - 4 c^3 - 27 d^2`. Negative exactly when
/// there is one real root and a complex conjugate pair.
pub fn cubic_discriminant(p: &RationalPoly) -> BigRational {
    assert_eq!(p.degree(), Some(3), "cubic discriminant needs degree 3");
    let p = p.monic();
    let b = p.coeff(2);
    let c = p.coeff(1);
    let d = p.coeff(0);
    let r18 = BigRational::from(BigInt::from(18));
    let r4 = BigRational::from(BigInt::from(4));
    let r27 = BigRational::from(BigInt::from(27));
    &r18 * &b * &c * &d - &r4 * &b * &b * &b * &d + &b * &b * &c * &c
        - &r4 * &c * &c * &c
        - &r27 * &d * &d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> RationalPoly {
        RationalPoly::from_i64(coeffs)
    }

    #[test]
    fn divmod_exact() {
        // (x^2 - 1) = (x - 1)(x + 1)
        let num = p(&[-1, 0, 1]);
        let den = p(&[-1, 1]);
        let (q, r) = num.divmod(&den);
        assert_eq!(q, p(&[1, 1]));
        assert!(r.is_zero());
    }

    #[test]
    fn gcd_shared_factor() {
        let a = p(&[-1, 0, 1]); // (x-1)(x+1)
        let b = p(&[1, -2, 1]); // (x-1)^2
        assert_eq!(a.gcd(&b), p(&[-1, 1]));
    }

    #[test]
    fn yun_decomposition() {
        // (x-1)^3 (x+2)^2 = expanded below
        let f = p(&[-1, 1]);
        let g = p(&[2, 1]);
        let input = f.mul(&f).mul(&f).mul(&g).mul(&g);
        let dec = input.squarefree_decomposition();
        assert_eq!(dec, vec![(p(&[2, 1]), 2), (p(&[-1, 1]), 3)]);
    }

    #[test]
    fn sturm_counts() {
        // x^3 - 1: one real root.
        assert_eq!(p(&[-1, 0, 0, 1]).count_distinct_real_roots(), 1);
        assert!(p(&[-1, 0, 0, 1]).has_nonreal_root());
        // x^3 - 4x: three real roots, with a +- pair.
        assert_eq!(p(&[0, -4, 0, 1]).count_distinct_real_roots(), 3);
        assert!(!p(&[0, -4, 0, 1]).has_nonreal_root());
        assert!(p(&[0, -4, 0, 1]).has_plus_minus_pair());
        // x^3 - 7x^2 + 14x - 8 = (x-1)(x-2)(x-4): no pair.
        assert!(!p(&[-8, 14, -7, 1]).has_plus_minus_pair());
        // (x-1)^3: one distinct real root, no complex.
        assert_eq!(p(&[-1, 3, -3, 1]).count_distinct_real_roots(), 1);
        assert!(!p(&[-1, 3, -3, 1]).has_nonreal_root());
    }

    #[test]
    fn isolate_and_refine() {
        // (x-1)(x-2)(x-4)
        let poly = p(&[-8, 14, -7, 1]);
        let roots = poly.real_roots_f64();
        assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([1.0, 2.0, 4.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Irrational roots: x^2 - 2.
        let r2 = p(&[-2, 0, 1]).real_roots_f64();
        assert!((r2[1] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cyclotomic_basics() {
        assert_eq!(cyclotomic(1), p(&[-1, 1]));
        assert_eq!(cyclotomic(2), p(&[1, 1]));
        assert_eq!(cyclotomic(3), p(&[1, 1, 1]));
        assert_eq!(cyclotomic(4), p(&[1, 0, 1]));
        assert_eq!(cyclotomic(6), p(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), p(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn cyclotomic_products_recognized() {
        // x^3 - 1 = phi_1 phi_3
        assert_eq!(cyclotomic_factor_orders(&p(&[-1, 0, 0, 1])), Some(vec![1, 3]));
        // (x-1)^3
        assert_eq!(cyclotomic_factor_orders(&p(&[-1, 3, -3, 1])), Some(vec![1, 1, 1]));
        // x^3 - x - 1 is not a cyclotomic product (Pisot root).
        assert_eq!(cyclotomic_factor_orders(&p(&[-1, -1, 0, 1])), None);
        // x^2 - 3x + 1: real quadratic unit, roots off the circle.
        assert_eq!(cyclotomic_factor_orders(&p(&[1, -3, 1])), None);
    }

    #[test]
    fn discriminant_reference_values() {
        // x^3 - 1 has discriminant -27; (x-1)^3 has discriminant 0.
        assert_eq!(cubic_discriminant(&p(&[-1, 0, 0, 1])), BigRational::from(BigInt::from(-27)));
        assert!(cubic_discriminant(&p(&[-1, 3, -3, 1])).is_zero());
        // Three distinct real roots: positive.
        assert!(cubic_discriminant(&p(&[-8, 14, -7, 1])).is_positive());
        // Discriminant sign agrees with the Sturm count on samples.
        for coeffs in [[-1i64, 2, 3, 1], [-1, -5, 1, 1], [-1, 0, -2, 1], [-1, 1, 1, 1]] {
            let poly = p(&coeffs);
            let disc = cubic_discriminant(&poly);
            let nonreal = poly.has_nonreal_root();
            if disc.is_negative() {
                assert!(nonreal, "{coeffs:?}");
            }
            if nonreal {
                assert!(disc.is_negative(), "{coeffs:?}");
            }
        }
    }

    #[test]
    fn phi_values() {
        let want = [(1u64, 1u64), (2, 1), (3, 2), (4, 2), (6, 2), (12, 4), (30, 8)];
        for (m, phi) in want {
            assert_eq!(euler_phi(m), phi, "phi({m})");
        }
    }
}
