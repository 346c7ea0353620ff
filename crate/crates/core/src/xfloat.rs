//! Extended-range floating point arithmetic.
//!
//! Words of moderate length in SL(n, Z) already have entries, singular
//! values, and characteristic polynomial coefficients far outside the f64
//! exponent range, while 53 bits of mantissa remain plenty for every
//! log-scale quantity we report. `Xf` keeps an f64 mantissa in [0.5, 1)
//! next to an i64 exponent; `Xc` is the complex version used by the
//! polynomial root finder.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Splits a finite nonzero f64 into `(m, e)` with `x = m * 2^e` and
/// `|m|` in `[0.5, 1)`. Zero maps to `(0.0, 0)`.
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    if exp_field == 0 {
        // Subnormal: rescale into the normal range first.
        let (m, e) = frexp(x * f64::powi(2.0, 108));
        return (m, e - 108);
    }
    let e = exp_field - 1022;
    let mantissa_bits = (bits & !(0x7ffu64 << 52)) | (1022u64 << 52);
    (f64::from_bits(mantissa_bits), e)
}

/// Extended-range real number `m * 2^e`, normalized so `|m|` is in
/// `[0.5, 1)` or `m == 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Xf {
    m: f64,
    e: i64,
}

impl Xf {
    pub const ZERO: Xf = Xf { m: 0.0, e: 0 };
    pub const ONE: Xf = Xf { m: 0.5, e: 1 };

    pub fn new(m: f64, e: i64) -> Xf {
        if m == 0.0 {
            return Xf::ZERO;
        }
        let (fm, fe) = frexp(m);
        Xf { m: fm, e: e + fe }
    }

    pub fn from_f64(x: f64) -> Xf {
        Xf::new(x, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite()
    }

    /// Normalized mantissa, `|m|` in `[0.5, 1)` or zero.
    pub fn mantissa(&self) -> f64 {
        self.m
    }

    /// Binary exponent: the value is `mantissa * 2^exponent`.
    pub fn exponent(&self) -> i64 {
        self.e
    }

    pub fn abs(&self) -> Xf {
        Xf { m: self.m.abs(), e: self.e }
    }

    pub fn signum(&self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            self.m.signum()
        }
    }

    /// Saturates to `0.0` or `±inf` outside the f64 range.
    pub fn to_f64(&self) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        if self.e > 1100 {
            return f64::INFINITY * self.m.signum();
        }
        if self.e < -1100 {
            return 0.0;
        }
        // Split the scale so each factor stays representable.
        let half = self.e / 2;
        self.m * f64::powi(2.0, half as i32) * f64::powi(2.0, (self.e - half) as i32)
    }

    /// `self * 2^k`.
    pub fn scaled(&self, k: i64) -> Xf {
        if self.is_zero() {
            return *self;
        }
        Xf { m: self.m, e: self.e + k }
    }

    /// Natural log of `|self|`. Requires a nonzero value.
    pub fn ln_abs(&self) -> f64 {
        debug_assert!(!self.is_zero(), "ln of zero");
        self.m.abs().ln() + self.e as f64 * core::f64::consts::LN_2
    }

    pub fn sqrt_abs(&self) -> Xf {
        if self.is_zero() {
            return Xf::ZERO;
        }
        let (m, e) = if self.e.rem_euclid(2) == 0 {
            (self.m.abs(), self.e)
        } else {
            (self.m.abs() * 2.0, self.e - 1)
        };
        Xf::new(m.sqrt(), e / 2)
    }

    /// Magnitude comparison `|self| vs |rhs|`.
    pub fn cmp_abs(&self, rhs: &Xf) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self.is_zero(), rhs.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => (self.e, self.m.abs())
                .partial_cmp(&(rhs.e, rhs.m.abs()))
                .unwrap_or(Ordering::Equal),
        }
    }

    pub fn recip(&self) -> Xf {
        Xf::ONE / *self
    }

    pub fn powi(&self, mut k: u32) -> Xf {
        let mut base = *self;
        let mut acc = Xf::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

impl Add for Xf {
    type Output = Xf;
    fn add(self, rhs: Xf) -> Xf {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let diff = hi.e - lo.e;
        if diff > 80 {
            return hi;
        }
        Xf::new(hi.m + lo.m * f64::powi(2.0, -(diff as i32)), hi.e)
    }
}

impl Sub for Xf {
    type Output = Xf;
    fn sub(self, rhs: Xf) -> Xf {
        self + (-rhs)
    }
}

impl Neg for Xf {
    type Output = Xf;
    fn neg(self) -> Xf {
        Xf { m: -self.m, e: self.e }
    }
}

impl Mul for Xf {
    type Output = Xf;
    fn mul(self, rhs: Xf) -> Xf {
        if self.is_zero() || rhs.is_zero() {
            return Xf::ZERO;
        }
        Xf::new(self.m * rhs.m, self.e + rhs.e)
    }
}

impl Div for Xf {
    type Output = Xf;
    fn div(self, rhs: Xf) -> Xf {
        debug_assert!(!rhs.is_zero(), "division by zero Xf");
        if self.is_zero() {
            return Xf::ZERO;
        }
        Xf::new(self.m / rhs.m, self.e - rhs.e)
    }
}

/// Extended-range complex number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Xc {
    pub re: Xf,
    pub im: Xf,
}

impl Xc {
    pub const ZERO: Xc = Xc { re: Xf::ZERO, im: Xf::ZERO };

    pub fn new(re: Xf, im: Xf) -> Xc {
        Xc { re, im }
    }

    pub fn from_f64(re: f64, im: f64) -> Xc {
        Xc { re: Xf::from_f64(re), im: Xf::from_f64(im) }
    }

    pub fn from_polar_ln(ln_r: f64, theta: f64) -> Xc {
        // r = 2^(ln_r / ln 2); split into exponent and mantissa.
        let e = (ln_r / core::f64::consts::LN_2).floor();
        let m = (ln_r - e * core::f64::consts::LN_2).exp();
        let r = Xf::new(m, e as i64);
        Xc {
            re: r * Xf::from_f64(theta.cos()),
            im: r * Xf::from_f64(theta.sin()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Xc {
        Xc { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(&self) -> Xf {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(&self) -> Xf {
        self.norm_sqr().sqrt_abs()
    }

    /// Natural log of the modulus. Requires a nonzero value.
    pub fn ln_abs(&self) -> f64 {
        0.5 * self.norm_sqr().ln_abs()
    }

    /// Argument in (-pi, pi], from the mantissas at a common scale.
    pub fn arg(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let e = self.re.e.max(self.im.e);
        let re = if self.re.is_zero() { 0.0 } else { self.re.m * f64::powi(2.0, (self.re.e - e).max(-200) as i32) };
        let im = if self.im.is_zero() { 0.0 } else { self.im.m * f64::powi(2.0, (self.im.e - e).max(-200) as i32) };
        im.atan2(re)
    }
}

impl Add for Xc {
    type Output = Xc;
    fn add(self, rhs: Xc) -> Xc {
        Xc { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for Xc {
    type Output = Xc;
    fn sub(self, rhs: Xc) -> Xc {
        Xc { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Neg for Xc {
    type Output = Xc;
    fn neg(self) -> Xc {
        Xc { re: -self.re, im: -self.im }
    }
}

impl Mul for Xc {
    type Output = Xc;
    fn mul(self, rhs: Xc) -> Xc {
        Xc {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for Xc {
    type Output = Xc;
    fn div(self, rhs: Xc) -> Xc {
        let d = rhs.norm_sqr();
        let num = self * rhs.conj();
        Xc { re: num.re / d, im: num.im / d }
    }
}

/// Splits `|x|` as `m * 2^e` with `m` in `[0.5, 1)`; returns the sign on
/// the mantissa. Zero maps to `(0.0, 0)`.
pub fn bigint_f64_exp(x: &BigInt) -> (f64, i64) {
    if x.is_zero() {
        return (0.0, 0);
    }
    let bits = x.bits() as i64;
    let shift = bits - 63;
    let top = if shift > 0 { x >> shift } else { x.clone() };
    let top_i = top.to_i64().expect("63-bit window fits i64") as f64;
    let (m, e) = frexp(top_i);
    (m, e + shift.max(0))
}

/// Exactly rounded-to-nearest-ish conversion of a big rational into the
/// extended-range representation (error below 2 ulp of the mantissa).
pub fn ratio_xf(r: &BigRational) -> Xf {
    if r.is_zero() {
        return Xf::ZERO;
    }
    let (mn, en) = bigint_f64_exp(r.numer());
    let (md, ed) = bigint_f64_exp(r.denom());
    Xf::new(mn / md, en - ed)
}

/// f64 value of a big rational, saturating to `0` / `±inf` out of range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    ratio_xf(r).to_f64()
}

/// Natural log of a positive big rational, accurate to ~1 ulp of the
/// result even when the value itself is far outside the f64 range.
pub fn ratio_ln(r: &BigRational) -> f64 {
    debug_assert!(r.is_positive(), "log of a non-positive rational");
    ratio_xf(r).ln_abs()
}

#[derive(Debug, thiserror::Error)]
pub enum RootFindError {
    #[error("root iteration failed to converge (max residual {residual:.3e})")]
    NonConvergence { residual: f64 },
    #[error("cannot solve the zero polynomial")]
    ZeroPolynomial,
}

/// All complex roots of a monic polynomial with extended-range
/// coefficients, ascending degree order (`c[0] + c[1] x + ... + x^n`).
///
/// Ehrlich-Aberth style simultaneous iteration started from Newton polygon
/// radius estimates, followed by a Newton polish. Intended for square-free
/// input; multiple roots converge slowly and may fail the caller's
/// residual requirement. Deterministic for fixed input.
pub fn polynomial_roots(coeffs: &[Xf]) -> Result<Vec<Xc>, RootFindError> {
    let n = coeffs.len().saturating_sub(1);
    if coeffs.is_empty() || coeffs.iter().all(|c| c.is_zero()) {
        return Err(RootFindError::ZeroPolynomial);
    }
    let zero_roots = coeffs.iter().position(|c| !c.is_zero()).unwrap_or(0);
    if zero_roots > 0 {
        let mut r = polynomial_roots(&coeffs[zero_roots..])?;
        r.extend(std::iter::repeat(Xc::ZERO).take(zero_roots));
        return Ok(r);
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => {
            // c0 + c1 x = 0
            let root = -(coeffs[0] / coeffs[1]);
            return Ok(vec![Xc::new(root, Xf::ZERO)]);
        }
        2 => return Ok(quadratic_roots(coeffs)),
        _ => {}
    }

    let mut z = initial_guesses(coeffs);
    let deriv: Vec<Xf> = derivative(coeffs);

    let mut converged = false;
    for _ in 0..400 {
        let mut max_step = f64::NEG_INFINITY;
        for i in 0..n {
            let p = horner(coeffs, z[i]);
            if p.is_zero() {
                continue;
            }
            let dp = horner(&deriv, z[i]);
            // Aberth correction: newton step / (1 - newton * sum 1/(z_i - z_j))
            let newton = p / dp_guard(dp, z[i]);
            let mut s = Xc::ZERO;
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.is_zero() {
                        continue;
                    }
                    s = s + Xc::new(Xf::ONE, Xf::ZERO) / d;
                }
            }
            let denom = Xc::new(Xf::ONE, Xf::ZERO) - newton * s;
            let step = if denom.is_zero() { newton } else { newton / denom };
            z[i] = z[i] - step;
            let scale = z[i].abs().ln_abs_or(-744.0);
            max_step = max_step.max(step.abs().ln_abs_or(f64::NEG_INFINITY) - scale);
        }
        if max_step < -36.0 * core::f64::consts::LN_2 {
            converged = true;
            break;
        }
    }

    // Newton polish.
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let p = horner(coeffs, *zi);
            if p.is_zero() {
                break;
            }
            let dp = horner(&deriv, *zi);
            if dp.is_zero() {
                break;
            }
            *zi = *zi - p / dp;
        }
    }

    let worst = max_relative_residual(coeffs, &z);
    if !converged && worst > 1e-10 {
        return Err(RootFindError::NonConvergence { residual: worst });
    }
    Ok(z)
}

/// Largest relative residual `|p(z)| / sum_k |c_k| |z|^k` over the roots.
pub fn max_relative_residual(coeffs: &[Xf], roots: &[Xc]) -> f64 {
    let mut worst = 0.0f64;
    for z in roots {
        worst = worst.max(relative_residual(coeffs, *z));
    }
    worst
}

/// Relative residual of one candidate root.
pub fn relative_residual(coeffs: &[Xf], z: Xc) -> f64 {
    let p = horner(coeffs, z).abs();
    if p.is_zero() {
        return 0.0;
    }
    let r = z.abs();
    let mut scale = Xf::ZERO;
    let mut rp = Xf::ONE;
    for c in coeffs {
        scale = scale + c.abs() * rp;
        rp = rp * r;
    }
    if scale.is_zero() {
        return f64::INFINITY;
    }
    (p / scale).to_f64()
}

pub fn horner(coeffs: &[Xf], z: Xc) -> Xc {
    let mut acc = Xc::ZERO;
    for c in coeffs.iter().rev() {
        acc = acc * z + Xc::new(*c, Xf::ZERO);
    }
    acc
}

fn derivative(coeffs: &[Xf]) -> Vec<Xf> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| *c * Xf::from_f64(k as f64))
        .collect()
}

fn dp_guard(dp: Xc, z: Xc) -> Xc {
    if !dp.is_zero() {
        return dp;
    }
    // Derivative vanished exactly at the iterate; nudge via the scale of
    // the polynomial so the step stays finite.
    let r = z.abs();
    let bump = if r.is_zero() { Xf::ONE } else { r };
    Xc::new(bump * Xf::from_f64(1e-12), bump * Xf::from_f64(1e-12))
}

fn quadratic_roots(c: &[Xf]) -> Vec<Xc> {
    // c0 + c1 x + c2 x^2
    let (a, b, c0) = (c[2], c[1], c[0]);
    let disc = b * b - Xf::from_f64(4.0) * a * c0;
    if disc.signum() >= 0.0 {
        let sq = disc.sqrt_abs();
        // q = -(b + sign(b) sqrt(disc)) / 2, stable against cancellation.
        let sb = if b.signum() >= 0.0 { sq } else { -sq };
        let q = -(b + sb) / Xf::from_f64(2.0);
        let (r1, r2) = if q.is_zero() {
            (Xf::ZERO, Xf::ZERO)
        } else {
            (q / a, c0 / q)
        };
        vec![Xc::new(r1, Xf::ZERO), Xc::new(r2, Xf::ZERO)]
    } else {
        let sq = disc.sqrt_abs();
        let re = -b / (Xf::from_f64(2.0) * a);
        let im = sq / (Xf::from_f64(2.0) * a);
        vec![Xc::new(re, im), Xc::new(re, -im)]
    }
}

/// Newton polygon initialization: the upper convex hull of
/// `(k, log2 |c_k|)` splits the degree into blocks of roots with a shared
/// magnitude estimate; angles are spread by the golden ratio so no
/// starting point sits on a symmetry axis.
fn initial_guesses(coeffs: &[Xf]) -> Vec<Xc> {
    let n = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k, c.abs().ln_abs() / core::f64::consts::LN_2))
        .collect();
    // Upper hull, left to right.
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b if it lies below segment a-p.
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1)
                - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let golden = 0.618_033_988_749_894_9_f64;
    let mut out = Vec::with_capacity(n);
    let mut t = 0usize;
    for w in hull.windows(2) {
        let (i, yi) = w[0];
        let (j, yj) = w[1];
        let count = j - i;
        // Roots in this block have log2 magnitude about (yi - yj) / (j - i).
        let ln_r = (yi - yj) / count as f64 * core::f64::consts::LN_2;
        for _ in 0..count {
            let theta = 2.0 * core::f64::consts::PI * (golden * t as f64 + 0.127);
            out.push(Xc::from_polar_ln(ln_r, theta));
            t += 1;
        }
    }
    // Degenerate hull (single point): unit circle fallback.
    while out.len() < n {
        let theta = 2.0 * core::f64::consts::PI * (golden * t as f64 + 0.127);
        out.push(Xc::from_polar_ln(0.0, theta));
        t += 1;
    }
    out
}

trait LnOr {
    fn ln_abs_or(&self, default: f64) -> f64;
}

impl LnOr for Xf {
    fn ln_abs_or(&self, default: f64) -> f64 {
        if self.is_zero() {
            default
        } else {
            self.ln_abs()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::One;

    fn xf(x: f64) -> Xf {
        Xf::from_f64(x)
    }

    #[test]
    fn frexp_round_trip() {
        for &x in &[1.0, -3.5, 0.001, 123456.789, 1e300, -1e-300, 5e-324] {
            let (m, e) = frexp(x);
            assert!(m.abs() >= 0.5 && m.abs() < 1.0, "mantissa {m} for {x}");
            assert_eq!(Xf::new(m, e).to_f64(), x);
        }
    }

    #[test]
    fn xf_arithmetic_matches_f64() {
        let cases = [(1.5, 2.25), (-3.0, 7.5), (0.125, -8.0), (1e8, 3e-9)];
        for (a, b) in cases {
            assert_eq!((xf(a) * xf(b)).to_f64(), a * b);
            assert_eq!((xf(a) + xf(b)).to_f64(), a + b);
            assert_eq!((xf(a) - xf(b)).to_f64(), a - b);
            assert_eq!((xf(a) / xf(b)).to_f64(), a / b);
        }
    }

    #[test]
    fn xf_survives_extreme_range() {
        // 2^100000: ln must stay accurate though the value is unrepresentable.
        let big = Xf::new(1.0, 100_000);
        assert!((big.ln_abs() - 100_000.0 * core::f64::consts::LN_2).abs() < 1e-6);
        let prod = big * big;
        assert!((prod.ln_abs() - 200_000.0 * core::f64::consts::LN_2).abs() < 1e-6);
        assert_eq!(big.to_f64(), f64::INFINITY);
        assert_eq!((Xf::ONE / prod).to_f64(), 0.0);
    }

    #[test]
    fn ratio_conversion_accuracy() {
        let r = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!((ratio_to_f64(&r) - 1.0 / 3.0).abs() < 1e-16);
        let huge = BigRational::from(BigInt::from(3)).pow(2000);
        assert!((ratio_ln(&huge) - 2000.0 * 3.0f64.ln()).abs() < 1e-9);
        let tiny = BigRational::new(BigInt::one(), BigInt::from(7)).pow(1500);
        assert!((ratio_ln(&tiny) + 1500.0 * 7.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn cubic_roots_of_unity() {
        // x^3 - 1: roots 1, exp(±2 pi i / 3).
        let coeffs = vec![xf(-1.0), xf(0.0), xf(0.0), xf(1.0)];
        let roots = polynomial_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 3);
        for z in &roots {
            assert!(z.abs().ln_abs().abs() < 1e-12, "unit modulus");
        }
        let real_count = roots.iter().filter(|z| z.im.to_f64().abs() < 1e-9).count();
        assert_eq!(real_count, 1);
        assert!(max_relative_residual(&coeffs, &roots) < 1e-12);
    }

    #[test]
    fn widely_split_roots() {
        // (x - 2^90)(x - 1)(x - 2^-90): coefficients overflow nothing in Xf.
        let a = Xf::new(1.0, 90);
        let c = Xf::new(1.0, -90);
        // p = x^3 - (a+1+c) x^2 + (a + c + a c) x - 1, with a c = 1.
        let coeffs = vec![
            xf(-1.0),
            a + c + Xf::ONE,
            -(a + Xf::ONE + c),
            Xf::ONE,
        ];
        let roots = polynomial_roots(&coeffs).unwrap();
        let mut lns: Vec<f64> = roots.iter().map(|z| z.ln_abs()).collect();
        lns.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let l2 = core::f64::consts::LN_2;
        assert!((lns[0] - 90.0 * l2).abs() < 1e-9, "top root log {}", lns[0]);
        assert!(lns[1].abs() < 1e-9);
        assert!((lns[2] + 90.0 * l2).abs() < 1e-9);
        assert!(max_relative_residual(&coeffs, &roots) < 1e-12);
    }

    #[test]
    fn overflow_scale_roots() {
        // (x - 2^600)(x - 1)(x - 2^-600): far outside f64 entirely.
        let a = Xf::new(1.0, 600);
        let c = Xf::new(1.0, -600);
        let coeffs = vec![
            xf(-1.0),
            a + c + Xf::ONE,
            -(a + Xf::ONE + c),
            Xf::ONE,
        ];
        let roots = polynomial_roots(&coeffs).unwrap();
        let mut lns: Vec<f64> = roots.iter().map(|z| z.ln_abs()).collect();
        lns.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let l2 = core::f64::consts::LN_2;
        assert!((lns[0] - 600.0 * l2).abs() < 1e-6);
        assert!((lns[2] + 600.0 * l2).abs() < 1e-6);
    }

    #[test]
    fn quadratic_complex_pair() {
        // x^2 + x + 1: primitive sixth roots.
        let coeffs = vec![xf(1.0), xf(1.0), xf(1.0)];
        let roots = polynomial_roots(&coeffs).unwrap();
        for z in &roots {
            assert!((z.abs().ln_abs()).abs() < 1e-14);
            assert!((z.re.to_f64() + 0.5).abs() < 1e-14);
        }
    }
}
