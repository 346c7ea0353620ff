//! Seeded random generation of test objects: unimodular integer
//! matrices, loxodromic elements, orthonormal frames.
//!
//! Everything takes an explicit ChaCha generator seeded by the caller, so
//! any sampled artifact can be replayed byte for byte from its recorded
//! seed. Nothing in this module ever touches an OS entropy source.

use crate::exactmat::RationalMatrix;
use crate::spectral::{classify, SpectralClass, DEFAULT_ORDER_BOUND};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The process-wide deterministic generator for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact integer determinant of a row-major integer matrix.
fn int_det(a: &[i64], n: usize) -> BigInt {
    let mut m: Vec<BigRational> = a.iter().map(|&x| BigRational::from_integer(x.into())).collect();
    // Fraction-free enough at these sizes: plain Gaussian elimination over
    // the rationals, exact.
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r * n + col].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => return BigInt::zero(),
        };
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            det = -det;
        }
        let p = m[col * n + col].clone();
        det *= &p;
        for r in col + 1..n {
            let f = &m[r * n + col] / &p;
            for j in col..n {
                let s = &m[col * n + j] * &f;
                m[r * n + j] -= s;
            }
        }
    }
    debug_assert!(det.is_integer());
    det.to_integer()
}

/// Signed cofactor of entry (i, j): the determinant derivative, so that
/// det depends on `a[i][j]` affinely with this slope.
fn cofactor(a: &[i64], n: usize, i: usize, j: usize) -> BigInt {
    let mut minor = Vec::with_capacity((n - 1) * (n - 1));
    for r in 0..n {
        if r == i {
            continue;
        }
        for c in 0..n {
            if c == j {
                continue;
            }
            minor.push(a[r * n + c]);
        }
    }
    let d = int_det(&minor, n - 1);
    if (i + j) % 2 == 0 {
        d
    } else {
        -d
    }
}

/// A random integer matrix with entries in `[-bound, bound]`, corrected
/// to determinant one by adjusting a single entry within the same bound
/// (resampling when no entry admits an in-range correction). All entries
/// of the result stay bounded by `bound`.
pub fn random_unimodular<R: Rng>(rng: &mut R, n: usize, bound: i64) -> RationalMatrix {
    assert!(n >= 2 && bound >= 1);
    loop {
        let mut a: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-bound..=bound)).collect();
        // Try every entry in a deterministic order: det = c * x + r is
        // affine in the entry with slope its cofactor, so solve for
        // det = 1 and keep the first in-range integer solution.
        'cells: for i in 0..n {
            for j in 0..n {
                let c = cofactor(&a, n, i, j);
                if c.is_zero() {
                    continue;
                }
                let x0 = BigInt::from(a[i * n + j]);
                let d = int_det(&a, n);
                let r = &d - &c * &x0;
                let want = BigInt::one() - &r;
                if (&want % &c).is_zero() {
                    let x = &want / &c;
                    if x.abs() <= BigInt::from(bound) {
                        let xi: i64 = x.try_into().expect("bounded");
                        a[i * n + j] = xi;
                        break 'cells;
                    }
                }
            }
        }
        if int_det(&a, n) == BigInt::one() {
            let rows: Vec<Vec<i64>> =
                (0..n).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
            let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
            return RationalMatrix::from_i64_rows(&refs).expect("determinant one");
        }
    }
}

/// A random unimodular matrix that classifies as loxodromic (pairwise
/// distinct eigenvalue moduli), found by resampling.
pub fn random_loxodromic<R: Rng>(rng: &mut R, n: usize, bound: i64) -> RationalMatrix {
    loop {
        let g = random_unimodular(rng, n, bound);
        if classify(&g, DEFAULT_ORDER_BOUND) == SpectralClass::Loxodromic {
            return g;
        }
    }
}

/// Standard normal via Box-Muller, driven by the caller's generator.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A Haar-ish random orthonormal frame: Gram-Schmidt of a Gaussian
/// matrix, column major.
pub fn random_orthonormal<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut cols: Vec<f64> = (0..n * n).map(|_| gaussian(rng)).collect();
        if gram_schmidt_columns(&mut cols, n) {
            return cols;
        }
    }
}

/// A uniformly random full flag.
pub fn random_flag<R: Rng>(rng: &mut R, n: usize) -> crate::flags::Flag {
    crate::flags::Flag::from_orthonormal(n, random_orthonormal(rng, n))
}

/// In-place modified Gram-Schmidt on column-major data, two passes for
/// orthogonality at working precision. False when a column degenerates.
pub fn gram_schmidt_columns(cols: &mut [f64], n: usize) -> bool {
    for _pass in 0..2 {
        for k in 0..n {
            for j in 0..k {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += cols[j * n + i] * cols[k * n + i];
                }
                for i in 0..n {
                    cols[k * n + i] -= dot * cols[j * n + i];
                }
            }
            let mut norm = 0.0;
            for i in 0..n {
                norm += cols[k * n + i] * cols[k * n + i];
            }
            let norm = norm.sqrt();
            if !(norm > 1e-150) {
                return false;
            }
            for i in 0..n {
                cols[k * n + i] /= norm;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodular_samples_are_unimodular_and_bounded() {
        let mut r = rng(7);
        for n in [2usize, 3, 4] {
            for _ in 0..30 {
                let g = random_unimodular(&mut r, n, 5);
                assert_eq!(g.n(), n);
                for x in g.entries() {
                    assert!(x.is_integer());
                    assert!(x.numer().abs() <= BigInt::from(5));
                }
            }
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let a: Vec<RationalMatrix> =
            (0..5).map(|_| random_unimodular(&mut rng(42), 3, 5)).collect();
        let b: Vec<RationalMatrix> =
            (0..5).map(|_| random_unimodular(&mut rng(42), 3, 5)).collect();
        assert_eq!(a, b);
        let mut r1 = rng(9);
        let mut r2 = rng(9);
        let f1 = random_orthonormal(&mut r1, 4);
        let f2 = random_orthonormal(&mut r2, 4);
        assert_eq!(f1, f2);
    }

    #[test]
    fn loxodromic_sampler_terminates_and_classifies() {
        let mut r = rng(3);
        for _ in 0..10 {
            let g = random_loxodromic(&mut r, 3, 5);
            assert_eq!(classify(&g, DEFAULT_ORDER_BOUND), SpectralClass::Loxodromic);
        }
    }

    #[test]
    fn orthonormal_frames_are_orthonormal() {
        let mut r = rng(11);
        for n in [2usize, 3, 5] {
            let f = random_orthonormal(&mut r, n);
            for a in 0..n {
                for b in 0..n {
                    let mut dot = 0.0;
                    for i in 0..n {
                        dot += f[a * n + i] * f[b * n + i];
                    }
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12, "({a},{b})");
                }
            }
        }
    }

    #[test]
    fn int_det_matches_rational_matrix_route() {
        // Upper triangular with unit diagonal: determinant one by eye.
        let a = [1, 7, -3, 0, 1, 5, 0, 0, 1];
        assert_eq!(int_det(&a, 3), BigInt::one());
        let b = [2, 0, 0, 0, 3, 0, 0, 0, 4];
        assert_eq!(int_det(&b, 3), BigInt::from(24));
        let sing = [1, 2, 3, 2, 4, 6, 1, 0, 1];
        assert_eq!(int_det(&sing, 3), BigInt::zero());
    }
}
