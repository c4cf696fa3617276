//! Arithmetic in prime fields F_p, 5 <= p < 2^62.
//!
//! Elements are plain `u64` values in canonical form `[0, p)`. The field
//! value carries only the modulus and is `Copy`; every operation is pure.

use crate::arith;
use crate::error::{Error, Result};

pub const MAX_MODULUS: u64 = 1 << 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !(5..MAX_MODULUS).contains(&p) {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !arith::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v % self.p
    }

    pub fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.p as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.p as i128) as u64)
    }

    /// Legendre symbol by Euler's criterion.
    pub fn legendre(&self, a: u64) -> i8 {
        if a == 0 {
            return 0;
        }
        if self.pow(a, (self.p - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    pub fn smallest_non_residue(&self) -> u64 {
        (2..self.p)
            .find(|&g| self.legendre(g) == -1)
            .expect("odd prime field has a non-residue")
    }

    /// Tonelli–Shanks square root. Returns the even root of the pair `{r, p - r}`,
    /// or `None` when `a` is a non-residue.
    pub fn sqrt(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return Some(0);
        }
        if self.legendre(a) != 1 {
            return None;
        }
        let p = self.p;
        let root = if p % 4 == 3 {
            self.pow(a, (p + 1) / 4)
        } else {
            let mut q = p - 1;
            let mut s = 0u32;
            while q.is_multiple_of(2) {
                q /= 2;
                s += 1;
            }
            let z = self.smallest_non_residue();
            let mut m = s;
            let mut c = self.pow(z, q);
            let mut t = self.pow(a, q);
            let mut r = self.pow(a, q.div_ceil(2));
            while t != 1 {
                let mut i = 0;
                let mut t2 = t;
                while t2 != 1 {
                    t2 = self.mul(t2, t2);
                    i += 1;
                }
                let b = self.pow(c, 1 << (m - i - 1));
                m = i;
                c = self.mul(b, b);
                t = self.mul(t, c);
                r = self.mul(r, b);
            }
            r
        };
        debug_assert_eq!(self.mul(root, root), a);
        Some(if root % 2 == 0 { root } else { p - root })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn square_table(p: u64) -> Vec<bool> {
        let mut sq = vec![false; p as usize];
        for y in 0..p {
            sq[(y * y % p) as usize] = true;
        }
        sq
    }

    #[test]
    fn construction_rejects_bad_moduli() {
        assert!(matches!(PrimeField::new(3), Err(Error::ModulusOutOfRange(3))));
        assert!(matches!(PrimeField::new(9), Err(Error::NotPrime(9))));
        assert!(matches!(
            PrimeField::new(MAX_MODULUS + 1),
            Err(Error::ModulusOutOfRange(_))
        ));
        assert!(PrimeField::new(4_611_686_018_427_387_847).is_ok()); // largest prime < 2^62
    }

    #[test]
    fn small_examples() {
        assert_eq!(f(5).inv(2).unwrap(), 3);
        assert_eq!(f(5).pow(3, 4), 1);
        assert_eq!(f(7).mul(4, 4), 2);
        assert!(matches!(f(5).inv(0), Err(Error::ZeroInverse)));
    }

    #[test]
    fn legendre_examples() {
        let f7 = f(7);
        assert_eq!(f7.legendre(0), 0);
        assert_eq!(f7.legendre(2), 1);
        assert_eq!(f7.legendre(3), -1);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(f(7).sqrt(2), Some(4));
        assert_eq!(f(5).sqrt(0), Some(0));
        assert_eq!(f(7).sqrt(3), None);
    }

    #[test]
    fn legendre_agrees_with_square_table_and_is_multiplicative() {
        for p in arith::primes_in(5, 97) {
            let field = f(p);
            let sq = square_table(p);
            for a in 0..p {
                let expected = if a == 0 {
                    0
                } else if sq[a as usize] {
                    1
                } else {
                    -1
                };
                assert_eq!(field.legendre(a), expected, "p={p} a={a}");
                for b in 0..p {
                    assert_eq!(field.legendre(a) * field.legendre(b), field.legendre(field.mul(a, b)));
                }
            }
        }
    }

    #[test]
    fn sqrt_exhaustive_small_fields() {
        // p = 17 and 97 exercise the Tonelli–Shanks branch (p = 1 mod 4).
        for p in arith::primes_in(5, 200) {
            let field = f(p);
            let sq = square_table(p);
            for a in 0..p {
                match field.sqrt(a) {
                    Some(r) => {
                        assert_eq!(field.mul(r, r), a);
                        assert_eq!(r % 2, 0);
                    }
                    None => assert!(!sq[a as usize]),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_roundtrip(a in 1u64..(1 << 61) - 1) {
            let field = f((1 << 61) - 1);
            prop_assert_eq!(field.mul(a, field.inv(a).unwrap()), 1);
        }

        #[test]
        fn sqrt_squares_back(a in 0u64..1_000_000_007) {
            let field = f(1_000_000_009);
            if let Some(r) = field.sqrt(a) {
                prop_assert_eq!(field.mul(r, r), a);
            } else {
                prop_assert_eq!(field.legendre(a), -1);
            }
        }
    }
}
