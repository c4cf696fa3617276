//! Local L-function data at a prime of good reduction.
//!
//! Frobenius eigenvalues are never materialized; everything goes through the
//! integer power sums `t_k = α^k + β^k`, which satisfy
//! `t_0 = 2, t_1 = a, t_j = a·t_{j-1} - p·t_{j-2}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::curve::ReducedCurve;
use crate::error::{Error, Result};
use crate::modarith::MAX_MODULUS;

pub const MAX_DEGREE: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalLData {
    pub p: u64,
    pub k: u32,
    /// Trace a_p over the prime field.
    pub a: i64,
    /// α^k + β^k
    pub t_k: i64,
    /// #E(F_{p^k})
    pub n_k: u64,
}

impl LocalLData {
    pub fn q(&self) -> u64 {
        self.p.pow(self.k)
    }
}

/// Trace of Frobenius a = p + 1 - #E(F_p).
pub fn trace<R: Rng + ?Sized>(e: &ReducedCurve, rng: &mut R) -> Result<i64> {
    let n = e.group_order(rng)?;
    Ok(e.p() as i64 + 1 - n as i64)
}

fn check_hasse(a: i64, q: u64) -> Result<()> {
    if (a as i128) * (a as i128) > 4 * q as i128 {
        return Err(Error::HasseViolation { a, q });
    }
    Ok(())
}

/// L(T) = 1 - a·T + q·T².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LPoly {
    pub a: i64,
    pub q: u64,
}

impl LPoly {
    /// Coefficients of T^0, T^1, T^2.
    pub fn coefficients(&self) -> [i64; 3] {
        [1, -self.a, self.q as i64]
    }

    pub fn eval(&self, t: i64) -> i128 {
        let t = t as i128;
        1 - self.a as i128 * t + self.q as i128 * t * t
    }
}

pub fn lpoly(a: i64, p: u64) -> Result<LPoly> {
    check_hasse(a, p)?;
    Ok(LPoly { a, q: p })
}

/// #E(F_{p^k}) from the trace over F_p.
pub fn count_extension(a: i64, p: u64, k: u32) -> Result<LocalLData> {
    if k == 0 || k > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "extension degree {k} outside 1..={MAX_DEGREE}"
        )));
    }
    check_hasse(a, p)?;
    let q = p
        .checked_pow(k)
        .filter(|&q| q < MAX_MODULUS)
        .ok_or_else(|| Error::Overflow(format!("{p}^{k} exceeds 2^62")))?;
    let (mut prev, mut cur) = (2i128, a as i128);
    for _ in 1..k {
        (prev, cur) = (cur, a as i128 * cur - p as i128 * prev);
    }
    let t_k = i64::try_from(cur).map_err(|_| Error::Overflow(format!("t_{k} at p = {p}")))?;
    check_hasse(t_k, q).map_err(|_| Error::Invariant(format!("t_{k} = {t_k} breaks the Riemann bound at p = {p}")))?;
    let n_k = q as i128 + 1 - cur;
    if n_k <= 0 {
        return Err(Error::Invariant(format!("non-positive N_{k} at p = {p}")));
    }
    Ok(LocalLData {
        p,
        k,
        a,
        t_k,
        n_k: n_k as u64,
    })
}

/// Supersingular shapes of L(T) for the residue field of size q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupersingularCase {
    /// (1 ± √q T)²,  t = ±2√q
    Square,
    /// 1 ± √q T + q T²,  t = ±√q
    ThirdRoot,
    /// 1 + q T²,  t = 0
    Zero,
}

impl SupersingularCase {
    pub fn number(&self) -> u8 {
        match self {
            SupersingularCase::Square => 1,
            SupersingularCase::ThirdRoot => 2,
            SupersingularCase::Zero => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionType {
    Ordinary,
    Supersingular(SupersingularCase),
}

impl ReductionType {
    pub fn name(&self) -> &'static str {
        match self {
            ReductionType::Ordinary => "ordinary",
            ReductionType::Supersingular(_) => "supersingular",
        }
    }
}

pub fn classify(d: &LocalLData) -> Result<ReductionType> {
    if d.t_k % d.p as i64 != 0 {
        return Ok(ReductionType::Ordinary);
    }
    let q = d.q() as i128;
    let t2 = d.t_k as i128 * d.t_k as i128;
    let case = if d.t_k == 0 {
        SupersingularCase::Zero
    } else if t2 == 4 * q {
        SupersingularCase::Square
    } else if t2 == q {
        SupersingularCase::ThirdRoot
    } else {
        return Err(Error::Invariant(format!(
            "p | t_k but t_k = {} matches no supersingular shape for q = {}",
            d.t_k, q
        )));
    };
    Ok(ReductionType::Supersingular(case))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrobeniusField {
    /// Fundamental discriminant of Q(α), D < 0.
    Imaginary(i64),
    /// t² = 4q: L(T) splits over Q.
    RationalSplit,
}

/// Discriminant of the field generated by a root of T² - t·T + q.
pub fn frobenius_field_disc(t: i64, q: u64) -> Result<FrobeniusField> {
    check_hasse(t, q)?;
    let m = 4 * q as i128 - t as i128 * t as i128; // -(t² - 4q) >= 0
    if m == 0 {
        return Ok(FrobeniusField::RationalSplit);
    }
    let m = u64::try_from(m).map_err(|_| Error::Overflow("t² - 4q".into()))?;
    let squarefree: u64 = arith::factor(m)
        .into_iter()
        .filter(|&(_, e)| e % 2 == 1)
        .map(|(q, _)| q)
        .product();
    let s = -(squarefree as i64);
    Ok(FrobeniusField::Imaginary(if s.rem_euclid(4) == 1 { s } else { 4 * s }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::prime_rng;
    use crate::modarith::PrimeField;
    use proptest::prelude::*;

    fn reduced(p: u64, a: u64, b: u64) -> ReducedCurve {
        ReducedCurve::new(PrimeField::new(p).unwrap(), a, b).unwrap()
    }

    #[test]
    fn trace_examples() {
        let mut rng = prime_rng(0, 0);
        assert_eq!(trace(&reduced(5, 1, 0), &mut rng).unwrap(), 2);
        assert_eq!(trace(&reduced(7, 1, 0), &mut rng).unwrap(), 0);
        assert_eq!(trace(&reduced(13, 1, 0), &mut rng).unwrap(), -6);
    }

    #[test]
    fn lpoly_examples() {
        let l = lpoly(2, 5).unwrap();
        assert_eq!(l.coefficients(), [1, -2, 5]);
        assert_eq!(l.eval(1), 4);
        assert_eq!(lpoly(0, 7).unwrap().eval(1), 8);
        assert!(matches!(lpoly(6, 5), Err(Error::HasseViolation { .. })));
    }

    #[test]
    fn extension_examples() {
        let d = count_extension(2, 5, 2).unwrap();
        assert_eq!((d.t_k, d.n_k), (-6, 32));
        let d = count_extension(0, 7, 2).unwrap();
        assert_eq!((d.t_k, d.n_k), (-14, 64));
        let d = count_extension(-3, 11, 1).unwrap();
        assert_eq!(d.n_k, 15);
        assert!(matches!(count_extension(1, 1_000_003, 4), Err(Error::Overflow(_))));
        assert!(count_extension(1, 5, 0).is_err());
    }

    #[test]
    fn classify_examples() {
        let c = |p, k, t_k| {
            classify(&LocalLData {
                p,
                k,
                a: 0,
                t_k,
                n_k: 1,
            })
            .unwrap()
        };
        assert_eq!(c(13, 1, -6), ReductionType::Ordinary);
        assert_eq!(c(7, 1, 0), ReductionType::Supersingular(SupersingularCase::Zero));
        assert_eq!(c(7, 2, -14), ReductionType::Supersingular(SupersingularCase::Square));
        assert_eq!(c(7, 2, 7), ReductionType::Supersingular(SupersingularCase::ThirdRoot));
        assert!(classify(&LocalLData {
            p: 7,
            k: 2,
            a: 0,
            t_k: 7 * 3,
            n_k: 1
        })
        .is_err());
    }

    #[test]
    fn frobenius_field_examples() {
        assert_eq!(frobenius_field_disc(2, 5).unwrap(), FrobeniusField::Imaginary(-4));
        assert_eq!(frobenius_field_disc(0, 7).unwrap(), FrobeniusField::Imaginary(-7));
        assert_eq!(frobenius_field_disc(1, 5).unwrap(), FrobeniusField::Imaginary(-19));
        assert_eq!(frobenius_field_disc(-14, 49).unwrap(), FrobeniusField::RationalSplit);
        // -8·4 = -32 = -2·16 -> squarefree -2 -> D = -8
        assert_eq!(frobenius_field_disc(2, 9).unwrap(), FrobeniusField::Imaginary(-8));
    }

    #[test]
    fn cm_curves_split_in_their_cm_field() {
        // y² = x³ + x has CM by Z[i]: every ordinary prime gives Q(α) = Q(i).
        let mut rng = prime_rng(0, 0);
        for p in arith::primes_in(5, 500) {
            let a = trace(&reduced(p, 1, 0), &mut rng).unwrap();
            if a != 0 {
                assert_eq!(frobenius_field_disc(a, p).unwrap(), FrobeniusField::Imaginary(-4));
            }
        }
    }

    proptest! {
        #[test]
        fn recurrence_is_self_consistent(p_idx in 0usize..40, a_frac in -1.0f64..1.0, k in 1u32..8) {
            let p = arith::primes_in(5, 200)[p_idx];
            let a = (a_frac * arith::isqrt(4 * p) as f64) as i64;
            let d1 = count_extension(a, p, 1).unwrap();
            let dk = count_extension(a, p, k).unwrap();
            prop_assert_eq!(dk.n_k % d1.n_k, 0);
            prop_assert_eq!(classify(&d1).unwrap() == ReductionType::Ordinary, arith::gcd(p, a.unsigned_abs()) == 1);
            if k >= 2 {
                let km1 = count_extension(a, p, k - 1).unwrap();
                let kp1 = count_extension(a, p, k + 1).unwrap();
                prop_assert_eq!(kp1.t_k as i128, a as i128 * dk.t_k as i128 - p as i128 * km1.t_k as i128);
            }
        }
    }
}
