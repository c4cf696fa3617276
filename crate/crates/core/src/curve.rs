//! Short Weierstrass curves over Q and their reductions modulo primes.
//!
//! Group orders come from two independent routes: a character sum over
//! x-coordinates (`count_naive`) and baby-step/giant-step over the Hasse
//! interval (`count_bsgs`). `group_order` dispatches on the size of p.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith;
use crate::error::{Error, Result};
use crate::modarith::PrimeField;

/// Default crossover from the character sum to BSGS.
pub const NAIVE_THRESHOLD: u64 = 1 << 14;

const BSGS_POINTS: usize = 8;
const TORSION_TRIALS: usize = 40;

/// 128-bit content hash of a model's coefficients.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurveKey(pub [u8; 16]);

impl CurveKey {
    pub fn of(a: &BigInt, b: &BigInt) -> Self {
        let digest = Sha256::digest(format!("{a},{b}").as_bytes());
        let mut key = [0u8; 16];
        key.copy_from_slice(&digest[..16]);
        CurveKey(key)
    }

    pub fn hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for CurveKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl fmt::Debug for CurveKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CurveKey({})", self.hex())
    }
}

impl Serialize for CurveKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.hex())
    }
}

impl<'de> Deserialize<'de> for CurveKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() != 32 {
            return Err(serde::de::Error::custom("curve key must be 32 hex digits"));
        }
        let mut key = [0u8; 16];
        for (i, byte) in key.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(serde::de::Error::custom)?;
        }
        Ok(CurveKey(key))
    }
}

/// Rational j-invariants of CM curves with the discriminant of the CM order.
const CM_J_INVARIANTS: [(i64, i64); 13] = [
    (0, -3),
    (1728, -4),
    (-3375, -7),
    (8000, -8),
    (-32768, -11),
    (54000, -12),
    (287496, -16),
    (-884736, -19),
    (-12288000, -27),
    (16581375, -28),
    (-884736000, -43),
    (-147197952000, -67),
    (-262537412640768000, -163),
];

/// An integral model y² = x³ + a·x + b over Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalCurve {
    label: String,
    a: BigInt,
    b: BigInt,
    disc: BigInt,
}

impl RationalCurve {
    pub fn new(label: impl Into<String>, a: impl Into<BigInt>, b: impl Into<BigInt>) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        let disc = BigInt::from(-16) * (BigInt::from(4) * &a * &a * &a + BigInt::from(27) * &b * &b);
        if disc.is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(RationalCurve {
            label: label.into(),
            a,
            b,
            disc,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    pub fn key(&self) -> CurveKey {
        CurveKey::of(&self.a, &self.b)
    }

    /// Good reduction in the sense of the supplied model: p >= 5 and p ∤ disc.
    pub fn is_good_prime(&self, p: u64) -> bool {
        p >= 5 && !(&self.disc % p).is_zero()
    }

    pub fn reduce(&self, p: u64) -> Result<ReducedCurve> {
        if p < 5 {
            return Err(Error::SmallPrime(p));
        }
        let field = PrimeField::new(p)?;
        if (&self.disc % p).is_zero() {
            return Err(Error::BadReduction(p));
        }
        let a = reduce_big(&self.a, p);
        let b = reduce_big(&self.b, p);
        ReducedCurve::new(field, a, b)
    }

    /// The quadratic twist y² = x³ + a·d²·x + b·d³.
    pub fn twist(&self, d: i64, label: impl Into<String>) -> Result<Self> {
        let d = BigInt::from(d);
        let a = &self.a * &d * &d;
        let b = &self.b * &d * &d * &d;
        RationalCurve::new(label, a, b)
    }

    /// Discriminant of the CM order when the j-invariant is one of the thirteen
    /// rational CM values, `None` otherwise.
    pub fn cm_discriminant(&self) -> Option<i64> {
        // j = 1728 · 4a³ / (4a³ + 27b²)
        let four_a3 = BigInt::from(4) * &self.a * &self.a * &self.a;
        let denom = &four_a3 + BigInt::from(27) * &self.b * &self.b;
        let numer = BigInt::from(1728) * &four_a3;
        CM_J_INVARIANTS
            .iter()
            .find(|(j, _)| BigInt::from(*j) * &denom == numer)
            .map(|&(_, d)| d)
    }
}

fn reduce_big(v: &BigInt, p: u64) -> u64 {
    v.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits in u64")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: u64, y: u64 },
}

impl Point {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

/// Result of a rank test on the ℓ-torsion of E(F_p).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorsionRank {
    Rank1,
    /// Two independent points of order ℓ; the pair is a certificate.
    Rank2 {
        p: Point,
        q: Point,
    },
}

/// How `count_bsgs` settled on a unique order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    /// Orders of points on E alone pinned a single candidate.
    PointOrders,
    /// The quadratic twist was needed.
    Twist,
    /// Both curves had too small an exponent; only possible for tiny p.
    CharacterSum,
}

/// Per-prime RNG derived from the caller's seed, independent of scheduling.
pub fn prime_rng(seed: u64, p: u64) -> ChaCha8Rng {
    let mut z = seed ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// The Hasse interval `[p + 1 - ⌊2√p⌋, p + 1 + ⌊2√p⌋]`.
pub fn hasse_interval(p: u64) -> (u64, u64) {
    let w = arith::isqrt(4 * p);
    (p + 1 - w, p + 1 + w)
}

/// y² = x³ + a·x + b over F_p with nonzero discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReducedCurve {
    field: PrimeField,
    a: u64,
    b: u64,
}

impl ReducedCurve {
    pub fn new(field: PrimeField, a: u64, b: u64) -> Result<Self> {
        let (a, b) = (field.reduce(a), field.reduce(b));
        let four_a3 = field.mul(4, field.pow(a, 3));
        let b2 = field.mul(27, field.mul(b, b));
        if field.add(four_a3, b2) == 0 {
            return Err(Error::SingularCurve);
        }
        Ok(ReducedCurve { field, a, b })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u64 {
        self.field.modulus()
    }

    pub fn coefficients(&self) -> (u64, u64) {
        (self.a, self.b)
    }

    /// x³ + a·x + b
    pub fn rhs(&self, x: u64) -> u64 {
        let f = &self.field;
        f.add(f.mul(f.add(f.mul(x, x), self.a), x), self.b)
    }

    pub fn contains(&self, pt: &Point) -> bool {
        match *pt {
            Point::Infinity => true,
            Point::Affine { x, y } => x < self.p() && y < self.p() && self.field.mul(y, y) == self.rhs(x),
        }
    }

    /// Twist by the smallest non-residue g: y² = x³ + a·g²·x + b·g³.
    pub fn quadratic_twist(&self) -> ReducedCurve {
        let f = &self.field;
        let g = f.smallest_non_residue();
        let g2 = f.mul(g, g);
        ReducedCurve {
            field: self.field,
            a: f.mul(self.a, g2),
            b: f.mul(self.b, f.mul(g2, g)),
        }
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match *pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::Affine {
                x,
                y: self.field.neg(y),
            },
        }
    }

    pub fn add(&self, p1: &Point, p2: &Point) -> Point {
        debug_assert!(self.contains(p1) && self.contains(p2), "point off curve");
        let f = &self.field;
        let (x1, y1, x2, y2) = match (*p1, *p2) {
            (Point::Infinity, q) | (q, Point::Infinity) => return q,
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let slope = if x1 == x2 {
            if f.add(y1, y2) == 0 {
                return Point::Infinity;
            }
            // tangent: (3x² + a) / 2y
            let num = f.add(f.mul(3, f.mul(x1, x1)), self.a);
            f.mul(num, f.inv(f.add(y1, y1)).expect("y != 0"))
        } else {
            f.mul(f.sub(y2, y1), f.inv(f.sub(x2, x1)).expect("x1 != x2"))
        };
        let x3 = f.sub(f.sub(f.mul(slope, slope), x1), x2);
        let y3 = f.sub(f.mul(slope, f.sub(x1, x3)), y1);
        Point::Affine { x: x3, y: y3 }
    }

    /// Double-and-add.
    pub fn scalar_mul(&self, mut n: u64, pt: &Point) -> Point {
        let mut acc = Point::Infinity;
        let mut base = *pt;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.add(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.add(&base, &base);
            }
        }
        acc
    }

    /// Sample x until x³ + ax + b is a square, then take a root with a random sign.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let p = self.p();
        loop {
            let x = rng.random_range(0..p);
            if let Some(y) = self.field.sqrt(self.rhs(x)) {
                let y = if rng.random::<bool>() { y } else { self.field.neg(y) };
                return Point::Affine { x, y };
            }
        }
    }

    /// `1 + Σ_x (1 + (x³+ax+b | p))`, with quadratic residues tabulated once.
    pub fn count_naive(&self) -> u64 {
        let p = self.p();
        let f = &self.field;
        let mut is_square = vec![false; p as usize];
        let mut sq = 0u64;
        // (y+1)² = y² + 2y + 1
        for y in 0..p.div_ceil(2) {
            is_square[sq as usize] = true;
            sq = f.add(sq, f.reduce(2 * y + 1));
        }
        let mut count = 1u64;
        for x in 0..p {
            let r = self.rhs(x);
            if r == 0 {
                count += 1;
            } else if is_square[r as usize] {
                count += 2;
            }
        }
        count
    }

    /// Smallest m in `[lo, hi]` with m·P = O, by baby-step/giant-step.
    fn annihilator_in(&self, pt: &Point, lo: u64, hi: u64) -> Option<u64> {
        let width = hi - lo;
        let steps = arith::isqrt(width) + 1;
        let mut baby: HashMap<Point, u64> = HashMap::with_capacity(steps as usize);
        let mut cur = Point::Infinity;
        for j in 0..steps {
            baby.entry(cur).or_insert(j);
            cur = self.add(&cur, pt);
        }
        let giant = cur; // steps·P
        let mut g = self.scalar_mul(lo, pt);
        let mut base = lo;
        while base <= hi {
            // (base + j)·P = O  <=>  j·P = -(base·P)
            if let Some(&j) = baby.get(&self.neg(&g)) {
                if base + j <= hi {
                    return Some(base + j);
                }
            }
            g = self.add(&g, &giant);
            base += steps;
        }
        None
    }

    /// Exact order of `pt` given a multiple `m` that kills it.
    pub fn order_from_multiple(&self, pt: &Point, m: u64) -> u64 {
        let mut ord = m;
        for (q, _) in arith::factor(m) {
            while ord.is_multiple_of(q) && self.scalar_mul(ord / q, pt).is_infinity() {
                ord /= q;
            }
        }
        ord
    }

    fn sampled_exponent<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        lo: u64,
        hi: u64,
        mut done: impl FnMut(u64) -> bool,
    ) -> Result<u64> {
        let mut exponent = 1u64;
        for _ in 0..BSGS_POINTS {
            let pt = self.random_point(rng);
            let m = self.annihilator_in(&pt, lo, hi).ok_or_else(|| {
                Error::Invariant(format!(
                    "no multiple of a point order in the Hasse interval at p = {}",
                    self.p()
                ))
            })?;
            exponent = arith::lcm(exponent, self.order_from_multiple(&pt, m));
            if done(exponent) {
                break;
            }
        }
        Ok(exponent)
    }

    /// Group order by BSGS over the Hasse interval, with the twist used to break ties.
    pub fn count_bsgs<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.count_bsgs_detailed(rng).map(|(n, _)| n)
    }

    pub fn count_bsgs_detailed<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(u64, Resolution)> {
        let p = self.p();
        let (lo, hi) = hasse_interval(p);
        let multiples = |l: u64| (lo.div_ceil(l) * l..=hi).step_by(l as usize);

        let exponent = self.sampled_exponent(rng, lo, hi, |l| multiples(l).take(2).count() == 1)?;
        let mut candidates: Vec<u64> = multiples(exponent).collect();
        if candidates.len() == 1 {
            return Ok((candidates[0], Resolution::PointOrders));
        }

        // #E + #E' = 2p + 2
        let twist = self.quadratic_twist();
        let total = 2 * p + 2;
        let twist_exponent = twist.sampled_exponent(rng, lo, hi, |l| {
            candidates
                .iter()
                .filter(|&&n| (total - n).is_multiple_of(l))
                .take(2)
                .count()
                == 1
        })?;
        candidates.retain(|&n| (total - n).is_multiple_of(twist_exponent));
        match candidates.len() {
            1 => Ok((candidates[0], Resolution::Twist)),
            0 => Err(Error::Invariant(format!(
                "BSGS eliminated every candidate order at p = {p}"
            ))),
            _ => {
                let n = self.count_naive();
                if !candidates.contains(&n) {
                    return Err(Error::Invariant(format!(
                        "character sum {n} outside BSGS candidates at p = {p}"
                    )));
                }
                Ok((n, Resolution::CharacterSum))
            }
        }
    }

    pub fn group_order<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.group_order_with(NAIVE_THRESHOLD, rng)
    }

    pub fn group_order_with<R: Rng + ?Sized>(&self, threshold: u64, rng: &mut R) -> Result<u64> {
        if self.p() < threshold {
            Ok(self.count_naive())
        } else {
            self.count_bsgs(rng)
        }
    }

    /// Monte Carlo rank of E(F_p)[ℓ]. `Rank2` is certified by its witnesses;
    /// `Rank1` is wrong with probability at most 2^-20 (40 sampled points).
    pub fn torsion_rank<R: Rng + ?Sized>(&self, ell: u64, order: u64, rng: &mut R) -> Result<TorsionRank> {
        if ell < 2 || !order.is_multiple_of(ell) {
            return Err(Error::NotDivisible { ell, order });
        }
        // Weil pairing: full ℓ-torsion over F_p forces ℓ | p - 1.
        if !(self.p() - 1).is_multiple_of(ell) {
            return Ok(TorsionRank::Rank1);
        }
        let mut cofactor = order;
        while cofactor.is_multiple_of(ell) {
            cofactor /= ell;
        }
        let mut first: Option<Point> = None;
        for _ in 0..TORSION_TRIALS {
            let mut q = self.scalar_mul(cofactor, &self.random_point(rng));
            if q.is_infinity() {
                continue;
            }
            loop {
                let next = self.scalar_mul(ell, &q);
                if next.is_infinity() {
                    break;
                }
                q = next;
            }
            match first {
                None => first = Some(q),
                Some(p1) => {
                    if !self.in_cyclic_span(&p1, &q, ell) {
                        return Ok(TorsionRank::Rank2 { p: p1, q });
                    }
                }
            }
        }
        Ok(TorsionRank::Rank1)
    }

    /// Whether q ∈ {i·p : 0 <= i < ℓ}.
    pub fn in_cyclic_span(&self, p: &Point, q: &Point, ell: u64) -> bool {
        let mut cur = Point::Infinity;
        for _ in 0..ell {
            if cur == *q {
                return true;
            }
            cur = self.add(&cur, p);
        }
        false
    }
}
