//! Pairwise comparison of curves by the radicals of their local point counts.
//!
//! A mismatch is a pair (p, ℓ) where ℓ divides exactly one of #E(F_p) and
//! #E'(F_p). Isogenous curves never mismatch; the scan can only ever report
//! "consistent with isogeny" for a pair without mismatches, never prove it.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveKey, RationalCurve};
use crate::error::{Error, Result};
use crate::radical::{self, valuation};
use crate::sweep::Engine;

pub const VALUATION_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mismatch {
    pub p: u64,
    pub ell: u64,
    pub v: u32,
    pub v_prime: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllDensity {
    pub ell: u64,
    pub mismatch_primes: u64,
    pub primes: u64,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Distinguished { p: u64, ell: u64 },
    ConsistentWithIsogeny { primes_tested: u64, caveat: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub pair: (CurveKey, CurveKey),
    pub bound: u64,
    pub ells: Vec<u64>,
    pub primes_tested: u64,
    /// Sorted by (p, ℓ).
    pub mismatches: Vec<Mismatch>,
    pub per_ell_density: Vec<EllDensity>,
    /// `None` when there are no common good primes.
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, Default)]
pub struct VerdictPolicy {
    /// Fewer tested primes than this is reported as an empty sample.
    pub min_primes: u64,
}

pub fn verdict(report: &MismatchReport, policy: &VerdictPolicy) -> Result<Verdict> {
    if report.primes_tested == 0 || report.primes_tested < policy.min_primes {
        return Err(Error::EmptySample);
    }
    Ok(match report.mismatches.iter().min_by_key(|m| (m.p, m.ell)) {
        Some(m) => Verdict::Distinguished { p: m.p, ell: m.ell },
        None => Verdict::ConsistentWithIsogeny {
            primes_tested: report.primes_tested,
            caveat: format!("no mismatch ≤ {}", report.bound),
        },
    })
}

/// Primes in [5, bound] of good reduction for both models.
pub fn common_good_primes(e1: &RationalCurve, e2: &RationalCurve, bound: u64) -> Vec<u64> {
    if bound < 5 {
        return Vec::new();
    }
    crate::arith::primes_in(5, bound)
        .into_iter()
        .filter(|&p| e1.is_good_prime(p) && e2.is_good_prime(p))
        .collect()
}

/// (p, N, N') over the common good primes.
fn paired_orders(engine: &Engine, e1: &RationalCurve, e2: &RationalCurve, bound: u64) -> Result<Vec<(u64, i64, i64)>> {
    if bound < 5 {
        return Ok(Vec::new());
    }
    let r1 = engine.traces(e1, bound)?;
    let r2 = engine.traces(e2, bound)?;
    let mut out = Vec::with_capacity(r1.len().min(r2.len()));
    let (mut i, mut j) = (0, 0);
    while i < r1.len() && j < r2.len() {
        match r1[i].0.cmp(&r2[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((r1[i].0, r1[i].1, r2[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    Ok(out)
}

fn order_of(p: u64, a: i64) -> u64 {
    (p as i64 + 1 - a) as u64
}

pub fn mismatch_scan(
    engine: &Engine,
    e1: &RationalCurve,
    e2: &RationalCurve,
    bound: u64,
    ells: &[u64],
) -> Result<MismatchReport> {
    let ells = radical::validate_ells(ells)?;
    let rows = paired_orders(engine, e1, e2, bound)?;
    let mut mismatches = Vec::new();
    let mut per_ell = vec![0u64; ells.len()];
    for &(p, a1, a2) in &rows {
        let (n1, n2) = (order_of(p, a1), order_of(p, a2));
        for (j, &ell) in ells.iter().enumerate() {
            if (n1 % ell == 0) != (n2 % ell == 0) {
                mismatches.push(Mismatch {
                    p,
                    ell,
                    v: valuation(n1, ell),
                    v_prime: valuation(n2, ell),
                });
                per_ell[j] += 1;
            }
        }
    }
    let n = rows.len() as u64;
    let per_ell_density = ells
        .iter()
        .zip(per_ell)
        .map(|(&ell, count)| EllDensity {
            ell,
            mismatch_primes: count,
            primes: n,
            density: if n == 0 { 0.0 } else { count as f64 / n as f64 },
        })
        .collect();
    let mut report = MismatchReport {
        pair: (e1.key(), e2.key()),
        bound,
        ells,
        primes_tested: n,
        mismatches,
        per_ell_density,
        verdict: None,
    };
    report.verdict = verdict(&report, &VerdictPolicy::default()).ok();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApComparison {
    Equal { primes_tested: u64 },
    FirstDivergence { p: u64, a: i64, a_prime: i64 },
}

/// Compare traces at every common good prime <= bound.
pub fn ap_equal_oracle(engine: &Engine, e1: &RationalCurve, e2: &RationalCurve, bound: u64) -> Result<ApComparison> {
    let rows = paired_orders(engine, e1, e2, bound)?;
    Ok(rows
        .iter()
        .find(|(_, a1, a2)| a1 != a2)
        .map(|&(p, a, a_prime)| ApComparison::FirstDivergence { p, a, a_prime })
        .unwrap_or(ApComparison::Equal {
            primes_tested: rows.len() as u64,
        }))
}

/// Joint distribution of (v_ℓ(N), v_ℓ(N')) over common good primes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuationGrid {
    pub ell: u64,
    pub bound: u64,
    pub cap: usize,
    pub primes: u64,
    /// `counts[m][m']` for 0 <= m, m' <= cap.
    pub counts: Vec<Vec<u64>>,
    /// Primes with either valuation above the cap.
    pub overflow: u64,
    pub densities: Vec<Vec<f64>>,
    pub overflow_density: f64,
}

impl ValuationGrid {
    pub fn density_sum(&self) -> f64 {
        self.densities.iter().flatten().sum::<f64>() + self.overflow_density
    }

    /// Marginal density of {v_ℓ(N) >= 1} for the first curve.
    pub fn first_divisible_density(&self) -> f64 {
        let mut n = self.overflow;
        for row in &self.counts[1..] {
            n += row.iter().sum::<u64>();
        }
        n as f64 / self.primes as f64
    }
}

pub fn joint_valuation_density(
    engine: &Engine,
    e1: &RationalCurve,
    e2: &RationalCurve,
    ell: u64,
    bound: u64,
) -> Result<ValuationGrid> {
    radical::validate_ells(&[ell])?;
    let rows = paired_orders(engine, e1, e2, bound)?;
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    let side = VALUATION_CAP + 1;
    let mut counts = vec![vec![0u64; side]; side];
    let mut overflow = 0u64;
    for &(p, a1, a2) in &rows {
        let m = valuation(order_of(p, a1), ell) as usize;
        let m2 = valuation(order_of(p, a2), ell) as usize;
        if m > VALUATION_CAP || m2 > VALUATION_CAP {
            overflow += 1;
        } else {
            counts[m][m2] += 1;
        }
    }
    let n = rows.len() as f64;
    let densities = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / n).collect())
        .collect();
    Ok(ValuationGrid {
        ell,
        bound,
        cap: VALUATION_CAP,
        primes: rows.len() as u64,
        counts,
        overflow,
        densities,
        overflow_density: overflow as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm_i() -> RationalCurve {
        RationalCurve::new("cm_i", 1, 0).unwrap()
    }
    fn cm_j() -> RationalCurve {
        RationalCurve::new("cm_j", 0, 1).unwrap()
    }
    fn cm_i_iso() -> RationalCurve {
        RationalCurve::new("cm_i_iso", -4, 0).unwrap()
    }

    #[test]
    fn common_primes_examples() {
        assert_eq!(common_good_primes(&cm_i(), &cm_j(), 13), vec![5, 7, 11, 13]);
        let c11 = RationalCurve::new("11a1", -13392, -1080432).unwrap();
        assert_eq!(common_good_primes(&c11, &c11, 20), vec![5, 7, 13, 17, 19]);
        assert!(common_good_primes(&cm_i(), &cm_j(), 4).is_empty());
    }

    #[test]
    fn scan_cm_pair() {
        let engine = Engine::in_memory(0);
        let r = mismatch_scan(&engine, &cm_i(), &cm_j(), 13, &[3, 5]).unwrap();
        assert!(r.mismatches.contains(&Mismatch {
            p: 13,
            ell: 3,
            v: 0,
            v_prime: 1
        }));
        assert!(r.mismatches.contains(&Mismatch {
            p: 13,
            ell: 5,
            v: 1,
            v_prime: 0
        }));
        assert_eq!(r.verdict, Some(Verdict::Distinguished { p: 5, ell: 3 }));
        for m in &r.mismatches {
            assert!((m.v == 0) != (m.v_prime == 0));
        }
        for d in &r.per_ell_density {
            assert!((0.0..=1.0).contains(&d.density));
        }
    }

    #[test]
    fn identical_and_isogenous_pairs_never_mismatch() {
        let engine = Engine::in_memory(0);
        let ells = radical::default_ells();
        let r = mismatch_scan(&engine, &cm_i(), &cm_i(), 2000, &ells).unwrap();
        assert!(r.mismatches.is_empty());
        let r = mismatch_scan(&engine, &cm_i(), &cm_i_iso(), 2000, &ells).unwrap();
        assert!(r.mismatches.is_empty());
        assert!(
            matches!(r.verdict, Some(Verdict::ConsistentWithIsogeny { ref caveat, .. }) if caveat == "no mismatch ≤ 2000")
        );
    }

    #[test]
    fn verdict_examples() {
        let engine = Engine::in_memory(0);
        let mut r = mismatch_scan(&engine, &cm_i(), &cm_j(), 13, &[3]).unwrap();
        r.mismatches.retain(|m| m.p == 13);
        assert_eq!(
            verdict(&r, &VerdictPolicy::default()).unwrap(),
            Verdict::Distinguished { p: 13, ell: 3 }
        );

        r.mismatches.clear();
        r.primes_tested = 1229;
        assert!(matches!(
            verdict(&r, &VerdictPolicy::default()).unwrap(),
            Verdict::ConsistentWithIsogeny {
                primes_tested: 1229,
                ..
            }
        ));

        let empty = mismatch_scan(&engine, &cm_i(), &cm_j(), 4, &[3]).unwrap();
        assert_eq!(empty.verdict, None);
        assert!(matches!(
            verdict(&empty, &VerdictPolicy::default()),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn ap_oracle_examples() {
        let engine = Engine::in_memory(0);
        assert_eq!(
            ap_equal_oracle(&engine, &cm_i(), &cm_j(), 13).unwrap(),
            ApComparison::FirstDivergence { p: 5, a: 2, a_prime: 0 }
        );
        assert!(matches!(
            ap_equal_oracle(&engine, &cm_j(), &cm_j(), 500).unwrap(),
            ApComparison::Equal { .. }
        ));
    }

    #[test]
    fn grid_examples() {
        let engine = Engine::in_memory(0);
        let g = joint_valuation_density(&engine, &cm_i(), &cm_j(), 3, 13).unwrap();
        // N = 4, 8, 12, 20 against N' = 6, 12, 12, 12
        assert_eq!(g.counts[0][1], 3);
        assert_eq!(g.counts[1][1], 1);
        assert!((g.density_sum() - 1.0).abs() < 1e-12);

        let d = joint_valuation_density(&engine, &cm_i(), &cm_i(), 2, 5000).unwrap();
        for (m, row) in d.counts.iter().enumerate() {
            for (m2, &c) in row.iter().enumerate() {
                if m != m2 {
                    assert_eq!(c, 0);
                }
            }
        }
        assert!((d.density_sum() - 1.0).abs() < 1e-12);
        assert!(matches!(
            joint_valuation_density(&engine, &cm_i(), &cm_j(), 3, 4),
            Err(Error::EmptySample)
        ));
    }
}
