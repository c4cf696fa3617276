//! ℓ-adic valuations of local point counts and the radical bits ρ_ℓ(p) = min(1, v_ℓ).

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::curve::{CurveKey, RationalCurve};
use crate::error::{Error, Result};
use crate::lfunc;
use crate::sweep::Engine;

pub fn valuation(mut n: u64, ell: u64) -> u32 {
    assert!(n >= 1 && ell >= 2);
    let mut v = 0;
    while n.is_multiple_of(ell) {
        n /= ell;
        v += 1;
    }
    v
}

pub fn rho(n: u64, ell: u64) -> u8 {
    u8::from(n.is_multiple_of(ell))
}

/// Default test primes: the first fifteen.
pub fn default_ells() -> Vec<u64> {
    arith::first_primes(15)
}

pub fn validate_ells(ells: &[u64]) -> Result<Vec<u64>> {
    if ells.is_empty() {
        return Err(Error::InvalidArgument("the list of ℓ is empty".into()));
    }
    if let Some(&bad) = ells.iter().find(|&&l| !arith::is_prime(l)) {
        return Err(Error::NotPrime(bad));
    }
    let mut sorted = ells.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub curve_key: CurveKey,
    pub degree: u32,
    pub primes: Vec<u64>,
    pub ells: Vec<u64>,
    /// `vals[i][j] = v_{ells[j]}(N_k(primes[i]))`
    pub vals: Vec<Vec<u8>>,
}

impl Fingerprint {
    pub fn rho(&self, i: usize, j: usize) -> u8 {
        self.vals[i][j].min(1)
    }

    /// The valuation matrix flattened row-major.
    pub fn matrix_bytes(&self) -> Vec<u8> {
        self.vals.concat()
    }
}

/// Fingerprint from cached (p, a_p) rows.
pub fn fingerprint_from_traces(key: CurveKey, rows: &[(u64, i64)], ells: &[u64], degree: u32) -> Result<Fingerprint> {
    let ells = validate_ells(ells)?;
    let mut primes = Vec::with_capacity(rows.len());
    let mut vals = Vec::with_capacity(rows.len());
    for &(p, a) in rows {
        let n = lfunc::count_extension(a, p, degree)?.n_k;
        primes.push(p);
        vals.push(ells.iter().map(|&l| valuation(n, l) as u8).collect());
    }
    Ok(Fingerprint {
        curve_key: key,
        degree,
        primes,
        ells,
        vals,
    })
}

pub fn fingerprint(
    engine: &Engine,
    curve: &RationalCurve,
    bound: u64,
    ells: &[u64],
    degree: u32,
) -> Result<Fingerprint> {
    let rows = engine.traces(curve, bound)?;
    fingerprint_from_traces(curve.key(), &rows, ells, degree)
}
