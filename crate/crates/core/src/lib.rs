//! Radical fingerprints of elliptic curves over Q.
//!
//! For a curve E and a prime p of good reduction the tool computes
//! #E(F_p) = p + 1 - a_p and records, for a list of small primes ℓ, the
//! valuation v_ℓ(#E(F_p)). Two curves over Q are isogenous exactly when, on a
//! density-one set of primes and for infinitely many ℓ, ℓ divides both counts
//! or neither. The crate sweeps primes to look for a witness (p, ℓ) that
//! separates two curves, compares against the a_p-equality criterion, and
//! checks observed divisibility frequencies against exact counts in GL₂(F_ℓ)
//! and its Cartan subgroups.
//!
//! - [`modarith`]: prime-field arithmetic, Legendre symbols, square roots
//! - [`curve`]: models over Q, reductions, group law, point counting
//! - [`lfunc`]: traces, L-polynomials, extension counts, reduction type
//! - [`radical`]: valuations and fingerprint matrices
//! - [`distinguish`]: mismatch scans, verdicts, valuation grids
//! - [`galois`]: image-model enumeration and Chebotarev constants
//! - [`sweep`], [`cache`]: trace sweeps with an on-disk cache
//! - [`ingest`], [`cli`]: curve files and the command-line front end

pub mod arith;
pub mod cache;
pub mod cli;
pub mod curve;
pub mod distinguish;
pub mod error;
pub mod galois;
pub mod ingest;
pub mod lfunc;
pub mod modarith;
pub mod par;
pub mod radical;
pub mod sweep;

pub use curve::{Point, RationalCurve, ReducedCurve};
pub use error::{Error, Result};
pub use modarith::PrimeField;
pub use sweep::Engine;
