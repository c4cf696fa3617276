//! Exact Chebotarev constants for mod-ℓ image models.
//!
//! A prime p ∤ ℓ·disc has ℓ | #E(F_p) exactly when its Frobenius g satisfies
//! det(g - 1) = 0, so the density of such primes is the fraction of image
//! elements with eigenvalue 1. For a pair of curves the joint image sits in
//! the fiber product {(g, g') : det g = det g'}; counting per determinant
//! class gives the coupled fractions without a double loop.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::curve::RationalCurve;
use crate::error::{Error, Result};
use crate::modarith::PrimeField;
use crate::par::{self, Exec};
use crate::sweep::Engine;

pub const MAX_GL2_ELL: u64 = 31;
pub const MAX_CARTAN_ELL: u64 = 499;
pub const MAX_COUPLED_WORK: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gl2,
    SplitCartan,
    NonSplitCartan,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Gl2 => "gl2",
            ModelKind::SplitCartan => "split",
            ModelKind::NonSplitCartan => "nonsplit",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gl2" => Ok(ModelKind::Gl2),
            "split" => Ok(ModelKind::SplitCartan),
            "nonsplit" => Ok(ModelKind::NonSplitCartan),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?}; expected gl2, split or nonsplit"
            ))),
        }
    }
}

/// 2×2 matrix over F_ℓ, row-major `[a, b, c, d]`.
pub type Mat2 = [u32; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupModel {
    kind: ModelKind,
    ell: u64,
    /// Non-residue d of the non-split Cartan [[a, b], [b·d, a]].
    nonresidue: u64,
}

impl GroupModel {
    pub fn new(kind: ModelKind, ell: u64) -> Result<Self> {
        if !arith::is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        let (lo, hi) = match kind {
            ModelKind::Gl2 => (2, MAX_GL2_ELL),
            _ => (3, MAX_CARTAN_ELL),
        };
        if !(lo..=hi).contains(&ell) {
            return Err(Error::EllOutOfRange {
                ell,
                model: kind.name(),
            });
        }
        let nonresidue = match kind {
            ModelKind::NonSplitCartan => smallest_non_residue(ell),
            _ => 0,
        };
        Ok(GroupModel { kind, ell, nonresidue })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn order(&self) -> u64 {
        let l = self.ell;
        match self.kind {
            ModelKind::Gl2 => (l * l - 1) * (l * l - l),
            ModelKind::SplitCartan => (l - 1) * (l - 1),
            ModelKind::NonSplitCartan => l * l - 1,
        }
    }

    /// Every element of the model exactly once.
    pub fn elements(&self) -> Elements {
        let l = self.ell;
        let end = match self.kind {
            ModelKind::Gl2 => l.pow(4),
            _ => l * l,
        };
        Elements {
            model: *self,
            next: 0,
            end,
        }
    }

    fn element_at(&self, idx: u64) -> Option<Mat2> {
        let l = self.ell;
        match self.kind {
            ModelKind::Gl2 => {
                let m = [idx / (l * l * l), idx / (l * l) % l, idx / l % l, idx % l];
                (det_mod(&m, l) != 0).then(|| m.map(|v| v as u32))
            }
            ModelKind::SplitCartan => {
                let (a, d) = (idx / l, idx % l);
                (a != 0 && d != 0).then_some([a as u32, 0, 0, d as u32])
            }
            ModelKind::NonSplitCartan => {
                let (a, b) = (idx / l, idx % l);
                (a != 0 || b != 0).then(|| [a as u32, b as u32, (b * self.nonresidue % l) as u32, a as u32])
            }
        }
    }

    /// Per determinant value δ ∈ F_ℓ^×: (#elements, #elements with eigenvalue 1).
    pub fn det_classes(&self) -> Vec<(u64, u64)> {
        let l = self.ell;
        let mut classes = vec![(0u64, 0u64); l as usize];
        for m in self.elements() {
            let c = &mut classes[det(&m, l) as usize];
            c.0 += 1;
            c.1 += u64::from(has_eigenvalue_one(&m, l));
        }
        classes
    }
}

fn smallest_non_residue(ell: u64) -> u64 {
    (2..ell)
        .find(|&g| (1..ell).all(|y| y * y % ell != g))
        .expect("odd prime has a non-residue")
}

fn det_mod(m: &[u64; 4], l: u64) -> u64 {
    (m[0] * m[3] % l + l * l - m[1] * m[2] % l) % l
}

pub fn det(m: &Mat2, l: u64) -> u64 {
    det_mod(&m.map(u64::from), l)
}

/// det(g - 1) = 0
pub fn has_eigenvalue_one(m: &Mat2, l: u64) -> bool {
    let g = m.map(u64::from);
    let shifted = [(g[0] + l - 1) % l, g[1], g[2], (g[3] + l - 1) % l];
    det_mod(&shifted, l) == 0
}

pub struct Elements {
    model: GroupModel,
    next: u64,
    end: u64,
}

impl Iterator for Elements {
    type Item = Mat2;

    fn next(&mut self) -> Option<Mat2> {
        while self.next < self.end {
            let idx = self.next;
            self.next += 1;
            if let Some(m) = self.model.element_at(idx) {
                return Some(m);
            }
        }
        None
    }
}

/// Fraction of model elements with eigenvalue 1, as a reduced fraction.
pub fn eigen_one_fraction(model: &GroupModel) -> Ratio<u64> {
    eigen_one_fraction_with(model, Exec::default())
}

pub fn eigen_one_fraction_with(model: &GroupModel, exec: Exec) -> Ratio<u64> {
    let l = model.ell;
    let chunk = match model.kind {
        ModelKind::Gl2 => l * l * l,
        _ => l,
    };
    let starts: Vec<u64> = (0..l).map(|i| i * chunk).collect();
    let hits: u64 = par::map(exec, &starts, |&start| {
        (start..start + chunk)
            .filter_map(|idx| model.element_at(idx))
            .filter(|m| has_eigenvalue_one(m, l))
            .count() as u64
    })
    .into_iter()
    .sum();
    Ratio::new(hits, model.order())
}

/// How the two components of a coupled pair are tied together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// All (g, g') with det g = det g'.
    FiberProduct,
    /// g = g' (the image of an isogenous pair).
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoupledFractions {
    pub pairs: u64,
    pub mismatch: Ratio<u64>,
    pub agreement: Ratio<u64>,
}

/// Fraction of coupled pairs where exactly one component has eigenvalue 1.
pub fn coupled_mismatch_fraction(m1: &GroupModel, m2: &GroupModel, coupling: Coupling) -> Result<CoupledFractions> {
    if m1.ell != m2.ell {
        return Err(Error::InvalidArgument(format!(
            "models over different primes ({} and {})",
            m1.ell, m2.ell
        )));
    }
    let l = m1.ell;
    let work = (m1.order() as u128) * (m2.order() as u128) * (l as u128 - 1).max(1);
    if work > MAX_COUPLED_WORK as u128 {
        return Err(Error::SizeLimit(format!(
            "{} × {} over ℓ = {l} exceeds 10^8/(ℓ-1) pairs",
            m1.kind, m2.kind
        )));
    }
    match coupling {
        Coupling::Diagonal => {
            if m1 != m2 {
                return Err(Error::InvalidArgument(
                    "diagonal coupling needs identical models".into(),
                ));
            }
            let pairs = m1.order();
            Ok(CoupledFractions {
                pairs,
                mismatch: Ratio::new(0, pairs),
                agreement: Ratio::new(pairs, pairs),
            })
        }
        Coupling::FiberProduct => {
            let (c1, c2) = (m1.det_classes(), m2.det_classes());
            let mut pairs = 0u64;
            let mut mismatched = 0u64;
            for ((n1, e1), (n2, e2)) in c1.into_iter().zip(c2) {
                pairs += n1 * n2;
                mismatched += e1 * (n2 - e2) + (n1 - e1) * e2;
            }
            Ok(CoupledFractions {
                pairs,
                mismatch: Ratio::new(mismatched, pairs),
                agreement: Ratio::new(pairs - mismatched, pairs),
            })
        }
    }
}

/// Split or non-split Cartan for a CM curve with CM discriminant `disc`, by how
/// ℓ splits in the CM field; `None` when ℓ ramifies.
pub fn cm_cartan_kind(disc: i64, ell: u64) -> Option<ModelKind> {
    let l = ell as i64;
    if disc.rem_euclid(l) == 0 {
        return None;
    }
    let field = PrimeField::new(ell).ok()?;
    match field.legendre(field.from_i64(disc)) {
        1 => Some(ModelKind::SplitCartan),
        -1 => Some(ModelKind::NonSplitCartan),
        _ => None,
    }
}

fn ratio_as_str<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub model: ModelKind,
    pub ell: u64,
    #[serde(serialize_with = "ratio_as_str")]
    pub predicted: Ratio<u64>,
    pub hits: u64,
    pub primes: u64,
    pub observed: f64,
    pub sigma: f64,
}

impl Prediction {
    /// |observed - predicted| in units of sigma.
    pub fn deviation(&self) -> f64 {
        let pred = *self.predicted.numer() as f64 / *self.predicted.denom() as f64;
        (self.observed - pred).abs() / self.sigma
    }
}

/// Compare the predicted density of {p : ℓ | #E(F_p)} with a sweep up to `bound`.
///
/// CM curves are refused unless `force` is set: their image is not the model
/// a user would naively pick.
pub fn predict_vs_observe(
    engine: &Engine,
    curve: &RationalCurve,
    model: &GroupModel,
    bound: u64,
    force: bool,
) -> Result<Prediction> {
    if !force && curve.cm_discriminant().is_some() {
        return Err(Error::CmRefused(curve.label().to_string()));
    }
    let ell = model.ell;
    let rows: Vec<(u64, i64)> = engine
        .traces(curve, bound)?
        .into_iter()
        .filter(|&(p, _)| p != ell)
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    let hits = rows
        .iter()
        .filter(|&&(p, a)| (p as i64 + 1 - a) % ell as i64 == 0)
        .count() as u64;
    let primes = rows.len() as u64;
    let predicted = eigen_one_fraction(model);
    let pred = *predicted.numer() as f64 / *predicted.denom() as f64;
    Ok(Prediction {
        model: model.kind,
        ell,
        predicted,
        hits,
        primes,
        observed: hits as f64 / primes as f64,
        sigma: (pred * (1.0 - pred) / primes as f64).sqrt(),
    })
}
