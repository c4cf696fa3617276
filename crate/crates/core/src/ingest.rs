//! JSON-lines curve files.
//!
//! One object per line, coefficients as decimal strings so that models with
//! large coefficients are read losslessly:
//!
//! ```text
//! {"label":"cm_i","a":"1","b":"0"}
//! ```
//!
//! Blank lines are skipped. Curves in long Weierstrass form must be converted
//! first: with the usual b2, b4, b6, c4, c6 the short model is
//! y² = x³ - 27·c4·x - 54·c6.

use std::collections::HashSet;
use std::path::Path;

use num_bigint::BigInt;
use serde::Deserialize;

use crate::curve::RationalCurve;
use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../data/curves.jsonl");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveLine {
    label: String,
    a: String,
    b: String,
}

fn parse_int(s: &str, what: &str, line: usize) -> Result<BigInt> {
    s.trim().parse::<BigInt>().map_err(|_| Error::MalformedLine {
        line,
        msg: format!("coefficient {what} = {s:?} is not a decimal integer"),
    })
}

pub fn parse_curves(text: &str) -> Result<Vec<RationalCurve>> {
    let mut seen = HashSet::new();
    let mut curves = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: CurveLine = serde_json::from_str(raw).map_err(|e| Error::MalformedLine {
            line,
            msg: e.to_string(),
        })?;
        let a = parse_int(&rec.a, "a", line)?;
        let b = parse_int(&rec.b, "b", line)?;
        let curve = RationalCurve::new(rec.label.clone(), a, b).map_err(|e| match e {
            Error::SingularCurve => Error::MalformedLine {
                line,
                msg: format!("curve {:?} is singular (discriminant 0)", rec.label),
            },
            other => other,
        })?;
        if !seen.insert(rec.label.clone()) {
            return Err(Error::DuplicateLabel(rec.label));
        }
        curves.push(curve);
    }
    Ok(curves)
}

pub fn ingest_curves(path: &Path) -> Result<Vec<RationalCurve>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curves(&text)
}

/// Curves shipped with the crate.
pub fn bundled_curves() -> Vec<RationalCurve> {
    parse_curves(BUNDLED).expect("bundled curve file is valid")
}

/// Label lookup over user curves first, then the bundled set.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    curves: Vec<RationalCurve>,
}

impl Catalog {
    pub fn bundled() -> Self {
        Catalog {
            curves: bundled_curves(),
        }
    }

    /// User curves shadow bundled ones with the same label.
    pub fn with_user_curves(mut self, user: Vec<RationalCurve>) -> Self {
        self.curves.retain(|c| user.iter().all(|u| u.label() != c.label()));
        let mut curves = user;
        curves.append(&mut self.curves);
        Catalog { curves }
    }

    pub fn get(&self, label: &str) -> Result<&RationalCurve> {
        self.curves
            .iter()
            .find(|c| c.label() == label)
            .ok_or_else(|| Error::UnknownCurve(label.to_string()))
    }

    pub fn curves(&self) -> &[RationalCurve] {
        &self.curves
    }
}
