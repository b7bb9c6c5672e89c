//! Power series in t with real exponents, and the serialized bundle layout.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Digital,
    AtmVol,
    Skew,
    Delta,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::Digital, Quantity::AtmVol, Quantity::Skew, Quantity::Delta];

    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::Digital => "digital",
            Quantity::AtmVol => "atm_vol",
            Quantity::Skew => "skew",
            Quantity::Delta => "delta",
        }
    }

    /// Offset between this quantity's exponents and the digital exponents they come from.
    pub fn exponent_shift(&self) -> f64 {
        match self {
            Quantity::Digital | Quantity::Delta => 0.0,
            Quantity::AtmVol | Quantity::Skew => -0.5,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "digital" => Ok(Quantity::Digital),
            "atm_vol" | "atm-vol" => Ok(Quantity::AtmVol),
            "skew" => Ok(Quantity::Skew),
            "delta" => Ok(Quantity::Delta),
            other => Err(Error::Domain(format!("unknown quantity \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exponent: f64,
    pub label: String,
}

/// Σ coef·t^exponent, kept sorted by exponent (stable, so equal exponents keep insertion order).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Series {
    terms: Vec<Term>,
}

impl Series {
    pub fn new(mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        Self { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_upto(t, f64::INFINITY)
    }

    /// Sum of the terms with exponent ≤ `max_exponent` (small slack for rounding).
    pub fn eval_upto(&self, t: f64, max_exponent: f64) -> f64 {
        self.terms
            .iter()
            .filter(|x| x.exponent <= max_exponent + 1e-12)
            .map(|x| if x.exponent == 0.0 { x.coef } else { x.coef * t.powf(x.exponent) })
            .sum()
    }
}

pub(crate) fn term(coef: f64, exponent: f64, label: impl Into<String>) -> Term {
    Term { coef, exponent, label: label.into() }
}

/// Serialized form shared by both models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionBundle {
    pub quantity_exponents: BTreeMap<String, Vec<f64>>,
    pub coefficients: BTreeMap<String, Vec<f64>>,
    pub meta: serde_json::Value,
}

impl ExpansionBundle {
    pub fn from_series(series: &[(Quantity, Series)], meta: serde_json::Value) -> Self {
        let mut quantity_exponents = BTreeMap::new();
        let mut coefficients = BTreeMap::new();
        for (q, s) in series {
            quantity_exponents.insert(q.to_string(), s.terms().iter().map(|x| x.exponent).collect());
            coefficients.insert(q.to_string(), s.terms().iter().map(|x| x.coef).collect());
        }
        Self { quantity_exponents, coefficients, meta }
    }
}
