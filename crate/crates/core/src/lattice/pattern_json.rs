//! JSON descriptions of filter patterns and the built-in registry.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FilterPattern;
use crate::error::{Error, Result};

/// Sign in front of the coefficient in `(1 ± c·z⁻¹)^L`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// A filter pattern as it appears in configuration files.
///
/// ```json
/// {"taps": [[1, 0], [-0.5, 0]]}
/// {"taps": [[1, 0]], "denominator": [[1, 0], [-0.5, 0]]}
/// {"factor": [0.98, 0.09], "multiplicity": 3, "sign": "+"}
/// {"zero": [0.9, 0.125], "multiplicity": 2}
/// "table1:4"
/// ```
///
/// Polar pairs are `[r, theta/π]`. A `factor` builds `(1 ± r·e^{jπθ}·z⁻¹)^L`,
/// a `zero` builds `(1 − z₀·z⁻¹)^L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternSpec {
    Named(String),
    Taps(TapsSpec),
    Factor(FactorSpec),
    Zero(ZeroSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapsSpec {
    pub taps: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub factor: [f64; 2],
    pub multiplicity: usize,
    #[serde(default = "default_sign")]
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpec {
    pub zero: [f64; 2],
    pub multiplicity: usize,
}

fn default_sign() -> Sign {
    Sign::Plus
}

fn polar(p: [f64; 2]) -> Complex64 {
    Complex64::from_polar(p[0], PI * p[1])
}

fn pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

impl PatternSpec {
    pub fn build(&self) -> Result<FilterPattern> {
        match self {
            PatternSpec::Named(name) => named_pattern(name),
            PatternSpec::Taps(t) => match &t.denominator {
                None => FilterPattern::fir(&pairs(&t.taps)),
                Some(den) => FilterPattern::arma(&pairs(&t.taps), &pairs(den)),
            },
            PatternSpec::Factor(fs) => {
                let c = polar(fs.factor);
                let c = if fs.sign == Sign::Plus { c } else { -c };
                Ok(FilterPattern::factored(c, fs.multiplicity))
            }
            PatternSpec::Zero(z) => Ok(FilterPattern::factored(-polar(z.zero), z.multiplicity)),
        }
    }

    /// Explicit-tap description of an existing pattern.
    pub fn from_pattern(f: &FilterPattern) -> Self {
        let conv = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>();
        PatternSpec::Taps(TapsSpec {
            taps: conv(f.taps()),
            denominator: if f.is_fir() { None } else { Some(conv(f.den())) },
        })
    }

    /// Parse either a registry name or a JSON document.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
            Ok(serde_json::from_str(t)?)
        } else {
            Ok(PatternSpec::Named(t.to_string()))
        }
    }
}

/// One row of the table of high coding gain patterns `(1 + r·e^{jπθ}·z⁻¹)^L`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Table1Row {
    pub r: f64,
    pub theta_over_pi: f64,
    pub multiplicity: usize,
    /// Reference minimum squared distance (two decimals).
    pub d2_min: f64,
    /// Reference length of the minimizing error event.
    pub n_min: usize,
}

impl Table1Row {
    pub fn coef(&self) -> Complex64 {
        polar([self.r, self.theta_over_pi])
    }

    pub fn pattern(&self) -> FilterPattern {
        FilterPattern::factored(self.coef(), self.multiplicity)
    }
}

pub const TABLE1: [Table1Row; 5] = [
    Table1Row { r: 0.90, theta_over_pi: 0.125, multiplicity: 2, d2_min: 14.81, n_min: 3 },
    Table1Row { r: 0.98, theta_over_pi: 0.125, multiplicity: 2, d2_min: 17.33, n_min: 3 },
    Table1Row { r: 0.95, theta_over_pi: 0.125, multiplicity: 3, d2_min: 20.53, n_min: 10 },
    Table1Row { r: 0.98, theta_over_pi: 0.09, multiplicity: 3, d2_min: 23.59, n_min: 5 },
    Table1Row { r: 0.95, theta_over_pi: 0.08, multiplicity: 4, d2_min: 31.27, n_min: 12 },
];

/// Pattern of row `row` (1-based).
pub fn table1_pattern(row: usize) -> Result<FilterPattern> {
    row.checked_sub(1)
        .and_then(|i| TABLE1.get(i))
        .map(Table1Row::pattern)
        .ok_or_else(|| Error::Pattern(format!("no table row {row} (rows are 1..=5)")))
}

fn named_pattern(name: &str) -> Result<FilterPattern> {
    if name == "identity" {
        return Ok(FilterPattern::identity());
    }
    if let Some(row) = name.strip_prefix("table1:") {
        let row: usize = row
            .parse()
            .map_err(|_| Error::Pattern(format!("bad table row in {name:?}")))?;
        return table1_pattern(row);
    }
    Err(Error::Pattern(format!(
        "unknown pattern {name:?} (expected identity, table1:1..5 or a JSON description)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let p = PatternSpec::parse(r#"{"taps": [[1, 0], [-0.5, 0]]}"#).unwrap().build().unwrap();
        assert_eq!(p.order(), 1);
        assert_eq!(p.taps()[1], Complex64::new(-0.5, 0.0));

        let row4 = PatternSpec::parse("table1:4").unwrap().build().unwrap();
        let fac = PatternSpec::parse(r#"{"factor": [0.98, 0.09], "multiplicity": 3, "sign": "+"}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(row4, fac);

        let z = PatternSpec::parse(r#"{"zero": [0.5, 0], "multiplicity": 1}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!((z.taps()[1] - Complex64::new(-0.5, 0.0)).norm() < 1e-15);

        let arma = PatternSpec::parse(r#"{"taps": [[1,0]], "denominator": [[1,0],[-0.5,0]]}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!(!arma.is_fir());
    }

    #[test]
    fn unknown_keys_and_names_rejected() {
        assert!(PatternSpec::parse("table1:6").unwrap().build().is_err());
        assert!(PatternSpec::parse("nonsense").unwrap().build().is_err());
        assert!(PatternSpec::parse(r#"{"tapz": [[1, 0]]}"#).is_err());
        assert!(PatternSpec::parse(r#"{"taps": [[1, 0]], "extra": 1}"#).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let f = table1_pattern(2).unwrap();
        let s = serde_json::to_string(&PatternSpec::from_pattern(&f)).unwrap();
        let g = PatternSpec::parse(&s).unwrap().build().unwrap();
        assert_eq!(f, g);
    }
}
