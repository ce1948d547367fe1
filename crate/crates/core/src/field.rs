//! Earning-rate fields: the per-vertex rates and the distributions they are
//! drawn from.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of a single earning rate. Parsed from the CLI mini-language
/// `point:v`, `two:a,p,b`, `uniform:lo,hi`, `exp:rate`, `gamma:k,theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Point { value: f64 },
    /// `a` with probability `p`, otherwise `b`.
    TwoPoint { a: f64, p: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl FieldSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRates(msg));
        match *self {
            FieldSpec::Point { value } if !(value > 0.0 && value.is_finite()) => {
                bad(format!("point mass must be positive, got {value}"))
            }
            FieldSpec::TwoPoint { a, p, b }
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&p)) =>
            {
                bad(format!("two-point law needs a, b > 0 and p in [0,1], got ({a}, {p}, {b})"))
            }
            FieldSpec::Uniform { lo, hi } if !(lo >= 0.0 && hi > lo && hi.is_finite()) => {
                bad(format!("uniform law needs 0 <= lo < hi, got ({lo}, {hi})"))
            }
            FieldSpec::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            FieldSpec::Gamma { shape, scale }
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) =>
            {
                bad(format!("gamma law needs k, theta > 0, got ({shape}, {scale})"))
            }
            _ => Ok(()),
        }
    }

    /// `E(phi)`.
    pub fn mean(&self) -> f64 {
        match *self {
            FieldSpec::Point { value } => value,
            FieldSpec::TwoPoint { a, p, b } => p * a + (1.0 - p) * b,
            FieldSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            FieldSpec::Exponential { rate } => 1.0 / rate,
            FieldSpec::Gamma { shape, scale } => shape * scale,
        }
    }

    /// Draws one rate. Zero draws (possible for `uniform:0,..` or in the
    /// floating-point tail of `exp`) are redrawn so the support stays positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = match *self {
                FieldSpec::Point { value } => value,
                FieldSpec::TwoPoint { a, p, b } => {
                    if rng.random::<f64>() < p {
                        a
                    } else {
                        b
                    }
                }
                FieldSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                FieldSpec::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
                FieldSpec::Gamma { shape, scale } => {
                    Gamma::new(shape, scale).expect("validated").sample(rng)
                }
            };
            if x > 0.0 {
                return x;
            }
        }
    }

    /// The sink margin `eps = (1 - E(phi)) / 2`; positive only when `E(phi) < 1`.
    pub fn default_epsilon(&self) -> f64 {
        0.5 * (1.0 - self.mean())
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<FieldSpec> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("field spec `{s}` is not of the form kind:args")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("field spec `{s}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "field spec `{s}` expects {k} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        let spec = match kind {
            "point" => {
                want(1)?;
                FieldSpec::Point { value: nums[0] }
            }
            "two" => {
                want(3)?;
                FieldSpec::TwoPoint {
                    a: nums[0],
                    p: nums[1],
                    b: nums[2],
                }
            }
            "uniform" => {
                want(2)?;
                FieldSpec::Uniform {
                    lo: nums[0],
                    hi: nums[1],
                }
            }
            "exp" => {
                want(1)?;
                FieldSpec::Exponential { rate: nums[0] }
            }
            "gamma" => {
                want(2)?;
                FieldSpec::Gamma {
                    shape: nums[0],
                    scale: nums[1],
                }
            }
            other => return Err(Error::Parse(format!("unknown field kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FieldSpec::Point { value } => write!(f, "point:{value}"),
            FieldSpec::TwoPoint { a, p, b } => write!(f, "two:{a},{p},{b}"),
            FieldSpec::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            FieldSpec::Exponential { rate } => write!(f, "exp:{rate}"),
            FieldSpec::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
        }
    }
}

/// Per-vertex earning rates `phi_z`, all strictly positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateField {
    rates: Vec<f64>,
    spec: Option<FieldSpec>,
}

impl RateField {
    pub fn new(rates: Vec<f64>) -> Result<RateField> {
        crate::graph::phi_bar(&rates)?;
        Ok(RateField { rates, spec: None })
    }

    pub fn constant(n: usize, value: f64) -> Result<RateField> {
        RateField::new(vec![value; n])
    }

    pub fn sample<R: Rng + ?Sized>(spec: &FieldSpec, n: usize, rng: &mut R) -> Result<RateField> {
        spec.validate()?;
        if n == 0 {
            return Err(Error::InvalidRates("cannot sample an empty field".into()));
        }
        let rates = (0..n).map(|_| spec.sample(rng)).collect();
        Ok(RateField {
            rates,
            spec: Some(*spec),
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn spec(&self) -> Option<&FieldSpec> {
        self.spec.as_ref()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn phi_bar(&self) -> f64 {
        crate::numeric::kahan_sum(self.rates.iter().copied()) / self.rates.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `index,phi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,phi\n");
        for (i, r) in self.rates.iter().enumerate() {
            out.push_str(&format!("{i},{r:?}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<RateField> {
        let mut rates: Vec<(usize, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
                continue;
            }
            let (i, phi) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `index,phi`", lineno + 1)))?;
            let i = i
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let phi = phi
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            rates.push((i, phi));
        }
        rates.sort_by_key(|&(i, _)| i);
        if rates.iter().enumerate().any(|(k, &(i, _))| k != i) {
            return Err(Error::Parse("field indices must be exactly 0..n".into()));
        }
        RateField::new(rates.into_iter().map(|(_, r)| r).collect())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<RateField> {
        RateField::from_csv(&std::fs::read_to_string(path)?)
    }
}
