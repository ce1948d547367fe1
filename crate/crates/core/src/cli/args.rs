//! Value types parsed from the command line.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, RateField};
use crate::montecarlo::replica_rng;

/// Stream reserved for drawing a rate field from a distribution, away from
/// the replica streams `0..replicas`.
pub const FIELD_STREAM: u64 = u64::MAX;

/// `--phi`: a distribution in the `kind:params` language, or explicit rates
/// `list:v1,v2,...` (one per vertex), or `csv:path` (column `phi`).
#[derive(Debug, Clone, PartialEq)]
pub enum RatesArg {
    Spec(FieldSpec),
    List(Vec<f64>),
    Csv(String),
}

impl FromStr for RatesArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<RatesArg> {
        if let Some(rest) = s.strip_prefix("list:") {
            let v = parse_list::<f64>(rest)?;
            RateField::new(v.clone())?;
            return Ok(RatesArg::List(v));
        }
        if let Some(path) = s.strip_prefix("csv:") {
            return Ok(RatesArg::Csv(path.to_string()));
        }
        Ok(RatesArg::Spec(s.parse()?))
    }
}

impl fmt::Display for RatesArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatesArg::Spec(s) => write!(f, "{s}"),
            RatesArg::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", parts.join(","))
            }
            RatesArg::Csv(p) => write!(f, "csv:{p}"),
        }
    }
}

impl RatesArg {
    /// Rates for `n` vertices. Distributions are sampled from the reserved
    /// field stream of `seed`.
    pub fn materialize(&self, n: usize, seed: u64) -> Result<RateField> {
        let field = match self {
            RatesArg::Spec(spec) => RateField::sample(spec, n, &mut replica_rng(seed, FIELD_STREAM))?,
            RatesArg::List(v) => RateField::new(v.clone())?,
            RatesArg::Csv(path) => RateField::read_csv(path)?,
        };
        if field.len() != n {
            return Err(Error::InvalidRates(format!(
                "{} rates given for a graph on {n} vertices",
                field.len()
            )));
        }
        Ok(field)
    }

    pub fn spec(&self) -> Option<&FieldSpec> {
        match self {
            RatesArg::Spec(s) => Some(s),
            _ => None,
        }
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| Error::Parse(format!("`{p}`: {e}"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Parse(format!("empty list `{s}`")));
    }
    Ok(items)
}

/// Comma-separated values as a single clap argument.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = Error;

    fn from_str(s: &str) -> Result<List<T>> {
        parse_list(s).map(List)
    }
}

pub fn parse_horizon(s: &str) -> Result<f64> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => {
            let t: f64 = s.parse().map_err(|e| Error::Parse(format!("time `{s}`: {e}")))?;
            if t >= 0.0 && !t.is_nan() {
                Ok(t)
            } else {
                Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")))
            }
        }
    }
}
