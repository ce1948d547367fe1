//! One-dimensional rate fields: sinks (vertices around which every interval
//! earns less than it spends), the clock event that kills the origin before
//! time one, and death densities on large rings.
//!
//! For `g_i = phi_i - (1 - eps)` a vertex `z` is a right sink when every sum
//! `g_z + ... + g_{z+n}` is `<= 0`, a left sink when every
//! `g_{z-m} + ... + g_z` is, and an eps-sink when every two-sided sum
//! `g_{z-m} + ... + g_{z+n}` is. The infinite quantifiers are truncated at
//! `m, n <= horizon`, so flagged vertices are a superset of true sinks.

mod density;
mod event_a;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, RateField};
use crate::montecarlo::stats::run_replicas;
use crate::montecarlo::EstimateResult;

pub use density::{death_density, profile_csv, DensityConfig, DensityReport, FieldMode};
pub use event_a::{
    conditional_death_check, estimate_event_a, evaluate_event_a, sample_clocks_given_a, ConditionalDeath,
    EventA, EventAEstimate, EventAWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Ring: indices wrap around.
    Periodic,
    /// Finite window: sums stop at the ends.
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkReport {
    pub eps: f64,
    pub horizon: usize,
    pub boundary: Boundary,
    pub right: Vec<bool>,
    pub left: Vec<bool>,
    pub eps_sink: Vec<bool>,
    /// The `m, n <= horizon` range fit inside the window on both sides. Always
    /// true on a ring.
    pub complete: Vec<bool>,
    /// Flags only witness the absence of a violation up to the horizon; a
    /// cleared flag is definitive, a set one is not.
    pub horizon_truncated: bool,
}

impl SinkReport {
    pub fn len(&self) -> usize {
        self.eps_sink.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_sink.is_empty()
    }

    pub fn eps_sink_count(&self) -> usize {
        self.eps_sink.iter().filter(|&&b| b).count()
    }

    pub fn right_count(&self) -> usize {
        self.right.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.eps_sink_count() as f64 / self.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Rounding slack for a sum of `k` terms.
fn slack(k: usize) -> f64 {
    1e-12 * (k as f64 + 1.0)
}

pub fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(())
}

/// Flags for a single vertex. Returns `(right, left, eps, complete)`.
fn classify(g: &[f64], z: usize, horizon: usize, boundary: Boundary) -> (bool, bool, bool, bool) {
    let n = g.len();
    let at = |offset: isize| -> Option<f64> {
        let i = z as isize + offset;
        match boundary {
            Boundary::Periodic => Some(g[i.rem_euclid(n as isize) as usize]),
            Boundary::Open => (0..n as isize).contains(&i).then(|| g[i as usize]),
        }
    };
    let mut complete = true;

    // Right sums g_z + ... + g_{z+k}.
    let mut sum = 0.0;
    let mut max_right = f64::NEG_INFINITY;
    let mut right = true;
    for k in 0..=horizon {
        let Some(v) = at(k as isize) else {
            complete = false;
            break;
        };
        sum += v;
        max_right = max_right.max(sum);
        if sum > slack(k) {
            right = false;
        }
    }

    // Left sums g_{z-k} + ... + g_z, and the strictly-left parts
    // g_{z-k} + ... + g_{z-1} for the two-sided check.
    let mut sum = at(0).unwrap_or(0.0);
    let mut left = sum <= slack(0);
    let mut strict = 0.0;
    let mut max_strict = 0.0f64;
    for k in 1..=horizon {
        let Some(v) = at(-(k as isize)) else {
            complete = false;
            break;
        };
        sum += v;
        strict += v;
        max_strict = max_strict.max(strict);
        if sum > slack(k) {
            left = false;
        }
    }
    let eps = max_right + max_strict <= slack(2 * horizon);
    (right, left, eps, complete)
}

/// Sink flags for every vertex of `field`.
pub fn detect_sinks(field: &RateField, eps: f64, horizon: usize, boundary: Boundary) -> Result<SinkReport> {
    check_eps(eps)?;
    let n = field.len();
    if boundary == Boundary::Periodic && 2 * horizon + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} wraps around a ring of {n} vertices; need 2H + 1 <= n"
        )));
    }
    let g: Vec<f64> = field.rates().iter().map(|&p| p - (1.0 - eps)).collect();
    let mut report = SinkReport {
        eps,
        horizon,
        boundary,
        right: Vec::with_capacity(n),
        left: Vec::with_capacity(n),
        eps_sink: Vec::with_capacity(n),
        complete: Vec::with_capacity(n),
        horizon_truncated: true,
    };
    for z in 0..n {
        let (r, l, e, c) = classify(&g, z, horizon, boundary);
        report.right.push(r);
        report.left.push(l);
        report.eps_sink.push(e);
        report.complete.push(c);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkProbability {
    pub right: EstimateResult,
    pub left: EstimateResult,
    pub eps_sink: EstimateResult,
    /// Square of the pooled one-sided estimate.
    pub a_squared: f64,
    /// `eps_sink >= a^2 - 3 * (combined standard error)`.
    pub correlation_check: bool,
}

/// Monte Carlo probability that the centre of a fresh window of `2H + 1`
/// i.i.d. rates is a right, left and eps-sink.
pub fn sink_probability(spec: &FieldSpec, eps: f64, horizon: usize, samples: u64, seed: u64) -> Result<SinkProbability> {
    spec.validate()?;
    check_eps(eps)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let width = 2 * horizon + 1;
    let flags = run_replicas(samples, seed, |_, rng| {
        let field = RateField::sample(spec, width, rng)?;
        let g: Vec<f64> = field.rates().iter().map(|&p| p - (1.0 - eps)).collect();
        let (r, l, e, _) = classify(&g, horizon, horizon, Boundary::Open);
        Ok((r, l, e))
    })?;
    let count = |f: fn(&(bool, bool, bool)) -> bool| flags.iter().filter(|x| f(x)).count() as u64;
    let params = json!({"field": spec.to_string(), "eps": eps, "horizon": horizon});
    let right = EstimateResult::proportion("right_sink", count(|x| x.0), samples, 0, seed, params.clone());
    let left = EstimateResult::proportion("left_sink", count(|x| x.1), samples, 0, seed, params.clone());
    let eps_sink = EstimateResult::proportion("eps_sink", count(|x| x.2), samples, 0, seed, params);
    // Left and right have the same law; pool them for a.
    let a = 0.5 * (right.point + left.point);
    let se_a = ((a * (1.0 - a)) / (2 * samples) as f64).sqrt();
    let combined = (eps_sink.std_error.powi(2) + (2.0 * a * se_a).powi(2)).sqrt();
    let a_squared = a * a;
    Ok(SinkProbability {
        correlation_check: eps_sink.point >= a_squared - 3.0 * combined,
        right,
        left,
        eps_sink,
        a_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Every interval sum, straight from the definition.
    fn brute(field: &[f64], eps: f64, h: usize, z: usize) -> (bool, bool, bool) {
        let n = field.len() as isize;
        let at = |i: isize| field[i.rem_euclid(n) as usize];
        let ok = |lo: isize, hi: isize| {
            let s: f64 = (lo..=hi).map(at).sum();
            s <= (hi - lo + 1) as f64 * (1.0 - eps) + 1e-9
        };
        let z = z as isize;
        let h = h as isize;
        let right = (0..=h).all(|k| ok(z, z + k));
        let left = (0..=h).all(|k| ok(z - k, z));
        let two = (0..=h).all(|m| (0..=h).all(|k| ok(z - m, z + k)));
        (right, left, two)
    }

    #[test]
    fn constant_fields() {
        let low = RateField::constant(50, 0.5).unwrap();
        let r = detect_sinks(&low, 0.25, 10, Boundary::Periodic).unwrap();
        assert_eq!(r.eps_sink_count(), 50);
        let high = RateField::constant(50, 1.0).unwrap();
        let r = detect_sinks(&high, 0.25, 10, Boundary::Periodic).unwrap();
        assert_eq!(r.eps_sink_count(), 0);
        assert_eq!(r.right_count(), 0);
        // Exactly at the threshold counts as a sink.
        let edge = RateField::constant(50, 0.75).unwrap();
        assert_eq!(detect_sinks(&edge, 0.25, 10, Boundary::Periodic).unwrap().eps_sink_count(), 50);
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = RateField::constant(10, 0.5).unwrap();
        assert!(detect_sinks(&f, 1.0, 2, Boundary::Periodic).is_err());
        assert!(detect_sinks(&f, 0.0, 2, Boundary::Periodic).is_err());
        assert!(detect_sinks(&f, 0.5, 5, Boundary::Periodic).is_err());
        assert!(detect_sinks(&f, 0.5, 5, Boundary::Open).is_ok());
    }

    #[test]
    fn alternating_field_matches_brute_force() {
        let f: Vec<f64> = (0..21).map(|i| if i % 2 == 0 { 0.9 } else { 0.2 }).collect();
        let field = RateField::new(f.clone()).unwrap();
        let r = detect_sinks(&field, 0.25, 10, Boundary::Periodic).unwrap();
        for z in 0..21 {
            assert_eq!((r.right[z], r.left[z], r.eps_sink[z]), brute(&f, 0.25, 10, z), "z = {z}");
        }
        // 0.2 + 0.9 = 1.1 <= 1.5 but 0.9 > 0.75 alone.
        assert!(!r.right[0] && r.right[1]);
    }

    #[test]
    fn random_fields_match_brute_force_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = FieldSpec::Uniform { lo: 0.3, hi: 1.3 };
        for _ in 0..30 {
            let field = RateField::sample(&spec, 41, &mut rng).unwrap();
            let mut prev: Option<SinkReport> = None;
            for h in [0, 3, 8, 20] {
                let r = detect_sinks(&field, 0.15, h, Boundary::Periodic).unwrap();
                for z in 0..41 {
                    assert_eq!((r.right[z], r.left[z], r.eps_sink[z]), brute(field.rates(), 0.15, h, z));
                    assert!(!r.eps_sink[z] || (r.right[z] && r.left[z]));
                }
                if let Some(p) = &prev {
                    for z in 0..41 {
                        assert!(!r.eps_sink[z] || p.eps_sink[z], "flags grew with H");
                        assert!(!r.right[z] || p.right[z]);
                    }
                }
                prev = Some(r);
            }
        }
    }

    #[test]
    fn open_boundary_marks_incomplete() {
        let field = RateField::constant(5, 0.5).unwrap();
        let r = detect_sinks(&field, 0.25, 3, Boundary::Open).unwrap();
        assert!(r.complete.iter().all(|&c| !c));
        let r = detect_sinks(&field, 0.25, 2, Boundary::Open).unwrap();
        assert_eq!(r.complete, vec![false, false, true, false, false]);
        assert_eq!(r.eps_sink_count(), 5);
    }

    #[test]
    fn deterministic_sink_probabilities() {
        let point = FieldSpec::Point { value: 0.5 };
        let p = sink_probability(&point, 0.25, 20, 100, 1).unwrap();
        assert_eq!(p.right.point, 1.0);
        assert_eq!(p.eps_sink.point, 1.0);
        let high = FieldSpec::Point { value: 1.5 };
        let p = sink_probability(&high, 0.25, 20, 100, 1).unwrap();
        assert_eq!(p.right.point, 0.0);
    }

    #[test]
    fn uniform_sink_probability_positive() {
        let spec = FieldSpec::Uniform { lo: 0.4, hi: 1.2 };
        let p = sink_probability(&spec, 0.1, 200, 20_000, 3).unwrap();
        assert!(p.right.ci_low > 0.0);
        assert!(p.correlation_check, "{p:?}");
        assert!((p.right.point - p.left.point).abs() < 4.0 * p.right.std_error * 2f64.sqrt());
    }
}
