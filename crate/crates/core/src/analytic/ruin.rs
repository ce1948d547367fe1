//! The total fortune before the first death is a walk stepping up at rate
//! `n * phi_bar` and down at rate `n`; everything here is a hitting
//! probability of that walk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::GraphMetrics;
use crate::numeric::{clamp_probability, kahan_sum, ln_one_minus_pow_neg, one_minus_pow_neg};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinSpec {
    pub phi_bar: f64,
    /// Number of agents; only used to build `start = n * c`.
    pub n: u64,
    pub start: i64,
    pub lower: i64,
    pub upper: Option<i64>,
}

impl RuinSpec {
    pub fn new(phi_bar: f64, start: i64, lower: i64, upper: Option<i64>) -> RuinSpec {
        RuinSpec {
            phi_bar,
            n: 1,
            start,
            lower,
            upper,
        }
    }

    /// `n` agents with `c` coins each.
    pub fn agents(phi_bar: f64, n: u64, c: u64, lower: i64, upper: Option<i64>) -> RuinSpec {
        RuinSpec {
            phi_bar,
            n,
            start: (n * c) as i64,
            lower,
            upper,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.phi_bar > 0.0 && self.phi_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mean rate must be positive, got {}",
                self.phi_bar
            )));
        }
        if self.start < self.lower {
            return Err(Error::InvalidParameter(format!(
                "start {} below lower barrier {}",
                self.start, self.lower
            )));
        }
        if let Some(upper) = self.upper {
            if self.start > upper {
                return Err(Error::InvalidParameter(format!(
                    "start {} above upper barrier {upper}",
                    self.start
                )));
            }
        }
        Ok(())
    }

    fn barriers(&self) -> Result<(i64, i64)> {
        self.validate()?;
        let upper = self
            .upper
            .ok_or_else(|| Error::InvalidParameter("two-sided ruin needs an upper barrier".into()))?;
        if upper == self.lower {
            return Err(Error::InvalidParameter("barriers coincide".into()));
        }
        Ok((self.start - self.lower, upper - self.lower))
    }
}

/// Probability of reaching the upper barrier before the lower one:
/// `(1 - phi^-(start-M)) / (1 - phi^-(N-M))`. Rejects `phi_bar = 1`, where
/// [`ruin_two_sided_numeric`] still applies.
pub fn ruin_two_sided(spec: &RuinSpec) -> Result<f64> {
    let (a, b) = spec.barriers()?;
    let phi = spec.phi_bar;
    if phi == 1.0 {
        return Err(Error::InvalidParameter(
            "closed form undefined at mean rate 1; use the numeric solver".into(),
        ));
    }
    let (a, b) = (a as f64, b as f64);
    let p = if phi > 1.0 {
        one_minus_pow_neg(phi, a) / one_minus_pow_neg(phi, b)
    } else {
        // Multiply through by phi^b to keep every power below one.
        let l = phi.ln();
        ((b - a) * l).exp() * (a * l).exp_m1() / (b * l).exp_m1()
    };
    Ok(clamp_probability(p, 1e-12))
}

/// Same probability from the first-step equations
/// `(phi + 1) h(i) = phi h(i+1) + h(i-1)`, `h(M) = 0`, `h(N) = 1`, solved
/// with the tridiagonal (Thomas) sweep. Valid for every `phi_bar > 0`.
pub fn ruin_two_sided_numeric(spec: &RuinSpec) -> Result<f64> {
    let (a, b) = spec.barriers()?;
    if a == 0 || a == b {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    let phi = spec.phi_bar;
    let m = (b - 1) as usize;
    // Unknowns h(1..=b-1); row i: -h(i-1) + (phi+1) h(i) - phi h(i+1) = rhs.
    let diag = phi + 1.0;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    for i in 0..m {
        let rhs = if i == m - 1 { phi } else { 0.0 };
        let (sub, prev_c, prev_d) = if i == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (-1.0, c_prime[i - 1], d_prime[i - 1])
        };
        let denom = diag - sub * prev_c;
        if denom == 0.0 {
            return Err(Error::Singular);
        }
        c_prime[i] = -phi / denom;
        d_prime[i] = (rhs - sub * prev_d) / denom;
    }
    let mut h = vec![0.0; m];
    h[m - 1] = d_prime[m - 1];
    for i in (0..m - 1).rev() {
        h[i] = d_prime[i] - c_prime[i] * h[i + 1];
    }
    Ok(clamp_probability(h[(a - 1) as usize], 1e-9))
}

/// Probability of never reaching the lower barrier:
/// `max(0, 1 - phi^-(start-M))`.
pub fn never_hit(spec: &RuinSpec) -> Result<f64> {
    spec.validate()?;
    let k = spec.start - spec.lower;
    if spec.phi_bar <= 1.0 || k == 0 {
        return Ok(0.0);
    }
    Ok(one_minus_pow_neg(spec.phi_bar, k as f64))
}

/// Lower bound on global survival under perfect cooperation:
/// `max(0, 1 - phi_bar^-(n c - D + 1))`.
pub fn survival_bound_infinite_mu(metrics: &GraphMetrics, c: u64) -> f64 {
    let k = metrics.n as i64 * c as i64 - metrics.dee as i64 + 1;
    if metrics.phi_bar <= 1.0 || k <= 0 {
        return 0.0;
    }
    one_minus_pow_neg(metrics.phi_bar, k as f64)
}

/// Global survival without cooperation: agents are independent, so
/// `prod_z max(0, 1 - phi_z^-(c+1))`.
pub fn survival_no_cooperation(rates: &RateField, c: u64) -> f64 {
    if rates.rates().iter().any(|&p| p <= 1.0) {
        return 0.0;
    }
    let k = c as f64 + 1.0;
    kahan_sum(rates.rates().iter().map(|&p| ln_one_minus_pow_neg(p, k))).exp()
}

/// `ln(1 - p)` for the cooperation-free survival probability `p`. Stays
/// accurate after `1 - p` underflows.
pub fn ln_failure_no_cooperation(rates: &RateField, c: u64) -> f64 {
    if rates.rates().iter().any(|&p| p <= 1.0) {
        return 0.0;
    }
    let k = c as f64 + 1.0;
    let logs: Vec<f64> = rates.rates().iter().map(|&p| -k * p.ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top < -30.0 {
        // 1 - prod(1 - x_z) = sum x_z (1 + O(max x_z)).
        top + kahan_sum(logs.iter().map(|&l| (l - top).exp())).ln()
    } else {
        let s = kahan_sum(rates.rates().iter().map(|&p| ln_one_minus_pow_neg(p, k)));
        (-s.exp_m1()).ln()
    }
}

/// `ln(1 - bound)` for [`survival_bound_infinite_mu`].
pub fn ln_failure_bound_infinite_mu(metrics: &GraphMetrics, c: u64) -> f64 {
    let k = metrics.n as i64 * c as i64 - metrics.dee as i64 + 1;
    if metrics.phi_bar <= 1.0 || k <= 0 {
        return 0.0;
    }
    -(k as f64) * metrics.phi_bar.ln()
}

/// Smallest `c0 <= c_max` such that survival without cooperation is at most
/// the perfect-cooperation bound for every `c` in `[c0, c_max]`. `None`
/// when the comparison still fails at `c_max`.
pub fn find_c0(rates: &RateField, dee: u64, c_max: u64) -> Option<u64> {
    let metrics = GraphMetrics {
        dee,
        phi_bar: rates.phi_bar(),
        n: rates.len(),
    };
    // p0 <= bound  <=>  ln(1 - p0) >= ln(1 - bound).
    let holds = |c: u64| {
        let lhs = ln_failure_no_cooperation(rates, c);
        let rhs = ln_failure_bound_infinite_mu(&metrics, c);
        lhs >= rhs - 1e-12 * rhs.abs().max(1.0)
    };
    let mut c0 = None;
    for c in (0..=c_max).rev() {
        if holds(c) {
            c0 = Some(c);
        } else {
            break;
        }
    }
    c0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ruin_examples() {
        let s = RuinSpec::new(2.0, 2, 0, Some(4));
        assert!((ruin_two_sided(&s).unwrap() - 0.8).abs() < 1e-15);
        assert!((ruin_two_sided_numeric(&s).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(ruin_two_sided(&RuinSpec::new(2.0, 4, 0, Some(4))).unwrap(), 1.0);
        assert_eq!(ruin_two_sided(&RuinSpec::new(2.0, 0, 0, Some(4))).unwrap(), 0.0);
        assert!(ruin_two_sided(&RuinSpec::new(1.0, 2, 0, Some(4))).is_err());
        assert!(ruin_two_sided(&RuinSpec::new(2.0, 5, 0, Some(4))).is_err());
        assert!(ruin_two_sided(&RuinSpec::new(2.0, 2, 0, None)).is_err());
        // Symmetric walk: linear in the start.
        let sym = RuinSpec::new(1.0, 3, 0, Some(10));
        assert!((ruin_two_sided_numeric(&sym).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn subcritical_large_gap() {
        let s = RuinSpec::new(0.5, 1500, 0, Some(2000));
        let p = ruin_two_sided(&s).unwrap();
        // phi^(b-a) * (1 - phi^a)/(1 - phi^b) ~ 2^-500.
        assert!(p > 0.0 && (p.ln() - (-500.0 * 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn never_hit_examples() {
        assert!((never_hit(&RuinSpec::new(2.0, 3, -1, None)).unwrap() - 0.9375).abs() < 1e-15);
        assert_eq!(never_hit(&RuinSpec::new(1.0, 3, -1, None)).unwrap(), 0.0);
        assert_eq!(never_hit(&RuinSpec::new(0.5, 3, -1, None)).unwrap(), 0.0);
        // Limit of the two-sided probability.
        let far = ruin_two_sided(&RuinSpec::new(1.3, 3, -1, Some(499))).unwrap();
        assert!((far - never_hit(&RuinSpec::new(1.3, 3, -1, None)).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn bounds() {
        let m = GraphMetrics {
            dee: 4,
            phi_bar: 2.0,
            n: 4,
        };
        assert!((survival_bound_infinite_mu(&m, 3) - (1.0 - 2f64.powi(-9))).abs() < 1e-15);
        let single = GraphMetrics {
            dee: 0,
            phi_bar: 2.0,
            n: 1,
        };
        assert!((survival_bound_infinite_mu(&single, 2) - 0.875).abs() < 1e-15);
        let sub = GraphMetrics { phi_bar: 0.9, ..m };
        assert_eq!(survival_bound_infinite_mu(&sub, 100), 0.0);

        let r = RateField::new(vec![1.5, 2.5]).unwrap();
        let p0 = survival_no_cooperation(&r, 5);
        let direct = (1.0 - 1.5f64.powi(-6)) * (1.0 - 2.5f64.powi(-6));
        assert!((p0 - direct).abs() < 1e-14);
        assert!((p0 - 0.908473).abs() < 1e-6);
        assert_eq!(survival_no_cooperation(&RateField::new(vec![0.5, 1.25]).unwrap(), 5), 0.0);
        assert!((survival_no_cooperation(&RateField::constant(1, 2.0).unwrap(), 2) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn failure_logs_agree_with_direct() {
        let r = RateField::new(vec![1.5, 2.5, 1.1]).unwrap();
        for c in [0, 3, 20, 60] {
            let direct = (1.0 - survival_no_cooperation(&r, c)).ln();
            assert!((ln_failure_no_cooperation(&r, c) - direct).abs() < 1e-9, "c = {c}");
        }
        // Far beyond double underflow.
        let l = ln_failure_no_cooperation(&r, 100_000);
        assert!((l - (-100_001.0 * 1.1f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn c0_exists_for_supercritical_pair() {
        let r = RateField::new(vec![1.5, 2.5]).unwrap();
        let c0 = find_c0(&r, 1, 10_000).unwrap();
        let m = GraphMetrics {
            dee: 1,
            phi_bar: 2.0,
            n: 2,
        };
        for c in c0..c0 + 50 {
            assert!(survival_no_cooperation(&r, c) <= survival_bound_infinite_mu(&m, c) + 1e-15);
        }
        if c0 > 0 {
            assert!(
                survival_no_cooperation(&r, c0 - 1) > survival_bound_infinite_mu(&m, c0 - 1),
                "c0 not minimal"
            );
        }
    }
}
