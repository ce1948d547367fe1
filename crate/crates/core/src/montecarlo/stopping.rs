//! When a replica stops, and when an alive agent may be declared a
//! permanent survivor.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, Mu};
use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::Graph;

pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StoppingRule {
    /// Run to `t_max` (or until nobody is left).
    Horizon,
    FirstDeath,
    AllDead,
    Certified(Certification),
}

/// Survival certificates. An agent with fortune `F` and rate `phi > 1` that
/// no longer interacts is ruined later with probability `phi^-(F+1)`; under
/// perfect cooperation the total fortune plays the same role with the mean
/// rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    /// Tolerated miss probability per certificate.
    pub delta: f64,
    /// Replaces the per-agent fortune threshold derived from `delta`.
    pub threshold: Option<i64>,
    pub stop_at_first_death: bool,
}

impl Certification {
    pub fn new(delta: f64) -> Certification {
        Certification {
            delta,
            threshold: None,
            stop_at_first_death: true,
        }
    }

    pub fn continue_after_death(mut self) -> Certification {
        self.stop_at_first_death = false;
        self
    }

    pub fn with_threshold(mut self, f: i64) -> Certification {
        self.threshold = Some(f);
        self
    }
}

impl Default for Certification {
    fn default() -> Certification {
        Certification::new(DEFAULT_DELTA)
    }
}

impl StoppingRule {
    pub fn certified() -> StoppingRule {
        StoppingRule::Certified(Certification::default())
    }

    pub fn validate(&self) -> Result<()> {
        if let StoppingRule::Certified(c) = self {
            if !(c.delta > 0.0 && c.delta < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "certification delta must lie in (0,1), got {}",
                    c.delta
                )));
            }
            if let Some(f) = c.threshold {
                if f < 1 {
                    return Err(Error::InvalidParameter(format!(
                        "certification threshold must be >= 1, got {f}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn stops_at_first_death(&self) -> bool {
        match self {
            StoppingRule::FirstDeath => true,
            StoppingRule::Certified(c) => c.stop_at_first_death,
            _ => false,
        }
    }
}

/// `ceil(ln delta / ln(1/base))`, at least 1; then `base^-k <= delta`.
pub fn fortune_threshold(base: f64, delta: f64) -> i64 {
    debug_assert!(base > 1.0);
    (delta.ln() / (1.0 / base).ln()).ceil().max(1.0) as i64
}

/// Precomputed thresholds for one replica.
#[derive(Debug, Clone)]
pub struct Certifier {
    mu: Mu,
    per_agent: Vec<Option<i64>>,
    /// Total-fortune threshold, perfect cooperation with all agents alive.
    global: Option<i64>,
}

impl Certifier {
    pub fn new(g: &Graph, rates: &RateField, mu: Mu, cert: &Certification) -> Certifier {
        let per_agent = rates
            .rates()
            .iter()
            .map(|&phi| {
                (phi > 1.0).then(|| cert.threshold.unwrap_or_else(|| fortune_threshold(phi, cert.delta)))
            })
            .collect();
        let phi_bar = rates.phi_bar();
        let global = (mu == Mu::Infinite && phi_bar > 1.0).then(|| {
            g.distance_sum_max() as i64 - 1 + fortune_threshold(phi_bar, cert.delta)
        });
        Certifier { mu, per_agent, global }
    }

    pub fn agent_threshold(&self, z: usize) -> Option<i64> {
        self.per_agent[z]
    }

    pub fn global_threshold(&self) -> Option<i64> {
        self.global
    }

    /// True when every alive agent is covered by a certificate.
    pub fn certified(&self, cfg: &Configuration, g: &Graph) -> bool {
        if cfg.alive_count() == 0 {
            return false;
        }
        if let Some(thr) = self.global {
            if cfg.alive_count() == cfg.len() && cfg.total() >= thr {
                return true;
            }
        }
        (0..cfg.len()).filter(|&z| cfg.is_alive(z)).all(|z| {
            let isolated = self.mu.is_zero() || g.neighbors(z).iter().all(|&w| !cfg.is_alive(w));
            isolated && self.per_agent[z].is_some_and(|f| cfg.get(z) >= f)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        // 2^-(20+1) < 1e-6 <= 2^-20.
        assert_eq!(fortune_threshold(2.0, 1e-6), 20);
        assert!(2f64.powi(-21) <= 1e-6);
        assert_eq!(fortune_threshold(10.0, 0.5), 1);
    }

    #[test]
    fn validation() {
        assert!(StoppingRule::certified().validate().is_ok());
        assert!(StoppingRule::Certified(Certification::new(1.0)).validate().is_err());
        assert!(StoppingRule::Certified(Certification::new(0.1).with_threshold(0))
            .validate()
            .is_err());
    }

    #[test]
    fn certificates() {
        let g = Graph::complete(2).unwrap();
        let rates = RateField::new(vec![0.5, 2.0]).unwrap();
        let cert = Certification::new(1e-6);

        let c0 = Certifier::new(&g, &rates, Mu::Finite(0.0), &cert);
        assert_eq!(c0.agent_threshold(0), None);
        assert_eq!(c0.agent_threshold(1), Some(20));
        // The poor agent can never be certified while alive.
        let cfg = Configuration::from_coins(vec![100, 100]).unwrap();
        assert!(!c0.certified(&cfg, &g));
        let cfg = Configuration::from_coins(vec![-1, 20]).unwrap();
        assert!(c0.certified(&cfg, &g));
        let cfg = Configuration::from_coins(vec![-1, 19]).unwrap();
        assert!(!c0.certified(&cfg, &g));

        // Interacting neighbours block per-agent certificates.
        let c1 = Certifier::new(&g, &rates, Mu::Finite(1.0), &cert);
        let cfg = Configuration::from_coins(vec![30, 30]).unwrap();
        assert!(!c1.certified(&cfg, &g));

        // Perfect cooperation: mean rate 1.25, D = 1.
        let ci = Certifier::new(&g, &rates, Mu::Infinite, &cert);
        let k = fortune_threshold(1.25, 1e-6);
        assert_eq!(ci.global_threshold(), Some(k));
        let half = k / 2;
        let cfg = Configuration::from_coins(vec![half, k - half]).unwrap();
        assert!(ci.certified(&cfg, &g));
        let cfg = Configuration::from_coins(vec![half, k - half - 1]).unwrap();
        assert!(!ci.certified(&cfg, &g));
    }
}
