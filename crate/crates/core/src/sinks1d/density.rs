//! Fraction of a large ring that dies, next to the density of sinks of the
//! same fields.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{run_replica, Configuration, Mu, SimParams};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, RateField};
use crate::graph::Graph;
use crate::montecarlo::stats::{replica_rng, run_replicas};
use crate::montecarlo::{EstimateResult, StoppingRule};

use super::{detect_sinks, Boundary, SinkReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Fresh field per replica.
    #[default]
    Annealed,
    /// One field shared by every replica; only the clocks change.
    Quenched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub spec: FieldSpec,
    pub ring: usize,
    pub c: u64,
    pub mu: Mu,
    pub t_max: f64,
    pub replicas: u64,
    pub seed: u64,
    /// Defaults to `(1 - E(phi)) / 2`.
    pub eps: Option<f64>,
    pub horizon: usize,
    /// Extra times at which the dead fraction of sinks is reported.
    pub checkpoints: Vec<f64>,
    pub mode: FieldMode,
}

impl DensityConfig {
    pub fn new(spec: FieldSpec, ring: usize, c: u64, mu: Mu, t_max: f64, replicas: u64, seed: u64) -> DensityConfig {
        DensityConfig {
            spec,
            ring,
            c,
            mu,
            t_max,
            replicas,
            seed,
            eps: None,
            horizon: 200.min(ring.saturating_sub(1) / 2),
            checkpoints: Vec::new(),
            mode: FieldMode::Annealed,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| self.spec.default_epsilon())
    }

    /// The field of replica `k`. Its stream does not depend on `c`, `mu` or
    /// `t_max`, so sink flags agree across those parameters.
    pub fn field(&self, k: u64) -> Result<RateField> {
        let stream = match self.mode {
            FieldMode::Annealed => 2 * k,
            FieldMode::Quenched => 0,
        };
        RateField::sample(&self.spec, self.ring, &mut replica_rng(self.seed, stream))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// Fraction of the ring dead by `t_max`.
    pub death: EstimateResult,
    /// Fraction of the ring flagged as eps-sinks.
    pub sink: EstimateResult,
    /// Flagged sinks dead by `t_max`, pooled over replicas.
    pub sinks_dead: EstimateResult,
    /// `(t, fraction of sinks dead by t)` for each checkpoint and `t_max`.
    pub sinks_dead_by: Vec<(f64, f64)>,
    pub eps: f64,
    pub horizon: usize,
    /// Sink flags of every replica's field, for cross-parameter comparison.
    #[serde(skip)]
    pub sink_flags: Vec<Vec<bool>>,
}

impl DensityReport {
    /// `death >= sink - 3 sigma` with the two standard errors combined.
    pub fn death_dominates_sinks(&self) -> bool {
        let se = (self.death.std_error.powi(2) + self.sink.std_error.powi(2)).sqrt();
        self.death.point >= self.sink.point - 3.0 * se
    }
}

struct ReplicaOutcome {
    dead_fraction: f64,
    sink_fraction: f64,
    sinks: Vec<bool>,
    sink_deaths: Vec<Option<f64>>,
}

pub fn death_density(cfg: &DensityConfig) -> Result<DensityReport> {
    cfg.spec.validate()?;
    if cfg.replicas == 0 {
        return Err(Error::InvalidParameter("at least one replica is required".into()));
    }
    if cfg.ring < 3 {
        return Err(Error::InvalidParameter(format!("ring needs at least 3 vertices, got {}", cfg.ring)));
    }
    if !(cfg.t_max.is_finite() && cfg.t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be finite, got {}", cfg.t_max)));
    }
    let eps = cfg.eps();
    let g = Graph::cycle(cfg.ring)?;
    let params = SimParams::new(cfg.mu, cfg.c, cfg.t_max);
    let outcomes = run_replicas(cfg.replicas, cfg.seed, |k, _| {
        let field = cfg.field(k)?;
        let report = detect_sinks(&field, eps, cfg.horizon, Boundary::Periodic)?;
        let mut rng = replica_rng(cfg.seed, 2 * k + 1);
        let tr = run_replica(&g, &field, &params, &StoppingRule::AllDead, &mut rng)?;
        let dead = tr.death_times.iter().flatten().count();
        let sink_deaths = report
            .eps_sink
            .iter()
            .zip(&tr.death_times)
            .filter(|(s, _)| **s)
            .map(|(_, d)| *d)
            .collect();
        Ok(ReplicaOutcome {
            dead_fraction: dead as f64 / cfg.ring as f64,
            sink_fraction: report.density(),
            sinks: report.eps_sink,
            sink_deaths,
        })
    })?;

    let p = json!({
        "field": cfg.spec.to_string(),
        "ring": cfg.ring,
        "c": cfg.c,
        "mu": cfg.mu,
        "t_max": cfg.t_max,
        "eps": eps,
        "horizon": cfg.horizon,
        "mode": cfg.mode,
    });
    let deaths: Vec<f64> = outcomes.iter().map(|o| o.dead_fraction).collect();
    let sinks: Vec<f64> = outcomes.iter().map(|o| o.sink_fraction).collect();
    let death = EstimateResult::mean("death_density", &deaths, cfg.replicas, cfg.seed, p.clone());
    let sink = EstimateResult::mean("sink_density", &sinks, cfg.replicas, cfg.seed, p.clone());

    let all_sink_deaths: Vec<Option<f64>> = outcomes.iter().flat_map(|o| o.sink_deaths.iter().copied()).collect();
    let total = all_sink_deaths.len() as u64;
    let dead_by = |t: f64| all_sink_deaths.iter().filter(|d| d.is_some_and(|d| d <= t)).count() as u64;
    let sinks_dead = EstimateResult::proportion("sinks_dead", dead_by(cfg.t_max), total, 0, cfg.seed, p);
    let mut times: Vec<f64> = cfg.checkpoints.iter().copied().filter(|&t| t < cfg.t_max).collect();
    times.push(cfg.t_max);
    let sinks_dead_by = times
        .into_iter()
        .map(|t| (t, if total > 0 { dead_by(t) as f64 / total as f64 } else { 0.0 }))
        .collect();
    Ok(DensityReport {
        death,
        sink,
        sinks_dead,
        sinks_dead_by,
        eps,
        horizon: cfg.horizon,
        sink_flags: outcomes.into_iter().map(|o| o.sinks).collect(),
    })
}

/// Per-vertex CSV `index,phi,right_sink,left_sink,eps_sink,coins` for
/// plotting a fortune profile.
pub fn profile_csv(field: &RateField, sinks: &SinkReport, cfg: &Configuration) -> String {
    let mut out = String::from("index,phi,right_sink,left_sink,eps_sink,coins\n");
    for z in 0..field.len() {
        out.push_str(&format!(
            "{z},{},{},{},{},{}\n",
            field.rates()[z],
            sinks.right[z] as u8,
            sinks.left[z] as u8,
            sinks.eps_sink[z] as u8,
            cfg.get(z)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sink_flags_do_not_depend_on_c() {
        let spec = FieldSpec::Uniform { lo: 0.4, hi: 1.2 };
        let mut a = DensityConfig::new(spec, 201, 1, Mu::Finite(1.0), 5.0, 4, 9);
        a.horizon = 50;
        let b = DensityConfig { c: 5, ..a.clone() };
        let ra = death_density(&a).unwrap();
        let rb = death_density(&b).unwrap();
        assert_eq!(ra.sink_flags, rb.sink_flags);
        assert_eq!(ra.sink.point, rb.sink.point);
        assert!(ra.death.point >= rb.death.point, "more coins should not kill more by t=5");
    }

    #[test]
    fn sub_threshold_constant_field_is_all_sinks() {
        let spec = FieldSpec::Point { value: 0.5 };
        let mut cfg = DensityConfig::new(spec, 51, 1, Mu::Finite(1.0), 50.0, 3, 1);
        cfg.eps = Some(0.25);
        cfg.horizon = 10;
        cfg.checkpoints = vec![5.0, 20.0];
        let r = death_density(&cfg).unwrap();
        assert_eq!(r.sink.point, 1.0);
        assert!(r.sinks_dead_by.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(r.sinks_dead_by.len(), 3);
    }

    #[test]
    fn quenched_field_is_shared() {
        let spec = FieldSpec::Uniform { lo: 0.4, hi: 1.2 };
        let mut cfg = DensityConfig::new(spec, 31, 1, Mu::Finite(0.0), 1.0, 3, 4);
        cfg.mode = FieldMode::Quenched;
        cfg.horizon = 10;
        assert_eq!(cfg.field(0).unwrap(), cfg.field(2).unwrap());
        let r = death_density(&cfg).unwrap();
        assert!(r.sink_flags.windows(2).all(|w| w[0] == w[1]));
    }
}
