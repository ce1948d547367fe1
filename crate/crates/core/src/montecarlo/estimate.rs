//! Monte Carlo estimators built on [`run_replica`].

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::{ExitProbs, TwoPersonSpec};
use crate::dynamics::{
    run_replica, run_replica_observed, Configuration, EngineKind, Mu, Observer, SimParams, TerminalReason,
};
use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::Graph;

use super::stats::{mean_se, run_replicas, wilson, Z95};
use super::stopping::{Certification, StoppingRule};

/// Point estimate with a 95% interval: Wilson for proportions, normal for
/// means. Censored replicas are counted, never dropped silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EstimateRecord", from = "EstimateRecord")]
pub struct EstimateResult {
    pub target: String,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_replicas: u64,
    pub n_censored: u64,
    pub seed: u64,
    /// `[censored counted as failures, censored counted as successes]`, set
    /// when censoring occurred.
    pub bracket: Option<(f64, f64)>,
    /// Standard error of `point`.
    pub std_error: f64,
    pub params: Value,
}

/// On-disk shape `{target, point, ci, n, censored, params, seed}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EstimateRecord {
    target: String,
    point: f64,
    ci: [f64; 2],
    n: u64,
    censored: u64,
    params: Value,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bracket: Option<[f64; 2]>,
    #[serde(default)]
    std_error: f64,
}

impl From<EstimateResult> for EstimateRecord {
    fn from(e: EstimateResult) -> EstimateRecord {
        EstimateRecord {
            target: e.target,
            point: e.point,
            ci: [e.ci_low, e.ci_high],
            n: e.n_replicas,
            censored: e.n_censored,
            params: e.params,
            seed: e.seed,
            bracket: e.bracket.map(|(a, b)| [a, b]),
            std_error: e.std_error,
        }
    }
}

impl From<EstimateRecord> for EstimateResult {
    fn from(r: EstimateRecord) -> EstimateResult {
        EstimateResult {
            target: r.target,
            point: r.point,
            ci_low: r.ci[0],
            ci_high: r.ci[1],
            n_replicas: r.n,
            n_censored: r.censored,
            seed: r.seed,
            bracket: r.bracket.map(|[a, b]| (a, b)),
            std_error: r.std_error,
            params: r.params,
        }
    }
}

impl EstimateResult {
    /// Proportion `k / decided` with a Wilson interval, where
    /// `decided = n - censored`.
    pub fn proportion(target: &str, k: u64, n: u64, censored: u64, seed: u64, params: Value) -> EstimateResult {
        let decided = n - censored;
        let point = if decided > 0 { k as f64 / decided as f64 } else { 0.0 };
        let (lo, hi) = wilson(k, decided, Z95);
        let bracket = (censored > 0).then(|| (k as f64 / n as f64, (k + censored) as f64 / n as f64));
        let std_error = if decided > 0 {
            (point * (1.0 - point) / decided as f64).sqrt()
        } else {
            f64::NAN
        };
        EstimateResult {
            target: target.to_string(),
            point,
            ci_low: lo.min(point),
            ci_high: hi.max(point),
            n_replicas: n,
            n_censored: censored,
            seed,
            bracket,
            std_error,
            params,
        }
    }

    /// Sample mean with a normal interval.
    pub fn mean(target: &str, values: &[f64], n: u64, seed: u64, params: Value) -> EstimateResult {
        let (point, se) = mean_se(values);
        EstimateResult {
            target: target.to_string(),
            point,
            ci_low: point - Z95 * se,
            ci_high: point + Z95 * se,
            n_replicas: n,
            n_censored: n - values.len() as u64,
            seed,
            bracket: None,
            std_error: se,
            params,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// `|point - value| <= k * std_error`.
    pub fn within_sigmas(&self, value: f64, k: f64) -> bool {
        (self.point - value).abs() <= k * self.std_error
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<EstimateResult> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("at least one replica is required".into()));
    }
    Ok(())
}

fn sim_json(params: &SimParams) -> Value {
    json!({
        "mu": params.mu,
        "c": params.c,
        "t_max": if params.t_max.is_finite() { json!(params.t_max) } else { json!("inf") },
        "engine": params.engine,
    })
}

/// Global survival probability. A replica survives when it ends certified,
/// dies at its first death, and is censored otherwise (horizon or event
/// cap). The Wilson interval is over decided replicas.
pub fn estimate_survival(
    g: &Graph,
    rates: &RateField,
    params: &SimParams,
    cert: &Certification,
    replicas: u64,
) -> Result<EstimateResult> {
    check_replicas(replicas)?;
    let cert = Certification {
        stop_at_first_death: true,
        ..*cert
    };
    let stop = StoppingRule::Certified(cert);
    let reasons = run_replicas(replicas, params.seed, |_, rng| {
        Ok(run_replica(g, rates, params, &stop, rng)?.reason)
    })?;
    let survived = reasons
        .iter()
        .filter(|&&r| r == TerminalReason::CertifiedSurvival)
        .count() as u64;
    let censored = reasons.iter().filter(|&&r| r == TerminalReason::Horizon).count() as u64;
    let mut p = sim_json(params);
    p["n"] = json!(g.vertex_count());
    p["delta"] = json!(cert.delta);
    Ok(EstimateResult::proportion(
        "survival",
        survived,
        replicas,
        censored,
        params.seed,
        p,
    ))
}

fn two_person_setup(spec: &TwoPersonSpec) -> Result<(Graph, RateField)> {
    Ok((Graph::complete(2)?, RateField::new(vec![spec.phi_x, spec.phi_y])?))
}

/// Mean number of agents certified to live forever on the two-person graph.
pub fn estimate_expected_survivors(
    spec: &TwoPersonSpec,
    mu: Mu,
    replicas: u64,
    seed: u64,
) -> Result<EstimateResult> {
    check_replicas(replicas)?;
    let (g, rates) = two_person_setup(spec)?;
    let params = SimParams::new(mu, spec.c, f64::INFINITY)
        .with_seed(seed)
        .with_max_events(50_000_000);
    let stop = StoppingRule::Certified(Certification::default().continue_after_death());
    let outcomes = run_replicas(replicas, seed, |_, rng| {
        let tr = run_replica(&g, &rates, &params, &stop, rng)?;
        Ok(match tr.reason {
            TerminalReason::Horizon => None,
            _ => Some(tr.certified_survivors() as f64),
        })
    })?;
    let values: Vec<f64> = outcomes.into_iter().flatten().collect();
    let mut p = sim_json(&params);
    p["phi_x"] = json!(spec.phi_x);
    p["phi_y"] = json!(spec.phi_y);
    Ok(EstimateResult::mean("expected_survivors", &values, replicas, seed, p))
}

/// Empirical law of the pair at the first death under perfect cooperation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitEstimate {
    /// Same order as [`ExitProbs::STATES`].
    pub counts: [u64; 4],
    pub estimates: Vec<EstimateResult>,
    pub n_replicas: u64,
    pub n_censored: u64,
}

impl ExitEstimate {
    pub fn proportions(&self) -> [f64; 4] {
        let decided = (self.n_replicas - self.n_censored).max(1) as f64;
        self.counts.map(|k| k as f64 / decided)
    }
}

pub fn estimate_exit_distribution(spec: &TwoPersonSpec, replicas: u64, seed: u64) -> Result<ExitEstimate> {
    spec.check_region()?;
    check_replicas(replicas)?;
    let (g, rates) = two_person_setup(spec)?;
    let params = SimParams::new(Mu::Infinite, spec.c, f64::INFINITY)
        .with_seed(seed)
        .with_max_events(10_000_000);
    let exits = run_replicas(replicas, seed, |_, rng| {
        let tr = run_replica(&g, &rates, &params, &StoppingRule::FirstDeath, rng)?;
        if tr.reason != TerminalReason::FirstDeath {
            return Ok(None);
        }
        let c = tr.final_config.coins();
        Ok(ExitProbs::index_of(c[0], c[1]))
    })?;
    let mut counts = [0u64; 4];
    let mut censored = 0;
    for e in exits {
        match e {
            Some(i) => counts[i] += 1,
            None => censored += 1,
        }
    }
    let estimates = ExitProbs::STATES
        .iter()
        .zip(counts)
        .map(|(&(x, y), k)| {
            let p = json!({"phi_x": spec.phi_x, "phi_y": spec.phi_y, "c": spec.c, "mu": "inf", "state": [x, y]});
            EstimateResult::proportion(&format!("exit({x},{y})"), k, replicas, censored, seed, p)
        })
        .collect();
    Ok(ExitEstimate {
        counts,
        estimates,
        n_replicas: replicas,
        n_censored: censored,
    })
}

/// Records the total fortune held just before each checkpoint time.
struct StoppedTotal {
    times: Vec<f64>,
    values: Vec<i64>,
}

impl StoppedTotal {
    fn fill_until(&mut self, t: f64, inclusive: bool, cfg: &Configuration) {
        while let Some(&s) = self.times.get(self.values.len()) {
            if s < t || (inclusive && s <= t) {
                self.values.push(cfg.total());
            } else {
                break;
            }
        }
    }
}

impl Observer for StoppedTotal {
    fn before_event(&mut self, t: f64, cfg: &Configuration) {
        self.fill_until(t, false, cfg);
    }

    fn finish(&mut self, _t_end: f64, cfg: &Configuration, _reason: TerminalReason) {
        // Stopped process: every remaining checkpoint sees the final state.
        self.fill_until(f64::INFINITY, true, cfg);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub phi_bar: f64,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `phi_bar^-(n c)`, the value at time zero.
    pub initial: f64,
    /// Every mean within three standard errors of `initial`.
    pub constant: bool,
}

/// Empirical mean of `phi_bar^-Z` at the given times, where `Z` is the total
/// fortune stopped at the first death.
pub fn martingale_check(
    g: &Graph,
    rates: &RateField,
    mu: Mu,
    c: u64,
    times: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<MartingaleCheck> {
    check_replicas(replicas)?;
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("checkpoint times must be finite and sorted".into()));
    }
    let phi = rates.phi_bar();
    let t_max = times.last().copied().unwrap_or(0.0);
    let params = SimParams::new(mu, c, t_max).with_seed(seed);
    let rows = run_replicas(replicas, seed, |_, rng| {
        let mut obs = StoppedTotal {
            times: times.to_vec(),
            values: Vec::with_capacity(times.len()),
        };
        run_replica_observed(g, rates, &params, &StoppingRule::FirstDeath, rng, &mut obs)?;
        Ok(obs.values)
    })?;
    let initial = phi.powf(-((g.vertex_count() as u64 * c) as f64));
    let mut means = Vec::new();
    let mut std_errors = Vec::new();
    for i in 0..times.len() {
        let vals: Vec<f64> = rows.iter().map(|r| phi.powf(-(r[i] as f64))).collect();
        let (m, se) = mean_se(&vals);
        means.push(m);
        std_errors.push(se);
    }
    let constant = means
        .iter()
        .zip(&std_errors)
        .all(|(m, se)| (m - initial).abs() <= 3.0 * se + 1e-12 * initial);
    Ok(MartingaleCheck {
        phi_bar: phi,
        times: times.to_vec(),
        means,
        std_errors,
        initial,
        constant,
    })
}

/// First-death times (infinite when the horizon is reached first).
pub fn first_death_times(
    g: &Graph,
    rates: &RateField,
    mu: Mu,
    c: u64,
    engine: EngineKind,
    t_max: f64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_replicas(replicas)?;
    let params = SimParams::new(mu, c, t_max).with_seed(seed).with_engine(engine);
    run_replicas(replicas, seed, |_, rng| {
        let tr = run_replica(g, rates, &params, &StoppingRule::FirstDeath, rng)?;
        Ok(tr.first_death().unwrap_or(f64::INFINITY))
    })
}
