//! Statistical and pathwise properties of whole trajectories.

use coopruin::dynamics::{
    run_replica_observed, Configuration, EngineKind, Event, EventKind, Mu, Observer, SimParams,
};
use coopruin::field::{FieldSpec, RateField};
use coopruin::graph::Graph;
use coopruin::montecarlo::{estimate_survival, run_replicas, Certification, StoppingRule};
use coopruin::sinks1d::{death_density, DensityConfig};

/// Counts total-fortune jumps while everyone is alive and checks
/// conservation after every event.
#[derive(Default)]
struct Ledger {
    prev_sum: Option<i64>,
    prev_alive: Option<usize>,
    ups: u64,
    downs: u64,
    exposure: f64,
    last_t: f64,
    all_alive: bool,
    broken: Vec<String>,
}

impl Observer for Ledger {
    fn before_event(&mut self, t: f64, cfg: &Configuration) {
        if self.prev_sum.is_none() {
            self.prev_sum = Some(cfg.alive_coin_sum());
            self.prev_alive = Some(cfg.alive_count());
            self.all_alive = cfg.alive_count() == cfg.len();
        }
        if self.all_alive {
            self.exposure += t - self.last_t;
        }
        self.last_t = t;
    }

    fn after_event(&mut self, e: &Event, cfg: &Configuration) {
        let sum = cfg.alive_coin_sum();
        let delta = sum - self.prev_sum.unwrap();
        let want = match e.kind {
            EventKind::Earn => 1,
            EventKind::Spend => -1,
            EventKind::Exchange | EventKind::Death => 0,
        };
        if delta != want {
            self.broken.push(format!("{:?} changed the alive sum by {delta}", e.kind));
        }
        if cfg.alive_count() > self.prev_alive.unwrap() {
            self.broken.push("alive count increased".into());
        }
        if self.all_alive {
            match e.kind {
                EventKind::Earn => self.ups += 1,
                EventKind::Spend => self.downs += 1,
                // The fatal ring is a spend-clock ring too.
                EventKind::Death => {
                    self.downs += 1;
                    self.all_alive = false;
                }
                EventKind::Exchange => {}
            }
        }
        self.prev_sum = Some(sum);
        self.prev_alive = Some(cfg.alive_count());
    }

    fn finish(&mut self, t_end: f64, cfg: &Configuration, _reason: coopruin::dynamics::TerminalReason) {
        if self.all_alive && cfg.alive_count() == cfg.len() {
            self.exposure += t_end - self.last_t;
        }
    }
}

fn jump_rates(mu: Mu, engine: EngineKind) {
    let g = Graph::path(4).unwrap();
    let phis = vec![0.6, 1.0, 1.4, 1.8];
    let rates = RateField::new(phis.clone()).unwrap();
    let params = SimParams::new(mu, 3, 20.0).with_engine(engine);
    let ledgers = run_replicas(2000, 31, |_, rng| {
        let mut l = Ledger::default();
        run_replica_observed(&g, &rates, &params, &StoppingRule::Horizon, rng, &mut l)?;
        Ok(l)
    })
    .unwrap();
    let broken: Vec<&String> = ledgers.iter().flat_map(|l| &l.broken).collect();
    assert!(broken.is_empty(), "{:?}", &broken[..broken.len().min(5)]);
    let ups: u64 = ledgers.iter().map(|l| l.ups).sum();
    let downs: u64 = ledgers.iter().map(|l| l.downs).sum();
    let exposure: f64 = ledgers.iter().map(|l| l.exposure).sum();
    assert!(ups + downs >= 100_000, "only {} jumps", ups + downs);
    // Poisson counts: rate estimate k / T has standard error sqrt(k) / T.
    let up_rate: f64 = phis.iter().sum();
    let down_rate = 4.0;
    let (u, d) = (ups as f64, downs as f64);
    assert!((u / exposure - up_rate).abs() <= 3.0 * u.sqrt() / exposure, "up {} vs {up_rate}", u / exposure);
    assert!((d / exposure - down_rate).abs() <= 3.0 * d.sqrt() / exposure, "down {} vs {down_rate}", d / exposure);
}

#[test]
fn total_fortune_jump_rates_rate_driven() {
    jump_rates(Mu::Finite(1.0), EngineKind::RateDriven);
}

#[test]
fn total_fortune_jump_rates_graphical() {
    jump_rates(Mu::Finite(2.0), EngineKind::Graphical);
}

#[test]
fn total_fortune_jump_rates_perfect_cooperation() {
    jump_rates(Mu::Infinite, EngineKind::RateDriven);
}

#[test]
fn censoring_vanishes_as_horizon_grows() {
    let g = Graph::path(3).unwrap();
    let rates = RateField::new(vec![0.5, 0.8, 1.2]).unwrap();
    let fractions: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&t| {
            let params = SimParams::new(Mu::Finite(1.0), 3, t).with_seed(5);
            let est = estimate_survival(&g, &rates, &params, &Certification::default(), 4000).unwrap();
            est.n_censored as f64 / est.n_replicas as f64
        })
        .collect();
    assert!(fractions[0] > fractions[1] && fractions[1] >= fractions[2], "{fractions:?}");
    assert_eq!(fractions[2], 0.0, "{fractions:?}");
}

#[test]
fn flagged_sinks_die() {
    let spec = FieldSpec::Uniform { lo: 0.4, hi: 1.2 };
    let mut cfg = DensityConfig::new(spec, 2001, 1, Mu::Finite(1.0), 500.0, 100, 77);
    cfg.checkpoints = vec![50.0, 100.0, 200.0, 300.0, 400.0];
    let r = death_density(&cfg).unwrap();
    assert!(r.sinks_dead.n_replicas > 1000, "too few sinks flagged: {}", r.sinks_dead.n_replicas);
    assert!(r.sinks_dead.point >= 0.95, "only {} of flagged sinks dead", r.sinks_dead.point);
    assert!(r.sinks_dead_by.windows(2).all(|w| w[0].1 <= w[1].1), "{:?}", r.sinks_dead_by);
    assert_eq!(r.sinks_dead_by.last().unwrap().1, r.sinks_dead.point);
}
