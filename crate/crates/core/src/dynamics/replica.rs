use rand::Rng;

use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::Graph;
use crate::montecarlo::stopping::{Certifier, StoppingRule};

use super::graphical::{sample_graphical_clocks, Clock, GraphicalReplay};
use super::rate_driven::RateDriven;
use super::{
    Configuration, EngineKind, Event, EventKind, Mu, Observer, SimParams, TerminalReason, Trajectory,
};

/// Expected clock rings per freshly sampled block of the graphical engine.
const RINGS_PER_BLOCK: f64 = 4096.0;

/// Simulates one replica from `c` coins everywhere.
pub fn run_replica<R: Rng + ?Sized>(
    g: &Graph,
    rates: &RateField,
    params: &SimParams,
    stop: &StoppingRule,
    rng: &mut R,
) -> Result<Trajectory> {
    run_replica_observed(g, rates, params, stop, rng, &mut ())
}

pub fn run_replica_observed<R: Rng + ?Sized, O: Observer + ?Sized>(
    g: &Graph,
    rates: &RateField,
    params: &SimParams,
    stop: &StoppingRule,
    rng: &mut R,
    observer: &mut O,
) -> Result<Trajectory> {
    params.validate()?;
    stop.validate()?;
    let n = g.vertex_count();
    if rates.len() != n {
        return Err(Error::InvalidRates(format!(
            "rate field has {} entries for {n} vertices",
            rates.len()
        )));
    }
    let mut cfg = Configuration::uniform(n, params.c);
    let certifier = match stop {
        StoppingRule::Certified(c) => Some(Certifier::new(g, rates, params.mu, c)),
        _ => None,
    };
    let mut source = match params.engine {
        EngineKind::RateDriven => Source::Rate(RateDriven::new(g, rates, params.mu, &cfg)?),
        EngineKind::Graphical => Source::Clocks(Blocks::new(g, rates, params.mu)),
    };

    let mut events = Vec::new();
    let mut death_times = vec![None; n];
    let mut n_events = 0u64;
    let mut rings = 0u64;
    let mut t = 0.0;
    let reason = loop {
        if cfg.alive_count() == 0 {
            break TerminalReason::AllDead;
        }
        if certifier.as_ref().is_some_and(|c| c.certified(&cfg, g)) {
            break TerminalReason::CertifiedSurvival;
        }
        if rings >= params.max_events {
            break TerminalReason::Horizon;
        }
        let Some((t_next, clock)) = source.propose(&cfg, t, params.t_max, rng)? else {
            t = params.t_max;
            break TerminalReason::Horizon;
        };
        rings += 1;
        observer.before_event(t_next, &cfg);
        t = t_next;
        let Some(kind) = source.apply(&mut cfg, clock) else {
            continue;
        };
        n_events += 1;
        let event = Event {
            t,
            kind,
            site: clock.site(g),
        };
        if let (EventKind::Death, Clock::Spend(z)) = (kind, clock) {
            death_times[z] = Some(t);
        }
        if params.record_events {
            events.push(event);
        }
        observer.after_event(&event, &cfg);
        if kind == EventKind::Death && stop.stops_at_first_death() {
            break TerminalReason::FirstDeath;
        }
    };
    observer.finish(t, &cfg, reason);
    Ok(Trajectory {
        events,
        final_config: cfg,
        reason,
        t_end: t,
        death_times,
        n_events,
    })
}

enum Source<'a> {
    Rate(RateDriven<'a>),
    Clocks(Blocks<'a>),
}

impl Source<'_> {
    fn propose<R: Rng + ?Sized>(
        &mut self,
        cfg: &Configuration,
        t: f64,
        t_max: f64,
        rng: &mut R,
    ) -> Result<Option<(f64, Clock)>> {
        match self {
            Source::Rate(engine) => Ok(engine.propose(cfg, t_max - t, rng)?.map(|(dt, c)| (t + dt, c))),
            Source::Clocks(blocks) => blocks.propose(t_max, rng),
        }
    }

    fn apply(&mut self, cfg: &mut Configuration, clock: Clock) -> Option<EventKind> {
        match self {
            Source::Rate(engine) => engine.apply(cfg, clock),
            Source::Clocks(blocks) => blocks
                .replay
                .as_mut()
                .and_then(|r| r.apply_peeked(cfg))
                .and_then(|ring| ring.kind),
        }
    }
}

/// Graphical clocks sampled block by block over consecutive time windows,
/// so an unbounded horizon needs no up-front sampling.
struct Blocks<'a> {
    g: &'a Graph,
    rates: &'a RateField,
    mu: Mu,
    block: f64,
    /// Start of the next block to sample.
    start: f64,
    replay: Option<GraphicalReplay<'a>>,
}

impl<'a> Blocks<'a> {
    fn new(g: &'a Graph, rates: &'a RateField, mu: Mu) -> Blocks<'a> {
        let edge_rate = match mu {
            Mu::Finite(m) => m * g.edge_count() as f64,
            Mu::Infinite => 0.0,
        };
        let total = g.vertex_count() as f64 + rates.rates().iter().sum::<f64>() + edge_rate;
        Blocks {
            g,
            rates,
            mu,
            block: (RINGS_PER_BLOCK / total).max(1e-3),
            start: 0.0,
            replay: None,
        }
    }

    fn propose<R: Rng + ?Sized>(&mut self, t_max: f64, rng: &mut R) -> Result<Option<(f64, Clock)>> {
        loop {
            if let Some(next) = self.replay.as_ref().and_then(|r| r.peek()) {
                return Ok(Some(next));
            }
            if self.start >= t_max {
                return Ok(None);
            }
            let len = self.block.min(t_max - self.start);
            let edge_mu = match self.mu {
                Mu::Finite(m) => m,
                Mu::Infinite => 0.0,
            };
            let clocks = sample_graphical_clocks(self.g, self.rates, edge_mu, len, rng)?;
            self.replay = Some(GraphicalReplay::new(self.g, &clocks, self.mu, self.start));
            self.start += len;
        }
    }
}
