//! Harris graphical construction: independent Poisson clocks on vertices
//! (spend at rate 1, earn at rate `phi_z`) and edges (exchange at rate `mu`),
//! replayed in time order through the update rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::Graph;

use super::rebalance::Rebalancer;
use super::{Configuration, EventKind, Mu, Site};

/// Arrival times on `[0, horizon)` for every clock, each list sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockSet {
    pub horizon: f64,
    pub spend: Vec<Vec<f64>>,
    pub earn: Vec<Vec<f64>>,
    /// Indexed like [`Graph::edges`].
    pub exchange: Vec<Vec<f64>>,
}

/// Which clock rang. Variant order is the tie-break order for equal times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Clock {
    Spend(usize),
    Earn(usize),
    Exchange(usize),
}

impl Clock {
    pub fn site(&self, g: &Graph) -> Site {
        match *self {
            Clock::Spend(z) | Clock::Earn(z) => Site::Vertex(z),
            Clock::Exchange(e) => {
                let (x, y) = g.edge(e);
                Site::Edge(x, y)
            }
        }
    }
}

pub fn sample_poisson_times<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    if rate <= 0.0 {
        return times;
    }
    let mut t = 0.0;
    loop {
        t += -(1.0 - rng.random::<f64>()).ln() / rate;
        if t >= horizon {
            return times;
        }
        times.push(t);
    }
}

pub fn sample_graphical_clocks<R: Rng + ?Sized>(
    g: &Graph,
    rates: &RateField,
    mu: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<ClockSet> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "clock horizon must be positive and finite, got {horizon}"
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite mu >= 0 required, got {mu}")));
    }
    if rates.len() != g.vertex_count() {
        return Err(Error::InvalidRates(format!(
            "rate field has {} entries for {} vertices",
            rates.len(),
            g.vertex_count()
        )));
    }
    let n = g.vertex_count();
    let mut spend = Vec::with_capacity(n);
    let mut earn = Vec::with_capacity(n);
    for z in 0..n {
        spend.push(sample_poisson_times(1.0, horizon, rng));
        earn.push(sample_poisson_times(rates.rates()[z], horizon, rng));
    }
    let exchange = (0..g.edge_count())
        .map(|_| sample_poisson_times(mu, horizon, rng))
        .collect();
    Ok(ClockSet {
        horizon,
        spend,
        earn,
        exchange,
    })
}

impl ClockSet {
    /// Every arrival, ordered by time, ties broken spend < earn < exchange
    /// and then by id.
    pub fn merged(&self) -> Vec<(f64, Clock)> {
        let mut all = Vec::new();
        for (z, ts) in self.spend.iter().enumerate() {
            all.extend(ts.iter().map(|&t| (t, Clock::Spend(z))));
        }
        for (z, ts) in self.earn.iter().enumerate() {
            all.extend(ts.iter().map(|&t| (t, Clock::Earn(z))));
        }
        for (e, ts) in self.exchange.iter().enumerate() {
            all.extend(ts.iter().map(|&t| (t, Clock::Exchange(e))));
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }

    /// Number of arrivals of a list on `[0, t]`.
    pub fn count_until(times: &[f64], t: f64) -> usize {
        times.partition_point(|&s| s <= t)
    }
}

/// Replays merged clocks through the update rules, one event at a time.
pub struct GraphicalReplay<'a> {
    g: &'a Graph,
    mu: Mu,
    events: Vec<(f64, Clock)>,
    next: usize,
    offset: f64,
    rebalancer: Rebalancer,
}

/// One applied clock ring; `kind` is `None` for null events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub t: f64,
    pub kind: Option<EventKind>,
    pub site: Site,
}

impl<'a> GraphicalReplay<'a> {
    /// `offset` is added to every clock time. With `Mu::Infinite` the
    /// exchange clocks are ignored and a cascade follows every earn/spend.
    pub fn new(g: &'a Graph, clocks: &ClockSet, mu: Mu, offset: f64) -> GraphicalReplay<'a> {
        GraphicalReplay {
            g,
            mu,
            events: clocks.merged(),
            next: 0,
            offset,
            rebalancer: Rebalancer::new(g.vertex_count()),
        }
    }

    pub fn peek(&self) -> Option<(f64, Clock)> {
        self.events.get(self.next).map(|&(t, c)| (t + self.offset, c))
    }

    /// Applies the ring returned by [`peek`](Self::peek) and advances.
    pub fn apply_peeked(&mut self, cfg: &mut Configuration) -> Option<Ring> {
        let (t, clock) = self.peek()?;
        self.next += 1;
        let kind = match clock {
            Clock::Spend(z) => {
                let kind = cfg.spend(z);
                self.cascade(cfg, z, kind);
                kind
            }
            Clock::Earn(z) => {
                let kind = cfg.earn(z);
                self.cascade(cfg, z, kind);
                kind
            }
            Clock::Exchange(e) => {
                let (x, y) = self.g.edge(e);
                match self.mu {
                    Mu::Infinite => None,
                    Mu::Finite(_) => cfg.exchange(x, y),
                }
            }
        };
        Some(Ring {
            t,
            kind,
            site: clock.site(self.g),
        })
    }

    fn cascade(&mut self, cfg: &mut Configuration, z: usize, kind: Option<EventKind>) {
        if self.mu == Mu::Infinite && kind.is_some() && cfg.alive_count() > 0 {
            self.rebalancer.rebalance_around(cfg, self.g, &[z]);
        }
    }
}

/// Replays `clocks` from `cfg` until the clocks run out; returns every
/// state-changing ring.
pub fn replay(g: &Graph, clocks: &ClockSet, cfg: &mut Configuration, mu: Mu) -> Vec<Ring> {
    let mut r = GraphicalReplay::new(g, clocks, mu, 0.0);
    let mut out = Vec::new();
    while let Some(ring) = r.apply_peeked(cfg) {
        if ring.kind.is_some() {
            out.push(ring);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples = 100_000;
        let total: usize = (0..samples)
            .map(|_| sample_poisson_times(1.0, 1.0, &mut rng).len())
            .sum();
        let mean = total as f64 / samples as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn zero_mu_has_no_edge_arrivals() {
        let g = Graph::cycle(5).unwrap();
        let rates = RateField::constant(5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let clocks = sample_graphical_clocks(&g, &rates, 0.0, 10.0, &mut rng).unwrap();
        assert!(clocks.exchange.iter().all(|e| e.is_empty()));
        assert_eq!(clocks.exchange.len(), 5);
        assert!(clocks.spend.iter().all(|s| s.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn merged_tie_order() {
        let clocks = ClockSet {
            horizon: 1.0,
            spend: vec![vec![0.5], vec![]],
            earn: vec![vec![0.5], vec![0.25]],
            exchange: vec![vec![0.5]],
        };
        let m = clocks.merged();
        assert_eq!(
            m,
            vec![
                (0.25, Clock::Earn(1)),
                (0.5, Clock::Spend(0)),
                (0.5, Clock::Earn(0)),
                (0.5, Clock::Exchange(0)),
            ]
        );
    }

    #[test]
    fn replay_applies_rules() {
        let g = Graph::complete(2).unwrap();
        let clocks = ClockSet {
            horizon: 1.0,
            spend: vec![vec![0.1, 0.2], vec![]],
            earn: vec![vec![], vec![0.05, 0.06]],
            exchange: vec![vec![0.3]],
        };
        let mut cfg = Configuration::uniform(2, 1);
        let rings = replay(&g, &clocks, &mut cfg, Mu::Finite(1.0));
        // (1,1) -> (1,2) -> (1,3) -> (0,3) -> dead x -> exchange ignored.
        assert_eq!(cfg.coins(), &[-1, 3]);
        assert_eq!(rings.last().unwrap().kind, Some(EventKind::Death));
        assert_eq!(rings.len(), 4);

        let mut cfg = Configuration::uniform(2, 1);
        replay(&g, &clocks, &mut cfg, Mu::Infinite);
        // (1,1) -> (1,2) -> (1,3)->(2,2) -> (1,2) -> (0,2)->(1,1).
        assert_eq!(cfg.coins(), &[1, 1]);
    }

    #[test]
    fn bad_horizon() {
        let g = Graph::path(2).unwrap();
        let rates = RateField::constant(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_graphical_clocks(&g, &rates, 1.0, 0.0, &mut rng).is_err());
        assert!(sample_graphical_clocks(&g, &rates, -1.0, 1.0, &mut rng).is_err());
    }
}
