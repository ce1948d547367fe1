//! Gillespie-style engine: exponential holding times at the total rate, one
//! event drawn in proportion to its rate.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::RateField;
use crate::graph::Graph;

use super::graphical::Clock;
use super::rebalance::Rebalancer;
use super::{Configuration, EventKind, Mu, Site};

/// Binary indexed tree over non-negative weights.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<f64>,
    weights: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Fenwick {
        let mut f = Fenwick {
            tree: vec![0.0; weights.len() + 1],
            weights: vec![0.0; weights.len()],
        };
        for (i, &w) in weights.iter().enumerate() {
            f.set(i, w);
        }
        f
    }

    fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        self.weights[i] = w;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.weights.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose cumulative weight exceeds `u`.
    fn find(&self, mut u: f64) -> usize {
        let n = self.weights.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                u -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Set of ids with O(1) insert, remove and uniform pick.
#[derive(Debug, Clone)]
struct IdSet {
    items: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl IdSet {
    fn new(capacity: usize) -> IdSet {
        IdSet {
            items: Vec::new(),
            pos: vec![None; capacity],
        }
    }

    fn insert(&mut self, id: usize) {
        if self.pos[id].is_none() {
            self.pos[id] = Some(self.items.len());
            self.items.push(id);
        }
    }

    fn remove(&mut self, id: usize) {
        if let Some(p) = self.pos[id].take() {
            self.items.swap_remove(p);
            if p < self.items.len() {
                self.pos[self.items[p]] = Some(p);
            }
        }
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.items[rng.random_range(0..self.items.len())]
    }
}

/// Outcome of one clock ring. `kind` is `None` for a null event (an
/// exchange between agents less than two coins apart).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub dt: f64,
    pub kind: Option<EventKind>,
    pub site: Site,
}

/// Incremental rate bookkeeping for one replica.
///
/// Total rate is `#alive + sum_{alive} phi_z + mu * #{alive-alive edges}`;
/// with `Mu::Infinite` the edge term is replaced by a cascade after each
/// earn or spend.
pub struct RateDriven<'a> {
    g: &'a Graph,
    rates: &'a RateField,
    mu: Mu,
    alive: IdSet,
    earn: Fenwick,
    live_edges: IdSet,
    rebalancer: Rebalancer,
}

impl<'a> RateDriven<'a> {
    pub fn new(g: &'a Graph, rates: &'a RateField, mu: Mu, cfg: &Configuration) -> Result<RateDriven<'a>> {
        let n = g.vertex_count();
        if rates.len() != n || cfg.len() != n {
            return Err(Error::InvalidParameter(format!(
                "graph has {n} vertices, rate field {} and configuration {}",
                rates.len(),
                cfg.len()
            )));
        }
        let mut alive = IdSet::new(n);
        let weights: Vec<f64> = (0..n)
            .map(|z| {
                if cfg.is_alive(z) {
                    alive.insert(z);
                    rates.rates()[z]
                } else {
                    0.0
                }
            })
            .collect();
        let mut live_edges = IdSet::new(g.edge_count());
        for (id, &(u, v)) in g.edges().iter().enumerate() {
            if cfg.is_alive(u) && cfg.is_alive(v) {
                live_edges.insert(id);
            }
        }
        Ok(RateDriven {
            g,
            rates,
            mu,
            alive,
            earn: Fenwick::new(&weights),
            live_edges,
            rebalancer: Rebalancer::new(n),
        })
    }

    pub fn total_rate(&self) -> f64 {
        self.alive.len() as f64 + self.earn.total().max(0.0) + self.edge_rate()
    }

    fn edge_rate(&self) -> f64 {
        match self.mu {
            Mu::Finite(mu) => mu * self.live_edges.len() as f64,
            Mu::Infinite => 0.0,
        }
    }

    /// Draws the next holding time and the clock that rings. Returns `None`
    /// when the ring would fall beyond `remaining`; nothing is applied.
    pub fn propose<R: Rng + ?Sized>(
        &mut self,
        cfg: &Configuration,
        remaining: f64,
        rng: &mut R,
    ) -> Result<Option<(f64, Clock)>> {
        if self.alive.len() == 0 {
            return Err(Error::NoAliveVertices);
        }
        let spend_rate = self.alive.len() as f64;
        let earn_rate = self.earn.total().max(0.0);
        let edge_rate = self.edge_rate();
        let total = spend_rate + earn_rate + edge_rate;
        let dt = -(1.0 - rng.random::<f64>()).ln() / total;
        if dt > remaining {
            return Ok(None);
        }

        let u = rng.random::<f64>() * total;
        let clock = if u < spend_rate {
            Clock::Spend(self.alive.pick(rng))
        } else if u < spend_rate + earn_rate {
            let mut z = self.earn.find(u - spend_rate);
            // Rounding at a bucket boundary can land on a dead vertex.
            while !cfg.is_alive(z) {
                z = self.earn.find(rng.random::<f64>() * earn_rate);
            }
            Clock::Earn(z)
        } else {
            Clock::Exchange(self.live_edges.pick(rng))
        };
        Ok(Some((dt, clock)))
    }

    /// Applies a ring, keeping the rate bookkeeping and the cascade in step.
    pub fn apply(&mut self, cfg: &mut Configuration, clock: Clock) -> Option<EventKind> {
        match clock {
            Clock::Spend(z) => {
                let kind = cfg.spend(z);
                if kind == Some(EventKind::Death) {
                    self.on_death(z);
                }
                if kind.is_some() {
                    self.after_vertex_event(cfg, z);
                }
                kind
            }
            Clock::Earn(z) => {
                let kind = cfg.earn(z);
                if kind.is_some() {
                    self.after_vertex_event(cfg, z);
                }
                kind
            }
            Clock::Exchange(id) => {
                let (x, y) = self.g.edge(id);
                match self.mu {
                    Mu::Finite(_) => cfg.exchange(x, y),
                    Mu::Infinite => None,
                }
            }
        }
    }

    pub fn step_within<R: Rng + ?Sized>(
        &mut self,
        cfg: &mut Configuration,
        remaining: f64,
        rng: &mut R,
    ) -> Result<Option<Step>> {
        let Some((dt, clock)) = self.propose(cfg, remaining, rng)? else {
            return Ok(None);
        };
        let kind = self.apply(cfg, clock);
        Ok(Some(Step {
            dt,
            kind,
            site: clock.site(self.g),
        }))
    }

    fn after_vertex_event(&mut self, cfg: &mut Configuration, z: usize) {
        if self.mu == Mu::Infinite && cfg.alive_count() > 0 {
            self.rebalancer.rebalance_around(cfg, self.g, &[z]);
        }
    }

    fn on_death(&mut self, z: usize) {
        self.alive.remove(z);
        self.earn.set(z, 0.0);
        for &id in self.g.incident_edges(z) {
            self.live_edges.remove(id);
        }
    }

    pub fn rates(&self) -> &RateField {
        self.rates
    }
}

/// One transition of the rate-driven chain from `cfg`, built from scratch.
/// Prefer [`RateDriven`] when stepping repeatedly.
pub fn step_rate_driven<R: Rng + ?Sized>(
    cfg: &mut Configuration,
    rates: &RateField,
    g: &Graph,
    mu: f64,
    rng: &mut R,
) -> Result<Step> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite mu >= 0 required, got {mu}")));
    }
    let mut engine = RateDriven::new(g, rates, Mu::Finite(mu), cfg)?;
    Ok(engine
        .step_within(cfg, f64::INFINITY, rng)?
        .expect("unbounded horizon always yields a step"))
}
