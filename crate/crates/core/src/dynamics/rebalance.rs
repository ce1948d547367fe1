//! Perfect cooperation: after every earn or spend event, coins cascade from
//! rich to poor until no pair of alive neighbours is two or more coins apart.
//!
//! Transfer order is fixed: the richest vertex that has a neighbour at least
//! two coins poorer gives one coin to its poorest alive neighbour; ties on
//! either side go to the smallest vertex id.

use crate::graph::Graph;

use super::Configuration;

/// Scratch buffers for cascades, reused across events.
#[derive(Debug, Clone)]
pub struct Rebalancer {
    marked: Vec<bool>,
    candidates: Vec<usize>,
}

impl Rebalancer {
    pub fn new(n: usize) -> Rebalancer {
        Rebalancer {
            marked: vec![false; n],
            candidates: Vec::new(),
        }
    }

    fn mark(&mut self, v: usize) {
        if !self.marked[v] {
            self.marked[v] = true;
            self.candidates.push(v);
        }
    }

    /// Runs the cascade assuming every violation involves a vertex in
    /// `seeds` or one of their neighbours. Returns the number of transfers.
    pub fn rebalance_around(&mut self, cfg: &mut Configuration, g: &Graph, seeds: &[usize]) -> usize {
        for &s in seeds {
            self.mark(s);
            for &w in g.neighbors(s) {
                self.mark(w);
            }
        }
        self.cascade(cfg, g)
    }

    pub fn rebalance_all(&mut self, cfg: &mut Configuration, g: &Graph) -> usize {
        for v in 0..g.vertex_count() {
            self.mark(v);
        }
        self.cascade(cfg, g)
    }

    fn cascade(&mut self, cfg: &mut Configuration, g: &Graph) -> usize {
        let mut transfers = 0;
        #[cfg(debug_assertions)]
        let mut potential: i64 = cfg.coins().iter().filter(|&&c| c >= 0).map(|c| c * c).sum();

        loop {
            // Drop candidates that no longer violate; they are re-marked if a
            // later transfer touches them or a neighbour.
            let mut best: Option<(usize, usize)> = None;
            let mut i = 0;
            while i < self.candidates.len() {
                let v = self.candidates[i];
                match poorest_violating_neighbor(cfg, g, v) {
                    Some(w) => {
                        let better = match best {
                            None => true,
                            Some((b, _)) => {
                                cfg.get(v) > cfg.get(b) || (cfg.get(v) == cfg.get(b) && v < b)
                            }
                        };
                        if better {
                            best = Some((v, w));
                        }
                        i += 1;
                    }
                    None => {
                        self.marked[v] = false;
                        self.candidates.swap_remove(i);
                    }
                }
            }

            let Some((giver, receiver)) = best else {
                break;
            };
            cfg.transfer(giver, receiver);
            transfers += 1;

            #[cfg(debug_assertions)]
            {
                let now: i64 = cfg.coins().iter().filter(|&&c| c >= 0).map(|c| c * c).sum();
                debug_assert!(now < potential, "cascade potential did not decrease");
                potential = now;
            }

            for v in [giver, receiver] {
                self.mark(v);
                for &w in g.neighbors(v) {
                    self.mark(w);
                }
            }
        }

        for &v in &self.candidates {
            self.marked[v] = false;
        }
        self.candidates.clear();
        transfers
    }
}

/// Poorest alive neighbour of `v` that is at least two coins poorer, ties to
/// the smallest id.
fn poorest_violating_neighbor(cfg: &Configuration, g: &Graph, v: usize) -> Option<usize> {
    if !cfg.is_alive(v) {
        return None;
    }
    let cv = cfg.get(v);
    let mut best: Option<usize> = None;
    for &w in g.neighbors(v) {
        if !cfg.is_alive(w) || cfg.get(w) > cv - 2 {
            continue;
        }
        // Neighbours are sorted, so strict comparison keeps the smallest id.
        if best.is_none_or(|b| cfg.get(w) < cfg.get(b)) {
            best = Some(w);
        }
    }
    best
}

/// Full cascade over every vertex. Returns the number of transfers.
pub fn rebalance_infinite_mu(cfg: &mut Configuration, g: &Graph) -> usize {
    Rebalancer::new(g.vertex_count()).rebalance_all(cfg, g)
}
