use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

use super::EventKind;

/// Coin count per vertex, `-1` marking a dead agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    coins: Vec<i64>,
    alive: usize,
}

pub const DEAD: i64 = -1;

impl Configuration {
    /// Every agent alive with `c` coins.
    pub fn uniform(n: usize, c: u64) -> Configuration {
        Configuration {
            coins: vec![c as i64; n],
            alive: n,
        }
    }

    pub fn from_coins(coins: Vec<i64>) -> Result<Configuration> {
        if let Some(&bad) = coins.iter().find(|&&c| c < DEAD) {
            return Err(Error::InvalidParameter(format!(
                "coin counts must be >= -1, found {bad}"
            )));
        }
        let alive = coins.iter().filter(|&&c| c != DEAD).count();
        Ok(Configuration { coins, alive })
    }

    pub fn coins(&self) -> &[i64] {
        &self.coins
    }

    pub fn get(&self, z: usize) -> i64 {
        self.coins[z]
    }

    pub fn len(&self) -> usize {
        self.coins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coins.is_empty()
    }

    pub fn is_alive(&self, z: usize) -> bool {
        self.coins[z] != DEAD
    }

    pub fn alive_count(&self) -> usize {
        self.alive
    }

    /// `sum_z xi(z)`, dead vertices contributing `-1`. Before the first death
    /// this is the total coin count.
    pub fn total(&self) -> i64 {
        self.coins.iter().sum()
    }

    pub fn alive_coin_sum(&self) -> i64 {
        self.coins.iter().filter(|&&c| c != DEAD).sum()
    }

    /// Spending clock at `z`. A spend at fortune zero kills the agent.
    pub fn spend(&mut self, z: usize) -> Option<EventKind> {
        match self.coins[z] {
            DEAD => None,
            0 => {
                self.coins[z] = DEAD;
                self.alive -= 1;
                Some(EventKind::Death)
            }
            _ => {
                self.coins[z] -= 1;
                Some(EventKind::Spend)
            }
        }
    }

    pub fn earn(&mut self, z: usize) -> Option<EventKind> {
        if self.coins[z] == DEAD {
            return None;
        }
        self.coins[z] += 1;
        Some(EventKind::Earn)
    }

    /// Cooperation on edge `(x, y)`: one coin from the richer to the poorer
    /// agent when both are alive and at least two coins apart.
    pub fn exchange(&mut self, x: usize, y: usize) -> Option<EventKind> {
        let (cx, cy) = (self.coins[x], self.coins[y]);
        if cx == DEAD || cy == DEAD {
            return None;
        }
        if cx >= cy + 2 {
            self.transfer(x, y);
        } else if cy >= cx + 2 {
            self.transfer(y, x);
        } else {
            return None;
        }
        Some(EventKind::Exchange)
    }

    pub(crate) fn transfer(&mut self, from: usize, to: usize) {
        debug_assert!(self.coins[from] > 0 && self.coins[to] != DEAD);
        self.coins[from] -= 1;
        self.coins[to] += 1;
    }

    /// Largest `|xi(x) - xi(y)|` over edges with both endpoints alive.
    pub fn max_adjacent_gap(&self, g: &Graph) -> i64 {
        g.edges()
            .iter()
            .filter(|&&(u, v)| self.is_alive(u) && self.is_alive(v))
            .map(|&(u, v)| (self.coins[u] - self.coins[v]).abs())
            .max()
            .unwrap_or(0)
    }
}
