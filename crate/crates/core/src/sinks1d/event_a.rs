//! A clock configuration on `[0, 1]` that forces the origin of a line to die
//! before time one, whatever the cooperation rate:
//!
//! * origin: no earning and at least `(c+1)^2` spending rings;
//! * every vertex within distance `c + 1`: no ring at all;
//! * beyond, on each side, the earning rings of the first `n` vertices past
//!   distance `c + 1` total at most `n`, for every `n`.
//!
//! Evaluated on a window of `2L + 1` vertices with the origin at index `L`;
//! the last condition is checked up to the window edge.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::graphical::{replay, sample_poisson_times};
use crate::dynamics::{sample_graphical_clocks, ClockSet, Configuration, Mu};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, RateField};
use crate::graph::Graph;
use crate::montecarlo::stats::{run_replicas, wilson, Z95};
use crate::montecarlo::EstimateResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAWindow {
    /// Half-width `L`; the window has `2L + 1` vertices.
    pub radius: usize,
    pub c: u64,
}

impl EventAWindow {
    pub fn new(radius: usize, c: u64) -> Result<EventAWindow> {
        if radius < c as usize + 1 {
            return Err(Error::InvalidParameter(format!(
                "window radius {radius} cannot hold the {} quiet vertices on each side",
                c + 1
            )));
        }
        Ok(EventAWindow { radius, c })
    }

    pub fn width(&self) -> usize {
        2 * self.radius + 1
    }

    fn quiet(&self) -> usize {
        self.c as usize + 1
    }

    /// How far the outer conditions are checked on each side.
    pub fn depth(&self) -> usize {
        self.radius - self.quiet()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventA {
    /// Origin quiet on earning, busy spending.
    pub a1: bool,
    /// Neighbourhood silent.
    pub a2: bool,
    /// Right side earns slowly.
    pub a3: bool,
    /// Left side earns slowly.
    pub a4: bool,
    pub a: bool,
    /// The outer conditions were only checked this far.
    pub truncated_at: usize,
}

fn outer_ok(earn_counts: impl Iterator<Item = usize>) -> bool {
    let mut total = 0;
    for (n, k) in earn_counts.enumerate() {
        total += k;
        if total > n + 1 {
            return false;
        }
    }
    true
}

/// Evaluates the event from clock counts on `[0, 1]`.
pub fn evaluate_event_a(clocks: &ClockSet, c: u64) -> Result<EventA> {
    let width = clocks.spend.len();
    if width % 2 == 0 || clocks.earn.len() != width {
        return Err(Error::InvalidParameter(format!(
            "event window needs an odd number of vertices, got {width}"
        )));
    }
    let w = EventAWindow::new(width / 2, c)?;
    let l = w.radius;
    let spend = |i: usize| ClockSet::count_until(&clocks.spend[i], 1.0);
    let earn = |i: usize| ClockSet::count_until(&clocks.earn[i], 1.0);
    let q = w.quiet();
    let a1 = earn(l) == 0 && spend(l) as u64 >= (c + 1) * (c + 1);
    let a2 = (1..=q).all(|d| earn(l + d) == 0 && spend(l + d) == 0 && earn(l - d) == 0 && spend(l - d) == 0);
    let a3 = outer_ok((l + q + 1..width).map(earn));
    let a4 = outer_ok((0..l - q).rev().map(earn));
    Ok(EventA {
        a1,
        a2,
        a3,
        a4,
        a: a1 && a2 && a3 && a4,
        truncated_at: w.depth(),
    })
}

/// Field and clocks on `[0, 1)` drawn conditionally on the event. The event
/// is an intersection of conditions on disjoint, independent blocks (origin,
/// each quiet vertex, right side, left side), so each block is drawn by its
/// own rejection loop. Edge clocks at rate `mu` are independent of the event
/// and drawn last, so draws for different `mu` share vertex clocks.
pub fn sample_clocks_given_a<R: Rng + ?Sized>(
    spec: &FieldSpec,
    window: &EventAWindow,
    mu: f64,
    rng: &mut R,
) -> Result<(RateField, ClockSet)> {
    spec.validate()?;
    let width = window.width();
    let l = window.radius;
    let q = window.quiet();
    let mut phi = vec![0.0; width];
    let mut spend = vec![Vec::new(); width];
    let mut earn = vec![Vec::new(); width];
    let draw = |i: usize, phi: &mut [f64], spend: &mut [Vec<f64>], earn: &mut [Vec<f64>], rng: &mut R| {
        phi[i] = spec.sample(rng);
        spend[i] = sample_poisson_times(1.0, 1.0, rng);
        earn[i] = sample_poisson_times(phi[i], 1.0, rng);
    };

    let need = (window.c + 1) * (window.c + 1);
    loop {
        draw(l, &mut phi, &mut spend, &mut earn, rng);
        if earn[l].is_empty() && spend[l].len() as u64 >= need {
            break;
        }
    }
    for d in 1..=q {
        for i in [l - d, l + d] {
            loop {
                draw(i, &mut phi, &mut spend, &mut earn, rng);
                if earn[i].is_empty() && spend[i].is_empty() {
                    break;
                }
            }
        }
    }
    let right: Vec<usize> = (l + q + 1..width).collect();
    let left: Vec<usize> = (0..l - q).rev().collect();
    for side in [right, left] {
        loop {
            for &i in &side {
                draw(i, &mut phi, &mut spend, &mut earn, rng);
            }
            if outer_ok(side.iter().map(|&i| earn[i].len())) {
                break;
            }
        }
    }
    let exchange = (0..width - 1).map(|_| sample_poisson_times(mu, 1.0, rng)).collect();
    Ok((
        RateField::new(phi)?,
        ClockSet {
            horizon: 1.0,
            spend,
            earn,
            exchange,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDeath {
    pub mu: Mu,
    pub samples: u64,
    /// Conditioned draws in which the origin is dead at time one.
    pub dead_at_one: u64,
}

impl ConditionalDeath {
    pub fn all_dead(&self) -> bool {
        self.dead_at_one == self.samples
    }
}

/// Draws clocks conditioned on the event and replays them to time one at each
/// cooperation rate, counting how often the origin is dead.
pub fn conditional_death_check(
    spec: &FieldSpec,
    window: &EventAWindow,
    mus: &[Mu],
    samples: u64,
    seed: u64,
) -> Result<Vec<ConditionalDeath>> {
    let g = Graph::path(window.width())?;
    mus.iter()
        .map(|&mu| {
            mu.validate()?;
            let edge_rate = match mu {
                Mu::Finite(m) => m,
                Mu::Infinite => 0.0,
            };
            let dead = run_replicas(samples, seed, |_, rng| {
                let (_, clocks) = sample_clocks_given_a(spec, window, edge_rate, rng)?;
                debug_assert!(evaluate_event_a(&clocks, window.c)?.a);
                let mut cfg = Configuration::uniform(window.width(), window.c);
                replay(&g, &clocks, &mut cfg, mu);
                Ok(!cfg.is_alive(window.radius))
            })?;
            Ok(ConditionalDeath {
                mu,
                samples,
                dead_at_one: dead.iter().filter(|&&d| d).count() as u64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAEstimate {
    /// One proportion per condition, in order origin, quiet, right, left.
    pub factors: Vec<EstimateResult>,
    /// Product of the factors (they concern independent blocks).
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fraction of samples in which all four held.
    pub direct: EstimateResult,
    pub truncated_at: usize,
}

/// Probability of the event from unconditioned draws of field and clocks.
pub fn estimate_event_a(spec: &FieldSpec, window: &EventAWindow, samples: u64, seed: u64) -> Result<EventAEstimate> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let g = Graph::path(window.width())?;
    let results = run_replicas(samples, seed, |_, rng| {
        let field = RateField::sample(spec, window.width(), rng)?;
        let clocks = sample_graphical_clocks(&g, &field, 0.0, 1.0, rng)?;
        evaluate_event_a(&clocks, window.c)
    })?;
    let params = json!({"field": spec.to_string(), "c": window.c, "radius": window.radius});
    let names = ["origin", "quiet", "right", "left"];
    let picks: [fn(&EventA) -> bool; 4] = [|e| e.a1, |e| e.a2, |e| e.a3, |e| e.a4];
    let counts: Vec<u64> = picks
        .iter()
        .map(|f| results.iter().filter(|e| f(e)).count() as u64)
        .collect();
    let factors: Vec<EstimateResult> = names
        .iter()
        .zip(&counts)
        .map(|(name, &k)| EstimateResult::proportion(&format!("event_a_{name}"), k, samples, 0, seed, params.clone()))
        .collect();
    let direct_hits = results.iter().filter(|e| e.a).count() as u64;
    let direct = EstimateResult::proportion("event_a_direct", direct_hits, samples, 0, seed, params);

    let n = samples as f64;
    let point: f64 = factors.iter().map(|f| f.point).product();
    let (ci_low, ci_high) = if counts.iter().all(|&k| k > 0) {
        // Delta method on the log of the product.
        let var: f64 = factors.iter().map(|f| (1.0 - f.point) / (n * f.point)).sum();
        let se = var.sqrt();
        (point * (-Z95 * se).exp(), point * (Z95 * se).exp())
    } else {
        (0.0, counts.iter().map(|&k| wilson(k, samples, Z95).1).product())
    };
    Ok(EventAEstimate {
        factors,
        point,
        ci_low,
        ci_high,
        direct,
        truncated_at: window.depth(),
    })
}
