//! Continuous-time earn/spend/cooperate dynamics.
//!
//! Two engines produce the same law: [`rate_driven`] samples the next event
//! from the total rate, [`graphical`] replays pre-sampled Poisson clocks.
//! Perfect cooperation (`mu = inf`) is a deterministic cascade run after
//! every earn or spend event, see [`rebalance`].

pub mod config;
pub mod graphical;
pub mod rate_driven;
pub mod rebalance;
mod replica;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use config::Configuration;
pub use graphical::{sample_graphical_clocks, ClockSet, GraphicalReplay};
pub use rate_driven::{step_rate_driven, RateDriven, Step};
pub use rebalance::{rebalance_infinite_mu, Rebalancer};
pub use replica::{run_replica, run_replica_observed};

/// Cooperation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    Finite(f64),
    Infinite,
}

impl Mu {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Mu::Finite(m) if !(m >= 0.0 && m.is_finite()) => Err(Error::InvalidParameter(format!(
                "mu must be >= 0 (or inf), got {m}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Mu::Finite(0.0)
    }
}

impl FromStr for Mu {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mu> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "INF" | "∞" => Ok(Mu::Infinite),
            other => {
                let m: f64 = other
                    .parse()
                    .map_err(|e| Error::Parse(format!("mu `{other}`: {e}")))?;
                let mu = if m.is_infinite() && m > 0.0 {
                    Mu::Infinite
                } else {
                    Mu::Finite(m)
                };
                mu.validate()?;
                Ok(mu)
            }
        }
    }
}

impl fmt::Display for Mu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mu::Finite(m) => write!(f, "{m}"),
            Mu::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Mu {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Mu::Finite(m) => s.serialize_f64(*m),
            Mu::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Mu {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Mu, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Mu::Finite(m)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[default]
    RateDriven,
    Graphical,
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<EngineKind> {
        match s {
            "rate" | "rate_driven" | "rate-driven" => Ok(EngineKind::RateDriven),
            "graphical" | "harris" => Ok(EngineKind::Graphical),
            other => Err(Error::Parse(format!("unknown engine `{other}`"))),
        }
    }
}

pub const DEFAULT_MAX_EVENTS: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub mu: Mu,
    /// Initial coins per agent.
    pub c: u64,
    /// May be `f64::INFINITY` when a stopping rule is guaranteed to fire.
    pub t_max: f64,
    pub seed: u64,
    pub engine: EngineKind,
    /// Keep the full event log in the returned trajectory.
    pub record_events: bool,
    /// Safety cap on clock rings; a replica hitting it ends as censored
    /// with reason `Horizon`.
    pub max_events: u64,
}

impl SimParams {
    pub fn new(mu: Mu, c: u64, t_max: f64) -> SimParams {
        SimParams {
            mu,
            c,
            t_max,
            seed: 0,
            engine: EngineKind::RateDriven,
            record_events: false,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> SimParams {
        self.seed = seed;
        self
    }

    pub fn with_engine(mut self, engine: EngineKind) -> SimParams {
        self.engine = engine;
        self
    }

    pub fn with_max_events(mut self, max_events: u64) -> SimParams {
        self.max_events = max_events;
        self
    }

    pub fn recording(mut self) -> SimParams {
        self.record_events = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.mu.validate()?;
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be >= 0, got {}",
                self.t_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Earn,
    Spend,
    Exchange,
    /// A spend at fortune zero.
    Death,
}

/// Vertex for earn/spend/death, edge endpoints for exchanges. Serialises as
/// a bare integer or a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Site {
    Vertex(usize),
    Edge(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub site: Site,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    Horizon,
    AllDead,
    FirstDeath,
    CertifiedSurvival,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// State-changing events; filled only when `record_events` is set.
    pub events: Vec<Event>,
    pub final_config: Configuration,
    pub reason: TerminalReason,
    pub t_end: f64,
    pub death_times: Vec<Option<f64>>,
    /// Number of state-changing events, recorded or not.
    pub n_events: u64,
}

impl Trajectory {
    pub fn first_death(&self) -> Option<f64> {
        self.death_times
            .iter()
            .flatten()
            .copied()
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn dead_by(&self, t: f64) -> usize {
        self.death_times.iter().flatten().filter(|&&d| d <= t).count()
    }

    /// Agents certified to live forever; zero unless the run ended with
    /// [`TerminalReason::CertifiedSurvival`].
    pub fn certified_survivors(&self) -> usize {
        match self.reason {
            TerminalReason::CertifiedSurvival => self.final_config.alive_count(),
            _ => 0,
        }
    }
}

/// Hooks into a running replica. Only state-changing events are reported.
pub trait Observer {
    /// `cfg` is the state held up to (not including) time `t`, just before
    /// the event at `t` is applied.
    fn before_event(&mut self, _t: f64, _cfg: &Configuration) {}
    /// `cfg` is the state after the event and any cascade it triggered.
    fn after_event(&mut self, _event: &Event, _cfg: &Configuration) {}
    fn finish(&mut self, _t_end: f64, _cfg: &Configuration, _reason: TerminalReason) {}
}

impl Observer for () {}

/// Records the configuration at fixed time steps for plotting.
#[derive(Debug, Clone)]
pub struct Snapshots {
    dt: f64,
    taken: u64,
    pub rows: Vec<(f64, Vec<i64>)>,
}

impl Snapshots {
    pub fn every(dt: f64) -> Snapshots {
        assert!(dt > 0.0, "snapshot step must be positive");
        Snapshots {
            dt,
            taken: 0,
            rows: Vec::new(),
        }
    }

    fn take_until(&mut self, t: f64, inclusive: bool, cfg: &Configuration) {
        // Multiplying instead of accumulating keeps grid times exact.
        loop {
            let next = self.taken as f64 * self.dt;
            if !(next < t || (inclusive && next <= t)) {
                break;
            }
            self.rows.push((next, cfg.coins().to_vec()));
            self.taken += 1;
        }
    }

    /// CSV `t,z0,z1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        if let Some((_, first)) = self.rows.first() {
            for z in 0..first.len() {
                out.push_str(&format!(",z{z}"));
            }
        }
        out.push('\n');
        for (t, coins) in &self.rows {
            out.push_str(&format!("{t}"));
            for c in coins {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

impl Observer for Snapshots {
    fn before_event(&mut self, t: f64, cfg: &Configuration) {
        self.take_until(t, false, cfg);
    }

    fn finish(&mut self, t_end: f64, cfg: &Configuration, _reason: TerminalReason) {
        if t_end.is_finite() {
            self.take_until(t_end, true, cfg);
        }
    }
}

/// Writes one JSON object `{"t":..,"kind":..,"site":..}` per line.
pub fn write_events_jsonl<W: Write>(events: &[Event], mut w: W) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events_jsonl(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
