pub mod analytic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod graph;
pub mod montecarlo;
pub mod numeric;
pub mod sinks1d;
