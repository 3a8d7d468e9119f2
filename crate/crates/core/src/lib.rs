//! Discrete-event Monte Carlo simulation and analytic queueing tools for
//! sizing an airport security checkpoint.
//!
//! The crate is split by concern:
//!
//! * [`sampling`] holds the seeded random streams and the stochastic kernels
//!   (Poisson arrivals, acceptance-rejection service times, lane draws).
//! * [`analytics`] is closed-form and numeric queueing math: utilization,
//!   lane-split stability, the birth-death stationary law and Erlang C.
//! * [`engine`] is the event-driven checkpoint simulator.
//! * [`optimizer`] sweeps gate counts over replications and picks a
//!   recommended staffing level from the cost/time products.

pub mod analytics;
pub mod engine;
mod error;
pub mod optimizer;
pub mod sampling;

pub use error::{Error, Result};

/// One passenger flow per second at 2928 passengers per hour.
pub const ORD_ARRIVAL_RATE: f64 = 0.81333;
/// Crest flow, double the yearly average.
pub const ORD_CREST_ARRIVAL_RATE: f64 = 1.62667;
/// Mean total check time per passenger at a regular gate, seconds.
pub const ORD_MEAN_SERVICE: f64 = 39.02;
/// Variance of the total check time, seconds squared.
pub const ORD_SERVICE_VARIANCE: f64 = 191.68;
/// An 18-hour operating day, seconds.
pub const ORD_HORIZON: f64 = 64_800.0;
/// Waits above this many seconds count towards the two-hour tail.
pub const TWO_HOURS: f64 = 7_200.0;
