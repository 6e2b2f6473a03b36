//! Closed-form age of information (AoI) and throughput analytics for a
//! cognitive shared-access network: one primary source with a Bernoulli
//! arrival stream and an infinite FCFS buffer, `N` saturated secondary
//! pairs, and SINR-threshold multipacket reception under Rayleigh fading.
//!
//! The crate is organised in four layers:
//!
//! * [`phy`]: received power factors and SINR success probabilities.
//! * [`markov`]: primary service rate, queue stationary distribution,
//!   system-time law, average AoI and secondary throughput.
//! * [`sim`]: a slot-level Monte Carlo simulator used as an independent
//!   oracle for every closed form.
//! * [`opt`]: grid-plus-refinement solvers for the two constrained
//!   problems over the access probabilities, and factorial sweeps.

pub mod error;
pub mod markov;
pub mod opt;
pub mod phy;
pub mod sim;

pub use error::{Error, Result};
pub use markov::{AccessConfig, AgeResult, AnalyticReport, QueueStats, ThroughputReport};
pub use opt::{Axis, Constraint, Evaluation, GridSpec, Problem, Solution, SweepRow, SweepSpec};
pub use phy::{ChannelParams, LinkGeometry, TopologySpec};
pub use sim::{SimConfig, SimReport};
