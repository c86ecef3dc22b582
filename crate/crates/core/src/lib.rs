//! Performance analysis of a slotted transmitter that stretches each packet
//! transmission over one or two slots.
//!
//! Packets arrive with probability `lambda` per slot and wait in a FIFO
//! queue. Each transmission attempt occupies one slot with probability `q1`
//! (success `p1`) or two slots with probability `q2 = 1 - q1` (success
//! `p2`); a failed packet is retried with a fresh, independent choice.
//!
//! * [`model`]: validated parameters and the finite-blocklength mapping from
//!   channel uses, packet size and SNR to `(p1, p2)`.
//! * [`analytic`]: Geo/Geo/1 closed forms for service probability, queue
//!   length, delays, stability regions and the optimal `q1`.
//! * [`qbd`]: the exact level-phase Markov chain, solved by the
//!   matrix-geometric method and, independently, by truncation.
//! * [`sim`]: a slot-accurate Monte Carlo simulator.
//! * [`study`]: sweeps, comparisons and optimization reports with CSV
//!   output, as used by the `flextti` binary.
//! * [`scenario`]: JSON scenario files.

pub mod analytic;
pub mod model;
pub mod qbd;
pub mod scenario;
pub mod sim;
pub mod study;

pub use analytic::{GeoMetrics, MuVariant, StabilityRegion};
pub use model::{ChannelSpec, ModelParams, ParamError};
pub use qbd::{QbdBlocks, StationaryDistribution};
pub use scenario::Scenario;
pub use sim::{SimConfig, SimReport};
