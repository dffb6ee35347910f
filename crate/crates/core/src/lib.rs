//! Analytical model, optimizer and simulator for an energy-harvesting
//! secondary user sharing a channel with a queued primary user that
//! retransmits on failure.
//!
//! The secondary user listens to the primary ACK/NACK feedback (decoded with
//! probability `q`) and accesses the channel with different probabilities and
//! powers depending on whether it sensed, what it sensed, and whether it heard
//! a NACK. The crate provides:
//!
//! * fading-channel success probabilities ([`channel`]);
//! * the primary queue's steady state and mean delay ([`queueing`]);
//! * battery availability and energy drain ([`energy`]);
//! * lower and upper bounds on secondary throughput ([`throughput`]);
//! * a penalty-based multi-start optimizer over the access policy ([`optimizer`]);
//! * a slot-level Monte Carlo simulator for cross-checks ([`simulator`]).

pub mod channel;
pub mod energy;
pub mod error;
pub mod nelder_mead;
pub mod optimizer;
pub mod params;
pub mod queueing;
pub mod simulator;
pub mod throughput;

pub use channel::{LinkVariances, RadioConstants, TxDuration};
pub use energy::BoundMode;
pub use error::{ModelError, Result};
pub use optimizer::{evaluate, maximize, Evaluation, OptimOptions, OptimResult};
pub use params::{Policy, ScenarioParams};
pub use queueing::SteadyState;
pub use simulator::{simulate, ForceAvailability, SimConfig, SimResult};
pub use throughput::{throughput_bound, PowerPairing, ThroughputReport};
