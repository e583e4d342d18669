//! Two-user downlink NOMA compared against TDMA.
//!
//! - [`regions`]: rate pairs and region boundaries at a fixed channel pair.
//! - [`events`]: which of the four NOMA-vs-TDMA events a realization falls in.
//! - [`order_stats`]: the paired order statistics of Rayleigh-faded users.
//! - [`analytic`]: event probabilities by closed form and by 2-D quadrature.
//! - [`montecarlo`]: seeded, shard-invariant simulation.
//! - [`cli`]: the `noma` command-line front end.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod events;
pub mod montecarlo;
pub mod order_stats;
pub mod quadrature;
pub mod regions;

pub use analytic::{EventProbabilities, Method};
pub use error::{Error, Result};
pub use events::{classify_full, classify_reduced, epsilon2_threshold, EventId};
pub use montecarlo::{AverageRates, McConfig};
pub use order_stats::PairingConfig;
pub use regions::{ChannelPair, PowerSplit, RatePair, TimeSplit};
