//! Performance analysis of partial server pooling between two service
//! providers that replicate jobs across eligible servers.
//!
//! Two replication policies are covered:
//!
//! * **cancel-on-complete** (`coc`): replicas are served in parallel and the
//!   job finishes when the first replica completes. Closed-form mean response
//!   times are available through a balanced-fairness equivalence ([`coc`]).
//! * **cancel-on-start** (`cos`): only one replica is ever served; the rest
//!   are cancelled when the first replica begins service. Exact waiting
//!   probabilities come from a product-form stationary distribution
//!   ([`cos`]).
//!
//! On top of the per-configuration metrics, [`pareto`] computes Pareto
//! frontiers over sharing configurations and the Kalai-Smorodinsky bargaining
//! solution, and [`sim`] provides a formula-independent discrete-event
//! simulation of both physical systems. [`erlang`] holds the standalone
//! M/M/N benchmark formulas used as baselines throughout.

pub mod coc;
pub mod cos;
pub mod erlang;
mod error;
pub mod pareto;
pub mod sim;
mod types;

pub use error::{Error, Result};
pub use types::{MetricPair, Provenance, Provider, SharingConfig};
