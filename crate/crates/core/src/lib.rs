//! Cooperative downlink transmission from a cluster of LEO satellites to
//! multi-antenna ground users.
//!
//! The crate builds a 2-D Earth-centred scenario ([`geometry`]), the rank-one
//! line-of-sight channels between every satellite and user ([`channel`]),
//! evaluates exact (Monte-Carlo) and statistical-CSI approximate rates
//! ([`rate`]), and optimises the per-satellite precoders with a weighted-MMSE
//! block coordinate descent under per-satellite or per-antenna power budgets
//! ([`solver`]). Classical precoders live in [`baselines`] and the experiment
//! runner plus configuration handling in [`harness`].

pub mod baselines;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod rate;
pub mod scenario;
pub mod solver;
pub mod streams;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use scenario::{Budget, Kappa, ScenarioConfig, SolverOptions};
