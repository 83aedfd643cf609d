//! Coin-betting meta algorithms for changing environments.
//!
//! [`sleeping_cb::SleepingCb`] is a parameter-free experts algorithm that
//! tolerates experts being asleep. [`cbce::Cbce`] runs a black-box online
//! learner on a schedule of geometric intervals and combines the live runs
//! with sleeping coin betting, giving strongly adaptive regret.

pub mod baselines;
pub mod blackbox;
pub mod cbce;
pub mod error;
pub mod intervals;
pub mod pool;
pub mod potentials;
pub mod regret;
pub mod scenarios;
pub mod sleeping_cb;

pub use blackbox::{BlackBox, BlackBoxFactory, LinearLoss, LossFunction};
pub use cbce::{Cbce, CbceConfig, PriorKind};
pub use error::{Error, Result};
pub use intervals::{Interval, Schedule};
pub use pool::OnlineAlgorithm;
pub use potentials::PotentialKind;
pub use regret::RegretLedger;
pub use sleeping_cb::SleepingCb;
