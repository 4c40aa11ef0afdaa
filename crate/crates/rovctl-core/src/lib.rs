//! Depth-tracking control of a tethered underwater vehicle, simulated end to
//! end: a combined-error tracking law per degree of freedom, an online
//! neural-network disturbance estimator and a reduced 4-DOF plant model,
//! driven by a deterministic fixed-step engine.

pub mod ann;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod ode;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
