//! Numerical laboratory for the bouncing-ball map of a ball on a
//! periodically vibrating racket: impact maps in time–velocity and
//! time–energy coordinates, generating-function machinery, periodic-orbit
//! search and classification, and twist certificates.

pub mod commands;
pub mod config;
pub mod error;
pub mod forcing;
pub mod impact;
pub mod orbits;
pub mod report;
pub mod twist;
mod trig;
pub mod variational;

pub use error::{Error, Result};
pub use forcing::ForcingProfile;
pub use impact::{EnergyState, ImpactMap, JacobianTE, MapParams, Trajectory, VelocityState};
pub use orbits::{DegeneracyReport, OrbitKey, PeriodicOrbit, Stability};
pub use variational::{ActionConfiguration, GeneratingContext};
