//! Single-spin T1 relaxometry simulator.
//!
//! Compares two ways of detecting a fluctuating magnetic target (by default a
//! single Gd³⁺ spin label) with a nitrogen-vacancy (NV) center in diamond:
//!
//! * **direct NV relaxometry** - the NV itself is the relaxation sensor and
//!   its T1 shortens when the target's field noise reaches it;
//! * **reporter-assisted relaxometry** - a dark spin-1/2 on the diamond
//!   surface is the relaxation sensor and the deeper NV reads out its state
//!   through their dipolar coupling.
//!
//! The crate is organised bottom-up:
//!
//! * [`spin`] - constants, dipolar geometry and closed-form relaxation rates;
//! * [`protocol`] - analytic signal models, sequence timing and a telegraph
//!   Monte Carlo oracle;
//! * [`budget`] - shot-noise measurement time, readout models, plan
//!   optimisation and the speed-enhancement figure of merit;
//! * [`atlas`] - parameter sweeps, scanning images, line-cut fits;
//! * [`scene`] / [`config`] - the geometry and spin roster every study runs
//!   on, and the JSON document it is loaded from.

pub mod atlas;
pub mod budget;
pub mod config;
pub mod constants;
pub mod error;
pub mod optimize;
pub mod protocol;
pub mod scene;
pub mod spin;
pub mod units;

pub use error::{Error, Result};
pub use scene::{Protocol, Scene, SceneParams};
pub use spin::{NoiseBath, SpinSpec, StochasticDrive, Vec3};
