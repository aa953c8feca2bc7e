//! Movable-antenna near-field beamforming.
//!
//! Antenna positions on a 1D track are treated as optimization variables next
//! to the transmit weights. The crate covers closed-form constructions for
//! beam nulling and grating-lobe multi-beam forming, grid-based sequential
//! searches for the general cases, worst-case analysis of position errors and
//! the benchmark layouts used for comparison.

pub mod baselines;
pub mod beamforming;
pub mod construct;
pub mod error;
pub mod geometry;
mod linalg;
pub mod multibeam_opt;
pub mod nulling_opt;
pub mod robustness;
pub mod scenario;
mod sdp;
mod search;

pub use error::{Error, Result};
pub use geometry::{Apv, ArrayLimits, BeamWeights, DistanceModel, PolarTarget};
pub use num_complex::Complex64;
pub use scenario::{Scenario, ScenarioKind};
