//! Next-best-trajectory planning toolkit.
//!
//! Builds an online local information distribution by raycasting over a
//! probabilistic voxel map from sampled perspectives around a point of
//! interest, and optimizes receding-horizon manipulator trajectories whose
//! cost rewards information gain and camera orientation toward that point.
//!
//! The crate is organized around six subsystems:
//!
//! - [`voxelmap`] — sparse three-state occupancy mapping with log-odds updates
//! - [`ig`] — perspective sampling, frustum endpoint grids, and the
//!   sequential/parallel gain raycasting engine
//! - [`infodist`] — buffered information distributions, inverse-distance
//!   gain interpolation, and the camera orientation factor
//! - [`kinematics`] — forward kinematics and obstacle clearance for serial
//!   manipulators
//! - [`planner`] — the moving-horizon trajectory optimizer
//! - [`sim`] — synthetic scenes, depth camera simulation, and the closed-loop
//!   scenario runner with its evaluation metrics
//!
//! All core math is generic over the scalar type via [`Real`]; the aliases
//! below fix `f64` for the shipped CLI and scenario tooling.

pub mod config;
pub mod error;
pub mod geom;
pub mod ig;
pub mod infodist;
pub mod io;
pub mod kinematics;
pub mod planner;
pub mod scalar;
pub mod sim;
pub mod traversal;
pub mod voxelmap;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the main domain types.
pub type VoxelMapF64 = voxelmap::VoxelMap<f64>;
pub type CameraModelF64 = ig::CameraModel<f64>;
pub type IgConfigF64 = ig::IgConfig<f64>;
pub type PerspectiveGainF64 = ig::PerspectiveGain<f64>;
pub type DistributionBufferF64 = infodist::DistributionBuffer<f64>;
pub type KinematicChainF64 = kinematics::KinematicChain<f64>;
pub type HorizonConfigF64 = planner::HorizonConfig<f64>;
pub type HorizonPlanF64 = planner::HorizonPlan<f64>;
pub type SceneF64 = sim::Scene<f64>;
pub type RunMetricsF64 = sim::RunMetrics<f64>;



