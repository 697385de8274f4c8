//! Range-based cooperative localization workbench for multi-agent systems in 3D.
//!
//! Each agent carries an IMU and a ranging module (UWB-style) and estimates a
//! 15-dimensional error state `[δp, δv, φ, δb_g, δb_a]` on top of a strapdown
//! nominal state. Distance measurements to fixed anchors are fused with a
//! standard error-state EKF update; distances to other agents carry the other
//! agents' estimation errors and are fused with covariance intersection, whose
//! weight can be chosen by trace, determinant, or a weighted-trace criterion
//! built from the INS error propagation rule.
//!
//! Crate layout:
//! - [`attitude`]: quaternion / rotation-matrix algebra and the small-angle
//!   attitude error model.
//! - [`ins`]: strapdown mechanization, discrete error-state propagation, and
//!   the weighting-matrix builder for weighted covariance intersection.
//! - [`fusion`]: covariance intersection in full, partial-observation, and
//!   KF-style forms, cost criteria, and the scalar weight optimizer.
//! - [`ranging`]: range geometry, observation Jacobians, and stacked
//!   measurement batches with inflated noise covariance.
//! - [`agent`]: the per-agent distributed filter and its broadcast wire format.
//! - [`central`]: the centralized joint EKF baseline and the no-cooperation
//!   baseline.
//! - [`sim`]: deterministic truth-world generation, IMU synthesis, connectivity
//!   and event schedules.
//! - [`metrics`]: RMSE / STD / NEES aggregation and correlation-gap analysis.
//! - [`config`] and [`experiment`]: scenario configuration and experiment
//!   orchestration used by the `coopnav` binary.

pub mod agent;
pub mod attitude;
pub mod central;
pub mod config;
mod error;
pub mod experiment;
pub mod fusion;
pub mod ins;
pub mod metrics;
pub mod ranging;
pub mod sim;

pub use error::{Error, Result};

/// Dimension of the per-agent error state `[δp, δv, φ, δb_g, δb_a]`.
pub const STATE_DIM: usize = 15;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Quat = nalgebra::UnitQuaternion<f64>;
pub type Vec15 = nalgebra::SVector<f64, 15>;
/// 15×15 error-state covariance (see [`ins`] for the block ordering).
pub type Cov15 = nalgebra::SMatrix<f64, 15, 15>;
