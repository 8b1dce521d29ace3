//! Geometric impedance control toolkit for rigid-body manipulators.
//!
//! The crate compares two impedance controllers on SE(3) that differ only in
//! their elastic (P-action) term:
//!
//! * **GIC-1** derives its elastic force from a Lie-group potential built on
//!   the Frobenius norm of the configuration error matrix.
//! * **GIC-2** derives its elastic force from a Lie-algebra potential built on
//!   the log map (exponential coordinates) of the configuration error.
//!
//! Modules:
//!
//! * [`liegroup`] — SO(3)/SE(3) group and algebra operations with guarded
//!   small-angle and near-pi branches.
//! * [`robot`] — serial-chain kinematics (product of exponentials), joint-space
//!   dynamics and the operational-space transform.
//! * [`gic`] — error functions, potentials, elastic forces and both control
//!   laws.
//! * [`sim`] — closed-loop RK4 simulation, trajectory generation, logging and
//!   metrics.
//! * [`config`] — the structured-text dialect shared by robot description and
//!   scenario files.

pub mod config;
pub mod gic;
pub mod liegroup;
pub mod robot;
pub mod sim;

/// 3-vector of f64.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 6-vector of f64 (translational components on top).
pub type Vec6 = nalgebra::Vector6<f64>;
/// 3x3 matrix of f64.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// 4x4 matrix of f64 (homogeneous form).
pub type Mat4 = nalgebra::Matrix4<f64>;
/// 6x6 matrix of f64.
pub type Mat6 = nalgebra::Matrix6<f64>;

pub use liegroup::{AxisAngle, Pose, Rotation, Twist, Wrench};
