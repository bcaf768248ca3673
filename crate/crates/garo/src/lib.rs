//! Geometric algebra for robotics.
//!
//! A conformal-geometric-algebra G(4,1) toolkit for serial manipulators:
//! sparse multivector kernel, motor (rigid-transform) algebra with exp/log
//! maps, OPNS geometric primitives, kinematics and extended dynamics of
//! revolute chains, Gauss-Newton inverse kinematics on the motor manifold,
//! and an iLQR layer with uniform geometric reaching costs.

pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod ga;
pub mod ik;
pub mod kinematics;
pub mod model;
pub mod motor;
pub mod primitives;

pub use error::{Error, Result};
