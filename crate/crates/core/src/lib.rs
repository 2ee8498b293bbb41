//! Safe state-dependent Riccati equation (SSDRE) tracking control.
//!
//! Barrier states are appended to an SDC plant and its reference generator;
//! a pointwise Riccati solve on the augmented system yields a
//! feedback-feedforward law that keeps every safety function positive while
//! tracking the reference. Conventional SDRE and CBF-QP baselines and a
//! deterministic closed-loop simulator are included for comparison.

// NaN must fail every positivity check, so `!(x > 0.0)` is used on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod model;
pub mod riccati;
pub mod scenarios;
pub mod sim;

pub use nalgebra::{DMatrix, DVector};
