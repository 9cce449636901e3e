//! Nonlinear dead-time compensation for vehicle path tracking.
//!
//! The crate provides the building blocks of a delayed path-tracking loop
//! (reference paths, kinematic and kinetic single-track plants, delay lines,
//! three steering laws) together with a Smith-predictor-like compensator
//! whose prediction is rotated into the frame of the delayed vehicle pose.
//! The [`harness`] module wires everything into deterministic scenarios.

pub mod compensator;
pub mod controllers;
pub mod delay;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod vehicle_models;

pub use error::{Error, Result};
