//! Multi-camera human sensing core: geometry, the cylinder body tree, keypoint
//! and keypart pipelines, registration, a deterministic scene simulator, and
//! the active-camera scheduler.
//!
//! The crate is `no_std` with `alloc`; all scalar math goes through `libm`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub(crate) mod math;

pub mod body;
pub mod camera;
pub mod geometry;
pub mod image;
pub mod keypart;
pub mod keypoint;
pub mod pipeline;
pub mod registration;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod trial;
