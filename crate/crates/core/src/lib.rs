//! Shoebox room acoustics engine.
//!
//! The crate renders room impulse responses for rectangular rooms by
//! combining two estimators:
//!
//! * [`ism`]: the image-source lattice, producing the direct sound and the
//!   specular early reflections,
//! * [`diffuse`]: a stochastic "diffuse rain" ray tracer that collects the
//!   scattered energy on a detection sphere around the receiver.
//!
//! Arrivals from both are turned into sampled signals by [`render`], which
//! applies per-band gains, fractional delays and (for binaural receivers)
//! the HRIR pair of each arrival's direction from an [`hrtf::HrtfSet`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and multi-threaded drivers live in the `brirsim` crate.

#![no_std]
#![forbid(unsafe_code)]
// float methods are inherent on newer toolchains; the trait import keeps older ones building
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod diffuse;
pub mod engine;
pub mod geometry;
pub mod hrtf;
pub mod ism;
pub mod layout;
pub mod render;
pub mod scene;

pub use engine::{assemble_brir, Pipeline};
pub use geometry::Vec3;
pub use render::ImpulseResponse;
pub use scene::{SimulationSpec, ValidatedSpec};
