//! File formats, parallel rendering, dataset generation and the command
//! line front end around [`brirsim_core`].

pub mod cli;
pub mod dataset;
pub mod fft;
pub mod hrtf_io;
pub mod parallel;
pub mod setup;
pub mod simulate;
pub mod wave;

pub use brirsim_core as core;
