//! Dataset IO, batch evaluation and the `landrec` command line on top of
//! [`landrec_core`].

pub mod dataset;
pub mod harness;
pub mod samples;
pub mod synth;

pub use landrec_core as core;
