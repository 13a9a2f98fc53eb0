//! File formats, parallel drivers and the `scloop` command line, built on
//! [`scloop_core`].

pub mod cli;
pub mod format;
pub mod manifest;
pub mod parallel;
pub mod reproduce;

pub use scloop_core as core;
