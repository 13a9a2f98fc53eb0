//! Connected spatially coupled LDPC protograph ensembles.
//!
//! The crate is `no_std` (with `alloc`) and covers the algorithmic side of the
//! toolkit:
//!
//! * [`protograph`] and [`ensembles`]: the protograph data model and builders
//!   for uncoupled blocks, single coupled chains, loops, squares and mixed loops.
//! * [`de_bec`]: exact protograph density evolution on the binary erasure
//!   channel, per-position traces and threshold bisection.
//! * [`de_awgn`]: quantized density evolution over the binary-input AWGN
//!   channel.
//! * [`schedule`]: selective node-update scheduling and its complexity metric.
//! * [`wenum`]: asymptotic ensemble weight enumerators and minimum distance
//!   growth rates, plus an exact small-lift oracle.
//! * [`lift`], [`decode`] and [`sim`]: lifting to sparse parity-check matrices,
//!   BP decoding on the BEC and AWGN channel, and a seeded Monte Carlo harness.
//!
//! File formats, the command line front end and parallel drivers live in the
//! companion `scloop` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod de_awgn;
pub mod de_bec;
pub mod decode;
pub mod ensembles;
mod error;
mod fft;
pub mod graph;
pub mod lift;
pub mod protograph;
pub mod schedule;
pub mod sim;
pub mod spec;
pub mod wenum;

pub use error::{Error, Result};
pub use protograph::{DesignRate, Position, ProtoEdge, Protograph, ProtographBuilder};
