//! Link-level simulator and baseline receiver for unsynchronized short-packet
//! single-carrier links.
//!
//! Pipeline: [`frame`] builds a preamble plus LDPC/QPSK payload, [`chansim`] drops it
//! into a random-access multipath window, [`detector`] finds and synchronizes it,
//! [`equalizer`] and [`ldpc`] exchange extrinsic LLRs inside [`receiver`], and
//! [`metrics`] runs the Monte-Carlo sweeps.

pub mod chansim;
pub mod cli;
pub mod config;
pub mod detector;
pub mod equalizer;
pub mod error;
pub mod frame;
pub mod ldpc;
pub mod metrics;
pub mod receiver;

pub use error::{Error, Result};
