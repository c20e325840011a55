//! Simulation of polarization-encoded linear-optical circuits with
//! non-number-resolving detectors.
//!
//! The crate covers sparse multi-mode Fock states ([`fock`]), the five
//! linear-optical elements ([`elements`]), click detection with feed-forward
//! ([`detection`]), the gadgets that turn Bell pairs into a heralded
//! controlled-phase gate ([`gadgets`]), an independent brute-force oracle
//! ([`oracle`]) and the experiment runner behind the CLI ([`experiment`]).

pub mod detection;
pub mod elements;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod gadgets;
pub mod oracle;

pub use error::{Error, Result};
