//! Geometry-invariant spatial filter banks for uniform circular microphone
//! arrays.
//!
//! The crate designs least-squares beamforming filters whose realized
//! response approximates a chosen ideal beampattern independently of the
//! array's microphone count and radius, applies a bank of such filters to
//! multichannel STFT spectra, and compresses the outputs into a fixed-shape
//! feature tensor. A small scene simulator and a beampattern analyzer are
//! included so the invariance claims can be checked numerically end to end.

pub mod analysis;
pub mod beamdesign;
pub mod config;
pub mod dump;
mod error;
pub mod geometry;
pub mod scenesim;
pub mod spatialbank;
pub mod stft;
pub mod wav;

pub use error::{Error, Result};
