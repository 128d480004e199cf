//! Link-level MIMO-OFDM CSI acquisition and dataset tooling.
//!
//! The crate is organised as a pipeline:
//!
//! * [`chansim`] draws simulation configurations, synthesises wide-sense
//!   stationary tap channels with a rectangular delay profile and a
//!   rectangular Doppler spectrum, and produces noisy comb-type pilot
//!   observations.
//! * [`estimators`] turns one slot of pilot observations into CSI: noise
//!   covariance, signal power, delay profile, Doppler width, robust
//!   Kronecker-MMSE channel denoising, precoder and rank selection and the
//!   spectral efficiency of the reported choice.
//! * [`dataset`] runs seeded campaigns, slices per-slot feature records into
//!   five-slot sequences, splits them, computes normalisation statistics and
//!   stores everything in checksummed `CSFD` shards.
//! * [`tokenstream`] converts sequences into padded, normalised and
//!   patchified token streams with mask plans for masked-prediction training.

pub mod chansim;
pub mod dataset;
mod error;
pub mod estimators;
pub mod linalg;
pub mod seed;
pub mod tokenstream;

pub use error::{Error, Result};
