//! Single-lead ECG beat classification with a hierarchical attention network.
//!
//! The crate covers the whole pipeline: wavelet denoising and QRS detection
//! ([`signal`]), record/annotation IO, class balancing and a synthetic ECG
//! generator ([`data`]), the network itself ([`model`]) built from hand-written
//! differentiable layers ([`nn`]), training and evaluation ([`train`]), and
//! attention-weight export ([`explain`]).

pub mod data;
pub mod error;
pub mod explain;
pub mod model;
pub mod nn;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
