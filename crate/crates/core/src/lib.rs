//! Gradient-based interpretability for small convolutional networks.
//!
//! The crate provides, on top of a minimal trainable ConvNet ([`network`]):
//!
//! - [`classviz`] — synthesis of a class model image by gradient ascent on the
//!   L2-regularized class score.
//! - [`saliency`] — image-specific class saliency maps from a single backward
//!   pass, with an averaged multi-crop protocol.
//! - [`segment`] — weakly supervised localization: saliency-quantile trimap,
//!   GMM color models, GraphCut energy minimization via exact max-flow, and
//!   bounding-box extraction.
//! - [`deconv`] — deconvolution-style reconstruction and an equivalence
//!   report against gradient back-propagation.
//!
//! The crate is `no_std`-compatible (requires `alloc`; enable the `libm`
//! feature for float math without `std`). File formats, image I/O and the
//! command-line surface live in the companion `gradsight` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("gradsight-core requires either the `std` or the `libm` feature");

pub mod classviz;
pub mod dataset;
pub mod deconv;
pub mod error;
mod math;
pub mod network;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod saliency;
pub mod segment;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{Shape, Tensor};
