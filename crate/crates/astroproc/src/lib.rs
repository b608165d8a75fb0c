//! Image-processing toolkit for astronomical imagery.
//!
//! The crate covers the analysis chain used on galaxy images: regional
//! extrema and h-maxima, shape-index profiles, gradients, Gabor/DoG filter
//! banks with k-means dictionary learning, non-local means denoising, Wiener
//! deconvolution with self-tuned regularization, Chan-Vese / random-walker /
//! watershed segmentation, and azimuthally averaged power spectra.
//!
//! Everything operates on the double-precision [`Image`] buffer. All
//! operations are pure functions; where they parallelize internally the
//! summation order per output value is fixed, so results are bitwise
//! reproducible regardless of thread count.

pub mod denoise;
pub mod differential;
pub mod error;
pub mod fft;
pub mod filterbank;
pub mod image;
pub mod morphology;
pub mod restore;
pub mod segment;
pub mod spectrum;
pub mod stats;

pub use error::{Error, Result};
pub use image::{convolve2d, separable_convolve, BoundaryMode, ComplexField, Image, Kernel};
