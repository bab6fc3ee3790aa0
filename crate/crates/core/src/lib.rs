//! Tissue-harmonic pulse-inversion beamforming toolkit.
//!
//! The crate covers the full simulation-to-measurement chain for second-harmonic
//! ultrasound imaging experiments:
//!
//! * [`model`] — shared domain records: array geometry, transmit pulses, RF channel
//!   frames, beamformer parameter sets, and the beamformed image grid.
//! * [`numerics`] — the dense kernels the adaptive beamformers need: Hermitian
//!   eigendecomposition (cyclic Jacobi), Hermitian positive-definite solves
//!   (Cholesky), and analytic-signal envelope extraction.
//! * [`sim`] — phantom construction (wire targets, speckle with anechoic cysts) and
//!   pulse-inversion RF synthesis with focused transmit, attenuation, and a
//!   phenomenological second-harmonic echo.
//! * [`harmonic`] — pulse-inversion combination of opposite-polarity frames and
//!   Gaussian band selection around the second harmonic.
//! * [`beamform`] — delay alignment, aperture selection, covariance estimation with
//!   spatial smoothing and temporal averaging, diagonal loading, minimum-variance
//!   and eigenspace-projected weights, and whole-image formation.
//! * [`metrics`] — lateral FWHM, contrast ratio, contrast-to-noise ratio, and
//!   cyst-radius estimation.
//!
//! All numeric code is generic over the real scalar via [`scalar::RealScalar`]
//! (`f32` or `f64`); the matrix kernels additionally accept complex elements via
//! [`scalar::Field`]. The aliases below fix the `f64` instantiations the
//! command-line pipeline uses.

pub mod beamform;
pub mod error;
pub mod harmonic;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};

/// `f64` scan geometry, the pipeline default.
pub type Geometry = model::ScanGeometry<f64>;
/// `f64` transmit pulse.
pub type Pulse = model::TransmitPulse<f64>;
/// `f64` RF channel frame.
pub type Frame = model::RfChannelFrame<f64>;
/// `f64` beamformer parameter set.
pub type Params = model::BeamformerParams<f64>;
/// `f64` beamformed image.
pub type Image = model::BeamformedImage<f64>;
/// `f64` phantom.
pub type Scene = sim::Phantom<f64>;
