//! Detection and significance testing of transient high-frequency features
//! in noisy nonstationary signals.
//!
//! The pipeline is:
//!
//! 1. [`spectrum`]: offset-normalised DFT, windowed-RMS amplitude spectrum.
//! 2. [`features`]: the `(G, D)` feature of the spectrum and the choice of
//!    smoothing width.
//! 3. [`trend`]: l1 trend filtering for a feature-free proxy of the signal.
//! 4. [`noise`]: wavelet-based noise level estimate and VisuShrink denoising.
//! 5. [`nulltest`]: Monte Carlo cloud of null features, p-value proxy and
//!    decision.
//!
//! [`testsignal`] generates the synthetic benchmark used throughout the tests.

pub mod error;
pub mod features;
pub mod fft;
pub mod noise;
pub mod nulltest;
pub mod rng;
pub mod spectrum;
pub mod testsignal;
pub mod trend;

pub use error::{Error, Result};
pub use features::{extract, select_m, HFFeature, SmoothingSchedule};
pub use nulltest::{run_full_test, NullCloud, TestConfig, TestReport};
pub use spectrum::{AmplitudeSpectrum, Signal};

/// Library version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
