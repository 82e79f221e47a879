//! Simulation of type-II spontaneous parametric down-conversion in a
//! periodically poled crystal, and of how the spectral entanglement of the
//! generated photon pairs shapes dispersive broadening of coincidence
//! measurements.
//!
//! The crate is organised bottom-up:
//!
//! * [`dispersion`]: Sellmeier data, group velocities, temporal walk-offs and
//!   quasi-phase-matching bookkeeping.
//! * [`biphoton`]: the joint spectral amplitude (JSA) on a detuning grid.
//! * [`schmidt`]: Schmidt decomposition and Schmidt number of a JSA.
//! * [`coincidence`]: local (Hong-Ou-Mandel) and nonlocal coincidence rates,
//!   both by direct quadrature and through Gaussian closed forms.
//! * [`experiments`]: wavelength sweeps, figure presets, configuration files
//!   and CSV/JSON output.
//!
//! All quantities are SI internally: wavelengths in metres, detunings in
//! rad/s, delays in seconds and group-delay dispersion in s².

pub mod biphoton;
pub mod coincidence;
pub mod dispersion;
mod error;
pub mod experiments;
pub mod schmidt;
pub mod units;

pub use biphoton::{
    assemble_jsa, pmf_angle, BandwidthConvention, DetuningGrid, DispersiveElement, GridAxis, JointSpectralAmplitude,
    PumpSpec, GAMMA,
};
pub use coincidence::{
    ClosedFormContext, CoincidenceCurve, DelayScan, DetectionMode, LocalRateProfile, NonlocalRateProfile,
};
pub use dispersion::{CrystalSpec, PolarizationAxis, SellmeierSet, WalkoffPair};
pub use error::{Error, Result};
pub use schmidt::{schmidt_decompose, schmidt_number, SchmidtSpectrum};

pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
