//! Conversions at the I/O boundary. Everything inside the crate is SI.

use crate::SPEED_OF_LIGHT;

pub const NM: f64 = 1e-9;
pub const MM: f64 = 1e-3;
pub const PS: f64 = 1e-12;

/// Angular frequency (rad/s) of a vacuum wavelength (m).
pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength
}

/// Converts a wavelength interval (m) around `wavelength` into an angular
/// frequency interval (rad/s), to first order.
pub fn wavelength_interval_to_angular(wavelength: f64, interval: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * interval / (wavelength * wavelength)
}

/// `2 sqrt(2 ln 2)`: ratio between the FWHM and the standard deviation of a Gaussian.
pub fn fwhm_per_sigma() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}
