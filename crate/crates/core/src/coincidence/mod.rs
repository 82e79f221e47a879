//! Local (Hong-Ou-Mandel) and nonlocal coincidence rates.
//!
//! Quadrature over the sampled amplitude is the reference; the Gaussian
//! closed forms are cross-checked against it. Delays are measured from the
//! centre of the coincidence feature, which the crystal's birefringent group
//! delay shifts away from zero.

mod closed;
mod curve;
mod numeric;

pub use closed::{ClosedFormContext, NonlocalForm, NonlocalWidth};
pub use curve::{fwhm_from_curve, CoincidenceCurve, CurveSummary, DelayScan, DetectionMode, DEFAULT_SCAN_POINTS};
pub use numeric::{
    hom_rate_numeric, nonlocal_rate_literal, nonlocal_rate_numeric, LocalRateProfile, NonlocalRateProfile,
};

use crate::biphoton::JointSpectralAmplitude;
use crate::{Error, Result};

pub fn hom_rate_closed(ctx: &ClosedFormContext, tau: f64, beta_s: f64, beta_i: f64) -> Result<f64> {
    ctx.hom_rate(tau, beta_s, beta_i)
}

pub fn fwhm_local_closed(ctx: &ClosedFormContext, beta_s: f64, beta_i: f64) -> Result<f64> {
    ctx.fwhm_local(beta_s, beta_i)
}

pub fn fwhm_local_cw_limit(ctx: &ClosedFormContext) -> f64 {
    ctx.fwhm_local_cw_limit()
}

pub fn visibility_closed(ctx: &ClosedFormContext, beta_s: f64, beta_i: f64) -> f64 {
    ctx.visibility(beta_s, beta_i)
}

/// The quoted nonlocal width; see [`ClosedFormContext::fwhm_nonlocal_rederived`]
/// for the form that keeps the cross term.
pub fn fwhm_nonlocal_closed(ctx: &ClosedFormContext, beta_s: f64, beta_i: f64) -> Result<NonlocalWidth> {
    ctx.fwhm_nonlocal_printed(beta_s, beta_i)
}

/// Closed-form context for a model amplitude.
pub fn context_for(jsa: &JointSpectralAmplitude) -> Result<ClosedFormContext> {
    match (jsa.walkoffs, jsa.sigma_p) {
        (Some(w), Some(sigma)) => ClosedFormContext::new(w, sigma),
        _ => Err(Error::Contract("amplitude was not built from the crystal model".into())),
    }
}

/// Numeric curve for a model amplitude, with the delay scan sized from the
/// closed-form width estimate.
pub fn numeric_curve(jsa: &JointSpectralAmplitude, mode: DetectionMode, points: usize) -> Result<CoincidenceCurve> {
    let ctx = context_for(jsa)?;
    let estimate = match mode {
        DetectionMode::Local => ctx.fwhm_local(jsa.beta_s, jsa.beta_i)?,
        DetectionMode::Nonlocal => ctx.fwhm_nonlocal_rederived(jsa.beta_s, jsa.beta_i)?.fwhm,
    };
    let scan = DelayScan::for_width(estimate, points)?;
    match mode {
        DetectionMode::Local => LocalRateProfile::new(jsa)?.scan(&scan),
        DetectionMode::Nonlocal => NonlocalRateProfile::new(jsa)?.scan(&scan),
    }
}

/// Closed-form local curve on `scan`.
pub fn closed_local_curve(
    ctx: &ClosedFormContext,
    beta_s: f64,
    beta_i: f64,
    scan: &DelayScan,
) -> Result<CoincidenceCurve> {
    let taus = scan.taus();
    let rates = taus
        .iter()
        .map(|&t| ctx.hom_rate(t, beta_s, beta_i))
        .collect::<Result<Vec<_>>>()?;
    CoincidenceCurve::new(DetectionMode::Local, taus, rates)
}
