//! Closed forms against quadrature on a fixed parameter grid.

use std::io::Write;

use serde::Serialize;

use crate::biphoton::{fmt_sig, DetuningGrid, JointSpectralAmplitude, PumpSpec, DEFAULT_GRID_N};
use crate::coincidence::{numeric_curve, ClosedFormContext, DetectionMode, DEFAULT_SCAN_POINTS};
use crate::dispersion::{walkoffs_at, SellmeierSet};
use crate::units::{MM, NM};
use crate::Result;

/// One comparison point. Widths in seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub mode: DetectionMode,
    pub pump_wavelength: f64,
    pub pump_fwhm: f64,
    pub beta_s: f64,
    pub beta_i: f64,
    pub numeric_fwhm: f64,
    /// Local: the dip-width closed form. Nonlocal: the re-derived form.
    pub closed_fwhm: f64,
    pub closed_rel_error: f64,
    /// Nonlocal only: the quoted width formula.
    pub printed_fwhm: Option<f64>,
    pub printed_rel_error: Option<f64>,
    pub numeric_visibility: Option<f64>,
    pub closed_visibility: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyPoint {
    pub mode: DetectionMode,
    /// m
    pub pump_wavelength: f64,
    /// m, intensity FWHM
    pub pump_fwhm: f64,
    pub beta_s: f64,
    pub beta_i: f64,
}

/// 16 local points over λ_p ∈ {650, 700, 750, 810} nm, FWHM ∈ {0.4, 4} nm,
/// β_s ∈ {0, 100e-27} s², then 10 nonlocal points at 4 nm covering
/// single-arm, opposite-sign and equal-sign dispersion.
pub fn default_points() -> Vec<VerifyPoint> {
    let mut points = Vec::new();
    for wl in [650.0, 700.0, 750.0, 810.0] {
        for fwhm in [0.4, 4.0] {
            for beta_s in [0.0, 100e-27] {
                points.push(VerifyPoint {
                    mode: DetectionMode::Local,
                    pump_wavelength: wl * NM,
                    pump_fwhm: fwhm * NM,
                    beta_s,
                    beta_i: 0.0,
                });
            }
        }
    }
    for wl in [700.0, 810.0] {
        for (beta_s, beta_i) in [
            (0.0, 0.0),
            (100e-27, 0.0),
            (0.0, 100e-27),
            (100e-27, -100e-27),
            (100e-27, 100e-27),
        ] {
            points.push(VerifyPoint {
                mode: DetectionMode::Nonlocal,
                pump_wavelength: wl * NM,
                pump_fwhm: 4.0 * NM,
                beta_s,
                beta_i,
            });
        }
    }
    points
}

pub fn verify_point(p: &VerifyPoint, grid_n: usize) -> Result<VerifyRow> {
    let w = walkoffs_at(&SellmeierSet::ktp(), 10.0 * MM, p.pump_wavelength)?;
    let sigma = PumpSpec::with_fwhm(p.pump_wavelength, p.pump_fwhm)?.sigma();
    let ctx = ClosedFormContext::new(w, sigma)?;
    let grid = DetuningGrid::auto_square(&w, sigma, grid_n)?;
    let jsa = JointSpectralAmplitude::from_model(w, sigma, grid, p.beta_s, p.beta_i)?;
    let curve = numeric_curve(&jsa, p.mode, DEFAULT_SCAN_POINTS)?;
    let (closed, printed, closed_vis) = match p.mode {
        DetectionMode::Local => (
            ctx.fwhm_local(p.beta_s, p.beta_i)?,
            None,
            Some(ctx.visibility(p.beta_s, p.beta_i)),
        ),
        DetectionMode::Nonlocal => (
            ctx.fwhm_nonlocal_rederived(p.beta_s, p.beta_i)?.fwhm,
            Some(ctx.fwhm_nonlocal_printed(p.beta_s, p.beta_i)?.fwhm),
            None,
        ),
    };
    let rel = |x: f64| (x - curve.fwhm) / curve.fwhm;
    Ok(VerifyRow {
        mode: p.mode,
        pump_wavelength: p.pump_wavelength,
        pump_fwhm: p.pump_fwhm,
        beta_s: p.beta_s,
        beta_i: p.beta_i,
        numeric_fwhm: curve.fwhm,
        closed_fwhm: closed,
        closed_rel_error: rel(closed),
        printed_fwhm: printed,
        printed_rel_error: printed.map(rel),
        numeric_visibility: curve.visibility,
        closed_visibility: closed_vis,
    })
}

/// Runs every default point on an `N = 512` grid.
pub fn run_verification() -> Result<Vec<VerifyRow>> {
    run_verification_with(&default_points(), DEFAULT_GRID_N)
}

pub fn run_verification_with(points: &[VerifyPoint], grid_n: usize) -> Result<Vec<VerifyRow>> {
    points.iter().map(|p| verify_point(p, grid_n)).collect()
}

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "pump_wavelength_m",
        "pump_fwhm_m",
        "beta_s_s2",
        "beta_i_s2",
        "numeric_fwhm_s",
        "closed_fwhm_s",
        "closed_rel_error",
        "printed_fwhm_s",
        "printed_rel_error",
    ])?;
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.mode.as_str().to_owned(),
            fmt_sig(r.pump_wavelength),
            fmt_sig(r.pump_fwhm),
            fmt_sig(r.beta_s),
            fmt_sig(r.beta_i),
            fmt_sig(r.numeric_fwhm),
            fmt_sig(r.closed_fwhm),
            fmt_sig(r.closed_rel_error),
            opt(r.printed_fwhm),
            opt(r.printed_rel_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}
