//! Pump-wavelength and pump-bandwidth sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biphoton::{fmt_sig, pmf_angle, Arm, BandwidthConvention, DetuningGrid, JointSpectralAmplitude, PumpSpec};
use crate::coincidence::{numeric_curve, ClosedFormContext, DetectionMode, DEFAULT_SCAN_POINTS};
use crate::dispersion::{CrystalSpec, SellmeierSet, WalkoffPair};
use crate::schmidt::{gaussian_model_schmidt_number, schmidt_coefficients, schmidt_number_of};
use crate::units::{MM, NM};
use crate::{Error, Result};

/// Reference group-delay dispersion for broadening differences, s²
/// (about 20 m of fused-silica fibre near 1.2 µm).
pub const BETA_REF: f64 = 100e-27;

/// Grid samples per axis used for sweep points.
pub const SWEEP_GRID_N: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PumpWavelength,
    PumpFwhm,
}

/// How coincidence widths are obtained at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMethod {
    /// Gaussian closed forms; the nonlocal width uses the re-derived form.
    #[default]
    Closed,
    /// Quadrature over the sampled amplitude.
    Numeric,
}

/// How the Schmidt number is obtained at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchmidtMethod {
    /// Singular values of the sampled amplitude.
    #[default]
    Numeric,
    /// Closed form for the Gaussian model.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// m
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Crystal length, m.
    pub length: f64,
    #[serde(skip)]
    pub sellmeier: SellmeierSet,
    /// Pump wavelength (m) held fixed in a bandwidth sweep.
    pub pump_wavelength: f64,
    /// Pump bandwidth (m) held fixed in a wavelength sweep.
    pub bandwidth: f64,
    pub convention: BandwidthConvention,
    /// Dispersion placed in `arm` for the broadened width, s².
    pub beta_ref: f64,
    pub arm: Arm,
    pub mode: DetectionMode,
    pub width_method: WidthMethod,
    pub schmidt_method: SchmidtMethod,
    pub grid_n: usize,
    pub scan_points: usize,
}

impl SweepSpec {
    /// 590–810 nm in 1 nm steps, 10 mm KTP, dispersion in the signal arm.
    pub fn wavelength_default(bandwidth: f64, convention: BandwidthConvention, mode: DetectionMode) -> Self {
        SweepSpec {
            variable: SweepVariable::PumpWavelength,
            start: 590.0 * NM,
            stop: 810.0 * NM,
            step: 1.0 * NM,
            length: 10.0 * MM,
            sellmeier: SellmeierSet::ktp(),
            pump_wavelength: 810.0 * NM,
            bandwidth,
            convention,
            beta_ref: BETA_REF,
            arm: Arm::Signal,
            mode,
            width_method: WidthMethod::Closed,
            schmidt_method: SchmidtMethod::Numeric,
            grid_n: SWEEP_GRID_N,
            scan_points: DEFAULT_SCAN_POINTS,
        }
    }

    pub fn with_range(mut self, start: f64, stop: f64, step: f64) -> Self {
        self.start = start;
        self.stop = stop;
        self.step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::validation(
                "sweep.step",
                format!("must be > 0, got {}", self.step),
            ));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start && self.start > 0.0) {
            return Err(Error::validation(
                "sweep.range",
                format!("need 0 < start <= stop, got [{}, {}]", self.start, self.stop),
            ));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::validation(
                "crystal.length",
                format!("must be > 0, got {}", self.length),
            ));
        }
        if self.grid_n < 16 {
            return Err(Error::validation(
                "grid.n",
                format!("need at least 16, got {}", self.grid_n),
            ));
        }
        for x in self.points() {
            let (wl, _) = self.pump_at(x);
            for (axis, w) in [
                (crate::PolarizationAxis::TE, wl),
                (crate::PolarizationAxis::TE, 2.0 * wl),
                (crate::PolarizationAxis::TM, 2.0 * wl),
            ] {
                self.sellmeier.refractive_index(axis, w)?;
            }
        }
        PumpSpec::new(self.pump_at(self.start).0, self.pump_at(self.start).1, self.convention)?;
        Ok(())
    }

    /// Swept values in ascending order.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|j| self.start + j as f64 * self.step).collect()
    }

    /// (pump wavelength, bandwidth) at swept value `x`.
    fn pump_at(&self, x: f64) -> (f64, f64) {
        match self.variable {
            SweepVariable::PumpWavelength => (x, self.bandwidth),
            SweepVariable::PumpFwhm => (self.pump_wavelength, x),
        }
    }

    fn betas(&self, beta: f64) -> (f64, f64) {
        match self.arm {
            Arm::Signal => (beta, 0.0),
            Arm::Idler => (0.0, beta),
        }
    }
}

/// One sweep point. Failed points carry NaN values and an error message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// m
    pub pump_wavelength: f64,
    /// m
    pub bandwidth: f64,
    /// rad/s
    pub sigma_p: f64,
    /// s
    pub tau_s: f64,
    pub tau_i: f64,
    pub schmidt_number: f64,
    /// Width with `β_ref` in the configured arm, s.
    pub fwhm_dispersed: f64,
    /// Width without external dispersion, s.
    pub fwhm_reference: f64,
    pub delta_fwhm: f64,
    /// rad
    pub pmf_angle: f64,
    /// HOM dip depth with `β_ref`; NaN for nonlocal detection.
    pub visibility: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(pump_wavelength: f64, bandwidth: f64, err: Error) -> Self {
        SweepRow {
            pump_wavelength,
            bandwidth,
            sigma_p: f64::NAN,
            tau_s: f64::NAN,
            tau_i: f64::NAN,
            schmidt_number: f64::NAN,
            fwhm_dispersed: f64::NAN,
            fwhm_reference: f64::NAN,
            delta_fwhm: f64::NAN,
            pmf_angle: f64::NAN,
            visibility: f64::NAN,
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Evaluates one point of `spec`; exposed for spot checks against direct calls.
pub fn sweep_point(spec: &SweepSpec, x: f64) -> SweepRow {
    let (wl, bw) = spec.pump_at(x);
    evaluate_point(spec, wl, bw).unwrap_or_else(|e| SweepRow::failed(wl, bw, e))
}

fn evaluate_point(spec: &SweepSpec, wavelength: f64, bandwidth: f64) -> Result<SweepRow> {
    let crystal = CrystalSpec::new(spec.length, spec.sellmeier.clone(), wavelength)?;
    let pump = PumpSpec::new(wavelength, bandwidth, spec.convention)?;
    let sigma = pump.sigma();
    let walkoffs = crystal.walkoffs()?;
    let schmidt_number = point_schmidt_number(spec, &walkoffs, sigma)?;
    let (bs, bi) = spec.betas(spec.beta_ref);
    let (fwhm_dispersed, fwhm_reference) = match spec.width_method {
        WidthMethod::Closed => {
            let ctx = ClosedFormContext::new(walkoffs, sigma)?;
            match spec.mode {
                DetectionMode::Local => (ctx.fwhm_local(bs, bi)?, ctx.fwhm_local(0.0, 0.0)?),
                DetectionMode::Nonlocal => (
                    ctx.fwhm_nonlocal_rederived(bs, bi)?.fwhm,
                    ctx.fwhm_nonlocal_rederived(0.0, 0.0)?.fwhm,
                ),
            }
        }
        WidthMethod::Numeric => {
            let grid = DetuningGrid::auto_square(&walkoffs, sigma, spec.grid_n)?;
            let width = |bs, bi| -> Result<f64> {
                let jsa = JointSpectralAmplitude::from_model(walkoffs, sigma, grid, bs, bi)?;
                Ok(numeric_curve(&jsa, spec.mode, spec.scan_points)?.fwhm)
            };
            (width(bs, bi)?, width(0.0, 0.0)?)
        }
    };
    let visibility = match spec.mode {
        DetectionMode::Local => ClosedFormContext::new(walkoffs, sigma)?.visibility(bs, bi),
        DetectionMode::Nonlocal => f64::NAN,
    };
    Ok(SweepRow {
        pump_wavelength: wavelength,
        bandwidth,
        sigma_p: sigma,
        tau_s: walkoffs.signal,
        tau_i: walkoffs.idler,
        schmidt_number,
        fwhm_dispersed,
        fwhm_reference,
        delta_fwhm: fwhm_dispersed - fwhm_reference,
        pmf_angle: pmf_angle(&walkoffs)?,
        visibility,
        error: None,
    })
}

/// Schmidt number of the dispersion-free amplitude (external dispersion is a
/// local unitary and leaves the entanglement unchanged).
fn point_schmidt_number(spec: &SweepSpec, walkoffs: &WalkoffPair, sigma: f64) -> Result<f64> {
    match spec.schmidt_method {
        SchmidtMethod::Analytic => gaussian_model_schmidt_number(walkoffs, sigma),
        SchmidtMethod::Numeric => {
            let grid = DetuningGrid::auto_square(walkoffs, sigma, spec.grid_n)?;
            let jsa = JointSpectralAmplitude::from_model(*walkoffs, sigma, grid, 0.0, 0.0)?;
            schmidt_number_of(&schmidt_coefficients(&jsa)?)
        }
    }
}

/// Runs every point of `spec` (in parallel) and returns rows in ascending
/// order of the swept variable. Point failures are recorded per row.
pub fn run_wavelength_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points = spec.points();
    log::info!(
        "sweep: {} points, {:?} detection, {:?} widths, bandwidth convention {}",
        points.len(),
        spec.mode,
        spec.width_method,
        spec.convention.as_str()
    );
    let rows: Vec<SweepRow> = points.par_iter().map(|&x| sweep_point(spec, x)).collect();
    for row in rows.iter().filter(|r| !r.is_ok()) {
        log::warn!(
            "sweep point {:.3} nm failed: {}",
            row.pump_wavelength / NM,
            row.error.as_deref().unwrap_or("")
        );
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 12] = [
    "pump_wavelength_m",
    "bandwidth_m",
    "sigma_p_rad_s",
    "tau_s_s",
    "tau_i_s",
    "schmidt_number",
    "fwhm_beta_ref_s",
    "fwhm_beta0_s",
    "delta_fwhm_s",
    "theta_pmf_rad",
    "visibility",
    "error",
];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let mut rec: Vec<String> = [
            r.pump_wavelength,
            r.bandwidth,
            r.sigma_p,
            r.tau_s,
            r.tau_i,
            r.schmidt_number,
            r.fwhm_dispersed,
            r.fwhm_reference,
            r.delta_fwhm,
            r.pmf_angle,
            r.visibility,
        ]
        .iter()
        .map(|v| fmt_sig(*v))
        .collect();
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// The same nonlocal sweep with `β_ref` in the signal arm and in the idler arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmComparison {
    pub signal_arm: Vec<SweepRow>,
    pub idler_arm: Vec<SweepRow>,
}

impl ArmComparison {
    /// `ΔFWHM(signal arm) − ΔFWHM(idler arm)` per row.
    pub fn difference(&self) -> Vec<f64> {
        self.signal_arm
            .iter()
            .zip(&self.idler_arm)
            .map(|(s, i)| s.delta_fwhm - i.delta_fwhm)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "pump_wavelength_m",
            "schmidt_number",
            "theta_pmf_rad",
            "delta_fwhm_signal_arm_s",
            "delta_fwhm_idler_arm_s",
            "difference_s",
        ])?;
        for ((s, i), d) in self.signal_arm.iter().zip(&self.idler_arm).zip(self.difference()) {
            w.write_record(
                [
                    s.pump_wavelength,
                    s.schmidt_number,
                    s.pmf_angle,
                    s.delta_fwhm,
                    i.delta_fwhm,
                    d,
                ]
                .map(fmt_sig),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_nonlocal_arm_comparison(spec: &SweepSpec) -> Result<ArmComparison> {
    if spec.mode != DetectionMode::Nonlocal {
        return Err(Error::validation(
            "sweep.mode",
            "the arm comparison needs nonlocal detection",
        ));
    }
    let mut s = spec.clone();
    s.arm = Arm::Signal;
    let signal_arm = run_wavelength_sweep(&s)?;
    s.arm = Arm::Idler;
    let idler_arm = run_wavelength_sweep(&s)?;
    Ok(ArmComparison { signal_arm, idler_arm })
}

/// Spearman rank correlation (average ranks for ties). NaN pairs are dropped.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    let (rx, ry) = (ranks(&xs), ranks(&ys));
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let rank = 0.5 * (start + end - 1) as f64 + 1.0;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Row at which `key` is largest (ignoring failed rows).
pub fn argmax_by(rows: &[SweepRow], key: impl Fn(&SweepRow) -> f64) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.is_ok() && key(r).is_finite())
        .max_by(|a, b| key(a).total_cmp(&key(b)))
}

pub fn argmin_by(rows: &[SweepRow], key: impl Fn(&SweepRow) -> f64) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.is_ok() && key(r).is_finite())
        .min_by(|a, b| key(a).total_cmp(&key(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 45.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        // ties get the average rank
        assert_eq!(ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn points_are_inclusive() {
        let spec = SweepSpec::wavelength_default(4.0 * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Local);
        let p = spec.points();
        assert_eq!(p.len(), 221);
        assert!((p[220] - 810.0 * NM).abs() < 1e-15);
        let one = spec.clone().with_range(700.0 * NM, 700.0 * NM, 1.0 * NM);
        assert_eq!(one.points().len(), 1);
    }

    #[test]
    fn invalid_specs() {
        let base = SweepSpec::wavelength_default(4.0 * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Local);
        assert!(base
            .clone()
            .with_range(700.0 * NM, 600.0 * NM, 1.0 * NM)
            .validate()
            .is_err());
        assert!(base.clone().with_range(600.0 * NM, 700.0 * NM, 0.0).validate().is_err());
        // 2 λ_p leaves the transparency window
        assert!(matches!(
            base.with_range(1800.0 * NM, 1800.0 * NM, 1.0 * NM).validate(),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn failing_point_is_recorded() {
        let spec = SweepSpec::wavelength_default(4.0 * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Local);
        let row = sweep_point(&spec, 1800.0 * NM);
        assert!(!row.is_ok());
        assert!(row.delta_fwhm.is_nan());
    }
}
