use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::biphoton::fmt_sig;
use crate::{Error, Result};

/// Default number of delay samples in a scan.
pub const DEFAULT_SCAN_POINTS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    /// Hong-Ou-Mandel interference behind one beam splitter.
    Local,
    /// Direct time correlation between two separated detectors.
    Nonlocal,
}

impl DetectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionMode::Local => "local",
            DetectionMode::Nonlocal => "nonlocal",
        }
    }

    /// Rate far from the coincidence feature.
    pub fn baseline(self) -> f64 {
        match self {
            DetectionMode::Local => 1.0,
            DetectionMode::Nonlocal => 0.0,
        }
    }
}

/// Uniform delay samples on `[-half_span, half_span]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayScan {
    /// s
    pub half_span: f64,
    pub n: usize,
}

impl DelayScan {
    /// `n` is rounded up to odd so that zero delay is sampled.
    pub fn new(half_span: f64, n: usize) -> Result<Self> {
        if !(half_span.is_finite() && half_span > 0.0) {
            return Err(Error::validation(
                "scan.half_span",
                format!("must be > 0, got {half_span}"),
            ));
        }
        if n < 3 {
            return Err(Error::validation("scan.n", format!("need at least 3 samples, got {n}")));
        }
        Ok(DelayScan { half_span, n: n | 1 })
    }

    /// Scan spanning eight times `fwhm_estimate`.
    pub fn for_width(fwhm_estimate: f64, n: usize) -> Result<Self> {
        Self::new(4.0 * fwhm_estimate, n)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_span / (self.n - 1) as f64
    }

    pub fn taus(&self) -> Vec<f64> {
        let step = self.step();
        let mid = (self.n / 2) as f64;
        (0..self.n).map(|j| (j as f64 - mid) * step).collect()
    }

    /// Same span, twice the sampling density.
    pub fn refined(&self) -> Self {
        DelayScan {
            half_span: self.half_span,
            n: 2 * self.n - 1,
        }
    }

    /// Errors unless the scan covers at least four times `fwhm_estimate`.
    pub fn check_span(&self, fwhm_estimate: f64) -> Result<()> {
        if 2.0 * self.half_span < 4.0 * fwhm_estimate {
            return Err(Error::ScanSpan(format!(
                "span {:e} s is below four times the expected width {fwhm_estimate:e} s; widen the scan",
                2.0 * self.half_span
            )));
        }
        Ok(())
    }
}

/// A sampled coincidence rate with its extracted width.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceCurve {
    pub mode: DetectionMode,
    /// s, relative to the feature centre
    pub taus: Vec<f64>,
    pub rates: Vec<f64>,
    /// s
    pub fwhm: f64,
    /// Dip depth `1 − min R`; only meaningful for local detection.
    pub visibility: Option<f64>,
}

impl CoincidenceCurve {
    pub fn new(mode: DetectionMode, taus: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if taus.len() != rates.len() || taus.len() < 3 {
            return Err(Error::Contract(format!(
                "curve needs matching delay/rate samples, got {} and {}",
                taus.len(),
                rates.len()
            )));
        }
        let fwhm = width_of(mode, &taus, &rates)?;
        let visibility = match mode {
            DetectionMode::Local => Some(1.0 - rates.iter().copied().fold(f64::INFINITY, f64::min)),
            DetectionMode::Nonlocal => None,
        };
        Ok(CoincidenceCurve {
            mode,
            taus,
            rates,
            fwhm,
            visibility,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau_s", "rate"])?;
        for (t, r) in self.taus.iter().zip(&self.rates) {
            w.write_record([fmt_sig(*t), fmt_sig(*r)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary<P: Serialize>(&self, params: P) -> CurveSummary<P> {
        CurveSummary {
            fwhm_s: self.fwhm,
            visibility: self.visibility,
            mode: self.mode,
            params,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary<P> {
    pub fwhm_s: f64,
    pub visibility: Option<f64>,
    pub mode: DetectionMode,
    pub params: P,
}

/// Width of the dip (local) or peak (nonlocal) at half its height above
/// the baseline, from linear interpolation between the bracketing samples.
pub fn fwhm_from_curve(curve: &CoincidenceCurve) -> Result<f64> {
    width_of(curve.mode, &curve.taus, &curve.rates)
}

fn width_of(mode: DetectionMode, taus: &[f64], rates: &[f64]) -> Result<f64> {
    let baseline = mode.baseline();
    // signed height above the baseline, positive at the feature
    let height: Vec<f64> = match mode {
        DetectionMode::Local => rates.iter().map(|r| baseline - r).collect(),
        DetectionMode::Nonlocal => rates.iter().map(|r| r - baseline).collect(),
    };
    let (centre, peak) =
        height.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (j, h)| if h > best.1 { (j, h) } else { best },
        );
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Contract(format!(
            "{} curve has no feature above its baseline",
            mode.as_str()
        )));
    }
    let half = 0.5 * peak;
    let cross = |a: usize, b: usize| {
        let t = (height[a] - half) / (height[a] - height[b]);
        taus[a] + t * (taus[b] - taus[a])
    };
    let right = (centre..taus.len() - 1)
        .find(|&j| height[j + 1] <= half)
        .map(|j| cross(j, j + 1))
        .ok_or_else(|| Error::ScanSpan("right half-maximum crossing not found; widen the scan".into()))?;
    let left = (1..=centre)
        .rev()
        .find(|&j| height[j - 1] <= half)
        .map(|j| cross(j, j - 1))
        .ok_or_else(|| Error::ScanSpan("left half-maximum crossing not found; widen the scan".into()))?;
    Ok(right - left)
}
