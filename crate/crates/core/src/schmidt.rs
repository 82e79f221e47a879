//! Schmidt decomposition of a sampled joint spectral amplitude.
//!
//! The amplitude is weighted by `√(Δν_s Δν_i)` before the singular-value
//! factorisation so that the discrete singular values approximate the
//! continuum Schmidt coefficients, and the singular vectors are divided by
//! `√Δν` so that the modes are orthonormal under the quadrature inner product.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::biphoton::{fmt_sig, DetuningGrid, JointSpectralAmplitude, GAMMA};
use crate::dispersion::WalkoffPair;
use crate::{Error, Result};

/// Coefficients below this fraction of the largest are dropped.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep `k_j > threshold · k_0`.
    Relative(f64),
    /// Keep every singular value.
    FullRank,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Relative(DEFAULT_TRUNCATION)
    }
}

/// Schmidt coefficients `k_j` (descending, summing to one) and, when
/// computed, the matching signal and idler modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub coefficients: Vec<f64>,
    /// `φ_j(ν_s)` sampled on the signal axis.
    pub signal_modes: Vec<Vec<Complex64>>,
    /// `ψ_j(ν_i)` sampled on the idler axis.
    pub idler_modes: Vec<Vec<Complex64>>,
    pub grid: Option<DetuningGrid>,
    /// `(∬|f|²)^½` of the decomposed amplitude.
    pub amplitude_norm: f64,
}

impl SchmidtSpectrum {
    /// Spectrum without modes, e.g. for evaluating [`schmidt_number`] on
    /// given coefficients.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        SchmidtSpectrum {
            coefficients,
            signal_modes: Vec::new(),
            idler_modes: Vec::new(),
            grid: None,
            amplitude_norm: 1.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// `Σ_j √k_j φ_j(ν_s) ψ_j(ν_i)` scaled back by the amplitude norm, row-major.
    pub fn reconstruct(&self) -> Result<Vec<Complex64>> {
        let grid = self
            .grid
            .ok_or_else(|| Error::Contract("spectrum carries no modes to reconstruct from".into()))?;
        let (ns, ni) = (grid.signal.n, grid.idler.n);
        let mut out = vec![Complex64::new(0.0, 0.0); ns * ni];
        for ((k, phi), psi) in self.coefficients.iter().zip(&self.signal_modes).zip(&self.idler_modes) {
            let w = k.sqrt() * self.amplitude_norm;
            for (j, p) in phi.iter().enumerate() {
                let a = p * w;
                for (slot, q) in out[j * ni..(j + 1) * ni].iter_mut().zip(psi) {
                    *slot += a * q;
                }
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "k_j"])?;
        for (j, k) in self.coefficients.iter().enumerate() {
            w.write_record([j.to_string(), fmt_sig(*k)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Result<SchmidtSummary> {
        Ok(SchmidtSummary {
            schmidt_number: schmidt_number(self)?,
            rank: self.rank(),
            leading_coefficient: self.coefficients.first().copied().unwrap_or(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchmidtSummary {
    pub schmidt_number: f64,
    pub rank: usize,
    pub leading_coefficient: f64,
}

fn weighted_matrix(jsa: &JointSpectralAmplitude) -> Result<(Mat<Complex64>, f64)> {
    let grid = jsa.grid();
    let weight = grid.cell_area().sqrt();
    let ni = grid.idler.n;
    let values = jsa.values();
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Decomposition("amplitude has non-finite samples".into()));
    }
    let m = Mat::from_fn(grid.signal.n, ni, |j, k| values[j * ni + k] * weight);
    let norm_sq: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_area();
    if !(norm_sq > 0.0) || norm_sq.sqrt() < 1e-300 {
        return Err(Error::Decomposition("amplitude is numerically zero".into()));
    }
    Ok((m, norm_sq))
}

fn normalized_coefficients(singular: &[f64], truncation: Truncation) -> Result<Vec<f64>> {
    let mut k: Vec<f64> = singular.iter().map(|s| s * s).collect();
    k.sort_by(|a, b| b.total_cmp(a));
    let lead = k.first().copied().unwrap_or(0.0);
    if !(lead > 0.0) {
        return Err(Error::Decomposition("all singular values vanish".into()));
    }
    if let Truncation::Relative(threshold) = truncation {
        let keep = k.iter().take_while(|&&v| v > threshold * lead).count().max(1);
        k.truncate(keep);
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    Ok(k)
}

/// Schmidt coefficients only; skips the singular vectors.
pub fn schmidt_coefficients(jsa: &JointSpectralAmplitude) -> Result<Vec<f64>> {
    let (m, _) = weighted_matrix(jsa)?;
    let singular = m
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    normalized_coefficients(&singular, Truncation::default())
}

/// Full decomposition with the default truncation.
pub fn schmidt_decompose(jsa: &JointSpectralAmplitude) -> Result<SchmidtSpectrum> {
    schmidt_decompose_with(jsa, Truncation::default())
}

pub fn schmidt_decompose_with(jsa: &JointSpectralAmplitude, truncation: Truncation) -> Result<SchmidtSpectrum> {
    let (m, norm_sq) = weighted_matrix(jsa)?;
    let svd = m.thin_svd().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let singular: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
    let coefficients = normalized_coefficients(&singular, truncation)?;
    let grid = *jsa.grid();
    let inv_ws = 1.0 / grid.signal.spacing().sqrt();
    let inv_wi = 1.0 / grid.idler.spacing().sqrt();
    let (u, v) = (svd.U(), svd.V());
    let rank = coefficients.len();
    let signal_modes = (0..rank)
        .map(|j| (0..grid.signal.n).map(|r| u[(r, j)] * inv_ws).collect())
        .collect();
    let idler_modes = (0..rank)
        .map(|j| (0..grid.idler.n).map(|r| v[(r, j)].conj() * inv_wi).collect())
        .collect();
    // k_j were renormalised over the kept modes; rescale so the truncated
    // expansion still approximates the original amplitude.
    let kept: f64 = singular.iter().take(rank).map(|s| s * s).sum();
    Ok(SchmidtSpectrum {
        coefficients,
        signal_modes,
        idler_modes,
        grid: Some(grid),
        amplitude_norm: kept.sqrt().min(norm_sq.sqrt()),
    })
}

/// `K = 1 / Σ_j k_j²`.
pub fn schmidt_number(spectrum: &SchmidtSpectrum) -> Result<f64> {
    schmidt_number_of(&spectrum.coefficients)
}

pub fn schmidt_number_of(coefficients: &[f64]) -> Result<f64> {
    if coefficients.is_empty() {
        return Err(Error::Contract("empty Schmidt spectrum".into()));
    }
    if let Some(k) = coefficients.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
        return Err(Error::Contract(format!(
            "Schmidt coefficient {k} is not a non-negative number"
        )));
    }
    let total: f64 = coefficients.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "Schmidt coefficients sum to {total}, expected 1"
        )));
    }
    Ok(1.0 / coefficients.iter().map(|k| k * k).sum::<f64>())
}

/// Schmidt number of the real two-dimensional Gaussian
/// `exp(−(a x² + b y² + 2c xy))`, `K = (1 − c²/ab)^(−½)`.
pub fn double_gaussian_schmidt_number(a: f64, b: f64, c: f64) -> Result<f64> {
    let ratio = double_gaussian_ratio(a, b, c)?;
    Ok((1.0 + ratio) / (1.0 - ratio))
}

/// First `count` Schmidt coefficients of the same Gaussian: the geometric
/// sequence `k_j = (1 − r) r^j`.
pub fn double_gaussian_spectrum(a: f64, b: f64, c: f64, count: usize) -> Result<Vec<f64>> {
    let r = double_gaussian_ratio(a, b, c)?;
    Ok((0..count).map(|j| (1.0 - r) * r.powi(j as i32)).collect())
}

// r = (K − 1)/(K + 1), written so that r → 0 is exact for c = 0
fn double_gaussian_ratio(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && c * c < a * b) {
        return Err(Error::Contract(format!(
            "exp(−(a x² + b y² + 2c xy)) is not normalisable for a = {a}, b = {b}, c = {c}"
        )));
    }
    let s = (1.0 - c * c / (a * b)).sqrt();
    Ok((1.0 - s) / (1.0 + s))
}

/// Analytic Schmidt number of the Gaussian crystal model with `D = 1`.
pub fn gaussian_model_schmidt_number(walkoffs: &WalkoffPair, sigma_p: f64) -> Result<f64> {
    let (a, b, c) = gaussian_model_quadratic_form(walkoffs, sigma_p);
    double_gaussian_schmidt_number(a, b, c)
}

/// `|f(ν_s, ν_i)| = exp(−(a ν_s² + b ν_i² + 2c ν_s ν_i))` for the model amplitude.
pub fn gaussian_model_quadratic_form(walkoffs: &WalkoffPair, sigma_p: f64) -> (f64, f64, f64) {
    let pump = 0.5 / (sigma_p * sigma_p);
    let (ts, ti) = (walkoffs.signal, walkoffs.idler);
    (
        pump + 0.25 * GAMMA * ts * ts,
        pump + 0.25 * GAMMA * ti * ti,
        pump + 0.25 * GAMMA * ts * ti,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::GridAxis;

    fn grid(n: usize) -> DetuningGrid {
        DetuningGrid::new(GridAxis::new(n, 6.0).unwrap(), GridAxis::new(n + 7, 5.0).unwrap())
    }

    #[test]
    fn product_state_has_unit_schmidt_number() {
        let jsa = JointSpectralAmplitude::from_fn(grid(80), |x, y| {
            Complex64::from_polar(
                (-(x - 0.3).powi(2)).exp() * (1.0 + 0.1 * y) * (-y * y / 3.0).exp(),
                0.4 * x,
            )
        });
        let spec = schmidt_decompose(&jsa).unwrap();
        assert!((spec.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((schmidt_number(&spec).unwrap() - 1.0).abs() < 1e-10);
        let fast = schmidt_coefficients(&jsa).unwrap();
        assert!((schmidt_number_of(&fast).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coefficients_are_sorted_and_normalised() {
        let jsa = JointSpectralAmplitude::from_fn(grid(90), |x, y| {
            Complex64::new((-(x * x + y * y + 1.5 * x * y) / 2.0).exp(), 0.0)
        });
        let spec = schmidt_decompose(&jsa).unwrap();
        let sum: f64 = spec.coefficients.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(spec.coefficients.windows(2).all(|w| w[0] >= w[1] && w[1] >= 0.0));
    }

    #[test]
    fn modes_are_orthonormal_and_reconstruct() {
        let g = grid(70);
        let jsa = JointSpectralAmplitude::from_fn(g, |x, y| {
            Complex64::from_polar((-(x * x + 2.0 * y * y - 1.2 * x * y) / 2.0).exp(), 0.3 * x * y)
        });
        let spec = schmidt_decompose_with(&jsa, Truncation::FullRank).unwrap();
        let (ds, di) = (g.signal.spacing(), g.idler.spacing());
        for (modes, d) in [(&spec.signal_modes, ds), (&spec.idler_modes, di)] {
            for a in 0..8 {
                for b in 0..8 {
                    let ip: Complex64 = modes[a]
                        .iter()
                        .zip(&modes[b])
                        .map(|(p, q)| p.conj() * q)
                        .sum::<Complex64>()
                        * d;
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - expect).norm() < 1e-8, "<{a}|{b}> = {ip}");
                }
            }
        }
        let rebuilt = spec.reconstruct().unwrap();
        let err: f64 = rebuilt.iter().zip(jsa.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = jsa.values().iter().map(|v| v.norm_sqr()).sum();
        assert!((err / norm).sqrt() < 1e-8);
    }

    #[test]
    fn schmidt_number_examples() {
        assert_eq!(schmidt_number_of(&[1.0]).unwrap(), 1.0);
        assert_eq!(schmidt_number_of(&[0.5, 0.5]).unwrap(), 2.0);
        assert!(matches!(schmidt_number_of(&[0.5, 0.6]), Err(Error::Contract(_))));
        assert!(matches!(schmidt_number_of(&[]), Err(Error::Contract(_))));
        assert!(matches!(schmidt_number_of(&[1.2, -0.2]), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_amplitude_is_rejected() {
        let jsa = JointSpectralAmplitude::from_fn(grid(20), |_, _| Complex64::new(0.0, 0.0));
        assert!(matches!(schmidt_decompose(&jsa), Err(Error::Decomposition(_))));
    }

    #[test]
    fn invariant_under_global_phase_and_scale() {
        let jsa = JointSpectralAmplitude::from_fn(grid(60), |x, y| {
            Complex64::new((-(x * x + y * y + 1.1 * x * y) / 2.0).exp(), 0.0)
        });
        let k0 = schmidt_number(&schmidt_decompose(&jsa).unwrap()).unwrap();
        let k1 = schmidt_number(&schmidt_decompose(&jsa.scaled(Complex64::from_polar(37.0, 1.1))).unwrap()).unwrap();
        assert!((k0 - k1).abs() < 1e-10 * k0);
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        SchmidtSpectrum::from_coefficients(vec![0.75, 0.25])
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("j,k_j"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn double_gaussian_matches_analytic_spectrum() {
        let (a, b, c): (f64, f64, f64) = (0.5, 0.8, 0.45);
        let (sa, sb) = (1.0 / (2.0 * a).sqrt(), 1.0 / (2.0 * b).sqrt());
        let grid = DetuningGrid::new(
            GridAxis::new(201, 7.0 * sa * 1.8).unwrap(),
            GridAxis::new(201, 7.0 * sb * 1.8).unwrap(),
        );
        let jsa = JointSpectralAmplitude::from_fn(grid, |x, y| {
            Complex64::new((-(a * x * x + b * y * y + 2.0 * c * x * y)).exp(), 0.0)
        });
        let spec = schmidt_decompose(&jsa).unwrap();
        let exact = double_gaussian_spectrum(a, b, c, 6).unwrap();
        for (k, e) in spec.coefficients.iter().zip(&exact) {
            assert!((k - e).abs() < 1e-9, "{k} vs {e}");
        }
        let k = schmidt_number(&spec).unwrap();
        assert!((k / double_gaussian_schmidt_number(a, b, c).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn uncorrelated_gaussian_is_separable() {
        assert_eq!(double_gaussian_schmidt_number(1.0, 2.0, 0.0).unwrap(), 1.0);
        assert!(double_gaussian_schmidt_number(1.0, 1.0, 1.0).is_err());
    }
}
