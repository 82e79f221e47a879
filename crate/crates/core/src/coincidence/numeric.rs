//! Coincidence rates by direct quadrature over the sampled amplitude.
//!
//! Both profiles collapse the double integral onto one-dimensional sums
//! along the grid diagonals once, so each delay sample costs `O(N)` (local)
//! or `O(N²)` (nonlocal) instead of a fresh double or triple integral.

use num_complex::Complex64;
use rayon::prelude::*;

use super::curve::{CoincidenceCurve, DelayScan, DetectionMode};
use crate::biphoton::JointSpectralAmplitude;
use crate::{Error, Result};

fn require_square(jsa: &JointSpectralAmplitude, what: &str) -> Result<()> {
    if jsa.grid().is_square() {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "{what} needs signal and idler sampled on the same axis"
        )))
    }
}

fn norm_sum(jsa: &JointSpectralAmplitude) -> Result<f64> {
    let total: f64 = jsa.values().iter().map(|v| v.norm_sqr()).sum();
    if total > 0.0 && total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Contract(format!("amplitude norm is {total}")))
    }
}

/// Local (HOM) rate
///
/// ```text
/// R(τ) = 1 − Re ∬ f(ν_s, ν_i) f*(ν_i, ν_s) e^{i(ν_s − ν_i)τ} / ∬|f|²
/// ```
///
/// On a square grid `ν_s − ν_i = mΔν`, so the overlap is a trigonometric
/// sum over the diagonal sums `h_m = Σ_{j−k=m} f_jk f*_kj`.
#[derive(Debug, Clone)]
pub struct LocalRateProfile {
    /// `h_m` for `m = −(N−1) ..= N−1`, normalised by `Σ|f|²`.
    diagonals: Vec<Complex64>,
    spacing: f64,
    offset: f64,
}

impl LocalRateProfile {
    pub fn new(jsa: &JointSpectralAmplitude) -> Result<Self> {
        require_square(jsa, "the local coincidence rate")?;
        let n = jsa.grid().signal.n;
        let total = norm_sum(jsa)?;
        let mut diagonals = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        for j in 0..n {
            for k in 0..n {
                diagonals[j + n - 1 - k] += jsa.get(j, k) * jsa.get(k, j).conj();
            }
        }
        diagonals.iter_mut().for_each(|h| *h /= total);
        Ok(LocalRateProfile {
            diagonals,
            spacing: jsa.grid().signal.spacing(),
            offset: jsa.birefringent_delay(),
        })
    }

    /// Rate at delay `tau` measured from the birefringent delay.
    pub fn rate(&self, tau: f64) -> f64 {
        let t = tau + self.offset;
        let m0 = (self.diagonals.len() / 2) as f64;
        let overlap: f64 = self
            .diagonals
            .iter()
            .enumerate()
            .map(|(idx, h)| {
                let (s, c) = ((idx as f64 - m0) * self.spacing * t).sin_cos();
                h.re * c - h.im * s
            })
            .sum();
        1.0 - overlap
    }

    /// `1 − Re(overlap)` at the dip centre, i.e. the numeric visibility.
    pub fn visibility(&self) -> f64 {
        1.0 - self.rate(0.0)
    }

    /// Delay period `2π/Δν` after which the sampled overlap repeats.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing
    }

    pub fn scan(&self, scan: &DelayScan) -> Result<CoincidenceCurve> {
        check_period(scan, self.period())?;
        let taus = scan.taus();
        let rates = taus.par_iter().map(|&t| self.rate(t)).collect();
        CoincidenceCurve::new(DetectionMode::Local, taus, rates)
    }
}

/// Local rate at a single delay.
pub fn hom_rate_numeric(jsa: &JointSpectralAmplitude, tau: f64) -> Result<f64> {
    Ok(LocalRateProfile::new(jsa)?.rate(tau))
}

/// Nonlocal (two-detector) rate
///
/// ```text
/// R(τ) ∝ ∫dt |∬ f(ν_s, ν_i) e^{−iν_s t} e^{−iν_i (t−τ)}|²
/// ```
///
/// Grouping grid terms by `s = j + k` (constant `ν_s + ν_i`) turns the
/// detector-time integral into `Σ_s |c_s(τ)|²` with
/// `c_s = Σ_{j+k=s} f_jk e^{iν_k τ}`.
#[derive(Debug, Clone)]
pub struct NonlocalRateProfile {
    values: Vec<Complex64>,
    nodes: Vec<f64>,
    total: f64,
    spacing: f64,
    offset: f64,
}

impl NonlocalRateProfile {
    pub fn new(jsa: &JointSpectralAmplitude) -> Result<Self> {
        require_square(jsa, "the nonlocal coincidence rate")?;
        Ok(NonlocalRateProfile {
            values: jsa.values().to_vec(),
            nodes: jsa.grid().idler.nodes(),
            total: norm_sum(jsa)?,
            spacing: jsa.grid().idler.spacing(),
            offset: jsa.birefringent_delay(),
        })
    }

    /// Time-averaged `|A(t, t − τ)|²` over one period of the sampled field,
    /// divided by `Σ|f|²`; `tau` is measured from the coincidence peak.
    pub fn density(&self, tau: f64) -> f64 {
        self.raw_density(tau - self.offset)
    }

    fn raw_density(&self, tau_raw: f64) -> f64 {
        let n = self.nodes.len();
        let phases: Vec<Complex64> = self
            .nodes
            .iter()
            .map(|&nu| Complex64::from_polar(1.0, nu * tau_raw))
            .collect();
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        for (j, row) in self.values.chunks_exact(n).enumerate() {
            for (slot, (f, p)) in c[j..j + n].iter_mut().zip(row.iter().zip(&phases)) {
                *slot += f * p;
            }
        }
        c.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.total
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing
    }

    /// Peak-normalised curve; the baseline is zero.
    pub fn scan(&self, scan: &DelayScan) -> Result<CoincidenceCurve> {
        check_period(scan, self.period())?;
        let taus = scan.taus();
        let raw: Vec<f64> = taus.par_iter().map(|&t| self.density(t)).collect();
        let peak = raw.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::Contract("nonlocal rate vanishes over the scan".into()));
        }
        CoincidenceCurve::new(DetectionMode::Nonlocal, taus, raw.iter().map(|r| r / peak).collect())
    }
}

/// Unnormalised nonlocal density at a single delay.
pub fn nonlocal_rate_numeric(jsa: &JointSpectralAmplitude, tau: f64) -> Result<f64> {
    Ok(NonlocalRateProfile::new(jsa)?.density(tau))
}

/// Reference evaluation of the nonlocal density: builds the two-time field
/// `A(t, t − τ)` by direct double summation at `samples` detector times over
/// one period and averages `|A|²`. Costs `O(samples · N²)`; meant for
/// checking [`NonlocalRateProfile`] on small grids.
pub fn nonlocal_rate_literal(jsa: &JointSpectralAmplitude, tau: f64, samples: usize) -> Result<f64> {
    require_square(jsa, "the nonlocal coincidence rate")?;
    let total = norm_sum(jsa)?;
    let nodes = jsa.grid().signal.nodes();
    let period = 2.0 * std::f64::consts::PI / jsa.grid().signal.spacing();
    let tau_raw = tau - jsa.birefringent_delay();
    let mut acc = 0.0;
    for m in 0..samples {
        let t = period * m as f64 / samples as f64;
        let mut field = Complex64::new(0.0, 0.0);
        for (j, &nu_s) in nodes.iter().enumerate() {
            for (k, &nu_i) in nodes.iter().enumerate() {
                field += jsa.get(j, k) * Complex64::from_polar(1.0, -nu_s * t - nu_i * (t - tau_raw));
            }
        }
        acc += field.norm_sqr();
    }
    Ok(acc / samples as f64 / total)
}

fn check_period(scan: &DelayScan, period: f64) -> Result<()> {
    if 2.0 * scan.half_span >= period {
        return Err(Error::ScanSpan(format!(
            "scan span {:e} s reaches the grid's delay period {period:e} s; increase grid.n",
            2.0 * scan.half_span
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::{DetuningGrid, GridAxis};
    use crate::dispersion::WalkoffPair;

    fn model(w: WalkoffPair, sigma: f64, n: usize, bs: f64, bi: f64) -> JointSpectralAmplitude {
        let grid = DetuningGrid::auto_square(&w, sigma, n).unwrap();
        JointSpectralAmplitude::from_model(w, sigma, grid, bs, bi).unwrap()
    }

    #[test]
    fn symmetric_configuration_gives_perfect_dip() {
        let jsa = model(WalkoffPair::new(-1.2e-12, 1.2e-12), 4e12, 129, 0.0, 0.0);
        let p = LocalRateProfile::new(&jsa).unwrap();
        assert!(p.rate(0.0).abs() < 1e-10, "{}", p.rate(0.0));
    }

    #[test]
    fn dip_is_centred_after_offset() {
        let jsa = model(WalkoffPair::new(0.4e-12, -2.1e-12), 4e12, 129, 3e-26, 0.0);
        let p = LocalRateProfile::new(&jsa).unwrap();
        let step = 1e-15;
        assert!(p.rate(0.0) < p.rate(step) && p.rate(0.0) < p.rate(-step));
        let n = NonlocalRateProfile::new(&jsa).unwrap();
        assert!(n.density(0.0) > n.density(step) && n.density(0.0) > n.density(-step));
    }

    #[test]
    fn far_delay_returns_to_baseline() {
        let jsa = model(WalkoffPair::new(0.4e-12, -2.1e-12), 4e12, 129, 0.0, 0.0);
        let p = LocalRateProfile::new(&jsa).unwrap();
        assert!((p.rate(20e-12) - 1.0).abs() < 1e-2);
        let n = NonlocalRateProfile::new(&jsa).unwrap();
        assert!(n.density(20e-12) < 1e-2 * n.density(0.0));
    }

    #[test]
    fn rectangular_grid_is_rejected() {
        let grid = DetuningGrid::new(GridAxis::new(9, 1e12).unwrap(), GridAxis::new(11, 1e12).unwrap());
        let jsa = JointSpectralAmplitude::from_fn(grid, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(LocalRateProfile::new(&jsa), Err(Error::Contract(_))));
        assert!(matches!(NonlocalRateProfile::new(&jsa), Err(Error::Contract(_))));
    }

    #[test]
    fn fourier_reduction_matches_literal_time_integral() {
        let jsa = model(WalkoffPair::new(0.7e-12, -1.9e-12), 5e12, 64, 8e-26, -3e-26);
        let profile = NonlocalRateProfile::new(&jsa).unwrap();
        for tau in [-1.3e-12, 0.0, 0.45e-12, 2.2e-12] {
            let fast = profile.density(tau);
            let slow = nonlocal_rate_literal(&jsa, tau, 4 * 64).unwrap();
            assert!(((fast - slow) / slow).abs() < 1e-6, "{tau}: {fast} vs {slow}");
        }
    }

    #[test]
    fn local_overlap_matches_direct_double_sum() {
        let jsa = model(WalkoffPair::new(0.7e-12, -1.9e-12), 5e12, 48, 8e-26, -3e-26);
        let profile = LocalRateProfile::new(&jsa).unwrap();
        let nodes = jsa.grid().signal.nodes();
        let total: f64 = jsa.values().iter().map(|v| v.norm_sqr()).sum();
        let tau = 0.6e-12;
        let t = tau + jsa.birefringent_delay();
        let mut overlap = Complex64::new(0.0, 0.0);
        for j in 0..48 {
            for k in 0..48 {
                overlap += jsa.get(j, k) * jsa.get(k, j).conj() * Complex64::from_polar(1.0, (nodes[j] - nodes[k]) * t);
            }
        }
        assert!((profile.rate(tau) - (1.0 - overlap.re / total)).abs() < 1e-12);
    }

    #[test]
    fn scan_beyond_period_is_rejected() {
        let jsa = model(WalkoffPair::new(0.4e-12, -2.1e-12), 4e12, 33, 0.0, 0.0);
        let p = LocalRateProfile::new(&jsa).unwrap();
        let scan = DelayScan::new(p.period(), 101).unwrap();
        assert!(matches!(p.scan(&scan), Err(Error::ScanSpan(_))));
    }
}
