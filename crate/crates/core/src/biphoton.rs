//! The two-photon joint spectral amplitude
//!
//! ```text
//! f(ν_s, ν_i) = α(ν_s + ν_i) · φ(ν_s, ν_i) · D(ν_s, ν_i)
//! ```
//!
//! sampled on a uniform detuning grid, `ν_μ = ω_μ − ω_μ⁰`. The phase-matching
//! sinc is replaced by a Gaussian of equal FWHM and the crystal mismatch is
//! kept to first order in the detunings, so `L Δk = τ_s ν_s + τ_i ν_i`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{CrystalSpec, WalkoffPair};
use crate::units::{fwhm_per_sigma, wavelength_interval_to_angular, NM};
use crate::{Error, Result};

/// Width parameter of the Gaussian stand-in for `sinc`: `exp(−γ x²)` and
/// `sinc(x)` share their FWHM.
pub const GAMMA: f64 = 0.193;

/// How a user-facing pump bandwidth (in wavelength) maps onto the amplitude
/// standard deviation `σ_p` (rad/s) of the pump envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthConvention {
    /// `σ_p = (2πc/λ²) · Δλ / (2√(2 ln 2))`.
    #[default]
    IntensityFwhm,
    /// `σ_p = (2πc/λ²) · Δλ`: the bandwidth is read as the envelope's σ directly.
    AmplitudeSigma,
}

impl BandwidthConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            BandwidthConvention::IntensityFwhm => "intensity-fwhm",
            BandwidthConvention::AmplitudeSigma => "amplitude-sigma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Central wavelength, m.
    pub wavelength: f64,
    /// Spectral bandwidth in wavelength, m; interpreted per `convention`.
    pub bandwidth: f64,
    pub convention: BandwidthConvention,
}

impl PumpSpec {
    pub fn new(wavelength: f64, bandwidth: f64, convention: BandwidthConvention) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::validation(
                "pump.wavelength",
                format!("must be > 0, got {wavelength}"),
            ));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::validation(
                "pump.bandwidth",
                format!("must be > 0, got {bandwidth}"),
            ));
        }
        Ok(PumpSpec {
            wavelength,
            bandwidth,
            convention,
        })
    }

    /// Pump with an intensity FWHM of `fwhm` (m).
    pub fn with_fwhm(wavelength: f64, fwhm: f64) -> Result<Self> {
        Self::new(wavelength, fwhm, BandwidthConvention::IntensityFwhm)
    }

    /// Amplitude standard deviation `σ_p` of the envelope, rad/s.
    pub fn sigma(&self) -> f64 {
        let width = wavelength_interval_to_angular(self.wavelength, self.bandwidth);
        match self.convention {
            BandwidthConvention::IntensityFwhm => width / fwhm_per_sigma(),
            BandwidthConvention::AmplitudeSigma => width,
        }
    }

    pub fn at_wavelength(&self, wavelength: f64) -> Result<Self> {
        Self::new(wavelength, self.bandwidth, self.convention)
    }
}

/// Which arm a lumped dispersive element sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

/// A lumped group-delay dispersion `β = l ∂²k/2∂ω²` (s²) placed in one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveElement {
    pub beta: f64,
    pub arm: Arm,
}

impl DispersiveElement {
    pub fn new(beta: f64, arm: Arm) -> Self {
        DispersiveElement { beta, arm }
    }
}

/// Sums the elements of each arm into `(β_s, β_i)`.
pub fn arm_betas(elements: &[DispersiveElement]) -> (f64, f64) {
    elements.iter().fold((0.0, 0.0), |(s, i), e| match e.arm {
        Arm::Signal => (s + e.beta, i),
        Arm::Idler => (s, i + e.beta),
    })
}

/// One symmetric, uniformly spaced detuning axis `[-half_span, half_span]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub n: usize,
    /// rad/s
    pub half_span: f64,
}

impl GridAxis {
    pub fn new(n: usize, half_span: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::validation("grid.n", format!("need at least 2 samples, got {n}")));
        }
        if !(half_span.is_finite() && half_span > 0.0) {
            return Err(Error::validation(
                "grid.half_span",
                format!("must be > 0, got {half_span}"),
            ));
        }
        Ok(GridAxis { n, half_span })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_span / (self.n - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_span + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Axis with `2n − 1` samples over the same span; every old node is kept.
    pub fn refined(&self) -> Self {
        GridAxis {
            n: 2 * self.n - 1,
            half_span: self.half_span,
        }
    }
}

/// Signal × idler detuning grid. Rows index the signal axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningGrid {
    pub signal: GridAxis,
    pub idler: GridAxis,
}

/// Default samples per axis.
pub const DEFAULT_GRID_N: usize = 512;

impl DetuningGrid {
    pub fn new(signal: GridAxis, idler: GridAxis) -> Self {
        DetuningGrid { signal, idler }
    }

    pub fn square(n: usize, half_span: f64) -> Result<Self> {
        let axis = GridAxis::new(n, half_span)?;
        Ok(DetuningGrid::new(axis, axis))
    }

    /// Both axes share nodes, so `f(ν_i, ν_s)` is available on the grid.
    pub fn is_square(&self) -> bool {
        self.signal == self.idler
    }

    pub fn refined(&self) -> Self {
        DetuningGrid::new(self.signal.refined(), self.idler.refined())
    }

    /// Quadrature weight of one cell, `Δν_s Δν_i`.
    pub fn cell_area(&self) -> f64 {
        self.signal.spacing() * self.idler.spacing()
    }

    /// Square grid sized for coincidence integrals: the half-span is the
    /// larger of `4 max(σ_p, 1/(√γ max|τ|))` and six marginal standard
    /// deviations of `|f|²`.
    pub fn auto_square(walkoffs: &WalkoffPair, sigma_p: f64, n: usize) -> Result<Self> {
        let (std_s, std_i) = gaussian_marginal_std(walkoffs, sigma_p)?;
        let pm_width = 1.0 / (GAMMA.sqrt() * walkoffs.max_abs());
        let half = (4.0 * sigma_p.max(pm_width)).max(6.0 * std_s.max(std_i));
        Self::square(n, half)
    }

    /// Rectangular grid with each axis spanning six marginal standard
    /// deviations of `|f|²` on either side; used for Schmidt decompositions
    /// of strongly elongated amplitudes.
    pub fn auto_rectangular(walkoffs: &WalkoffPair, sigma_p: f64, n: usize) -> Result<Self> {
        let (std_s, std_i) = gaussian_marginal_std(walkoffs, sigma_p)?;
        Ok(DetuningGrid::new(
            GridAxis::new(n, 6.0 * std_s)?,
            GridAxis::new(n, 6.0 * std_i)?,
        ))
    }
}

/// Marginal standard deviations of `|f|²` along `ν_s` and `ν_i` for the
/// Gaussian pump × phase-matching model (dispersion does not change `|f|`).
pub fn gaussian_marginal_std(walkoffs: &WalkoffPair, sigma_p: f64) -> Result<(f64, f64)> {
    if !(sigma_p.is_finite() && sigma_p > 0.0) {
        return Err(Error::validation("pump.sigma", format!("must be > 0, got {sigma_p}")));
    }
    // |f|² = exp(−νᵀRν), R = 11ᵀ/σ² + (γ/2) ττᵀ; covariance = R⁻¹/2
    let inv_s2 = 1.0 / (sigma_p * sigma_p);
    let (ts, ti) = (walkoffs.signal, walkoffs.idler);
    let r_ss = inv_s2 + 0.5 * GAMMA * ts * ts;
    let r_ii = inv_s2 + 0.5 * GAMMA * ti * ti;
    let det = 0.5 * GAMMA * inv_s2 * (ti - ts).powi(2);
    if !(det.is_finite() && det > 0.0) {
        return Err(Error::Degenerate(
            "τ_s = τ_i: the amplitude is unbounded along the difference frequency".into(),
        ));
    }
    Ok(((r_ii / (2.0 * det)).sqrt(), (r_ss / (2.0 * det)).sqrt()))
}

/// Pump envelope `α = exp(−ν_sum² / 2σ_p²)`.
pub fn pump_envelope(nu_sum: f64, sigma_p: f64) -> f64 {
    (-(nu_sum * nu_sum) / (2.0 * sigma_p * sigma_p)).exp()
}

/// First-order phase mismatch `L Δk = τ_s ν_s + τ_i ν_i` (the central
/// mismatch is zero by construction of the poling period).
pub fn phase_mismatch(walkoffs: &WalkoffPair, nu_s: f64, nu_i: f64) -> f64 {
    walkoffs.signal * nu_s + walkoffs.idler * nu_i
}

/// `exp(−γ (LΔk/2)²) · exp(i LΔk/2)`.
pub fn phase_matching_amplitude(l_delta_k: f64) -> Complex64 {
    let half = 0.5 * l_delta_k;
    Complex64::from_polar((-GAMMA * half * half).exp(), half)
}

/// External dispersion `exp(i(β_s ν_s² + β_i ν_i²))`.
pub fn dispersion_phase(nu_s: f64, nu_i: f64, beta_s: f64, beta_i: f64) -> Complex64 {
    Complex64::from_polar(1.0, beta_s * nu_s * nu_s + beta_i * nu_i * nu_i)
}

/// Orientation of the phase-matching ridge, `Θ = −arctan(τ_s/τ_i)`, in
/// `(−π/2, π/2]`. A vanishing idler walk-off gives `π/2`.
pub fn pmf_angle(walkoffs: &WalkoffPair) -> Result<f64> {
    let (ts, ti) = (walkoffs.signal, walkoffs.idler);
    if ts == 0.0 && ti == 0.0 {
        return Err(Error::Degenerate(
            "both walk-offs vanish; the ridge has no orientation".into(),
        ));
    }
    if ti == 0.0 {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    Ok(-(ts / ti).atan())
}

/// Which factors of `α·φ·D` were multiplied in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JsaFactors {
    pub pump: bool,
    pub phase_matching: bool,
    pub dispersion: bool,
}

/// A sampled, peak-normalised joint spectral amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: DetuningGrid,
    /// Row-major: `values[j * n_i + k] = f(ν_s[j], ν_i[k])`.
    values: Vec<Complex64>,
    pub factors: JsaFactors,
    pub walkoffs: Option<WalkoffPair>,
    pub sigma_p: Option<f64>,
    pub beta_s: f64,
    pub beta_i: f64,
}

impl JointSpectralAmplitude {
    /// Samples an arbitrary amplitude. No factor flags are set and the result
    /// is not normalised.
    pub fn from_fn(grid: DetuningGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let nu_i = grid.idler.nodes();
        let mut values = Vec::with_capacity(grid.signal.n * grid.idler.n);
        for j in 0..grid.signal.n {
            let nu_s = grid.signal.node(j);
            values.extend(nu_i.iter().map(|&nu_i| f(nu_s, nu_i)));
        }
        JointSpectralAmplitude {
            grid,
            values,
            factors: JsaFactors::default(),
            walkoffs: None,
            sigma_p: None,
            beta_s: 0.0,
            beta_i: 0.0,
        }
    }

    /// The full model `α·φ·D` for given walk-offs and pump width, peak-normalised.
    pub fn from_model(
        walkoffs: WalkoffPair,
        sigma_p: f64,
        grid: DetuningGrid,
        beta_s: f64,
        beta_i: f64,
    ) -> Result<Self> {
        if !(sigma_p.is_finite() && sigma_p > 0.0) {
            return Err(Error::validation("pump.sigma", format!("must be > 0, got {sigma_p}")));
        }
        let dispersive = beta_s != 0.0 || beta_i != 0.0;
        let mut jsa = Self::from_fn(grid, |nu_s, nu_i| {
            let mut f =
                phase_matching_amplitude(phase_mismatch(&walkoffs, nu_s, nu_i)) * pump_envelope(nu_s + nu_i, sigma_p);
            if dispersive {
                f *= dispersion_phase(nu_s, nu_i, beta_s, beta_i);
            }
            f
        });
        jsa.factors = JsaFactors {
            pump: true,
            phase_matching: true,
            dispersion: dispersive,
        };
        jsa.walkoffs = Some(walkoffs);
        jsa.sigma_p = Some(sigma_p);
        jsa.beta_s = beta_s;
        jsa.beta_i = beta_i;
        jsa.normalize_peak()?;
        jsa.check_coverage()?;
        Ok(jsa)
    }

    pub fn grid(&self) -> &DetuningGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * self.grid.idler.n + k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.values.chunks_exact(self.grid.idler.n)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∬|f|² dν_s dν_i` by the trapezoid-equivalent rectangle rule on the grid.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Delay between the orthogonally polarised photons at the crystal exit
    /// carried by the phase of φ, `(τ_i − τ_s)/2`. Coincidence scans are
    /// measured relative to it.
    pub fn birefringent_delay(&self) -> f64 {
        match (self.factors.phase_matching, self.walkoffs) {
            (true, Some(w)) => 0.5 * w.difference(),
            _ => 0.0,
        }
    }

    /// Multiplies every sample by `z` (global phase and/or scale).
    pub fn scaled(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= z);
        out
    }

    /// Same amplitude with signal and idler exchanged, `g(ν_s, ν_i) = f(ν_i, ν_s)`.
    pub fn transposed(&self) -> Self {
        let (ns, ni) = (self.grid.signal.n, self.grid.idler.n);
        let mut values = Vec::with_capacity(ns * ni);
        for k in 0..ni {
            values.extend((0..ns).map(|j| self.values[j * ni + k]));
        }
        JointSpectralAmplitude {
            grid: DetuningGrid::new(self.grid.idler, self.grid.signal),
            values,
            factors: self.factors,
            walkoffs: self.walkoffs.map(|w| WalkoffPair::new(w.idler, w.signal)),
            sigma_p: self.sigma_p,
            beta_s: self.beta_i,
            beta_i: self.beta_s,
        }
    }

    fn normalize_peak(&mut self) -> Result<()> {
        let peak = self.max_abs();
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::Contract(format!("amplitude peak is {peak}; cannot normalise")));
        }
        let inv = 1.0 / peak;
        self.values.iter_mut().for_each(|v| *v *= inv);
        Ok(())
    }

    /// Marginal standard deviations of `|f|²` measured on the grid.
    pub fn marginal_std(&self) -> (f64, f64) {
        let ns = self.grid.signal.n;
        let ni = self.grid.idler.n;
        let mut ps = vec![0.0; ns];
        let mut pi = vec![0.0; ni];
        for j in 0..ns {
            for k in 0..ni {
                let w = self.values[j * ni + k].norm_sqr();
                ps[j] += w;
                pi[k] += w;
            }
        }
        (axis_std(&self.grid.signal, &ps), axis_std(&self.grid.idler, &pi))
    }

    /// Checks that each axis spans at least six marginal standard deviations.
    pub fn check_coverage(&self) -> Result<()> {
        let (std_s, std_i) = self.marginal_std();
        for (name, axis, std) in [("signal", self.grid.signal, std_s), ("idler", self.grid.idler, std_i)] {
            let span = 2.0 * axis.half_span;
            if !(std.is_finite() && span >= 6.0 * std) {
                return Err(Error::GridCoverage(format!(
                    "{name} axis spans {span:e} rad/s but the marginal standard deviation is {std:e} rad/s"
                )));
            }
        }
        Ok(())
    }

    /// Long-form CSV: one row per grid node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["nu_s_rad_s", "nu_i_rad_s", "re_f", "im_f"])?;
        let nu_i = self.grid.idler.nodes();
        for (j, row) in self.rows().enumerate() {
            let nu_s = fmt_sig(self.grid.signal.node(j));
            for (k, v) in row.iter().enumerate() {
                w.write_record([nu_s.as_str(), &fmt_sig(nu_i[k]), &fmt_sig(v.re), &fmt_sig(v.im)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `|f|` as a matrix: header row holds the idler detunings, each
    /// following row starts with its signal detuning.
    pub fn write_magnitude_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["nu_s_rad_s\\nu_i_rad_s".to_owned()];
        header.extend(self.grid.idler.nodes().into_iter().map(fmt_sig));
        w.write_record(&header)?;
        for (j, row) in self.rows().enumerate() {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(fmt_sig(self.grid.signal.node(j)));
            rec.extend(row.iter().map(|v| fmt_sig(v.norm())));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn axis_std(axis: &GridAxis, weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean = weights.iter().enumerate().map(|(j, w)| axis.node(j) * w).sum::<f64>() / total;
    let var = weights
        .iter()
        .enumerate()
        .map(|(j, w)| (axis.node(j) - mean).powi(2) * w)
        .sum::<f64>()
        / total;
    var.sqrt()
}

/// Nine significant digits, scientific notation.
pub(crate) fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        x.to_string()
    }
}

/// Builds the JSA for `crystal` pumped by `pump`, with lumped external
/// dispersion `β_s`, `β_i` in the signal and idler arms.
pub fn assemble_jsa(
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    grid: DetuningGrid,
    beta_s: f64,
    beta_i: f64,
) -> Result<JointSpectralAmplitude> {
    if (crystal.pump_wavelength() - pump.wavelength).abs() > 1e-6 * NM {
        return Err(Error::Contract(format!(
            "crystal is poled for {:.3} nm but the pump is at {:.3} nm",
            crystal.pump_wavelength() / NM,
            pump.wavelength / NM
        )));
    }
    JointSpectralAmplitude::from_model(crystal.walkoffs()?, pump.sigma(), grid, beta_s, beta_i)
}
