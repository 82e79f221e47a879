//! Material dispersion of the nonlinear crystal.
//!
//! Refractive indices come from a two-axis Sellmeier set of the form
//!
//! ```text
//! n²(λ) = A + Σ_k B_k / (λ² − C_k)        λ in µm
//! ```
//!
//! and everything downstream (group velocities, temporal walk-offs, the
//! quasi-phase-matching period) is derived from it. The process is type-II,
//! collinear and frequency degenerate: the pump and the signal are polarised
//! along the TE axis, the idler along TM, and `λ_s = λ_i = 2 λ_p`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::units::NM;
use crate::{Error, Result, SPEED_OF_LIGHT};

const BUILTIN_KTP: &str = include_str!("../data/ktp_kato2002.json");

/// Finite-difference step used by [`SellmeierSet::group_index_fd`].
pub const FD_STEP: f64 = 0.01 * NM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolarizationAxis {
    /// Ordinary-like axis carrying the pump and the signal.
    TE,
    /// Extraordinary-like axis carrying the idler.
    TM,
}

impl PolarizationAxis {
    pub fn name(self) -> &'static str {
        match self {
            PolarizationAxis::TE => "TE",
            PolarizationAxis::TM => "TM",
        }
    }
}

impl fmt::Display for PolarizationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sellmeier coefficients of one polarisation axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDispersion {
    /// `[A, B_1, C_1, B_2, C_2, ...]`, with `C_k` in µm².
    pub coefficients: Vec<f64>,
    /// Validity interval in metres.
    pub valid_range: (f64, f64),
    pub citation: String,
}

impl AxisDispersion {
    fn index_squared_and_slope(&self, wavelength_um: f64) -> (f64, f64) {
        let x = wavelength_um * wavelength_um;
        let mut n2 = self.coefficients[0];
        let mut dn2 = 0.0;
        for pole in self.coefficients[1..].chunks_exact(2) {
            let (b, c) = (pole[0], pole[1]);
            let d = x - c;
            n2 += b / d;
            dn2 -= 2.0 * b * wavelength_um / (d * d);
        }
        (n2, dn2)
    }
}

/// Two-axis Sellmeier data for one crystal at fixed (room) temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierSet {
    pub material: String,
    pub te: AxisDispersion,
    pub tm: AxisDispersion,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierFile {
    material: Option<String>,
    #[allow(dead_code)]
    form: Option<String>,
    axes: Vec<SellmeierAxisRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierAxisRecord {
    axis: PolarizationAxis,
    #[allow(dead_code)]
    crystal_axis: Option<String>,
    coefficients: Vec<f64>,
    valid_range_nm: [f64; 2],
    citation: String,
}

impl SellmeierSet {
    /// KTP, Kato & Takaoka (2002): `n_y` on TE, `n_z` on TM.
    pub fn ktp() -> Self {
        Self::from_json_str(BUILTIN_KTP).expect("bundled Sellmeier data is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Json(source) => Error::Parse {
                path: path.to_owned(),
                source,
            },
            other => other,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SellmeierFile = serde_json::from_str(text)?;
        let mut te = None;
        let mut tm = None;
        for (i, rec) in file.axes.into_iter().enumerate() {
            let field = format!("axes[{i}]");
            let parsed = Self::validate_axis(&field, rec.coefficients, rec.valid_range_nm, rec.citation)?;
            let slot = match rec.axis {
                PolarizationAxis::TE => &mut te,
                PolarizationAxis::TM => &mut tm,
            };
            if slot.replace(parsed).is_some() {
                return Err(Error::validation(
                    format!("{field}.axis"),
                    format!("axis {} listed more than once", rec.axis),
                ));
            }
        }
        let te = te.ok_or_else(|| Error::validation("axes", "missing TE axis"))?;
        let tm = tm.ok_or_else(|| Error::validation("axes", "missing TM axis"))?;
        let set = SellmeierSet {
            material: file.material.unwrap_or_else(|| "unnamed".to_owned()),
            te,
            tm,
        };
        set.check_physical()?;
        Ok(set)
    }

    fn validate_axis(
        field: &str,
        coefficients: Vec<f64>,
        range_nm: [f64; 2],
        citation: String,
    ) -> Result<AxisDispersion> {
        if coefficients.is_empty() || coefficients.len() % 2 == 0 {
            return Err(Error::validation(
                format!("{field}.coefficients"),
                format!(
                    "expected [A, B_1, C_1, ...] with an odd number of entries, got {}",
                    coefficients.len()
                ),
            ));
        }
        if let Some(j) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::validation(
                format!("{field}.coefficients[{j}]"),
                "coefficient is not finite",
            ));
        }
        let [lo, hi] = range_nm;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(Error::validation(
                format!("{field}.valid_range_nm"),
                format!("expected 0 < min < max, got [{lo}, {hi}]"),
            ));
        }
        if citation.trim().is_empty() {
            return Err(Error::validation(
                format!("{field}.citation"),
                "a literature citation is required",
            ));
        }
        Ok(AxisDispersion {
            coefficients,
            valid_range: (lo * NM, hi * NM),
            citation,
        })
    }

    /// Rejects coefficient sets that put a pole or an index ≤ 1 inside the
    /// declared validity range.
    fn check_physical(&self) -> Result<()> {
        for axis in [PolarizationAxis::TE, PolarizationAxis::TM] {
            let data = self.axis(axis);
            let (lo, hi) = data.valid_range;
            for pole in data.coefficients[1..].chunks_exact(2) {
                let pole_wl = pole[1].sqrt() * 1e-6;
                if pole[1] > 0.0 && pole_wl >= lo && pole_wl <= hi {
                    return Err(Error::validation(
                        format!("axes[{axis}].coefficients"),
                        format!("pole at {:.1} nm lies inside the validity range", pole_wl / NM),
                    ));
                }
            }
            const SAMPLES: usize = 256;
            for k in 0..=SAMPLES {
                let wl = lo + (hi - lo) * k as f64 / SAMPLES as f64;
                let n = self.refractive_index(axis, wl)?;
                if !(n.is_finite() && n > 1.0) {
                    return Err(Error::validation(
                        format!("axes[{axis}].coefficients"),
                        format!("n = {n} at {:.1} nm; expected a finite index > 1", wl / NM),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn axis(&self, axis: PolarizationAxis) -> &AxisDispersion {
        match axis {
            PolarizationAxis::TE => &self.te,
            PolarizationAxis::TM => &self.tm,
        }
    }

    fn check_range(&self, axis: PolarizationAxis, wavelength: f64) -> Result<()> {
        let (lo, hi) = self.axis(axis).valid_range;
        if wavelength.is_finite() && wavelength >= lo && wavelength <= hi {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                axis: axis.name(),
                wavelength_nm: wavelength / NM,
                min_nm: lo / NM,
                max_nm: hi / NM,
            })
        }
    }

    /// Phase index `n(λ)`; `wavelength` in metres.
    pub fn refractive_index(&self, axis: PolarizationAxis, wavelength: f64) -> Result<f64> {
        self.check_range(axis, wavelength)?;
        let (n2, _) = self.axis(axis).index_squared_and_slope(wavelength * 1e6);
        Ok(n2.sqrt())
    }

    /// `dn/dλ` in 1/m, differentiated analytically.
    pub fn index_slope(&self, axis: PolarizationAxis, wavelength: f64) -> Result<f64> {
        self.check_range(axis, wavelength)?;
        let (n2, dn2) = self.axis(axis).index_squared_and_slope(wavelength * 1e6);
        Ok(dn2 / (2.0 * n2.sqrt()) * 1e6)
    }

    /// Group index `n − λ dn/dλ`.
    pub fn group_index(&self, axis: PolarizationAxis, wavelength: f64) -> Result<f64> {
        let n = self.refractive_index(axis, wavelength)?;
        Ok(n - wavelength * self.index_slope(axis, wavelength)?)
    }

    /// Group index with `dn/dλ` from a central difference of step [`FD_STEP`].
    pub fn group_index_fd(&self, axis: PolarizationAxis, wavelength: f64) -> Result<f64> {
        let n = self.refractive_index(axis, wavelength)?;
        let up = self.refractive_index(axis, wavelength + FD_STEP)?;
        let down = self.refractive_index(axis, wavelength - FD_STEP)?;
        Ok(n - wavelength * (up - down) / (2.0 * FD_STEP))
    }

    /// Wavevector `2π n / λ` in rad/m.
    pub fn wavenumber(&self, axis: PolarizationAxis, wavelength: f64) -> Result<f64> {
        Ok(2.0 * std::f64::consts::PI * self.refractive_index(axis, wavelength)? / wavelength)
    }

    /// Material phase mismatch `k_p − k_s − k_i` (rad/m) at the degenerate
    /// central frequencies, without any grating contribution.
    pub fn material_mismatch(&self, pump_wavelength: f64) -> Result<f64> {
        let daughter = 2.0 * pump_wavelength;
        Ok(self.wavenumber(PolarizationAxis::TE, pump_wavelength)?
            - self.wavenumber(PolarizationAxis::TE, daughter)?
            - self.wavenumber(PolarizationAxis::TM, daughter)?)
    }

    /// First-order poling period that cancels the central phase mismatch.
    ///
    /// A periodically reversed `χ⁽²⁾` has grating components at `±2π/Λ`; the
    /// one opposing the material mismatch is used, so `Λ = 2π / |Δk_mat|`.
    pub fn qpm_period_for(&self, pump_wavelength: f64) -> Result<f64> {
        let mismatch = self.material_mismatch(pump_wavelength)?;
        let period = 2.0 * std::f64::consts::PI / mismatch.abs();
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Degenerate(format!(
                "no finite poling period phase-matches a {:.3} nm pump (material mismatch {mismatch:e} rad/m)",
                pump_wavelength / NM
            )));
        }
        Ok(period)
    }
}

/// Phase-matching geometry. Only one is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseMatchingType {
    #[default]
    TypeIICollinearDegenerate,
}

/// A periodically poled crystal phase-matched for one pump wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    length: f64,
    sellmeier: SellmeierSet,
    pump_wavelength: f64,
    poling_period: f64,
    pub phase_matching: PhaseMatchingType,
}

impl CrystalSpec {
    /// Builds a crystal of `length` (m) whose poling period phase-matches
    /// degenerate down-conversion of `pump_wavelength` (m).
    pub fn new(length: f64, sellmeier: SellmeierSet, pump_wavelength: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::validation(
                "crystal.length",
                format!("must be > 0, got {length}"),
            ));
        }
        let poling_period = sellmeier.qpm_period_for(pump_wavelength)?;
        let crystal = CrystalSpec {
            length,
            sellmeier,
            pump_wavelength,
            poling_period,
            phase_matching: PhaseMatchingType::default(),
        };
        // signal/idler must also be inside the validity window
        crystal.walkoffs()?;
        Ok(crystal)
    }

    /// Same crystal, re-poled for another pump wavelength.
    pub fn retuned(&self, pump_wavelength: f64) -> Result<Self> {
        Self::new(self.length, self.sellmeier.clone(), pump_wavelength)
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(length, self.sellmeier.clone(), self.pump_wavelength)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn sellmeier(&self) -> &SellmeierSet {
        &self.sellmeier
    }

    pub fn pump_wavelength(&self) -> f64 {
        self.pump_wavelength
    }

    /// Degenerate signal/idler central wavelength, `2 λ_p`.
    pub fn daughter_wavelength(&self) -> f64 {
        2.0 * self.pump_wavelength
    }

    pub fn poling_period(&self) -> f64 {
        self.poling_period
    }

    /// Residual central mismatch `Δk⁰` (rad/m) including the grating.
    pub fn central_mismatch(&self) -> Result<f64> {
        let mismatch = self.sellmeier.material_mismatch(self.pump_wavelength)?;
        let grating = 2.0 * std::f64::consts::PI / self.poling_period;
        Ok(mismatch - mismatch.signum() * grating)
    }

    /// Group velocity `c / (n − λ dn/dλ)` in m/s.
    pub fn group_velocity(&self, axis: PolarizationAxis, wavelength: f64) -> Result<f64> {
        Ok(SPEED_OF_LIGHT / self.sellmeier.group_index(axis, wavelength)?)
    }

    /// Temporal walk-offs `τ_μ = L (1/u_μ − 1/u_p)` at the crystal's pump wavelength.
    pub fn walkoffs(&self) -> Result<WalkoffPair> {
        walkoffs_at(&self.sellmeier, self.length, self.pump_wavelength)
    }
}

/// Signal and idler walk-offs relative to the pump, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkoffPair {
    pub signal: f64,
    pub idler: f64,
}

impl WalkoffPair {
    pub fn new(signal: f64, idler: f64) -> Self {
        WalkoffPair { signal, idler }
    }

    /// `τ_i − τ_s`: the signal/idler group-delay difference across the crystal.
    pub fn difference(&self) -> f64 {
        self.idler - self.signal
    }

    /// `τ_i + τ_s`.
    pub fn sum(&self) -> f64 {
        self.idler + self.signal
    }

    pub fn max_abs(&self) -> f64 {
        self.signal.abs().max(self.idler.abs())
    }
}

/// Walk-offs for a crystal of `length` pumped at `pump_wavelength`, signal on
/// TE and idler on TM at twice the pump wavelength.
pub fn walkoffs_at(sellmeier: &SellmeierSet, length: f64, pump_wavelength: f64) -> Result<WalkoffPair> {
    let daughter = 2.0 * pump_wavelength;
    let pump = sellmeier.group_index(PolarizationAxis::TE, pump_wavelength)?;
    let signal = sellmeier.group_index(PolarizationAxis::TE, daughter)?;
    let idler = sellmeier.group_index(PolarizationAxis::TM, daughter)?;
    Ok(WalkoffPair {
        signal: length * (signal - pump) / SPEED_OF_LIGHT,
        idler: length * (idler - pump) / SPEED_OF_LIGHT,
    })
}

/// Pump wavelength in `[lo, hi]` where the pump and idler group velocities
/// coincide (`τ_i = 0`).
pub fn group_velocity_matched_pump(sellmeier: &SellmeierSet, lo: f64, hi: f64) -> Result<f64> {
    bisect(|wl| walkoffs_at(sellmeier, 1.0, wl).map(|w| w.idler), lo, hi)
}

/// Pump wavelength in `[lo, hi]` where the walk-offs are antisymmetric
/// (`τ_s + τ_i = 0`).
pub fn antisymmetric_walkoff_pump(sellmeier: &SellmeierSet, lo: f64, hi: f64) -> Result<f64> {
    bisect(|wl| walkoffs_at(sellmeier, 1.0, wl).map(|w| w.sum()), lo, hi)
}

fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Degenerate(format!(
            "no sign change between {:.3} nm and {:.3} nm",
            lo / NM,
            hi / NM
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-9 * NM {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::MM;

    fn ktp() -> SellmeierSet {
        SellmeierSet::ktp()
    }

    // Hand evaluation of n_z² = 4.59423 + 0.06206/(λ²−0.04763) + 110.80672/(λ²−86.12171)
    // at λ = 1.064 µm: λ² = 1.132096; 0.06206/1.084466 = 0.0572263;
    // 110.80672/(−84.989614) = −1.3037678; n² = 3.3476885; n = 1.8296690.
    #[test]
    fn tm_index_at_1064_matches_hand_evaluation() {
        let n = ktp().refractive_index(PolarizationAxis::TM, 1064.0 * NM).unwrap();
        assert!((n - 1.829_669_0).abs() < 2e-7, "n = {n}");
    }

    #[test]
    fn index_is_deterministic() {
        let a = ktp().refractive_index(PolarizationAxis::TE, 1064.0 * NM).unwrap();
        let b = ktp().refractive_index(PolarizationAxis::TE, 1064.0 * NM).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn normal_dispersion_on_te() {
        let s = ktp();
        let visible = s.refractive_index(PolarizationAxis::TE, 633.0 * NM).unwrap();
        let nir = s.refractive_index(PolarizationAxis::TE, 1064.0 * NM).unwrap();
        assert!(visible > nir);
    }

    #[test]
    fn out_of_range_names_interval() {
        let err = ktp().refractive_index(PolarizationAxis::TE, 200.0 * NM).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::OutOfRange { .. }));
        assert!(msg.contains("430") && msg.contains("3540"), "{msg}");
    }

    #[test]
    fn analytic_group_index_matches_finite_difference() {
        let s = ktp();
        for axis in [PolarizationAxis::TE, PolarizationAxis::TM] {
            for nm in [500.0, 620.0, 810.0, 1240.0, 1620.0, 3000.0] {
                let a = s.group_index(axis, nm * NM).unwrap();
                let fd = s.group_index_fd(axis, nm * NM).unwrap();
                assert!(((a - fd) / a).abs() < 1e-6, "{axis} {nm}: {a} vs {fd}");
            }
        }
    }

    #[test]
    fn group_velocity_below_c() {
        let crystal = CrystalSpec::new(10.0 * MM, ktp(), 810.0 * NM).unwrap();
        for nm in (450..3500).step_by(50) {
            for axis in [PolarizationAxis::TE, PolarizationAxis::TM] {
                let u = crystal.group_velocity(axis, nm as f64 * NM).unwrap();
                assert!(u > 0.0 && u < SPEED_OF_LIGHT);
            }
        }
    }

    #[test]
    fn te_pump_meets_tm_idler_between_600_and_640_nm() {
        let wl = group_velocity_matched_pump(&ktp(), 590.0 * NM, 700.0 * NM).unwrap();
        assert!(wl > 600.0 * NM && wl < 640.0 * NM, "{}", wl / NM);
        let crystal = CrystalSpec::new(10.0 * MM, ktp(), wl).unwrap();
        let du = crystal.group_velocity(PolarizationAxis::TE, wl).unwrap()
            - crystal.group_velocity(PolarizationAxis::TM, 2.0 * wl).unwrap();
        assert!(du.abs() < 1.0, "Δu = {du} m/s");
        assert!(crystal.walkoffs().unwrap().idler.abs() < 1e-18);
    }

    #[test]
    fn antisymmetric_root_is_near_800_nm() {
        let wl = antisymmetric_walkoff_pump(&ktp(), 700.0 * NM, 810.0 * NM).unwrap();
        assert!(wl > 770.0 * NM && wl < 810.0 * NM, "{}", wl / NM);
    }

    #[test]
    fn walkoffs_scale_linearly_with_length() {
        let a = CrystalSpec::new(10.0 * MM, ktp(), 750.0 * NM).unwrap();
        let b = a.with_length(20.0 * MM).unwrap();
        let (wa, wb) = (a.walkoffs().unwrap(), b.walkoffs().unwrap());
        assert_eq!(wb.signal, 2.0 * wa.signal);
        assert_eq!(wb.idler, 2.0 * wa.idler);
    }

    #[test]
    fn qpm_period_cancels_mismatch_over_sweep() {
        let s = ktp();
        for nm in 590..=810 {
            let crystal = CrystalSpec::new(10.0 * MM, s.clone(), nm as f64 * NM).unwrap();
            let period = crystal.poling_period();
            assert!(period.is_finite() && period > 0.0);
            let residual = crystal.central_mismatch().unwrap();
            assert!(residual.abs() < 1e-6 * 2.0 * std::f64::consts::PI / period);
        }
        let a = s.qpm_period_for(700.0 * NM).unwrap();
        let b = s.qpm_period_for(700.0 * NM).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn walkoffs_reject_daughter_outside_range() {
        let err = CrystalSpec::new(10.0 * MM, ktp(), 1900.0 * NM).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_length() {
        let err = CrystalSpec::new(-1.0, ktp(), 810.0 * NM).unwrap_err();
        assert!(err.to_string().contains("crystal.length"));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let missing_tm = r#"{"axes":[{"axis":"TE","coefficients":[3.0],"valid_range_nm":[400,2000],"citation":"x"}]}"#;
        let err = SellmeierSet::from_json_str(missing_tm).unwrap_err();
        assert!(err.to_string().contains("TM"), "{err}");

        let even = r#"{"axes":[
            {"axis":"TE","coefficients":[3.0, 0.1],"valid_range_nm":[400,2000],"citation":"x"},
            {"axis":"TM","coefficients":[3.0],"valid_range_nm":[400,2000],"citation":"x"}]}"#;
        let err = SellmeierSet::from_json_str(even).unwrap_err();
        assert!(err.to_string().contains("axes[0].coefficients"), "{err}");

        let range = r#"{"axes":[
            {"axis":"TE","coefficients":[3.0],"valid_range_nm":[2000,400],"citation":"x"},
            {"axis":"TM","coefficients":[3.0],"valid_range_nm":[400,2000],"citation":"x"}]}"#;
        let err = SellmeierSet::from_json_str(range).unwrap_err();
        assert!(err.to_string().contains("axes[0].valid_range_nm"), "{err}");

        let sub_unity = r#"{"axes":[
            {"axis":"TE","coefficients":[0.5],"valid_range_nm":[400,2000],"citation":"x"},
            {"axis":"TM","coefficients":[3.0],"valid_range_nm":[400,2000],"citation":"x"}]}"#;
        assert!(SellmeierSet::from_json_str(sub_unity).is_err());

        let unknown = r#"{"axes":[], "bogus": 1}"#;
        assert!(matches!(SellmeierSet::from_json_str(unknown), Err(Error::Json(_))));
    }

    #[test]
    fn bundled_set_carries_citations() {
        let s = ktp();
        assert!(s.te.citation.contains("Kato"));
        assert!(s.tm.citation.contains("Kato"));
    }
}
