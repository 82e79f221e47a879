//! Run configuration: a JSON file mirroring the CLI flags, with defaults.
//!
//! ```json
//! {
//!   "crystal": { "length_mm": 10, "sellmeier_file": "ktp.json" },
//!   "pump": { "wavelength_nm": 810, "fwhm_nm": 4, "bandwidth_convention": "intensity-fwhm" },
//!   "dispersion": { "beta_s": 1e-25, "beta_i": 0 },
//!   "grid": { "n": 512 },
//!   "scan": { "points": 401 },
//!   "sweep": { "start_nm": 590, "stop_nm": 810, "step_nm": 1, "mode": "local" }
//! }
//! ```
//!
//! Every section and field is optional. Physical quantities are given in
//! nm, mm and s² and converted to SI on load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sweep::{SchmidtMethod, SweepSpec, SweepVariable, WidthMethod, BETA_REF};
use crate::biphoton::{Arm, BandwidthConvention, PumpSpec, DEFAULT_GRID_N};
use crate::coincidence::{DetectionMode, DEFAULT_SCAN_POINTS};
use crate::dispersion::{CrystalSpec, SellmeierSet};
use crate::units::{MM, NM};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub crystal: CrystalSection,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default)]
    pub dispersion: DispersionSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub length_mm: Option<f64>,
    pub sellmeier_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub wavelength_nm: Option<f64>,
    pub fwhm_nm: Option<f64>,
    pub bandwidth_convention: Option<BandwidthConvention>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    pub beta_s: Option<f64>,
    pub beta_i: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start_nm: Option<f64>,
    pub stop_nm: Option<f64>,
    pub step_nm: Option<f64>,
    pub beta_ref: Option<f64>,
    pub arm: Option<Arm>,
    pub mode: Option<DetectionMode>,
    pub width_method: Option<WidthMethod>,
    pub schmidt_method: Option<SchmidtMethod>,
    pub grid_n: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub pump_nm: Option<f64>,
    pub pump_fwhm_nm: Option<f64>,
    pub bandwidth_convention: Option<BandwidthConvention>,
    pub crystal: Option<PathBuf>,
    pub length_mm: Option<f64>,
    pub beta_s: Option<f64>,
    pub beta_i: Option<f64>,
    pub grid_n: Option<usize>,
}

/// A validated configuration in SI units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// m
    pub length: f64,
    #[serde(skip)]
    pub sellmeier: SellmeierSet,
    /// `builtin:KTP` or the path the coefficients were read from.
    pub sellmeier_source: String,
    pub pump: PumpSpec,
    /// rad/s
    pub sigma_p: f64,
    /// s²
    pub beta_s: f64,
    pub beta_i: f64,
    pub grid_n: usize,
    pub scan_points: usize,
    pub sweep: SweepSpec,
}

impl RunConfig {
    pub fn crystal(&self) -> Result<CrystalSpec> {
        CrystalSpec::new(self.length, self.sellmeier.clone(), self.pump.wavelength)
    }

    /// Writes every resolved physical value to the log.
    pub fn log(&self) {
        log::info!(
            "crystal length L = {:e} m, Sellmeier data: {}",
            self.length,
            self.sellmeier_source
        );
        log::info!(
            "pump λ_p = {:e} m, bandwidth = {:e} m ({}), σ_p = {:e} rad/s",
            self.pump.wavelength,
            self.pump.bandwidth,
            self.pump.convention.as_str(),
            self.sigma_p
        );
        log::info!("β_s = {:e} s², β_i = {:e} s²", self.beta_s, self.beta_i);
        log::info!("grid N = {}, delay samples = {}", self.grid_n, self.scan_points);
        log::info!(
            "sweep [{:e}, {:e}] m step {:e} m, β_ref = {:e} s² in the {:?} arm, {:?} detection",
            self.sweep.start,
            self.sweep.stop,
            self.sweep.step,
            self.sweep.beta_ref,
            self.sweep.arm,
            self.sweep.mode
        );
    }
}

/// Reads and validates `path`; relative Sellmeier paths resolve against the
/// file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    resolve_config(Some(path.as_ref()), &ConfigOverrides::default())
}

/// Merges an optional config file with command-line overrides.
pub fn resolve_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<RunConfig> {
    let (file, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Read {
                path: p.to_owned(),
                source,
            })?;
            let file: ConfigFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
                path: p.to_owned(),
                source,
            })?;
            (file, p.parent().map(Path::to_owned))
        }
        None => (ConfigFile::default(), None),
    };
    let config = build(file, base.as_deref(), overrides)?;
    config.log();
    Ok(config)
}

pub fn config_from_str(text: &str, overrides: &ConfigOverrides) -> Result<RunConfig> {
    build(serde_json::from_str(text)?, None, overrides)
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::validation(field, format!("must be > 0, got {value}")))
    }
}

fn finite(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(field, format!("must be finite, got {value}")))
    }
}

fn build(file: ConfigFile, base: Option<&Path>, o: &ConfigOverrides) -> Result<RunConfig> {
    let length = positive(
        "crystal.length_mm",
        o.length_mm.or(file.crystal.length_mm).unwrap_or(10.0),
    )? * MM;
    let (sellmeier, sellmeier_source) = match o.crystal.clone().or(file.crystal.sellmeier_file) {
        Some(p) => {
            let p = match (base, p.is_relative() && o.crystal.is_none()) {
                (Some(b), true) => b.join(p),
                _ => p,
            };
            (SellmeierSet::from_file(&p)?, p.display().to_string())
        }
        None => (SellmeierSet::ktp(), "builtin:KTP".to_owned()),
    };
    let wavelength = positive(
        "pump.wavelength_nm",
        o.pump_nm.or(file.pump.wavelength_nm).unwrap_or(810.0),
    )? * NM;
    let fwhm = positive("pump.fwhm_nm", o.pump_fwhm_nm.or(file.pump.fwhm_nm).unwrap_or(4.0))? * NM;
    let convention = o
        .bandwidth_convention
        .or(file.pump.bandwidth_convention)
        .unwrap_or_default();
    let pump = PumpSpec::new(wavelength, fwhm, convention)?;
    let beta_s = finite("dispersion.beta_s", o.beta_s.or(file.dispersion.beta_s).unwrap_or(0.0))?;
    let beta_i = finite("dispersion.beta_i", o.beta_i.or(file.dispersion.beta_i).unwrap_or(0.0))?;
    let grid_n = o.grid_n.or(file.grid.n).unwrap_or(DEFAULT_GRID_N);
    if grid_n < 16 {
        return Err(Error::validation(
            "grid.n",
            format!("need at least 16 samples, got {grid_n}"),
        ));
    }
    let scan_points = file.scan.points.unwrap_or(DEFAULT_SCAN_POINTS);
    if scan_points < 11 {
        return Err(Error::validation(
            "scan.points",
            format!("need at least 11 samples, got {scan_points}"),
        ));
    }

    let s = file.sweep;
    let sweep = SweepSpec {
        variable: SweepVariable::PumpWavelength,
        start: positive("sweep.start_nm", s.start_nm.unwrap_or(590.0))? * NM,
        stop: positive("sweep.stop_nm", s.stop_nm.unwrap_or(810.0))? * NM,
        step: positive("sweep.step_nm", s.step_nm.unwrap_or(1.0))? * NM,
        length,
        sellmeier: sellmeier.clone(),
        pump_wavelength: wavelength,
        bandwidth: fwhm,
        convention,
        beta_ref: finite("sweep.beta_ref", s.beta_ref.unwrap_or(BETA_REF))?,
        arm: s.arm.unwrap_or(Arm::Signal),
        mode: s.mode.unwrap_or(DetectionMode::Local),
        width_method: s.width_method.unwrap_or_default(),
        schmidt_method: s.schmidt_method.unwrap_or_default(),
        grid_n: s.grid_n.unwrap_or(super::sweep::SWEEP_GRID_N),
        scan_points,
    };
    if sweep.stop < sweep.start {
        return Err(Error::validation(
            "sweep.stop_nm",
            format!(
                "must not be below sweep.start_nm ({} < {})",
                sweep.stop / NM,
                sweep.start / NM
            ),
        ));
    }
    Ok(RunConfig {
        length,
        sellmeier,
        sellmeier_source,
        sigma_p: pump.sigma(),
        pump,
        beta_s,
        beta_i,
        grid_n,
        scan_points,
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = config_from_str("{}", &ConfigOverrides::default()).unwrap();
        assert_eq!(c.length, 10.0 * MM);
        assert_eq!(c.grid_n, DEFAULT_GRID_N);
        assert_eq!(c.scan_points, DEFAULT_SCAN_POINTS);
        assert_eq!(c.pump.convention, BandwidthConvention::IntensityFwhm);
        assert_eq!(c.sellmeier_source, "builtin:KTP");
    }

    #[test]
    fn negative_length_names_the_field() {
        let err = config_from_str(r#"{"crystal": {"length_mm": -3}}"#, &ConfigOverrides::default()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "crystal.length_mm"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = config_from_str(r#"{"pump": {"wavelenght_nm": 700}}"#, &ConfigOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("wavelenght_nm"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let o = ConfigOverrides {
            pump_nm: Some(700.0),
            beta_s: Some(2e-26),
            ..Default::default()
        };
        let c = config_from_str(
            r#"{"pump": {"wavelength_nm": 650}, "dispersion": {"beta_s": 1e-25}}"#,
            &o,
        )
        .unwrap();
        assert_eq!(c.pump.wavelength, 700.0 * NM);
        assert_eq!(c.beta_s, 2e-26);
    }

    #[test]
    fn convention_toggle_changes_sigma() {
        let a = config_from_str(
            r#"{"pump": {"bandwidth_convention": "intensity-fwhm"}}"#,
            &Default::default(),
        )
        .unwrap();
        let b = config_from_str(
            r#"{"pump": {"bandwidth_convention": "amplitude-sigma"}}"#,
            &Default::default(),
        )
        .unwrap();
        // hand check: 2πc·4 nm/(810 nm)² = 1.148393e13 rad/s
        assert!((b.sigma_p / 1.148_393e13 - 1.0).abs() < 1e-6);
        assert!((b.sigma_p / a.sigma_p - 2.354_820_045).abs() < 1e-8);
    }
}
