//! Named presets (`fig2` ... `fig7b`) that regenerate the data for each figure.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::sweep::{
    argmax_by, argmin_by, run_nonlocal_arm_comparison, run_wavelength_sweep, spearman, write_sweep_csv, SweepRow,
    SweepSpec, BETA_REF,
};
use crate::biphoton::{fmt_sig, pmf_angle, BandwidthConvention, DetuningGrid, JointSpectralAmplitude, PumpSpec};
use crate::coincidence::{ClosedFormContext, DelayScan, DetectionMode, LocalRateProfile, DEFAULT_SCAN_POINTS};
use crate::dispersion::{
    antisymmetric_walkoff_pump, group_velocity_matched_pump, CrystalSpec, PolarizationAxis, SellmeierSet,
};
use crate::schmidt::{schmidt_decompose, schmidt_number};
use crate::units::{MM, NM};
use crate::{Error, Result, SPEED_OF_LIGHT};

pub const FIGURE_TAGS: [&str; 10] = [
    "fig2", "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig6c", "fig6d", "fig7a", "fig7b",
];

/// Pump bandwidths of the four bandwidth panels, nm.
pub const FIG6_BANDWIDTHS_NM: [f64; 4] = [2.0, 1.0, 0.4, 0.1];
/// Pump bandwidths overlaid in each arm-placement panel, nm.
pub const FIG7_BANDWIDTHS_NM: [f64; 5] = [4.0, 2.0, 1.0, 0.4, 0.1];

const CRYSTAL_MM: f64 = 10.0;
const FIG2_PUMP_NM: f64 = 810.0;
const FIG2_FWHM_NM: f64 = 4.0;

/// In-memory result of a figure preset.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub tag: String,
    pub csv: Vec<u8>,
    pub summary: Value,
}

/// Files written by [`reproduce_figure`].
#[derive(Debug, Clone, PartialEq)]
pub struct FigureReport {
    pub tag: String,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub summary: Value,
}

pub fn reproduce_figure(tag: &str, out_dir: impl AsRef<Path>) -> Result<FigureReport> {
    let data = figure_data(tag)?;
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{tag}.csv"));
    let json_path = dir.join(format!("{tag}.json"));
    std::fs::write(&csv_path, &data.csv)?;
    std::fs::write(&json_path, serde_json::to_vec_pretty(&data.summary)?)?;
    Ok(FigureReport {
        tag: data.tag,
        csv_path,
        json_path,
        summary: data.summary,
    })
}

pub fn figure_data(tag: &str) -> Result<FigureData> {
    let (csv, summary) = match tag {
        "fig2" => fig2()?,
        "fig3" => fig3()?,
        "fig4" => fig4()?,
        "fig5" => bandwidth_panel(4.0, BandwidthConvention::AmplitudeSigma)?,
        "fig6a" => bandwidth_panel(FIG6_BANDWIDTHS_NM[0], BandwidthConvention::IntensityFwhm)?,
        "fig6b" => bandwidth_panel(FIG6_BANDWIDTHS_NM[1], BandwidthConvention::IntensityFwhm)?,
        "fig6c" => bandwidth_panel(FIG6_BANDWIDTHS_NM[2], BandwidthConvention::IntensityFwhm)?,
        "fig6d" => bandwidth_panel(FIG6_BANDWIDTHS_NM[3], BandwidthConvention::IntensityFwhm)?,
        "fig7a" => arm_panel(crate::biphoton::Arm::Signal)?,
        "fig7b" => arm_panel(crate::biphoton::Arm::Idler)?,
        _ => {
            return Err(Error::UnknownFigure {
                tag: tag.to_owned(),
                valid: FIGURE_TAGS.join(", "),
            })
        }
    };
    Ok(FigureData {
        tag: tag.to_owned(),
        csv,
        summary,
    })
}

fn fig2_setup() -> Result<(CrystalSpec, PumpSpec)> {
    let crystal = CrystalSpec::new(CRYSTAL_MM * MM, SellmeierSet::ktp(), FIG2_PUMP_NM * NM)?;
    let pump = PumpSpec::with_fwhm(FIG2_PUMP_NM * NM, FIG2_FWHM_NM * NM)?;
    Ok((crystal, pump))
}

/// Two numeric HOM dips at 810 nm: without dispersion and with `β_ref` on the signal.
pub fn fig2_curves(grid_n: usize) -> Result<(crate::CoincidenceCurve, crate::CoincidenceCurve, ClosedFormContext)> {
    let (crystal, pump) = fig2_setup()?;
    let w = crystal.walkoffs()?;
    let ctx = ClosedFormContext::new(w, pump.sigma())?;
    let grid = DetuningGrid::auto_square(&w, pump.sigma(), grid_n)?;
    let scan = DelayScan::for_width(ctx.fwhm_local(BETA_REF, 0.0)?, DEFAULT_SCAN_POINTS)?;
    let curve = |beta_s| -> Result<crate::CoincidenceCurve> {
        let jsa = crate::assemble_jsa(&crystal, &pump, grid, beta_s, 0.0)?;
        LocalRateProfile::new(&jsa)?.scan(&scan)
    };
    Ok((curve(0.0)?, curve(BETA_REF)?, ctx))
}

fn fig2() -> Result<(Vec<u8>, Value)> {
    let grid_n = crate::biphoton::DEFAULT_GRID_N;
    let (flat, dispersed, ctx) = fig2_curves(grid_n)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tau_s", "rate_beta0", "rate_beta_ref"])?;
    for ((t, a), b) in flat.taus.iter().zip(&flat.rates).zip(&dispersed.rates) {
        w.write_record([fmt_sig(*t), fmt_sig(*a), fmt_sig(*b)])?;
    }
    let summary = json!({
        "figure": "fig2",
        "preset": {
            "pump_wavelength_m": FIG2_PUMP_NM * NM,
            "pump_fwhm_m": FIG2_FWHM_NM * NM,
            "bandwidth_convention": BandwidthConvention::IntensityFwhm.as_str(),
            "sigma_p_rad_s": ctx.sigma_p,
            "crystal_length_m": CRYSTAL_MM * MM,
            "beta_ref_s2": BETA_REF,
            "beta_arm": "signal",
            "grid_n": grid_n,
            "scan_points": DEFAULT_SCAN_POINTS,
        },
        "walkoffs_s": { "tau_s": ctx.walkoffs.signal, "tau_i": ctx.walkoffs.idler },
        "numeric": {
            "fwhm_beta0_s": flat.fwhm,
            "fwhm_beta_ref_s": dispersed.fwhm,
            "broadening_ratio": dispersed.fwhm / flat.fwhm,
            "visibility_beta0": flat.visibility,
            "visibility_beta_ref": dispersed.visibility,
        },
        "closed_form": {
            "fwhm_beta0_s": ctx.fwhm_local(0.0, 0.0)?,
            "fwhm_beta_ref_s": ctx.fwhm_local(BETA_REF, 0.0)?,
            "visibility_beta_ref": ctx.visibility(BETA_REF, 0.0),
        },
    });
    Ok((w.into_inner().map_err(|e| Error::Io(e.into_error()))?, summary))
}

fn fig3() -> Result<(Vec<u8>, Value)> {
    let (crystal, pump) = fig2_setup()?;
    let w = crystal.walkoffs()?;
    let grid_n = 256;
    let grid = DetuningGrid::auto_square(&w, pump.sigma(), grid_n)?;
    let jsa: JointSpectralAmplitude = crate::assemble_jsa(&crystal, &pump, grid, 0.0, 0.0)?;
    let mut csv = Vec::new();
    jsa.write_magnitude_csv(&mut csv)?;
    let k = schmidt_number(&schmidt_decompose(&jsa)?)?;
    let summary = json!({
        "figure": "fig3",
        "preset": {
            "pump_wavelength_m": FIG2_PUMP_NM * NM,
            "pump_fwhm_m": FIG2_FWHM_NM * NM,
            "bandwidth_convention": BandwidthConvention::IntensityFwhm.as_str(),
            "sigma_p_rad_s": pump.sigma(),
            "crystal_length_m": CRYSTAL_MM * MM,
            "grid_n": grid_n,
            "grid_half_span_rad_s": grid.signal.half_span,
        },
        "walkoffs_s": { "tau_s": w.signal, "tau_i": w.idler },
        "theta_pmf_rad": pmf_angle(&w)?,
        "pump_envelope_angle_rad": -std::f64::consts::FRAC_PI_4,
        "schmidt_number": k,
        "degenerate_wavelength_m": crystal.daughter_wavelength(),
    });
    Ok((csv, summary))
}

fn fig4() -> Result<(Vec<u8>, Value)> {
    let s = SellmeierSet::ktp();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["wavelength_m", "group_velocity_te_m_s", "group_velocity_tm_m_s"])?;
    for nm in 500..=1400 {
        let wl = nm as f64 * NM;
        let u = |axis| s.group_index(axis, wl).map(|ng| SPEED_OF_LIGHT / ng);
        w.write_record([
            fmt_sig(wl),
            fmt_sig(u(PolarizationAxis::TE)?),
            fmt_sig(u(PolarizationAxis::TM)?),
        ])?;
    }
    let gvm = group_velocity_matched_pump(&s, 590.0 * NM, 810.0 * NM)?;
    let summary = json!({
        "figure": "fig4",
        "sellmeier": s.material,
        "pump_te_equals_idler_tm_at_pump_m": gvm,
        "idler_wavelength_m": 2.0 * gvm,
    });
    Ok((w.into_inner().map_err(|e| Error::Io(e.into_error()))?, summary))
}

/// Summary statistics shared by the Schmidt/broadening panels.
pub fn panel_summary(rows: &[SweepRow]) -> Result<Value> {
    let s = SellmeierSet::ktp();
    let gvm = group_velocity_matched_pump(&s, 590.0 * NM, 810.0 * NM)?;
    let anti = antisymmetric_walkoff_pump(&s, 590.0 * NM, 810.0 * NM)?;
    let k_min =
        argmin_by(rows, |r| r.schmidt_number).ok_or_else(|| Error::Contract("sweep has no valid rows".into()))?;
    let peak = argmax_by(rows, |r| r.delta_fwhm).ok_or_else(|| Error::Contract("sweep has no valid rows".into()))?;
    let ks: Vec<f64> = rows.iter().map(|r| r.schmidt_number).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.delta_fwhm).collect();
    Ok(json!({
        "group_velocity_matched_pump_m": gvm,
        "antisymmetric_walkoff_pump_m": anti,
        "schmidt_min": { "pump_wavelength_m": k_min.pump_wavelength, "schmidt_number": k_min.schmidt_number },
        "delta_fwhm_peak": { "pump_wavelength_m": peak.pump_wavelength, "delta_fwhm_s": peak.delta_fwhm },
        "spearman_k_vs_delta_fwhm": spearman(&ks, &ds),
        "failed_rows": rows.iter().filter(|r| !r.is_ok()).count(),
    }))
}

fn bandwidth_panel(bandwidth_nm: f64, convention: BandwidthConvention) -> Result<(Vec<u8>, Value)> {
    let spec = SweepSpec::wavelength_default(bandwidth_nm * NM, convention, DetectionMode::Local);
    let rows = run_wavelength_sweep(&spec)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv)?;
    let mut summary = json!({
        "preset": spec_json(&spec),
        "stats": panel_summary(&rows)?,
    });
    if convention == BandwidthConvention::AmplitudeSigma {
        // the same sweep with the bandwidth read as an intensity FWHM, for comparison
        let alt = SweepSpec::wavelength_default(
            bandwidth_nm * NM,
            BandwidthConvention::IntensityFwhm,
            DetectionMode::Local,
        );
        summary["intensity_fwhm_reading"] = panel_summary(&run_wavelength_sweep(&alt)?)?;
    }
    Ok((csv, summary))
}

fn arm_panel(arm: crate::biphoton::Arm) -> Result<(Vec<u8>, Value)> {
    let mut columns = Vec::new();
    let mut stats = Vec::new();
    let mut wavelengths = Vec::new();
    for bw in FIG7_BANDWIDTHS_NM {
        let spec = SweepSpec::wavelength_default(bw * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Nonlocal);
        let both = run_nonlocal_arm_comparison(&spec)?;
        let rows = match arm {
            crate::biphoton::Arm::Signal => both.signal_arm,
            crate::biphoton::Arm::Idler => both.idler_arm,
        };
        wavelengths = rows.iter().map(|r| r.pump_wavelength).collect();
        stats.push(json!({
            "bandwidth_m": bw * NM,
            "shape": curve_shape(&rows),
        }));
        columns.push(rows);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["pump_wavelength_m".to_owned()];
    header.extend(FIG7_BANDWIDTHS_NM.iter().map(|bw| format!("delta_fwhm_{bw}nm_s")));
    header.push("theta_pmf_rad".to_owned());
    w.write_record(&header)?;
    for (j, wl) in wavelengths.iter().enumerate() {
        let mut rec = vec![fmt_sig(*wl)];
        rec.extend(columns.iter().map(|rows| fmt_sig(rows[j].delta_fwhm)));
        rec.push(fmt_sig(columns[0][j].pmf_angle));
        w.write_record(&rec)?;
    }
    let summary = json!({
        "preset": {
            "detection": "nonlocal",
            "dispersive_arm": arm,
            "beta_ref_s2": BETA_REF,
            "bandwidths_m": FIG7_BANDWIDTHS_NM.map(|b| b * NM),
            "bandwidth_convention": BandwidthConvention::IntensityFwhm.as_str(),
            "crystal_length_m": CRYSTAL_MM * MM,
            "width_method": "closed (re-derived nonlocal form)",
        },
        "curves": stats,
    });
    Ok((w.into_inner().map_err(|e| Error::Io(e.into_error()))?, summary))
}

/// Shape descriptors of a ΔFWHM curve: interior extrema, monotonicity and spread.
pub fn curve_shape(rows: &[SweepRow]) -> Value {
    let d: Vec<f64> = rows.iter().map(|r| r.delta_fwhm).collect();
    let min = argmin_by(rows, |r| r.delta_fwhm);
    let max = argmax_by(rows, |r| r.delta_fwhm);
    let interior = |r: Option<&SweepRow>| {
        r.map(|r| {
            let first = rows.first().map(|f| f.pump_wavelength);
            let last = rows.last().map(|f| f.pump_wavelength);
            Some(r.pump_wavelength) != first && Some(r.pump_wavelength) != last
        })
        .unwrap_or(false)
    };
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    json!({
        "minimum": min.map(|r| json!({
            "pump_wavelength_m": r.pump_wavelength,
            "delta_fwhm_s": r.delta_fwhm,
            "theta_pmf_rad": r.pmf_angle,
            "interior": interior(Some(r)),
        })),
        "maximum": max.map(|r| json!({
            "pump_wavelength_m": r.pump_wavelength,
            "delta_fwhm_s": r.delta_fwhm,
            "interior": interior(Some(r)),
        })),
        "monotone": is_monotone(&d),
        "coefficient_of_variation": std / mean.abs(),
    })
}

/// True when the sequence never changes direction.
pub fn is_monotone(v: &[f64]) -> bool {
    let inc = v.windows(2).all(|w| w[1] >= w[0]);
    let dec = v.windows(2).all(|w| w[1] <= w[0]);
    inc || dec
}

fn spec_json(spec: &SweepSpec) -> Value {
    let mut v = serde_json::to_value(spec).unwrap_or(Value::Null);
    v["sellmeier"] = json!(spec.sellmeier.material);
    v
}
