use biphoton::biphoton::{Arm, BandwidthConvention, DetuningGrid, JointSpectralAmplitude, PumpSpec};
use biphoton::coincidence::{numeric_curve, ClosedFormContext, DetectionMode};
use biphoton::dispersion::{group_velocity_matched_pump, walkoffs_at, CrystalSpec, SellmeierSet};
use biphoton::experiments::{
    argmin_by, curve_shape, figure_data, is_monotone, load_config, reproduce_figure, run_nonlocal_arm_comparison,
    run_wavelength_sweep, sweep_point, write_sweep_csv, SweepSpec, WidthMethod, BETA_REF,
};
use biphoton::schmidt::{schmidt_coefficients, schmidt_number_of};
use biphoton::units::{MM, NM};
use biphoton::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn local_spec(bw_nm: f64) -> SweepSpec {
    SweepSpec::wavelength_default(bw_nm * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Local)
}

#[test]
fn sweep_rows_match_direct_calls() {
    let spec = local_spec(4.0);
    let rows = run_wavelength_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 221);
    assert!(rows.windows(2).all(|w| w[0].pump_wavelength < w[1].pump_wavelength));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..3 {
        let row = &rows[rng.gen_range(0..rows.len())];
        let crystal = CrystalSpec::new(10.0 * MM, SellmeierSet::ktp(), row.pump_wavelength).unwrap();
        let pump = PumpSpec::with_fwhm(row.pump_wavelength, 4.0 * NM).unwrap();
        let w = crystal.walkoffs().unwrap();
        let ctx = ClosedFormContext::new(w, pump.sigma()).unwrap();
        assert_eq!(row.fwhm_dispersed, ctx.fwhm_local(BETA_REF, 0.0).unwrap());
        assert_eq!(row.fwhm_reference, ctx.fwhm_local(0.0, 0.0).unwrap());
        let grid = DetuningGrid::auto_square(&w, pump.sigma(), spec.grid_n).unwrap();
        let jsa = biphoton::assemble_jsa(&crystal, &pump, grid, 0.0, 0.0).unwrap();
        assert_eq!(
            row.schmidt_number,
            schmidt_number_of(&schmidt_coefficients(&jsa).unwrap()).unwrap()
        );
        assert!(row.delta_fwhm >= 0.0);
    }
}

#[test]
fn single_point_sweep() {
    let spec = local_spec(4.0).with_range(700.0 * NM, 700.0 * NM, 1.0 * NM);
    let rows = run_wavelength_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0], sweep_point(&spec, 700.0 * NM));
}

#[test]
fn numeric_sweep_widths_agree_with_closed_forms() {
    for mode in [DetectionMode::Local, DetectionMode::Nonlocal] {
        let mut spec = SweepSpec::wavelength_default(4.0 * NM, BandwidthConvention::IntensityFwhm, mode).with_range(
            650.0 * NM,
            810.0 * NM,
            80.0 * NM,
        );
        let closed = run_wavelength_sweep(&spec).unwrap();
        spec.width_method = WidthMethod::Numeric;
        let numeric = run_wavelength_sweep(&spec).unwrap();
        for (c, n) in closed.iter().zip(&numeric) {
            assert!(
                (c.fwhm_dispersed / n.fwhm_dispersed - 1.0).abs() < 1e-3,
                "{mode:?} {c:?} {n:?}"
            );
            assert!((c.fwhm_reference / n.fwhm_reference - 1.0).abs() < 1e-3);
        }
    }
}

#[test]
fn schmidt_minimum_sits_at_group_velocity_matching() {
    let rows = run_wavelength_sweep(&local_spec(4.0)).unwrap();
    let gvm = group_velocity_matched_pump(&SellmeierSet::ktp(), 590.0 * NM, 810.0 * NM).unwrap();
    let min = argmin_by(&rows, |r| r.schmidt_number).unwrap();
    assert!((min.pump_wavelength - gvm).abs() < 10.0 * NM);
    assert!(min.schmidt_number < 1.01);
    // K grows on both sides of the minimum for at least 50 nm
    let near: Vec<f64> = rows
        .iter()
        .filter(|r| (r.pump_wavelength - min.pump_wavelength).abs() <= 50.0 * NM)
        .map(|r| r.schmidt_number)
        .collect();
    let m = near.iter().position(|k| *k == min.schmidt_number).unwrap();
    assert!(near[m..].windows(2).all(|w| w[1] >= w[0]));
    assert!(near[..=m].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn nonlocal_arm_placement() {
    let spec = SweepSpec::wavelength_default(4.0 * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Nonlocal);
    let both = run_nonlocal_arm_comparison(&spec).unwrap();
    // idler arm: no extremum across the sweep
    let idler: Vec<f64> = both.idler_arm.iter().map(|r| r.delta_fwhm).collect();
    assert!(is_monotone(&idler));
    // signal arm: an interior minimum where the ridge stands vertical (τ_i ≈ 0)
    let shape = curve_shape(&both.signal_arm);
    assert_eq!(shape["minimum"]["interior"], true);
    let theta = shape["minimum"]["theta_pmf_rad"].as_f64().unwrap();
    assert!((theta.abs() - std::f64::consts::FRAC_PI_2).abs() < 0.1, "{theta}");
    assert!(both.difference().iter().any(|d| d.abs() > 0.0));
}

#[test]
fn arm_comparison_without_dispersion_is_symmetric() {
    let mut spec = SweepSpec::wavelength_default(1.0 * NM, BandwidthConvention::IntensityFwhm, DetectionMode::Nonlocal)
        .with_range(600.0 * NM, 800.0 * NM, 20.0 * NM);
    spec.beta_ref = 0.0;
    let both = run_nonlocal_arm_comparison(&spec).unwrap();
    let csv = |rows| {
        let mut out = Vec::new();
        write_sweep_csv(rows, &mut out).unwrap();
        out
    };
    assert_eq!(csv(&both.signal_arm), csv(&both.idler_arm));
    assert!(both.difference().iter().all(|d| *d == 0.0));
    spec.mode = DetectionMode::Local;
    assert!(run_nonlocal_arm_comparison(&spec).is_err());
}

#[test]
fn nonlocal_rederived_form_matches_quadrature() {
    let s = SellmeierSet::ktp();
    for wl in [650.0, 700.0, 760.0, 810.0] {
        let w = walkoffs_at(&s, 10.0 * MM, wl * NM).unwrap();
        let sigma = PumpSpec::with_fwhm(wl * NM, 2.0 * NM).unwrap().sigma();
        let ctx = ClosedFormContext::new(w, sigma).unwrap();
        let grid = DetuningGrid::auto_square(&w, sigma, 256).unwrap();
        for (bs, bi) in [(BETA_REF, 0.0), (0.0, BETA_REF), (BETA_REF, -0.5 * BETA_REF)] {
            let jsa = JointSpectralAmplitude::from_model(w, sigma, grid, bs, bi).unwrap();
            let numeric = numeric_curve(&jsa, DetectionMode::Nonlocal, 401).unwrap().fwhm;
            let closed = ctx.fwhm_nonlocal_rederived(bs, bi).unwrap().fwhm;
            assert!(
                (closed / numeric - 1.0).abs() < 1e-3,
                "{wl} nm ({bs}, {bi}): {closed} vs {numeric}"
            );
        }
    }
}

#[test]
fn numeric_width_converges_under_refinement() {
    let w = walkoffs_at(&SellmeierSet::ktp(), 10.0 * MM, 810.0 * NM).unwrap();
    let sigma = PumpSpec::with_fwhm(810.0 * NM, 4.0 * NM).unwrap().sigma();
    let grid = DetuningGrid::auto_square(&w, sigma, 129).unwrap();
    let width = |g: DetuningGrid, points| {
        let jsa = JointSpectralAmplitude::from_model(w, sigma, g, BETA_REF, 0.0).unwrap();
        numeric_curve(&jsa, DetectionMode::Local, points).unwrap().fwhm
    };
    let base = width(grid, 401);
    assert!((width(grid.refined(), 401) / base - 1.0).abs() < 1e-6);
    assert!((width(grid, 801) / base - 1.0).abs() < 5e-4);
}

#[test]
fn figures_are_deterministic() {
    let a = figure_data("fig2").unwrap();
    let b = figure_data("fig2").unwrap();
    assert_eq!(a.csv, b.csv);
    let fwhm = a.summary["numeric"]["fwhm_beta0_s"].as_f64().unwrap();
    let wide = a.summary["numeric"]["fwhm_beta_ref_s"].as_f64().unwrap();
    assert!(fwhm < 1.523e-12 * 1.1 && wide > 1.6e-12);
    let c = figure_data("fig6d").unwrap();
    assert_eq!(c.csv, figure_data("fig6d").unwrap().csv);
    assert!(c.summary["stats"]["spearman_k_vs_delta_fwhm"].as_f64().unwrap() < -0.8);
}

#[test]
fn reproduce_figure_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = reproduce_figure("fig3", dir.path()).unwrap();
    assert!(report.csv_path.exists() && report.json_path.exists());
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(&report.json_path).unwrap()).unwrap();
    assert_eq!(summary["preset"]["grid_n"], 256);
    let err = reproduce_figure("fig8", dir.path()).unwrap_err();
    assert!(matches!(err, Error::UnknownFigure { .. }));
}

#[test]
fn config_file_with_relative_sellmeier_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ktp.json"), include_str!("../data/ktp_kato2002.json")).unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"crystal": {"sellmeier_file": "ktp.json"}, "pump": {"wavelength_nm": 700, "fwhm_nm": 1}}"#,
    )
    .unwrap();
    let c = load_config(&cfg).unwrap();
    assert_eq!(c.pump.wavelength, 700.0 * NM);
    assert_eq!(c.grid_n, biphoton::biphoton::DEFAULT_GRID_N);
    assert!(c.sellmeier_source.ends_with("ktp.json"));
    assert_eq!(c.sweep.arm, Arm::Signal);
    c.crystal().unwrap();

    std::fs::write(&cfg, r#"{"crystal": {"length_mm": -1}}"#).unwrap();
    match load_config(&cfg).unwrap_err() {
        Error::Validation { field, .. } => assert_eq!(field, "crystal.length_mm"),
        other => panic!("{other}"),
    }
    std::fs::write(&cfg, "{ not json").unwrap();
    assert!(matches!(load_config(&cfg), Err(Error::Parse { .. })));
    assert!(matches!(
        load_config(dir.path().join("missing.json")),
        Err(Error::Read { .. })
    ));
}
