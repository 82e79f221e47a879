//! `biphoton` command-line front end.
//!
//! Every subcommand resolves a run configuration (optional `--config` file,
//! then flags), computes one artifact and either prints it to stdout in the
//! requested `--format` or, with `--out <dir>`, writes `<name>.csv` and
//! `<name>.json` into that directory. Failures print a JSON object
//! `{"kind": ..., "message": ...}` on stderr and exit nonzero.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biphoton::coincidence::{numeric_curve, ClosedFormContext, DetectionMode};
use biphoton::experiments::{
    default_points, figure_data, reproduce_figure, resolve_config, run_nonlocal_arm_comparison, run_verification_with,
    run_wavelength_sweep, write_sweep_csv, write_verify_csv, ConfigOverrides, RunConfig, SchmidtMethod, WidthMethod,
};
use biphoton::schmidt::{gaussian_model_schmidt_number, schmidt_decompose};
use biphoton::units::NM;
use biphoton::{assemble_jsa, pmf_angle, BandwidthConvention, DetuningGrid, JointSpectralAmplitude};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "biphoton",
    version,
    about = "SPDC biphoton spectra, Schmidt numbers and dispersive coincidence widths"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Pump centre wavelength, nm
    #[arg(long, global = true, allow_hyphen_values = true)]
    pump_nm: Option<f64>,
    /// Pump bandwidth, nm (read according to --bandwidth-convention)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pump_fwhm_nm: Option<f64>,
    #[arg(long, global = true, value_enum)]
    bandwidth_convention: Option<Convention>,
    /// Sellmeier coefficient file (JSON); defaults to the built-in KTP set
    #[arg(long, global = true, value_name = "FILE")]
    crystal: Option<PathBuf>,
    /// Crystal length, mm
    #[arg(long, global = true, allow_hyphen_values = true)]
    length_mm: Option<f64>,
    /// Group-delay dispersion in the signal arm, s²
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta_s: Option<f64>,
    /// Group-delay dispersion in the idler arm, s²
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta_i: Option<f64>,
    /// Detuning samples per axis
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Write <name>.csv and <name>.json here instead of printing
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// What to print on stdout when --out is not given
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Log the resolved configuration (repeat for debug output)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint spectral amplitude on the detuning grid
    Jsa {
        /// Write |f| as a matrix instead of one row per node
        #[arg(long)]
        magnitude: bool,
    },
    /// Schmidt coefficients of the joint spectral amplitude
    Schmidt,
    /// Hong-Ou-Mandel dip by quadrature, with the closed-form width alongside
    Hom,
    /// Nonlocal coincidence peak by quadrature, with both closed-form widths
    Nonlocal,
    /// Pump-wavelength sweep of K and the dispersive broadening
    Sweep(SweepArgs),
    /// Regenerate the data behind a named figure
    Figure {
        /// fig2, fig3, fig4, fig5, fig6a-d or fig7a-b
        tag: String,
    },
    /// Closed forms against quadrature on the fixed verification grid
    Verify,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    start_nm: Option<f64>,
    #[arg(long)]
    stop_nm: Option<f64>,
    #[arg(long)]
    step_nm: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Arm that receives the reference dispersion
    #[arg(long, value_enum)]
    arm: Option<ArmArg>,
    /// Reference dispersion for the broadened width, s²
    #[arg(long, allow_hyphen_values = true)]
    beta_ref: Option<f64>,
    /// Use quadrature instead of the closed forms for the widths
    #[arg(long)]
    numeric_widths: bool,
    /// Use the Gaussian closed form for K instead of an SVD per point
    #[arg(long)]
    analytic_schmidt: bool,
    /// Run the nonlocal sweep twice, dispersion in each arm, and tabulate both
    #[arg(long)]
    compare_arms: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Convention {
    IntensityFwhm,
    AmplitudeSigma,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Local,
    Nonlocal,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ArmArg {
    Signal,
    Idler,
}

/// Error surfaced to the user as `{"kind", "message"}`.
struct Failure {
    kind: String,
    message: String,
}

impl From<biphoton::Error> for Failure {
    fn from(e: biphoton::Error) -> Self {
        Failure {
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        biphoton::Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        biphoton::Error::from(e).into()
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report(&Failure {
                kind: "usage".into(),
                message: e.render().to_string().trim_end().to_owned(),
            });
            return ExitCode::from(2);
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::FAILURE
        }
    }
}

fn report(f: &Failure) {
    eprintln!("{}", json!({ "kind": f.kind, "message": f.message }));
}

fn run(cli: &Cli) -> CliResult<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Figure { tag } => return figure(tag, c),
        Command::Verify => return verify(c),
        _ => {}
    }
    let cfg = resolve_config(c.config.as_deref(), &overrides(c))?;
    match &cli.command {
        Command::Jsa { magnitude } => jsa(&cfg, c, *magnitude),
        Command::Schmidt => schmidt(&cfg, c),
        Command::Hom => curve(&cfg, c, DetectionMode::Local),
        Command::Nonlocal => curve(&cfg, c, DetectionMode::Nonlocal),
        Command::Sweep(args) => sweep(&cfg, c, args),
        Command::Figure { .. } | Command::Verify => unreachable!(),
    }
}

fn overrides(c: &Common) -> ConfigOverrides {
    ConfigOverrides {
        pump_nm: c.pump_nm,
        pump_fwhm_nm: c.pump_fwhm_nm,
        bandwidth_convention: c.bandwidth_convention.map(|v| match v {
            Convention::IntensityFwhm => BandwidthConvention::IntensityFwhm,
            Convention::AmplitudeSigma => BandwidthConvention::AmplitudeSigma,
        }),
        crystal: c.crystal.clone(),
        length_mm: c.length_mm,
        beta_s: c.beta_s,
        beta_i: c.beta_i,
        grid_n: c.grid_n,
    }
}

fn model_jsa(cfg: &RunConfig) -> CliResult<JointSpectralAmplitude> {
    let crystal = cfg.crystal()?;
    let w = crystal.walkoffs()?;
    let grid = DetuningGrid::auto_square(&w, cfg.sigma_p, cfg.grid_n)?;
    log::info!(
        "τ_s = {:e} s, τ_i = {:e} s, grid half-span = {:e} rad/s",
        w.signal,
        w.idler,
        grid.signal.half_span
    );
    Ok(assemble_jsa(&crystal, &cfg.pump, grid, cfg.beta_s, cfg.beta_i)?)
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> biphoton::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

/// Prints or writes one artifact.
fn emit(c: &Common, name: &str, csv: &[u8], summary: &Value) -> CliResult<()> {
    match &c.out {
        Some(dir) => {
            let (csv_path, json_path) = write_pair(dir, name, csv, summary)?;
            println!("{}", json!({ "csv": csv_path, "json": json_path }));
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match c.format {
                Format::Csv => stdout.write_all(csv)?,
                Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(summary)?)?,
            }
        }
    }
    Ok(())
}

fn write_pair(dir: &Path, name: &str, csv: &[u8], summary: &Value) -> CliResult<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&json_path, serde_json::to_vec_pretty(summary)?)?;
    Ok((csv_path, json_path))
}

fn jsa(cfg: &RunConfig, c: &Common, magnitude: bool) -> CliResult<()> {
    let jsa = model_jsa(cfg)?;
    let w = jsa.walkoffs.expect("model amplitude");
    let crystal = cfg.crystal()?;
    let (std_s, std_i) = jsa.marginal_std();
    let csv = if magnitude {
        csv_bytes(|b| jsa.write_magnitude_csv(b))?
    } else {
        csv_bytes(|b| jsa.write_csv(b))?
    };
    let summary = json!({
        "tau_s_s": w.signal,
        "tau_i_s": w.idler,
        "theta_pmf_rad": pmf_angle(&w)?,
        "poling_period_m": crystal.poling_period(),
        "sigma_p_rad_s": cfg.sigma_p,
        "grid": jsa.grid(),
        "marginal_std_rad_s": [std_s, std_i],
        "params": cfg,
    });
    emit(c, "jsa", &csv, &summary)
}

fn schmidt(cfg: &RunConfig, c: &Common) -> CliResult<()> {
    let jsa = model_jsa(cfg)?;
    let spectrum = schmidt_decompose(&jsa)?;
    let w = jsa.walkoffs.expect("model amplitude");
    let csv = csv_bytes(|b| spectrum.write_csv(b))?;
    let summary = json!({
        "summary": spectrum.summary()?,
        "analytic_schmidt_number": gaussian_model_schmidt_number(&w, cfg.sigma_p)?,
        "leading_coefficients": &spectrum.coefficients[..spectrum.coefficients.len().min(10)],
        "params": cfg,
    });
    emit(c, "schmidt", &csv, &summary)
}

fn curve(cfg: &RunConfig, c: &Common, mode: DetectionMode) -> CliResult<()> {
    let jsa = model_jsa(cfg)?;
    let curve = numeric_curve(&jsa, mode, cfg.scan_points)?;
    let ctx = ClosedFormContext::new(jsa.walkoffs.expect("model amplitude"), cfg.sigma_p)?;
    let (bs, bi) = (cfg.beta_s, cfg.beta_i);
    let closed = match mode {
        DetectionMode::Local => json!({
            "fwhm_s": ctx.fwhm_local(bs, bi)?,
            "visibility": ctx.visibility(bs, bi),
            "fwhm_cw_limit_s": ctx.fwhm_local_cw_limit(),
        }),
        DetectionMode::Nonlocal => json!({
            "fwhm_rederived_s": ctx.fwhm_nonlocal_rederived(bs, bi)?.fwhm,
            "fwhm_printed_s": ctx.fwhm_nonlocal_printed(bs, bi)?.fwhm,
        }),
    };
    let csv = csv_bytes(|b| curve.write_csv(b))?;
    let summary = serde_json::to_value(curve.summary(json!({ "config": cfg, "closed_form": closed })))?;
    emit(c, mode.as_str(), &csv, &summary)
}

fn sweep(cfg: &RunConfig, c: &Common, a: &SweepArgs) -> CliResult<()> {
    let mut spec = cfg.sweep.clone();
    if let Some(v) = a.start_nm {
        spec.start = v * NM;
    }
    if let Some(v) = a.stop_nm {
        spec.stop = v * NM;
    }
    if let Some(v) = a.step_nm {
        spec.step = v * NM;
    }
    if let Some(m) = a.mode {
        spec.mode = match m {
            Mode::Local => DetectionMode::Local,
            Mode::Nonlocal => DetectionMode::Nonlocal,
        };
    }
    if let Some(arm) = a.arm {
        spec.arm = match arm {
            ArmArg::Signal => biphoton::biphoton::Arm::Signal,
            ArmArg::Idler => biphoton::biphoton::Arm::Idler,
        };
    }
    if let Some(b) = a.beta_ref {
        spec.beta_ref = b;
    }
    if let Some(n) = c.grid_n {
        spec.grid_n = n;
    }
    if a.numeric_widths {
        spec.width_method = WidthMethod::Numeric;
    }
    if a.analytic_schmidt {
        spec.schmidt_method = SchmidtMethod::Analytic;
    }
    log::info!(
        "sweep {} points over [{:e}, {:e}] m, grid N = {}",
        spec.points().len(),
        spec.start,
        spec.stop,
        spec.grid_n
    );

    if a.compare_arms {
        let both = run_nonlocal_arm_comparison(&spec)?;
        let csv = csv_bytes(|b| both.write_csv(b))?;
        let summary = json!({ "spec": spec, "comparison": both });
        return emit(c, "sweep_arms", &csv, &summary);
    }
    let rows = run_wavelength_sweep(&spec)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points failed; see the error column", rows.len());
    }
    let csv = csv_bytes(|b| write_sweep_csv(&rows, b))?;
    let summary = json!({ "spec": spec, "failed_rows": failed, "rows": rows });
    emit(c, "sweep", &csv, &summary)
}

fn figure(tag: &str, c: &Common) -> CliResult<()> {
    match &c.out {
        Some(dir) => {
            let report = reproduce_figure(tag, dir)?;
            println!("{}", json!({ "csv": report.csv_path, "json": report.json_path }));
            Ok(())
        }
        None => {
            let data = figure_data(tag)?;
            let mut stdout = std::io::stdout().lock();
            match c.format {
                Format::Csv => stdout.write_all(&data.csv)?,
                Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&data.summary)?)?,
            }
            Ok(())
        }
    }
}

fn verify(c: &Common) -> CliResult<()> {
    let grid_n = c.grid_n.unwrap_or(biphoton::biphoton::DEFAULT_GRID_N);
    let rows = run_verification_with(&default_points(), grid_n)?;
    let worst = |mode: DetectionMode| {
        rows.iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.closed_rel_error.abs())
            .fold(0.0, f64::max)
    };
    let worst_printed = rows
        .iter()
        .filter_map(|r| r.printed_rel_error)
        .map(f64::abs)
        .fold(0.0, f64::max);
    let csv = csv_bytes(|b| write_verify_csv(&rows, b))?;
    let summary = json!({
        "grid_n": grid_n,
        "worst_local_rel_error": worst(DetectionMode::Local),
        "worst_nonlocal_rederived_rel_error": worst(DetectionMode::Nonlocal),
        "worst_nonlocal_printed_rel_error": worst_printed,
        "rows": rows,
    });
    emit(c, "verify", &csv, &summary)
}
