//! Sweeps, figure presets, run configuration and the closed-form
//! verification grid.

mod config;
mod figures;
mod sweep;
mod verify;

pub use config::{config_from_str, load_config, resolve_config, ConfigFile, ConfigOverrides, RunConfig};
pub use figures::{
    curve_shape, fig2_curves, figure_data, is_monotone, panel_summary, reproduce_figure, FigureData, FigureReport,
    FIG6_BANDWIDTHS_NM, FIG7_BANDWIDTHS_NM, FIGURE_TAGS,
};
pub use sweep::{
    argmax_by, argmin_by, run_nonlocal_arm_comparison, run_wavelength_sweep, spearman, sweep_point, write_sweep_csv,
    ArmComparison, SchmidtMethod, SweepRow, SweepSpec, SweepVariable, WidthMethod, BETA_REF, SWEEP_GRID_N,
    SWEEP_HEADER,
};
pub use verify::{
    default_points, run_verification, run_verification_with, verify_point, write_verify_csv, VerifyPoint, VerifyRow,
};
