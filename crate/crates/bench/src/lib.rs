//! Shared fixtures for the benchmarks: the 10 mm KTP crystal pumped at
//! 810 nm with a 4 nm bandwidth.

use biphoton::coincidence::DetectionMode;
use biphoton::{assemble_jsa, CrystalSpec, DetuningGrid, JointSpectralAmplitude, PumpSpec, SellmeierSet};

pub const BETA_REF: f64 = 100e-27;

pub fn crystal() -> CrystalSpec {
    CrystalSpec::new(10e-3, SellmeierSet::ktp(), 810e-9).expect("valid crystal")
}

pub fn pump() -> PumpSpec {
    PumpSpec::with_fwhm(810e-9, 4e-9).expect("valid pump")
}

pub fn grid(n: usize) -> DetuningGrid {
    let w = crystal().walkoffs().expect("in range");
    DetuningGrid::auto_square(&w, pump().sigma(), n).expect("valid grid")
}

/// Model amplitude on an `n × n` grid with `β_ref` on the signal arm.
pub fn jsa(n: usize, mode: DetectionMode) -> JointSpectralAmplitude {
    let beta_i = match mode {
        DetectionMode::Local => 0.0,
        DetectionMode::Nonlocal => -BETA_REF,
    };
    assemble_jsa(&crystal(), &pump(), grid(n), BETA_REF, beta_i).expect("valid amplitude")
}
