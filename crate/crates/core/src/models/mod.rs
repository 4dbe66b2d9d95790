//! Concrete physical models and the scalar quantities derived from them.

mod calibration;
mod cpt;
mod derived;
mod faraday;
mod two_level;

pub use calibration::{calibrate_raman, floquet_ground_gap, floquet_resonance, RamanCalibration};
pub use cpt::{build_cpt_three_level, cpt_fluorescence, cpt_spectrum, CptParams};
pub use derived::{
    cyclicity, excited_fraction, g_factor, pi_contrast, pi_contrast_and_q, q_factor, q_uncertainty, Cyclicity,
    PiContrast, QStatus,
};
pub use faraday::{
    build_faraday_four_level, equal_tone_amplitude, light_shifts, matched_gamma2, raman_resonance, readout_down,
    trion_emission, DriveComponents, FaradayParams, TwoToneDrive,
};
pub use two_level::{build_two_level, build_two_level_phased};

/// Spin-down ground state.
pub const DOWN: usize = 0;
/// Spin-up ground state.
pub const UP: usize = 1;
/// The trion reached from |↓⟩ by σ− light (also the CPT excited state).
pub const TRION_DOWN: usize = 2;
/// The trion reached from |↑⟩ by σ+ light.
pub const TRION_UP: usize = 3;
