use rayon::prelude::*;

use crate::quantum::ops::{ket_bra, projector};
use crate::quantum::{steady_state, CollapseChannel, Hamiltonian, LindbladModel, C64};
use crate::units::ghz_to_angular;
use crate::{Error, Result};

use super::{DOWN, TRION_DOWN as EXCITED, UP};

/// Three-level Λ system used for two-colour coherent population trapping.
///
/// Rabi frequencies and the dephasing rate are angular rates in ns⁻¹;
/// the three lifetimes are in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptParams {
    /// Bare electron splitting, GHz.
    pub splitting_ghz: f64,
    /// Single-photon detuning, GHz.
    pub detuning_ghz: f64,
    pub rabi_down: f64,
    pub rabi_up: f64,
    /// Ground-state relaxation time Γ1⁻¹.
    pub relaxation_time_ns: f64,
    /// Ground-state dephasing rate Γ2.
    pub dephasing_rate: f64,
    /// Trion lifetime γ1⁻¹.
    pub trion_lifetime_ns: f64,
    /// Spin-flip emission time γ_SP⁻¹.
    pub spin_flip_time_ns: f64,
}

impl CptParams {
    /// The GaAs dot values with the fitted splitting, Rabi rates and Γ2.
    pub fn reference() -> Self {
        Self {
            splitting_ghz: 2.60,
            detuning_ghz: 0.0,
            rabi_down: 9.3,
            rabi_up: 0.19,
            relaxation_time_ns: 45_000.0,
            dephasing_rate: 0.53,
            trion_lifetime_ns: 0.25,
            spin_flip_time_ns: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("relaxation time", self.relaxation_time_ns),
            ("trion lifetime", self.trion_lifetime_ns),
            ("spin-flip emission time", self.spin_flip_time_ns),
        ] {
            if !(t > 0.0) {
                return Err(Error::usage(format!("{name} must be positive")));
            }
        }
        if !(self.rabi_down >= 0.0 && self.rabi_up >= 0.0) {
            return Err(Error::usage("Rabi rates must be non-negative"));
        }
        if !(self.dephasing_rate >= 0.0) {
            return Err(Error::usage("dephasing rate must be non-negative"));
        }
        if !self.splitting_ghz.is_finite() || !self.detuning_ghz.is_finite() {
            return Err(Error::usage("splitting and detuning must be finite"));
        }
        Ok(())
    }

    /// Saturation Rabi rate γ1/√2.
    pub fn saturation_rabi(&self) -> f64 {
        1.0 / self.trion_lifetime_ns / std::f64::consts::SQRT_2
    }
}

/// Model at two-photon frequency `omega_ghz`; the two-photon detuning is
/// 2π(ω − ω_e0).
pub fn build_cpt_three_level(p: &CptParams, omega_ghz: f64) -> Result<LindbladModel> {
    p.validate()?;
    let n = 3;
    let delta = ghz_to_angular(omega_ghz - p.splitting_ghz);
    let mut h = projector(n, EXCITED) * C64::new(ghz_to_angular(p.detuning_ghz), 0.0)
        + projector(n, UP) * C64::new(delta, 0.0);
    let half = |w: f64| C64::new(w / 2.0, 0.0);
    h += (ket_bra(n, DOWN, EXCITED) + ket_bra(n, EXCITED, DOWN)) * half(p.rabi_down);
    h += (ket_bra(n, UP, EXCITED) + ket_bra(n, EXCITED, UP)) * half(p.rabi_up);

    let flip = ket_bra(n, DOWN, UP) + ket_bra(n, UP, DOWN);
    let z = projector(n, DOWN) - projector(n, UP);
    let channels = vec![
        CollapseChannel::new(0.5 / p.relaxation_time_ns, flip)?,
        CollapseChannel::new(0.5 * p.dephasing_rate, z)?,
        CollapseChannel::new(1.0 / p.trion_lifetime_ns, ket_bra(n, DOWN, EXCITED))?,
        CollapseChannel::new(1.0 / p.spin_flip_time_ns, ket_bra(n, UP, EXCITED))?,
    ];
    LindbladModel::new(Hamiltonian::new(h)?, channels, vec!["down".into(), "up".into(), "trion".into()])
}

/// Steady-state emission γ1·ρ_ee at one two-photon frequency.
pub fn cpt_fluorescence(p: &CptParams, omega_ghz: f64) -> Result<f64> {
    let model = build_cpt_three_level(p, omega_ghz)?;
    let rho = steady_state(&model)?;
    Ok(rho.population(EXCITED) / p.trion_lifetime_ns)
}

/// Steady-state emission on a grid of two-photon frequencies (GHz).
pub fn cpt_spectrum(p: &CptParams, omega_grid: &[f64]) -> Result<Vec<f64>> {
    if omega_grid.is_empty() {
        return Err(Error::usage("frequency grid is empty"));
    }
    p.validate()?;
    omega_grid.par_iter().map(|&w| cpt_fluorescence(p, w)).collect()
}
