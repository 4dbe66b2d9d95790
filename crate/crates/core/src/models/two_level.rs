use crate::quantum::ops::{ket_bra, sigma_x, sigma_z};
use crate::quantum::{CollapseChannel, Envelope, Hamiltonian, LindbladModel, C64};
use crate::units::mhz_to_angular;
use crate::{Error, Result};

/// Driven spin in the frame of the drive: H = (Ω/2)σx + (δ/2)σz.
///
/// `gamma1_mhz` and `gamma2_mhz` are rate/2π. Relaxation uses the
/// symmetric flip operator at Γ1/2 each way, so populations relax to the
/// mixed state at Γ1. Dephasing uses σz at Γ2, so ground-state coherences
/// decay at 2Γ2 and a resonantly driven oscillation loses contrast at Γ2.
pub fn build_two_level(rabi_mhz: f64, detuning_mhz: f64, gamma1_mhz: f64, gamma2_mhz: f64) -> Result<LindbladModel> {
    build_two_level_phased(rabi_mhz, detuning_mhz, 0.0, gamma1_mhz, gamma2_mhz)
}

/// As [`build_two_level`], with drive phase φ: the coupling is
/// (Ω/2)(e^{−iφ}|↓⟩⟨↑| + e^{iφ}|↑⟩⟨↓|).
pub fn build_two_level_phased(
    rabi_mhz: f64,
    detuning_mhz: f64,
    phase: f64,
    gamma1_mhz: f64,
    gamma2_mhz: f64,
) -> Result<LindbladModel> {
    if !(gamma1_mhz >= 0.0) || !(gamma2_mhz >= 0.0) {
        return Err(Error::usage("relaxation and dephasing rates must be non-negative"));
    }
    if ![rabi_mhz, detuning_mhz, phase].iter().all(|v| v.is_finite()) {
        return Err(Error::usage("drive parameters must be finite"));
    }
    let w = mhz_to_angular(rabi_mhz);
    let d = mhz_to_angular(detuning_mhz);
    let static_part = sigma_z() * C64::new(d / 2.0, 0.0);
    let mut ham = Hamiltonian::new(static_part)?;
    if w != 0.0 {
        let env = Envelope::Constant(C64::from_polar(w / 2.0, phase));
        ham = ham.with_drive(ket_bra(2, 1, 0), env)?;
    }
    let mut channels = Vec::new();
    if gamma1_mhz > 0.0 {
        channels.push(CollapseChannel::new(mhz_to_angular(gamma1_mhz) / 2.0, sigma_x())?);
    }
    if gamma2_mhz > 0.0 {
        channels.push(CollapseChannel::from_mhz(gamma2_mhz, sigma_z())?);
    }
    LindbladModel::new(ham, channels, vec!["down".into(), "up".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{evolve, DensityMatrix};
    use std::f64::consts::PI;

    #[test]
    fn free_precession_at_detuning() {
        let model = build_two_level(0.0, 50.0, 0.0, 0.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = DensityMatrix::from_ket(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let t = 3.3;
        let traj = evolve(&model, &rho0, &[0.0, t]).unwrap();
        let c = traj.last().unwrap().coherence(0, 1);
        let want = C64::from_polar(0.5, -mhz_to_angular(50.0) * t);
        assert!((c - want).norm() < 1e-8);
        assert!((traj.last().unwrap().population(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn drive_phase_rotates_axis() {
        // a π/2 pulse about y (φ = π/2) from |↑⟩ yields a real positive coherence
        let rabi = 100.0;
        let model = build_two_level_phased(rabi, 0.0, PI / 2.0, 0.0, 0.0).unwrap();
        let traj = evolve(&model, &DensityMatrix::pure_level(2, 1), &[0.0, 1.0 / (4.0 * rabi * 1e-3)]).unwrap();
        let c = traj.last().unwrap().coherence(0, 1);
        assert!((c.norm() - 0.5).abs() < 1e-7);
        assert!(c.im.abs() < 1e-7);
    }

    #[test]
    fn relaxation_and_dephasing_rates() {
        let g1 = 2.0;
        let model = build_two_level(0.0, 0.0, g1, 0.0).unwrap();
        let t = 30.0;
        let traj = evolve(&model, &DensityMatrix::pure_level(2, 1), &[0.0, t]).unwrap();
        let z = traj.last().unwrap().population(1) - traj.last().unwrap().population(0);
        assert!((z - (-mhz_to_angular(g1) * t).exp()).abs() < 1e-7);

        let g2 = 3.0;
        let model = build_two_level(0.0, 0.0, 0.0, g2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = DensityMatrix::from_ket(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let traj = evolve(&model, &rho0, &[0.0, t]).unwrap();
        let c = traj.last().unwrap().coherence(0, 1).norm();
        assert!((c - 0.5 * (-2.0 * mhz_to_angular(g2) * t).exp()).abs() < 1e-8);
    }

    #[test]
    fn rejects_negative_rates() {
        assert!(build_two_level(1.0, 0.0, -1.0, 0.0).is_err());
    }
}
