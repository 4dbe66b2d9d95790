use std::f64::consts::PI;

use crate::quantum::ops::{ket_bra, projector};
use crate::quantum::{CollapseChannel, DensityMatrix, Envelope, Hamiltonian, LindbladModel, C64};
use crate::units::{angular_to_ghz, angular_to_mhz, ghz_to_angular, mhz_to_angular};
use crate::{Error, Result};

use super::calibration::RamanCalibration;
use super::{DOWN, TRION_DOWN, TRION_UP, UP};

const N: usize = 4;
const RESONANCE_ITERATIONS: usize = 50;

/// Four-level Faraday-geometry dot: two spin ground states and two trions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaradayParams {
    /// Electron splitting ω_e, GHz.
    pub electron_splitting_ghz: f64,
    /// Hole splitting ω_h, GHz.
    pub hole_splitting_ghz: f64,
    /// Detuning Δ of the frame (tone 1) below the |↓⟩ ↔ trion transition, GHz.
    pub detuning_ghz: f64,
    pub cyclicity: f64,
    /// Total trion decay γ1, rate/2π in MHz.
    pub trion_decay_mhz: f64,
    /// Ground-state relaxation Γ1, rate/2π in MHz.
    pub gamma1_mhz: f64,
    /// Ground-state dephasing Γ2, rate/2π in MHz (same convention as the
    /// two-level model).
    pub gamma2_mhz: f64,
}

impl FaradayParams {
    /// GaAs dot: ω_e = 2.6 GHz, ω_h = 150 GHz, Δ = 600 GHz, C = 409,
    /// γ1⁻¹ = 0.270 ns, no ground-state decoherence.
    pub fn reference() -> Self {
        Self {
            electron_splitting_ghz: 2.6,
            hole_splitting_ghz: 150.0,
            detuning_ghz: 600.0,
            cyclicity: 409.0,
            trion_decay_mhz: angular_to_mhz(1.0 / 0.270),
            gamma1_mhz: 0.0,
            gamma2_mhz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cyclicity >= 1.0) {
            return Err(Error::usage(format!("cyclicity must be at least 1, got {}", self.cyclicity)));
        }
        for (name, r) in [
            ("trion decay", self.trion_decay_mhz),
            ("relaxation rate", self.gamma1_mhz),
            ("dephasing rate", self.gamma2_mhz),
        ] {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::usage(format!("{name} must be finite and non-negative")));
            }
        }
        if ![self.electron_splitting_ghz, self.hole_splitting_ghz, self.detuning_ghz]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::usage("splittings and detuning must be finite"));
        }
        Ok(())
    }

    fn trion_decay(&self) -> f64 {
        mhz_to_angular(self.trion_decay_mhz)
    }
}

/// Circular components present in the drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveComponents {
    SigmaMinus,
    SigmaPlus,
    Both,
}

impl DriveComponents {
    fn minus(self) -> bool {
        !matches!(self, DriveComponents::SigmaPlus)
    }

    fn plus(self) -> bool {
        !matches!(self, DriveComponents::SigmaMinus)
    }
}

/// Bichromatic envelope Ω1 + Ω2·e^{iφ}·e^{−iΔ_RF t}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoToneDrive {
    pub tone1_mhz: f64,
    pub tone2_mhz: f64,
    /// Tone spacing Δ_RF, GHz.
    pub spacing_ghz: f64,
    /// Phase of tone 2, radians.
    pub phase: f64,
    pub duration_ns: f64,
}

impl TwoToneDrive {
    pub fn single(tone_mhz: f64, duration_ns: f64) -> Self {
        Self {
            tone1_mhz: tone_mhz,
            tone2_mhz: 0.0,
            spacing_ghz: 0.0,
            phase: 0.0,
            duration_ns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ns >= 0.0) {
            return Err(Error::usage("drive duration must be non-negative"));
        }
        if ![self.tone1_mhz, self.tone2_mhz, self.spacing_ghz, self.phase]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::usage("drive parameters must be finite"));
        }
        Ok(())
    }

    /// Equal tones from a calibration, detuned by `detuning_mhz` from the
    /// Raman resonance, with the tone phase chosen so that the ground-state
    /// dynamics follow the two-level model with drive phase `phase`.
    pub fn raman(cal: &RamanCalibration, detuning_mhz: f64, phase: f64, duration_ns: f64) -> Self {
        Self {
            tone1_mhz: cal.tone_mhz,
            tone2_mhz: cal.tone_mhz,
            spacing_ghz: cal.spacing_ghz - detuning_mhz * 1e-3,
            phase: PI - phase,
            duration_ns,
        }
    }
}

/// Ω1 = Ω2 giving a two-photon Rabi frequency `rabi_mhz`:
/// Ω_R = Ω1·Ω2/(√C·Δ) in angular units.
pub fn equal_tone_amplitude(rabi_mhz: f64, cyclicity: f64, detuning_ghz: f64) -> Result<f64> {
    if detuning_ghz == 0.0 {
        return Err(Error::domain("Raman drive needs a non-zero single-photon detuning"));
    }
    let w = mhz_to_angular(rabi_mhz).abs() * cyclicity.sqrt() * ghz_to_angular(detuning_ghz).abs();
    Ok(angular_to_mhz(w.sqrt()))
}

/// Second-order light shifts (rad/ns) of |↓⟩ and |↑⟩ under the drive.
pub fn light_shifts(p: &FaradayParams, drive: &TwoToneDrive, components: DriveComponents) -> (f64, f64) {
    let d = ghz_to_angular(p.detuning_ghz);
    let we = ghz_to_angular(p.electron_splitting_ghz);
    let wh = ghz_to_angular(p.hole_splitting_ghz);
    let rf = ghz_to_angular(drive.spacing_ghz);
    // |Ω∓| = Ω/√2 per tone
    let g1 = mhz_to_angular(drive.tone1_mhz).powi(2) / 2.0;
    let g2 = mhz_to_angular(drive.tone2_mhz).powi(2) / 2.0;
    let pair = |gap: f64| {
        let mut s = 0.0;
        if g1 > 0.0 {
            s -= g1 / gap;
        }
        if g2 > 0.0 {
            s -= g2 / (gap - rf);
        }
        s
    };
    let c = p.cyclicity;
    let (mut down, mut up) = (0.0, 0.0);
    if components.minus() {
        down += pair(d);
        up += pair(d + we) / c;
    }
    if components.plus() {
        down += pair(d + wh) / c;
        up += pair(d + wh + we);
    }
    (down, up)
}

/// Tone spacing Δ_RF (GHz) at which the light-shifted Raman transition is
/// resonant: Δ_RF = ω_e + shift↓ − shift↑, solved self-consistently.
pub fn raman_resonance(p: &FaradayParams, drive: &TwoToneDrive, components: DriveComponents) -> Result<f64> {
    let we = ghz_to_angular(p.electron_splitting_ghz);
    let mut d = *drive;
    let mut rf = we;
    for _ in 0..RESONANCE_ITERATIONS {
        d.spacing_ghz = angular_to_ghz(rf);
        let (down, up) = light_shifts(p, &d, components);
        let next = we + down - up;
        if !next.is_finite() {
            return Err(Error::domain("Raman resonance hits a single-photon pole"));
        }
        if (next - rf).abs() <= 1e-13 * next.abs().max(1.0) {
            return Ok(angular_to_ghz(next));
        }
        rf = next;
    }
    Err(Error::domain("Raman resonance iteration did not converge"))
}

/// Ground-state dephasing (rate/2π, MHz) that makes the four-level model
/// match a two-level model with `gamma2_mhz`, after subtracting the
/// dephasing caused by off-resonant trion scattering from |↓⟩.
pub fn matched_gamma2(gamma2_mhz: f64, p: &FaradayParams, drive: &TwoToneDrive) -> f64 {
    let d = ghz_to_angular(p.detuning_ghz);
    let rf = ghz_to_angular(drive.spacing_ghz);
    let g1 = mhz_to_angular(drive.tone1_mhz).powi(2) / 2.0;
    let g2 = mhz_to_angular(drive.tone2_mhz).powi(2) / 2.0;
    let excited = g1 / (d * d) + g2 / ((d - rf) * (d - rf));
    gamma2_mhz - p.trion_decay_mhz * excited / 4.0
}

/// Four-level model {↓, ↑, ⇓↓↑, ⇑↓↑} in the frame of tone 1.
pub fn build_faraday_four_level(
    p: &FaradayParams,
    drive: &TwoToneDrive,
    components: DriveComponents,
) -> Result<LindbladModel> {
    p.validate()?;
    drive.validate()?;
    let diag = [
        0.0,
        -ghz_to_angular(p.electron_splitting_ghz),
        ghz_to_angular(p.detuning_ghz),
        ghz_to_angular(p.detuning_ghz + p.hole_splitting_ghz),
    ];
    let h0 = crate::quantum::CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        N,
        diag.iter().map(|&e| C64::new(e, 0.0)),
    ));
    let mut ham = Hamiltonian::new(h0)?;

    let tones = |prefactor: C64| -> Envelope {
        let mut t = Vec::new();
        if drive.tone1_mhz != 0.0 {
            t.push((prefactor * mhz_to_angular(drive.tone1_mhz), 0.0));
        }
        if drive.tone2_mhz != 0.0 {
            t.push((
                prefactor * C64::from_polar(mhz_to_angular(drive.tone2_mhz), drive.phase),
                ghz_to_angular(drive.spacing_ghz),
            ));
        }
        Envelope::Tones(t)
    };
    let weak = 1.0 / p.cyclicity.sqrt();
    let active = drive.tone1_mhz != 0.0 || drive.tone2_mhz != 0.0;
    if active && components.minus() {
        let k = C64::new(0.5, 0.5);
        ham = ham.with_drive(ket_bra(N, TRION_DOWN, DOWN), tones(-k))?;
        ham = ham.with_drive(ket_bra(N, TRION_DOWN, UP), tones(-k * weak))?;
    }
    if active && components.plus() {
        let k = C64::new(0.5, -0.5);
        ham = ham.with_drive(ket_bra(N, TRION_UP, UP), tones(k))?;
        ham = ham.with_drive(ket_bra(N, TRION_UP, DOWN), tones(k * weak))?;
    }

    let gamma = p.trion_decay();
    let c = p.cyclicity;
    let conserving = gamma * c / (c + 1.0);
    let flipping = gamma / (c + 1.0);
    let mut channels = vec![
        CollapseChannel::new(conserving, ket_bra(N, DOWN, TRION_DOWN))?,
        CollapseChannel::new(flipping, ket_bra(N, UP, TRION_DOWN))?,
        CollapseChannel::new(conserving, ket_bra(N, UP, TRION_UP))?,
        CollapseChannel::new(flipping, ket_bra(N, DOWN, TRION_UP))?,
    ];
    if p.gamma1_mhz > 0.0 {
        channels.push(CollapseChannel::new(
            mhz_to_angular(p.gamma1_mhz) / 2.0,
            ket_bra(N, DOWN, UP) + ket_bra(N, UP, DOWN),
        )?);
    }
    if p.gamma2_mhz > 0.0 {
        channels.push(CollapseChannel::from_mhz(p.gamma2_mhz, projector(N, DOWN) - projector(N, UP))?);
    }
    LindbladModel::new(
        ham,
        channels,
        vec!["down".into(), "up".into(), "trion_down".into(), "trion_up".into()],
    )
}

/// Probability of ending in |↓⟩ once any trion population has decayed.
pub fn readout_down(rho: &DensityMatrix, cyclicity: f64) -> f64 {
    let c = cyclicity;
    rho.population(DOWN) + rho.population(TRION_DOWN) * c / (c + 1.0) + rho.population(TRION_UP) / (c + 1.0)
}

/// Photon emission rate γ1·(ρ_⇓ + ρ_⇑) in ns⁻¹.
pub fn trion_emission(rho: &DensityMatrix, p: &FaradayParams) -> f64 {
    p.trion_decay() * (rho.population(TRION_DOWN) + rho.population(TRION_UP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::evolve;

    #[test]
    fn huge_cyclicity_decouples_flip_transitions() {
        let p = FaradayParams {
            cyclicity: 1e12,
            detuning_ghz: 0.0,
            ..FaradayParams::reference()
        };
        let drive = TwoToneDrive::single(300.0, 20.0);
        let model = build_faraday_four_level(&p, &drive, DriveComponents::SigmaMinus).unwrap();
        let traj = evolve(&model, &DensityMatrix::pure_level(N, DOWN), &[0.0, 20.0]).unwrap();
        let last = traj.last().unwrap();
        assert!(last.population(UP) < 1e-9);
        assert!(last.population(TRION_UP) < 1e-12);
        assert!((last.population(DOWN) + last.population(TRION_DOWN) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn resonance_without_drive_is_bare_splitting() {
        let p = FaradayParams::reference();
        let d = TwoToneDrive::single(0.0, 1.0);
        assert_eq!(raman_resonance(&p, &d, DriveComponents::SigmaMinus).unwrap(), 2.6);
    }

    #[test]
    fn light_shift_lowers_down_state_for_red_detuning() {
        let p = FaradayParams::reference();
        let d = TwoToneDrive {
            tone1_mhz: 50_000.0,
            tone2_mhz: 50_000.0,
            spacing_ghz: 2.6,
            phase: 0.0,
            duration_ns: 1.0,
        };
        let (down, up) = light_shifts(&p, &d, DriveComponents::SigmaMinus);
        assert!(down < 0.0 && up < 0.0 && down.abs() > 100.0 * up.abs());
        assert!(raman_resonance(&p, &d, DriveComponents::SigmaMinus).unwrap() < 2.6);
    }

    #[test]
    fn equal_tones_reproduce_two_photon_rate() {
        let tone = equal_tone_amplitude(226.8, 409.0, 600.0).unwrap();
        let w = mhz_to_angular(tone);
        let rabi = w * w / (409f64.sqrt() * ghz_to_angular(600.0));
        assert!((angular_to_mhz(rabi) - 226.8).abs() < 1e-9);
        assert!(equal_tone_amplitude(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn readout_projects_trions() {
        let rho = DensityMatrix::from_populations(&[0.2, 0.3, 0.4, 0.1]).unwrap();
        let r = readout_down(&rho, 9.0);
        assert!((r - (0.2 + 0.36 + 0.01)).abs() < 1e-15);
    }
}
