use crate::{Error, Result};

/// Circular handedness of the Raman beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handedness {
    /// Matches the |↓⟩ ↔ |⇓↓↑⟩ dipole; red-shifts the ESR line.
    SigmaMinus,
    /// Matches the |↑⟩ ↔ |⇑↓↑⟩ dipole; blue-shifts the ESR line.
    SigmaPlus,
}

impl Handedness {
    fn sign(self) -> f64 {
        match self {
            Handedness::SigmaMinus => -1.0,
            Handedness::SigmaPlus => 1.0,
        }
    }
}

/// One Λ system driven by two equal-polarization Raman tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams {
    /// Single-photon detuning Δ, GHz.
    pub detuning_ghz: f64,
    /// Arm Rabi frequencies, GHz.
    pub rabi_down_ghz: f64,
    pub rabi_up_ghz: f64,
    pub handedness: Handedness,
    /// Hole splitting ω_h, GHz.
    pub hole_splitting_ghz: f64,
}

impl RamanParams {
    pub fn validate(&self) -> Result<()> {
        if self.detuning_ghz == 0.0 || !self.detuning_ghz.is_finite() {
            return Err(Error::domain("single-photon detuning must be finite and non-zero"));
        }
        if !(self.rabi_down_ghz >= 0.0 && self.rabi_up_ghz >= 0.0) {
            return Err(Error::usage("arm Rabi frequencies must be non-negative"));
        }
        if !self.hole_splitting_ghz.is_finite() {
            return Err(Error::usage("hole splitting must be finite"));
        }
        Ok(())
    }

    /// Arm imbalance Ω↓/Ω↑; `None` unless both arms are driven.
    pub fn imbalance(&self) -> Option<f64> {
        (self.rabi_down_ghz > 0.0 && self.rabi_up_ghz > 0.0).then(|| self.rabi_down_ghz / self.rabi_up_ghz)
    }

    /// Two-photon Rabi frequency, MHz.
    pub fn rabi_mhz(&self) -> Result<f64> {
        self.validate()?;
        two_photon_rabi(self.rabi_down_ghz, self.rabi_up_ghz, self.detuning_ghz)
    }

    /// Signed differential light shift, MHz.
    pub fn stark_shift_mhz(&self) -> Result<f64> {
        let eta = self
            .imbalance()
            .ok_or_else(|| Error::domain("imbalance needs both Raman arms"))?;
        Ok(differential_stark(self.rabi_mhz()?, eta, self.handedness))
    }
}

/// Ω = Ω↓Ω↑/(2Δ), arms and detuning in GHz, result in MHz.
pub fn two_photon_rabi(rabi_down_ghz: f64, rabi_up_ghz: f64, detuning_ghz: f64) -> Result<f64> {
    if detuning_ghz == 0.0 {
        return Err(Error::domain("two-photon Rabi frequency diverges at zero detuning"));
    }
    Ok(rabi_down_ghz * rabi_up_ghz / (2.0 * detuning_ghz) * 1e3)
}

/// Signed shift of the ESR line per unit two-photon Rabi frequency.
pub fn stark_slope(eta: f64, handedness: Handedness) -> f64 {
    handedness.sign() * (eta * eta - 1.0).abs() / (2.0 * eta)
}

/// Differential light shift Δδ = ±Ω(η² − 1)/(2η) in the units of `rabi`.
pub fn differential_stark(rabi: f64, eta: f64, handedness: Handedness) -> f64 {
    rabi * stark_slope(eta, handedness)
}

/// Imbalance from a measured shift-per-Rabi slope.
pub fn eta_from_slope(slope: f64) -> f64 {
    slope.abs() + slope.hypot(1.0)
}

/// Ideal dipole-matched imbalance: √C for σ− light, 1/√C for σ+.
pub fn eta_from_cyclicity(cyclicity: f64, handedness: Handedness) -> Result<f64> {
    if !(cyclicity >= 1.0) {
        return Err(Error::domain(format!("cyclicity must be at least 1, got {cyclicity}")));
    }
    Ok(match handedness {
        Handedness::SigmaMinus => cyclicity.sqrt(),
        Handedness::SigmaPlus => 1.0 / cyclicity.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rabi_formula() {
        assert!((two_photon_rabi(6.0, 0.3, 600.0).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(two_photon_rabi(6.0, 0.0, 600.0).unwrap(), 0.0);
        assert!(two_photon_rabi(1.0, 1.0, 0.0).is_err());
        let (down, up, delta) = (7.3, 0.41, 512.0);
        let eta = down / up;
        let alt = down * down / (2.0 * eta * delta) * 1e3;
        let direct = two_photon_rabi(down, up, delta).unwrap();
        assert!((alt - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn stark_shift_magnitudes() {
        assert_eq!(differential_stark(100.0, 1.0, Handedness::SigmaMinus), 0.0);
        let r = differential_stark(1.0, 409f64.sqrt(), Handedness::SigmaMinus);
        assert!((r + 10.08).abs() < 0.01);
        let r = differential_stark(1.0, 34.0, Handedness::SigmaPlus);
        assert!((r - 16.985).abs() < 0.001);
        assert!((r - 17.2).abs() < 0.6);
    }

    #[test]
    fn eta_inversions() {
        assert!((eta_from_slope(17.2) - 34.43).abs() < 0.01);
        assert!((eta_from_slope(-7.4) - 14.87).abs() < 0.01);
        assert_eq!(eta_from_slope(0.0), 1.0);
        assert!((eta_from_cyclicity(409.0, Handedness::SigmaMinus).unwrap() - 20.22).abs() < 0.005);
        assert_eq!(eta_from_cyclicity(1.0, Handedness::SigmaPlus).unwrap(), 1.0);
        assert!((eta_from_cyclicity(289.0, Handedness::SigmaMinus).unwrap() - 17.0).abs() < 1e-12);
        assert!(eta_from_cyclicity(0.5, Handedness::SigmaMinus).is_err());
    }

    #[test]
    fn params_roundtrip() {
        let p = RamanParams {
            detuning_ghz: 600.0,
            rabi_down_ghz: 6.0,
            rabi_up_ghz: 0.3,
            handedness: Handedness::SigmaMinus,
            hole_splitting_ghz: 150.0,
        };
        assert_eq!(p.imbalance(), Some(20.0));
        let shift = p.stark_shift_mhz().unwrap();
        assert!((shift + 1.5 * 399.0 / 40.0).abs() < 1e-9);
    }
}
