//! Light-hole admixture of the heavy-hole trion states from the Bir–Pikus
//! strain Hamiltonian, and the resulting Raman couplings of two parallel
//! Λ systems.

use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Bulk GaAs shear deformation potentials and spin-orbit splitting, meV.
pub const GAAS_B_MEV: f64 = -2000.0;
pub const GAAS_D_MEV: f64 = -4800.0;
pub const GAAS_DELTA_SO_MEV: f64 = 341.0;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleMixing {
    /// Heavy-hole weight, real and non-negative.
    pub alpha: f64,
    /// Admixture enabling circularly polarized spin-flip transitions.
    pub chi: C64,
    /// Admixture enabling π_z-polarized spin-flip transitions.
    pub epsilon: C64,
    /// Heavy-hole/light-hole splitting, meV.
    pub delta_lh: f64,
    pub delta_so: f64,
    pub r: C64,
    pub s: C64,
    pub b: f64,
    pub d: f64,
    pub strain: [[f64; 3]; 3],
}

/// χ and ε from a symmetric strain tensor (x, y, z order). Energies in meV.
/// `delta_lh_override` replaces the strain-only splitting, e.g. to include
/// confinement.
pub fn hole_mixing_from_strain(
    strain: &[[f64; 3]; 3],
    b: f64,
    d: f64,
    delta_so: f64,
    delta_lh_override: Option<f64>,
) -> Result<HoleMixing> {
    for i in 0..3 {
        for j in 0..i {
            if (strain[i][j] - strain[j][i]).abs() > SYMMETRY_TOL {
                return Err(Error::usage("strain tensor must be symmetric"));
            }
        }
    }
    if strain.iter().flatten().any(|v| !v.is_finite()) || !b.is_finite() || !d.is_finite() {
        return Err(Error::usage("strain and deformation potentials must be finite"));
    }
    if !(delta_so > 0.0) {
        return Err(Error::domain("spin-orbit splitting must be positive"));
    }
    let [[exx, exy, ezx], [_, eyy, eyz], [_, _, ezz]] = *strain;
    let delta_lh = delta_lh_override.unwrap_or(b / 2.0 * (exx + eyy - 2.0 * ezz));
    let unstrained = strain.iter().flatten().all(|&v| v == 0.0);
    if unstrained && delta_lh_override.is_none() {
        return Ok(HoleMixing {
            alpha: 1.0,
            chi: C64::new(0.0, 0.0),
            epsilon: C64::new(0.0, 0.0),
            delta_lh: 0.0,
            delta_so,
            r: C64::new(0.0, 0.0),
            s: C64::new(0.0, 0.0),
            b,
            d,
            strain: *strain,
        });
    }
    if !(delta_lh > 0.0) {
        return Err(Error::domain(format!(
            "heavy-hole/light-hole splitting {delta_lh} meV is not positive (inverted ordering unsupported)"
        )));
    }
    let r = C64::new(3f64.sqrt() / 2.0 * b * (exx - eyy), -d * exy);
    let s = C64::new(d / 2f64.sqrt() * ezx, -d / 2f64.sqrt() * eyz);
    let denom = delta_lh * delta_so;
    let chi = (-(2f64.sqrt()) * delta_so * s.conj() - 6f64.sqrt() * s * r.conj()) / denom;
    let epsilon = ((1.5 * delta_lh + delta_so) * r.conj() + 3f64.sqrt() * s.conj() * s.conj()) / denom;
    let weight = chi.norm_sqr() + epsilon.norm_sqr();
    if weight > 1.0 {
        return Err(Error::domain(format!(
            "light-hole admixture {weight:.3} exceeds unity; strain is outside the perturbative regime"
        )));
    }
    Ok(HoleMixing {
        alpha: (1.0 - weight).sqrt(),
        chi,
        epsilon,
        delta_lh,
        delta_so,
        r,
        s,
        b,
        d,
        strain: *strain,
    })
}

fn check_poles(detuning_ghz: f64, hole_splitting_ghz: f64) -> Result<()> {
    if detuning_ghz == 0.0 || detuning_ghz + hole_splitting_ghz == 0.0 {
        return Err(Error::domain("Raman coupling diverges on a single-photon resonance"));
    }
    Ok(())
}

/// Ground-state coupling for in-plane polarized light, from the two
/// intensities |Ω_σ−|² and |Ω_σ+|² (GHz²). Result in GHz.
pub fn raman_coupling_in_plane(
    chi: C64,
    intensity_minus: f64,
    intensity_plus: f64,
    detuning_ghz: f64,
    hole_splitting_ghz: f64,
) -> Result<C64> {
    check_poles(detuning_ghz, hole_splitting_ghz)?;
    let c = chi.conj();
    Ok(-c * intensity_minus / (2.0 * detuning_ghz) + c * intensity_plus / (2.0 * (detuning_ghz + hole_splitting_ghz)))
}

/// Ground-state coupling including a π_z field component, a fraction
/// `eta_z` of the in-plane linear amplitude `rabi_pi`. Amplitudes in GHz.
#[allow(clippy::too_many_arguments)]
pub fn raman_coupling_with_pi_z(
    chi: C64,
    epsilon: C64,
    eta_z: f64,
    rabi_minus: C64,
    rabi_plus: C64,
    rabi_pi: C64,
    detuning_ghz: f64,
    hole_splitting_ghz: f64,
) -> Result<C64> {
    check_poles(detuning_ghz, hole_splitting_ghz)?;
    if epsilon * eta_z == C64::new(0.0, 0.0) {
        return raman_coupling_in_plane(chi, rabi_minus.norm_sqr(), rabi_plus.norm_sqr(), detuning_ghz, hole_splitting_ghz);
    }
    let (cc, ec) = (chi.conj(), epsilon.conj());
    let first = rabi_minus.conj() * (-cc * rabi_minus + ec * eta_z * rabi_pi) / (2.0 * detuning_ghz);
    let second =
        rabi_plus * (cc * rabi_plus.conj() + ec * eta_z * rabi_pi.conj()) / (2.0 * (detuning_ghz + hole_splitting_ghz));
    Ok(first + second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic() -> [[f64; 3]; 3] {
        [[1e-3, 2e-4, 1e-4], [2e-4, -5e-4, 0.0], [1e-4, 0.0, 0.0]]
    }

    #[test]
    fn unstrained_is_pure_heavy_hole() {
        let m = hole_mixing_from_strain(&[[0.0; 3]; 3], GAAS_B_MEV, GAAS_D_MEV, GAAS_DELTA_SO_MEV, None).unwrap();
        assert_eq!(m.alpha, 1.0);
        assert_eq!(m.chi, C64::new(0.0, 0.0));
        assert_eq!(m.epsilon, C64::new(0.0, 0.0));
    }

    #[test]
    fn shear_only_limit() {
        // R = 0 when e_xx = e_yy and e_xy = 0
        let e = [[0.0, 0.0, 3e-4], [0.0, 0.0, 1e-4], [3e-4, 1e-4, 3e-3]];
        let m = hole_mixing_from_strain(&e, GAAS_B_MEV, GAAS_D_MEV, GAAS_DELTA_SO_MEV, None).unwrap();
        assert!(GAAS_DELTA_SO_MEV / m.delta_lh >= 50.0);
        let approx = -(2f64.sqrt()) * m.s.conj() / m.delta_lh;
        assert!((m.chi - approx).norm() <= 0.02 * approx.norm());
    }

    #[test]
    fn inverted_ordering_rejected() {
        // b < 0 and in-plane tensile strain put the light hole below
        let e = generic();
        assert!(hole_mixing_from_strain(&e, GAAS_B_MEV, GAAS_D_MEV, GAAS_DELTA_SO_MEV, None).is_err());
        let mut asym = e;
        asym[0][1] = 0.0;
        assert!(hole_mixing_from_strain(&asym, GAAS_B_MEV, GAAS_D_MEV, GAAS_DELTA_SO_MEV, Some(3.0)).is_err());
    }

    #[test]
    fn normalization() {
        let m = hole_mixing_from_strain(&generic(), GAAS_B_MEV, GAAS_D_MEV, GAAS_DELTA_SO_MEV, Some(30.0)).unwrap();
        let total = m.alpha * m.alpha + m.chi.norm_sqr() + m.epsilon.norm_sqr();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_light_interferes_away() {
        let chi = C64::new(0.03, -0.01);
        assert_eq!(raman_coupling_in_plane(chi, 4.0, 4.0, 600.0, 0.0).unwrap(), C64::new(0.0, 0.0));
        let single = raman_coupling_in_plane(chi, 4.0, 0.0, 600.0, 150.0).unwrap();
        assert!((single + chi.conj() * 4.0 / 1200.0).norm() < 1e-16);
        let residual = raman_coupling_in_plane(chi, 4.0, 4.0, 600.0, 150.0).unwrap();
        let expect = chi.norm() * 4.0 * (1.0 / 1200.0 - 1.0 / 1500.0);
        assert!((residual.norm() - expect).abs() < 1e-15);
        assert!(raman_coupling_in_plane(chi, 1.0, 1.0, -150.0, 150.0).is_err());
    }

    #[test]
    fn pi_z_reduces_and_needs_circular_light() {
        let chi = C64::new(0.02, 0.005);
        let eps = C64::new(-0.01, 0.03);
        let (m, p) = (C64::new(1.1, 0.4), C64::new(0.3, -0.7));
        let pi = C64::new(0.5, 0.2);
        let reduced = raman_coupling_with_pi_z(chi, eps, 0.0, m, p, pi, 600.0, 150.0).unwrap();
        let plane = raman_coupling_in_plane(chi, m.norm_sqr(), p.norm_sqr(), 600.0, 150.0).unwrap();
        assert_eq!(reduced, plane);
        let zero = C64::new(0.0, 0.0);
        let reduced = raman_coupling_with_pi_z(chi, zero, 0.4, m, p, pi, 600.0, 150.0).unwrap();
        assert_eq!(reduced, plane);
        assert_eq!(
            raman_coupling_with_pi_z(chi, eps, 0.4, zero, zero, pi, 600.0, 150.0).unwrap(),
            zero
        );
    }

    #[test]
    fn elliptical_light_can_beat_circular() {
        let chi = C64::new(-0.01, 0.0);
        let eps = C64::new(0.05, 0.0);
        let eta_z = 0.3;
        let circular = raman_coupling_with_pi_z(chi, eps, eta_z, C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), 600.0, 150.0)
            .unwrap()
            .norm();
        let theta = 0.3f64;
        let best = (0..360)
            .map(|k| {
                let phi = (k as f64).to_radians();
                let m = C64::new(theta.cos(), 0.0);
                let p = C64::from_polar(theta.sin(), phi);
                let pi = (m + p) / 2f64.sqrt();
                raman_coupling_with_pi_z(chi, eps, eta_z, m, p, pi, 600.0, 150.0).unwrap().norm()
            })
            .fold(0.0, f64::max);
        assert!(best > circular, "{best} vs {circular}");
    }
}
