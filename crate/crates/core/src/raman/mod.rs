//! Closed-form Raman algebra, heavy-hole/light-hole mixing from strain and
//! waveplate polarization calculus.

mod algebra;
mod mixing;
mod polarization;

pub use algebra::{
    differential_stark, eta_from_cyclicity, eta_from_slope, stark_slope, two_photon_rabi, Handedness, RamanParams,
};
pub use mixing::{
    hole_mixing_from_strain, raman_coupling_in_plane, raman_coupling_with_pi_z, HoleMixing, GAAS_B_MEV,
    GAAS_DELTA_SO_MEV, GAAS_D_MEV,
};
pub use polarization::{jones_through_waveplates, stokes, waveplate, JonesVector, StokesVector};
