//! Optical spin pumping on the |↓⟩ ↔ trion transition.

use serde::Serialize;

use super::{Physics, PumpingSpec, Trace};
use crate::fitting::{exp_decay, fit, FitOptions, FitResult};
use crate::models::{build_faraday_four_level, excited_fraction, trion_emission, FaradayParams, TwoToneDrive};
use crate::quantum::{evolve_with, DensityMatrix, EvolveOptions};
use crate::{Error, Result};

/// Emission γ1·ρ_ee (ns⁻¹) at `times_ns`, starting from the mixed spin
/// under one resonant tone whose Rabi frequency is γ1·√(s/2).
pub(super) fn emission_trace(spec: &PumpingSpec, physics: &Physics, times_ns: &[f64], opts: &EvolveOptions) -> Result<Vec<f64>> {
    let Physics::FourLevel(f) = physics else {
        return Err(Error::usage("spin pumping needs the four-level model"));
    };
    let p = FaradayParams {
        detuning_ghz: 0.0,
        ..f.params
    };
    if times_ns.first().is_some_and(|&t| t <= 0.0) {
        return Err(Error::usage("emission sample times must be positive"));
    }
    // the model couples each tone with weight 1/√2
    let tone = p.trion_decay_mhz * spec.saturation.sqrt() / 2.0;
    let drive = TwoToneDrive::single(tone, spec.duration_ns);
    let model = build_faraday_four_level(&p, &drive, f.components)?;
    let rho0 = DensityMatrix::from_populations(&[0.5, 0.5, 0.0, 0.0])?;
    let times: Vec<f64> = std::iter::once(0.0).chain(times_ns.iter().copied()).collect();
    let traj = evolve_with(&model, &rho0, &times, opts)?;
    Ok(traj.states()[1..].iter().map(|r| trion_emission(r, &p)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PumpingFit {
    /// Fitted decay time of the emission, ns.
    pub tau_ns: f64,
    pub tau_err_ns: f64,
    /// |↓⟩ population left once pumping balances off-resonant repumping
    /// from |↑⟩, relative to the mixed start.
    pub residual_fraction: f64,
    /// Decay time of the pumping alone, with the repumping removed.
    pub pumping_tau_ns: f64,
    /// Pumping time multiplied by the steady excited fraction
    /// s/(2(1+s)); comparable to (C+1)/γ1.
    pub per_excitation_tau_ns: f64,
    pub excited_fraction: f64,
    pub fit: FitResult,
}

/// Exponential fit of an emission trace produced at saturation `s`.
pub fn fit_pumping(trace: &Trace, saturation: f64) -> Result<PumpingFit> {
    let t = trace.x();
    let y = &trace.signal;
    if t.len() < 4 {
        return Err(Error::usage("pumping fit needs at least four samples"));
    }
    let (y0, y1) = (y[0], *y.last().unwrap());
    if !(y0 > y1) {
        return Err(Error::domain("emission does not decay; nothing to fit"));
    }
    let target = y1 + (y0 - y1) / std::f64::consts::E;
    let k = y.iter().position(|&v| v < target).unwrap_or(y.len() - 1);
    let tau0 = (t[k] - t[0]).max(t[1] - t[0]);
    let result = fit(&exp_decay(), &t, y, None, &[y0 - y1, tau0, y1], &FitOptions::default())?;
    let (tau, err) = result.get("tau").unwrap_or((f64::NAN, f64::NAN));
    let (amp, floor) = (result.params[0], result.params[2]);
    // emission tracks the |↓⟩ population, which starts at 1/2
    let residual = floor / (amp + floor);
    let pumping = tau / (1.0 - 0.5 * residual);
    let frac = excited_fraction(saturation);
    Ok(PumpingFit {
        tau_ns: tau,
        tau_err_ns: err,
        residual_fraction: residual,
        pumping_tau_ns: pumping,
        per_excitation_tau_ns: pumping * frac,
        excited_fraction: frac,
        fit: result,
    })
}
