use crate::units::{BOHR_MAGNETON, PLANCK};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cyclicity {
    /// C = γ_SC/γ_SP.
    pub cyclicity: f64,
    /// Spin-flip branching γ_SP/γ1.
    pub branching: f64,
}

/// Cyclicity from the trion lifetime and the saturated spin-pumping time.
pub fn cyclicity(trion_lifetime_ns: f64, pumping_time_ns: f64) -> Result<Cyclicity> {
    if !(trion_lifetime_ns > 0.0 && pumping_time_ns > 0.0) {
        return Err(Error::domain("lifetimes must be positive"));
    }
    if pumping_time_ns <= trion_lifetime_ns {
        return Err(Error::domain(format!(
            "pumping time {pumping_time_ns} ns must exceed the trion lifetime {trion_lifetime_ns} ns"
        )));
    }
    Ok(Cyclicity {
        cyclicity: pumping_time_ns / trion_lifetime_ns - 1.0,
        branching: trion_lifetime_ns / pumping_time_ns,
    })
}

/// Electron g-factor |g| = h·f/(μ_B·B).
pub fn g_factor(splitting_ghz: f64, field_tesla: f64) -> Result<f64> {
    if !(field_tesla > 0.0) {
        return Err(Error::domain("magnetic field must be positive"));
    }
    Ok(PLANCK * splitting_ghz * 1e9 / (BOHR_MAGNETON * field_tesla))
}

/// Steady excited-state occupation of a two-level transition at
/// saturation parameter s.
pub fn excited_fraction(s: f64) -> f64 {
    s / (2.0 * (1.0 + s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QStatus {
    Finite,
    /// f_π ≤ 1/2: no net inversion, Q is reported as 0.
    NoContrast,
    /// f_π = 1: lossless, Q is infinite.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiContrast {
    pub f_pi: f64,
    pub q: f64,
    pub status: QStatus,
}

/// Q = −1/ln(2f_π − 1).
pub fn q_factor(f_pi: f64) -> (f64, QStatus) {
    if !(f_pi > 0.5) {
        (0.0, QStatus::NoContrast)
    } else if f_pi >= 1.0 {
        (f64::INFINITY, QStatus::Unbounded)
    } else {
        (-1.0 / (2.0 * f_pi - 1.0).ln(), QStatus::Finite)
    }
}

/// One-sigma error on Q from an error on f_π (first-order propagation).
pub fn q_uncertainty(f_pi: f64, f_pi_err: f64) -> f64 {
    if !(f_pi > 0.5 && f_pi < 1.0) {
        return f64::INFINITY;
    }
    let x = 2.0 * f_pi - 1.0;
    let l = x.ln();
    (2.0 / (x * l * l)).abs() * f_pi_err.abs()
}

/// Flipped-state population at t_π = 1/(2Ω), interpolated from a trace.
pub fn pi_contrast(times_ns: &[f64], flipped: &[f64], rabi_mhz: f64) -> Result<f64> {
    if times_ns.len() != flipped.len() {
        return Err(Error::usage("time and population arrays differ in length"));
    }
    if !(rabi_mhz > 0.0) {
        return Err(Error::usage("Rabi frequency must be positive"));
    }
    let t_pi = 1.0 / (2.0 * rabi_mhz * 1e-3);
    let n = times_ns.len();
    if n == 0 || times_ns[0] > t_pi || times_ns[n - 1] < t_pi {
        return Err(Error::usage(format!("trace does not cover the π time {t_pi:.4} ns")));
    }
    if let Some(i) = times_ns.iter().position(|&t| t == t_pi) {
        return Ok(flipped[i]);
    }
    let hi = times_ns.iter().position(|&t| t > t_pi).unwrap();
    // cubic Lagrange through up to four neighbours
    let lo = hi.saturating_sub(2).min(n.saturating_sub(4));
    let idx: Vec<usize> = (lo..(lo + 4).min(n)).collect();
    let mut v = 0.0;
    for &i in &idx {
        let mut w = 1.0;
        for &j in &idx {
            if j != i {
                w *= (t_pi - times_ns[j]) / (times_ns[i] - times_ns[j]);
            }
        }
        v += w * flipped[i];
    }
    Ok(v)
}

pub fn pi_contrast_and_q(times_ns: &[f64], flipped: &[f64], rabi_mhz: f64) -> Result<PiContrast> {
    let f_pi = pi_contrast(times_ns, flipped, rabi_mhz)?;
    let (q, status) = q_factor(f_pi);
    Ok(PiContrast { f_pi, q, status })
}
