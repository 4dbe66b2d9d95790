//! Numerical Raman calibration from the Floquet spectrum of the coherent
//! four-level Hamiltonian.
//!
//! The two tones beat at Δ_RF, which modulates the light shift of |↓⟩ at
//! the same frequency. Once the shift is comparable to Δ_RF the
//! perturbative resonance and two-photon rate are no longer accurate, so
//! both are read off the one-period propagator instead: near resonance
//! the two spin-like Floquet states form an avoided crossing whose minimum
//! gap is the effective Rabi frequency.

use nalgebra::Schur;
use rayon::prelude::*;

use super::faraday::{build_faraday_four_level, equal_tone_amplitude, raman_resonance, DriveComponents, FaradayParams, TwoToneDrive};
use super::{DOWN, UP};
use crate::quantum::{CMatrix, Dopri5, C64};
use crate::units::{angular_to_mhz, ghz_to_angular};
use crate::{Error, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const SPACING_TOL_GHZ: f64 = 1e-5;
const RABI_TOL: f64 = 1e-6;
const MAX_RECENTRE: usize = 20;
/// Below this local growth exponent of the gap with amplitude, more power
/// no longer helps.
const MIN_EXPONENT: f64 = 0.05;
const AMPLITUDE_ITERATIONS: usize = 30;
const N: usize = 4;

/// Equal-tone drive that produces a resonant two-photon Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanCalibration {
    pub tone_mhz: f64,
    /// Tone spacing at the Raman resonance, GHz.
    pub spacing_ghz: f64,
    /// Achieved effective Rabi frequency, MHz.
    pub rabi_mhz: f64,
}

/// Quasi-energy splitting (MHz) of the two spin-like Floquet states for
/// equal tones of amplitude `tone_mhz` spaced by `spacing_ghz`.
pub fn floquet_ground_gap(p: &FaradayParams, components: DriveComponents, tone_mhz: f64, spacing_ghz: f64) -> Result<f64> {
    let rf = ghz_to_angular(spacing_ghz).abs();
    if rf < 1e-6 {
        return Err(Error::domain("tone spacing too small for a Floquet analysis"));
    }
    let coherent = FaradayParams {
        trion_decay_mhz: 0.0,
        gamma1_mhz: 0.0,
        gamma2_mhz: 0.0,
        ..*p
    };
    let drive = TwoToneDrive {
        tone1_mhz: tone_mhz,
        tone2_mhz: tone_mhz,
        spacing_ghz,
        phase: 0.0,
        duration_ns: 0.0,
    };
    let model = build_faraday_four_level(&coherent, &drive, components)?;
    let ham = model.hamiltonian();
    let period = 2.0 * std::f64::consts::PI / rf;
    // compile H(t) = H0 + Σ c(t)·A + c̄(t)·A† into fixed-size arrays
    let mut h0 = [[C64::new(0.0, 0.0); N]; N];
    for (i, row) in h0.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = ham.static_part()[(i, j)];
        }
    }
    debug_assert!(ham.terms().len() <= N);
    let mut entries = Vec::new();
    for (k, (op, _)) in ham.terms().iter().enumerate() {
        for i in 0..N {
            for j in 0..N {
                if op[(i, j)] != C64::new(0.0, 0.0) {
                    entries.push((i, j, op[(i, j)], k));
                }
            }
        }
    }
    let mut u = vec![C64::new(0.0, 0.0); N * N];
    for k in 0..N {
        u[k * N + k] = C64::new(1.0, 0.0);
    }
    let integ = Dopri5 {
        rtol: 1e-10,
        atol: 1e-12,
        ..Dopri5::default()
    };
    integ.integrate(
        |t, y, dy| {
            let mut h = h0;
            let mut env = [C64::new(0.0, 0.0); N];
            for (slot, (_, e)) in env.iter_mut().zip(ham.terms()) {
                *slot = e.at(t);
            }
            for &(i, j, a, k) in &entries {
                let v = env[k] * a;
                h[i][j] += v;
                h[j][i] += v.conj();
            }
            for i in 0..N {
                for j in 0..N {
                    let mut acc = C64::new(0.0, 0.0);
                    for (m, him) in h[i].iter().enumerate() {
                        acc += him * y[m * N + j];
                    }
                    dy[i * N + j] = C64::new(acc.im, -acc.re);
                }
            }
        },
        0.0,
        &mut u,
        &[period],
        |_, _| Ok(()),
    )?;
    let (q, t) = Schur::new(CMatrix::from_row_slice(N, N, &u)).unpack();
    let mut states: Vec<(f64, f64)> = (0..N)
        .map(|k| {
            let weight = q[(DOWN, k)].norm_sqr() + q[(UP, k)].norm_sqr();
            let eps = -t[(k, k)].arg() / period;
            (weight, eps)
        })
        .collect();
    states.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut d = (states[0].1 - states[1].1).abs() % rf;
    if d > rf / 2.0 {
        d = rf - d;
    }
    Ok(angular_to_mhz(d))
}

/// Tone spacing (GHz) minimising the spin-like Floquet gap for a fixed
/// tone amplitude, searched on `points` grid values around `guess_ghz`
/// within ±`half_width_ghz` and then refined by golden section.
/// Returns the spacing and the minimum gap in MHz.
pub fn floquet_resonance(
    p: &FaradayParams,
    components: DriveComponents,
    tone_mhz: f64,
    guess_ghz: f64,
    half_width_ghz: f64,
    points: usize,
) -> Result<(f64, f64)> {
    if points < 3 || !(half_width_ghz > 0.0) {
        return Err(Error::usage("resonance search needs at least three points and a positive width"));
    }
    let gap = |s: f64| floquet_ground_gap(p, components, tone_mhz, s);
    let step = 2.0 * half_width_ghz / (points - 1) as f64;
    let mut centre = guess_ghz;
    let mut bracket = None;
    // follow the minimum if it sits on the edge of the window
    for _ in 0..MAX_RECENTRE {
        let grid: Vec<f64> = (0..points).map(|k| centre - half_width_ghz + step * k as f64).collect();
        let vals: Vec<f64> = grid.par_iter().map(|&s| gap(s)).collect::<Result<_>>()?;
        let k = (0..points).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        if k > 0 && k + 1 < points {
            bracket = Some((grid[k - 1], grid[k + 1]));
            break;
        }
        centre = grid[k];
    }
    let Some((mut a, mut b)) = bracket else {
        return Err(Error::domain("no Raman resonance found near the expected tone spacing"));
    };
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (gap(x1)?, gap(x2)?);
    while b - a > SPACING_TOL_GHZ {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = gap(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = gap(x2)?;
        }
    }
    Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
}

/// Finds equal-tone amplitude and spacing giving a resonant two-photon
/// Rabi frequency `rabi_mhz`. Fails with a domain error when the beat
/// between the tones caps the achievable rate below the target.
pub fn calibrate_raman(p: &FaradayParams, components: DriveComponents, rabi_mhz: f64) -> Result<RamanCalibration> {
    p.validate()?;
    if !(rabi_mhz > 0.0) || !rabi_mhz.is_finite() {
        return Err(Error::usage("target Rabi frequency must be positive"));
    }
    let unreachable = |closest: f64| {
        Error::domain(format!(
            "a {rabi_mhz} MHz Raman rate is not reachable at this splitting (at most about {closest:.1} MHz)"
        ))
    };
    let perturbative = |tone: f64| {
        let drive = TwoToneDrive {
            tone1_mhz: tone,
            tone2_mhz: tone,
            spacing_ghz: p.electron_splitting_ghz,
            phase: 0.0,
            duration_ns: 0.0,
        };
        raman_resonance(p, &drive, components)
    };
    let width = rabi_mhz * 1e-3;
    let mut tone = equal_tone_amplitude(rabi_mhz, p.cyclicity, p.detuning_ghz)?;
    let mut offset = 0.0;
    let mut previous: Option<(f64, f64)> = None;
    let mut closest = 0.0f64;
    for iter in 0..AMPLITUDE_ITERATIONS {
        let guess = perturbative(tone)? + offset;
        let (spacing, gap) = if iter == 0 {
            floquet_resonance(p, components, tone, guess, 4.0 * width, 17)?
        } else {
            floquet_resonance(p, components, tone, guess, 0.5 * width, 5)?
        };
        closest = closest.max(gap);
        if (gap / rabi_mhz - 1.0).abs() < RABI_TOL {
            return Ok(RamanCalibration {
                tone_mhz: tone,
                spacing_ghz: spacing,
                rabi_mhz: gap,
            });
        }
        offset = spacing - perturbative(tone)?;
        // local power law gap ∝ tone^k, k = 2 in the perturbative limit
        let k = match previous {
            Some((t0, g0)) => (gap / g0).ln() / (tone / t0).ln(),
            None => 2.0,
        };
        if !(k > MIN_EXPONENT) && gap < rabi_mhz {
            return Err(unreachable(closest));
        }
        previous = Some((tone, gap));
        tone *= (rabi_mhz / gap).powf(1.0 / k.max(MIN_EXPONENT)).clamp(0.7, 1.4);
    }
    Err(unreachable(closest))
}
