use std::f64::consts::PI;

use super::{Protocol, PulseSegment, PumpingSpec, ScanAxis, ScanPoint, Signal};
use crate::models::{DOWN, UP};
use crate::{Error, Result};

/// Emission traces are sampled at the centres of bins this wide.
pub const PUMPING_BIN_NS: f64 = 1.0;

/// Pulse handling shared by the Ramsey and echo protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseOptions {
    /// Apply the scanned detuning during the rotations too, not only
    /// during free evolution.
    pub detune_pulses: bool,
    /// Treat rotations as instantaneous and exact.
    pub ideal_pulses: bool,
    /// Extra phase on the last π/2 rotation. `None` picks 0 for plain
    /// Ramsey and π/2 with a serrodyne ramp, so the fringe starts at zero.
    pub readout_phase: Option<f64>,
}

impl Default for PulseOptions {
    fn default() -> Self {
        Self {
            detune_pulses: true,
            ideal_pulses: false,
            readout_phase: None,
        }
    }
}

fn pi_duration(rabi_mhz: f64) -> Result<f64> {
    if !(rabi_mhz > 0.0) || !rabi_mhz.is_finite() {
        return Err(Error::usage("rotations need a positive Rabi frequency"));
    }
    Ok(1e3 / (2.0 * rabi_mhz))
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage(format!("{what} grid has non-finite values")));
    }
    Ok(())
}

fn check_delays(grid: &[f64], what: &str) -> Result<()> {
    check_grid(grid, what)?;
    if grid.iter().any(|&v| v < 0.0) {
        return Err(Error::usage(format!("{what} grid has negative delays")));
    }
    Ok(())
}

fn protocol(name: &str, axis: ScanAxis, signal: Signal, points: Vec<ScanPoint>) -> Protocol {
    Protocol {
        name: name.into(),
        preparation: None,
        axes: vec![axis],
        points,
        signal,
        echo_decay_ns: None,
        modulation: None,
        pumping: None,
    }
}

/// Initialize |↑⟩, drive for τ, read |↓⟩.
pub fn rabi_protocol(rabi_mhz: f64, detuning_mhz: f64, durations_ns: &[f64]) -> Result<Protocol> {
    check_delays(durations_ns, "pulse duration")?;
    let points = durations_ns
        .iter()
        .map(|&tau| ScanPoint {
            coords: vec![tau],
            shots: vec![vec![
                PulseSegment::initialize(UP),
                PulseSegment::drive(rabi_mhz, detuning_mhz, 0.0, tau),
                PulseSegment::readout(DOWN),
            ]],
            free_time_ns: tau,
        })
        .collect();
    Ok(protocol("rabi", ScanAxis::new("tau", "ns"), Signal::Population, points))
}

/// Fixed pulse swept over drive frequency. The spin resonance sits at
/// `splitting_ghz` shifted by `stark_ratio`·Ω.
pub fn esr_scan_protocol(
    rabi_mhz: f64,
    duration_ns: f64,
    frequencies_ghz: &[f64],
    stark_ratio: f64,
    splitting_ghz: f64,
) -> Result<Protocol> {
    check_grid(frequencies_ghz, "frequency")?;
    if !(duration_ns >= 0.0) || !stark_ratio.is_finite() || !splitting_ghz.is_finite() {
        return Err(Error::usage("scan needs a non-negative duration and finite splitting"));
    }
    let centre_ghz = splitting_ghz + stark_ratio * rabi_mhz * 1e-3;
    let points = frequencies_ghz
        .iter()
        .map(|&w| ScanPoint {
            coords: vec![w],
            shots: vec![vec![
                PulseSegment::initialize(UP),
                PulseSegment::drive(rabi_mhz, (w - centre_ghz) * 1e3, 0.0, duration_ns),
                PulseSegment::readout(DOWN),
            ]],
            free_time_ns: duration_ns,
        })
        .collect();
    Ok(protocol("esr", ScanAxis::new("frequency", "GHz"), Signal::Population, points))
}

fn rotation(rabi_mhz: f64, detuning_mhz: f64, phase: f64, angle: f64, opts: &PulseOptions) -> Result<PulseSegment> {
    let det = if opts.detune_pulses { detuning_mhz } else { 0.0 };
    let mut seg = PulseSegment::drive(rabi_mhz, det, phase, pi_duration(rabi_mhz)? * angle / PI);
    seg.ideal = opts.ideal_pulses;
    Ok(seg)
}

/// Balanced (or single-shot) Ramsey: π/2, free evolution τ, π/2 with the
/// phase advanced by 2π·f_serr·τ.
pub fn ramsey_protocol(
    rabi_mhz: f64,
    detuning_mhz: f64,
    delays_ns: &[f64],
    serrodyne_mhz: f64,
    balanced: bool,
    opts: &PulseOptions,
) -> Result<Protocol> {
    check_delays(delays_ns, "Ramsey delay")?;
    if !serrodyne_mhz.is_finite() || !detuning_mhz.is_finite() {
        return Err(Error::usage("detuning and serrodyne frequency must be finite"));
    }
    let base = opts
        .readout_phase
        .unwrap_or(if serrodyne_mhz != 0.0 { PI / 2.0 } else { 0.0 });
    let half = rotation(rabi_mhz, detuning_mhz, 0.0, PI / 2.0, opts)?;
    let mut points = Vec::with_capacity(delays_ns.len());
    for &tau in delays_ns {
        let phase = base - 2.0 * PI * serrodyne_mhz * 1e-3 * tau;
        let shot = |extra: f64| -> Result<Vec<PulseSegment>> {
            Ok(vec![
                PulseSegment::initialize(UP),
                half,
                PulseSegment::wait(detuning_mhz, tau),
                rotation(rabi_mhz, detuning_mhz, phase + extra, PI / 2.0, opts)?,
                PulseSegment::readout(DOWN),
            ])
        };
        let shots = if balanced { vec![shot(0.0)?, shot(PI)?] } else { vec![shot(0.0)?] };
        points.push(ScanPoint {
            coords: vec![tau],
            shots,
            free_time_ns: tau,
        });
    }
    let signal = if balanced { Signal::Contrast } else { Signal::Population };
    Ok(protocol("ramsey", ScanAxis::new("tau", "ns"), signal, points))
}

/// π/2 – T/2 – π – T/2 – π/2 with paired readout phases; the signal is +1
/// when the echo fully refocuses.
pub fn hahn_echo_protocol(rabi_mhz: f64, delays_ns: &[f64], detuning_mhz: f64, opts: &PulseOptions) -> Result<Protocol> {
    check_delays(delays_ns, "echo delay")?;
    let half = rotation(rabi_mhz, detuning_mhz, 0.0, PI / 2.0, opts)?;
    let flip = rotation(rabi_mhz, detuning_mhz, 0.0, PI, opts)?;
    let base = PI + opts.readout_phase.unwrap_or(0.0);
    let mut points = Vec::with_capacity(delays_ns.len());
    for &total in delays_ns {
        let shot = |extra: f64| -> Result<Vec<PulseSegment>> {
            Ok(vec![
                PulseSegment::initialize(UP),
                half,
                PulseSegment::wait(detuning_mhz, total / 2.0),
                flip,
                PulseSegment::wait(detuning_mhz, total / 2.0),
                rotation(rabi_mhz, detuning_mhz, base + extra, PI / 2.0, opts)?,
                PulseSegment::readout(DOWN),
            ])
        };
        points.push(ScanPoint {
            coords: vec![total],
            shots: vec![shot(0.0)?, shot(PI)?],
            free_time_ns: total,
        });
    }
    Ok(protocol("hahn_echo", ScanAxis::new("delay", "ns"), Signal::Contrast, points))
}

/// Emission under a resonant tone at power `saturation`·P_sat, starting
/// from the mixed spin, sampled every [`PUMPING_BIN_NS`].
pub fn spin_pumping_protocol(saturation: f64, duration_ns: f64) -> Result<Protocol> {
    if !(saturation >= 0.0) || !saturation.is_finite() {
        return Err(Error::usage("saturation parameter must be finite and non-negative"));
    }
    if !(duration_ns >= 0.0) || !duration_ns.is_finite() {
        return Err(Error::usage("pumping duration must be finite and non-negative"));
    }
    let bins = (duration_ns / PUMPING_BIN_NS).floor() as usize;
    let points = (0..bins)
        .map(|k| {
            let t = (k as f64 + 0.5) * PUMPING_BIN_NS;
            ScanPoint {
                coords: vec![t],
                shots: Vec::new(),
                free_time_ns: t,
            }
        })
        .collect();
    let mut p = protocol("spin_pumping", ScanAxis::new("time", "ns"), Signal::Emission, points);
    p.pumping = Some(PumpingSpec { saturation, duration_ns });
    Ok(p)
}

/// Readout of |↓⟩ on a fully relaxed spin, pumping into |↑⟩, a delay, and
/// a second readout; the signal is the ratio of the two.
pub fn t1_protocol(delays_ns: &[f64]) -> Result<Protocol> {
    check_delays(delays_ns, "delay")?;
    let points = delays_ns
        .iter()
        .map(|&d| ScanPoint {
            coords: vec![d],
            shots: vec![vec![
                PulseSegment::initialize_mixed(),
                PulseSegment::readout(DOWN),
                PulseSegment::initialize(UP),
                PulseSegment::wait(0.0, d),
                PulseSegment::readout(DOWN),
            ]],
            free_time_ns: d,
        })
        .collect();
    Ok(protocol("t1", ScanAxis::new("delay", "ns"), Signal::Ratio, points))
}
