//! Pulse protocols and their simulation.
//!
//! A [`Protocol`] is a list of scan points, each holding one or two shots
//! (a shot is a [`PulseSequence`]). [`simulate_protocol`] runs every shot
//! against a physical model, averages over the detuning ensemble and turns
//! the readouts into the protocol's signal.

mod protocols;
mod pumping;
mod simulate;

use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

pub use protocols::{
    esr_scan_protocol, hahn_echo_protocol, rabi_protocol, ramsey_protocol, spin_pumping_protocol, t1_protocol,
    PulseOptions, PUMPING_BIN_NS,
};
pub use pumping::{fit_pumping, PumpingFit};
pub use simulate::{simulate_protocol, simulate_with, CountModel, FourLevelPhysics, Physics, RamanMode, SimOptions, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Initialize,
    Drive,
    Wait,
    Readout,
}

/// One step of a shot. Frequencies in MHz, times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSegment {
    pub kind: SegmentKind,
    pub rabi_mhz: f64,
    /// Detuning of the spin from the drive frame during this segment.
    pub detuning_mhz: f64,
    /// Drive phase, applied as e^{iφ} on the raising coupling.
    pub phase: f64,
    pub duration_ns: f64,
    /// Level to prepare or read; `None` prepares the maximally mixed spin.
    pub target: Option<usize>,
    /// Apply the drive as an instantaneous exact rotation by 2π·Ω·τ,
    /// taking no time.
    pub ideal: bool,
}

impl PulseSegment {
    pub fn initialize(level: usize) -> Self {
        Self::bare(SegmentKind::Initialize, Some(level))
    }

    pub fn initialize_mixed() -> Self {
        Self::bare(SegmentKind::Initialize, None)
    }

    pub fn readout(level: usize) -> Self {
        Self::bare(SegmentKind::Readout, Some(level))
    }

    pub fn drive(rabi_mhz: f64, detuning_mhz: f64, phase: f64, duration_ns: f64) -> Self {
        Self {
            kind: SegmentKind::Drive,
            rabi_mhz,
            detuning_mhz,
            phase,
            duration_ns,
            target: None,
            ideal: false,
        }
    }

    pub fn wait(detuning_mhz: f64, duration_ns: f64) -> Self {
        Self {
            kind: SegmentKind::Wait,
            rabi_mhz: 0.0,
            detuning_mhz,
            phase: 0.0,
            duration_ns,
            target: None,
            ideal: false,
        }
    }

    fn bare(kind: SegmentKind, target: Option<usize>) -> Self {
        Self {
            kind,
            rabi_mhz: 0.0,
            detuning_mhz: 0.0,
            phase: 0.0,
            duration_ns: 0.0,
            target,
            ideal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ns >= 0.0) || !self.duration_ns.is_finite() {
            return Err(Error::usage("segment duration must be finite and non-negative"));
        }
        if ![self.rabi_mhz, self.detuning_mhz, self.phase].iter().all(|v| v.is_finite()) {
            return Err(Error::usage("segment parameters must be finite"));
        }
        match self.kind {
            SegmentKind::Wait if self.rabi_mhz != 0.0 => Err(Error::usage("a wait segment cannot carry a drive")),
            SegmentKind::Readout if self.target.is_none() => Err(Error::usage("readout needs a target level")),
            _ => Ok(()),
        }
    }

    /// Equal in everything except the duration.
    fn same_shape(&self, other: &Self) -> bool {
        Self {
            duration_ns: 0.0,
            ..*self
        } == Self {
            duration_ns: 0.0,
            ..*other
        }
    }
}

pub type PulseSequence = Vec<PulseSegment>;

/// How shot readouts become the scan signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    /// Last readout of the single shot.
    Population,
    /// Readout counts of the single shot.
    Counts,
    /// (n_φ − n_{φ+π})/(n_φ + n_{φ+π}) from a pair of shots.
    Contrast,
    /// Last readout divided by the first one within the shot.
    Ratio,
    /// Trion photon emission rate γ1·ρ_ee, ns⁻¹.
    Emission,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Signal::Population => "population",
            Signal::Counts => "counts",
            Signal::Contrast => "contrast",
            Signal::Ratio => "ratio",
            Signal::Emission => "emission",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoolingMethod {
    Raman,
    Rabi,
    Algorithmic,
    ModifiedAlgorithmic,
}

impl CoolingMethod {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "raman" => CoolingMethod::Raman,
            "rabi" => CoolingMethod::Rabi,
            "algorithmic" => CoolingMethod::Algorithmic,
            "modified-algorithmic" => CoolingMethod::ModifiedAlgorithmic,
            other => return Err(Error::usage(format!("unknown cooling method '{other}'"))),
        })
    }
}

/// Nuclear-spin preparation. Only the resulting T2* enters the
/// simulation; the rest is carried along as metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingSpec {
    pub method: CoolingMethod,
    pub rabi_mhz: f64,
    pub frequency_ghz: f64,
    pub resulting_t2star_ns: f64,
    pub metadata: Vec<(String, String)>,
}

impl CoolingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.resulting_t2star_ns > 0.0) {
            return Err(Error::usage("cooling must leave a positive T2*"));
        }
        Ok(())
    }
}

/// Sinusoidal detuning δ(t) = A·cos(2πft + φ0), averaged over `phases`
/// uniformly spaced φ0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningModulation {
    pub amplitude_mhz: f64,
    pub frequency_mhz: f64,
    pub phases: usize,
}

impl DetuningModulation {
    pub fn validate(&self) -> Result<()> {
        if !self.amplitude_mhz.is_finite() || !(self.frequency_mhz > 0.0) || !self.frequency_mhz.is_finite() {
            return Err(Error::usage("modulation needs a finite amplitude and a positive frequency"));
        }
        if self.phases == 0 {
            return Err(Error::usage("modulation needs at least one phase sample"));
        }
        Ok(())
    }

    pub(crate) fn offsets(&self) -> Vec<f64> {
        (0..self.phases).map(|k| 2.0 * PI * k as f64 / self.phases as f64).collect()
    }

    /// δ(t) in MHz.
    pub(crate) fn at(&self, t_ns: f64, offset: f64) -> f64 {
        self.amplitude_mhz * (2.0 * PI * self.frequency_mhz * 1e-3 * t_ns + offset).cos()
    }

    /// ∫δ dt from `t0` to `t1`, in MHz·ns.
    pub(crate) fn integral(&self, t0: f64, t1: f64, offset: f64) -> f64 {
        let w = 2.0 * PI * self.frequency_mhz * 1e-3;
        self.amplitude_mhz * ((w * t1 + offset).sin() - (w * t0 + offset).sin()) / w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanAxis {
    pub name: String,
    pub unit: String,
}

impl ScanAxis {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    /// One value per protocol axis.
    pub coords: Vec<f64>,
    pub shots: Vec<PulseSequence>,
    /// Delay the phenomenological echo envelope is evaluated at, ns.
    pub free_time_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpingSpec {
    /// Power in units of the saturation power.
    pub saturation: f64,
    pub duration_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Protocol {
    pub name: String,
    pub preparation: Option<CoolingSpec>,
    pub axes: Vec<ScanAxis>,
    pub points: Vec<ScanPoint>,
    pub signal: Signal,
    /// Echo envelope exp(−(T/T2HE)²) applied to contrast, T2HE in ns.
    pub echo_decay_ns: Option<f64>,
    pub modulation: Option<DetuningModulation>,
    pub pumping: Option<PumpingSpec>,
}

impl Protocol {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.preparation {
            c.validate()?;
        }
        if let Some(m) = &self.modulation {
            m.validate()?;
        }
        if let Some(t) = self.echo_decay_ns {
            if !(t > 0.0) {
                return Err(Error::usage("echo decay time must be positive"));
            }
        }
        let shots = match self.signal {
            Signal::Contrast => 2,
            Signal::Emission => 0,
            _ => 1,
        };
        for (i, p) in self.points.iter().enumerate() {
            if p.coords.len() != self.axes.len() {
                return Err(Error::usage(format!("scan point {i} has {} coordinates for {} axes", p.coords.len(), self.axes.len())));
            }
            if p.shots.len() != shots {
                return Err(Error::usage(format!(
                    "scan point {i} has {} shots, a {} signal needs {shots}",
                    p.shots.len(),
                    self.signal.name()
                )));
            }
            for shot in &p.shots {
                if !matches!(shot.first().map(|s| s.kind), Some(SegmentKind::Initialize)) {
                    return Err(Error::usage(format!("scan point {i}: a shot must start with an initialization")));
                }
                if !shot.iter().any(|s| s.kind == SegmentKind::Readout) {
                    return Err(Error::usage(format!("scan point {i}: a shot needs a readout")));
                }
                let ratio_ok = self.signal != Signal::Ratio || shot.iter().filter(|s| s.kind == SegmentKind::Readout).count() >= 2;
                if !ratio_ok {
                    return Err(Error::usage(format!("scan point {i}: a ratio signal needs two readouts")));
                }
                shot.iter().try_for_each(PulseSegment::validate)?;
            }
        }
        if self.signal == Signal::Emission && self.pumping.is_none() {
            return Err(Error::usage("an emission signal needs a pumping drive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
