use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use super::{pumping, DetuningModulation, Protocol, PulseSegment, PulseSequence, ScanAxis, SegmentKind, Signal};
use crate::ensemble::EnsembleSpec;
use crate::models::{
    build_faraday_four_level, build_two_level_phased, calibrate_raman, equal_tone_amplitude, matched_gamma2,
    raman_resonance, readout_down, DriveComponents, FaradayParams, RamanCalibration, TwoToneDrive, DOWN, UP,
};
use crate::quantum::ops::{sigma_x, sigma_y, sigma_z};
use crate::quantum::{evolve_with, CMatrix, DensityMatrix, Envelope, EvolveOptions, C64};
use crate::units::{compensated_sum, mhz_to_angular};
use crate::{Error, Result};

/// Contrast may exceed ±1 by this much from rounding before it counts as
/// a bug.
const CONTRAST_SLACK: f64 = 1e-9;

/// How the four-level model turns a requested Raman Rabi frequency into
/// tone amplitude and spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RamanMode {
    /// Exact, from the Floquet spectrum.
    Floquet,
    /// Second-order formulas; accurate only for weak drives.
    Perturbative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourLevelPhysics {
    /// `gamma2_mhz` is the dephasing of the equivalent two-level model;
    /// the scattering-induced part is subtracted per drive.
    pub params: FaradayParams,
    pub components: DriveComponents,
    pub raman: RamanMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Physics {
    TwoLevel { gamma1_mhz: f64, gamma2_mhz: f64 },
    FourLevel(FourLevelPhysics),
}

impl Physics {
    pub fn two_level(gamma1_mhz: f64, gamma2_mhz: f64) -> Self {
        Physics::TwoLevel { gamma1_mhz, gamma2_mhz }
    }

    pub fn four_level(params: FaradayParams) -> Self {
        Physics::FourLevel(FourLevelPhysics {
            params,
            components: DriveComponents::SigmaMinus,
            raman: RamanMode::Floquet,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Physics::TwoLevel { gamma1_mhz, gamma2_mhz } => {
                if !(*gamma1_mhz >= 0.0) || !(*gamma2_mhz >= 0.0) || !gamma1_mhz.is_finite() || !gamma2_mhz.is_finite() {
                    return Err(Error::usage("relaxation and dephasing rates must be finite and non-negative"));
                }
                Ok(())
            }
            Physics::FourLevel(f) => f.params.validate(),
        }
    }
}

/// Photon-counting readout. Each readout becomes a Poisson count with mean
/// shots·(bright·population + background).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountModel {
    pub bright_counts: f64,
    pub background: f64,
    pub shots: u64,
}

impl CountModel {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.bright_counts > 0.0) || !(self.background >= 0.0) || self.shots == 0 {
            return Err(Error::usage("count model needs positive bright counts and shots, and non-negative background"));
        }
        Ok(())
    }

    fn mean(&self, population: f64) -> f64 {
        self.shots as f64 * (self.bright_counts * population.clamp(0.0, 1.0) + self.background)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Without a count model the readouts are noiseless expectation values.
    pub counts: Option<CountModel>,
    pub seed: u64,
    /// Probability that initialization leaves the other spin state.
    pub init_error: f64,
    pub evolve: EvolveOptions,
}

/// Signal and per-shot readouts for every scan point, in scan order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub axes: Vec<ScanAxis>,
    pub coords: Vec<Vec<f64>>,
    pub signal_name: String,
    pub signal: Vec<f64>,
    /// Last readout of each shot: a population, or counts with a count
    /// model.
    pub readouts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    /// Values of the first scan axis.
    pub fn x(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.first().copied().unwrap_or(f64::NAN)).collect()
    }
}

/// Noiseless simulation with default integrator settings.
pub fn simulate_protocol(p: &Protocol, physics: &Physics, ensemble: &EnsembleSpec) -> Result<Trace> {
    simulate_with(p, physics, ensemble, &SimOptions::default())
}

pub fn simulate_with(p: &Protocol, physics: &Physics, ensemble: &EnsembleSpec, opts: &SimOptions) -> Result<Trace> {
    p.validate()?;
    physics.validate()?;
    if let Some(c) = &opts.counts {
        c.validate()?;
    }
    if !(0.0..=1.0).contains(&opts.init_error) {
        return Err(Error::usage("initialization error must lie in [0, 1]"));
    }
    let mut trace = Trace {
        axes: p.axes.clone(),
        coords: p.points.iter().map(|pt| pt.coords.clone()).collect(),
        signal_name: p.signal.name().into(),
        signal: Vec::new(),
        readouts: Vec::new(),
    };
    if p.is_empty() {
        return Ok(trace);
    }
    if let Some(spec) = &p.pumping {
        trace.signal = pumping::emission_trace(spec, physics, &trace.x(), &opts.evolve)?;
        trace.readouts = vec![Vec::new(); trace.signal.len()];
        return Ok(trace);
    }

    let mut ens = *ensemble;
    if let Some(c) = &p.preparation {
        ens.t2star_ns = c.resulting_t2star_ns;
    }
    let members = members(&ens, p.modulation.as_ref())?;
    let runner = Runner::new(p, physics, opts)?;

    let shots = p.points[0].shots.len();
    // readouts[shot][point][k]
    let mut averaged: Vec<Vec<Vec<f64>>> = Vec::with_capacity(shots);
    for shot in 0..shots {
        let seqs: Vec<&PulseSequence> = p.points.iter().map(|pt| &pt.shots[shot]).collect();
        let per_member: Vec<Vec<Vec<f64>>> = members
            .par_iter()
            .map(|m| runner.run_group(m, &seqs))
            .collect::<Result<_>>()
            .map_err(|e| locate(e, p))?;
        let avg = (0..seqs.len())
            .map(|i| {
                let n = per_member[0][i].len();
                (0..n)
                    .map(|k| compensated_sum(per_member.iter().zip(&members).map(|(r, m)| m.weight * r[i][k])))
                    .collect()
            })
            .collect();
        averaged.push(avg);
    }

    for (i, point) in p.points.iter().enumerate() {
        let mut last: Vec<f64> = averaged.iter().map(|s| *s[i].last().unwrap()).collect();
        let mut first: Vec<f64> = averaged.iter().map(|s| s[i][0]).collect();
        if let (Some(t2), Signal::Contrast) = (p.echo_decay_ns, p.signal) {
            let env = (-(point.free_time_ns / t2).powi(2)).exp();
            let mid = 0.5 * (last[0] + last[1]);
            for v in &mut last {
                *v = mid + (*v - mid) * env;
            }
        }
        if let Some(c) = &opts.counts {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let mut draw = |pop: f64| -> Result<f64> {
                let mean = c.mean(pop);
                if mean == 0.0 {
                    return Ok(0.0);
                }
                let d = Poisson::new(mean).map_err(|e| Error::domain(format!("count sampling: {e}")))?;
                Ok(d.sample(&mut rng))
            };
            for v in first.iter_mut().chain(last.iter_mut()) {
                *v = draw(*v)?;
            }
        }
        let value = match p.signal {
            Signal::Population => match &opts.counts {
                Some(c) => (last[0] / c.shots as f64 - c.background) / c.bright_counts,
                None => last[0],
            },
            Signal::Counts => last[0],
            Signal::Contrast => {
                let sum = last[0] + last[1];
                let v = if sum == 0.0 { 0.0 } else { (last[0] - last[1]) / sum };
                if v.abs() > 1.0 + CONTRAST_SLACK {
                    let e = Error::Numerical {
                        time: point.free_time_ns,
                        reason: format!("contrast {v} outside [-1, 1]"),
                    };
                    return Err(e.with_index(i, p));
                }
                v.clamp(-1.0, 1.0)
            }
            Signal::Ratio => {
                if first[0] == 0.0 {
                    return Err(Error::domain("ratio signal with an empty reference readout").with_index(i, p));
                }
                last[0] / first[0]
            }
            Signal::Emission => unreachable!("emission traces return early"),
        };
        trace.signal.push(value);
        trace.readouts.push(last);
    }
    Ok(trace)
}

impl Error {
    fn with_index(self, index: usize, p: &Protocol) -> Error {
        if matches!(self, Error::ScanPoint { .. }) {
            return self;
        }
        Error::ScanPoint {
            index,
            coords: describe(p, index),
            source: Box::new(self),
        }
    }
}

fn describe(p: &Protocol, index: usize) -> String {
    p.axes
        .iter()
        .zip(&p.points[index].coords)
        .map(|(a, v)| format!("{} = {v} {}", a.name, a.unit))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Errors raised inside a group carry their point index in a private
/// wrapper; turn that into coordinates.
fn locate(e: Error, p: &Protocol) -> Error {
    match e {
        Error::ScanPoint { index, source, .. } if index < p.points.len() => Error::ScanPoint {
            index,
            coords: describe(p, index),
            source,
        },
        other => other,
    }
}

fn at_point(index: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::ScanPoint { .. } => e,
        e => Error::ScanPoint {
            index,
            coords: String::new(),
            source: Box::new(e),
        },
    }
}

#[derive(Debug, Clone, Copy)]
struct Member {
    detuning_mhz: f64,
    rabi_scale: f64,
    weight: f64,
    modulation: Option<f64>,
}

fn members(ens: &EnsembleSpec, modulation: Option<&DetuningModulation>) -> Result<Vec<Member>> {
    let samples = ens.samples()?;
    let offsets: Vec<Option<f64>> = match modulation {
        Some(m) => m.offsets().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let k = offsets.len() as f64;
    Ok(samples
        .iter()
        .flat_map(|s| {
            offsets.iter().map(move |&o| Member {
                detuning_mhz: s.detuning_mhz,
                rabi_scale: s.rabi_scale,
                weight: s.weight / k,
                modulation: o,
            })
        })
        .collect())
}

struct State {
    rho: Option<DensityMatrix>,
    t: f64,
    readouts: Vec<f64>,
}

enum Model {
    Two {
        gamma1_mhz: f64,
        gamma2_mhz: f64,
        modulation: Option<DetuningModulation>,
    },
    Four {
        physics: FourLevelPhysics,
        calibrations: HashMap<u64, RamanCalibration>,
    },
}

struct Runner {
    model: Model,
    init_error: f64,
    evolve: EvolveOptions,
}

impl Runner {
    fn new(p: &Protocol, physics: &Physics, opts: &SimOptions) -> Result<Self> {
        let model = match physics {
            Physics::TwoLevel { gamma1_mhz, gamma2_mhz } => Model::Two {
                gamma1_mhz: *gamma1_mhz,
                gamma2_mhz: *gamma2_mhz,
                modulation: p.modulation,
            },
            Physics::FourLevel(f) => {
                if p.modulation.is_some() {
                    return Err(Error::usage("detuning modulation needs the two-level model"));
                }
                let mut calibrations = HashMap::new();
                for point in &p.points {
                    for shot in &point.shots {
                        let drives: Vec<&PulseSegment> = shot.iter().filter(|s| s.kind == SegmentKind::Drive).collect();
                        if drives.len() > 1 || drives.iter().any(|d| d.ideal) {
                            return Err(Error::usage(
                                "the four-level model runs shots with a single finite drive (Rabi and frequency scans)",
                            ));
                        }
                        for d in drives {
                            if d.rabi_mhz != 0.0 && !calibrations.contains_key(&d.rabi_mhz.to_bits()) {
                                calibrations.insert(d.rabi_mhz.to_bits(), calibrate(f, d.rabi_mhz)?);
                            }
                        }
                    }
                }
                Model::Four {
                    physics: *f,
                    calibrations,
                }
            }
        };
        Ok(Self {
            model,
            init_error: opts.init_error,
            evolve: opts.evolve,
        })
    }

    fn dim(&self) -> usize {
        match self.model {
            Model::Two { .. } => 2,
            Model::Four { .. } => 4,
        }
    }

    /// Readouts of every sequence for one ensemble member. Sequences that
    /// share a prefix and then differ only in the duration of one segment
    /// (a delay or pulse-length scan) evolve that segment once with all
    /// durations as output times.
    fn run_group(&self, m: &Member, seqs: &[&PulseSequence]) -> Result<Vec<Vec<f64>>> {
        let first = seqs[0];
        let split = (0..first.len()).find(|&j| seqs.iter().any(|s| s.get(j) != Some(&first[j])));
        let Some(v) = split else {
            if seqs.iter().any(|s| s.len() != first.len()) {
                return self.run_each(m, seqs);
            }
            let out = self.run(m, first, self.fresh()).map_err(at_point(0))?;
            return Ok(vec![out.readouts; seqs.len()]);
        };
        let shareable = !first[v].ideal
            && matches!(first[v].kind, SegmentKind::Drive | SegmentKind::Wait)
            && seqs.iter().all(|s| s.len() > v && s[v].same_shape(&first[v]));
        if !shareable {
            return self.run_each(m, seqs);
        }
        let start = self.run(m, &first[..v], self.fresh()).map_err(at_point(0))?;
        let durations: Vec<f64> = seqs.iter().map(|s| s[v].duration_ns).collect();
        let rho = start
            .rho
            .as_ref()
            .ok_or_else(|| Error::usage("a shot must start with an initialization"))?;
        let states = self.evolve_many(m, rho, start.t, &first[v], &durations).map_err(at_point(0))?;
        seqs.par_iter()
            .zip(states)
            .enumerate()
            .map(|(i, (s, rho))| {
                let st = State {
                    rho: Some(rho),
                    t: start.t + durations[i],
                    readouts: start.readouts.clone(),
                };
                Ok(self.run(m, &s[v + 1..], st).map_err(at_point(i))?.readouts)
            })
            .collect()
    }

    fn run_each(&self, m: &Member, seqs: &[&PulseSequence]) -> Result<Vec<Vec<f64>>> {
        seqs.par_iter()
            .enumerate()
            .map(|(i, s)| Ok(self.run(m, s, self.fresh()).map_err(at_point(i))?.readouts))
            .collect()
    }

    fn fresh(&self) -> State {
        State {
            rho: None,
            t: 0.0,
            readouts: Vec::new(),
        }
    }

    fn run(&self, m: &Member, segments: &[PulseSegment], mut st: State) -> Result<State> {
        for seg in segments {
            match seg.kind {
                SegmentKind::Initialize => st.rho = Some(self.initial(seg.target)?),
                SegmentKind::Readout => {
                    let rho = st.rho.as_ref().ok_or_else(|| Error::usage("readout before initialization"))?;
                    let level = seg.target.unwrap_or(DOWN);
                    if level >= self.dim() {
                        return Err(Error::usage(format!("level {level} does not exist in a {}-level model", self.dim())));
                    }
                    st.readouts.push(self.readout(rho, level));
                }
                SegmentKind::Drive | SegmentKind::Wait => {
                    let rho = st.rho.take().ok_or_else(|| Error::usage("pulse before initialization"))?;
                    if seg.ideal {
                        st.rho = Some(rotate(&rho, 2.0 * std::f64::consts::PI * seg.rabi_mhz * m.rabi_scale * seg.duration_ns * 1e-3, seg.phase)?);
                    } else {
                        let mut out = self.evolve_many(m, &rho, st.t, seg, &[seg.duration_ns])?;
                        st.rho = out.pop();
                        st.t += seg.duration_ns;
                    }
                }
            }
        }
        Ok(st)
    }

    fn initial(&self, target: Option<usize>) -> Result<DensityMatrix> {
        let n = self.dim();
        let mut pops = vec![0.0; n];
        match target {
            None => {
                pops[DOWN] = 0.5;
                pops[UP] = 0.5;
            }
            Some(l) if l == DOWN || l == UP => {
                let other = if l == DOWN { UP } else { DOWN };
                pops[l] = 1.0 - self.init_error;
                pops[other] = self.init_error;
            }
            Some(l) if l < n => pops[l] = 1.0,
            Some(l) => return Err(Error::usage(format!("level {l} does not exist in a {n}-level model"))),
        }
        DensityMatrix::from_populations(&pops)
    }

    fn readout(&self, rho: &DensityMatrix, level: usize) -> f64 {
        match &self.model {
            Model::Two { .. } => rho.population(level),
            Model::Four { physics, .. } => {
                let down = readout_down(rho, physics.params.cyclicity);
                match level {
                    DOWN => down,
                    UP => 1.0 - down,
                    l => rho.population(l),
                }
            }
        }
    }

    /// States after `seg` lasting each of `durations`, starting at `t0`.
    fn evolve_many(&self, m: &Member, rho: &DensityMatrix, t0: f64, seg: &PulseSegment, durations: &[f64]) -> Result<Vec<DensityMatrix>> {
        let mut grid: Vec<f64> = durations.iter().copied().filter(|&d| d > 0.0).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        if grid.is_empty() {
            return Ok(vec![rho.clone(); durations.len()]);
        }
        let lookup = |states: &[DensityMatrix]| -> Vec<DensityMatrix> {
            durations
                .iter()
                .map(|&d| match grid.binary_search_by(|g| g.total_cmp(&d)) {
                    Ok(k) => states[k + 1].clone(),
                    Err(_) => rho.clone(),
                })
                .collect()
        };
        match &self.model {
            Model::Two {
                gamma1_mhz,
                gamma2_mhz,
                modulation,
            } => {
                let rabi = seg.rabi_mhz * m.rabi_scale;
                let detuning = seg.detuning_mhz + m.detuning_mhz;
                if rabi == 0.0 && *gamma1_mhz == 0.0 {
                    let states = std::iter::once(Ok(rho.clone()))
                        .chain(grid.iter().map(|&d| {
                            let mut phase = detuning * d;
                            if let (Some(md), Some(off)) = (modulation, m.modulation) {
                                phase += md.integral(t0, t0 + d, off);
                            }
                            free_precession(rho, mhz_to_angular(phase), mhz_to_angular(*gamma2_mhz) * d)
                        }))
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(lookup(&states));
                }
                let mut model = build_two_level_phased(rabi, detuning, seg.phase, *gamma1_mhz, *gamma2_mhz)?;
                if let (Some(md), Some(off)) = (*modulation, m.modulation) {
                    let ham = model.hamiltonian().clone().with_drive(
                        sigma_z() * C64::new(0.25, 0.0),
                        Envelope::function(move |t| C64::new(mhz_to_angular(md.at(t, off)), 0.0)),
                    )?;
                    model = model.with_hamiltonian(ham)?;
                }
                let times: Vec<f64> = std::iter::once(t0).chain(grid.iter().map(|d| t0 + d)).collect();
                let traj = evolve_with(&model, rho, &times, &self.evolve)?;
                Ok(lookup(traj.states()))
            }
            Model::Four { physics, calibrations } => {
                let mut p = physics.params;
                p.electron_splitting_ghz += m.detuning_mhz * 1e-3;
                let drive = if seg.kind == SegmentKind::Drive && seg.rabi_mhz != 0.0 {
                    let cal = calibrations[&seg.rabi_mhz.to_bits()];
                    let amp = m.rabi_scale.sqrt();
                    let scaled = RamanCalibration {
                        tone_mhz: cal.tone_mhz * amp,
                        ..cal
                    };
                    TwoToneDrive::raman(&scaled, seg.detuning_mhz, seg.phase, grid[grid.len() - 1])
                } else {
                    TwoToneDrive::single(0.0, grid[grid.len() - 1])
                };
                p.gamma2_mhz = matched_gamma2(p.gamma2_mhz, &p, &drive).max(0.0);
                let model = build_faraday_four_level(&p, &drive, physics.components)?;
                let times: Vec<f64> = std::iter::once(t0).chain(grid.iter().map(|d| t0 + d)).collect();
                let traj = evolve_with(&model, rho, &times, &self.evolve)?;
                Ok(lookup(traj.states()))
            }
        }
    }
}

fn calibrate(f: &FourLevelPhysics, rabi_mhz: f64) -> Result<RamanCalibration> {
    match f.raman {
        RamanMode::Floquet => calibrate_raman(&f.params, f.components, rabi_mhz),
        RamanMode::Perturbative => {
            let tone = equal_tone_amplitude(rabi_mhz, f.params.cyclicity, f.params.detuning_ghz)?;
            let drive = TwoToneDrive {
                tone1_mhz: tone,
                tone2_mhz: tone,
                spacing_ghz: f.params.electron_splitting_ghz,
                phase: 0.0,
                duration_ns: 0.0,
            };
            Ok(RamanCalibration {
                tone_mhz: tone,
                spacing_ghz: raman_resonance(&f.params, &drive, f.components)?,
                rabi_mhz,
            })
        }
    }
}

/// Two-level free evolution with pure dephasing: the coherence picks up
/// phase −`phase` and decays by exp(−2·`dephasing`).
fn free_precession(rho: &DensityMatrix, phase: f64, dephasing: f64) -> Result<DensityMatrix> {
    let mut m = rho.matrix().clone();
    let c = m[(0, 1)] * C64::from_polar((-2.0 * dephasing).exp(), -phase);
    m[(0, 1)] = c;
    m[(1, 0)] = c.conj();
    DensityMatrix::new(m)
}

/// Exact rotation by `angle` about cos(φ)σx + sin(φ)σy.
fn rotate(rho: &DensityMatrix, angle: f64, phase: f64) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::usage("ideal rotations need the two-level model"));
    }
    let axis: CMatrix = sigma_x() * C64::new(phase.cos(), 0.0) + sigma_y() * C64::new(phase.sin(), 0.0);
    let u = CMatrix::identity(2, 2) * C64::new((angle / 2.0).cos(), 0.0) - axis * C64::new(0.0, (angle / 2.0).sin());
    DensityMatrix::new(&u * rho.matrix() * u.adjoint())
}
