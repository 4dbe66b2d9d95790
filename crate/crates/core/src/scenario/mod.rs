//! Scenario files: parsing, execution and the CSV products written by the
//! `fss` binary.
//!
//! A scenario names a product `kind`, the physics, protocol, ensemble and
//! optional cooling and count blocks, and one or two scan axes. The first
//! axis is the product's own sweep (pulse length, drive frequency, ...);
//! a second axis overrides any numeric parameter, e.g. `detuning` or
//! `ensemble.intensity_noise`, and yields a long-format grid.
//!
//! ```text
//! [scenario]
//! name = rabi
//! kind = rabi
//!
//! [physics]
//! gamma2 = 3.7 MHz
//!
//! [protocol]
//! rabi = 226.8 MHz
//!
//! [scan]
//! tau = linspace(0, 30, 121) ns
//! ```

mod output;
mod parse;

use std::path::Path;

use sha2::{Digest, Sha256};

pub use output::{write_manifest, Manifest, PeakSummary, Product};
pub use parse::{Dimension, Kind, SCHEMA};

use crate::ensemble::{EnsembleSpec, DEFAULT_NODES};
use crate::models::{cpt_spectrum, q_factor, CptParams, DriveComponents, FaradayParams};
use crate::raman::{jones_through_waveplates, stokes, JonesVector};
use crate::sequences::{
    esr_scan_protocol, hahn_echo_protocol, rabi_protocol, ramsey_protocol, simulate_with, spin_pumping_protocol,
    t1_protocol, CoolingMethod, CoolingSpec, CountModel, DetuningModulation, FourLevelPhysics, Physics, Protocol,
    PulseOptions, RamanMode, ScanPoint, SimOptions,
};
use crate::units::angular_to_mhz;
use crate::{Error, Result};
use parse::{AxisLine, Document, Value};

/// What a scenario produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    Rabi,
    Esr,
    Ramsey,
    Echo,
    Pumping,
    T1,
    Cpt,
    Polarization,
    QFactor,
}

impl ProductKind {
    pub const ALL: [ProductKind; 9] = [
        ProductKind::Rabi,
        ProductKind::Esr,
        ProductKind::Ramsey,
        ProductKind::Echo,
        ProductKind::Pumping,
        ProductKind::T1,
        ProductKind::Cpt,
        ProductKind::Polarization,
        ProductKind::QFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProductKind::Rabi => "rabi",
            ProductKind::Esr => "esr",
            ProductKind::Ramsey => "ramsey",
            ProductKind::Echo => "echo",
            ProductKind::Pumping => "pumping",
            ProductKind::T1 => "t1",
            ProductKind::Cpt => "cpt",
            ProductKind::Polarization => "polarization",
            ProductKind::QFactor => "qfactor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// The sweep every scenario of this kind starts with.
    pub fn native_axis(self) -> (&'static str, Dimension) {
        match self {
            ProductKind::Rabi | ProductKind::Ramsey => ("tau", Dimension::Time),
            ProductKind::Esr | ProductKind::Cpt => ("frequency", Dimension::Frequency),
            ProductKind::Echo | ProductKind::T1 => ("delay", Dimension::Time),
            ProductKind::Pumping => ("time", Dimension::Time),
            ProductKind::Polarization => ("qwp", Dimension::Angle),
            ProductKind::QFactor => ("intensity_noise", Dimension::Dimensionless),
        }
    }
}

/// A resolved scan axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    /// Unit as written in the scenario; empty for dimensionless axes.
    pub unit: String,
    /// Values as written.
    pub values: Vec<f64>,
    factor: f64,
    /// Parameter the axis overrides; `None` for the native sweep.
    target: Option<(&'static str, &'static str)>,
}

impl Axis {
    pub fn column(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{}_{}", self.name, self.unit)
        }
    }

    fn canonical(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.factor).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: ProductKind,
    pub axes: Vec<Axis>,
    pub seed: Option<u64>,
    pub counts: Option<CountModel>,
    doc: Document,
    inputs_sha256: String,
}

/// Read access to the parameters with at most one value overridden by the
/// outer scan axis.
struct Params<'a> {
    doc: &'a Document,
    over: Option<(&'a str, &'a str, f64)>,
}

impl Params<'_> {
    fn line(&self, section: &str) -> usize {
        self.doc.sections.get(section).map_or(0, |s| s.line)
    }

    fn entry_line(&self, section: &str, key: &str) -> usize {
        self.doc
            .sections
            .get(section)
            .and_then(|s| s.entries.get(key))
            .map_or_else(|| self.line(section), |e| e.line)
    }

    fn value(&self, section: &str, key: &str) -> Option<&Value> {
        self.doc.sections.get(section)?.entries.get(key).map(|e| &e.value)
    }

    fn num(&self, section: &str, key: &str) -> Option<f64> {
        if let Some((s, k, v)) = self.over {
            if s == section && k == key {
                return Some(v);
            }
        }
        match self.value(section, key) {
            Some(Value::Number(v)) => Some(*v),
            _ => None,
        }
    }

    fn num_or(&self, section: &str, key: &str, default: f64) -> f64 {
        self.num(section, key).unwrap_or(default)
    }

    fn require(&self, section: &str, key: &str) -> Result<f64> {
        self.num(section, key)
            .ok_or_else(|| Error::config(self.line(section), format!("{section}.{key}"), "required"))
    }

    fn flag_or(&self, section: &str, key: &str, default: bool) -> bool {
        match self.value(section, key) {
            Some(Value::Flag(b)) => *b,
            _ => default,
        }
    }

    fn int(&self, section: &str, key: &str) -> Option<u64> {
        match self.value(section, key) {
            Some(Value::Int(v)) => Some(*v),
            _ => None,
        }
    }

    fn text(&self, section: &str, key: &str) -> Option<&str> {
        match self.value(section, key) {
            Some(Value::Text(t)) => Some(t),
            _ => None,
        }
    }

    /// Turns a precondition failure into a config error at `section`.
    fn blame<T>(&self, section: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Usage(m) | Error::Domain(m) => Error::config(self.line(section), section, m),
            other => other,
        })
    }

    fn rabi(&self) -> f64 {
        self.num_or("protocol", "rabi", 0.0)
    }

    fn physics(&self) -> Result<Physics> {
        let model = self.text("physics", "model").unwrap_or("two_level");
        let gamma1 = match self.num("physics", "relaxation_per_rabi") {
            Some(a) => a * self.rabi(),
            None => self.num_or("physics", "gamma1", 0.0),
        };
        let gamma2 = self.num_or("physics", "gamma2", 0.0);
        let physics = match model {
            "two_level" => Physics::two_level(gamma1, gamma2),
            "four_level" => {
                let mut p = FaradayParams::reference();
                p.gamma1_mhz = gamma1;
                p.gamma2_mhz = gamma2;
                if let Some(v) = self.num("physics", "electron_splitting") {
                    p.electron_splitting_ghz = v * 1e-3;
                }
                if let Some(v) = self.num("physics", "hole_splitting") {
                    p.hole_splitting_ghz = v * 1e-3;
                }
                if let Some(v) = self.num("physics", "raman_detuning") {
                    p.detuning_ghz = v * 1e-3;
                }
                if let Some(v) = self.num("physics", "cyclicity") {
                    p.cyclicity = v;
                }
                if let Some(v) = self.num("physics", "trion_lifetime") {
                    p.trion_decay_mhz = angular_to_mhz(1.0 / v);
                }
                let components = match self.text("physics", "handedness").unwrap_or("sigma-") {
                    "sigma-" => DriveComponents::SigmaMinus,
                    "sigma+" => DriveComponents::SigmaPlus,
                    "both" => DriveComponents::Both,
                    other => {
                        return Err(Error::config(
                            self.entry_line("physics", "handedness"),
                            "physics.handedness",
                            format!("'{other}' is not sigma-, sigma+ or both"),
                        ))
                    }
                };
                let raman = match self.text("physics", "raman").unwrap_or("floquet") {
                    "floquet" => RamanMode::Floquet,
                    "perturbative" => RamanMode::Perturbative,
                    other => {
                        return Err(Error::config(
                            self.entry_line("physics", "raman"),
                            "physics.raman",
                            format!("'{other}' is not floquet or perturbative"),
                        ))
                    }
                };
                Physics::FourLevel(FourLevelPhysics {
                    params: p,
                    components,
                    raman,
                })
            }
            other => {
                return Err(Error::config(
                    self.entry_line("physics", "model"),
                    "physics.model",
                    format!("'{other}' is not a pulse model; expected two_level or four_level"),
                ))
            }
        };
        self.blame("physics", physics.validate())?;
        Ok(physics)
    }

    fn cpt(&self) -> Result<CptParams> {
        let mut p = CptParams::reference();
        let fields: [(&str, &mut f64, f64); 8] = [
            ("splitting", &mut p.splitting_ghz, 1e-3),
            ("optical_detuning", &mut p.detuning_ghz, 1e-3),
            ("rabi_down", &mut p.rabi_down, 1.0),
            ("rabi_up", &mut p.rabi_up, 1.0),
            ("relaxation_time", &mut p.relaxation_time_ns, 1.0),
            ("dephasing_rate", &mut p.dephasing_rate, 1.0),
            ("trion_lifetime", &mut p.trion_lifetime_ns, 1.0),
            ("spin_flip_time", &mut p.spin_flip_time_ns, 1.0),
        ];
        for (key, slot, scale) in fields {
            if let Some(v) = self.num("physics", key) {
                *slot = v * scale;
            }
        }
        self.blame("physics", p.validate())?;
        Ok(p)
    }

    fn ensemble(&self) -> Result<EnsembleSpec> {
        let nodes = match self.int("ensemble", "nodes") {
            Some(n) => usize::try_from(n).unwrap_or(usize::MAX),
            None => DEFAULT_NODES,
        };
        let e = EnsembleSpec {
            t2star_ns: self.num_or("ensemble", "t2star", f64::INFINITY),
            stark_ratio: self.num_or("ensemble", "stark_ratio", 0.0),
            rabi_mhz: self.rabi(),
            intensity_noise: self.num_or("ensemble", "intensity_noise", 0.0),
            nodes,
            amplitude_jitter: self.flag_or("ensemble", "amplitude_jitter", false),
        };
        self.blame("ensemble", e.validate())?;
        Ok(e)
    }

    fn cooling(&self) -> Result<Option<CoolingSpec>> {
        if !self.doc.sections.contains_key("cooling") {
            return Ok(None);
        }
        let method = self.blame("cooling", CoolingMethod::parse(self.text("cooling", "method").unwrap_or("raman")))?;
        let c = CoolingSpec {
            method,
            rabi_mhz: self.num_or("cooling", "rabi", 0.0),
            frequency_ghz: self.num_or("cooling", "frequency", 0.0) * 1e-3,
            resulting_t2star_ns: self.require("cooling", "t2star")?,
            metadata: Vec::new(),
        };
        self.blame("cooling", c.validate())?;
        Ok(Some(c))
    }

    fn pulse_options(&self) -> PulseOptions {
        PulseOptions {
            detune_pulses: self.flag_or("protocol", "detune_pulses", true),
            ideal_pulses: self.flag_or("protocol", "ideal_pulses", false),
            readout_phase: self.num("protocol", "readout_phase").map(f64::to_radians),
        }
    }

    fn protocol(&self, kind: ProductKind, grid: &[f64]) -> Result<Protocol> {
        let rabi = || self.require("protocol", "rabi");
        let detuning = self.num_or("protocol", "detuning", 0.0);
        let built = match kind {
            ProductKind::Rabi => rabi_protocol(rabi()?, detuning, grid),
            ProductKind::Esr => {
                let ghz: Vec<f64> = grid.iter().map(|f| f * 1e-3).collect();
                esr_scan_protocol(
                    rabi()?,
                    self.require("protocol", "duration")?,
                    &ghz,
                    self.num_or("protocol", "stark_ratio", 0.0),
                    self.require("protocol", "splitting")? * 1e-3,
                )
            }
            ProductKind::Ramsey => ramsey_protocol(
                rabi()?,
                detuning,
                grid,
                self.num_or("protocol", "serrodyne", 0.0),
                self.flag_or("protocol", "balanced", true),
                &self.pulse_options(),
            ),
            ProductKind::Echo => hahn_echo_protocol(rabi()?, grid, detuning, &self.pulse_options()).map(|mut p| {
                p.echo_decay_ns = self.num("protocol", "echo_decay");
                p
            }),
            ProductKind::Pumping => {
                let end = grid.iter().copied().fold(0.0, f64::max);
                spin_pumping_protocol(self.require("protocol", "saturation")?, end).map(|mut p| {
                    p.points = grid
                        .iter()
                        .map(|&t| ScanPoint {
                            coords: vec![t],
                            shots: Vec::new(),
                            free_time_ns: t,
                        })
                        .collect();
                    p
                })
            }
            ProductKind::T1 => t1_protocol(grid),
            _ => unreachable!("not a pulse protocol"),
        };
        let mut p = self.blame("protocol", built)?;
        if let Some(a) = self.num("protocol", "modulation_amplitude") {
            let m = DetuningModulation {
                amplitude_mhz: a,
                frequency_mhz: self.require("protocol", "modulation_frequency")?,
                phases: self.int("protocol", "modulation_phases").unwrap_or(8) as usize,
            };
            self.blame("protocol", m.validate())?;
            p.modulation = Some(m);
        }
        p.preparation = self.cooling()?;
        self.blame("protocol", p.validate())?;
        Ok(p)
    }
}

fn resolve_target(axis: &AxisLine) -> Result<(&'static str, &'static str)> {
    let field = format!("scan.{}", axis.name);
    let candidates: Vec<(&'static str, &'static str)> = match axis.name.split_once('.') {
        Some((s, k)) => SCHEMA
            .iter()
            .filter(|e| e.0 == s && e.1 == k)
            .map(|e| (e.0, e.1))
            .collect(),
        None => ["protocol", "ensemble", "physics", "cooling"]
            .iter()
            .filter_map(|s| SCHEMA.iter().find(|e| e.0 == *s && e.1 == axis.name))
            .map(|e| (e.0, e.1))
            .take(1)
            .collect(),
    };
    let Some(&(s, k)) = candidates.first() else {
        return Err(Error::config(axis.line, field, "not a scannable parameter"));
    };
    match parse::kind_of(s, k) {
        Some(Kind::Quantity(d)) if d == axis.dimension => {}
        Some(Kind::Quantity(d)) => {
            let want = if d == Dimension::Dimensionless {
                "no unit".to_string()
            } else {
                format!("a unit convertible to {}", d.canonical_unit())
            };
            return Err(Error::config(axis.line, field, format!("{s}.{k} needs {want}")));
        }
        _ => return Err(Error::config(axis.line, field, format!("{s}.{k} is not numeric"))),
    }
    Ok((s, k))
}

fn fmt_meta(v: f64) -> String {
    output::fmt_num(v)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = parse::parse_document(text)?;
        let p = Params { doc: &doc, over: None };
        let kind_line = p.entry_line("scenario", "kind");
        let kind_name = p
            .text("scenario", "kind")
            .ok_or_else(|| Error::config(p.line("scenario"), "scenario.kind", "required"))?;
        let kind = ProductKind::parse(kind_name).ok_or_else(|| {
            let names: Vec<&str> = ProductKind::ALL.iter().map(|k| k.name()).collect();
            Error::config(kind_line, "scenario.kind", format!("unknown kind '{kind_name}'; expected one of {}", names.join(", ")))
        })?;
        let name = p.text("scenario", "name").unwrap_or(kind.name()).to_string();

        let scan_line = doc.scan_line.unwrap_or(0);
        if doc.axes.is_empty() || doc.axes.len() > 2 {
            return Err(Error::config(scan_line, "scan", "needs one or two axes"));
        }
        let (native, dim) = kind.native_axis();
        let mut axes = Vec::new();
        for (i, a) in doc.axes.iter().enumerate() {
            let target = if i == 0 {
                if a.name != native {
                    return Err(Error::config(a.line, format!("scan.{}", a.name), format!("first axis of a {} scenario must be '{native}'", kind.name())));
                }
                if a.dimension != dim {
                    return Err(Error::config(a.line, format!("scan.{}", a.name), "unit does not fit this axis"));
                }
                None
            } else {
                Some(resolve_target(a)?)
            };
            axes.push(Axis {
                name: a.name.clone(),
                unit: a.unit.clone(),
                values: a.values.clone(),
                factor: a.factor,
                target,
            });
        }

        let counts = if doc.sections.contains_key("counts") {
            let shots = p.int("counts", "shots").unwrap_or(1);
            let c = CountModel {
                bright_counts: p.require("counts", "bright")?,
                background: p.num_or("counts", "background", 0.0),
                shots,
            };
            p.blame("counts", c.validate())?;
            Some(c)
        } else {
            None
        };

        let scenario = Scenario {
            name,
            kind,
            axes,
            seed: p.int("output", "seed"),
            counts,
            inputs_sha256: Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
            doc,
        };
        scenario.check()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(0, path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    /// Config error unless the scan has exactly `n` axes.
    pub fn require_axes(&self, n: usize) -> Result<()> {
        if self.axes.len() != n {
            return Err(Error::config(
                self.doc.scan_line.unwrap_or(0),
                "scan",
                format!("needs exactly {n} axes, found {}", self.axes.len()),
            ));
        }
        Ok(())
    }

    pub fn inputs_sha256(&self) -> &str {
        &self.inputs_sha256
    }

    /// Builds every block once so that bad values surface before any
    /// simulation starts.
    fn check(&self) -> Result<()> {
        let over = self.axes.get(1).and_then(|a| {
            let (s, k) = a.target?;
            Some((s, k, a.canonical().first().copied()?))
        });
        let p = Params { doc: &self.doc, over };
        match self.kind {
            ProductKind::Cpt => {
                if let Some(m) = p.text("physics", "model").filter(|m| *m != "cpt") {
                    return Err(Error::config(
                        p.entry_line("physics", "model"),
                        "physics.model",
                        format!("a cpt scenario uses the cpt model, not '{m}'"),
                    ));
                }
                p.cpt()?;
            }
            ProductKind::Polarization => {}
            ProductKind::QFactor => {
                p.require("protocol", "rabi")?;
                if !matches!(p.physics()?, Physics::TwoLevel { .. }) {
                    return Err(Error::config(p.line("physics"), "physics.model", "qfactor needs the two-level model"));
                }
                p.ensemble()?;
            }
            kind => {
                let physics = p.physics()?;
                if kind == ProductKind::Pumping && !matches!(physics, Physics::FourLevel(_)) {
                    return Err(Error::config(p.line("physics"), "physics.model", "pumping needs the four-level model"));
                }
                p.ensemble()?;
                p.protocol(kind, &[])?;
            }
        }
        if self.counts.is_some() && self.seed.is_none() {
            return Err(Error::config(
                p.line("counts"),
                "output.seed",
                "a seed is required when shot noise is enabled",
            ));
        }
        Ok(())
    }

    /// Parameter records for the CSV header, in a fixed order.
    fn meta(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("scenario".to_string(), self.name.clone()),
            ("kind".to_string(), self.kind.name().to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("inputs_sha256".to_string(), self.inputs_sha256.clone()),
            ("seed".to_string(), self.seed.map_or("none".into(), |s| s.to_string())),
        ];
        for (sname, section) in &self.doc.sections {
            for (key, e) in &section.entries {
                m.push((format!("{sname}.{key}"), e.raw.clone()));
            }
        }
        for a in &self.axes {
            let (lo, hi) = a
                .values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let range = if a.values.is_empty() {
                "empty".to_string()
            } else {
                format!("{} points from {} to {}", a.values.len(), fmt_meta(lo), fmt_meta(hi))
            };
            m.push((format!("scan.{}", a.name), format!("{range} {}", a.unit).trim_end().to_string()));
        }
        m
    }

    fn signal_columns(&self) -> Vec<String> {
        match self.kind {
            ProductKind::Rabi | ProductKind::Esr => vec!["population".into()],
            ProductKind::Ramsey => {
                let p = Params { doc: &self.doc, over: None };
                vec![if p.flag_or("protocol", "balanced", true) { "contrast" } else { "population" }.into()]
            }
            ProductKind::Echo => vec!["contrast".into()],
            ProductKind::Pumping => vec!["emission".into()],
            ProductKind::T1 => vec!["ratio".into()],
            ProductKind::Cpt => vec!["fluorescence".into()],
            ProductKind::Polarization => vec!["s1".into(), "s2".into(), "s3".into()],
            ProductKind::QFactor => vec!["q".into(), "f_pi".into()],
        }
    }

    /// Signal columns along the native axis for one outer value.
    fn run_column(&self, over: Option<(&str, &str, f64)>, column: usize) -> Result<Vec<Vec<f64>>> {
        let p = Params { doc: &self.doc, over };
        let grid = self.axes[0].canonical();
        match self.kind {
            ProductKind::Cpt => {
                let params = p.cpt()?;
                let ghz: Vec<f64> = grid.iter().map(|f| f * 1e-3).collect();
                Ok(cpt_spectrum(&params, &ghz)?.into_iter().map(|v| vec![v]).collect())
            }
            ProductKind::Polarization => {
                let hwp = p.num_or("protocol", "hwp", 0.0);
                Ok(grid
                    .iter()
                    .map(|&q| {
                        let s = stokes(&jones_through_waveplates(&JonesVector::horizontal(), hwp, q));
                        vec![s.s1, s.s2, s.s3]
                    })
                    .collect())
            }
            ProductKind::QFactor => {
                let rabi = p.require("protocol", "rabi")?;
                let physics = p.physics()?;
                let t_pi = 1e3 / (2.0 * rabi);
                let protocol = p.blame("protocol", rabi_protocol(rabi, p.num_or("protocol", "detuning", 0.0), &[t_pi]))?;
                let mut rows = Vec::with_capacity(grid.len());
                for &noise in &grid {
                    let ens = EnsembleSpec {
                        intensity_noise: noise,
                        ..p.ensemble()?
                    };
                    let f = p
                        .blame("ensemble", simulate_with(&protocol, &physics, &ens, &SimOptions::default()))?
                        .signal[0];
                    rows.push(vec![q_factor(f).0, f]);
                }
                Ok(rows)
            }
            kind => {
                let physics = p.physics()?;
                let ens = p.ensemble()?;
                let protocol = p.protocol(kind, &grid)?;
                let seed = self.seed.unwrap_or(0) ^ (column as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let opts = SimOptions {
                    counts: self.counts,
                    seed,
                    init_error: p.num_or("protocol", "init_error", 0.0),
                    ..SimOptions::default()
                };
                let trace = simulate_with(&protocol, &physics, &ens, &opts)?;
                Ok(trace.signal.into_iter().map(|v| vec![v]).collect())
            }
        }
    }

    /// Runs the whole scan. Rows are ordered by the outer axis, then the
    /// native one; with two axes a per-column peak summary is attached.
    pub fn run(&self) -> Result<Product> {
        if self.counts.is_some() && self.seed.is_none() {
            return Err(Error::config(0, "output.seed", "a seed is required when shot noise is enabled"));
        }
        let mut columns: Vec<String> = self.axes.iter().map(Axis::column).collect();
        let signals = self.signal_columns();
        columns.extend(signals.iter().cloned());
        let inner = &self.axes[0];
        let mut rows = Vec::new();
        let mut summary = None;
        match self.axes.get(1) {
            None => {
                for (x, sig) in inner.values.iter().zip(self.run_column(None, 0)?) {
                    let mut row = vec![*x];
                    row.extend(sig);
                    rows.push(row);
                }
            }
            Some(outer) => {
                let (s, k) = outer.target.expect("outer axis resolved at parse time");
                let mut peaks = Vec::with_capacity(outer.values.len());
                for (j, (&shown, canonical)) in outer.values.iter().zip(outer.canonical()).enumerate() {
                    let col = self.run_column(Some((s, k, canonical)), j)?;
                    let first: Vec<f64> = col.iter().map(|r| r[0]).collect();
                    peaks.push((shown, output::peak(&inner.values, &first)));
                    for (x, sig) in inner.values.iter().zip(col) {
                        let mut row = vec![*x, shown];
                        row.extend(sig);
                        rows.push(row);
                    }
                }
                summary = Some(PeakSummary::new(inner, outer, &signals[0], &peaks));
            }
        }
        Ok(Product {
            name: self.name.clone(),
            columns,
            rows,
            meta: self.meta(),
            summary,
        })
    }
}
