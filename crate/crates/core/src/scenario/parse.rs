//! Line-oriented scenario format: `[section]` headers and
//! `key = value unit` entries. `#` starts a comment.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Physical dimension of a value. Each has one canonical unit that the
/// parsed numbers are converted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// MHz.
    Frequency,
    /// ns.
    Time,
    /// Angular rate, ns⁻¹.
    Rate,
    /// Degrees.
    Angle,
    /// Tesla.
    Field,
    Dimensionless,
}

impl Dimension {
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Frequency => "MHz",
            Dimension::Time => "ns",
            Dimension::Rate => "1/ns",
            Dimension::Angle => "deg",
            Dimension::Field => "T",
            Dimension::Dimensionless => "",
        }
    }

    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Frequency => &[("Hz", 1e-6), ("kHz", 1e-3), ("MHz", 1.0), ("GHz", 1e3)],
            Dimension::Time => &[("ps", 1e-3), ("ns", 1.0), ("us", 1e3), ("µs", 1e3), ("ms", 1e6), ("s", 1e9)],
            Dimension::Rate => &[("1/ns", 1.0), ("/ns", 1.0), ("1/us", 1e-3), ("/us", 1e-3), ("1/µs", 1e-3)],
            Dimension::Angle => &[("deg", 1.0), ("rad", 180.0 / std::f64::consts::PI)],
            Dimension::Field => &[("T", 1.0), ("mT", 1e-3)],
            Dimension::Dimensionless => &[],
        }
    }

    /// Factor from `unit` to the canonical unit, if the unit fits.
    pub fn factor(self, unit: &str) -> Option<f64> {
        self.units().iter().find(|(u, _)| *u == unit).map(|(_, f)| *f)
    }

    fn expected(self) -> String {
        self.units().iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
    }

    const ALL: [Dimension; 5] = [
        Dimension::Frequency,
        Dimension::Time,
        Dimension::Rate,
        Dimension::Angle,
        Dimension::Field,
    ];

    fn of_unit(unit: &str) -> Option<(Dimension, f64)> {
        Self::ALL.iter().find_map(|d| d.factor(unit).map(|f| (*d, f)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Text,
    Int,
    Flag,
    Quantity(Dimension),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Int(u64),
    Flag(bool),
    /// In the canonical unit of its dimension.
    Number(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: Value,
    /// Right-hand side as written, for provenance records.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub line: usize,
    pub entries: BTreeMap<String, Entry>,
}

/// One `[scan]` line.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisLine {
    pub name: String,
    pub line: usize,
    pub dimension: Dimension,
    /// As written, in `unit`.
    pub values: Vec<f64>,
    pub unit: String,
    /// Factor from `unit` to the canonical unit.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub sections: BTreeMap<String, Section>,
    pub axes: Vec<AxisLine>,
    pub scan_line: Option<usize>,
}

use Dimension::*;
use Kind::*;

/// Every accepted (section, key) pair.
pub const SCHEMA: &[(&str, &str, Kind)] = &[
    ("scenario", "name", Text),
    ("scenario", "kind", Text),
    ("scenario", "description", Text),
    ("physics", "model", Text),
    ("physics", "gamma1", Quantity(Frequency)),
    ("physics", "gamma2", Quantity(Frequency)),
    ("physics", "relaxation_per_rabi", Quantity(Dimensionless)),
    ("physics", "electron_splitting", Quantity(Frequency)),
    ("physics", "hole_splitting", Quantity(Frequency)),
    ("physics", "raman_detuning", Quantity(Frequency)),
    ("physics", "cyclicity", Quantity(Dimensionless)),
    ("physics", "trion_lifetime", Quantity(Time)),
    ("physics", "handedness", Text),
    ("physics", "raman", Text),
    ("physics", "splitting", Quantity(Frequency)),
    ("physics", "optical_detuning", Quantity(Frequency)),
    ("physics", "rabi_down", Quantity(Rate)),
    ("physics", "rabi_up", Quantity(Rate)),
    ("physics", "relaxation_time", Quantity(Time)),
    ("physics", "dephasing_rate", Quantity(Rate)),
    ("physics", "spin_flip_time", Quantity(Time)),
    ("protocol", "rabi", Quantity(Frequency)),
    ("protocol", "detuning", Quantity(Frequency)),
    ("protocol", "duration", Quantity(Time)),
    ("protocol", "stark_ratio", Quantity(Dimensionless)),
    ("protocol", "splitting", Quantity(Frequency)),
    ("protocol", "serrodyne", Quantity(Frequency)),
    ("protocol", "balanced", Flag),
    ("protocol", "ideal_pulses", Flag),
    ("protocol", "detune_pulses", Flag),
    ("protocol", "readout_phase", Quantity(Angle)),
    ("protocol", "echo_decay", Quantity(Time)),
    ("protocol", "modulation_amplitude", Quantity(Frequency)),
    ("protocol", "modulation_frequency", Quantity(Frequency)),
    ("protocol", "modulation_phases", Int),
    ("protocol", "saturation", Quantity(Dimensionless)),
    ("protocol", "hwp", Quantity(Angle)),
    ("protocol", "init_error", Quantity(Dimensionless)),
    ("ensemble", "t2star", Quantity(Time)),
    ("ensemble", "nodes", Int),
    ("ensemble", "intensity_noise", Quantity(Dimensionless)),
    ("ensemble", "stark_ratio", Quantity(Dimensionless)),
    ("ensemble", "amplitude_jitter", Flag),
    ("cooling", "method", Text),
    ("cooling", "rabi", Quantity(Frequency)),
    ("cooling", "frequency", Quantity(Frequency)),
    ("cooling", "t2star", Quantity(Time)),
    ("counts", "shots", Int),
    ("counts", "bright", Quantity(Dimensionless)),
    ("counts", "background", Quantity(Dimensionless)),
    ("output", "seed", Int),
];

pub fn kind_of(section: &str, key: &str) -> Option<Kind> {
    SCHEMA.iter().find(|(s, k, _)| *s == section && *k == key).map(|e| e.2)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn number(s: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::config(line, field, format!("'{}' is not a number", s.trim())))?;
    if v.is_nan() {
        return Err(Error::config(line, field, "NaN is not allowed"));
    }
    Ok(v)
}

/// Splits `value unit` at the last space. Returns the unit only when it is
/// not itself a number.
fn split_unit(rhs: &str) -> (&str, Option<&str>) {
    match rhs.rsplit_once(char::is_whitespace) {
        Some((v, u)) if u.parse::<f64>().is_err() && !u.ends_with(')') && !u.ends_with(']') => (v.trim(), Some(u)),
        _ => (rhs.trim(), None),
    }
}

fn parse_value(rhs: &str, kind: Kind, line: usize, field: &str) -> Result<Value> {
    match kind {
        Text => {
            if rhs.is_empty() || rhs.contains(char::is_whitespace) {
                return Err(Error::config(line, field, "expected a single word"));
            }
            Ok(Value::Text(rhs.to_string()))
        }
        Int => rhs
            .parse::<u64>()
            .map(Value::Int)
            .map_err(|_| Error::config(line, field, format!("'{rhs}' is not a non-negative integer"))),
        Flag => match rhs {
            "true" | "yes" | "on" => Ok(Value::Flag(true)),
            "false" | "no" | "off" => Ok(Value::Flag(false)),
            _ => Err(Error::config(line, field, format!("'{rhs}' is not true or false"))),
        },
        Quantity(Dimensionless) => {
            let (v, unit) = split_unit(rhs);
            if let Some(u) = unit {
                return Err(Error::config(line, field, format!("dimensionless value takes no unit, got '{u}'")));
            }
            Ok(Value::Number(number(v, line, field)?))
        }
        Quantity(dim) => {
            let (v, unit) = split_unit(rhs);
            let Some(unit) = unit else {
                return Err(Error::config(
                    line,
                    field,
                    format!("missing unit; expected one of {}", dim.expected()),
                ));
            };
            let f = dim.factor(unit).ok_or_else(|| {
                Error::config(line, field, format!("unit '{unit}' does not fit; expected one of {}", dim.expected()))
            })?;
            Ok(Value::Number(number(v, line, field)? * f))
        }
    }
}

fn parse_list(body: &str, line: usize, field: &str) -> Result<Vec<f64>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',').map(|s| number(s, line, field)).collect()
}

/// `linspace(a, b, n) unit`, `[a, b, ...] unit` or `a unit`.
fn parse_axis(name: &str, rhs: &str, line: usize) -> Result<AxisLine> {
    let field = format!("scan.{name}");
    let (body, unit) = split_unit(rhs);
    let (dimension, factor, unit) = match unit {
        None => (Dimensionless, 1.0, String::new()),
        Some(u) => {
            let (d, f) = Dimension::of_unit(u)
                .ok_or_else(|| Error::config(line, &field, format!("unknown unit '{u}'")))?;
            (d, f, u.to_string())
        }
    };
    let values = if let Some(inner) = body.strip_prefix("linspace(").and_then(|b| b.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::config(line, &field, "linspace takes start, stop and count"));
        }
        let (a, b) = (number(parts[0], line, &field)?, number(parts[1], line, &field)?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::config(line, &field, "linspace count must be a non-negative integer"))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else if let Some(inner) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
        parse_list(inner, line, &field)?
    } else {
        vec![number(body, line, &field)?]
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(line, &field, "scan values must be finite"));
    }
    Ok(AxisLine {
        name: name.to_string(),
        line,
        dimension,
        values,
        unit,
        factor,
    })
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document {
        sections: BTreeMap::new(),
        axes: Vec::new(),
        scan_line: None,
    };
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = strip_comment(raw).trim();
        if l.is_empty() {
            continue;
        }
        if let Some(name) = l.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line, "section", "unterminated section header"))?
                .trim();
            let known = name == "scan" || SCHEMA.iter().any(|(s, _, _)| *s == name);
            if !known {
                return Err(Error::config(line, name, "unknown section"));
            }
            if name == "scan" {
                if doc.scan_line.is_some() {
                    return Err(Error::config(line, name, "section appears twice"));
                }
                doc.scan_line = Some(line);
            } else if doc.sections.contains_key(name) {
                return Err(Error::config(line, name, "section appears twice"));
            } else {
                doc.sections.insert(
                    name.to_string(),
                    Section {
                        line,
                        entries: BTreeMap::new(),
                    },
                );
            }
            current = Some(name.to_string());
            continue;
        }
        let Some((key, rhs)) = l.split_once('=') else {
            return Err(Error::config(line, l, "expected 'key = value unit'"));
        };
        let (key, rhs) = (key.trim(), rhs.trim());
        let Some(section) = current.as_deref() else {
            return Err(Error::config(line, key, "entry before any section header"));
        };
        if section == "scan" {
            if doc.axes.iter().any(|a| a.name == key) {
                return Err(Error::config(line, format!("scan.{key}"), "axis appears twice"));
            }
            doc.axes.push(parse_axis(key, rhs, line)?);
            continue;
        }
        let field = format!("{section}.{key}");
        let kind = kind_of(section, key).ok_or_else(|| Error::config(line, &field, "unknown key"))?;
        let value = parse_value(rhs, kind, line, &field)?;
        let entries = &mut doc.sections.get_mut(section).expect("section registered").entries;
        if entries.contains_key(key) {
            return Err(Error::config(line, &field, "key appears twice"));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value,
                raw: rhs.to_string(),
            },
        );
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_error(text: &str) -> (usize, String, String) {
        match parse_document(text) {
            Err(Error::Config { line, field, message }) => (line, field, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn converts_to_canonical_units() {
        let doc = parse_document(
            "[protocol]\nrabi = 0.2268 GHz  # comment\nduration = 1.5 us\nstark_ratio = -7.4\n[ensemble]\nt2star = inf ns\n",
        )
        .unwrap();
        let p = &doc.sections["protocol"].entries;
        assert_eq!(p["rabi"].value, Value::Number(226.8));
        assert_eq!(p["duration"].value, Value::Number(1500.0));
        assert_eq!(p["stark_ratio"].value, Value::Number(-7.4));
        assert_eq!(doc.sections["ensemble"].entries["t2star"].value, Value::Number(f64::INFINITY));
    }

    #[test]
    fn bare_number_needs_a_unit() {
        let (line, field, msg) = config_error("[physics]\n\ngamma2 = 3.7\n");
        assert_eq!((line, field.as_str()), (3, "physics.gamma2"));
        assert!(msg.contains("missing unit"), "{msg}");
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let (line, field, _) = config_error("[protocol]\nrabi = 3 ns\n");
        assert_eq!((line, field.as_str()), (2, "protocol.rabi"));
    }

    #[test]
    fn unknown_keys_and_sections() {
        assert_eq!(config_error("[protocol]\nrabbi = 3 MHz\n").1, "protocol.rabbi");
        assert_eq!(config_error("[nope]\n").0, 1);
        assert_eq!(config_error("rabi = 3 MHz\n").0, 1);
        assert_eq!(config_error("[protocol]\nrabi = 3 MHz\nrabi = 4 MHz\n").0, 3);
    }

    #[test]
    fn scan_grids() {
        let doc = parse_document("[scan]\ntau = linspace(0, 2, 5) ns\ndetuning = [-1, 0, 1] GHz\nhwp = 10 deg\nx = []\n").unwrap();
        assert_eq!(doc.axes[0].values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(doc.axes[1].dimension, Frequency);
        assert_eq!(doc.axes[1].factor, 1e3);
        assert_eq!(doc.axes[2].values, vec![10.0]);
        assert!(doc.axes[3].values.is_empty());
        assert_eq!(doc.axes[3].dimension, Dimensionless);
        assert_eq!(config_error("[scan]\ntau = linspace(0, 1) ns\n").0, 2);
        assert_eq!(config_error("[scan]\ntau = [0, x] ns\n").0, 2);
    }
}
