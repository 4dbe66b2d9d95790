//! Closed-form calculators behind `fss calc`.

use clap::{Args, Subcommand, ValueEnum};
use fss_core::ensemble::{gaussian_sigma, laser_sigma};
use fss_core::fitting::{fwhm_to_t2star, larmor_frequencies, t2star_to_fwhm, NUCLEAR_SPECIES};
use fss_core::models::{cyclicity, g_factor, q_factor, q_uncertainty};
use fss_core::raman::{eta_from_cyclicity, eta_from_slope, stark_slope, two_photon_rabi, Handedness};
use fss_core::scenario::Dimension;
use serde_json::{Map, Value};

use crate::Failure;

#[derive(Args)]
pub struct CalcArgs {
    #[command(subcommand)]
    formula: Formula,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hand {
    #[value(name = "sigma-")]
    SigmaMinus,
    #[value(name = "sigma+")]
    SigmaPlus,
}

impl From<Hand> for Handedness {
    fn from(h: Hand) -> Self {
        match h {
            Hand::SigmaMinus => Handedness::SigmaMinus,
            Hand::SigmaPlus => Handedness::SigmaPlus,
        }
    }
}

/// Arguments take an optional glued unit, e.g. `111ns` or `2.6GHz`;
/// a bare number is read in the unit shown in the help text.
#[derive(Subcommand)]
enum Formula {
    /// Cyclicity and spin-flip branching from the trion lifetime and the
    /// saturated pumping time (both ns).
    Cyclicity { lifetime: String, pumping_time: String },
    /// ESR shift per unit two-photon Rabi frequency for an arm imbalance.
    Stark {
        #[arg(long, allow_negative_numbers = true)]
        eta: f64,
        /// Signed result for this handedness; magnitude when omitted.
        #[arg(long, value_enum)]
        handedness: Option<Hand>,
    },
    /// Electron g-factor from the spin splitting (GHz) and field (T).
    Gfactor { splitting: String, field: String },
    /// Arm imbalance from a measured shift-per-Rabi slope.
    EtaFromSlope {
        #[arg(allow_negative_numbers = true)]
        slope: f64,
    },
    /// Dipole-matched arm imbalance for a cyclicity.
    EtaFromCyclicity {
        cyclicity: f64,
        #[arg(long, value_enum, default_value = "sigma-")]
        handedness: Hand,
    },
    /// Two-photon Rabi frequency (MHz) from the arm Rabi frequencies and
    /// the single-photon detuning (all GHz).
    TwoPhotonRabi {
        rabi_down: String,
        rabi_up: String,
        #[arg(allow_negative_numbers = true)]
        detuning: String,
    },
    /// Detuning spread (MHz) from fractional intensity noise.
    LaserSigma {
        #[arg(allow_negative_numbers = true)]
        stark_ratio: f64,
        /// MHz.
        rabi: String,
        intensity_noise: f64,
    },
    /// Nuclear Larmor frequencies (MHz) at a field (T).
    Larmor {
        field: String,
        /// Species names; all known species when omitted.
        species: Vec<String>,
    },
    /// Gaussian T2* (ns) from a linewidth FWHM (MHz).
    FwhmToT2star { fwhm: String },
    /// Linewidth FWHM (MHz) from a Gaussian T2* (ns).
    T2starToFwhm { t2star: String },
    /// Detuning standard deviation (MHz) for a Gaussian T2* (ns).
    GaussianSigma { t2star: String },
    /// Q factor from the flipped population at the π time.
    Q {
        f_pi: f64,
        /// One-sigma error on f_pi.
        #[arg(long)]
        err: Option<f64>,
    },
}

/// Reads `text` as a quantity of `dim`, returned in `unit` of that dimension.
fn quantity(text: &str, dim: Dimension, unit: &str) -> Result<f64, Failure> {
    let to_target = dim.factor(unit).expect("target unit belongs to the dimension");
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    for (i, _) in t.char_indices().skip(1) {
        let (num, suffix) = t.split_at(i);
        if let (Ok(v), Some(f)) = (num.trim().parse::<f64>(), dim.factor(suffix.trim())) {
            return Ok(v * f / to_target);
        }
    }
    Err(Failure::usage(format!("cannot read '{text}' as a quantity in {unit}")))
}

struct Output(Vec<(String, f64, &'static str)>);

impl Output {
    fn push(&mut self, name: impl Into<String>, value: f64, unit: &'static str) {
        self.0.push((name.into(), value, unit));
    }

    fn print(&self, json: bool) {
        if json {
            let mut m = Map::new();
            for (n, v, _) in &self.0 {
                m.insert(n.clone(), serde_json::json!(v));
            }
            println!("{}", Value::Object(m));
        } else {
            for (n, v, u) in &self.0 {
                let text = format!("{n} = {}", fmt_sig(*v));
                if u.is_empty() {
                    println!("{text}");
                } else {
                    println!("{text} {u}");
                }
            }
        }
    }
}

/// Six significant digits.
fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    if digits > 12 {
        format!("{v:.5e}")
    } else {
        format!("{v:.digits$}")
    }
}

pub fn run(args: &CalcArgs, json: bool) -> Result<(), Failure> {
    let mut out = Output(Vec::new());
    match &args.formula {
        Formula::Cyclicity { lifetime, pumping_time } => {
            let c = cyclicity(
                quantity(lifetime, Dimension::Time, "ns")?,
                quantity(pumping_time, Dimension::Time, "ns")?,
            )?;
            out.push("cyclicity", c.cyclicity, "");
            out.push("branching", c.branching, "");
            out.push("branching_percent", 100.0 * c.branching, "%");
        }
        Formula::Stark { eta, handedness } => {
            let slope = match handedness {
                Some(h) => stark_slope(*eta, (*h).into()),
                None => stark_slope(*eta, Handedness::SigmaPlus).abs(),
            };
            if !slope.is_finite() {
                return Err(Failure::from(fss_core::Error::Domain(format!("imbalance must be nonzero, got {eta}"))));
            }
            out.push("shift_per_rabi", slope, "");
        }
        Formula::Gfactor { splitting, field } => {
            let g = g_factor(
                quantity(splitting, Dimension::Frequency, "GHz")?,
                quantity(field, Dimension::Field, "T")?,
            )?;
            out.push("g", g, "");
        }
        Formula::EtaFromSlope { slope } => out.push("eta", eta_from_slope(*slope), ""),
        Formula::EtaFromCyclicity { cyclicity, handedness } => {
            out.push("eta", eta_from_cyclicity(*cyclicity, (*handedness).into())?, "")
        }
        Formula::TwoPhotonRabi {
            rabi_down,
            rabi_up,
            detuning,
        } => {
            let r = two_photon_rabi(
                quantity(rabi_down, Dimension::Frequency, "GHz")?,
                quantity(rabi_up, Dimension::Frequency, "GHz")?,
                quantity(detuning, Dimension::Frequency, "GHz")?,
            )?;
            out.push("rabi", r, "MHz");
        }
        Formula::LaserSigma {
            stark_ratio,
            rabi,
            intensity_noise,
        } => {
            let r = quantity(rabi, Dimension::Frequency, "MHz")?;
            out.push("sigma", laser_sigma(*stark_ratio, r, *intensity_noise), "MHz");
        }
        Formula::Larmor { field, species } => {
            let b = quantity(field, Dimension::Field, "T")?;
            let names: Vec<&str> = if species.is_empty() {
                NUCLEAR_SPECIES.iter().map(|s| s.name).collect()
            } else {
                species.iter().map(String::as_str).collect()
            };
            let f = larmor_frequencies(b, &names)?;
            for (n, v) in names.iter().zip(f) {
                out.push(*n, v, "MHz");
            }
        }
        Formula::FwhmToT2star { fwhm } => {
            out.push("t2star", fwhm_to_t2star(quantity(fwhm, Dimension::Frequency, "MHz")?)?, "ns")
        }
        Formula::T2starToFwhm { t2star } => {
            out.push("fwhm", t2star_to_fwhm(quantity(t2star, Dimension::Time, "ns")?)?, "MHz")
        }
        Formula::GaussianSigma { t2star } => {
            out.push("sigma", gaussian_sigma(quantity(t2star, Dimension::Time, "ns")?)?, "MHz")
        }
        Formula::Q { f_pi, err } => {
            let (q, _) = q_factor(*f_pi);
            out.push("q", q, "");
            if let Some(e) = err {
                out.push("q_err", q_uncertainty(*f_pi, *e), "");
            }
        }
    }
    out.print(json);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_accept_glued_units() {
        assert_eq!(quantity("111", Dimension::Time, "ns").unwrap(), 111.0);
        assert_eq!(quantity("1.5us", Dimension::Time, "ns").unwrap(), 1500.0);
        assert!((quantity("2600MHz", Dimension::Frequency, "GHz").unwrap() - 2.6).abs() < 1e-12);
        assert_eq!(quantity("1e3 ns", Dimension::Time, "ns").unwrap(), 1000.0);
        assert!(quantity("5 T", Dimension::Time, "ns").is_err());
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(410.111), "410.111");
        assert_eq!(fmt_sig(0.0286123456), "0.0286123");
        assert_eq!(fmt_sig(10.0753), "10.0753");
    }
}
