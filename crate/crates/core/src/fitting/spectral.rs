//! Windowed magnitude spectra, nuclear Larmor reference lines and the
//! Gaussian linewidth ↔ T2* conversion.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::{Error, Result};

const MIN_POINTS: usize = 32;
const UNIFORM_TOL: f64 = 1e-6;
/// Peaks below this fraction of the largest sample magnitude are noise.
const ABSOLUTE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub frequency_mhz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub frequency_mhz: Vec<f64>,
    /// Sinusoid amplitude estimate per bin.
    pub amplitude: Vec<f64>,
    /// Sorted by decreasing amplitude.
    pub peaks: Vec<Peak>,
}

/// Hann-windowed one-sided magnitude spectrum of a uniformly sampled
/// trace (times in ns). The mean is removed first. Peaks are local maxima
/// above `prominence` times the largest bin, refined by a parabola
/// through the three bins around each maximum.
pub fn fft_spectrum(times_ns: &[f64], values: &[f64], prominence: f64) -> Result<Spectrum> {
    let n = times_ns.len();
    if values.len() != n {
        return Err(Error::usage("times and values differ in length"));
    }
    if n < MIN_POINTS {
        return Err(Error::usage(format!("spectrum needs at least {MIN_POINTS} points, got {n}")));
    }
    let dt = (times_ns[n - 1] - times_ns[0]) / (n - 1) as f64;
    if !(dt > 0.0) || times_ns.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > UNIFORM_TOL * dt) {
        return Err(Error::usage("spectrum needs a uniform, increasing time grid"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos()).collect();
    let wsum: f64 = window.iter().sum();
    let mut buf: Vec<Complex64> = values
        .iter()
        .zip(&window)
        .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    let df = 1e3 / (n as f64 * dt);
    let frequency_mhz: Vec<f64> = (0..bins).map(|k| k as f64 * df).collect();
    let amplitude: Vec<f64> = buf[..bins].iter().map(|c| 2.0 * c.norm() / wsum).collect();

    let top = amplitude.iter().cloned().fold(0.0, f64::max);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let threshold = (prominence * top).max(ABSOLUTE_FLOOR * scale);
    let mut peaks = Vec::new();
    for k in 1..bins - 1 {
        let (a, b, c) = (amplitude[k - 1], amplitude[k], amplitude[k + 1]);
        if b > a && b >= c && b > threshold {
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            peaks.push(Peak {
                frequency_mhz: (k as f64 + shift) * df,
                amplitude: b - 0.25 * (a - c) * shift,
            });
        }
    }
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    Ok(Spectrum {
        frequency_mhz,
        amplitude,
        peaks,
    })
}

/// Strongest spectral line of a trace, MHz; a starting guess for
/// oscillatory fits.
pub fn dominant_frequency(times_ns: &[f64], values: &[f64]) -> Result<f64> {
    let s = fft_spectrum(times_ns, values, 0.0)?;
    s.peaks
        .first()
        .map(|p| p.frequency_mhz)
        .ok_or_else(|| Error::domain("trace has no spectral peak"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuclearSpecies {
    pub name: &'static str,
    /// γ/2π in MHz/T.
    pub gyromagnetic_mhz_per_t: f64,
}

/// Gyromagnetic ratios γ/2π of the host nuclei (standard NMR tables).
pub const NUCLEAR_SPECIES: [NuclearSpecies; 5] = [
    NuclearSpecies {
        name: "75As",
        gyromagnetic_mhz_per_t: 7.3150,
    },
    NuclearSpecies {
        name: "69Ga",
        gyromagnetic_mhz_per_t: 10.2474,
    },
    NuclearSpecies {
        name: "71Ga",
        gyromagnetic_mhz_per_t: 13.0204,
    },
    NuclearSpecies {
        name: "113In",
        gyromagnetic_mhz_per_t: 9.3655,
    },
    NuclearSpecies {
        name: "115In",
        gyromagnetic_mhz_per_t: 9.3856,
    },
];

pub fn species(name: &str) -> Result<NuclearSpecies> {
    let key = name.trim();
    NUCLEAR_SPECIES
        .iter()
        .find(|s| s.name.eq_ignore_ascii_case(key) || alias(s.name).is_some_and(|a| a.eq_ignore_ascii_case(key)))
        .copied()
        .ok_or_else(|| Error::usage(format!("unknown nuclear species '{name}'")))
}

fn alias(name: &str) -> Option<&'static str> {
    match name {
        "75As" => Some("As"),
        _ => None,
    }
}

/// Larmor frequencies γ·B (MHz) for the named species.
pub fn larmor_frequencies(field_tesla: f64, names: &[&str]) -> Result<Vec<f64>> {
    if !(field_tesla > 0.0) {
        return Err(Error::domain("magnetic field must be positive"));
    }
    names
        .iter()
        .map(|n| Ok(species(n)?.gyromagnetic_mhz_per_t * field_tesla))
        .collect()
}

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// T2* (ns) whose Gaussian ensemble has the given FWHM (MHz).
pub fn fwhm_to_t2star(fwhm_mhz: f64) -> Result<f64> {
    if !(fwhm_mhz > 0.0) {
        return Err(Error::domain("linewidth must be positive"));
    }
    Ok(FWHM_PER_SIGMA * 2f64.sqrt() / (2.0 * PI * fwhm_mhz) * 1e3)
}

/// Inverse of [`fwhm_to_t2star`].
pub fn t2star_to_fwhm(t2star_ns: f64) -> Result<f64> {
    if !(t2star_ns > 0.0) {
        return Err(Error::domain("T2* must be positive"));
    }
    Ok(FWHM_PER_SIGMA * 2f64.sqrt() / (2.0 * PI * t2star_ns) * 1e3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64).collect()
    }

    #[test]
    fn single_tone() {
        let t = grid(1024);
        let y: Vec<f64> = t.iter().map(|t| (2.0 * PI * 47.4e-3 * t).cos()).collect();
        let s = fft_spectrum(&t, &y, 0.1).unwrap();
        assert!((s.peaks[0].frequency_mhz - 47.4).abs() < 0.5);
        assert!((s.peaks[0].amplitude - 1.0).abs() < 0.2);
    }

    #[test]
    fn constant_has_no_peaks() {
        let t = grid(256);
        let s = fft_spectrum(&t, &vec![0.7; 256], 0.1).unwrap();
        assert!(s.peaks.is_empty());
    }

    #[test]
    fn three_larmor_lines() {
        let f = larmor_frequencies(6.5, &["75As", "69Ga", "71Ga"]).unwrap();
        let t = grid(1024);
        let y: Vec<f64> = t
            .iter()
            .map(|t| f.iter().map(|f| (2.0 * PI * f * 1e-3 * t).cos()).sum())
            .collect();
        let s = fft_spectrum(&t, &y, 0.3).unwrap();
        assert_eq!(s.peaks.len(), 3);
        let mut found: Vec<f64> = s.peaks.iter().map(|p| p.frequency_mhz).collect();
        found.sort_by(f64::total_cmp);
        for (a, b) in found.iter().zip(&f) {
            assert!((a - b).abs() < 0.5, "{a} vs {b}");
        }
    }

    #[test]
    fn grid_checks() {
        let t = grid(20);
        assert!(fft_spectrum(&t, &t, 0.1).is_err());
        let mut t = grid(64);
        t[10] += 0.3;
        assert!(fft_spectrum(&t, &t.clone(), 0.1).is_err());
    }

    #[test]
    fn larmor_values() {
        let f = larmor_frequencies(6.5, &["As", "69Ga", "71Ga"]).unwrap();
        assert!((f[0] - 47.4).abs() < 1.0 && (f[1] - 66.4).abs() < 1.0 && (f[2] - 84.4).abs() < 1.0);
        assert!(larmor_frequencies(1e-12, &["As"]).unwrap()[0] < 1e-10);
        assert!(larmor_frequencies(6.5, &["Xe"]).is_err());
        assert!(larmor_frequencies(0.0, &["As"]).is_err());
    }

    #[test]
    fn linewidth_pairs() {
        let t = fwhm_to_t2star(7.0).unwrap();
        assert!((t - 75.7).abs() < 0.05);
        assert!((fwhm_to_t2star(31.0).unwrap() - 17.1).abs() < 0.05);
        assert!((t2star_to_fwhm(t).unwrap() - 7.0).abs() < 1e-12);
    }
}
