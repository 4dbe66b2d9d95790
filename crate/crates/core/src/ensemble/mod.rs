//! Static Gaussian detuning ensembles: nuclear (Overhauser) dephasing and
//! quasi-static laser-intensity noise coupled through the differential
//! light shift.
//!
//! The Gaussian width in angular units is √2/T2*; at the API it is quoted
//! as an ordinary frequency σ = √2/(2π·T2*), so that the free-induction
//! envelope of a Ramsey fringe is exp(−(τ/T2*)²).

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::units::compensated_sum;
use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 21;

/// σ in MHz for a Gaussian free-induction decay time T2* in ns.
pub fn gaussian_sigma(t2star_ns: f64) -> Result<f64> {
    if !(t2star_ns > 0.0) {
        return Err(Error::usage("T2* must be positive"));
    }
    Ok(2f64.sqrt() / (2.0 * PI * t2star_ns) * 1e3)
}

/// Detuning spread (MHz) from fractional intensity noise: |Δδ/Ω|·Ω·dI/I.
pub fn laser_sigma(stark_ratio: f64, rabi_mhz: f64, intensity_noise: f64) -> f64 {
    (stark_ratio * rabi_mhz * intensity_noise).abs()
}

/// Probabilists' Gauss–Hermite rule: nodes x_k and weights w_k with
/// Σ w_k f(x_k) ≈ E[f(X)], X ~ N(0, 1). Weights sum to one.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::usage("quadrature needs at least one node"));
    }
    // Golub–Welsch on the Jacobi matrix of the He_n recurrence
    let jac = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrise to remove eigen-solver noise
    for k in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - k].0 - pairs[k].0);
        let w = 0.5 * (pairs[n - 1 - k].1 + pairs[k].1);
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total = compensated_sum(pairs.iter().map(|p| p.1));
    Ok((pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1 / total).collect()))
}

/// One quadrature point: a detuning offset and a Rabi-amplitude factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSample {
    pub detuning_mhz: f64,
    pub rabi_scale: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    /// Infinite means no nuclear dephasing.
    pub t2star_ns: f64,
    /// Differential light shift per unit Rabi frequency, Δδ/Ω.
    pub stark_ratio: f64,
    pub rabi_mhz: f64,
    /// RMS fractional intensity fluctuation dI/I.
    pub intensity_noise: f64,
    pub nodes: usize,
    /// Let the Rabi frequency co-vary with the intensity (dΩ/Ω = dI/I).
    pub amplitude_jitter: bool,
}

impl EnsembleSpec {
    pub fn nuclear(t2star_ns: f64) -> Self {
        Self {
            t2star_ns,
            stark_ratio: 0.0,
            rabi_mhz: 0.0,
            intensity_noise: 0.0,
            nodes: DEFAULT_NODES,
            amplitude_jitter: false,
        }
    }

    /// No ensemble at all.
    pub fn none() -> Self {
        Self::nuclear(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t2star_ns > 0.0) {
            return Err(Error::usage("T2* must be positive"));
        }
        if !(self.intensity_noise >= 0.0) || !self.intensity_noise.is_finite() {
            return Err(Error::usage("intensity noise must be finite and non-negative"));
        }
        if self.nodes < 9 || self.nodes.is_multiple_of(2) {
            return Err(Error::usage(format!("quadrature node count must be odd and at least 9, got {}", self.nodes)));
        }
        if !self.stark_ratio.is_finite() || !self.rabi_mhz.is_finite() {
            return Err(Error::usage("light-shift ratio and Rabi frequency must be finite"));
        }
        Ok(())
    }

    pub fn sigma_nuclear(&self) -> f64 {
        if self.t2star_ns.is_infinite() {
            0.0
        } else {
            2f64.sqrt() / (2.0 * PI * self.t2star_ns) * 1e3
        }
    }

    pub fn sigma_laser(&self) -> f64 {
        laser_sigma(self.stark_ratio, self.rabi_mhz, self.intensity_noise)
    }

    /// Root-sum-square of the nuclear and laser contributions, MHz.
    pub fn combined_sigma(&self) -> f64 {
        self.sigma_nuclear().hypot(self.sigma_laser())
    }

    /// Quadrature points. Without amplitude jitter the two Gaussian sources
    /// merge into one of width [`combined_sigma`](Self::combined_sigma);
    /// with it, the laser part is a second axis that also scales Ω.
    pub fn samples(&self) -> Result<Vec<EnsembleSample>> {
        self.validate()?;
        let (x, w) = gauss_hermite(self.nodes)?;
        let jitter = self.amplitude_jitter && self.intensity_noise > 0.0;
        if !jitter {
            let sigma = self.combined_sigma();
            if sigma == 0.0 {
                return Ok(vec![EnsembleSample {
                    detuning_mhz: 0.0,
                    rabi_scale: 1.0,
                    weight: 1.0,
                }]);
            }
            return Ok(x
                .iter()
                .zip(&w)
                .map(|(&x, &w)| EnsembleSample {
                    detuning_mhz: sigma * x,
                    rabi_scale: 1.0,
                    weight: w,
                })
                .collect());
        }
        let sn = self.sigma_nuclear();
        let nuclear: Vec<(f64, f64)> = if sn == 0.0 {
            vec![(0.0, 1.0)]
        } else {
            x.iter().zip(&w).map(|(&x, &w)| (sn * x, w)).collect()
        };
        let mut out = Vec::with_capacity(nuclear.len() * x.len());
        for &(dn, wn) in &nuclear {
            for (&xi, &wi) in x.iter().zip(&w) {
                let di = self.intensity_noise * xi;
                out.push(EnsembleSample {
                    detuning_mhz: dn + self.stark_ratio * self.rabi_mhz * di,
                    rabi_scale: 1.0 + di,
                    weight: wn * wi,
                });
            }
        }
        Ok(out)
    }
}

/// Weighted average of `f` over the ensemble samples. Evaluations run in
/// parallel; the sums are compensated and taken in sample order, so the
/// result does not depend on scheduling.
pub fn ensemble_average<F>(samples: &[EnsembleSample], f: F) -> Result<Vec<f64>>
where
    F: Fn(&EnsembleSample) -> Result<Vec<f64>> + Sync,
{
    if samples.is_empty() {
        return Err(Error::usage("ensemble has no samples"));
    }
    if samples.len() == 1 {
        return f(&samples[0]);
    }
    let traces: Vec<Vec<f64>> = samples.par_iter().map(&f).collect::<Result<_>>()?;
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::usage("ensemble members returned traces of different length"));
    }
    Ok((0..len)
        .map(|i| compensated_sum(traces.iter().zip(samples).map(|(t, s)| s.weight * t[i])))
        .collect())
}

/// Gaussian average over detuning offsets of width `sigma_mhz`.
pub fn average_over_detuning<F>(sigma_mhz: f64, nodes: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if !(sigma_mhz >= 0.0) {
        return Err(Error::usage("σ must be non-negative"));
    }
    if sigma_mhz == 0.0 {
        return f(0.0);
    }
    let (x, w) = gauss_hermite(nodes)?;
    let samples: Vec<EnsembleSample> = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| EnsembleSample {
            detuning_mhz: sigma_mhz * x,
            rabi_scale: 1.0,
            weight: w,
        })
        .collect();
    ensemble_average(&samples, |s| f(s.detuning_mhz))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_for_reference_t2star() {
        let s = gaussian_sigma(74.0).unwrap();
        assert!((s - 3.04).abs() < 0.005);
        let fwhm = 2.0 * (2.0 * 2f64.ln()).sqrt() * s;
        assert!((fwhm - 7.2).abs() < 0.05);
        assert!(gaussian_sigma(1e12).unwrap() < 1e-9);
    }

    #[test]
    fn quadrature_moments() {
        let (x, w) = gauss_hermite(21).unwrap();
        let m = |k: i32| compensated_sum(x.iter().zip(&w).map(|(x, w)| w * x.powi(k)));
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(1).abs() < 1e-14);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn combined_sigma_cases() {
        let mut spec = EnsembleSpec::nuclear(34.0);
        assert_eq!(spec.combined_sigma(), spec.sigma_nuclear());
        spec.stark_ratio = -7.4;
        spec.rabi_mhz = 250.0;
        spec.intensity_noise = 0.01;
        assert!((spec.sigma_laser() - 18.5).abs() < 1e-12);
        assert!((3f64.hypot(3.0) - 4.243).abs() < 1e-3);
    }

    #[test]
    fn constant_is_preserved() {
        let spec = EnsembleSpec::nuclear(20.0);
        let s = spec.samples().unwrap();
        let avg = ensemble_average(&s, |_| Ok(vec![2.5, -1.0])).unwrap();
        assert!((avg[0] - 2.5).abs() < 1e-14 && (avg[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn jitter_grid_is_tensor_product() {
        let spec = EnsembleSpec {
            t2star_ns: 34.0,
            stark_ratio: -7.4,
            rabi_mhz: 100.0,
            intensity_noise: 0.02,
            nodes: 9,
            amplitude_jitter: true,
        };
        let s = spec.samples().unwrap();
        assert_eq!(s.len(), 81);
        let var = compensated_sum(s.iter().map(|p| p.weight * p.detuning_mhz.powi(2)));
        assert!((var - spec.combined_sigma().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn node_count_rules() {
        let mut spec = EnsembleSpec::nuclear(10.0);
        spec.nodes = 8;
        assert!(spec.samples().is_err());
        spec.nodes = 7;
        assert!(spec.samples().is_err());
    }
}
