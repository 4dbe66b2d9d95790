use super::density::{guard_positivity, symmetrize, DensityMatrix};
use super::integrator::{Dopri5, StepStats};
use super::lindblad::LindbladModel;
use super::ops::{from_row_major, to_row_major};
use super::{CMatrix, C64, TRACE_TOL};
use crate::{Error, Result};

/// Integrator settings for [`evolve_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EvolveOptions {
    pub integrator: Dopri5,
}

impl EvolveOptions {
    pub fn tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            integrator: Dopri5 {
                rtol,
                atol,
                ..Dopri5::default()
            },
        }
    }
}

/// States sampled on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn population(&self, level: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(level)).collect()
    }

    pub fn expectation(&self, observable: &CMatrix) -> Result<Vec<f64>> {
        self.states
            .iter()
            .map(|s| super::lindblad::expectation(s, observable))
            .collect()
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }
}

/// Evolves `rho0` from `times[0]` with default tolerances.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    evolve_with(model, rho0, times, &EvolveOptions::default())
}

/// A positivity failure is retried once with tolerances 100× tighter, so
/// that step-size drift on near-zero eigenvalues is not reported as an error.
pub fn evolve_with(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory> {
    match integrate_grid(model, rho0, times, options) {
        Err(Error::Numerical { reason, .. }) if reason.starts_with(NEGATIVE_EIGENVALUE) => {
            let mut tight = *options;
            tight.integrator.rtol /= 100.0;
            tight.integrator.atol /= 100.0;
            integrate_grid(model, rho0, times, &tight)
        }
        other => other,
    }
}

const NEGATIVE_EIGENVALUE: &str = "negative eigenvalue";

fn integrate_grid(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory> {
    let n = model.dim();
    if rho0.dim() != n {
        return Err(Error::usage(format!("state dimension {} does not match model dimension {n}", rho0.dim())));
    }
    if times.is_empty() {
        return Err(Error::usage("time grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::usage("time grid contains non-finite values"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("time grid must be strictly increasing"));
    }

    let mut states: Vec<DensityMatrix> = Vec::with_capacity(times.len());
    let mut y = to_row_major(rho0.matrix());
    let mut emit = |idx: usize, v: &[C64]| -> Result<()> {
        if idx < states.len() {
            return Ok(());
        }
        states.push(finalize(n, v, times[idx])?);
        Ok(())
    };

    let generator = model.generator();
    let integ = options.integrator;
    let mut stats = StepStats::default();
    let t0 = times[0];
    let t_end = *times.last().unwrap();
    let ham = model.hamiltonian();

    if ham.next_breakpoint(t0).is_none() {
        let s = integ.integrate(|t, r, d| generator.rhs(t, r, d), t0, &mut y, times, &mut emit)?;
        accumulate(&mut stats, s);
    } else {
        // sample-and-hold: integrate slice by slice with frozen envelopes
        emit(0, &y)?;
        let mut t = t0;
        let mut next = 1;
        while t < t_end {
            let b = ham.next_breakpoint(t).unwrap().min(t_end);
            let frozen = model.generator().frozen_at(ham.sample_time(0.5 * (t + b)));
            let mut grid = vec![t];
            let first = next;
            while next < times.len() && times[next] < b {
                grid.push(times[next]);
                next += 1;
            }
            grid.push(b);
            let hit_end = next < times.len() && times[next] == b;
            let s = integ.integrate(
                |tt, r, d| frozen.rhs(tt, r, d),
                t,
                &mut y,
                &grid,
                |i, v| {
                    if i == 0 || i == grid.len() - 1 {
                        return Ok(());
                    }
                    emit(first + i - 1, v)
                },
            )?;
            accumulate(&mut stats, s);
            if hit_end {
                emit(next, &y)?;
                next += 1;
            }
            t = b;
        }
    }

    Ok(Trajectory {
        times: times.to_vec(),
        states,
        stats,
    })
}

fn accumulate(total: &mut StepStats, s: StepStats) {
    total.accepted += s.accepted;
    total.rejected += s.rejected;
    total.evaluations += s.evaluations;
}

/// Symmetrise, check trace and apply the positivity guard.
fn finalize(n: usize, v: &[C64], t: f64) -> Result<DensityMatrix> {
    let m = symmetrize(&from_row_major(n, v));
    let tr = m.trace().re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::Numerical {
            time: t,
            reason: format!("trace drifted to {tr}"),
        });
    }
    guard_positivity(m).map(DensityMatrix::from_raw).map_err(|min| Error::Numerical {
        time: t,
        reason: format!("{NEGATIVE_EIGENVALUE} {min:.3e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::super::ops::{sigma_x, sigma_z};
    use super::super::{Envelope, Hamiltonian};
    use super::*;
    use std::f64::consts::PI;

    fn labels2() -> Vec<String> {
        vec!["down".into(), "up".into()]
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let model = LindbladModel::new(Hamiltonian::zero(2), vec![], labels2()).unwrap();
        let rho0 = DensityMatrix::from_populations(&[0.3, 0.7]).unwrap();
        let traj = evolve(&model, &rho0, &[0.0, 1.0, 5.0]).unwrap();
        for s in traj.states() {
            assert!(super::super::ops::max_abs(&(s.matrix() - rho0.matrix())) < 1e-14);
        }
    }

    #[test]
    fn resonant_rabi_matches_analytic() {
        let omega_mhz = 100.0;
        let w = 2.0 * PI * omega_mhz * 1e-3;
        let h = Hamiltonian::new(sigma_x() * C64::new(w / 2.0, 0.0)).unwrap();
        let model = LindbladModel::new(h, vec![], labels2()).unwrap();
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.025).collect();
        let traj = evolve(&model, &DensityMatrix::pure_level(2, 1), &times).unwrap();
        let p = traj.population(0);
        let worst = times
            .iter()
            .zip(&p)
            .map(|(t, p)| (p - (PI * omega_mhz * 1e-3 * t).sin().powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "max error {worst}");
        assert!((p[200] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hold_mode_outputs_inside_and_on_boundaries() {
        let h = Hamiltonian::zero(2)
            .with_drive(
                super::super::ops::ket_bra(2, 0, 1),
                Envelope::Tones(vec![(C64::new(0.3, 0.0), 0.5)]),
            )
            .unwrap()
            .piecewise_constant(0.0, 0.1)
            .unwrap();
        let model = LindbladModel::new(h, vec![], labels2()).unwrap();
        let times = [0.0, 0.05, 0.1, 0.25, 0.3, 0.31];
        let traj = evolve(&model, &DensityMatrix::pure_level(2, 1), &times).unwrap();
        assert_eq!(traj.len(), times.len());
        assert_eq!(traj.states().len(), times.len());
    }

    #[test]
    fn rejects_bad_grids() {
        let model = LindbladModel::new(Hamiltonian::new(sigma_z()).unwrap(), vec![], labels2()).unwrap();
        let rho = DensityMatrix::pure_level(2, 0);
        assert!(evolve(&model, &rho, &[]).is_err());
        assert!(evolve(&model, &rho, &[0.0, 1.0, 1.0]).is_err());
        assert!(evolve(&model, &DensityMatrix::pure_level(3, 0), &[0.0]).is_err());
    }
}
