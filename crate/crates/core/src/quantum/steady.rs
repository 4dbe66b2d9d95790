use super::density::{guard_positivity, symmetrize, DensityMatrix};
use super::lindblad::{dense_rhs, liouvillian, LindbladModel};
use super::ops::{from_row_major, max_abs};
use super::{CMatrix, C64};
use crate::{Error, Result};

/// Singular values below this fraction of the largest count as null.
const NULL_TOL: f64 = 1e-10;

/// Unique stationary state of a time-independent model.
///
/// Solves 𝓛·vec(ρ) = 0 with the first row replaced by the trace
/// constraint, after checking that the null space is one-dimensional.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let ham = model.hamiltonian();
    if !ham.is_time_independent() {
        return Err(Error::usage("steady state needs a time-independent Hamiltonian"));
    }
    if !model.channels().iter().any(|c| c.rate() > 0.0 && max_abs(c.operator()) > 0.0) {
        return Err(Error::usage("steady state needs at least one dissipative channel"));
    }
    let n = model.dim();
    let h = ham.at(0.0);
    let l = liouvillian(&h, model.channels());

    let sv = l.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let null_dim = sv.iter().filter(|&&s| s <= NULL_TOL * smax).count();
    if null_dim != 1 {
        return Err(Error::AmbiguousSteadyState { null_dim });
    }

    let mut a = l;
    let mut b = CMatrix::zeros(n * n, 1);
    for col in 0..n * n {
        a[(0, col)] = C64::new(0.0, 0.0);
    }
    for i in 0..n {
        a[(0, i * n + i)] = C64::new(1.0, 0.0);
    }
    b[(0, 0)] = C64::new(1.0, 0.0);
    let x = a.lu().solve(&b).ok_or(Error::Numerical {
        time: f64::INFINITY,
        reason: "singular steady-state system".into(),
    })?;
    let rho = symmetrize(&from_row_major(n, x.as_slice()));
    let rho = guard_positivity(rho).map_err(|min| Error::Numerical {
        time: f64::INFINITY,
        reason: format!("steady state has negative eigenvalue {min:.3e}"),
    })?;
    let residual = max_abs(&dense_rhs(&rho, &h, model.channels()));
    let scale = max_abs(&h).max(1.0);
    if residual > 1e-10 * scale {
        return Err(Error::Numerical {
            time: f64::INFINITY,
            reason: format!("steady-state residual {residual:.3e}"),
        });
    }
    Ok(DensityMatrix::from_raw(rho))
}

#[cfg(test)]
mod tests {
    use super::super::ops::{ket_bra, projector, sigma_x};
    use super::super::{evolve, CollapseChannel, Hamiltonian};
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("l{i}")).collect()
    }

    #[test]
    fn pure_decay_goes_to_ground() {
        let model = LindbladModel::new(
            Hamiltonian::zero(2),
            vec![CollapseChannel::new(1.0, ket_bra(2, 0, 1)).unwrap()],
            labels(2),
        )
        .unwrap();
        let rho = steady_state(&model).unwrap();
        assert!((rho.population(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn driven_damped_two_level_matches_bloch_formula() {
        let gamma = 1.0;
        let omega = 1.3;
        let h = Hamiltonian::new(sigma_x() * C64::new(omega / 2.0, 0.0)).unwrap();
        let model = LindbladModel::new(h, vec![CollapseChannel::new(gamma, ket_bra(2, 0, 1)).unwrap()], labels(2)).unwrap();
        let rho = steady_state(&model).unwrap();
        let s = 2.0 * omega * omega / (gamma * gamma);
        assert!((rho.population(1) - s / (2.0 * (1.0 + s))).abs() < 1e-12);

        let t_long = 50.0 / gamma;
        let traj = evolve(&model, &DensityMatrix::pure_level(2, 0), &[0.0, t_long]).unwrap();
        let diff = traj.last().unwrap().matrix() - rho.matrix();
        assert!(max_abs(&diff) < 1e-6);
    }

    #[test]
    fn two_decoupled_sinks_are_ambiguous() {
        let model = LindbladModel::new(
            Hamiltonian::zero(3),
            vec![CollapseChannel::new(1.0, ket_bra(3, 0, 2)).unwrap()],
            labels(3),
        )
        .unwrap();
        match steady_state(&model) {
            Err(Error::AmbiguousSteadyState { null_dim }) => assert!(null_dim >= 2),
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn requires_dissipation() {
        let model = LindbladModel::new(Hamiltonian::new(projector(2, 0)).unwrap(), vec![], labels(2)).unwrap();
        assert!(steady_state(&model).is_err());
    }
}
