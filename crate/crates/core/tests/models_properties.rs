use std::f64::consts::PI;

use fss_core::ensemble::EnsembleSpec;
use fss_core::models::{cpt_spectrum, equal_tone_amplitude, q_factor, CptParams, DriveComponents, FaradayParams};
use fss_core::quantum::ops::ket_bra;
use fss_core::quantum::{evolve, CMatrix, CollapseChannel, DensityMatrix, Hamiltonian, LindbladModel, C64};
use fss_core::sequences::{
    fit_pumping, rabi_protocol, simulate_protocol, spin_pumping_protocol, FourLevelPhysics, Physics, RamanMode,
};
use proptest::prelude::*;

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cpt_dip_ignores_overall_drive_strength(scale in 0.5..2.0f64) {
        let grid: Vec<f64> = (0..=120).map(|k| 2.57 + 0.0005 * k as f64).collect();
        let base = CptParams::reference();
        let scaled = CptParams {
            rabi_down: base.rabi_down * scale,
            rabi_up: base.rabi_up * scale,
            ..base
        };
        let a = argmin(&cpt_spectrum(&base, &grid).unwrap());
        let b = argmin(&cpt_spectrum(&scaled, &grid).unwrap());
        prop_assert!(a.abs_diff(b) <= 1, "{} vs {}", grid[a], grid[b]);
    }
}

proptest! {
    #[test]
    fn q_increases_with_pi_fidelity(a in 0.5001..0.9999f64, b in 0.5001..0.9999f64) {
        prop_assume!(a < b);
        prop_assert!(q_factor(a).0 < q_factor(b).0);
    }
}

#[test]
fn higher_cyclicity_pumps_more_slowly() {
    let s = 6.0;
    let taus: Vec<f64> = [50.0, 100.0, 400.0, 1000.0]
        .iter()
        .map(|&c| {
            let physics = Physics::four_level(FaradayParams {
                cyclicity: c,
                ..FaradayParams::reference()
            });
            let duration = 8.0 * (c + 1.0) * 0.270 / 0.45;
            let p = spin_pumping_protocol(s, duration).unwrap();
            let trace = simulate_protocol(&p, &physics, &EnsembleSpec::none()).unwrap();
            fit_pumping(&trace, s).unwrap().tau_ns
        })
        .collect();
    assert!(taus.windows(2).all(|w| w[1] > w[0]), "{taus:?}");
}

/// Ground-state model with the trion adiabatically eliminated: the two
/// tones give the Raman drive, and each tone scatters photons out of both
/// spin states. The tone pairs that excite the trion at the same frequency
/// (tone 1 from |↓⟩, tone 2 from |↑⟩) scatter coherently.
fn eliminated_flip(rabi_mhz: f64, tone_mhz: f64, detuning_ghz: f64, trion_decay_mhz: f64, t_ns: f64) -> f64 {
    let w = 2.0 * PI * rabi_mhz * 1e-3;
    // per-transition matrix element of c·A + h.c. with |c| = Ω/√2
    let c = 2.0 * PI * tone_mhz * 1e-3 / 2f64.sqrt();
    let delta = 2.0 * PI * detuning_ghz;
    let gamma = 2.0 * PI * trion_decay_mhz * 1e-3;
    let amp = (gamma / 2.0).sqrt() * c / delta;
    let to = |out: usize, from: usize| ket_bra(2, out, from);
    let mut channels = Vec::new();
    for out in 0..2 {
        let bright: CMatrix = to(out, 0) + to(out, 1);
        channels.push(CollapseChannel::new(amp * amp, bright).unwrap());
        channels.push(CollapseChannel::new(amp * amp, to(out, 0)).unwrap());
        channels.push(CollapseChannel::new(amp * amp, to(out, 1)).unwrap());
    }
    let h = Hamiltonian::new((to(0, 1) + to(1, 0)) * C64::new(w / 2.0, 0.0)).unwrap();
    let model = LindbladModel::new(h, channels, vec!["down".into(), "up".into()]).unwrap();
    let traj = evolve(&model, &DensityMatrix::pure_level(2, 1), &[0.0, t_ns]).unwrap();
    traj.last().unwrap().population(0)
}

#[test]
fn symmetric_lambda_pi_pulse_matches_elimination() {
    let params = FaradayParams {
        cyclicity: 1.0,
        detuning_ghz: 50.0,
        ..FaradayParams::reference()
    };
    let physics = Physics::FourLevel(FourLevelPhysics {
        params,
        components: DriveComponents::SigmaMinus,
        raman: RamanMode::Perturbative,
    });
    for rabi in [20.0, 60.0] {
        let t_pi = 1e3 / (2.0 * rabi);
        let p = rabi_protocol(rabi, 0.0, &[t_pi]).unwrap();
        let simulated = simulate_protocol(&p, &physics, &EnsembleSpec::none()).unwrap().signal[0];
        let tone = equal_tone_amplitude(rabi, 1.0, params.detuning_ghz).unwrap();
        let predicted = eliminated_flip(rabi, tone, params.detuning_ghz, params.trion_decay_mhz, t_pi);
        assert!(predicted < 0.99, "scattering should be visible: {predicted}");
        assert!((simulated - predicted).abs() <= 0.05 * predicted, "{rabi} MHz: {simulated} vs {predicted}");
    }
}
