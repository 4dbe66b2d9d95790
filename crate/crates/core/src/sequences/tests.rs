use std::f64::consts::PI;

use super::*;
use crate::ensemble::EnsembleSpec;
use crate::fitting::{damped_ramsey, echo_envelope, exp_decay, fft_spectrum, fit, saturation, serrodyne_ramsey, FitOptions};
use crate::models::{FaradayParams, DOWN};
use crate::units::angular_to_mhz;

fn grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + step * k as f64).collect()
}

fn coherent() -> Physics {
    Physics::two_level(0.0, 0.0)
}

#[test]
fn rabi_starts_dark() {
    let p = rabi_protocol(226.8, 0.0, &[0.0, 1.0]).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::none()).unwrap();
    assert!(t.signal[0].abs() < 1e-15);
    let opts = SimOptions {
        init_error: 0.02,
        ..SimOptions::default()
    };
    let t = simulate_with(&p, &coherent(), &EnsembleSpec::none(), &opts).unwrap();
    assert!((t.signal[0] - 0.02).abs() < 1e-12);
}

#[test]
fn rabi_matches_closed_form() {
    let (rabi, det) = (150.0, 60.0);
    let taus = grid(0.0, 0.05, 300);
    let p = rabi_protocol(rabi, det, &taus).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::none()).unwrap();
    let w = rabi.hypot(det);
    for (tau, y) in taus.iter().zip(&t.signal) {
        let exact = (rabi / w).powi(2) * (PI * w * 1e-3 * tau).sin().powi(2);
        assert!((y - exact).abs() < 1e-6, "τ = {tau}: {y} vs {exact}");
    }
}

#[test]
fn detuned_drive_relaxes_along_tilted_axis() {
    let (rabi, det, g1, g2) = (226.8, 400.0, 0.8, 3.7);
    let taus = grid(200.0, 10.0, 200);
    let p = rabi_protocol(rabi, det, &taus).unwrap();
    let t = simulate_protocol(&p, &Physics::two_level(g1, g2), &EnsembleSpec::nuclear(34.0)).unwrap();
    let r = fit(&exp_decay(), &taus, &t.signal, None, &[-0.2, 500.0, 0.5], &FitOptions::default()).unwrap();
    let rate = angular_to_mhz(1.0 / r.get("tau").unwrap().0);
    // relaxation of the Bloch component along the drive axis
    let w2 = rabi * rabi + det * det;
    let (nx2, nz2) = (rabi * rabi / w2, det * det / w2);
    let recovered = (rate - 2.0 * g2 * nx2) / nz2;
    assert!((recovered / g1 - 1.0).abs() < 0.1, "rate {rate}, Γ1 {recovered}");
}

#[test]
fn esr_peak_follows_light_shift() {
    let rabi = 110.0;
    let tau = 1e3 / (2.0 * rabi);
    let peak = |ratio: f64| {
        let freqs = grid(1.5, 0.002, 1001);
        let p = esr_scan_protocol(rabi, tau, &freqs, ratio, 2.6).unwrap();
        let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::none()).unwrap();
        let k = (0..freqs.len()).max_by(|&a, &b| t.signal[a].total_cmp(&t.signal[b])).unwrap();
        freqs[k]
    };
    assert!((peak(0.0) - 2.6).abs() < 1e-9);
    assert!((peak(-7.4) - (2.6 - 0.814)).abs() < 2e-3);
}

#[test]
fn ramsey_without_dephasing_is_fully_bright() {
    let p = ramsey_protocol(125.0, 0.0, &grid(0.0, 5.0, 40), 0.0, true, &PulseOptions::default()).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::none()).unwrap();
    assert!(t.signal.iter().all(|c| (c - 1.0).abs() < 1e-7), "{:?}", t.signal);
}

#[test]
fn ideal_ramsey_matches_gaussian_dephasing() {
    let (t2, det) = (34.0, 100.0);
    let taus = grid(0.0, 0.5, 137);
    let opts = PulseOptions {
        ideal_pulses: true,
        ..PulseOptions::default()
    };
    let p = ramsey_protocol(125.0, det, &taus, 0.0, true, &opts).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(t2)).unwrap();
    for (tau, c) in taus.iter().zip(&t.signal) {
        let exact = (-(tau / t2).powi(2)).exp() * (2.0 * PI * det * 1e-3 * tau).cos();
        assert!((c - exact).abs() < 0.01, "τ = {tau}: {c} vs {exact}");
        assert!((-1.0..=1.0).contains(c));
    }
}

#[test]
fn ramsey_refit_recovers_t2star_and_detuning() {
    let taus = grid(0.0, 0.5, 200);
    let p = ramsey_protocol(125.0, 100.0, &taus, 0.0, true, &PulseOptions::default()).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(34.0)).unwrap();
    let r = fit(&damped_ramsey(), &taus, &t.signal, None, &[1.0, 100.0, PI / 2.0, 30.0], &FitOptions::default()).unwrap();
    assert!((r.get("t2star").unwrap().0 - 34.0).abs() < 2.0);
    assert!((r.get("detuning").unwrap().0 - 100.0).abs() < 2.0);
}

#[test]
fn serrodyne_adds_to_residual_detuning() {
    let taus = grid(0.0, 0.5, 400);
    let p = ramsey_protocol(125.0, 12.0, &taus, 100.0, true, &PulseOptions::default()).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(74.0)).unwrap();
    let r = fit(&serrodyne_ramsey(), &taus, &t.signal, None, &[1.0, 110.0, 70.0], &FitOptions::default()).unwrap();
    let f = r.get("frequency").unwrap().0;
    assert!((f - 112.0).abs() < 1.0, "{f}");
    assert!((r.get("t2star").unwrap().0 - 74.0).abs() < 11.0);
}

#[test]
fn echo_refocuses_static_detuning() {
    let delays = grid(0.0, 20.0, 51);
    let ideal = PulseOptions {
        ideal_pulses: true,
        ..PulseOptions::default()
    };
    for det in [0.0, 5.0, -17.0] {
        let p = hahn_echo_protocol(125.0, &delays, det, &ideal).unwrap();
        let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(34.0)).unwrap();
        assert!(t.signal.iter().all(|c| (1.0 - c).abs() < 1e-3), "{det}: {:?}", t.signal);
    }
    let p = hahn_echo_protocol(125.0, &delays, 0.0, &PulseOptions::default()).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(34.0)).unwrap();
    assert!(t.signal.iter().all(|&c| c >= 0.99), "{:?}", t.signal);
}

#[test]
fn echo_envelope_is_recovered() {
    let delays = grid(0.0, 25.0, 120);
    let mut p = hahn_echo_protocol(125.0, &delays, 0.0, &PulseOptions::default()).unwrap();
    p.echo_decay_ns = Some(1140.0);
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(34.0)).unwrap();
    let r = fit(&echo_envelope(), &delays, &t.signal, None, &[1.0, 1000.0], &FitOptions::default()).unwrap();
    assert!((r.get("t2_echo").unwrap().0 - 1140.0).abs() < 20.0);
}

#[test]
fn echo_modulation_shows_in_spectrum() {
    let delays = grid(0.0, 2.0, 512);
    let mut p = hahn_echo_protocol(125.0, &delays, 0.0, &PulseOptions::default()).unwrap();
    p.modulation = Some(DetuningModulation {
        amplitude_mhz: 3.0,
        frequency_mhz: 47.4,
        phases: 8,
    });
    let mut ens = EnsembleSpec::nuclear(34.0);
    ens.nodes = 9;
    let t = simulate_protocol(&p, &coherent(), &ens).unwrap();
    let spacing: Vec<f64> = delays.iter().map(|d| d / 2.0).collect();
    let s = fft_spectrum(&spacing, &t.signal, 0.1).unwrap();
    assert!((s.peaks[0].frequency_mhz - 47.4).abs() < 0.5, "{:?}", &s.peaks[..3.min(s.peaks.len())]);
}

fn pumping_physics() -> Physics {
    Physics::four_level(FaradayParams {
        cyclicity: 409.0,
        ..FaradayParams::reference()
    })
}

#[test]
fn no_light_no_emission() {
    let p = spin_pumping_protocol(0.0, 50.0).unwrap();
    let t = simulate_protocol(&p, &pumping_physics(), &EnsembleSpec::none()).unwrap();
    assert_eq!(t.len(), 50);
    assert!(t.signal.iter().all(|&y| y == 0.0));
}

#[test]
fn pumping_time_matches_cyclicity() {
    let s = 6.0;
    let p = spin_pumping_protocol(s, 1500.0).unwrap();
    let t = simulate_protocol(&p, &pumping_physics(), &EnsembleSpec::none()).unwrap();
    let f = fit_pumping(&t, s).unwrap();
    assert!((90.0..=140.0).contains(&f.per_excitation_tau_ns), "{f:?}");
    // pumping alone: (C+1)/(γ1·ρ_ee)
    let expected = 410.0 * 0.270 / f.excited_fraction;
    assert!((f.pumping_tau_ns / expected - 1.0).abs() < 0.02, "{} vs {expected}", f.pumping_tau_ns);
    assert!(f.tau_ns < f.pumping_tau_ns && f.residual_fraction > 0.0);
}

#[test]
fn pumping_rate_saturates() {
    let powers = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
    let rates: Vec<f64> = powers
        .iter()
        .map(|&s| {
            let p = spin_pumping_protocol(s, 5000.0).unwrap();
            let t = simulate_protocol(&p, &pumping_physics(), &EnsembleSpec::none()).unwrap();
            1.0 / fit_pumping(&t, s).unwrap().pumping_tau_ns
        })
        .collect();
    let r = fit(&saturation(), &powers, &rates, None, &[rates[5], 1.0], &FitOptions::default()).unwrap();
    let top = r.get("rate_max").unwrap().0;
    for (s, k) in powers.iter().zip(&rates) {
        let ratio = k / top;
        assert!((ratio / (s / (1.0 + s)) - 1.0).abs() < 0.05, "s = {s}: {ratio}");
    }
    // the saturated rate is the spin-flip branch of half the trion decay
    assert!((top * 2.0 * 410.0 * 0.270 - 1.0).abs() < 0.05, "{top}");
}

#[test]
fn t1_recovers_relaxation_time() {
    for t1_us in [51.0, 43.0] {
        let delays = grid(0.0, 2500.0, 81);
        let p = t1_protocol(&delays).unwrap();
        let g1 = angular_to_mhz(1.0 / (t1_us * 1e3));
        let t = simulate_protocol(&p, &Physics::two_level(g1, 0.0), &EnsembleSpec::none()).unwrap();
        let r = fit(&exp_decay(), &delays, &t.signal, None, &[-1.0, 30_000.0, 1.0], &FitOptions::default()).unwrap();
        assert!((r.get("tau").unwrap().0 * 1e-3 - t1_us).abs() < 2.0);
    }
    let p = t1_protocol(&grid(0.0, 1000.0, 10)).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::none()).unwrap();
    assert!(t.signal.iter().all(|&y| y.abs() < 1e-12));
}

#[test]
fn empty_protocol_gives_empty_trace() {
    let p = rabi_protocol(100.0, 0.0, &[]).unwrap();
    let t = simulate_protocol(&p, &coherent(), &EnsembleSpec::nuclear(34.0)).unwrap();
    assert!(t.is_empty());
}

#[test]
fn seeded_counts_are_reproducible() {
    let p = ramsey_protocol(125.0, 50.0, &grid(0.0, 1.0, 64), 0.0, true, &PulseOptions::default()).unwrap();
    let opts = |seed| SimOptions {
        counts: Some(CountModel {
            bright_counts: 0.05,
            background: 0.001,
            shots: 10_000,
        }),
        seed,
        ..SimOptions::default()
    };
    let ens = EnsembleSpec::nuclear(34.0);
    let a = simulate_with(&p, &coherent(), &ens, &opts(7)).unwrap();
    let b = simulate_with(&p, &coherent(), &ens, &opts(7)).unwrap();
    let c = simulate_with(&p, &coherent(), &ens, &opts(8)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.signal, c.signal);
    assert!(a.signal.iter().all(|c| (-1.0..=1.0).contains(c)));
    assert!(a.readouts.iter().flatten().all(|n| n.fract() == 0.0));
}

#[test]
fn scan_errors_name_the_point() {
    let mut p = rabi_protocol(100.0, 0.0, &[1.0, 2.0]).unwrap();
    p.points[1].shots[0][2] = PulseSegment::readout(7);
    let err = simulate_protocol(&p, &coherent(), &EnsembleSpec::none()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("scan point 1") && msg.contains("tau = 2"), "{msg}");
}

#[test]
fn contrast_needs_paired_shots() {
    let mut p = ramsey_protocol(125.0, 0.0, &[1.0], 0.0, true, &PulseOptions::default()).unwrap();
    p.points[0].shots.pop();
    assert!(p.validate().is_err());
    let mut p = rabi_protocol(100.0, 0.0, &[1.0]).unwrap();
    p.points[0].shots[0].retain(|s| s.kind != SegmentKind::Readout);
    assert!(p.validate().is_err());
    assert!(PulseSegment::readout(DOWN).validate().is_ok());
}

#[test]
fn four_level_pi_pulse_flips_spin() {
    let physics = Physics::four_level(FaradayParams::reference());
    let rabi = 20.0;
    let p = rabi_protocol(rabi, 0.0, &[0.0, 1e3 / (2.0 * rabi)]).unwrap();
    let t = simulate_protocol(&p, &physics, &EnsembleSpec::none()).unwrap();
    assert!(t.signal[0].abs() < 1e-9);
    assert!(t.signal[1] > 0.97, "{:?}", t.signal);
}
