use std::f64::consts::PI;

use fss_core::ensemble::{average_over_detuning, gauss_hermite, gaussian_sigma, EnsembleSpec};
use fss_core::models::q_factor;
use fss_core::sequences::{rabi_protocol, simulate_protocol, Physics};
use proptest::prelude::*;

/// Ramsey-type cosine fringe averaged over a Gaussian detuning spread.
fn averaged_cosine(sigma_mhz: f64, nodes: usize, taus: &[f64], offset_mhz: f64) -> Vec<f64> {
    average_over_detuning(sigma_mhz, nodes, |d| {
        Ok(taus.iter().map(|t| (2.0 * PI * (offset_mhz + d) * 1e-3 * t).cos()).collect())
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// σ·τ_max measured as an angular spread times time, up to 3 rad.
    #[test]
    fn node_count_converges_on_cosine(t2star in 5.0..200.0f64, reach in 0.05..1.0f64, offset in -50.0..50.0f64) {
        let sigma = gaussian_sigma(t2star).unwrap();
        let tau_max = reach * 3.0 / (2.0 * PI * sigma * 1e-3);
        let taus: Vec<f64> = (0..=40).map(|k| tau_max * k as f64 / 40.0).collect();
        let coarse = averaged_cosine(sigma, 21, &taus, offset);
        let fine = averaged_cosine(sigma, 41, &taus, offset);
        for (i, (a, b)) in coarse.iter().zip(&fine).enumerate() {
            let exact = (-(taus[i] / t2star).powi(2)).exp() * (2.0 * PI * offset * 1e-3 * taus[i]).cos();
            let scale = exact.abs().max((-(taus[i] / t2star).powi(2)).exp());
            prop_assert!((a - b).abs() <= 1e-6 * scale, "τ = {}: {a} vs {b}", taus[i]);
            prop_assert!((b - exact).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn combined_sigma_is_symmetric_and_reduces(a in 0.0..50.0f64, b in 0.0..50.0f64) {
        // a purely nuclear spread a, and a laser spread b via Ω·|ratio|·dI/I
        let t2 = |s: f64| if s == 0.0 { f64::INFINITY } else { 2f64.sqrt() / (2.0 * PI * s) * 1e3 };
        let spec = |nuclear: f64, laser: f64| EnsembleSpec {
            t2star_ns: t2(nuclear),
            stark_ratio: -1.0,
            rabi_mhz: 100.0,
            intensity_noise: laser / 100.0,
            ..EnsembleSpec::nuclear(1.0)
        };
        let ab = spec(a, b).combined_sigma();
        let ba = spec(b, a).combined_sigma();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert!((ab - a.hypot(b)).abs() <= 1e-12 * ab.max(1.0));
        prop_assert_eq!(spec(0.0, b).combined_sigma(), spec(0.0, b).sigma_laser());
        prop_assert_eq!(spec(a, 0.0).combined_sigma(), spec(a, 0.0).sigma_nuclear());
    }
}

#[test]
fn rules_integrate_gaussian_moments() {
    for n in [9, 21, 41] {
        let (x, w) = gauss_hermite(n).unwrap();
        // E[X^2k] = (2k − 1)!!
        let mut double_factorial = 1.0;
        for k in 0..n / 2 {
            if k > 0 {
                double_factorial *= (2 * k - 1) as f64;
            }
            let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k as i32)).sum();
            assert!((m / double_factorial - 1.0).abs() < 1e-9, "n = {n}, k = {k}: {m}");
            let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k as i32 + 1)).sum();
            assert!(odd.abs() < 1e-9 * double_factorial.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn q_does_not_rise_with_intensity_noise(rabi in 60.0..250.0f64) {
        let physics = Physics::two_level(0.0048 * rabi, 4.2);
        let p = rabi_protocol(rabi, 0.0, &[1e3 / (2.0 * rabi)]).unwrap();
        let q: Vec<f64> = [0.0, 0.01, 0.02, 0.04]
            .iter()
            .map(|&noise| {
                let ens = EnsembleSpec {
                    stark_ratio: -7.4,
                    rabi_mhz: rabi,
                    intensity_noise: noise,
                    amplitude_jitter: true,
                    ..EnsembleSpec::nuclear(34.0)
                };
                q_factor(simulate_protocol(&p, &physics, &ens).unwrap().signal[0]).0
            })
            .collect();
        prop_assert!(q.windows(2).all(|w| w[1] <= w[0]), "{q:?}");
    }
}
