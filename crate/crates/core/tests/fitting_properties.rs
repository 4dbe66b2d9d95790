use std::f64::consts::PI;

use fss_core::fitting::{fft_spectrum, fit, model_by_name, FitOptions, MODEL_NAMES};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + step * k as f64).collect()
}

/// Truths and sample points chosen so that a 20% error in any location
/// parameter stays inside one linewidth or well under a fringe period.
fn case(name: &str) -> (Vec<f64>, Vec<f64>) {
    match name {
        "lorentzian" => (vec![0.1, 1.0, 0.5, 0.4], grid(-1.5, 0.02, 201)),
        "lorentzian_multi2" => (vec![0.1, 1.0, 0.5, 0.4, 0.7, -0.5, 0.5], grid(-2.0, 0.02, 201)),
        "exp_decay" => (vec![1.0, 111.0, 0.1], grid(0.0, 5.0, 200)),
        "saturation" => (vec![3.5, 2.0], grid(0.25, 0.25, 80)),
        "damped_ramsey" => (vec![1.0, 20.0, 0.3, 30.0], grid(0.0, 0.5, 121)),
        "echo_envelope" => (vec![1.0, 1140.0], grid(0.0, 25.0, 120)),
        "serrodyne_ramsey" => (vec![1.0, 20.0, 30.0], grid(0.0, 0.5, 121)),
        "gaussian_peak" => (vec![1.0, 0.5, 0.3, 0.05], grid(-1.0, 0.01, 301)),
        "linear" => (vec![-7.4e-3, 2.6], grid(20.0, 10.0, 13)),
        "proportional" => (vec![0.5], grid(1.0, 1.0, 20)),
        other => panic!("no case for {other}"),
    }
}

fn names() -> Vec<String> {
    MODEL_NAMES.iter().map(|n| n.replace("<N>", "2")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_data_are_recovered_from_perturbed_starts(
        which in 0usize..MODEL_NAMES.len(),
        factors in prop::collection::vec(0.8..1.2f64, 7),
    ) {
        let name = &names()[which];
        let model = model_by_name(name).unwrap();
        let (truth, x) = case(name);
        let y = model.eval(&x, &truth).unwrap();
        let start: Vec<f64> = truth.iter().zip(&factors).map(|(t, f)| t * f).collect();
        let r = fit(&model, &x, &y, None, &start, &FitOptions::default()).unwrap();
        prop_assert!(r.converged());
        prop_assert!(r.residual_norm <= 1e-9, "{name}: residual {}", r.residual_norm);
        for (v, t) in r.params.iter().zip(&truth) {
            prop_assert!((v - t).abs() <= 1e-6 * t.abs(), "{name}: {v} vs {t}");
        }
    }

    #[test]
    fn shape_errors_ignore_the_y_scale(k in 0.01..100.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.03).unwrap();
        // (model, indices that scale with y)
        for (name, linear) in [("damped_ramsey", vec![0]), ("lorentzian", vec![0, 1]), ("exp_decay", vec![0, 2])] {
            let model = model_by_name(name).unwrap();
            let (truth, x) = case(name);
            let y: Vec<f64> = model.eval(&x, &truth).unwrap().iter().map(|v| v + noise.sample(&mut rng)).collect();
            let a = fit(&model, &x, &y, None, &truth, &FitOptions::default()).unwrap();
            let scaled_y: Vec<f64> = y.iter().map(|v| v * k).collect();
            let scaled_start: Vec<f64> =
                truth.iter().enumerate().map(|(i, t)| if linear.contains(&i) { t * k } else { *t }).collect();
            let b = fit(&model, &x, &scaled_y, None, &scaled_start, &FitOptions::default()).unwrap();
            for i in 0..truth.len() {
                let expect = if linear.contains(&i) { a.stderr[i] * k } else { a.stderr[i] };
                prop_assert!(
                    (b.stderr[i] - expect).abs() <= 1e-8 * expect.abs(),
                    "{name} {}: {} vs {expect}", a.names[i], b.stderr[i]
                );
            }
        }
    }

    #[test]
    fn isolated_tone_lands_within_half_a_bin(
        n in 128usize..1024,
        dt in 0.2..2.0f64,
        position in 0.1..0.4f64,
        phase in 0.0..(2.0 * PI),
        seed in any::<u64>(),
    ) {
        let times = grid(0.0, dt, n);
        let nyquist = 1e3 / (2.0 * dt);
        let f = position * 2.0 * nyquist;
        let amplitude = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, amplitude / 10.0).unwrap();
        let values: Vec<f64> = times
            .iter()
            .map(|t| amplitude * (2.0 * PI * f * 1e-3 * t + phase).cos() + noise.sample(&mut rng))
            .collect();
        let s = fft_spectrum(&times, &values, 0.5).unwrap();
        let resolution = s.frequency_mhz[1] - s.frequency_mhz[0];
        let found = s.peaks[0].frequency_mhz;
        prop_assert!((found - f).abs() <= resolution / 2.0, "{found} vs {f} (bin {resolution})");
    }
}
