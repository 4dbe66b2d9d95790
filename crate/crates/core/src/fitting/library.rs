//! Fit forms used across the measurements. Times are in ns and
//! frequencies in MHz unless a model says otherwise.

use std::f64::consts::PI;

use super::engine::{FitModel, ParamSpec};
use crate::{Error, Result};

/// Sum of `peaks` Lorentzians on a constant background; each peak has an
/// amplitude, centre and full width at half maximum.
pub fn lorentzian_multi(peaks: usize) -> FitModel {
    let mut params = vec![ParamSpec::free("offset", "y")];
    for k in 1..=peaks {
        params.push(ParamSpec::free(&format!("amplitude{k}"), "y"));
        params.push(ParamSpec::free(&format!("center{k}"), "x"));
        params.push(ParamSpec::positive(&format!("fwhm{k}"), "x"));
    }
    let name = if peaks == 1 { "lorentzian".to_string() } else { format!("lorentzian_multi{peaks}") };
    FitModel::pointwise(&name, params, move |x, p| {
        let mut y = p[0];
        for k in 0..peaks {
            let (a, c, w) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
            let hw = 0.5 * w;
            y += a * hw * hw / ((x - c) * (x - c) + hw * hw);
        }
        y
    })
}

/// A·exp(−t/τ) + c.
pub fn exp_decay() -> FitModel {
    FitModel::pointwise(
        "exp_decay",
        vec![
            ParamSpec::free("amplitude", "y"),
            ParamSpec::positive("tau", "ns"),
            ParamSpec::free("offset", "y"),
        ],
        |t, p| p[0] * (-t / p[1]).exp() + p[2],
    )
}

/// r∞·(P/P_sat)/(1 + P/P_sat).
pub fn saturation() -> FitModel {
    FitModel::pointwise(
        "saturation",
        vec![ParamSpec::free("rate_max", "y"), ParamSpec::positive("p_sat", "x")],
        |x, p| {
            let s = x / p[1];
            p[0] * s / (1.0 + s)
        },
    )
}

/// A·sin(2πδτ + θ)·exp(−(τ/T2*)²) with δ in MHz and τ in ns.
pub fn damped_ramsey() -> FitModel {
    FitModel::pointwise(
        "damped_ramsey",
        vec![
            ParamSpec::free("amplitude", "y"),
            ParamSpec::free("detuning", "MHz"),
            ParamSpec::free("phase", "rad"),
            ParamSpec::positive("t2star", "ns"),
        ],
        |t, p| p[0] * (2.0 * PI * p[1] * 1e-3 * t + p[2]).sin() * (-(t / p[3]).powi(2)).exp(),
    )
}

/// A·exp(−(T/T2HE)²).
pub fn echo_envelope() -> FitModel {
    FitModel::pointwise(
        "echo_envelope",
        vec![ParamSpec::free("amplitude", "y"), ParamSpec::positive("t2_echo", "ns")],
        |t, p| p[0] * (-(t / p[1]).powi(2)).exp(),
    )
}

/// A·sin(2πfτ)·exp(−(τ/T2*)²) with f in MHz and τ in ns.
pub fn serrodyne_ramsey() -> FitModel {
    FitModel::pointwise(
        "serrodyne_ramsey",
        vec![
            ParamSpec::free("amplitude", "y"),
            ParamSpec::free("frequency", "MHz"),
            ParamSpec::positive("t2star", "ns"),
        ],
        |t, p| p[0] * (2.0 * PI * p[1] * 1e-3 * t).sin() * (-(t / p[2]).powi(2)).exp(),
    )
}

/// A·exp(−(x − x0)²/(2σ²)) + c.
pub fn gaussian_peak() -> FitModel {
    FitModel::pointwise(
        "gaussian_peak",
        vec![
            ParamSpec::free("amplitude", "y"),
            ParamSpec::free("center", "x"),
            ParamSpec::positive("sigma", "x"),
            ParamSpec::free("offset", "y"),
        ],
        |x, p| p[0] * (-(x - p[1]).powi(2) / (2.0 * p[2] * p[2])).exp() + p[3],
    )
}

/// a·x + b.
pub fn linear() -> FitModel {
    FitModel::pointwise(
        "linear",
        vec![ParamSpec::free("slope", "y/x"), ParamSpec::free("intercept", "y")],
        |x, p| p[0] * x + p[1],
    )
}

/// a·x, a line through the origin.
pub fn proportional() -> FitModel {
    FitModel::pointwise("proportional", vec![ParamSpec::free("slope", "y/x")], |x, p| p[0] * x)
}

pub const MODEL_NAMES: [&str; 10] = [
    "lorentzian",
    "lorentzian_multi<N>",
    "exp_decay",
    "saturation",
    "damped_ramsey",
    "echo_envelope",
    "serrodyne_ramsey",
    "gaussian_peak",
    "linear",
    "proportional",
];

/// Looks up a library model by name; `lorentzian_multiN` selects N peaks.
pub fn model_by_name(name: &str) -> Result<FitModel> {
    Ok(match name {
        "lorentzian" => lorentzian_multi(1),
        "exp_decay" => exp_decay(),
        "saturation" => saturation(),
        "damped_ramsey" => damped_ramsey(),
        "echo_envelope" => echo_envelope(),
        "serrodyne_ramsey" => serrodyne_ramsey(),
        "gaussian_peak" => gaussian_peak(),
        "linear" => linear(),
        "proportional" => proportional(),
        other => {
            let n = other
                .strip_prefix("lorentzian_multi")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::usage(format!("unknown fit model '{other}'")))?;
            lorentzian_multi(n)
        }
    })
}
