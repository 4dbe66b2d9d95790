//! Bounded Levenberg–Marquardt least squares with forward-difference
//! Jacobians, and a Nelder–Mead simplex for expensive residuals.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::units::compensated_sum;
use crate::{Error, Result};

type BatchFn = dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    pub unit: String,
    pub lower: f64,
    pub upper: f64,
}

impl ParamSpec {
    pub fn free(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn positive(name: &str, unit: &str) -> Self {
        Self {
            lower: f64::MIN_POSITIVE,
            ..Self::free(name, unit)
        }
    }

    pub fn bounded(name: &str, unit: &str, lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            ..Self::free(name, unit)
        }
    }
}

/// A model y = f(x; p). The function is evaluated on the whole abscissa at
/// once so that master-equation models can share work between points.
#[derive(Clone)]
pub struct FitModel {
    pub name: String,
    pub params: Vec<ParamSpec>,
    func: Arc<BatchFn>,
}

impl fmt::Debug for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FitModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl FitModel {
    /// Model from a pointwise function.
    pub fn pointwise(
        name: &str,
        params: Vec<ParamSpec>,
        f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::batch(name, params, move |xs, p| Ok(xs.iter().map(|&x| f(x, p)).collect()))
    }

    pub fn batch(
        name: &str,
        params: Vec<ParamSpec>,
        f: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params,
            func: Arc::new(f),
        }
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn eval(&self, xs: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.params.len() {
            return Err(Error::usage(format!(
                "model {} takes {} parameters, got {}",
                self.name,
                self.params.len(),
                p.len()
            )));
        }
        let y = (self.func)(xs, p)?;
        if y.len() != xs.len() {
            return Err(Error::usage("model returned the wrong number of values"));
        }
        Ok(y)
    }

    fn project(&self, p: &mut [f64]) {
        for (v, s) in p.iter_mut().zip(&self.params) {
            *v = v.clamp(s.lower, s.upper);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative change in χ² treated as converged.
    pub ftol: f64,
    /// Relative parameter step treated as converged.
    pub xtol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-14,
            xtol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// One standard error, scaled by the reduced χ².
    pub stderr: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Weighted χ² at the optimum.
    pub chi2: f64,
    pub reduced_chi2: f64,
    /// √χ².
    pub residual_norm: f64,
    pub status: FitStatus,
    pub iterations: usize,
    /// Parameters along directions the data do not constrain.
    pub unidentifiable: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.params[i], self.stderr[i]))
    }

    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    /// `name value stderr` per line.
    pub fn to_record(&self) -> String {
        let mut s = format!("# model {}\n# status {:?}\n# iterations {}\n# chi2 {:e}\n", self.model, self.status, self.iterations, self.chi2);
        for ((n, v), e) in self.names.iter().zip(&self.params).zip(&self.stderr) {
            s.push_str(&format!("{n} {v:.10e} {e:.4e}\n"));
        }
        for n in &self.unidentifiable {
            s.push_str(&format!("# unidentifiable {n}\n"));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}

fn residuals(model: &FitModel, x: &[f64], y: &[f64], w: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let f = model.eval(x, p)?;
    let r: Vec<f64> = f.iter().zip(y).zip(w).map(|((f, y), w)| (y - f) * w).collect();
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("model {} is not finite at {p:?}", model.name)));
    }
    Ok(r)
}

fn sum_sq(r: &[f64]) -> f64 {
    compensated_sum(r.iter().map(|v| v * v))
}

/// Forward differences, or central differences once the forward-difference
/// iteration has stalled (the fixed point of Gauss–Newton moves with any
/// error in the Jacobian).
fn jacobian(model: &FitModel, x: &[f64], w: &[f64], p: &[f64], f0: &[f64], central: bool) -> Result<DMatrix<f64>> {
    let (n, m) = (x.len(), p.len());
    let mut jac = DMatrix::zeros(n, m);
    for k in 0..m {
        let spec = &model.params[k];
        let h = (1e-6 * p[k].abs()).max(1e-9);
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        if central && p[k] - h >= spec.lower && p[k] + h <= spec.upper {
            hi[k] += h;
            lo[k] -= h;
            let (f1, f2) = (model.eval(x, &hi)?, model.eval(x, &lo)?);
            let span = hi[k] - lo[k];
            for i in 0..n {
                jac[(i, k)] = (f1[i] - f2[i]) / span * w[i];
            }
            continue;
        }
        if p[k] + h > spec.upper {
            hi[k] -= h;
        } else {
            hi[k] += h;
        }
        let step = hi[k] - p[k];
        let f1 = model.eval(x, &hi)?;
        for i in 0..n {
            jac[(i, k)] = (f1[i] - f0[i]) / step * w[i];
        }
    }
    Ok(jac)
}

/// Weighted least-squares fit from `initial`. `yerr` gives per-point
/// standard deviations; without it all points weigh equally.
pub fn fit(model: &FitModel, x: &[f64], y: &[f64], yerr: Option<&[f64]>, initial: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let (n, m) = (x.len(), model.params.len());
    if y.len() != n || yerr.is_some_and(|e| e.len() != n) {
        return Err(Error::usage("x, y and yerr must have equal lengths"));
    }
    if initial.len() != m {
        return Err(Error::usage(format!("model {} takes {m} parameters, got {}", model.name, initial.len())));
    }
    if n < m {
        return Err(Error::usage(format!("{n} points cannot constrain {m} parameters")));
    }
    for (v, s) in initial.iter().zip(&model.params) {
        if !(*v >= s.lower && *v <= s.upper) {
            return Err(Error::usage(format!("initial {} = {v} is outside its bounds", s.name)));
        }
    }
    let w: Vec<f64> = match yerr {
        Some(e) => {
            if e.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::usage("yerr entries must be positive"));
            }
            e.iter().map(|s| 1.0 / s).collect()
        }
        None => vec![1.0; n],
    };

    let mut p = initial.to_vec();
    let mut r = residuals(model, x, y, &w, &p)?;
    let mut chi2 = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;
    let mut jac = DMatrix::zeros(n, m);
    let mut central = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let f0: Vec<f64> = r.iter().zip(y).zip(&w).map(|((r, y), w)| y - r / w).collect();
        jac = jacobian(model, x, &w, &p, &f0, central)?;
        if chi2 == 0.0 {
            status = FitStatus::Converged;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut improved = false;
        let mut small_step = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut q: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            model.project(&mut q);
            small_step = q
                .iter()
                .zip(&p)
                .all(|(a, b)| (a - b).abs() <= opts.xtol * (b.abs() + opts.xtol));
            let trial = residuals(model, x, y, &w, &q).map(|r| (sum_sq(&r), r));
            match trial {
                // χ² cannot resolve the last few ulps of a parameter, so the
                // polishing phase accepts steps within rounding of the optimum
                Ok((c, rq)) if c <= chi2 || (central && c <= chi2 * (1.0 + 16.0 * f64::EPSILON)) => {
                    let rel = ((chi2 - c) / chi2.max(f64::MIN_POSITIVE)).max(0.0);
                    p = q;
                    r = rq;
                    chi2 = c;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    if rel <= opts.ftol {
                        small_step = true;
                    }
                    break;
                }
                _ => {
                    if small_step {
                        break;
                    }
                    lambda *= 10.0;
                }
            }
        }
        if !improved || small_step {
            if !central {
                central = true;
                lambda = 1e-3;
                continue;
            }
            status = FitStatus::Converged;
            if improved {
                let f0: Vec<f64> = r.iter().zip(y).zip(&w).map(|((r, y), w)| y - r / w).collect();
                jac = jacobian(model, x, &w, &p, &f0, true)?;
            }
            break;
        }
    }
    Ok(finish(model, &p, &jac, chi2, n, status, iterations))
}

fn finish(model: &FitModel, p: &[f64], jac: &DMatrix<f64>, chi2: f64, n: usize, status: FitStatus, iterations: usize) -> FitResult {
    let m = p.len();
    let dof = n.saturating_sub(m).max(1);
    let reduced = chi2 / dof as f64;
    // column scaling keeps the conditioning test independent of units
    let scale: Vec<f64> = (0..m).map(|k| jac.column(k).norm().max(f64::MIN_POSITIVE)).collect();
    let scaled = DMatrix::from_fn(jac.nrows(), m, |i, k| jac[(i, k)] / scale[k]);
    let svd = scaled.svd(false, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut unidentifiable = Vec::new();
    let mut cov = DMatrix::zeros(m, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let v = v_t.row(k);
        if s > tol {
            cov += v.transpose() * v / (s * s);
        } else {
            let worst = (0..m).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
            unidentifiable.push(model.params[worst].name.clone());
        }
    }
    let mut covariance = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            covariance[i][j] = cov[(i, j)] / (scale[i] * scale[j]) * reduced;
        }
    }
    for name in &unidentifiable {
        let i = model.index_of(name).unwrap();
        covariance[i][i] = f64::INFINITY;
    }
    let stderr = (0..m).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    FitResult {
        model: model.name.clone(),
        names: model.params.iter().map(|s| s.name.clone()).collect(),
        params: p.to_vec(),
        stderr,
        covariance,
        chi2,
        reduced_chi2: reduced,
        residual_norm: chi2.sqrt(),
        status,
        iterations,
        unidentifiable,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimisation of `f` from `x0` with initial simplex steps
/// `step`. Stops when the spread of simplex values falls below `ftol`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], ftol: f64, max_iterations: usize) -> Result<SimplexResult>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let m = x0.len();
    if step.len() != m || m == 0 {
        return Err(Error::usage("simplex needs one step per coordinate"));
    }
    let eval = |x: &[f64]| -> Result<f64> {
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + 1);
    simplex.push((x0.to_vec(), eval(x0)?));
    for k in 0..m {
        let mut x = x0.to_vec();
        x[k] += step[k];
        let v = eval(&x)?;
        simplex.push((x, v));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[m].1);
        if (worst - best).abs() <= ftol * (best.abs() + ftol) {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..m).map(|k| simplex[..m].iter().map(|s| s.0[k]).sum::<f64>() / m as f64).collect();
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[m].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = towards(-1.0);
        let fr = eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = towards(-2.0);
            let fe = eval(&xe)?;
            simplex[m] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[m - 1].1 {
            simplex[m] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[m].1 {
                let x = towards(-0.5);
                let v = eval(&x)?;
                (x, v)
            } else {
                let x = towards(0.5);
                let v = eval(&x)?;
                (x, v)
            };
            if fc < simplex[m].1.min(fr) {
                simplex[m] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = s.0.iter().zip(&x0).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    s.1 = eval(&s.0)?;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Ok(SimplexResult {
        x,
        value,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> FitModel {
        FitModel::pointwise(
            "line",
            vec![ParamSpec::free("slope", ""), ParamSpec::free("intercept", "")],
            |x, p| p[0] * x + p[1],
        )
    }

    #[test]
    fn fixed_point_is_kept() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x - 1.0).collect();
        let r = fit(&line(), &x, &y, None, &[2.0, -1.0], &FitOptions::default()).unwrap();
        assert_eq!(r.params, vec![2.0, -1.0]);
        assert_eq!(r.chi2, 0.0);
        assert!(r.converged());
    }

    #[test]
    fn linear_regression_matches_closed_form() {
        let x: Vec<f64> = (0..20).map(|k| 0.3 * k as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, x)| 1.7 * x + 0.2 + 0.05 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let n = x.len() as f64;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|x| x * x).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        let r = fit(&line(), &x, &y, None, &[0.0, 0.0], &FitOptions::default()).unwrap();
        assert!((r.params[0] - slope).abs() < 1e-10, "{r:?} {slope} {icpt}");
        assert!((r.params[1] - icpt).abs() < 1e-10);
        let s2 = r.chi2 / (n - 2.0);
        let se = (s2 * n / (n * sxx - sx * sx)).sqrt();
        assert!((r.stderr[0] - se).abs() < 1e-8 * se);
    }

    #[test]
    fn degenerate_parameters_are_named() {
        let m = FitModel::pointwise(
            "product",
            vec![ParamSpec::free("a", ""), ParamSpec::free("b", ""), ParamSpec::free("c", "")],
            |x, p| (p[0] + p[1]) * x + p[2],
        );
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x + 1.0).collect();
        let r = fit(&m, &x, &y, None, &[1.0, 1.0, 0.0], &FitOptions::default()).unwrap();
        assert_eq!(r.unidentifiable.len(), 1);
        assert!(r.unidentifiable[0] == "a" || r.unidentifiable[0] == "b");
    }

    #[test]
    fn rejects_bad_input() {
        let x = [0.0, 1.0, 2.0];
        assert!(fit(&line(), &x, &[1.0, 2.0], None, &[0.0, 0.0], &FitOptions::default()).is_err());
        assert!(fit(&line(), &x, &[1.0, 2.0, 3.0], None, &[0.0], &FitOptions::default()).is_err());
        let bounded = FitModel::pointwise("b", vec![ParamSpec::positive("k", "")], |x, p| p[0] * x);
        assert!(fit(&bounded, &x, &[0.0, 1.0, 2.0], None, &[-1.0], &FitOptions::default()).is_err());
    }

    #[test]
    fn simplex_finds_rosenbrock_minimum() {
        let f = |p: &[f64]| Ok((1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2));
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 1e-20, 5000).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }
}
