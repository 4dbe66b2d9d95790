//! Dormand–Prince 5(4) with Hairer's continuous extension, for complex
//! state vectors.

use super::C64;
use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Counters accumulated over one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step; `None` means the interval length.
    pub max_step: Option<f64>,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 50_000_000,
            max_step: None,
        }
    }
}

struct Work {
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    cont: [Vec<C64>; 5],
}

impl Work {
    fn new(m: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); m];
        Self {
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            cont: [z(), z(), z(), z(), z()],
        }
    }
}

impl Dopri5 {
    /// Integrates y' = f(t, y) from `t0` to the last entry of `t_out`,
    /// calling `emit(index, y)` at every output time. Output times must be
    /// non-decreasing and not before `t0`.
    pub fn integrate<F, E>(&self, f: F, t0: f64, y: &mut [C64], t_out: &[f64], mut emit: E) -> Result<StepStats>
    where
        F: Fn(f64, &[C64], &mut [C64]),
        E: FnMut(usize, &[C64]) -> Result<()>,
    {
        let m = y.len();
        let mut stats = StepStats::default();
        let mut next_out = 0;
        while next_out < t_out.len() && t_out[next_out] <= t0 {
            if t_out[next_out] < t0 {
                return Err(Error::usage("output time precedes the initial time"));
            }
            emit(next_out, y)?;
            next_out += 1;
        }
        if next_out == t_out.len() {
            return Ok(stats);
        }
        let t_end = *t_out.last().unwrap();
        let span = t_end - t0;
        let h_max = self.max_step.unwrap_or(span).min(span);

        let mut w = Work::new(m);
        f(t0, y, &mut w.k[0]);
        stats.evaluations += 1;
        let mut h = self.initial_step(&f, t0, y, &mut w, h_max);
        stats.evaluations += 1;
        let mut t = t0;
        let mut fac_old = 1e-4_f64;
        let mut last_rejected = false;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::Numerical {
                    time: t,
                    reason: format!("step budget of {} exhausted", self.max_steps),
                });
            }
            let mut last = false;
            if t + 1.01 * h >= t_end {
                h = t_end - t;
                last = true;
            }
            if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(1e-3) {
                return Err(Error::Numerical {
                    time: t,
                    reason: format!("step size underflow (h = {h:.3e} ns)"),
                });
            }
            let err = self.step(&f, t, h, y, &mut w);
            stats.evaluations += 6;
            if !err.is_finite() {
                stats.rejected += 1;
                h *= FAC_MIN;
                last_rejected = true;
                continue;
            }
            let fac11 = err.powf(0.2 - BETA * 0.75);
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let h_new = h / fac;
            if err <= 1.0 {
                fac_old = err.max(1e-4);
                stats.accepted += 1;
                // dense output
                let t_new = if last { t_end } else { t + h };
                self.prepare_dense(h, y, &mut w);
                while next_out < t_out.len() && t_out[next_out] <= t_new {
                    let theta = if h > 0.0 { (t_out[next_out] - t) / h } else { 1.0 };
                    if theta >= 1.0 {
                        emit(next_out, &w.ynew)?;
                    } else {
                        interpolate(&w.cont, theta, &mut w.ytmp);
                        emit(next_out, &w.ytmp)?;
                    }
                    next_out += 1;
                }
                // FSAL
                w.k.swap(0, 6);
                y.copy_from_slice(&w.ynew);
                t = t_new;
                if last || next_out == t_out.len() {
                    return Ok(stats);
                }
                let mut hn = h_new.min(h_max);
                if last_rejected {
                    hn = hn.min(h);
                }
                h = hn;
                last_rejected = false;
            } else {
                stats.rejected += 1;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
            }
        }
    }

    fn initial_step<F>(&self, f: &F, t0: f64, y: &[C64], w: &mut Work, h_max: f64) -> f64
    where
        F: Fn(f64, &[C64], &mut [C64]),
    {
        let (mut dnf, mut dny) = (0.0, 0.0);
        let mut count = 0.0;
        for (yi, fi) in y.iter().zip(&w.k[0]) {
            for (a, b) in [(yi.re, fi.re), (yi.im, fi.im)] {
                let sk = self.atol + self.rtol * a.abs();
                dnf += (b / sk).powi(2);
                dny += (a / sk).powi(2);
                count += 1.0;
            }
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(h_max);
        for (yt, (yi, fi)) in w.ytmp.iter_mut().zip(y.iter().zip(&w.k[0])) {
            *yt = yi + fi * h;
        }
        f(t0 + h, &w.ytmp, &mut w.k[1]);
        let mut der2 = 0.0;
        for (yi, (f1, f0)) in y.iter().zip(w.k[1].iter().zip(&w.k[0])) {
            let d = (f1 - f0) / h;
            for (a, b) in [(yi.re, d.re), (yi.im, d.im)] {
                let sk = self.atol + self.rtol * a.abs();
                der2 += (b / sk).powi(2);
            }
        }
        let der2 = (der2 / count).sqrt();
        let der12 = der2.max((dnf / count).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(h_max)
    }

    /// One trial step from (t, y) with k[0] = f(t, y). Fills k[1..7] and
    /// `ynew`; returns the scaled error norm.
    fn step<F>(&self, f: &F, t: f64, h: f64, y: &[C64], w: &mut Work) -> f64
    where
        F: Fn(f64, &[C64], &mut [C64]),
    {
        let m = y.len();
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($ai:expr, $ki:expr)),*]) => {{
                for i in 0..m {
                    let mut acc = y[i];
                    $( acc += w.k[$ki][i] * (h * $ai); )*
                    w.ytmp[i] = acc;
                }
                let (head, tail) = w.k.split_at_mut($dst);
                let _ = head;
                f(t + $c * h, &w.ytmp, &mut tail[0]);
            }};
        }
        stage!(1, C2, [(A21, 0)]);
        stage!(2, C3, [(A31, 0), (A32, 1)]);
        stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
        stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
        stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
        for i in 0..m {
            w.ynew[i] = y[i]
                + (w.k[0][i] * A71 + w.k[2][i] * A73 + w.k[3][i] * A74 + w.k[4][i] * A75 + w.k[5][i] * A76) * h;
        }
        let (head, tail) = w.k.split_at_mut(6);
        let _ = head;
        f(t + h, &w.ynew, &mut tail[0]);

        let mut sum = 0.0;
        for i in 0..m {
            let e = (w.k[0][i] * E1
                + w.k[2][i] * E3
                + w.k[3][i] * E4
                + w.k[4][i] * E5
                + w.k[5][i] * E6
                + w.k[6][i] * E7)
                * h;
            let sk_re = self.atol + self.rtol * y[i].re.abs().max(w.ynew[i].re.abs());
            let sk_im = self.atol + self.rtol * y[i].im.abs().max(w.ynew[i].im.abs());
            sum += (e.re / sk_re).powi(2) + (e.im / sk_im).powi(2);
        }
        (sum / (2 * m) as f64).sqrt()
    }

    fn prepare_dense(&self, h: f64, y: &[C64], w: &mut Work) {
        for i in 0..y.len() {
            let ydiff = w.ynew[i] - y[i];
            let bspl = w.k[0][i] * h - ydiff;
            w.cont[0][i] = y[i];
            w.cont[1][i] = ydiff;
            w.cont[2][i] = bspl;
            w.cont[3][i] = ydiff - w.k[6][i] * h - bspl;
            w.cont[4][i] = (w.k[0][i] * D1
                + w.k[2][i] * D3
                + w.k[3][i] * D4
                + w.k[4][i] * D5
                + w.k[5][i] * D6
                + w.k[6][i] * D7)
                * h;
        }
    }
}

fn interpolate(cont: &[Vec<C64>; 5], theta: f64, out: &mut [C64]) {
    let theta1 = 1.0 - theta;
    for i in 0..out.len() {
        out[i] = cont[0][i]
            + (cont[1][i] + (cont[2][i] + (cont[3][i] + cont[4][i] * theta1) * theta) * theta1) * theta;
    }
}
