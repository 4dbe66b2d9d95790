use std::fmt;
use std::sync::Arc;

use super::ops::hermiticity_error;
use super::{CMatrix, C64};
use crate::{Error, Result};

/// Max |H − H†| accepted for the static part.
const H_HERMITIAN_TOL: f64 = 1e-12;

/// Complex time envelope c(t) multiplying a drive operator.
#[derive(Clone)]
pub enum Envelope {
    Constant(C64),
    /// Σ_k a_k · exp(−i ω_k t), ω_k in rad/ns.
    Tones(Vec<(C64, f64)>),
    Function(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl Envelope {
    pub fn function(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Envelope::Function(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, t: f64) -> C64 {
        match self {
            Envelope::Constant(c) => *c,
            Envelope::Tones(tones) => tones
                .iter()
                .map(|(a, w)| a * C64::from_polar(1.0, -w * t))
                .sum(),
            Envelope::Function(f) => f(t),
        }
    }
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Constant(c) => write!(f, "Constant({c})"),
            Envelope::Tones(t) => write!(f, "Tones({t:?})"),
            Envelope::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// H(t) = H₀ + Σ_k [c_k(t)·A_k + conj(c_k(t))·A_k†], in rad/ns (ħ = 1).
///
/// The drive terms are Hermitian by construction, so only H₀ is checked.
/// With `hold` set, every envelope is sampled at the midpoint of fixed time
/// slices and held constant across each slice.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    static_part: CMatrix,
    terms: Vec<(CMatrix, Envelope)>,
    hold: Option<(f64, f64)>,
}

impl Hamiltonian {
    pub fn new(static_part: CMatrix) -> Result<Self> {
        if static_part.nrows() != static_part.ncols() {
            return Err(Error::usage("Hamiltonian must be square"));
        }
        let err = hermiticity_error(&static_part);
        if err > H_HERMITIAN_TOL {
            return Err(Error::usage(format!("static Hamiltonian is not Hermitian (error {err:.3e})")));
        }
        Ok(Self {
            static_part,
            terms: Vec::new(),
            hold: None,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            static_part: CMatrix::zeros(dim, dim),
            terms: Vec::new(),
            hold: None,
        }
    }

    /// Adds c(t)·A + h.c.
    pub fn with_drive(mut self, operator: CMatrix, envelope: Envelope) -> Result<Self> {
        if operator.shape() != self.static_part.shape() {
            return Err(Error::usage("drive operator dimension mismatch"));
        }
        self.terms.push((operator, envelope));
        Ok(self)
    }

    /// Sample-and-hold version with slices `[t0 + k·dt, t0 + (k+1)·dt)`.
    pub fn piecewise_constant(&self, t0: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::usage("slice width must be positive"));
        }
        let mut out = self.clone();
        out.hold = Some((t0, dt));
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.static_part.nrows()
    }

    pub fn static_part(&self) -> &CMatrix {
        &self.static_part
    }

    pub fn terms(&self) -> &[(CMatrix, Envelope)] {
        &self.terms
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms
            .iter()
            .all(|(_, e)| matches!(e, Envelope::Constant(_)))
    }

    /// Time at which envelopes are evaluated for physical time `t`.
    #[inline]
    pub(crate) fn sample_time(&self, t: f64) -> f64 {
        match self.hold {
            None => t,
            Some((t0, dt)) => {
                let k = ((t - t0) / dt).floor();
                t0 + (k + 0.5) * dt
            }
        }
    }

    /// First slice boundary strictly after `t`, if sample-and-hold is active.
    pub(crate) fn next_breakpoint(&self, t: f64) -> Option<f64> {
        let (t0, dt) = self.hold?;
        let mut k = ((t - t0) / dt).floor() + 1.0;
        let mut b = t0 + k * dt;
        // guard against landing on t itself through rounding
        while b <= t + 1e-12 * dt.max(t.abs()) {
            k += 1.0;
            b = t0 + k * dt;
        }
        Some(b)
    }


    pub fn at(&self, t: f64) -> CMatrix {
        let ts = self.sample_time(t);
        let mut h = self.static_part.clone();
        for (a, env) in &self.terms {
            let c = env.at(ts);
            h += a * c + a.adjoint() * c.conj();
        }
        h
    }
}
