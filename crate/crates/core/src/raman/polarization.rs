//! Jones calculus for a half-wave/quarter-wave plate pair and the Stokes
//! parameters of the result.
//!
//! Angles are in degrees from the horizontal axis at which (HWP, QWP) =
//! (0, 0) passes horizontal light unchanged. S3 = +1 labels σ− light,
//! which a quarter-wave plate at +45° produces from horizontal input.

use num_complex::Complex64 as C64;

use crate::{Error, Result};

type Matrix2 = [[C64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: C64,
    pub v: C64,
}

impl JonesVector {
    /// Normalised Jones vector.
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::usage("Jones vector must be finite and non-zero"));
        }
        Ok(Self { h: h / n, v: v / n })
    }

    pub fn horizontal() -> Self {
        Self {
            h: C64::new(1.0, 0.0),
            v: C64::new(0.0, 0.0),
        }
    }

    /// Linear polarization at `angle_deg` from horizontal.
    pub fn linear(angle_deg: f64) -> Self {
        let a = angle_deg.to_radians();
        Self {
            h: C64::new(a.cos(), 0.0),
            v: C64::new(a.sin(), 0.0),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.h.norm_sqr() + self.v.norm_sqr()).sqrt()
    }

    fn apply(&self, m: &Matrix2) -> Self {
        Self {
            h: m[0][0] * self.h + m[0][1] * self.v,
            v: m[1][0] * self.h + m[1][1] * self.v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    /// Degree of polarization √(S1² + S2² + S3²)/S0.
    pub fn degree(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt() / self.s0
    }
}

/// Retarder with retardance `retardance` (rad) and fast axis at `angle_deg`.
pub fn waveplate(retardance: f64, angle_deg: f64) -> [[C64; 2]; 2] {
    let t = angle_deg.to_radians();
    let (c, s) = (t.cos(), t.sin());
    let e = C64::from_polar(1.0, retardance);
    let off = (C64::new(1.0, 0.0) - e) * (c * s);
    [[c * c + e * (s * s), off], [off, s * s + e * (c * c)]]
}

/// Input light through a half-wave plate and then a quarter-wave plate.
pub fn jones_through_waveplates(input: &JonesVector, hwp_deg: f64, qwp_deg: f64) -> JonesVector {
    let hwp = waveplate(std::f64::consts::PI, hwp_deg);
    let qwp = waveplate(std::f64::consts::FRAC_PI_2, qwp_deg);
    input.apply(&hwp).apply(&qwp)
}

/// Stokes parameters of a unit-norm Jones vector.
pub fn stokes(j: &JonesVector) -> StokesVector {
    let cross = j.h.conj() * j.v;
    let st = StokesVector {
        s0: j.h.norm_sqr() + j.v.norm_sqr(),
        s1: j.h.norm_sqr() - j.v.norm_sqr(),
        s2: 2.0 * cross.re,
        s3: -2.0 * cross.im,
    };
    debug_assert!((st.degree() - 1.0).abs() < 1e-9 || st.s0 == 0.0);
    st
}
