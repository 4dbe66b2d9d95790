//! Unit conventions and physical constants.
//!
//! Internal frequencies are angular, in rad/ns. Public APIs take ordinary
//! frequencies in MHz or GHz and rates quoted as rate/2π in MHz.

use std::f64::consts::PI;

/// Planck constant, J·s (exact, SI 2019).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Ordinary frequency in MHz to angular rad/ns.
#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz * 1e-3
}

/// Ordinary frequency in GHz to angular rad/ns.
#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz
}

/// Angular rad/ns to ordinary MHz.
#[inline]
pub fn angular_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI) * 1e3
}

/// Angular rad/ns to ordinary GHz.
#[inline]
pub fn angular_to_ghz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// A lifetime in ns to the corresponding angular rate in ns⁻¹.
#[inline]
pub fn lifetime_to_rate(t_ns: f64) -> f64 {
    1.0 / t_ns
}

/// Neumaier-compensated sum. Summation order is the slice order, so the
/// result is reproducible regardless of how the terms were produced.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let w = mhz_to_angular(226.8);
        assert!((angular_to_mhz(w) - 226.8).abs() < 1e-12);
        assert!((angular_to_ghz(ghz_to_angular(2.6)) - 2.6).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(terms), 2.0);
    }
}
