use serde::Serialize;

use crate::error::{Error, Result};

/// Nonlinearity regime as a function of (N, p).
///
/// The boundaries are p = 1 + 4/N (mass-critical) and p = 3 + 4/N
/// (dilation-critical for the quasi-linear energy). For N >= 3 the
/// admissible window is additionally capped by p < (3N+2)/(N-2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// p < 1 + 4/N: m(c) < 0 with a minimizer for every c.
    Subcritical,
    /// p = 1 + 4/N.
    MassCritical,
    /// 1 + 4/N < p < 3 + 4/N: the two-critical-point window.
    Intermediate,
    /// p = 3 + 4/N: m(c) = 0 below c_N, unbounded above.
    DilationCritical,
    /// p > 3 + 4/N: m(c) = -infinity for all c.
    Supercritical,
}

const REGIME_EPS: f64 = 1e-9;

/// Problem instance: dimension, nonlinearity exponent, target mass and
/// perturbation weight.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Params {
    pub dim: usize,
    pub p: f64,
    pub c: f64,
    pub mu: f64,
}

impl Params {
    pub fn new(dim: usize, p: f64, c: f64, mu: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidConfig("dimension N must be >= 1".into()));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidConfig(format!("exponent p must be > 1, got {p}")));
        }
        if dim >= 3 {
            let p_max = (3.0 * dim as f64 + 2.0) / (dim as f64 - 2.0);
            if p >= p_max {
                return Err(Error::InvalidConfig(format!(
                    "p = {p} is at or beyond the critical exponent (3N+2)/(N-2) = {p_max} for N = {dim}"
                )));
            }
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidConfig(format!("mass c must be > 0, got {c}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidConfig(format!("perturbation mu must be >= 0, got {mu}")));
        }
        Ok(Self { dim, p, c, mu })
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn with_c(&self, c: f64) -> Self {
        Self { c, ..*self }
    }

    /// Mass-critical exponent 1 + 4/N.
    pub fn p_mass_critical(dim: usize) -> f64 {
        1.0 + 4.0 / dim as f64
    }

    /// Dilation-critical exponent 3 + 4/N.
    pub fn p_dilation_critical(dim: usize) -> f64 {
        3.0 + 4.0 / dim as f64
    }

    pub fn regime(&self) -> Regime {
        regime_of(self.dim, self.p)
    }
}

/// Pure regime classification of (N, p).
pub fn regime_of(dim: usize, p: f64) -> Regime {
    let lo = Params::p_mass_critical(dim);
    let hi = Params::p_dilation_critical(dim);
    if (p - lo).abs() <= REGIME_EPS * lo {
        Regime::MassCritical
    } else if (p - hi).abs() <= REGIME_EPS * hi {
        Regime::DilationCritical
    } else if p < lo {
        Regime::Subcritical
    } else if p < hi {
        Regime::Intermediate
    } else {
        Regime::Supercritical
    }
}

/// True when the nonexistence lemmas cover the pair (N, p): any nontrivial
/// solution must have lambda < 0. N <= 4 always; N >= 5 only up to the
/// Sobolev-critical exponent (N+2)/(N-2).
pub fn lambda_negative_covered(dim: usize, p: f64) -> bool {
    if dim <= 4 {
        true
    } else {
        p <= (dim as f64 + 2.0) / (dim as f64 - 2.0) + REGIME_EPS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_boundaries() {
        assert_eq!(regime_of(1, 2.0), Regime::Subcritical);
        assert_eq!(regime_of(1, 5.0), Regime::MassCritical);
        assert_eq!(regime_of(1, 6.0), Regime::Intermediate);
        assert_eq!(regime_of(1, 7.0), Regime::DilationCritical);
        assert_eq!(regime_of(1, 8.0), Regime::Supercritical);
        assert_eq!(regime_of(3, 3.0), Regime::Intermediate);
        assert_eq!(regime_of(3, 5.0), Regime::Supercritical);
        assert_eq!(regime_of(2, 3.0), Regime::MassCritical);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Params::new(0, 2.0, 1.0, 0.0).is_err());
        assert!(Params::new(3, 1.0, 1.0, 0.0).is_err());
        assert!(Params::new(3, 11.0, 1.0, 0.0).is_err()); // (3N+2)/(N-2) = 11
        assert!(Params::new(3, 3.0, 0.0, 0.0).is_err());
        assert!(Params::new(3, 3.0, 1.0, -0.1).is_err());
        assert!(Params::new(3, 3.0, 1.0, 0.1).is_ok());
    }

    #[test]
    fn nonexistence_coverage() {
        assert!(lambda_negative_covered(3, 4.0));
        assert!(lambda_negative_covered(4, 4.9));
        assert!(lambda_negative_covered(5, 7.0 / 3.0));
        assert!(!lambda_negative_covered(5, 3.0));
    }
}
