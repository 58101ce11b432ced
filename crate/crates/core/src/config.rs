//! Modulus and tolerance configuration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex;

/// The elliptic modulus. `tau` is the primitive; `q = e^{2πiτ}` and all of
/// its fractional powers are derived from it so that the branch of `q^{1/m}`
/// is fixed once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusConfig {
    tau: Complex,
}

impl ModulusConfig {
    pub fn new(tau: Complex) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::InvalidConfig("tau must be finite".into()));
        }
        if tau.im <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "Im tau must be positive, got {}",
                tau.im
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> Complex {
        self.tau
    }

    pub fn q(&self) -> Complex {
        self.q_pow(1.0)
    }

    /// `q^r = e^{2πiτr}` for real `r`.
    pub fn q_pow(&self, r: f64) -> Complex {
        (Complex::new(0.0, 2.0 * PI) * self.tau * r).exp()
    }

    /// `|q|`.
    pub fn q_abs(&self) -> f64 {
        (-2.0 * PI * self.tau.im).exp()
    }

    /// `e^{2πi(τ·t_tau + t_one)}`.
    pub fn point_value(&self, t_tau: f64, t_one: f64) -> Complex {
        (Complex::new(0.0, 2.0 * PI) * (self.tau * t_tau + t_one)).exp()
    }

    /// Writes a nonzero value as `e^{2πi(τ·t + t')}` and returns `(t, t')`,
    /// with `t'` taken from the principal branch of the logarithm.
    pub fn exponents_of(&self, value: Complex) -> (f64, f64) {
        let w = value.ln() / Complex::new(0.0, 2.0 * PI);
        let t = w.im / self.tau.im;
        let t1 = w.re - t * self.tau.re;
        (t, t1)
    }
}

impl Default for ModulusConfig {
    fn default() -> Self {
        Self {
            tau: Complex::new(0.3, 1.1),
        }
    }
}

/// `e^{2πi·r}`.
pub fn unit_pow(r: f64) -> Complex {
    Complex::new(0.0, 2.0 * PI * r).exp()
}

/// Numerical thresholds shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative distance under which two eigenvalues are the same cluster.
    pub eps_eig: f64,
    /// Relative singular-value threshold for rank decisions and
    /// reconstruction residuals.
    pub eps_rank: f64,
    /// Relative tolerance for recognizing resonances `λ = e^{2πi(τr + r')}`.
    pub eps_res: f64,
    /// Largest denominator accepted by rational recognition.
    pub d_max: u32,
    /// Largest `|r|` accepted for a `τ`-exponent.
    pub l_max: u32,
    /// Default truncation order, in exponent units.
    pub trunc: u32,
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eps_eig, self.eps_rank, self.eps_res]
            .iter()
            .all(|e| e.is_finite() && *e > 0.0);
        if !positive {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.d_max == 0 || self.l_max == 0 || self.trunc == 0 {
            return Err(Error::InvalidConfig(
                "d_max, l_max and trunc must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_eig: 1e-3,
            eps_rank: 1e-9,
            eps_res: 1e-6,
            d_max: 24,
            l_max: 8,
            trunc: 32,
        }
    }
}
