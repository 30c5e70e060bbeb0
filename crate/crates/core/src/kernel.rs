//! Radial kernel profiles.
//!
//! A kernel is stored as a function of the squared distance `s = |r|^2`
//! so that the Gaussian family stays smooth at coincident points, which
//! the first-order (jet) Gram blocks need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `exp(-s / (2 sigma^2))`
    Gaussian,
    /// `exp(-sqrt(s) / alpha)`, the Green's function of `1 - alpha^2 Laplacian` in 1D.
    Exponential,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    pub family: KernelFamily,
    pub length_scale: f64,
}

impl RadialKernel {
    pub fn new(family: KernelFamily, length_scale: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::Domain(format!(
                "length_scale must be positive and finite, got {length_scale}"
            )));
        }
        Ok(Self {
            family,
            length_scale,
        })
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(KernelFamily::Gaussian, sigma).expect("invalid Gaussian width")
    }

    pub fn exponential(alpha: f64) -> Self {
        Self::new(KernelFamily::Exponential, alpha).expect("invalid exponential length")
    }

    pub fn is_smooth(&self) -> bool {
        self.family == KernelFamily::Gaussian
    }

    /// Errors unless the kernel supports first-order (jet) interpolation.
    pub fn require_smooth(&self) -> Result<()> {
        if self.is_smooth() {
            Ok(())
        } else {
            Err(Error::InsufficientRegularity(self.family.name()))
        }
    }

    fn check(s: f64) -> Result<()> {
        if s.is_nan() || s < 0.0 {
            Err(Error::Domain(format!(
                "squared distance must be non-negative, got {s}"
            )))
        } else {
            Ok(())
        }
    }

    fn check_diff(&self, s: f64) -> Result<()> {
        Self::check(s)?;
        if self.family == KernelFamily::Exponential && s == 0.0 {
            return Err(Error::NotDifferentiable);
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(self.value(s))
    }

    pub fn d1(&self, s: f64) -> Result<f64> {
        self.check_diff(s)?;
        Ok(self.value_d1(s))
    }

    pub fn d2(&self, s: f64) -> Result<f64> {
        self.check_diff(s)?;
        Ok(self.value_d2(s))
    }

    pub fn d3(&self, s: f64) -> Result<f64> {
        self.check_diff(s)?;
        Ok(self.value_d3(s))
    }

    // Unchecked evaluations used in the pairwise loops, where `s` comes
    // from a squared norm and the family was validated up front.

    #[inline]
    pub(crate) fn value(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-s / (2.0 * self.length_scale.powi(2))).exp(),
            KernelFamily::Exponential => (-s.sqrt() / self.length_scale).exp(),
        }
    }

    /// `phi(0) - phi(s)`, accurate for small `s`.
    #[inline]
    pub(crate) fn deficit(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => -(-s / (2.0 * self.length_scale.powi(2))).exp_m1(),
            KernelFamily::Exponential => -(-s.sqrt() / self.length_scale).exp_m1(),
        }
    }

    #[inline]
    pub(crate) fn value_d1(&self, s: f64) -> f64 {
        let l = self.length_scale;
        match self.family {
            KernelFamily::Gaussian => -self.value(s) / (2.0 * l * l),
            KernelFamily::Exponential => {
                let r = s.sqrt();
                -(-r / l).exp() / (2.0 * l * r)
            }
        }
    }

    #[inline]
    pub(crate) fn value_d2(&self, s: f64) -> f64 {
        let l = self.length_scale;
        match self.family {
            KernelFamily::Gaussian => self.value(s) / (4.0 * l.powi(4)),
            KernelFamily::Exponential => {
                let r = s.sqrt();
                (-r / l).exp() * (r + l) / (4.0 * l * l * r * r * r)
            }
        }
    }

    #[inline]
    pub(crate) fn value_d3(&self, s: f64) -> f64 {
        let l = self.length_scale;
        match self.family {
            KernelFamily::Gaussian => -self.value(s) / (8.0 * l.powi(6)),
            KernelFamily::Exponential => {
                let r = s.sqrt();
                -(-r / l).exp() * (r * r + 3.0 * l * r + 3.0 * l * l)
                    / (8.0 * l.powi(3) * r.powi(5))
            }
        }
    }

    /// `(phi, phi', phi'', phi''')` at once for the Gaussian family.
    #[inline]
    pub(crate) fn gaussian_derivs(&self, s: f64) -> [f64; 4] {
        let c = 1.0 / (2.0 * self.length_scale.powi(2));
        let v = (-s * c).exp();
        [v, -c * v, c * c * v, -c * c * c * v]
    }
}
