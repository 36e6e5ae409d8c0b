//! Symmetric alpha-stable laws: jump-measure normalisation, jump density and
//! Chambers-Mallows-Stuck sampling.

use rand::Rng;

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::special::gamma;

/// Stability index and per-axis intensities of the driving noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec<T> {
    pub alpha: T,
    pub eps_k: T,
    pub eps_s: T,
}

impl<T: Scalar> NoiseSpec<T> {
    /// Same intensity on both axes.
    pub fn isotropic(alpha: T, eps: T) -> Result<Self> {
        Self::new(alpha, eps, eps)
    }

    pub fn new(alpha: T, eps_k: T, eps_s: T) -> Result<Self> {
        let spec = Self { alpha, eps_k, eps_s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.eps_k.is_finite() && self.eps_k >= T::zero() && self.eps_s.is_finite() && self.eps_s >= T::zero()) {
            return Err(domain("noise intensities must be finite and >= 0"));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::lit(2.0) {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in (0,2), got {alpha}")))
    }
}

/// Normalisation `C_alpha` of the jump measure `C_alpha |x|^{-1-alpha} dx`.
pub fn c_alpha<T: Scalar>(alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let a = alpha.to_f64_lossy();
    let c = a * gamma((1.0 + a) / 2.0) / (2f64.powf(1.0 - a) * std::f64::consts::PI.sqrt() * gamma(1.0 - a / 2.0));
    Ok(T::lit(c))
}

/// Lévy jump density `C_alpha |x|^{-(1+alpha)}`.
pub fn jump_density<T: Scalar>(x: T, alpha: T) -> Result<T> {
    let c = c_alpha(alpha)?;
    if x == T::zero() || !x.is_finite() {
        return Err(domain("jump density is singular at x = 0"));
    }
    Ok(c * x.abs().powf(-(T::one() + alpha)))
}

/// Chambers-Mallows-Stuck transform of an angle `v` in (-pi/2, pi/2) and an
/// exponential variate `w > 0` into a standard symmetric alpha-stable value.
///
/// Odd in `v`, so negating the angle negates the result exactly.
pub fn standard_stable_from<T: Scalar>(alpha: T, v: T, w: T) -> T {
    let one = T::one();
    if alpha == one {
        return v.tan();
    }
    let inv = one / alpha;
    (alpha * v).sin() / v.cos().powf(inv) * (((one - alpha) * v).cos() / w).powf((one - alpha) * inv)
}

/// One standard symmetric alpha-stable draw (characteristic function `exp(-|u|^alpha)`).
pub fn sample_standard_stable<T: Scalar, R: Rng + ?Sized>(alpha: T, rng: &mut R) -> T {
    debug_assert!(check_alpha(alpha).is_ok());
    let half_pi = T::FRAC_PI_2();
    let v = loop {
        // open interval: reject the endpoint 0
        let u: f64 = rng.random();
        if u > 0.0 {
            break T::PI() * T::lit(u) - half_pi;
        }
    };
    if alpha == T::one() {
        return v.tan();
    }
    let w = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break -T::lit(u).ln();
        }
    };
    standard_stable_from(alpha, v, w)
}
